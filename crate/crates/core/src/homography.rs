//! Projective homographies, the direct linear transform, and the four-point
//! parameterization.
//!
//! Direction convention: a [`Homography`] `G` relating a reference view and an
//! offset view satisfies `alpha * p = G * p'`, i.e. it maps points `p'` of the
//! offset view onto points `p` of the reference view. Every function in this
//! module states its direction in these terms.

use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix3, Vector3, SVD};

use crate::error::{Error, Result};
use crate::geometry::{any_three_collinear, Point2};
use crate::math;

/// Relative rank threshold for the stacked DLT system.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Smallest-to-largest singular value ratio below which a matrix is singular.
const SINGULAR_TOLERANCE: f64 = 1e-12;

/// Homogeneous coordinate magnitude (relative to the matrix norm) below which a
/// point is treated as mapping to infinity.
const INFINITY_TOLERANCE: f64 = 1e-12;

/// A 3x3 projective transform, defined up to a nonzero scale factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: Matrix3<f64>,
}

impl Homography {
    /// Wraps a matrix. Rejects the zero matrix and non-finite entries.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) || m.iter().all(|v| *v == 0.0) {
            return Err(Error::SingularHomography);
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::new(Matrix3::new(
            rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0],
            rows[2][1], rows[2][2],
        ))
    }

    /// Builds from a row-major 9-element array, the manifest serialization.
    pub fn from_row_major(v: [f64; 9]) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(&v))
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    /// Pure translation `p -> p + (dx, dy)`.
    pub fn translation(dx: f64, dy: f64) -> Self {
        Self {
            m: Matrix3::new(1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0),
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.m;
        [
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)],
        ]
    }

    fn frobenius(&self) -> f64 {
        self.m.norm()
    }

    /// Canonical representative: unit Frobenius norm (the vectorized `g` has
    /// `||g||_2 = 1`) with the sign fixed so that `g22 >= 0`. When `g22` is
    /// exactly zero the first nonzero entry is made positive instead.
    pub fn normalized(&self) -> Matrix3<f64> {
        let mut n = self.m / self.frobenius();
        let pivot = if n[(2, 2)] != 0.0 {
            n[(2, 2)]
        } else {
            self.to_row_major()
                .iter()
                .copied()
                .find(|v| *v != 0.0)
                .unwrap_or(1.0)
        };
        if pivot < 0.0 {
            n = -n;
        }
        n
    }

    /// Display form with `g22 = 1`, when `g22` is not (numerically) zero.
    pub fn g22_normalized(&self) -> Option<Matrix3<f64>> {
        let g22 = self.m[(2, 2)];
        if g22.abs() <= f64::EPSILON * self.frobenius() {
            None
        } else {
            Some(self.m / g22)
        }
    }

    /// Largest absolute entry difference between the canonical forms.
    pub fn max_normalized_diff(&self, other: &Homography) -> f64 {
        (self.normalized() - other.normalized()).amax()
    }

    /// Equality up to scale.
    pub fn approx_eq(&self, other: &Homography, tol: f64) -> bool {
        self.max_normalized_diff(other) <= tol
    }

    /// Determinant of the canonical form, a scale-free singularity measure.
    pub fn normalized_determinant(&self) -> f64 {
        self.normalized().determinant()
    }

    /// Reciprocal condition number in the 2-norm.
    pub fn inverse_condition(&self) -> f64 {
        let sv = self.m.singular_values();
        let largest = sv.max();
        if largest > 0.0 {
            sv.min() / largest
        } else {
            0.0
        }
    }

    pub fn is_invertible(&self) -> bool {
        self.inverse_condition() > SINGULAR_TOLERANCE
    }

    /// Homogeneous image `G * [x, y, 1]^T`.
    pub fn apply_homogeneous(&self, p: Point2) -> [f64; 3] {
        let m = &self.m;
        [
            m[(0, 0)] * p.x + m[(0, 1)] * p.y + m[(0, 2)],
            m[(1, 0)] * p.x + m[(1, 1)] * p.y + m[(1, 2)],
            m[(2, 0)] * p.x + m[(2, 1)] * p.y + m[(2, 2)],
        ]
    }

    /// Dehomogenized `G * [x, y, 1]^T`.
    pub fn warp_point(&self, p: Point2) -> Result<Point2> {
        let [x, y, w] = self.apply_homogeneous(p);
        if !(w.abs() > INFINITY_TOLERANCE * self.frobenius()) {
            return Err(Error::PointAtInfinity);
        }
        Ok(Point2::new(x / w, y / w))
    }

    /// `compose(g1, g2)` applies `g2` first, then `g1`.
    pub fn compose(&self, inner: &Homography) -> Homography {
        // Rescale so repeated composition cannot overflow.
        let m = self.m * inner.m;
        let n = m.norm();
        if n.is_finite() && n > 0.0 {
            Homography { m: m / n }
        } else {
            Homography { m }
        }
    }

    /// Inverse via the adjugate, which keeps simple matrices (translations,
    /// integer scalings) exact.
    pub fn invert(&self) -> Result<Homography> {
        if !self.is_invertible() {
            return Err(Error::SingularHomography);
        }
        let m = &self.m;
        let (a, b, c) = (m[(0, 0)], m[(0, 1)], m[(0, 2)]);
        let (d, e, f) = (m[(1, 0)], m[(1, 1)], m[(1, 2)]);
        let (g, h, i) = (m[(2, 0)], m[(2, 1)], m[(2, 2)]);
        let adj = Matrix3::new(
            e * i - f * h,
            c * h - b * i,
            b * f - c * e,
            f * g - d * i,
            a * i - c * g,
            c * d - a * f,
            d * h - e * g,
            b * g - a * h,
            a * e - b * d,
        );
        let det = a * adj[(0, 0)] + b * adj[(1, 0)] + c * adj[(2, 0)];
        Homography::new(adj / det)
    }

    /// Euclidean homography `H = K^-1 * G * K`.
    pub fn to_euclidean(&self, k: &CameraIntrinsics) -> Homography {
        Homography {
            m: k.inverse() * self.m * k.matrix(),
        }
    }
}

/// Displacements of four reference corners, ordered
/// `[top-left, top-right, bottom-left, bottom-right]`. Corner `p_i` of the
/// reference view appears at `p_i + delta_i` in the offset view.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct FourPointHomography {
    pub deltas: [[f64; 2]; 4],
}

impl FourPointHomography {
    pub const fn new(deltas: [[f64; 2]; 4]) -> Self {
        Self { deltas }
    }

    /// The zero element, which corresponds to the identity homography.
    pub const fn zero() -> Self {
        Self {
            deltas: [[0.0; 2]; 4],
        }
    }

    /// Same displacement at every corner.
    pub const fn uniform(du: f64, dv: f64) -> Self {
        Self {
            deltas: [[du, dv]; 4],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.deltas.iter().flatten().all(|v| *v == 0.0)
    }

    /// Displaced corners `p_i + delta_i`.
    pub fn displaced(&self, corners: &[Point2; 4]) -> [Point2; 4] {
        core::array::from_fn(|i| corners[i].offset(self.deltas[i][0], self.deltas[i][1]))
    }

    pub fn max_abs_diff(&self, other: &FourPointHomography) -> f64 {
        self.deltas
            .iter()
            .flatten()
            .zip(other.deltas.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// One match: `reference` is `p`, `offset` is `p'`, and the homography being
/// estimated maps `offset` onto `reference`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Correspondence {
    pub reference: Point2,
    pub offset: Point2,
}

impl Correspondence {
    pub const fn new(reference: Point2, offset: Point2) -> Self {
        Self { reference, offset }
    }
}

pub type CorrespondenceSet = Vec<Correspondence>;

/// Pinhole intrinsics: upper-triangular with `k22 = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    k: Matrix3<f64>,
    k_inv: Matrix3<f64>,
}

impl CameraIntrinsics {
    pub fn new(k: Matrix3<f64>) -> Result<Self> {
        let lower_zero = k[(1, 0)] == 0.0 && k[(2, 0)] == 0.0 && k[(2, 1)] == 0.0;
        if !lower_zero || k[(2, 2)] != 1.0 || k.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularIntrinsics);
        }
        if k[(0, 0)].abs() < f64::EPSILON || k[(1, 1)].abs() < f64::EPSILON {
            return Err(Error::SingularIntrinsics);
        }
        let k_inv = k.try_inverse().ok_or(Error::SingularIntrinsics)?;
        Ok(Self { k, k_inv })
    }

    pub fn from_params(fx: f64, fy: f64, cx: f64, cy: f64, skew: f64) -> Result<Self> {
        Self::new(Matrix3::new(fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.k
    }

    pub fn inverse(&self) -> &Matrix3<f64> {
        &self.k_inv
    }
}

/// Options for [`solve_dlt_with`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DltOptions {
    /// Condition both point sets (centroid to origin, mean distance sqrt(2))
    /// before solving. Off by default.
    pub precondition: bool,
}

/// Direct linear transform: the `G` minimizing `||A g||_2` subject to
/// `||g||_2 = 1`, where `A` stacks two rows per correspondence. `G` maps
/// `offset` points onto `reference` points. Returned in canonical form.
pub fn solve_dlt(corr: &[Correspondence]) -> Result<Homography> {
    solve_dlt_with(corr, DltOptions::default())
}

pub fn solve_dlt_with(corr: &[Correspondence], opts: DltOptions) -> Result<Homography> {
    if corr.len() < 4 {
        return Err(Error::TooFewPoints {
            required: 4,
            got: corr.len(),
        });
    }
    if corr.len() == 4 {
        let refs: [Point2; 4] = core::array::from_fn(|i| corr[i].reference);
        let offs: [Point2; 4] = core::array::from_fn(|i| corr[i].offset);
        if any_three_collinear(&refs, 1e-10) || any_three_collinear(&offs, 1e-10) {
            return Err(Error::DegenerateConfiguration);
        }
    }

    let (t_ref, t_off) = if opts.precondition {
        (
            conditioning(corr.iter().map(|c| c.reference)),
            conditioning(corr.iter().map(|c| c.offset)),
        )
    } else {
        (Matrix3::identity(), Matrix3::identity())
    };

    let g = nullspace_vector(&design_matrix(corr, &t_ref, &t_off))?;
    let g_hat = Matrix3::from_row_slice(&g);
    let m = if opts.precondition {
        let t_ref_inv = t_ref.try_inverse().ok_or(Error::DegenerateConfiguration)?;
        t_ref_inv * g_hat * t_off
    } else {
        g_hat
    };
    let h = Homography::new(m).map_err(|_| Error::DegenerateConfiguration)?;
    if !h.is_invertible() {
        return Err(Error::DegenerateConfiguration);
    }
    Ok(Homography { m: h.normalized() })
}

fn design_matrix(corr: &[Correspondence], t_ref: &Matrix3<f64>, t_off: &Matrix3<f64>) -> DMatrix<f64> {
    let rows = (2 * corr.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    let tr = |t: &Matrix3<f64>, p: Point2| {
        (
            t[(0, 0)] * p.x + t[(0, 1)] * p.y + t[(0, 2)],
            t[(1, 0)] * p.x + t[(1, 1)] * p.y + t[(1, 2)],
        )
    };
    for (i, c) in corr.iter().enumerate() {
        let (u, v) = tr(t_ref, c.reference);
        let (up, vp) = tr(t_off, c.offset);
        let r0 = [up, vp, 1.0, 0.0, 0.0, 0.0, -up * u, -vp * u, -u];
        let r1 = [0.0, 0.0, 0.0, up, vp, 1.0, -up * v, -vp * v, -v];
        for j in 0..9 {
            a[(2 * i, j)] = r0[j];
            a[(2 * i + 1, j)] = r1[j];
        }
    }
    a
}

/// Right singular vector of the smallest singular value. Tall systems are
/// first reduced to their 9x9 triangular factor, which has the same singular
/// values and right singular vectors.
fn nullspace_vector(a: &DMatrix<f64>) -> Result<[f64; 9]> {
    let square = if a.nrows() > 9 {
        a.clone().qr().r()
    } else {
        a.clone()
    };
    let svd = SVD::try_new(square, false, true, f64::EPSILON, 0).ok_or(Error::DegenerateConfiguration)?;
    let v_t = svd.v_t.as_ref().ok_or(Error::DegenerateConfiguration)?;
    let sv = &svd.singular_values;

    let mut order: [usize; 9] = core::array::from_fn(|i| i);
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap_or(core::cmp::Ordering::Equal));
    let largest = sv[order[0]];
    let second_smallest = sv[order[7]];
    if !(largest > 0.0) || second_smallest < RANK_TOLERANCE * largest {
        return Err(Error::DegenerateConfiguration);
    }
    let row = order[8];
    Ok(core::array::from_fn(|j| v_t[(row, j)]))
}

/// Similarity that moves the centroid to the origin and scales the mean
/// distance to sqrt(2).
fn conditioning(points: impl Iterator<Item = Point2> + Clone) -> Matrix3<f64> {
    let n = points.clone().count() as f64;
    let (sx, sy) = points.clone().fold((0.0, 0.0), |(a, b), p| (a + p.x, b + p.y));
    let (cx, cy) = (sx / n, sy / n);
    let mean_dist = points.map(|p| math::hypot(p.x - cx, p.y - cy)).sum::<f64>() / n;
    let s = if mean_dist > 0.0 {
        core::f64::consts::SQRT_2 / mean_dist
    } else {
        1.0
    };
    Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0)
}

/// Homography of a four-point displacement: the unique DLT solution for
/// `offset = p_i + delta_i`, `reference = p_i`, so the result maps displaced
/// corners back onto `corners`. With exactly four points the solution is
/// built in closed form from the projective bases of both quadrilaterals,
/// in coordinates conditioned on the corners.
pub fn four_point_to_matrix(fp: &FourPointHomography, corners: &[Point2; 4]) -> Result<Homography> {
    solve_four(corners, &fp.displaced(corners))
}

/// Exact homography mapping each `offsets[i]` onto `references[i]`.
pub(crate) fn solve_four(references: &[Point2; 4], offsets: &[Point2; 4]) -> Result<Homography> {
    if any_three_collinear(references, 1e-10) || any_three_collinear(offsets, 1e-10) {
        return Err(Error::DegenerateConfiguration);
    }
    let t = conditioning(references.iter().copied());
    let to_reference = projective_basis(&references.map(|p| apply_affine(&t, p)))?;
    let to_offset = projective_basis(&offsets.map(|p| apply_affine(&t, p)))?;
    let from_offset = to_offset.try_inverse().ok_or(Error::DegenerateConfiguration)?;
    let m = similarity_inverse(&t) * to_reference * from_offset * t;
    let h = Homography::new(m).map_err(|_| Error::DegenerateConfiguration)?;
    if !h.is_invertible() {
        return Err(Error::DegenerateConfiguration);
    }
    Ok(Homography { m: h.normalized() })
}

/// The matrix sending `e1, e2, e3, (1, 1, 1)` to the four points.
fn projective_basis(q: &[Point2; 4]) -> Result<Matrix3<f64>> {
    let m = Matrix3::new(q[0].x, q[1].x, q[2].x, q[0].y, q[1].y, q[2].y, 1.0, 1.0, 1.0);
    let lambda = m
        .lu()
        .solve(&Vector3::new(q[3].x, q[3].y, 1.0))
        .ok_or(Error::DegenerateConfiguration)?;
    Ok(m * Matrix3::from_diagonal(&lambda))
}

fn apply_affine(t: &Matrix3<f64>, p: Point2) -> Point2 {
    Point2::new(
        t[(0, 0)] * p.x + t[(0, 1)] * p.y + t[(0, 2)],
        t[(1, 0)] * p.x + t[(1, 1)] * p.y + t[(1, 2)],
    )
}

/// Inverse of a [`conditioning`] similarity.
fn similarity_inverse(t: &Matrix3<f64>) -> Matrix3<f64> {
    let s = t[(0, 0)];
    Matrix3::new(1.0 / s, 0.0, -t[(0, 2)] / s, 0.0, 1.0 / s, -t[(1, 2)] / s, 0.0, 0.0, 1.0)
}

/// Inverse of [`four_point_to_matrix`]: `delta_i = G^-1 * p_i - p_i`,
/// evaluated in coordinates conditioned on the corners.
pub fn matrix_to_four_point(g: &Homography, corners: &[Point2; 4]) -> Result<FourPointHomography> {
    let t = conditioning(corners.iter().copied());
    let t_inv = similarity_inverse(&t);
    let inv = Homography::new(t * g.m * t_inv)?.invert()?;
    let mut deltas = [[0.0; 2]; 4];
    for (d, p) in deltas.iter_mut().zip(corners) {
        let q = apply_affine(&t_inv, inv.warp_point(apply_affine(&t, *p))?);
        *d = [q.x - p.x, q.y - p.y];
    }
    Ok(FourPointHomography { deltas })
}
