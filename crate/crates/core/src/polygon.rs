//! Simple polygons, projective warping of polygons, and the covers-style
//! containment pattern used to accept generated motions.
//!
//! The pattern constrains three cells of the DE-9IM intersection matrix of
//! `(outer, inner)`:
//!
//! ```text
//! [ T * * ]
//! [ * * * ]
//! [ F F * ]
//! ```
//!
//! i.e. the interiors meet, and the exterior of `outer` meets neither the
//! interior nor the boundary of `inner`. Only those three cells are computed.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{cross, Point2};
use crate::homography::Homography;
use crate::math;

/// Distance below which a point counts as lying on a polygon edge.
pub const BOUNDARY_TOLERANCE: f64 = 1e-9;

/// Minimum homogeneous coordinate (on the canonical matrix) for a vertex to be
/// considered in front of the camera.
pub const MIN_HOMOGENEOUS_W: f64 = 1e-9;

/// A closed polygon with at least three vertices and nonzero area.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

/// Axis-aligned rectangle `[x0, x0 + width] x [y0, y0 + height]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRect {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl AxisRect {
    /// Corners in four-point order `[top-left, top-right, bottom-left, bottom-right]`.
    pub fn corners(&self) -> [Point2; 4] {
        crate::geometry::rect_corners(self.x0, self.y0, self.width, self.height)
    }

    /// Integer `(x0, y0, width, height)` when every coordinate is integral.
    pub fn to_pixels(&self) -> Option<(usize, usize, usize, usize)> {
        let vals = [self.x0, self.y0, self.width, self.height];
        if vals.iter().all(|v| *v >= 0.0 && math::floor(*v) == *v && *v <= usize::MAX as f64) {
            Some((self.x0 as usize, self.y0 as usize, self.width as usize, self.height as usize))
        } else {
            None
        }
    }
}

/// Where a point lies relative to a polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Interior,
    Boundary,
    Exterior,
}

impl Polygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon("fewer than 3 vertices"));
        }
        if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::InvalidPolygon("non-finite vertex"));
        }
        let poly = Self { vertices };
        if poly.signed_area() == 0.0 {
            return Err(Error::InvalidPolygon("zero area"));
        }
        Ok(poly)
    }

    /// Rectangle with ring order `[top-left, top-right, bottom-right, bottom-left]`.
    pub fn rectangle(x0: f64, y0: f64, width: f64, height: f64) -> Result<Self> {
        Self::new(alloc::vec![
            Point2::new(x0, y0),
            Point2::new(x0 + width, y0),
            Point2::new(x0 + width, y0 + height),
            Point2::new(x0, y0 + height),
        ])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area, positive for counter-clockwise rings in a y-up frame.
    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| a.x * b.y - b.x * a.y).sum::<f64>() / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// The rectangle this polygon describes, if it is a four-vertex
    /// axis-aligned rectangle (any starting vertex, either orientation).
    pub fn as_axis_rect(&self) -> Option<AxisRect> {
        if self.vertices.len() != 4 {
            return None;
        }
        let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
        let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        let on_corner = |p: &Point2| (p.x == x0 || p.x == x1) && (p.y == y0 || p.y == y1);
        let axis_edges = self.edges().all(|(a, b)| a.x == b.x || a.y == b.y);
        if self.vertices.iter().all(on_corner) && axis_edges && x1 > x0 && y1 > y0 {
            Some(AxisRect {
                x0,
                y0,
                width: x1 - x0,
                height: y1 - y0,
            })
        } else {
            None
        }
    }

    /// No two non-adjacent edges touch and no adjacent edges fold back onto
    /// each other.
    pub fn is_simple(&self) -> bool {
        let n = self.vertices.len();
        let edges: Vec<(Point2, Point2)> = self.edges().collect();
        for i in 0..n {
            let (a, b) = edges[i];
            if a == b {
                return false;
            }
            for (j, &(c, d)) in edges.iter().enumerate().skip(i + 1) {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // Adjacent edges share a vertex; they must not overlap beyond it.
                    let shared = if j == i + 1 { b } else { a };
                    let (other_i, other_j) = if j == i + 1 { (a, d) } else { (b, c) };
                    if cross(shared, other_i, other_j).abs() <= BOUNDARY_TOLERANCE * seg_len(a, b) * seg_len(c, d)
                        && dot(sub(other_i, shared), sub(other_j, shared)) > 0.0
                    {
                        return false;
                    }
                } else if !segment_params(a, b, c, d).is_empty() {
                    return false;
                }
            }
        }
        true
    }

    /// Point location with [`BOUNDARY_TOLERANCE`] for the boundary.
    pub fn locate(&self, p: Point2) -> Location {
        if self
            .edges()
            .any(|(a, b)| point_segment_distance(p, a, b) <= BOUNDARY_TOLERANCE)
        {
            return Location::Boundary;
        }
        if winding_number(&self.vertices, p) != 0 {
            Location::Interior
        } else {
            Location::Exterior
        }
    }

    /// Whether `p` is inside the polygon or on its boundary.
    pub fn covers_point(&self, p: Point2) -> bool {
        self.locate(p) != Location::Exterior
    }
}

/// Vertex-wise projective warp; vertex order is preserved.
pub fn warp_polygon(poly: &Polygon, g: &Homography) -> Result<Polygon> {
    let vertices = poly
        .vertices
        .iter()
        .map(|p| g.warp_point(*p))
        .collect::<Result<Vec<_>>>()?;
    Polygon::new(vertices)
}

/// Like [`warp_polygon`], but returns `None` when any vertex has homogeneous
/// coordinate `w <= MIN_HOMOGENEOUS_W` under the canonical form of `g`, i.e.
/// maps onto or behind the camera plane.
pub fn warp_polygon_in_front(poly: &Polygon, g: &Homography) -> Option<Polygon> {
    let canonical = Homography::new(g.normalized()).ok()?;
    let mut out = Vec::with_capacity(poly.len());
    for p in &poly.vertices {
        let [x, y, w] = canonical.apply_homogeneous(*p);
        if !(w > MIN_HOMOGENEOUS_W) {
            return None;
        }
        out.push(Point2::new(x / w, y / w));
    }
    Polygon::new(out).ok()
}

/// One of the DE-9IM cells constrained by the containment pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternCell {
    /// interior(outer) ∩ interior(inner), required non-empty.
    InteriorInterior,
    /// exterior(outer) ∩ interior(inner), required empty.
    ExteriorInterior,
    /// exterior(outer) ∩ boundary(inner), required empty.
    ExteriorBoundary,
}

/// Result of [`check_containment_pattern`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainmentPattern {
    pub interiors_meet: bool,
    pub exterior_meets_interior: bool,
    pub exterior_meets_boundary: bool,
}

impl ContainmentPattern {
    pub fn is_satisfied(&self) -> bool {
        self.interiors_meet && !self.exterior_meets_interior && !self.exterior_meets_boundary
    }

    /// Cells that violate the pattern; empty iff the pattern is satisfied.
    pub fn failed_cells(&self) -> Vec<PatternCell> {
        let mut out = Vec::new();
        if !self.interiors_meet {
            out.push(PatternCell::InteriorInterior);
        }
        if self.exterior_meets_interior {
            out.push(PatternCell::ExteriorInterior);
        }
        if self.exterior_meets_boundary {
            out.push(PatternCell::ExteriorBoundary);
        }
        out
    }
}

/// Tests whether `outer` covers `inner` with overlapping interiors.
///
/// Each edge of `inner` is split at every point where it meets the boundary of
/// `outer`; the edge's vertices and the midpoints of the pieces are then
/// located against `outer`. Between split points a piece lies entirely on one
/// side, so this decides `boundary(inner) ⊆ closure(outer)` exactly (up to
/// the boundary tolerance). For simple polygons the exterior of `outer` is
/// connected and unbounded, so it meets `interior(inner)` iff it meets
/// `boundary(inner)`; and a covered `inner` of nonzero area always shares
/// interior with `outer`.
pub fn check_containment_pattern(outer: &Polygon, inner: &Polygon) -> Result<ContainmentPattern> {
    if !outer.is_simple() || !inner.is_simple() {
        return Err(Error::SelfIntersectingPolygon);
    }
    let inner_samples = boundary_samples(inner, outer);
    let boundary_outside = inner_samples
        .iter()
        .any(|p| outer.locate(*p) == Location::Exterior);

    let interiors_meet = if !boundary_outside {
        true
    } else {
        inner_samples
            .iter()
            .any(|p| outer.locate(*p) == Location::Interior)
            || boundary_samples(outer, inner)
                .iter()
                .any(|p| inner.locate(*p) == Location::Interior)
    };

    Ok(ContainmentPattern {
        interiors_meet,
        exterior_meets_interior: boundary_outside,
        exterior_meets_boundary: boundary_outside,
    })
}

/// Vertices of `poly` plus the midpoints of its edges after splitting them at
/// every contact with the boundary of `other`.
fn boundary_samples(poly: &Polygon, other: &Polygon) -> Vec<Point2> {
    let mut out = Vec::new();
    let mut ts = Vec::new();
    for (a, b) in poly.edges() {
        out.push(a);
        ts.clear();
        ts.push(0.0);
        ts.push(1.0);
        for (c, d) in other.edges() {
            ts.extend(segment_params(a, b, c, d));
        }
        ts.sort_by(|x, y| x.partial_cmp(y).unwrap_or(core::cmp::Ordering::Equal));
        ts.dedup();
        for w in ts.windows(2) {
            if w[1] > w[0] {
                let t = (w[0] + w[1]) / 2.0;
                out.push(Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
            }
        }
    }
    out
}

/// Parameters `t` in `[0, 1]` along `a -> b` where it meets segment `c -> d`.
/// Collinear overlaps contribute both overlap endpoints.
fn segment_params(a: Point2, b: Point2, c: Point2, d: Point2) -> Vec<f64> {
    let r = sub(b, a);
    let s = sub(d, c);
    let rr = dot(r, r);
    let mut out = Vec::new();
    if rr == 0.0 {
        return out;
    }
    let denom = r.x * s.y - r.y * s.x;
    let len_r = sqrt(rr);
    let len_s = sqrt(dot(s, s));
    let t_tol = BOUNDARY_TOLERANCE / len_r;

    if denom.abs() > 1e-12 * len_r * len_s {
        let ca = sub(c, a);
        let t = (ca.x * s.y - ca.y * s.x) / denom;
        let u = (ca.x * r.y - ca.y * r.x) / denom;
        let u_tol = if len_s > 0.0 { BOUNDARY_TOLERANCE / len_s } else { 0.0 };
        if t >= -t_tol && t <= 1.0 + t_tol && u >= -u_tol && u <= 1.0 + u_tol {
            out.push(t.clamp(0.0, 1.0));
        }
        return out;
    }
    // Parallel: only endpoints lying on the other segment matter.
    for q in [c, d] {
        if point_segment_distance(q, a, b) <= BOUNDARY_TOLERANCE {
            out.push((dot(sub(q, a), r) / rr).clamp(0.0, 1.0));
        }
    }
    for q in [a, b] {
        if point_segment_distance(q, c, d) <= BOUNDARY_TOLERANCE {
            out.push((dot(sub(q, a), r) / rr).clamp(0.0, 1.0));
        }
    }
    out
}

fn winding_number(ring: &[Point2], p: Point2) -> i32 {
    let n = ring.len();
    let mut wn = 0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if a.y <= p.y {
            if b.y > p.y && cross(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && cross(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

pub(crate) fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    p.distance(Point2::new(a.x + t * ab.x, a.y + t * ab.y))
}

#[inline]
fn sub(a: Point2, b: Point2) -> Point2 {
    Point2::new(a.x - b.x, a.y - b.y)
}

#[inline]
fn dot(a: Point2, b: Point2) -> f64 {
    a.x * b.x + a.y * b.y
}

#[inline]
fn seg_len(a: Point2, b: Point2) -> f64 {
    a.distance(b)
}

#[inline]
fn sqrt(x: f64) -> f64 {
    crate::math::sqrt(x)
}
