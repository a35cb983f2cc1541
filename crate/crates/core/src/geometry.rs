use crate::math;

/// A point in continuous pixel coordinates: `x` is the column axis (u), `y`
/// the row axis (v). Pixel `(row, col)` covers `[col, col + 1) x [row, row + 1)`
/// and has its center at `(col + 0.5, row + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn offset(self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Twice the signed area of triangle `abc` (positive when counter-clockwise
/// in a y-up frame).
#[inline]
pub fn cross(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Whether the three points are collinear relative to the squared length of
/// the longest side.
pub fn nearly_collinear(a: Point2, b: Point2, c: Point2, rel_tol: f64) -> bool {
    let longest = a.distance(b).max(b.distance(c)).max(a.distance(c));
    let scale = longest * longest;
    if scale == 0.0 {
        return true;
    }
    cross(a, b, c).abs() <= rel_tol * scale
}

/// Whether any three of the four points are collinear.
pub fn any_three_collinear(pts: &[Point2; 4], rel_tol: f64) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    TRIPLES
        .iter()
        .any(|t| nearly_collinear(pts[t[0]], pts[t[1]], pts[t[2]], rel_tol))
}

/// Corners of the axis-aligned rectangle with top-left `(x0, y0)`, in the
/// order `[top-left, top-right, bottom-left, bottom-right]`.
pub fn rect_corners(x0: f64, y0: f64, width: f64, height: f64) -> [Point2; 4] {
    [
        Point2::new(x0, y0),
        Point2::new(x0 + width, y0),
        Point2::new(x0, y0 + height),
        Point2::new(x0 + width, y0 + height),
    ]
}
