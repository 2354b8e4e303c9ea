//! Planar angle and polyline primitives.
//!
//! Global angles live in `[0, 2π)` and are measured counterclockwise from the
//! +x axis. Relative angles live in `(−π, π]`; positive means counterclockwise,
//! i.e. to the left of the current heading.

use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum distance between consecutive polyline vertices, in meters.
pub const COINCIDENT_EPS: f64 = 1e-6;

/// Turns at or below this angle (radians) count as collinear when resampling.
const COLLINEAR_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("degenerate direction: points coincide")]
    Coincident,
    #[error("polyline needs at least one point")]
    EmptyPolyline,
    #[error("polyline vertices {0} and {1} are closer than {COINCIDENT_EPS} m")]
    DuplicateVertex(usize, usize),
    #[error("index range {i}..={j} invalid for polyline of {len} points")]
    IndexOutOfRange { i: usize, j: usize, len: usize },
    #[error("spacing must be positive and finite, got {0}")]
    BadSpacing(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn distance_squared(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    /// Point reached by travelling `dist` along global bearing `angle`.
    pub fn offset(&self, angle: f64, dist: f64) -> Point2 {
        Point2::new(self.x + dist * angle.cos(), self.y + dist * angle.sin())
    }

    pub fn lerp(&self, other: &Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3})", self.x, self.y)
    }
}

/// Bearing in the global frame, `0 ≤ value < 2π`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GlobalAngle(f64);

impl GlobalAngle {
    pub fn new(raw: f64) -> Result<Self, GeometryError> {
        normalize_global(raw)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Rotate by a relative angle, wrapping back into `[0, 2π)`.
    pub fn rotate(self, by: RelativeAngle) -> GlobalAngle {
        wrap_global(self.0 + by.0)
    }
}

/// Angle relative to the current heading, `−π < value ≤ π`, positive = left.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelativeAngle(f64);

impl RelativeAngle {
    pub fn new(raw: f64) -> Result<Self, GeometryError> {
        if !raw.is_finite() {
            return Err(GeometryError::NonFinite(raw));
        }
        Ok(wrap_relative(raw))
    }

    pub fn from_degrees(deg: f64) -> Result<Self, GeometryError> {
        Self::new(deg.to_radians())
    }

    pub const ZERO: RelativeAngle = RelativeAngle(0.0);

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn abs(self) -> f64 {
        self.0.abs()
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }
}

fn wrap_global(raw: f64) -> GlobalAngle {
    let r = raw.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    GlobalAngle(if r >= TAU { 0.0 } else { r })
}

fn wrap_relative(raw: f64) -> RelativeAngle {
    // in-range values pass through bit-exact
    if raw > -PI && raw <= PI {
        return RelativeAngle(raw);
    }
    let mut r = raw.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    if r <= -PI {
        r += TAU;
    }
    RelativeAngle(r)
}

pub fn normalize_global(raw: f64) -> Result<GlobalAngle, GeometryError> {
    if !raw.is_finite() {
        return Err(GeometryError::NonFinite(raw));
    }
    Ok(wrap_global(raw))
}

/// Signed minimal rotation taking `b` onto `a`. The ±π tie resolves to +π.
pub fn angular_diff(a: GlobalAngle, b: GlobalAngle) -> RelativeAngle {
    let mut d = a.0 - b.0;
    if d > PI {
        d -= TAU;
    } else if d <= -PI {
        d += TAU;
    }
    RelativeAngle(d)
}

/// Bearing from `current` to `sub_goal`, evaluated branch by branch.
///
/// The two axis-aligned cases are handled explicitly, then the arctangent of
/// the slope is shifted into `[0, 2π)` by quadrant. A target straight along
/// +x (`dy = 0`, `dx > 0`) belongs to the first-quadrant branch and yields 0.
pub fn expected_angle(current: Point2, sub_goal: Point2) -> Result<GlobalAngle, GeometryError> {
    let dx = sub_goal.x - current.x;
    let dy = sub_goal.y - current.y;
    if !dx.is_finite() || !dy.is_finite() {
        return Err(GeometryError::NonFinite(if dx.is_finite() { dy } else { dx }));
    }
    let raw = if dx == 0.0 {
        if dy > 0.0 {
            PI / 2.0
        } else if dy < 0.0 {
            3.0 * PI / 2.0
        } else {
            return Err(GeometryError::Coincident);
        }
    } else if dx > 0.0 && dy >= 0.0 {
        (dy / dx).atan()
    } else if dx > 0.0 {
        (dy / dx).atan() + TAU
    } else {
        (dy / dx).atan() + PI
    };
    Ok(wrap_global(raw))
}

/// Ordered chain of 2D points with no coincident neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point2>,
    /// `cumulative[i]` is the arc length from vertex 0 to vertex i.
    cumulative: Vec<f64>,
}

impl Polyline {
    pub fn new(points: Vec<Point2>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::EmptyPolyline);
        }
        for p in &points {
            if !p.is_finite() {
                return Err(GeometryError::NonFinite(if p.x.is_finite() { p.y } else { p.x }));
            }
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for (i, w) in points.windows(2).enumerate() {
            let d = w[0].distance(&w[1]);
            if d < COINCIDENT_EPS {
                return Err(GeometryError::DuplicateVertex(i, i + 1));
            }
            cumulative.push(cumulative[i] + d);
        }
        Ok(Self { points, cumulative })
    }

    /// Builds a polyline, silently dropping vertices that coincide with their
    /// predecessor.
    pub fn from_points_dedup(points: impl IntoIterator<Item = Point2>) -> Result<Self, GeometryError> {
        let mut out: Vec<Point2> = Vec::new();
        for p in points {
            match out.last() {
                Some(last) if last.distance(&p) < COINCIDENT_EPS => {}
                _ => out.push(p),
            }
        }
        Self::new(out)
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Point2 {
        self.points[0]
    }

    pub fn last(&self) -> Point2 {
        self.points[self.points.len() - 1]
    }

    pub fn get(&self, i: usize) -> Option<Point2> {
        self.points.get(i).copied()
    }

    pub fn total_length(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    /// Arc length from vertex `i` to vertex `j`, summed segment by segment.
    pub fn arc_length(&self, i: usize, j: usize) -> Result<f64, GeometryError> {
        if i > j || j >= self.points.len() {
            return Err(GeometryError::IndexOutOfRange { i, j, len: self.points.len() });
        }
        Ok(self.points[i..=j].windows(2).map(|w| w[0].distance(&w[1])).sum())
    }

    /// Arc length from vertex 0 to vertex `i` (precomputed).
    pub fn station(&self, i: usize) -> f64 {
        self.cumulative[i]
    }

    /// Sub-polyline covering vertices `i..=j`.
    pub fn slice(&self, i: usize, j: usize) -> Result<Polyline, GeometryError> {
        if i > j || j >= self.points.len() {
            return Err(GeometryError::IndexOutOfRange { i, j, len: self.points.len() });
        }
        Polyline::new(self.points[i..=j].to_vec())
    }

    pub fn reversed(&self) -> Polyline {
        let mut pts = self.points.clone();
        pts.reverse();
        Polyline::new(pts).expect("reversal preserves validity")
    }

    /// Distance from `p` to the nearest point on any segment.
    pub fn distance_to(&self, p: &Point2) -> f64 {
        if self.points.len() == 1 {
            return self.points[0].distance(p);
        }
        self.points
            .windows(2)
            .map(|w| point_segment_distance(p, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn point_segment_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len2 = abx * abx + aby * aby;
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (((p.x - a.x) * abx + (p.y - a.y) * aby) / len2).clamp(0.0, 1.0);
    p.distance(&Point2::new(a.x + t * abx, a.y + t * aby))
}

/// Unsigned angle between vectors `u` and `v`, in `[0, π]`.
pub fn vector_angle(u: (f64, f64), v: (f64, f64)) -> f64 {
    let cross = u.0 * v.1 - u.1 * v.0;
    let dot = u.0 * v.0 + u.1 * v.1;
    cross.abs().atan2(dot)
}

/// Turn angle at interior vertex `i` (between incoming and outgoing segment).
fn turn_angle(pts: &[Point2], i: usize) -> f64 {
    let (a, b, c) = (pts[i - 1], pts[i], pts[i + 1]);
    vector_angle((b.x - a.x, b.y - a.y), (c.x - b.x, c.y - b.y))
}

/// Densifies `p` so no two consecutive vertices are farther apart than
/// `spacing`. Endpoints and every vertex where the direction changes are
/// kept; collinear interior vertices are dropped before subdividing.
pub fn resample(p: &Polyline, spacing: f64) -> Result<Polyline, GeometryError> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(GeometryError::BadSpacing(spacing));
    }
    let pts = p.points();
    if pts.len() == 1 {
        return Ok(p.clone());
    }

    let mut anchors = vec![pts[0]];
    for i in 1..pts.len() - 1 {
        if turn_angle(pts, i) > COLLINEAR_EPS {
            anchors.push(pts[i]);
        }
    }
    anchors.push(pts[pts.len() - 1]);

    let mut out = vec![anchors[0]];
    for w in anchors.windows(2) {
        let len = w[0].distance(&w[1]);
        let n = ((len / spacing) - 1e-9).ceil().max(1.0) as usize;
        for k in 1..n {
            out.push(w[0].lerp(&w[1], k as f64 / n as f64));
        }
        out.push(w[1]);
    }
    Polyline::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(pts: &[(f64, f64)]) -> Polyline {
        Polyline::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_global(0.0).unwrap().value(), 0.0);
        assert!((normalize_global(-PI / 2.0).unwrap().value() - 3.0 * PI / 2.0).abs() < 1e-12);
        assert!((normalize_global(5.0 * PI / 2.0).unwrap().value() - PI / 2.0).abs() < 1e-12);
        assert!(normalize_global(f64::NAN).is_err());
        assert!(normalize_global(f64::INFINITY).is_err());
        // tiny negative must not round to 2π
        let v = normalize_global(-1e-300).unwrap().value();
        assert!((0.0..TAU).contains(&v));
    }

    #[test]
    fn angular_diff_examples() {
        let g = |v| GlobalAngle::new(v).unwrap();
        assert_eq!(angular_diff(g(PI / 4.0), g(PI / 4.0)).value(), 0.0);
        assert!((angular_diff(g(0.1), g(TAU - 0.1)).value() - 0.2).abs() < 1e-12);
        assert_eq!(angular_diff(g(PI), g(0.0)).value(), PI);
        assert_eq!(angular_diff(g(0.0), g(PI)).value(), PI);
    }

    #[test]
    fn expected_angle_branches() {
        let o = Point2::new(0.0, 0.0);
        let e = |x, y| expected_angle(o, Point2::new(x, y)).unwrap().value();
        assert_eq!(e(0.0, 1.0), PI / 2.0);
        assert_eq!(e(0.0, -1.0), 3.0 * PI / 2.0);
        assert!((e(1.0, 1.0) - PI / 4.0).abs() < 1e-15);
        assert!((e(-1.0, 0.0) - PI).abs() < 1e-15);
        assert_eq!(e(1.0, 0.0), 0.0);
        assert!((e(1.0, -1.0) - 7.0 * PI / 4.0).abs() < 1e-12);
        assert!((e(-1.0, -1.0) - 5.0 * PI / 4.0).abs() < 1e-12);
        assert!((e(-1.0, 1.0) - 3.0 * PI / 4.0).abs() < 1e-12);
        assert_eq!(expected_angle(o, o), Err(GeometryError::Coincident));
    }

    #[test]
    fn arc_length_examples() {
        let p = line(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert_eq!(p.arc_length(1, 1).unwrap(), 0.0);
        assert_eq!(p.arc_length(0, 2).unwrap(), 2.0);
        assert_eq!(line(&[(0.0, 0.0), (3.0, 4.0)]).arc_length(0, 1).unwrap(), 5.0);
        assert!(p.arc_length(0, 3).is_err());
        assert!(p.arc_length(2, 1).is_err());
    }

    #[test]
    fn polyline_rejects_duplicates() {
        let r = Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(0.0, 1e-7)]);
        assert_eq!(r, Err(GeometryError::DuplicateVertex(0, 1)));
        assert_eq!(Polyline::new(vec![]), Err(GeometryError::EmptyPolyline));
    }

    #[test]
    fn resample_segment() {
        let r = resample(&line(&[(0.0, 0.0), (1.0, 0.0)]), 0.5).unwrap();
        assert_eq!(
            r.points(),
            &[Point2::new(0.0, 0.0), Point2::new(0.5, 0.0), Point2::new(1.0, 0.0)]
        );
    }

    #[test]
    fn resample_coarse_keeps_only_anchors() {
        let p = line(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (2.0, 1.0)]);
        let r = resample(&p, 10.0).unwrap();
        assert_eq!(
            r.points(),
            &[Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), Point2::new(2.0, 1.0)]
        );
    }

    #[test]
    fn resample_keeps_corner() {
        let r = resample(&line(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]), 0.5).unwrap();
        assert!(r.points().contains(&Point2::new(1.0, 0.0)));
        assert_eq!(r.len(), 5);
        for w in r.points().windows(2) {
            assert!(w[0].distance(&w[1]) <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn resample_single_point_unchanged() {
        let p = line(&[(3.0, 4.0)]);
        assert_eq!(resample(&p, 0.1).unwrap(), p);
        assert!(resample(&p, 0.0).is_err());
    }

    #[test]
    fn segment_distance() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(2.0, 0.0);
        assert_eq!(point_segment_distance(&Point2::new(1.0, 0.5), &a, &b), 0.5);
        assert_eq!(point_segment_distance(&Point2::new(3.0, 0.0), &a, &b), 1.0);
    }
}
