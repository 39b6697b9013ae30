//! Planar vectors, polylines with arc-length parametrisation, and convex hulls.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(angle: f64) -> Self {
        Self::new(math::cos(angle), math::sin(angle))
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product; positive when `other` is to the left.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        math::hypot(self.x, self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn angle(self) -> f64 {
        math::atan2(self.y, self.x)
    }

    /// Rotated by +90°.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Closest-point projection onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the foot point, in `[0, length]`.
    pub arc: f64,
    /// Signed lateral offset, left of the direction of travel positive.
    pub offset: f64,
    /// Euclidean distance to the foot point.
    pub distance: f64,
    /// Index of the segment holding the foot point.
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Vec2>,
    cumulative: Vec<f64>,
    curvature: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolylineError {
    TooFewPoints,
    NonFinite,
    DuplicatePoint(usize),
}

impl core::fmt::Display for PolylineError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PolylineError::TooFewPoints => write!(f, "polyline needs at least two points"),
            PolylineError::NonFinite => write!(f, "polyline contains non-finite coordinates"),
            PolylineError::DuplicatePoint(i) => {
                write!(f, "polyline points {} and {} coincide", i, i + 1)
            }
        }
    }
}

impl Polyline {
    pub fn new(points: Vec<Vec2>) -> Result<Self, PolylineError> {
        if points.len() < 2 {
            return Err(PolylineError::TooFewPoints);
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(PolylineError::NonFinite);
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for (i, w) in points.windows(2).enumerate() {
            let len = w[0].distance(w[1]);
            if len <= 1e-9 {
                return Err(PolylineError::DuplicatePoint(i));
            }
            cumulative.push(cumulative[i] + len);
        }
        let n = points.len();
        let mut curvature = alloc::vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = (points[i] - points[i - 1]).angle();
            let h1 = (points[i + 1] - points[i]).angle();
            let turn = math::normalize_angle(h1 - h0);
            let span = 0.5 * (cumulative[i + 1] - cumulative[i - 1]);
            curvature[i] = turn / span;
        }
        Ok(Self {
            points,
            cumulative,
            curvature,
        })
    }

    /// Joins polylines end to start, dropping a junction point shared by both.
    pub fn concat<'a, I>(parts: I) -> Result<Self, PolylineError>
    where
        I: IntoIterator<Item = &'a Polyline>,
    {
        let mut points: Vec<Vec2> = Vec::new();
        for part in parts {
            for &p in part.points() {
                match points.last() {
                    Some(&last) if last.distance(p) <= 1e-6 => {}
                    _ => points.push(p),
                }
            }
        }
        Self::new(points)
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Arc length at each vertex.
    pub fn vertex_arcs(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    pub fn segment_at(&self, arc: f64) -> usize {
        let arc = arc.clamp(0.0, self.length());
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&arc).unwrap())
        {
            Ok(i) => i.min(self.segment_count() - 1),
            Err(i) => (i - 1).min(self.segment_count() - 1),
        }
    }

    /// Point at `arc`, clamped to the polyline extent.
    pub fn point_at(&self, arc: f64) -> Vec2 {
        let i = self.segment_at(arc);
        let a = self.points[i];
        let b = self.points[i + 1];
        let len = self.cumulative[i + 1] - self.cumulative[i];
        let t = ((arc - self.cumulative[i]) / len).clamp(0.0, 1.0);
        a + (b - a) * t
    }

    pub fn heading_at(&self, arc: f64) -> f64 {
        let i = self.segment_at(arc);
        (self.points[i + 1] - self.points[i]).angle()
    }

    /// Signed curvature, linearly interpolated between vertex estimates.
    pub fn curvature_at(&self, arc: f64) -> f64 {
        let i = self.segment_at(arc);
        let len = self.cumulative[i + 1] - self.cumulative[i];
        let t = ((arc - self.cumulative[i]) / len).clamp(0.0, 1.0);
        self.curvature[i] * (1.0 - t) + self.curvature[i + 1] * t
    }

    fn project_segment(&self, i: usize, p: Vec2) -> Projection {
        let a = self.points[i];
        let b = self.points[i + 1];
        let d = b - a;
        let len = self.cumulative[i + 1] - self.cumulative[i];
        let t = ((p - a).dot(d) / (len * len)).clamp(0.0, 1.0);
        let foot = a + d * t;
        let distance = p.distance(foot);
        let side = d.cross(p - a);
        let offset = if side >= 0.0 { distance } else { -distance };
        Projection {
            arc: self.cumulative[i] + t * len,
            offset,
            distance,
            segment: i,
        }
    }

    /// Global closest-point projection. Ties resolve to the earliest segment.
    pub fn project(&self, p: Vec2) -> Projection {
        self.project_range(p, 0, self.segment_count())
    }

    /// Projection restricted to segments overlapping `[arc_hint - behind, arc_hint + ahead]`.
    pub fn project_near(&self, p: Vec2, arc_hint: f64, behind: f64, ahead: f64) -> Projection {
        let lo = self.segment_at(arc_hint - behind);
        let hi = self.segment_at(arc_hint + ahead) + 1;
        self.project_range(p, lo, hi)
    }

    fn project_range(&self, p: Vec2, lo: usize, hi: usize) -> Projection {
        let mut best = self.project_segment(lo, p);
        for i in lo + 1..hi {
            let cand = self.project_segment(i, p);
            if cand.distance < best.distance - 1e-12 {
                best = cand;
            }
        }
        best
    }

    /// Sub-polyline covering `[from, to]`.
    pub fn slice(&self, from: f64, to: f64) -> Result<Self, PolylineError> {
        let from = from.clamp(0.0, self.length());
        let to = to.clamp(from, self.length());
        let mut pts = alloc::vec![self.point_at(from)];
        for (i, &c) in self.cumulative.iter().enumerate() {
            if c > from + 1e-6 && c < to - 1e-6 {
                pts.push(self.points[i]);
            }
        }
        pts.push(self.point_at(to));
        Self::new(pts)
    }
}

/// Intersection of segments `a0-a1` and `b0-b1` as parameters `(ta, tb)` in `[0, 1]`.
pub fn segment_intersection(a0: Vec2, a1: Vec2, b0: Vec2, b1: Vec2) -> Option<(f64, f64)> {
    let da = a1 - a0;
    let db = b1 - b0;
    let denom = da.cross(db);
    if denom.abs() < 1e-12 {
        return None;
    }
    let w = b0 - a0;
    let ta = w.cross(db) / denom;
    let tb = w.cross(da) / denom;
    if (-1e-9..=1.0 + 1e-9).contains(&ta) && (-1e-9..=1.0 + 1e-9).contains(&tb) {
        Some((ta.clamp(0.0, 1.0), tb.clamp(0.0, 1.0)))
    } else {
        None
    }
}

/// All crossings between two polylines as arc-length pairs, sorted along `a`.
pub fn polyline_intersections(a: &Polyline, b: &Polyline) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let (pa, pb) = (a.points(), b.points());
    for i in 0..pa.len() - 1 {
        for j in 0..pb.len() - 1 {
            if let Some((ta, tb)) = segment_intersection(pa[i], pa[i + 1], pb[j], pb[j + 1]) {
                let sa = a.cumulative[i] + ta * (a.cumulative[i + 1] - a.cumulative[i]);
                let sb = b.cumulative[j] + tb * (b.cumulative[j + 1] - b.cumulative[j]);
                if !out
                    .iter()
                    .any(|&(x, y): &(f64, f64)| (x - sa).abs() < 0.5 && (y - sb).abs() < 0.5)
                {
                    out.push((sa, sb));
                }
            }
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

/// Counter-clockwise convex hull (monotone chain).
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.distance(*b) < 1e-9);
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(pts.len() * 2);
    let push = |hull: &mut Vec<Vec2>, start: usize, p: Vec2| {
        while hull.len() >= start + 2 {
            let n = hull.len();
            if (hull[n - 1] - hull[n - 2]).cross(p - hull[n - 2]) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    };
    for &p in &pts {
        push(&mut hull, 0, p);
    }
    hull.pop();
    let start = hull.len();
    for &p in pts.iter().rev() {
        push(&mut hull, start, p);
    }
    hull.pop();
    hull
}

/// Distance from `p` to a convex CCW polygon; zero inside.
pub fn distance_to_convex(polygon: &[Vec2], p: Vec2) -> f64 {
    match polygon.len() {
        0 => f64::INFINITY,
        1 => p.distance(polygon[0]),
        n => {
            let mut inside = n >= 3;
            let mut best = f64::INFINITY;
            for i in 0..n {
                let a = polygon[i];
                let b = polygon[(i + 1) % n];
                if (b - a).cross(p - a) < 0.0 {
                    inside = false;
                }
                let d = b - a;
                let t = ((p - a).dot(d) / d.norm_sq()).clamp(0.0, 1.0);
                best = best.min(p.distance(a + d * t));
            }
            if inside {
                0.0
            } else {
                best
            }
        }
    }
}
