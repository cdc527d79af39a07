//! Simple polygons, convex clipping and exact intersection areas.

use serde::Serialize;

use super::Point2;
use crate::{Error, Result};

/// Whether a polygon plays the role of the inner domain `Omega` or of the
/// enclosing domain `Omega'` in a Dirichlet setup.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DomainRole {
    Inner,
    Outer,
}

/// A simple polygon with counterclockwise orientation and positive area.
///
/// Triangles of a mesh are allowed to extend outside the domain; every energy
/// integral clips against this polygon, so areas of partially covered
/// triangles are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPolygon {
    vertices: Vec<Point2>,
    role: DomainRole,
    area: f64,
}

impl DomainPolygon {
    /// Builds a domain polygon from an ordered vertex list. Clockwise input is
    /// reoriented; self-intersecting or degenerate input is rejected.
    pub fn new(mut vertices: Vec<Point2>, role: DomainRole) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidParams(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParams(
                "polygon has non-finite vertex coordinates".into(),
            ));
        }
        let mut area = signed_area(&vertices);
        if area < 0.0 {
            vertices.reverse();
            area = -area;
        }
        if area <= f64::EPSILON {
            return Err(Error::InvalidParams(
                "polygon has (near) zero area".into(),
            ));
        }
        if !is_simple(&vertices) {
            return Err(Error::InvalidParams("polygon is self-intersecting".into()));
        }
        Ok(DomainPolygon {
            vertices,
            role,
            area,
        })
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64, role: DomainRole) -> Result<Self> {
        if !(x0 < x1 && y0 < y1) {
            return Err(Error::InvalidParams(format!(
                "degenerate rectangle [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        DomainPolygon::new(
            vec![
                Point2::new(x0, y0),
                Point2::new(x1, y0),
                Point2::new(x1, y1),
                Point2::new(x0, y1),
            ],
            role,
        )
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn role(&self) -> DomainRole {
        self.role
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        bounding_box(&self.vertices)
    }

    /// Even-odd point containment (boundary points count as inside).
    pub fn contains(&self, p: Point2) -> bool {
        point_in_polygon(&self.vertices, p)
    }

    /// Signed distance-free strict containment test with an absolute margin:
    /// `p` is inside and at least `margin` away from the boundary.
    pub fn contains_with_margin(&self, p: Point2, margin: f64) -> bool {
        if !self.contains(p) {
            return false;
        }
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            if dist_point_segment(p, a, b) < margin {
                return false;
            }
        }
        true
    }

    /// Area of the intersection of `self` with the (convex) triangle `tri`.
    pub fn intersection_area_with_triangle(&self, tri: &[Point2; 3]) -> f64 {
        let clipped = clip_by_convex(&self.vertices, tri);
        signed_area(&clipped).max(0.0)
    }
}

/// Shoelace signed area (positive for counterclockwise).
pub fn signed_area(pts: &[Point2]) -> f64 {
    if pts.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..pts.len() {
        let a = pts[i];
        let b = pts[(i + 1) % pts.len()];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

pub fn bounding_box(pts: &[Point2]) -> (Point2, Point2) {
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// Crossing-number containment; points on the boundary count as inside
/// (within a small relative tolerance).
pub fn point_in_polygon(pts: &[Point2], p: Point2) -> bool {
    let n = pts.len();
    let (lo, hi) = bounding_box(pts);
    let scale = (hi.x - lo.x).max(hi.y - lo.y).max(1.0);
    let tol = 1e-12 * scale;
    let mut inside = false;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        if dist_point_segment(p, a, b) <= tol {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let t = (p.y - a.y) / (b.y - a.y);
            let x = a.x + t * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

pub fn dist_point_segment(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let ap = p - a;
    let len2 = ab.norm2();
    if len2 <= f64::EPSILON * f64::EPSILON {
        return ap.norm();
    }
    let t = (ap.dot(ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Sutherland-Hodgman clipping of `subject` against a convex, counterclockwise
/// `clip` polygon. The subject may be any simple polygon; degenerate bridging
/// edges in the output have zero area and do not affect the shoelace formula.
///
/// Points within a small relative tolerance of a clip line count as inside,
/// so subject edges collinear with a clip edge never generate spurious
/// far-away "intersection" points (the denominators would be pure roundoff).
pub fn clip_by_convex(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    let (clo, chi) = bounding_box(clip);
    let scale = (chi.x - clo.x).max(chi.y - clo.y).max(f64::MIN_POSITIVE);
    let mut output: Vec<Point2> = subject.to_vec();
    let n = clip.len();
    for i in 0..n {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % n];
        let edge = b - a;
        let tol = 1e-12 * scale * edge.norm();
        let input = std::mem::take(&mut output);
        let m = input.len();
        for j in 0..m {
            let cur = input[j];
            let next = input[(j + 1) % m];
            let cur_in = edge.cross(cur - a) >= -tol;
            let next_in = edge.cross(next - a) >= -tol;
            if cur_in {
                output.push(cur);
            }
            if cur_in != next_in {
                let denom = edge.cross(next - cur);
                if denom.abs() > 0.0 {
                    let t = edge.cross(a - cur) / denom;
                    output.push(cur + (next - cur) * t);
                }
            }
        }
    }
    output
}

/// Segment proper-intersection test used by the simplicity check.
fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0)
}

fn is_simple(pts: &[Point2]) -> bool {
    let n = pts.len();
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        for j in (i + 1)..n {
            // Skip adjacent edges (they share an endpoint).
            if j == i || (j + 1) % n == i || (i + 1) % n == j {
                continue;
            }
            let (c, d) = (pts[j], pts[(j + 1) % n]);
            if segments_cross(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Validated pair (Omega, Omega') with `closure(Omega)` inside the interior
/// of `Omega'`.
#[derive(Debug, Clone)]
pub struct DomainPair {
    pub inner: DomainPolygon,
    pub outer: DomainPolygon,
}

impl DomainPair {
    pub fn new(inner: DomainPolygon, outer: DomainPolygon) -> Result<Self> {
        let (lo, hi) = outer.bounding_box();
        let scale = (hi.x - lo.x).max(hi.y - lo.y);
        let margin = 1e-12 * scale;
        for &v in inner.vertices() {
            if !outer.contains_with_margin(v, margin) {
                return Err(Error::InvalidParams(format!(
                    "inner domain vertex ({}, {}) is not strictly inside the outer domain",
                    v.x, v.y
                )));
            }
        }
        let ni = inner.vertices().len();
        let no = outer.vertices().len();
        for i in 0..ni {
            let (a, b) = (inner.vertices()[i], inner.vertices()[(i + 1) % ni]);
            for j in 0..no {
                let (c, d) = (outer.vertices()[j], outer.vertices()[(j + 1) % no]);
                if segments_cross(a, b, c, d) {
                    return Err(Error::InvalidParams(
                        "inner domain boundary crosses the outer domain boundary".into(),
                    ));
                }
            }
        }
        Ok(DomainPair { inner, outer })
    }
}
