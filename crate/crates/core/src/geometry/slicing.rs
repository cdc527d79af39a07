//! Slicing geometry: 1D sections of triangles, orthogonal projection onto
//! `Pi_xi`, and the oblique projection `Phi` onto `Pi_nu` along `xi`.

use super::Point2;
use crate::algebra::Vec2;
use crate::{Error, Result};

/// A pair (jump normal `nu`, slicing direction `xi`) with `nu . xi != 0`.
///
/// The diagnostics check the stronger condition `nu . xi >= 1/2` themselves;
/// it is not forced here.
#[derive(Debug, Clone, Copy)]
pub struct SliceFrame {
    nu: Vec2,
    xi: Vec2,
}

impl SliceFrame {
    pub fn new(nu: Vec2, xi: Vec2) -> Result<Self> {
        let nu = nu
            .normalized()
            .ok_or_else(|| Error::InvalidParams("nu must be nonzero".into()))?;
        let xi = xi
            .normalized()
            .ok_or_else(|| Error::InvalidParams("xi must be nonzero".into()))?;
        let dot = nu.dot(xi);
        if dot.abs() < 1e-12 {
            return Err(Error::ParallelProjection { dot });
        }
        Ok(SliceFrame { nu, xi })
    }

    pub fn nu(&self) -> Vec2 {
        self.nu
    }

    pub fn xi(&self) -> Vec2 {
        self.xi
    }
}

/// The section of a (closed, convex) triangle by the line `y + t xi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    /// Closed parameter interval `[a, b]`, or `None` when the line misses the
    /// triangle. Degenerate touches report `a == b`.
    pub interval: Option<(f64, f64)>,
    /// Whether the *open* triangle is crossed. A line through a vertex only,
    /// or running along an edge, reports `false`: such measure-zero touches
    /// are excluded from all slice counts.
    pub interior_nonempty: bool,
}

impl Section {
    pub fn empty() -> Self {
        Section {
            interval: None,
            interior_nonempty: false,
        }
    }
}

/// Computes `{ t : y + t xi in T }` by clipping the line against the three
/// half-planes of the triangle. `xi` must be unit length.
pub fn section(tri: &[Point2; 3], y: Point2, xi: Vec2) -> Section {
    let scale = (tri[1] - tri[0])
        .norm()
        .max((tri[2] - tri[0]).norm())
        .max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;

    let mut t_lo = f64::NEG_INFINITY;
    let mut t_hi = f64::INFINITY;
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        // Inward normal of a counterclockwise triangle edge.
        let n = (b - a).perp();
        let num = n.dot(a - y);
        let den = n.dot(xi);
        if den.abs() <= 1e-15 * n.norm() {
            // Line parallel to this edge: feasible iff y is on the inner side.
            if n.dot(y - a) < -tol * n.norm() {
                return Section::empty();
            }
        } else {
            let t = num / den;
            if den > 0.0 {
                t_lo = t_lo.max(t);
            } else {
                t_hi = t_hi.min(t);
            }
        }
    }
    if t_lo > t_hi + tol {
        return Section::empty();
    }
    let (a, b) = (t_lo.min(t_hi), t_hi.max(t_lo));
    // The open triangle is crossed iff the midpoint of the closed section is
    // strictly inside; this also rules out lines running along an edge.
    let mid = y + xi * (0.5 * (a + b));
    let strictly_inside = (0..3).all(|i| {
        let e = tri[(i + 1) % 3] - tri[i];
        e.cross(mid - tri[i]) > tol * e.norm()
    });
    Section {
        interval: Some((a, b)),
        interior_nonempty: strictly_inside,
    }
}

/// Orthogonal projection of a point onto `Pi_xi = { z : z . xi = 0 }`.
pub fn project_p_xi(z: Point2, xi: Vec2) -> Point2 {
    let zv = Vec2::new(z.x, z.y);
    let proj = zv - xi * zv.dot(xi);
    Point2::new(proj.x, proj.y)
}

/// Orthogonal projection of a triangle onto `Pi_xi`, reported as an interval
/// in the `xi`-perpendicular coordinate together with its length
/// `H^1(p_xi(T))`.
pub fn project_p_xi_triangle(tri: &[Point2; 3], xi: Vec2) -> (f64, f64, f64) {
    let perp = xi.perp();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in tri {
        let s = Vec2::new(p.x, p.y).dot(perp);
        lo = lo.min(s);
        hi = hi.max(s);
    }
    (lo, hi, hi - lo)
}

/// The linear projection onto `Pi_nu` in the direction `xi`:
/// `Phi(z) = z - ((nu . z) / (nu . xi)) xi`.
pub fn project_phi(z: Point2, frame: &SliceFrame) -> Result<Point2> {
    let (nu, xi) = (frame.nu(), frame.xi());
    let den = nu.dot(xi);
    if den.abs() < 1e-300 {
        return Err(Error::ParallelProjection { dot: den });
    }
    let zv = Vec2::new(z.x, z.y);
    let out = zv - xi * (nu.dot(zv) / den);
    Ok(Point2::new(out.x, out.y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tri(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> [Point2; 3] {
        [
            Point2::new(a.0, a.1),
            Point2::new(b.0, b.1),
            Point2::new(c.0, c.1),
        ]
    }

    /// Brute-force section oracle: dense scan of `t` with point-in-triangle.
    fn section_oracle(tri: &[Point2; 3], y: Point2, xi: Vec2) -> Option<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let n = 4_000_000;
        let t_range = 8.0;
        for k in 0..=n {
            let t = -t_range + 2.0 * t_range * k as f64 / n as f64;
            let p = y + xi * t;
            let inside = (0..3).all(|i| {
                let e = tri[(i + 1) % 3] - tri[i];
                e.cross(p - tri[i]) >= 0.0
            });
            if inside {
                lo = lo.min(t);
                hi = hi.max(t);
            }
        }
        if lo.is_finite() {
            Some((lo, hi))
        } else {
            None
        }
    }

    #[test]
    fn vertical_section_matches_hand_value_and_oracle() {
        let t = tri((0.0, 0.0), (2.0, 0.0), (0.0, 2.0));
        let y = Point2::new(0.5, -1.0);
        let xi = Vec2::new(0.0, 1.0);
        let s = section(&t, y, xi);
        let (a, b) = s.interval.unwrap();
        assert_relative_eq!(a, 1.0, epsilon = 1e-12);
        assert_relative_eq!(b, 2.5, epsilon = 1e-12);
        assert!(s.interior_nonempty);
        let (oa, ob) = section_oracle(&t, y, xi).unwrap();
        assert_relative_eq!(a, oa, epsilon = 1e-5);
        assert_relative_eq!(b, ob, epsilon = 1e-5);
    }

    #[test]
    fn line_outside_slab_is_empty() {
        let t = tri((0.0, 0.0), (2.0, 0.0), (0.0, 2.0));
        let s = section(&t, Point2::new(3.0, 0.0), Vec2::new(0.0, 1.0));
        assert_eq!(s, Section::empty());
    }

    #[test]
    fn line_through_vertex_along_edge_is_degenerate() {
        let t = tri((0.0, 0.0), (2.0, 0.0), (0.0, 2.0));
        // Through the vertex (0,0) only: the line leaves the closed triangle
        // immediately on both sides.
        let s = section(&t, Point2::new(-1.0, 1.0), Vec2::new(1.0, -1.0).normalized().unwrap());
        match s.interval {
            Some((a, b)) => {
                assert!(b - a < 1e-9);
                assert!(!s.interior_nonempty);
            }
            // Tangent at a single point may also be reported empty.
            None => {}
        }
        // Along the bottom edge: closed section is the whole edge, but the
        // open triangle is never crossed.
        let s = section(&t, Point2::new(-1.0, 0.0), Vec2::new(1.0, 0.0));
        let (a, b) = s.interval.unwrap();
        assert_relative_eq!(a, 1.0, epsilon = 1e-9);
        assert_relative_eq!(b, 3.0, epsilon = 1e-9);
        assert!(!s.interior_nonempty);
    }

    #[test]
    fn section_shift_consistency() {
        // section(T, y + c xi, xi) = section(T, y, xi) shifted by -c.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let t = tri(
                (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
            if crate::geometry::polygon::signed_area(&t).abs() < 1e-2 {
                continue;
            }
            let t = if crate::geometry::polygon::signed_area(&t) < 0.0 {
                [t[0], t[2], t[1]]
            } else {
                t
            };
            let y = Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let xi = Vec2::new(ang.cos(), ang.sin());
            let c: f64 = rng.gen_range(-2.0..2.0);
            let s0 = section(&t, y, xi);
            let s1 = section(&t, y + xi * c, xi);
            match (s0.interval, s1.interval) {
                (Some((a0, b0)), Some((a1, b1))) => {
                    assert_relative_eq!(a1, a0 - c, epsilon = 1e-10);
                    assert_relative_eq!(b1, b0 - c, epsilon = 1e-10);
                }
                (None, None) => {}
                other => panic!("inconsistent emptiness: {other:?}"),
            }
        }
    }

    #[test]
    fn projection_interval_of_unit_triangle() {
        let t = tri((0.0, 0.0), (1.0, 0.0), (0.0, 1.0));
        let (_, _, len) = project_p_xi_triangle(&t, Vec2::new(0.0, 1.0));
        assert_relative_eq!(len, 1.0, epsilon = 1e-12);
        // A segment parallel to xi projects to a single point.
        let seg = tri((0.3, 0.0), (0.3, 1.0), (0.3, 0.5));
        let (_, _, len) = project_p_xi_triangle(&seg, Vec2::new(0.0, 1.0));
        assert_relative_eq!(len, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn projection_matches_vertex_hull_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let t = tri(
                (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
                (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
            );
            let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let xi = Vec2::new(ang.cos(), ang.sin());
            let (lo, hi, _) = project_p_xi_triangle(&t, xi);
            // Oracle: project many convex combinations of the vertices.
            let perp = xi.perp();
            let mut olo = f64::INFINITY;
            let mut ohi = f64::NEG_INFINITY;
            for _ in 0..500 {
                let (mut r1, mut r2): (f64, f64) = (rng.gen(), rng.gen());
                if r1 + r2 > 1.0 {
                    r1 = 1.0 - r1;
                    r2 = 1.0 - r2;
                }
                let p = t[0] + (t[1] - t[0]) * r1 + (t[2] - t[0]) * r2;
                let s = Vec2::new(p.x, p.y).dot(perp);
                olo = olo.min(s);
                ohi = ohi.max(s);
            }
            assert!(olo >= lo - 1e-9 && ohi <= hi + 1e-9);
        }
    }

    #[test]
    fn phi_collapses_to_orthogonal_projection_when_xi_equals_nu() {
        let frame = SliceFrame::new(Vec2::new(0.0, 1.0), Vec2::new(0.0, 1.0)).unwrap();
        let z = Point2::new(1.25, -3.5);
        let out = project_phi(z, &frame).unwrap();
        assert_relative_eq!(out.x, 1.25, epsilon = 1e-12);
        assert_relative_eq!(out.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn phi_fixes_pi_nu_and_lands_on_pi_nu() {
        let frame = SliceFrame::new(
            Vec2::new(0.2, 1.0).normalized().unwrap(),
            Vec2::new(-0.1, 1.0).normalized().unwrap(),
        )
        .unwrap();
        let nu = frame.nu();
        // A point already on Pi_nu is fixed.
        let z = Point2::new(nu.perp().x * 2.0, nu.perp().y * 2.0);
        let out = project_phi(z, &frame).unwrap();
        assert_relative_eq!((out - z).norm(), 0.0, epsilon = 1e-12);
        // Any image satisfies nu . Phi(z) = 0.
        let w = project_phi(Point2::new(0.7, -0.3), &frame).unwrap();
        assert!(nu.dot(Vec2::new(w.x, w.y)).abs() < 1e-12);
    }

    #[test]
    fn phi_is_linear() {
        let frame = SliceFrame::new(
            Vec2::new(0.3, 1.0).normalized().unwrap(),
            Vec2::new(0.1, 1.0).normalized().unwrap(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let z = Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let w = Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let (a, b): (f64, f64) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let comb = Point2::new(a * z.x + b * w.x, a * z.y + b * w.y);
            let lhs = project_phi(comb, &frame).unwrap();
            let pz = project_phi(z, &frame).unwrap();
            let pw = project_phi(w, &frame).unwrap();
            let rhs = Point2::new(a * pz.x + b * pw.x, a * pz.y + b * pw.y);
            assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.to_vec().norm()));
        }
    }

    #[test]
    fn phi_lipschitz_bound_on_random_pairs() {
        // For |nu - xi| <= eta (with the slicing constraints), the Lipschitz
        // constant of Phi is bounded by sqrt(1 + 4 eta^2).
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let base: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let nu = Vec2::new(base.cos(), base.sin());
            let delta: f64 = rng.gen_range(-0.45..0.45);
            let xi = Vec2::new((base + delta).cos(), (base + delta).sin());
            let eta = (nu - xi).norm();
            if eta < 1e-6 {
                continue;
            }
            let frame = SliceFrame::new(nu, xi).unwrap();
            let bound = (1.0 + 4.0 * eta * eta).sqrt();
            for _ in 0..20 {
                let z = Point2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                let w = Point2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                if (z - w).norm() < 1e-9 {
                    continue;
                }
                let pz = project_phi(z, &frame).unwrap();
                let pw = project_phi(w, &frame).unwrap();
                let ratio = (pz - pw).norm() / (z - w).norm();
                assert!(
                    ratio <= bound * (1.0 + 1e-12),
                    "ratio {ratio} exceeds bound {bound} (eta {eta})"
                );
            }
        }
    }

    #[test]
    fn parallel_frame_rejected() {
        let r = SliceFrame::new(Vec2::new(0.0, 1.0), Vec2::new(1.0, 0.0));
        assert!(matches!(r, Err(Error::ParallelProjection { .. })));
    }
}
