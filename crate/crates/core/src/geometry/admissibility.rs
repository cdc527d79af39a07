//! Admissibility of triangulations: edge-length bounds, minimum angle,
//! conformity and domain coverage.

use std::collections::BTreeSet;

use serde::Serialize;

use super::mesh::{triangle_metrics_from_points, Mesh2};
use super::polygon::{bounding_box, DomainPolygon};
use super::Point2;
use crate::{Error, Result};

/// Parameters of the admissible class: meshes whose edges lie in
/// `[eps, omega]` and whose angles are all at least `theta0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibilityParams {
    pub eps: f64,
    pub omega: f64,
    /// Minimum angle in degrees.
    pub theta0_deg: f64,
}

impl AdmissibilityParams {
    /// Largest admissible minimum angle: `45 deg - arctan(1/2)`, about
    /// 18.4349 degrees. Equivalently `arctan(1/3)`, so its sine is
    /// `1/sqrt(10)`.
    pub fn theta0_max_deg() -> f64 {
        45.0 - 0.5f64.atan().to_degrees()
    }

    pub fn new(eps: f64, omega: f64, theta0_deg: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParams(format!("eps must be positive, got {eps}")));
        }
        if !(omega >= 6.0 * eps * (1.0 - 1e-12)) {
            return Err(Error::InvalidParams(format!(
                "omega must be at least 6*eps ({}), got {omega}",
                6.0 * eps
            )));
        }
        // Allow exact equality with the extremal angle up to roundoff.
        let max = Self::theta0_max_deg() * (1.0 + 1e-12);
        if !(theta0_deg > 0.0 && theta0_deg <= max) {
            return Err(Error::InvalidParams(format!(
                "theta0 must lie in (0, {:.6}] degrees, got {theta0_deg}",
                Self::theta0_max_deg()
            )));
        }
        Ok(AdmissibilityParams {
            eps,
            omega,
            theta0_deg,
        })
    }

    pub fn theta0_rad(&self) -> f64 {
        self.theta0_deg.to_radians()
    }

    pub fn sin_theta0(&self) -> f64 {
        self.theta0_rad().sin()
    }
}

/// How a pair of triangles fails conformity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConformityDefect {
    /// Interiors overlap with positive area.
    Overlap,
    /// Boundary contact along a segment that is not a full common edge.
    PartialEdge,
    /// Contact at a point that is not a common vertex.
    VertexContact,
}

/// A single admissibility violation. Violations are data, not errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    EdgeTooShort { tri: usize, length: f64 },
    EdgeTooLong { tri: usize, length: f64 },
    AngleTooSmall { tri: usize, angle_deg: f64 },
    DegenerateTriangle { tri: usize },
    NonConforming { tri_a: usize, tri_b: usize, defect: ConformityDefect },
    DomainNotCovered { missing_area: f64 },
}

/// Result of validating a mesh against an admissibility class.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    /// Empty violation list == the mesh belongs to the admissible class.
    pub fn is_admissible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relative tolerance for edge/angle comparisons. Recovery meshes sit on the
/// constraint boundary by design (edges exactly `eps`, angles exactly
/// `theta0`), so extremal triangles must validate.
const REL_TOL: f64 = 1e-9;

/// Checks a mesh against Definition-style admissibility: per-triangle edge
/// lengths in `[eps, omega]`, all angles at least `theta0`, pairwise
/// conformity (intersections are empty, a common vertex or a common full
/// edge), and coverage of the inner domain.
pub fn validate_admissible(
    mesh: &Mesh2,
    params: &AdmissibilityParams,
    domain: &DomainPolygon,
) -> ValidationReport {
    let mut violations = Vec::new();

    for t in 0..mesh.n_triangles() {
        let pts = mesh.tri_points(t);
        let metrics = match triangle_metrics_from_points(&pts, t) {
            Ok(m) => m,
            Err(_) => {
                violations.push(Violation::DegenerateTriangle { tri: t });
                continue;
            }
        };
        for len in metrics.edge_lengths {
            if len < params.eps * (1.0 - REL_TOL) {
                violations.push(Violation::EdgeTooShort { tri: t, length: len });
            }
            if len > params.omega * (1.0 + REL_TOL) {
                violations.push(Violation::EdgeTooLong { tri: t, length: len });
            }
        }
        for angle in metrics.angles_deg {
            if angle < params.theta0_deg * (1.0 - REL_TOL) {
                violations.push(Violation::AngleTooSmall {
                    tri: t,
                    angle_deg: angle,
                });
            }
        }
    }

    let mut conforming = true;
    for (a, b, defect) in conformity_defects(mesh) {
        conforming = false;
        violations.push(Violation::NonConforming {
            tri_a: a,
            tri_b: b,
            defect,
        });
    }

    // For a conforming mesh triangle interiors are pairwise disjoint, so the
    // clipped areas sum exactly to the covered area of the domain.
    if conforming {
        let mut covered = crate::numeric::KahanSum::new();
        for t in 0..mesh.n_triangles() {
            covered.add(domain.intersection_area_with_triangle(&mesh.tri_points(t)));
        }
        let missing = domain.area() - covered.value();
        if missing > REL_TOL * domain.area() {
            violations.push(Violation::DomainNotCovered {
                missing_area: missing,
            });
        }
    }

    ValidationReport {
        n_vertices: mesh.n_vertices(),
        n_triangles: mesh.n_triangles(),
        violations,
    }
}

/// How two closed triangles relate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRelation {
    Disjoint,
    SharedVertex,
    SharedEdge,
    Conflict(ConformityDefect),
}

/// Classifies the intersection of two closed triangles as empty, a common
/// vertex, a common full edge, or a conformity defect.
pub fn classify_pair(pa: &[Point2; 3], pb: &[Point2; 3], tol: f64) -> PairRelation {
    let inter = super::polygon::clip_by_convex(pa, pb);
    if inter.is_empty() {
        return PairRelation::Disjoint;
    }
    let area = super::polygon::signed_area(&inter).abs();
    // Diameter of the (possibly degenerate) intersection polygon.
    let mut diam = 0.0f64;
    let mut ends = (inter[0], inter[0]);
    for i in 0..inter.len() {
        for j in (i + 1)..inter.len() {
            let d = (inter[j] - inter[i]).norm();
            if d > diam {
                diam = d;
                ends = (inter[i], inter[j]);
            }
        }
    }
    if diam <= tol {
        // Point contact (any residual area is pure roundoff): must be a
        // vertex of both triangles.
        let p = inter[0];
        let is_vertex = |tri: &[Point2; 3]| tri.iter().any(|&v| (v - p).norm() <= tol);
        return if is_vertex(pa) && is_vertex(pb) {
            PairRelation::SharedVertex
        } else {
            PairRelation::Conflict(ConformityDefect::VertexContact)
        };
    }
    // Characteristic thickness of the intersection across its diameter.
    if area / diam > tol {
        return PairRelation::Conflict(ConformityDefect::Overlap);
    }
    {
        // Segment contact: must be a full edge of both triangles.
        let (p, q) = ends;
        let is_edge = |tri: &[Point2; 3]| {
            (0..3).any(|i| {
                let a = tri[i];
                let b = tri[(i + 1) % 3];
                ((a - p).norm() <= tol && (b - q).norm() <= tol)
                    || ((a - q).norm() <= tol && (b - p).norm() <= tol)
            })
        };
        if is_edge(pa) && is_edge(pb) {
            PairRelation::SharedEdge
        } else {
            PairRelation::Conflict(ConformityDefect::PartialEdge)
        }
    }
}

/// All non-conforming pairs `(a, b)` with `a < b`, found with a uniform-grid
/// broad phase. O(n^2) in the worst case; meshes are desk scale.
pub fn conformity_defects(mesh: &Mesh2) -> Vec<(usize, usize, ConformityDefect)> {
    let n = mesh.n_triangles();
    if n == 0 {
        return Vec::new();
    }
    let (lo, hi) = mesh.bounding_box();
    let span = (hi.x - lo.x).max(hi.y - lo.y).max(f64::MIN_POSITIVE);

    // Cell size tracks the largest triangle bounding box.
    let mut max_extent = 0.0f64;
    let mut boxes = Vec::with_capacity(n);
    for t in 0..n {
        let pts = mesh.tri_points(t);
        let (blo, bhi) = bounding_box(&pts);
        max_extent = max_extent.max(bhi.x - blo.x).max(bhi.y - blo.y);
        boxes.push((blo, bhi));
    }
    let cell = max_extent.max(span * 1e-6);
    let nx = ((hi.x - lo.x) / cell).ceil() as usize + 1;
    let ny = ((hi.y - lo.y) / cell).ceil() as usize + 1;
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); nx * ny];
    let cell_of = |x: f64, y: f64| -> (usize, usize) {
        let i = (((x - lo.x) / cell).floor() as isize).clamp(0, nx as isize - 1) as usize;
        let j = (((y - lo.y) / cell).floor() as isize).clamp(0, ny as isize - 1) as usize;
        (i, j)
    };
    for (t, (blo, bhi)) in boxes.iter().enumerate() {
        let (i0, j0) = cell_of(blo.x, blo.y);
        let (i1, j1) = cell_of(bhi.x, bhi.y);
        for i in i0..=i1 {
            for j in j0..=j1 {
                grid[j * nx + i].push(t);
            }
        }
    }

    let mut candidates: BTreeSet<(usize, usize)> = BTreeSet::new();
    for bucket in &grid {
        for (k, &a) in bucket.iter().enumerate() {
            for &b in &bucket[k + 1..] {
                candidates.insert(if a < b { (a, b) } else { (b, a) });
            }
        }
    }

    let mut defects = Vec::new();
    for (a, b) in candidates {
        let pa = mesh.tri_points(a);
        let pb = mesh.tri_points(b);
        let (alo, ahi) = &boxes[a];
        let (blo, bhi) = &boxes[b];
        let scale = (ahi.x - alo.x)
            .max(ahi.y - alo.y)
            .max(bhi.x - blo.x)
            .max(bhi.y - blo.y);
        let tol = REL_TOL * scale;
        if alo.x > bhi.x + tol || blo.x > ahi.x + tol || alo.y > bhi.y + tol || blo.y > ahi.y + tol
        {
            continue;
        }
        if let PairRelation::Conflict(defect) = classify_pair(&pa, &pb, tol) {
            defects.push((a, b, defect));
        }
    }
    defects
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::mesh::Triangle;
    use crate::geometry::polygon::DomainRole;
    use crate::geometry::generate::structured_grid;

    fn unit_square() -> DomainPolygon {
        DomainPolygon::rectangle(0.0, 0.0, 1.0, 1.0, DomainRole::Inner).unwrap()
    }

    #[test]
    fn params_validate_ranges() {
        assert!(AdmissibilityParams::new(0.1, 0.6, 18.0).is_ok());
        assert!(AdmissibilityParams::new(0.1, 0.5, 18.0).is_err()); // omega < 6 eps
        assert!(AdmissibilityParams::new(0.1, 0.6, 19.0).is_err()); // theta0 too large
        assert!(AdmissibilityParams::new(0.1, 0.6, 0.0).is_err());
        assert!(AdmissibilityParams::new(-0.1, 0.6, 18.0).is_err());
        // The extremal angle itself is admissible.
        assert!(AdmissibilityParams::new(0.1, 0.6, AdmissibilityParams::theta0_max_deg()).is_ok());
    }

    #[test]
    fn theta0_max_is_arctan_one_third() {
        let deg = AdmissibilityParams::theta0_max_deg();
        assert!((deg.to_radians().tan() - 1.0 / 3.0).abs() < 1e-12);
        assert!((deg.to_radians().sin() - 1.0 / 10f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn uniform_grid_is_admissible() {
        // Right-isoceles grid of squares side s: all angles 45 or 90 degrees.
        let s = 0.25;
        let mesh = structured_grid(0.0, 0.0, 1.0, 1.0, s).unwrap();
        let params = AdmissibilityParams::new(s, 6.0 * s, 18.0).unwrap();
        let report = validate_admissible(&mesh, &params, &unit_square());
        assert!(report.is_admissible(), "{:?}", report.violations);
    }

    #[test]
    fn short_edges_flagged_when_eps_grows() {
        let s = 0.25;
        let mesh = structured_grid(0.0, 0.0, 1.0, 1.0, s).unwrap();
        let params = AdmissibilityParams::new(1.5 * s, 9.0 * s, 18.0).unwrap();
        let report = validate_admissible(&mesh, &params, &unit_square());
        assert!(!report.is_admissible());
        // Every edge is short: legs s and hypotenuse s*sqrt(2) < 1.5 s.
        let shorts = report
            .violations
            .iter()
            .filter(|v| matches!(v, Violation::EdgeTooShort { .. }))
            .count();
        assert_eq!(shorts, 3 * mesh.n_triangles());
    }

    #[test]
    fn half_edge_share_is_non_conforming() {
        // Second triangle's base is half of the first one's bottom edge.
        let mesh = Mesh2::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(2.0, 0.0),
                Point2::new(1.0, 1.5),
                Point2::new(1.0, 0.0),
                Point2::new(0.5, -1.0),
            ],
            vec![Triangle::new(0, 1, 2), Triangle::new(0, 3, 4)],
        )
        .unwrap();
        let defects = conformity_defects(&mesh);
        assert_eq!(defects.len(), 1);
        assert_eq!(defects[0].2, ConformityDefect::PartialEdge);
    }

    #[test]
    fn vertex_on_edge_interior_is_non_conforming() {
        let mesh = Mesh2::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(2.0, 0.0),
                Point2::new(1.0, 1.5),
                Point2::new(1.0, 0.0), // on the interior of edge (0,1)
                Point2::new(0.0, -1.0),
                Point2::new(2.0, -1.0),
            ],
            vec![Triangle::new(0, 1, 2), Triangle::new(4, 5, 3)],
        )
        .unwrap();
        let defects = conformity_defects(&mesh);
        assert_eq!(defects.len(), 1);
        assert_eq!(defects[0].2, ConformityDefect::VertexContact);
    }

    #[test]
    fn overlap_is_non_conforming() {
        let mesh = Mesh2::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(0.5, 0.1),
                Point2::new(1.5, 0.1),
                Point2::new(0.5, 1.1),
            ],
            vec![Triangle::new(0, 1, 2), Triangle::new(3, 4, 5)],
        )
        .unwrap();
        let defects = conformity_defects(&mesh);
        assert_eq!(defects.len(), 1);
        assert_eq!(defects[0].2, ConformityDefect::Overlap);
    }

    #[test]
    fn shared_vertex_and_shared_edge_conform() {
        let mesh = Mesh2::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(1.0, 1.0),
                Point2::new(-1.0, -0.2),
                Point2::new(-0.2, -1.0),
            ],
            vec![
                Triangle::new(0, 1, 2),
                Triangle::new(1, 3, 2), // shares edge (1,2)
                Triangle::new(4, 5, 0), // shares vertex 0
            ],
        )
        .unwrap();
        assert!(conformity_defects(&mesh).is_empty());
    }

    #[test]
    fn coverage_violation_detected() {
        // Two triangles covering only the lower-left half of the square.
        let mesh = Mesh2::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(0.5, 0.5),
            ],
            vec![Triangle::new(0, 1, 3), Triangle::new(0, 3, 2)],
        )
        .unwrap();
        let params = AdmissibilityParams::new(0.05, 6.0, 18.0).unwrap();
        let report = validate_admissible(&mesh, &params, &unit_square());
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DomainNotCovered { .. })));
    }

    /// Pairwise classification agrees with a brute-force oracle that uses
    /// point sampling for overlap and direct coordinate comparison for
    /// vertex/edge contacts.
    #[test]
    fn conformity_matches_brute_force_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);

        // A conforming grid plus deliberate defects.
        let mesh = structured_grid(0.0, 0.0, 1.0, 1.0, 0.2).unwrap();
        assert!(mesh.n_triangles() <= 50);
        let fast: BTreeSet<_> = conformity_defects(&mesh)
            .into_iter()
            .map(|(a, b, _)| (a, b))
            .collect();

        // Oracle: all pairs, overlap detected by sampling points of one
        // triangle strictly inside the other.
        let mut oracle = BTreeSet::new();
        let n = mesh.n_triangles();
        for a in 0..n {
            for b in (a + 1)..n {
                let pa = mesh.tri_points(a);
                let pb = mesh.tri_points(b);
                let mut overlap = false;
                for _ in 0..2000 {
                    let (r1, r2): (f64, f64) = (rng.gen(), rng.gen());
                    let (r1, r2) = if r1 + r2 > 1.0 {
                        (1.0 - r1, 1.0 - r2)
                    } else {
                        (r1, r2)
                    };
                    let p = pa[0] + (pa[1] - pa[0]) * r1 + (pa[2] - pa[0]) * r2;
                    let strictly_in = |tri: &[Point2; 3]| {
                        let margin = 1e-9;
                        (0..3).all(|i| {
                            let e = tri[(i + 1) % 3] - tri[i];
                            e.cross(p - tri[i]) > margin
                        })
                    };
                    if strictly_in(&pb) {
                        overlap = true;
                        break;
                    }
                }
                if overlap {
                    oracle.insert((a, b));
                }
            }
        }
        // The grid is conforming: neither path reports overlap defects.
        assert!(fast.is_empty());
        assert!(oracle.is_empty());

        // Classification is symmetric and matches the index-based oracle on
        // every pair (the grid has no duplicate coordinates, so shared
        // indices are exactly shared geometry).
        let n = mesh.n_triangles();
        for a in 0..n {
            for b in (a + 1)..n {
                let pa = mesh.tri_points(a);
                let pb = mesh.tri_points(b);
                let tol = 1e-9 * 0.4;
                let ab = classify_pair(&pa, &pb, tol);
                let ba = classify_pair(&pb, &pa, tol);
                assert_eq!(ab, ba, "asymmetric classification for ({a}, {b})");
                let sa: BTreeSet<usize> = mesh.triangle(a).v.iter().cloned().collect();
                let sb: BTreeSet<usize> = mesh.triangle(b).v.iter().cloned().collect();
                let expected = match sa.intersection(&sb).count() {
                    0 => PairRelation::Disjoint,
                    1 => PairRelation::SharedVertex,
                    2 => PairRelation::SharedEdge,
                    _ => unreachable!("duplicate triangles in a grid"),
                };
                assert_eq!(ab, expected, "pair ({a}, {b})");
            }
        }

        // Now place one overlapping triangle over the grid and re-check that
        // both paths agree on which pairs conflict.
        let mut verts: Vec<Point2> = mesh.vertices().to_vec();
        let base = verts.len();
        verts.push(Point2::new(0.31, 0.31));
        verts.push(Point2::new(0.49, 0.33));
        verts.push(Point2::new(0.35, 0.47));
        let mut tris = mesh.triangles().to_vec();
        tris.push(Triangle::new(base, base + 1, base + 2));
        let bad = Mesh2::new(verts, tris).unwrap();

        let fast: BTreeSet<_> = conformity_defects(&bad)
            .into_iter()
            .map(|(a, b, _)| (a, b))
            .collect();
        let mut oracle = BTreeSet::new();
        let n = bad.n_triangles();
        for a in 0..n {
            for b in (a + 1)..n {
                let pa = bad.tri_points(a);
                let pb = bad.tri_points(b);
                let inter = crate::geometry::polygon::clip_by_convex(&pa, &pb);
                let area = crate::geometry::polygon::signed_area(&inter).abs();
                if area > 1e-12 {
                    oracle.insert((a, b));
                }
            }
        }
        assert_eq!(fast, oracle);
    }
}
