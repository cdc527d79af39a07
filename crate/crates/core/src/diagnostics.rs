//! Numerical counterparts of the slicing and compactness devices: the
//! convergence-in-measure metric, per-line counts of damaged triangles,
//! the two-family projection cover of a crack, and rigid-motion fitting for
//! comparing minimizers up to their gauge freedom.

use std::collections::BTreeMap;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::Vec2;
use crate::elasticity::DisplacementField;
use crate::energy::{DamageMask, PiecewiseField, TriAffine};
use crate::geometry::polygon::clip_by_convex;
use crate::geometry::{section, DomainPolygon, Mesh2, Point2, SliceFrame};
use crate::recovery::CrackSegment;
use crate::{Error, Result};

/// An infinitesimal rigid motion `r(x) = w (-x_2, x_1) + c`; its symmetric
/// gradient vanishes identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion2 {
    pub w: f64,
    pub c: Vec2,
}

impl RigidMotion2 {
    pub fn eval(&self, x: Point2) -> Vec2 {
        Vec2::new(-self.w * x.y + self.c.x, self.w * x.x + self.c.y)
    }
}

/// Degree-5 quadrature on a triangle (7 points, Radon).
const QUAD7: [(f64, f64, f64); 7] = [
    (1.0 / 3.0, 1.0 / 3.0, 0.225),
    (0.059715871789770, 0.470142064105115, 0.132394152788506),
    (0.470142064105115, 0.059715871789770, 0.132394152788506),
    (0.470142064105115, 0.470142064105115, 0.132394152788506),
    (0.797426985353087, 0.101286507323456, 0.125939180544827),
    (0.101286507323456, 0.797426985353087, 0.125939180544827),
    (0.101286507323456, 0.101286507323456, 0.125939180544827),
];

fn quad7_capped(tri: &[Point2; 3], d: &TriAffine, m_cap: f64) -> f64 {
    let area = 0.5 * (tri[1] - tri[0]).cross(tri[2] - tri[0]).abs();
    let mut acc = 0.0;
    for &(l1, l2, w) in &QUAD7 {
        let l0 = 1.0 - l1 - l2;
        let p = Point2::new(
            l0 * tri[0].x + l1 * tri[1].x + l2 * tri[2].x,
            l0 * tri[0].y + l1 * tri[1].y + l2 * tri[2].y,
        );
        acc += w * d.eval(p).norm().min(m_cap);
    }
    acc * area
}

/// Exact minimum of `|G x + c|` over a (closed) triangle: convex program
/// solved through the unconstrained critical point and the edge minimizers.
fn min_norm_affine(tri: &[Point2; 3], d: &TriAffine) -> f64 {
    let mut best = f64::INFINITY;
    // Unconstrained critical point of |Gx + c|^2: G^T G x = -G^T c.
    let g = d.grad;
    let gtg = [
        [
            g.m[0][0] * g.m[0][0] + g.m[1][0] * g.m[1][0],
            g.m[0][0] * g.m[0][1] + g.m[1][0] * g.m[1][1],
        ],
        [
            g.m[0][0] * g.m[0][1] + g.m[1][0] * g.m[1][1],
            g.m[0][1] * g.m[0][1] + g.m[1][1] * g.m[1][1],
        ],
    ];
    let gtc = [
        g.m[0][0] * d.offset.x + g.m[1][0] * d.offset.y,
        g.m[0][1] * d.offset.x + g.m[1][1] * d.offset.y,
    ];
    let det = gtg[0][0] * gtg[1][1] - gtg[0][1] * gtg[1][0];
    let scale = gtg[0][0].abs() + gtg[1][1].abs();
    if det.abs() > 1e-14 * scale * scale {
        let x = Point2::new(
            (-gtc[0] * gtg[1][1] + gtc[1] * gtg[0][1]) / det,
            (-gtc[1] * gtg[0][0] + gtc[0] * gtg[1][0]) / det,
        );
        let inside = (0..3).all(|i| {
            let e = tri[(i + 1) % 3] - tri[i];
            e.cross(x - tri[i]) >= 0.0
        });
        if inside {
            best = best.min(d.eval(x).norm());
        }
    }
    for i in 0..3 {
        let p = tri[i];
        let q = tri[(i + 1) % 3];
        let dp = d.eval(p);
        let ge = d.grad.mul_vec(q - p);
        let denom = ge.norm2();
        let t = if denom > 0.0 {
            (-dp.dot(ge) / denom).clamp(0.0, 1.0)
        } else {
            0.0
        };
        best = best.min((dp + ge * t).norm());
        best = best.min(dp.norm());
    }
    best
}

fn integrate_capped(tri: &[Point2; 3], d: &TriAffine, m_cap: f64, depth: u32) -> f64 {
    let area = 0.5 * (tri[1] - tri[0]).cross(tri[2] - tri[0]).abs();
    if area == 0.0 {
        return 0.0;
    }
    let lo = min_norm_affine(tri, d);
    if lo >= m_cap {
        // Saturated: exactly M * |T|.
        return m_cap * area;
    }
    // |d| is convex, so its maximum sits at a vertex.
    let hi = tri
        .iter()
        .map(|&p| d.eval(p).norm())
        .fold(0.0f64, f64::max);
    let straddles = hi > m_cap;
    let kinky = lo == 0.0 && hi > 0.0;
    if depth == 0 || !(straddles || kinky) {
        return quad7_capped(tri, d, m_cap);
    }
    // Refine around the level set (or the zero locus of d) by midpoint
    // subdivision.
    let m01 = Point2::new(0.5 * (tri[0].x + tri[1].x), 0.5 * (tri[0].y + tri[1].y));
    let m12 = Point2::new(0.5 * (tri[1].x + tri[2].x), 0.5 * (tri[1].y + tri[2].y));
    let m20 = Point2::new(0.5 * (tri[2].x + tri[0].x), 0.5 * (tri[2].y + tri[0].y));
    [
        [tri[0], m01, m20],
        [m01, tri[1], m12],
        [m20, m12, tri[2]],
        [m01, m12, m20],
    ]
    .iter()
    .map(|sub| integrate_capped(sub, d, m_cap, depth - 1))
    .sum()
}

/// The convergence-in-measure distance `d_M(u, v) = integral over Omega of
/// min(M, |u - v|)`.
///
/// The integrand is exact; quadrature error comes only from leaves touching
/// the level set `{|u - v| = M}` (or the zero locus of `u - v`), which are
/// subdivided adaptively before a degree-5 rule is applied. Tests certify the
/// result against a Monte-Carlo oracle.
pub fn distance_in_measure(
    u: &PiecewiseField,
    v: &PiecewiseField,
    mesh: &Mesh2,
    m_cap: f64,
    domain: &DomainPolygon,
) -> Result<f64> {
    if u.len() != v.len() || u.len() != mesh.n_triangles() {
        return Err(Error::MeshMismatch {
            a: u.len(),
            b: v.len(),
        });
    }
    if !(m_cap > 0.0) {
        return Err(Error::InvalidParams(format!(
            "cap M must be positive, got {m_cap}"
        )));
    }
    let mut total = crate::numeric::KahanSum::new();
    for t in 0..mesh.n_triangles() {
        let d = TriAffine {
            grad: u.per_tri[t].grad - v.per_tri[t].grad,
            offset: u.per_tri[t].offset - v.per_tri[t].offset,
        };
        let pts = mesh.tri_points(t);
        let clipped = clip_by_convex(domain.vertices(), &pts);
        if clipped.len() < 3 {
            continue;
        }
        // Fan triangulation of the clipped region; pieces are contained in
        // the convex triangle, so signed areas keep overlaps consistent.
        for i in 1..clipped.len() - 1 {
            let sub = [clipped[0], clipped[i], clipped[i + 1]];
            let signed = 0.5 * (sub[1] - sub[0]).cross(sub[2] - sub[0]);
            if signed.abs() < 1e-30 {
                continue;
            }
            let piece = integrate_capped(&sub, &d, m_cap, 6);
            total.add(if signed >= 0.0 { piece } else { -piece });
        }
    }
    Ok(total.value())
}

/// Per-line counts of damaged triangles crossed by slices along `xi`.
#[derive(Debug, Clone)]
pub struct SliceReport {
    pub nu: Vec2,
    pub xi: Vec2,
    /// Whether the slicing-frame constraint `nu . xi >= 1/2` holds. The
    /// frame itself only forces `nu . xi != 0`; the diagnostics report the
    /// stronger condition instead of rejecting the frame.
    pub frame_constraint_ok: bool,
    /// Crack-coordinate of each sampled base point.
    pub line_positions: Vec<f64>,
    /// Damaged triangles with nonempty open section per line.
    pub counts: Vec<usize>,
    pub histogram: BTreeMap<usize, usize>,
    pub frac_ge1: f64,
    pub frac_ge2: f64,
}

/// Projects a point along `xi` onto the crack line and returns its crack
/// coordinate (arc length from `crack.p`).
pub fn project_onto_crack(z: Point2, crack: &CrackSegment, xi: Vec2) -> Result<f64> {
    let den = xi.dot(crack.nu);
    if den.abs() < 1e-12 {
        return Err(Error::ParallelProjection { dot: den });
    }
    let s = -(z - crack.p).dot(crack.nu) / den;
    let hit = z + xi * s;
    Ok((hit - crack.p).dot(crack.direction()))
}

/// Projection interval of a triangle on the crack line: the image of its
/// interior under the oblique projection along `xi` is the open interval.
pub fn crack_interval(tri: &[Point2; 3], crack: &CrackSegment, xi: Vec2) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &p in tri {
        let t = project_onto_crack(p, crack, xi)?;
        lo = lo.min(t);
        hi = hi.max(t);
    }
    Ok((lo, hi))
}

/// Stratified sample positions along the crack, jittered away from the
/// degenerate base points whose slicing line meets a damaged-triangle vertex.
fn sample_positions(
    mesh: &Mesh2,
    chi: &DamageMask,
    crack: &CrackSegment,
    xi: Vec2,
    n_lines: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let len = crack.length();
    let mut degenerate: Vec<f64> = Vec::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if !chi.0[t] {
            continue;
        }
        for &v in &tri.v {
            degenerate.push(project_onto_crack(mesh.vertex(v), crack, xi)?);
        }
    }
    degenerate.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let stratum = len / n_lines as f64;
    let tol = 1e-7 * stratum;
    let is_degenerate = |t: f64| -> bool {
        let i = degenerate.partition_point(|&d| d < t - tol);
        i < degenerate.len() && degenerate[i] <= t + tol
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_lines);
    for i in 0..n_lines {
        let mid = (i as f64 + 0.5) * stratum;
        let mut t = mid + rng.gen_range(-0.45..0.45) * stratum;
        let mut tries = 0;
        while is_degenerate(t) && tries < 100 {
            t = mid + rng.gen_range(-0.45..0.45) * stratum;
            tries += 1;
        }
        out.push(t);
    }
    Ok(out)
}

/// Counts, per sampled crack line, the damaged triangles whose open interior
/// is crossed by the line `y + R xi`.
pub fn slice_count(
    mesh: &Mesh2,
    chi: &DamageMask,
    frame: &SliceFrame,
    crack: &CrackSegment,
    n_lines: usize,
    seed: u64,
) -> Result<SliceReport> {
    chi.check_against(mesh)?;
    if n_lines == 0 {
        return Err(Error::InvalidParams("n_lines must be positive".into()));
    }
    let xi = frame.xi();
    let positions = sample_positions(mesh, chi, crack, xi, n_lines, seed)?;
    let dir = crack.direction();
    // Prune by projection interval before running the exact section test.
    let intervals: Vec<(usize, (f64, f64))> = (0..mesh.n_triangles())
        .filter(|&t| chi.0[t])
        .map(|t| Ok((t, crack_interval(&mesh.tri_points(t), crack, xi)?)))
        .collect::<Result<_>>()?;
    let mut counts = Vec::with_capacity(n_lines);
    for &t in &positions {
        let y = crack.p + dir * t;
        let mut count = 0;
        for &(tri, (lo, hi)) in &intervals {
            if t <= lo || t >= hi {
                continue;
            }
            if section(&mesh.tri_points(tri), y, xi).interior_nonempty {
                count += 1;
            }
        }
        counts.push(count);
    }
    let mut histogram = BTreeMap::new();
    for &c in &counts {
        *histogram.entry(c).or_insert(0usize) += 1;
    }
    let n = counts.len() as f64;
    let frac_ge1 = counts.iter().filter(|&&c| c >= 1).count() as f64 / n;
    let frac_ge2 = counts.iter().filter(|&&c| c >= 2).count() as f64 / n;
    Ok(SliceReport {
        nu: frame.nu(),
        xi,
        frame_constraint_ok: frame.nu().dot(xi) >= 0.5,
        line_positions: positions,
        counts,
        histogram,
        frac_ge1,
        frac_ge2,
    })
}

/// Two disjoint families of damaged triangles, each projecting onto (almost)
/// the whole crack.
#[derive(Debug, Clone)]
pub struct TwoFamilyCoverage {
    pub family1: Vec<usize>,
    pub family2: Vec<usize>,
    /// Length of `Phi(p_xi(family_i)) ∩ crack` per family.
    pub covered1: f64,
    pub covered2: f64,
    /// Sample points skipped because fewer than two damaged triangles were
    /// crossed (the report is partial when nonzero).
    pub skipped: usize,
}

/// Greedy realization of the two-family construction: walks the sampled
/// crack points in increasing order, picks per point the pair of crossed
/// damaged triangles with minimal projection overlap, and maintains two
/// disjoint families that keep covering every visited point.
pub fn two_family_coverage(
    mesh: &Mesh2,
    chi: &DamageMask,
    frame: &SliceFrame,
    crack: &CrackSegment,
    n_points: usize,
    seed: u64,
) -> Result<TwoFamilyCoverage> {
    chi.check_against(mesh)?;
    let xi = frame.xi();
    let mut positions = sample_positions(mesh, chi, crack, xi, n_points, seed)?;
    positions.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let dir = crack.direction();

    let damaged: Vec<usize> = (0..mesh.n_triangles()).filter(|&t| chi.0[t]).collect();
    let proj: BTreeMap<usize, (f64, f64)> = damaged
        .iter()
        .map(|&t| Ok((t, crack_interval(&mesh.tri_points(t), crack, xi)?)))
        .collect::<Result<_>>()?;

    let mut fam: [std::collections::BTreeSet<usize>; 2] = Default::default();
    // Walk index at which each triangle was first crossed.
    let mut first_seen: BTreeMap<usize, usize> = BTreeMap::new();
    let mut skipped = 0usize;

    for (idx, &t_pos) in positions.iter().enumerate() {
        let y = crack.p + dir * t_pos;
        let mut crossed: Vec<usize> = Vec::new();
        for &t in &damaged {
            let (lo, hi) = proj[&t];
            if t_pos <= lo || t_pos >= hi {
                continue;
            }
            if section(&mesh.tri_points(t), y, xi).interior_nonempty {
                crossed.push(t);
            }
        }
        for &t in &crossed {
            first_seen.entry(t).or_insert(idx);
        }
        if crossed.len() < 2 {
            skipped += 1;
            continue;
        }
        // Minimal-overlap pair of distinct crossed triangles.
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..crossed.len() {
            for j in (i + 1)..crossed.len() {
                let (a_lo, a_hi) = proj[&crossed[i]];
                let (b_lo, b_hi) = proj[&crossed[j]];
                let overlap = (a_hi.min(b_hi) - a_lo.max(b_lo)).max(0.0);
                if best.is_none() || overlap < best.unwrap().0 {
                    best = Some((overlap, crossed[i], crossed[j]));
                }
            }
        }
        let (_, t1, t2) = best.expect("at least one pair");

        let in_fam = |fam: &[std::collections::BTreeSet<usize>; 2], t: usize| -> Option<usize> {
            if fam[0].contains(&t) {
                Some(0)
            } else if fam[1].contains(&t) {
                Some(1)
            } else {
                None
            }
        };
        match (in_fam(&fam, t1), in_fam(&fam, t2)) {
            (None, None) => {
                fam[0].insert(t1);
                fam[1].insert(t2);
            }
            (Some(q), None) => {
                fam[1 - q].insert(t2);
            }
            (None, Some(q)) => {
                fam[1 - q].insert(t1);
            }
            (Some(q1), Some(q2)) if q1 != q2 => {
                // Already covered by opposite families.
            }
            (Some(q), Some(_)) => {
                // Both sit in the same family: move the later-crossed one so
                // the earlier points stay covered within this family.
                let move_t = if first_seen[&t1] >= first_seen[&t2] { t1 } else { t2 };
                fam[q].remove(&move_t);
                fam[1 - q].insert(move_t);
            }
        }
    }

    debug_assert!(fam[0].is_disjoint(&fam[1]));
    let covered = |set: &std::collections::BTreeSet<usize>| -> f64 {
        let len = crack.length();
        let mut ivs: Vec<(f64, f64)> = set
            .iter()
            .map(|t| {
                let (lo, hi) = proj[t];
                (lo.max(0.0), hi.min(len))
            })
            .filter(|&(lo, hi)| hi > lo)
            .collect();
        ivs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut total = 0.0;
        let mut cur: Option<(f64, f64)> = None;
        for (lo, hi) in ivs {
            match cur {
                None => cur = Some((lo, hi)),
                Some((clo, chi_)) => {
                    if lo <= chi_ {
                        cur = Some((clo, chi_.max(hi)));
                    } else {
                        total += chi_ - clo;
                        cur = Some((lo, hi));
                    }
                }
            }
        }
        if let Some((clo, chi_)) = cur {
            total += chi_ - clo;
        }
        total
    };
    Ok(TwoFamilyCoverage {
        covered1: covered(&fam[0]),
        covered2: covered(&fam[1]),
        family1: fam[0].iter().cloned().collect(),
        family2: fam[1].iter().cloned().collect(),
        skipped,
    })
}

/// Least-squares rigid motion fit on a vertex subset.
#[derive(Debug, Clone)]
pub struct RigidFit {
    pub motion: RigidMotion2,
    /// Root sum of squared residuals over the component's vertices.
    pub residual: f64,
}

/// Fits `u - v ~ r` over the vertices of `component` in the least-squares
/// sense. Errors when the normal equations are singular (fewer than two
/// distinct vertices).
pub fn fit_rigid(
    mesh: &Mesh2,
    u: &DisplacementField,
    v: &DisplacementField,
    component: &[usize],
) -> Result<RigidFit> {
    u.check_against(mesh)?;
    v.check_against(mesh)?;
    if component.len() < 2 {
        return Err(Error::CollinearComponent);
    }
    let mut ata: Matrix3<f64> = Matrix3::zeros();
    let mut atb: Vector3<f64> = Vector3::zeros();
    for &vi in component {
        if vi >= mesh.n_vertices() {
            return Err(Error::IndexOutOfBounds {
                index: vi,
                len: mesh.n_vertices(),
            });
        }
        let x = mesh.vertex(vi);
        let d = u.0[vi] - v.0[vi];
        // Rows of the model matrix for theta = (w, cx, cy).
        let rows = [[-x.y, 1.0, 0.0], [x.x, 0.0, 1.0]];
        let rhs = [d.x, d.y];
        for (row, &r) in rows.iter().zip(rhs.iter()) {
            for i in 0..3 {
                for j in 0..3 {
                    ata[(i, j)] += row[i] * row[j];
                }
                atb[i] += row[i] * r;
            }
        }
    }
    let scale: f64 = f64::max(ata.norm(), 1e-300);
    if ata.determinant().abs() <= 1e-12 * scale * scale * scale {
        return Err(Error::CollinearComponent);
    }
    let theta = ata.lu().solve(&atb).ok_or(Error::CollinearComponent)?;
    let motion = RigidMotion2 {
        w: theta[0],
        c: Vec2::new(theta[1], theta[2]),
    };
    let mut res2 = 0.0;
    for &vi in component {
        let d = u.0[vi] - v.0[vi] - motion.eval(mesh.vertex(vi));
        res2 += d.norm2();
    }
    Ok(RigidFit {
        motion,
        residual: res2.sqrt(),
    })
}
