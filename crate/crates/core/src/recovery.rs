//! Explicit recovery construction for a straight crack: a crack-adapted strip
//! triangulation plus side-resolved Lagrange interpolation, and the
//! certificate comparing its energy against the limit surface energy
//! `kappa * sin(theta0) * crack length`.
//!
//! The strip triangle is the unique (up to reflection) admissible triangle of
//! minimal height `eps sin(theta0)` with all edges at least `eps`: isoceles
//! with slant edges exactly `eps`, base `2 eps cos(theta0)` and base angles
//! exactly `theta0`. A strip of such triangles per unit crack length has area
//! `eps sin(theta0)`, which reproduces the sharp limit constant; any taller
//! strip overshoots the surface energy. Away from the strip the mesh coarsens
//! by doubling rows (1:2 transitions of right-isoceles triangles), all
//! certified by the validator rather than by construction.

use crate::algebra::{Mat2, Vec2};
use crate::elasticity::{DisplacementField, HookeTensor};
use crate::energy::{damage_from_threshold, two_field_energy, EnergyBreakdown};
use crate::geometry::{
    validate_admissible, AdmissibilityParams, DomainPolygon, DomainRole, Mesh2, Point2, Triangle,
};
use crate::{Error, Result};

/// A straight crack segment with side traces.
#[derive(Debug, Clone, PartialEq)]
pub struct CrackSegment {
    pub p: Point2,
    pub q: Point2,
    /// Trace on the side `(. - p) . nu < 0`.
    pub a_minus: Vec2,
    /// Trace on the side `(. - p) . nu > 0`.
    pub a_plus: Vec2,
    /// Unit normal, perpendicular to `q - p`.
    pub nu: Vec2,
}

impl CrackSegment {
    /// Normal defaults to the left-hand normal of `q - p`.
    pub fn new(p: Point2, q: Point2, a_minus: Vec2, a_plus: Vec2) -> Result<Self> {
        let dir = (q - p)
            .normalized()
            .ok_or_else(|| Error::InvalidParams("crack endpoints coincide".into()))?;
        Ok(CrackSegment {
            p,
            q,
            a_minus,
            a_plus,
            nu: dir.perp(),
        })
    }

    pub fn length(&self) -> f64 {
        (self.q - self.p).norm()
    }

    pub fn direction(&self) -> Vec2 {
        (self.q - self.p).normalized().expect("validated")
    }

    /// Signed distance of a point to the crack line, positive on the `+` side.
    pub fn side_of(&self, z: Point2) -> f64 {
        (z - self.p).dot(self.nu)
    }

    /// Jump vector `a_plus - a_minus`.
    pub fn jump(&self) -> Vec2 {
        self.a_plus - self.a_minus
    }

    pub fn transformed(&self, rotation_rad: f64, translation: Vec2) -> CrackSegment {
        let rot = Mat2::new(
            rotation_rad.cos(),
            -rotation_rad.sin(),
            rotation_rad.sin(),
            rotation_rad.cos(),
        );
        let map = |p: Point2| Point2::ZERO + (rot.mul_vec(p.to_vec()) + translation);
        CrackSegment {
            p: map(self.p),
            q: map(self.q),
            a_minus: self.a_minus,
            a_plus: self.a_plus,
            nu: rot.mul_vec(self.nu),
        }
    }
}

/// Smooth closed form on each side of a crack.
#[derive(Debug, Clone, PartialEq)]
pub enum SideFn {
    Constant(Vec2),
    Affine { m: Mat2, c: Vec2 },
}

impl SideFn {
    pub fn eval(&self, p: Point2) -> Vec2 {
        match self {
            SideFn::Constant(v) => *v,
            SideFn::Affine { m, c } => m.mul_vec(p.to_vec()) + *c,
        }
    }
}

/// A field smooth on each side of a single crack.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseSmoothField {
    pub crack: CrackSegment,
    pub below: SideFn,
    pub above: SideFn,
}

impl PiecewiseSmoothField {
    pub fn step(crack: CrackSegment) -> Self {
        let below = SideFn::Constant(crack.a_minus);
        let above = SideFn::Constant(crack.a_plus);
        PiecewiseSmoothField {
            crack,
            below,
            above,
        }
    }
}

/// Result of the strip construction.
#[derive(Debug, Clone)]
pub struct StripBuild {
    pub mesh: Mesh2,
    /// All strip triangles (the crack passes through their interiors).
    pub strip: Vec<usize>,
    /// Strip triangles whose horizontal extent lies inside the domain; on
    /// these the accounting identity `(kappa/eps) sum |T| = kappa sin(theta0)
    /// * covered length` is exact.
    pub strip_interior: Vec<usize>,
    /// `sum over crack-meeting strip triangles of |T|/eps - sin(theta0) *
    /// crack length`: the O(eps) end correction.
    pub end_correction: f64,
    /// Minimum distance from any mesh vertex to the crack line
    /// (`eps sin(theta0) / 2` by construction).
    pub min_vertex_crack_distance: f64,
}

/// Axis-aligned rectangle domain for the builder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn unit() -> Self {
        Rect {
            x0: 0.0,
            y0: 0.0,
            x1: 1.0,
            y1: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn to_polygon(&self, role: DomainRole) -> Result<DomainPolygon> {
        DomainPolygon::rectangle(self.x0, self.y0, self.x1, self.y1, role)
    }
}

struct RowBuilder {
    vertices: Vec<Point2>,
    triangles: Vec<Triangle>,
}

impl RowBuilder {
    fn row(&mut self, x_left: f64, spacing: f64, count: usize, y: f64) -> Vec<usize> {
        (0..=count)
            .map(|j| {
                let id = self.vertices.len();
                self.vertices.push(Point2::new(x_left + j as f64 * spacing, y));
                id
            })
            .collect()
    }

    /// 1:2 transition band: `fine` has `2m` intervals, `coarse` has `m`,
    /// both starting at the same x. Right-isoceles pattern, valid in either
    /// vertical direction (Mesh2 normalizes orientation).
    fn transition(&mut self, fine: &[usize], coarse: &[usize]) {
        let m = coarse.len() - 1;
        debug_assert_eq!(fine.len() - 1, 2 * m);
        for k in 0..m {
            self.triangles
                .push(Triangle::new(fine[2 * k], fine[2 * k + 1], coarse[k]));
            self.triangles
                .push(Triangle::new(fine[2 * k + 1], coarse[k + 1], coarse[k]));
            self.triangles
                .push(Triangle::new(fine[2 * k + 1], fine[2 * k + 2], coarse[k + 1]));
        }
    }

    /// Uniform band of squares split into right-isoceles pairs.
    fn uniform(&mut self, a: &[usize], b: &[usize]) {
        debug_assert_eq!(a.len(), b.len());
        for i in 0..a.len() - 1 {
            self.triangles.push(Triangle::new(a[i], a[i + 1], b[i + 1]));
            self.triangles.push(Triangle::new(a[i], b[i + 1], b[i]));
        }
    }
}

/// Builds the crack-adapted mesh for a full-width horizontal crack at height
/// `y_c` inside the rectangle: a strip of height `eps sin(theta0)` centered
/// on the crack, tiled by alternating extremal isoceles triangles whose
/// vertices all sit on the strip boundary lines (never on the crack), graded
/// to a coarse background by doubling rows. The whole mesh is validated
/// before being returned.
pub fn build_strip_mesh(
    rect: &Rect,
    y_c: f64,
    params: &AdmissibilityParams,
) -> Result<StripBuild> {
    let eps = params.eps;
    let theta0 = params.theta0_rad();
    let h = eps * theta0.sin();
    let b = 2.0 * eps * theta0.cos();
    let width = rect.width();
    if width <= 0.0 || rect.y1 - rect.y0 <= 0.0 {
        return Err(Error::StripConstruction("degenerate rectangle".into()));
    }
    if y_c - h / 2.0 < rect.y0 || y_c + h / 2.0 > rect.y1 {
        return Err(Error::StripConstruction(format!(
            "strip of height {h:.3e} centered at {y_c} does not fit in [{}, {}]",
            rect.y0, rect.y1
        )));
    }

    // Number of doublings until the background spacing reaches omega/2.
    let levels = ((params.omega / 2.0) / b).log2().floor().max(0.0) as u32;

    // Core bottom-row index range covering the domain width with margin.
    let n_core = (width / b).ceil() as i64 + 2; // BB with BA = -2
    let ba: i64 = -2;
    let bb: i64 = n_core;
    let x_bottom_left = rect.x0 + ba as f64 * b;
    let x_top_left = x_bottom_left - b / 2.0;

    // Extended interval counts, rounded up to a multiple of 2^levels so the
    // doubling rows nest.
    let round_up = |n: usize| -> usize {
        let m = 1usize << levels;
        n.div_ceil(m) * m
    };
    let core_bottom_intervals = (bb - ba) as usize;
    let core_top_intervals = core_bottom_intervals + 1;
    let bottom_intervals = round_up(core_bottom_intervals);
    let top_intervals = round_up(core_top_intervals);

    let mut builder = RowBuilder {
        vertices: Vec::new(),
        triangles: Vec::new(),
    };

    let y_bot = y_c - h / 2.0;
    let y_top = y_c + h / 2.0;
    let bottom_row = builder.row(x_bottom_left, b, bottom_intervals, y_bot);
    let top_row = builder.row(x_top_left, b, top_intervals, y_top);

    // Strip tiling over the core range.
    let mut strip = Vec::new();
    for i in 0..core_bottom_intervals {
        // Up-triangle: base on the bottom line, apex between top vertices.
        strip.push(builder.triangles.len());
        builder
            .triangles
            .push(Triangle::new(bottom_row[i], bottom_row[i + 1], top_row[i + 1]));
    }
    for j in 0..=core_bottom_intervals {
        // Down-triangle: base on the top line, apex on the bottom line.
        strip.push(builder.triangles.len());
        builder
            .triangles
            .push(Triangle::new(top_row[j], bottom_row[j], top_row[j + 1]));
    }

    // Graded rows above and below, then uniform rows past the boundary.
    let mut grade = |mut row: Vec<usize>, x_left: f64, mut y: f64, up: bool| {
        let dir = if up { 1.0 } else { -1.0 };
        let mut s = b;
        let mut intervals = row.len() - 1;
        for _ in 0..levels {
            let y_next = y + dir * s;
            let next = builder.row(x_left, 2.0 * s, intervals / 2, y_next);
            builder.transition(&row, &next);
            row = next;
            y = y_next;
            s *= 2.0;
            intervals /= 2;
        }
        let limit = if up { rect.y1 } else { rect.y0 };
        while (up && y < limit) || (!up && y > limit) {
            let y_next = y + dir * s;
            let next = builder.row(x_left, s, intervals, y_next);
            builder.uniform(&row, &next);
            row = next;
            y = y_next;
        }
    };
    grade(top_row, x_top_left, y_top, true);
    grade(bottom_row, x_bottom_left, y_bot, false);

    let mesh = Mesh2::new(builder.vertices, builder.triangles)?;

    // Vertex-crack separation: by construction every vertex sits on a strip
    // boundary line or farther, so the minimum is h/2.
    let mut min_dist = f64::INFINITY;
    for p in mesh.vertices() {
        min_dist = min_dist.min((p.y - y_c).abs());
    }
    if min_dist < h / 2.0 * (1.0 - 1e-9) {
        return Err(Error::StripConstruction(format!(
            "a vertex lies {min_dist:.3e} from the crack, below the guaranteed {:.3e}",
            h / 2.0
        )));
    }

    // Admissibility is a contract of the construction.
    let domain = rect.to_polygon(DomainRole::Inner)?;
    let report = validate_admissible(&mesh, params, &domain);
    if !report.is_admissible() {
        return Err(Error::StripConstruction(format!(
            "graded mesh fails admissibility: first violation {:?}",
            report.violations.first()
        )));
    }

    // Strip bookkeeping: interior triangles and the end correction.
    let tol = 1e-9 * eps;
    let mut strip_interior = Vec::new();
    let mut sum_meeting = crate::numeric::KahanSum::new();
    for &t in &strip {
        let pts = mesh.tri_points(t);
        let xs = [pts[0].x, pts[1].x, pts[2].x];
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo >= rect.x0 - tol && hi <= rect.x1 + tol {
            strip_interior.push(t);
        }
        if hi > rect.x0 + tol && lo < rect.x1 - tol {
            // Meets the open crack segment.
            let area = 0.5 * (pts[1] - pts[0]).cross(pts[2] - pts[0]).abs();
            sum_meeting.add(area / eps);
        }
    }
    let end_correction = sum_meeting.value() - theta0.sin() * width;

    Ok(StripBuild {
        mesh,
        strip,
        strip_interior,
        end_correction,
        min_vertex_crack_distance: min_dist,
    })
}

/// Side-resolved Lagrange interpolation: vertices strictly above the crack
/// take the `+`-side value, strictly below the `-`-side value. Vertices on
/// the crack are an error (built meshes guarantee separation).
pub fn interpolate_piecewise(
    mesh: &Mesh2,
    field: &PiecewiseSmoothField,
) -> Result<DisplacementField> {
    let tol = 1e-12 * field.crack.length().max(1.0);
    let mut values = Vec::with_capacity(mesh.n_vertices());
    for (v, &p) in mesh.vertices().iter().enumerate() {
        let side = field.crack.side_of(p);
        if side.abs() <= tol {
            return Err(Error::VertexOnCrack {
                vertex: v,
                dist: side.abs(),
            });
        }
        values.push(if side > 0.0 {
            field.above.eval(p)
        } else {
            field.below.eval(p)
        });
    }
    Ok(DisplacementField(values))
}

/// One entry of a recovery sweep.
#[derive(Debug, Clone)]
pub struct RecoveryCertificate {
    pub eps: f64,
    pub energy: EnergyBreakdown,
    /// `kappa * sin(theta0) * crack length inside the domain`.
    pub target_surface: f64,
    pub target_bulk: f64,
    /// Relative deviation of the total energy from the target (absolute when
    /// the target vanishes).
    pub deviation: f64,
    pub n_triangles: usize,
    pub n_damaged: usize,
}

/// Builds the strip mesh, interpolates the step function and evaluates the
/// brittle energy for each `eps` of the sweep. Deviations against the
/// Gamma-limit target decrease along the sweep.
pub fn gamma_certificate(
    rect: &Rect,
    crack: &CrackSegment,
    eps_sweep: &[f64],
    omega_factor: f64,
    theta0_deg: f64,
    a: &HookeTensor,
    kappa: f64,
) -> Result<Vec<RecoveryCertificate>> {
    let dir = crack.direction();
    if dir.y.abs() > 1e-12 {
        return Err(Error::InvalidParams(
            "the strip builder supports axis-aligned horizontal cracks; rotate the configuration instead".into(),
        ));
    }
    let y_c = crack.p.y;
    let mut out = Vec::with_capacity(eps_sweep.len());
    for &eps in eps_sweep {
        let params = AdmissibilityParams::new(eps, omega_factor * eps, theta0_deg)?;
        let build = build_strip_mesh(rect, y_c, &params)?;
        let field = PiecewiseSmoothField::step(crack.clone());
        let u = interpolate_piecewise(&build.mesh, &field)?;
        let domain = rect.to_polygon(DomainRole::Inner)?;
        let chi = damage_from_threshold(&build.mesh, &u, &params, a, kappa)?;
        let energy = two_field_energy(&build.mesh, &u, &chi, &params, a, kappa, &domain)?;
        // A zero jump means no discontinuity at all: the limit has no
        // surface term and the target is zero.
        let crack_len = if crack.jump().norm() > 0.0 {
            crack.length()
        } else {
            0.0
        };
        let target_surface = kappa * params.sin_theta0() * crack_len;
        let target = target_surface; // step function has zero bulk target
        let deviation = if target > 0.0 {
            (energy.total - target).abs() / target
        } else {
            energy.total.abs()
        };
        out.push(RecoveryCertificate {
            eps,
            energy,
            target_surface,
            target_bulk: 0.0,
            deviation,
            n_triangles: build.mesh.n_triangles(),
            n_damaged: chi.n_damaged(),
        });
    }
    Ok(out)
}
