//! P1 element kinematics, Hooke tensors and dissipation profiles.

use nalgebra::{Matrix3, Vector3};

use crate::algebra::{Mat2, Vec2};
use crate::geometry::Mesh2;
use crate::{Error, Result};

/// A symmetric 2x2 matrix (linearized strain).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMatrix2 {
    pub e11: f64,
    pub e22: f64,
    pub e12: f64,
}

impl SymMatrix2 {
    pub const ZERO: SymMatrix2 = SymMatrix2 {
        e11: 0.0,
        e22: 0.0,
        e12: 0.0,
    };

    pub fn new(e11: f64, e22: f64, e12: f64) -> Self {
        SymMatrix2 { e11, e22, e12 }
    }

    /// Frobenius inner product `self : other` (the off-diagonal counts twice).
    pub fn dot(self, o: SymMatrix2) -> f64 {
        self.e11 * o.e11 + self.e22 * o.e22 + 2.0 * self.e12 * o.e12
    }

    /// Squared Frobenius norm.
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    /// Coordinates in the orthonormal basis `(e11, e22, sqrt(2) e12)`.
    pub fn to_voigt(self) -> Vector3<f64> {
        Vector3::new(self.e11, self.e22, std::f64::consts::SQRT_2 * self.e12)
    }

    pub fn from_voigt(v: Vector3<f64>) -> Self {
        SymMatrix2::new(v[0], v[1], v[2] / std::f64::consts::SQRT_2)
    }
}

/// A symmetric fourth-order tensor acting on symmetric 2x2 matrices, stored
/// as a 3x3 symmetric matrix in the orthonormal basis `(e11, e22, sqrt(2)
/// e12)`. In that basis the matrix eigenvalues are exactly the ellipticity
/// constants `alpha <= A xi : xi / |xi|^2 <= beta`.
#[derive(Debug, Clone)]
pub struct HookeTensor {
    voigt: Matrix3<f64>,
    alpha: f64,
    beta: f64,
}

impl HookeTensor {
    pub fn from_voigt(voigt: Matrix3<f64>) -> Result<Self> {
        let asym = (voigt - voigt.transpose()).norm();
        if asym > 1e-12 * (1.0 + voigt.norm()) {
            return Err(Error::InvalidParams(
                "Hooke tensor matrix must be symmetric".into(),
            ));
        }
        let eig = nalgebra::SymmetricEigen::new(voigt);
        let alpha = eig.eigenvalues.min();
        let beta = eig.eigenvalues.max();
        if !(alpha > 0.0) {
            return Err(Error::InvalidParams(format!(
                "Hooke tensor must be positive definite (min eigenvalue {alpha:.3e})"
            )));
        }
        Ok(HookeTensor { voigt, alpha, beta })
    }

    /// The identity tensor: `A e = e`, energy density `|e|^2`.
    pub fn identity() -> Self {
        HookeTensor::from_voigt(Matrix3::identity()).expect("identity is positive definite")
    }

    /// `A e = c e` for a positive constant `c`.
    pub fn scaled(c: f64) -> Result<Self> {
        HookeTensor::from_voigt(Matrix3::identity() * c)
    }

    /// Isotropic tensor `A e = 2 mu e + lambda tr(e) I`.
    pub fn lame(lambda: f64, mu: f64) -> Result<Self> {
        let m = Matrix3::new(
            2.0 * mu + lambda,
            lambda,
            0.0,
            lambda,
            2.0 * mu + lambda,
            0.0,
            0.0,
            0.0,
            2.0 * mu,
        );
        HookeTensor::from_voigt(m)
    }

    /// Smallest eigenvalue of the quadratic form.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Largest eigenvalue of the quadratic form.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn apply(&self, e: SymMatrix2) -> SymMatrix2 {
        SymMatrix2::from_voigt(self.voigt * e.to_voigt())
    }

    /// The quadratic form `A e : e`.
    pub fn energy_density(&self, e: SymMatrix2) -> f64 {
        let v = e.to_voigt();
        (self.voigt * v).dot(&v)
    }
}

/// Dissipation profile `f`: continuous, nondecreasing, `f(0) = 0`,
/// `f(t)/t -> 1` at zero and `f(t) -> kappa` at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DissipationProfile {
    /// `f(t) = min(t, kappa)`: brittle damage with threshold `kappa / eps`.
    BrittleMin { kappa: f64 },
    /// `f(t) = (2 kappa / pi) arctan(pi t / (2 kappa))`: the unique arctan
    /// rescaling with unit slope at zero and limit `kappa`.
    SmoothArctan { kappa: f64 },
}

impl DissipationProfile {
    pub fn kappa(&self) -> f64 {
        match *self {
            DissipationProfile::BrittleMin { kappa } => kappa,
            DissipationProfile::SmoothArctan { kappa } => kappa,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa() > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "kappa must be positive, got {}",
                self.kappa()
            )))
        }
    }
}

/// Evaluates the dissipation profile at `t >= 0`.
pub fn f_eval(f: &DissipationProfile, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::NegativeProfileArgument(t));
    }
    Ok(match *f {
        DissipationProfile::BrittleMin { kappa } => t.min(kappa),
        DissipationProfile::SmoothArctan { kappa } => {
            let c = 2.0 * kappa / std::f64::consts::PI;
            c * (t / c).atan()
        }
    })
}

/// A sandwich constant `K` in `(0, kappa)` with `f(t) >= min(K, (1-delta) t)`
/// for all `t >= 0`, found by bisecting the crossing of `f(t) = (1-delta) t`
/// (both shipped profiles are concave, so the feasible set is an interval).
pub fn sandwich_constant(f: &DissipationProfile, delta: f64) -> Result<f64> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::InvalidParams(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let kappa = f.kappa();
    let slope = 1.0 - delta;
    let holds = |t: f64| f_eval(f, t).unwrap() >= slope * t;
    // Expand to bracket the crossing; the line always wins past t =
    // kappa/(1-delta) since f <= kappa.
    let mut lo = 0.0f64;
    let mut hi = kappa / slope;
    while holds(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 * kappa {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * kappa {
            break;
        }
    }
    // t* = lo is the last point where f dominates the line; cap at kappa so
    // K = (1-delta) min(t*, kappa) < kappa strictly.
    Ok(slope * lo.min(kappa))
}

/// Per-vertex displacement values, indexed like the mesh vertex table.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField(pub Vec<Vec2>);

impl DisplacementField {
    pub fn zeros(n: usize) -> Self {
        DisplacementField(vec![Vec2::ZERO; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn check_against(&self, mesh: &Mesh2) -> Result<()> {
        if self.0.len() != mesh.n_vertices() {
            return Err(Error::FieldLengthMismatch {
                expected: mesh.n_vertices(),
                got: self.0.len(),
            });
        }
        if let Some(v) = self.0.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "displacement field has non-finite entry ({}, {})",
                v.x, v.y
            )));
        }
        Ok(())
    }
}

/// The constant gradient of a piecewise-affine field on triangle `t`.
/// Exact for affine data: if `u(x) = M x + c` at the vertices, the result is
/// `M`.
pub fn tri_gradient(mesh: &Mesh2, u: &DisplacementField, t: usize) -> Result<Mat2> {
    u.check_against(mesh)?;
    tri_gradient_unchecked(mesh, u, t)
}

/// Gradient without the field validation; per-triangle loops validate once
/// and then call this, keeping density assembly linear in the mesh size.
pub(crate) fn tri_gradient_unchecked(
    mesh: &Mesh2,
    u: &DisplacementField,
    t: usize,
) -> Result<Mat2> {
    let tri = mesh.triangle(t);
    let [a, b, c] = mesh.tri_points(t);
    let e1 = b - a;
    let e2 = c - a;
    let det = e1.cross(e2);
    let scale = e1.norm().max(e2.norm()).max(f64::MIN_POSITIVE);
    if det.abs() <= 1e-14 * scale * scale {
        return Err(Error::DegenerateTriangle {
            tri: t,
            area: 0.5 * det,
        });
    }
    let du1 = u.0[tri.v[1]] - u.0[tri.v[0]];
    let du2 = u.0[tri.v[2]] - u.0[tri.v[0]];
    // Solve grad * [e1 e2] = [du1 du2]: each gradient row is the transposed
    // edge-matrix inverse applied to that component's differences.
    let invt = Mat2::new(e2.y / det, -e1.y / det, -e2.x / det, e1.x / det);
    let row0 = invt.mul_vec(Vec2::new(du1.x, du2.x));
    let row1 = invt.mul_vec(Vec2::new(du1.y, du2.y));
    Ok(Mat2::new(row0.x, row0.y, row1.x, row1.y))
}

/// Symmetric part `(M + M^T) / 2` as a [`SymMatrix2`].
pub fn sym_grad(m: Mat2) -> SymMatrix2 {
    SymMatrix2::new(
        m.m[0][0],
        m.m[1][1],
        0.5 * (m.m[0][1] + m.m[1][0]),
    )
}

/// The quadratic form `A e : e` (nonnegative, sandwiched between
/// `alpha |e|^2` and `beta |e|^2`).
pub fn hooke_energy_density(a: &HookeTensor, e: SymMatrix2) -> f64 {
    a.energy_density(e)
}

/// Evaluates both sides of the gradient bound: the Frobenius norm of the P1
/// gradient on triangle `t`, and `(sqrt(5)/sin(theta_min))` times the largest
/// directional slope over the three edges, where `theta_min` is the
/// triangle's own minimum angle. For piecewise-affine fields the edge slope
/// equals the difference quotient of the vertex values.
pub fn gradient_bound_check(mesh: &Mesh2, u: &DisplacementField, t: usize) -> Result<(f64, f64)> {
    let grad = tri_gradient(mesh, u, t)?;
    let lhs = grad.frobenius_norm();
    let tri = mesh.triangle(t);
    let mut max_slope = 0.0f64;
    for i in 0..3 {
        let (vi, vj) = (tri.v[i], tri.v[(i + 1) % 3]);
        let dx = (mesh.vertex(vj) - mesh.vertex(vi)).norm();
        let du = (u.0[vj] - u.0[vi]).norm();
        max_slope = max_slope.max(du / dx);
    }
    let metrics = crate::geometry::triangle_metrics(mesh, t)?;
    let sin_min = metrics.min_angle_deg().to_radians().sin();
    let rhs = 5f64.sqrt() / sin_min * max_slope;
    Ok((lhs, rhs))
}
