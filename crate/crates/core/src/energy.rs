//! Assembly of the discrete energies, damage thresholding and crack-length
//! bookkeeping.
//!
//! For the brittle profile `f(t) = min(t, kappa)` the functional reduces to
//! `integral of (kappa/eps) min A e(u):e(u)`, which is what the capped
//! per-triangle density below computes. The two-field form splits the same
//! per-triangle contributions into bulk and surface parts, so the totals of
//! [`energy_f_eps`] and [`two_field_energy`] agree bit-for-bit when the mask
//! is the threshold mask.

use crate::algebra::{Mat2, Vec2};
use crate::elasticity::{
    f_eval, sym_grad, DisplacementField, DissipationProfile, HookeTensor,
};
use crate::geometry::{DomainPolygon, Mesh2, Point2};
use crate::geometry::AdmissibilityParams;
use crate::numeric::KahanSum;
use crate::{Error, Result};

/// Per-triangle damage indicator (`true` = damaged).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DamageMask(pub Vec<bool>);

impl DamageMask {
    pub fn all_false(n: usize) -> Self {
        DamageMask(vec![false; n])
    }

    pub fn all_true(n: usize) -> Self {
        DamageMask(vec![true; n])
    }

    pub fn n_damaged(&self) -> usize {
        self.0.iter().filter(|&&d| d).count()
    }

    pub fn check_against(&self, mesh: &Mesh2) -> Result<()> {
        if self.0.len() != mesh.n_triangles() {
            return Err(Error::MaskLengthMismatch {
                expected: mesh.n_triangles(),
                got: self.0.len(),
            });
        }
        Ok(())
    }
}

/// Energy split of a two-field (displacement, damage) state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `sum over undamaged T of |T ∩ Omega| A e(u):e(u)`.
    pub bulk: f64,
    /// `(kappa/eps) * sum over damaged T of |T ∩ Omega|`.
    pub surface: f64,
    pub total: f64,
    /// Damaged area divided by `eps * sin(theta0)`: the crack length the
    /// surface term accounts for at the limit constant.
    pub implied_crack_length: f64,
    /// `6 * implied_crack_length`: the jump-set perimeter bound
    /// `(6 / sin theta0) * damaged area / eps`.
    pub perimeter_bound: f64,
}

/// Clipped triangle areas `|T ∩ Omega|`, precomputed once per (mesh, domain)
/// pair. Energy assembly is called in hot loops (alternating minimization,
/// mesh optimization); clipping is not.
#[derive(Debug, Clone)]
pub struct ClippedAreas {
    areas: Vec<f64>,
    total: f64,
}

impl ClippedAreas {
    pub fn new(mesh: &Mesh2, domain: &DomainPolygon) -> Self {
        let mut total = KahanSum::new();
        let areas: Vec<f64> = (0..mesh.n_triangles())
            .map(|t| {
                let a = domain.intersection_area_with_triangle(&mesh.tri_points(t));
                total.add(a);
                a
            })
            .collect();
        ClippedAreas {
            areas,
            total: total.value(),
        }
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }
}

/// Per-triangle energy densities `A e(u):e(u)`, shared by the assembly
/// routines below.
pub fn strain_densities(
    mesh: &Mesh2,
    u: &DisplacementField,
    a: &HookeTensor,
) -> Result<Vec<f64>> {
    u.check_against(mesh)?;
    (0..mesh.n_triangles())
        .map(|t| {
            let e = sym_grad(crate::elasticity::tri_gradient_unchecked(mesh, u, t)?);
            Ok(a.energy_density(e))
        })
        .collect()
}

/// Density of a single triangle (used by incremental re-evaluations).
pub fn strain_density(
    mesh: &Mesh2,
    u: &DisplacementField,
    a: &HookeTensor,
    t: usize,
) -> Result<f64> {
    let e = sym_grad(crate::elasticity::tri_gradient_unchecked(mesh, u, t)?);
    Ok(a.energy_density(e))
}

/// The discrete free-discontinuity energy
/// `sum_T |T ∩ Omega| (1/eps) f(eps A e(u):e(u))`.
///
/// The caller is responsible for mesh admissibility; validation is a separate
/// explicit step.
pub fn energy_f_eps(
    mesh: &Mesh2,
    u: &DisplacementField,
    params: &AdmissibilityParams,
    a: &HookeTensor,
    f: &DissipationProfile,
    domain: &DomainPolygon,
) -> Result<f64> {
    let areas = ClippedAreas::new(mesh, domain);
    energy_f_eps_with_areas(mesh, u, params, a, f, &areas)
}

pub fn energy_f_eps_with_areas(
    mesh: &Mesh2,
    u: &DisplacementField,
    params: &AdmissibilityParams,
    a: &HookeTensor,
    f: &DissipationProfile,
    areas: &ClippedAreas,
) -> Result<f64> {
    f.validate()?;
    let densities = strain_densities(mesh, u, a)?;
    match *f {
        DissipationProfile::BrittleMin { kappa } => {
            // Mirror the two-field split exactly: the threshold partition and
            // the same two accumulators, so the totals agree bit-for-bit.
            let chi = mask_from_densities(&densities, params.eps, kappa);
            let split = split_with_areas(&densities, &chi, areas, params.eps, kappa);
            Ok(split.bulk + split.surface)
        }
        _ => {
            let mut sum = KahanSum::new();
            for (t, &q) in densities.iter().enumerate() {
                let area = areas.area(t);
                if area > 0.0 {
                    sum.add(area * (f_eval(f, params.eps * q)? / params.eps));
                }
            }
            Ok(sum.value())
        }
    }
}

fn mask_from_densities(densities: &[f64], eps: f64, kappa: f64) -> DamageMask {
    let threshold = kappa / eps;
    DamageMask(densities.iter().map(|&q| q >= threshold).collect())
}

struct Split {
    bulk: f64,
    surface: f64,
    damaged_area: f64,
}

fn split_with_areas(
    densities: &[f64],
    chi: &DamageMask,
    areas: &ClippedAreas,
    eps: f64,
    kappa: f64,
) -> Split {
    let threshold = kappa / eps;
    let mut bulk = KahanSum::new();
    let mut surface = KahanSum::new();
    let mut damaged_area = KahanSum::new();
    for (t, &q) in densities.iter().enumerate() {
        let area = areas.area(t);
        if area <= 0.0 {
            continue;
        }
        if chi.0[t] {
            surface.add(area * threshold);
            damaged_area.add(area);
        } else {
            bulk.add(area * q);
        }
    }
    Split {
        bulk: bulk.value(),
        surface: surface.value(),
        damaged_area: damaged_area.value(),
    }
}

/// The damage mask that pointwise minimizes the two-field energy:
/// `chi_T = true` iff `A e(u):e(u) >= kappa / eps` on `T` (ties damaged).
pub fn damage_from_threshold(
    mesh: &Mesh2,
    u: &DisplacementField,
    params: &AdmissibilityParams,
    a: &HookeTensor,
    kappa: f64,
) -> Result<DamageMask> {
    let densities = strain_densities(mesh, u, a)?;
    Ok(mask_from_densities(&densities, params.eps, kappa))
}

/// The delta-dependent lower-bound mask `chi = 1 on {(1-delta) A e:e >= K/eps}`
/// used by the sandwich inequality. There is no canonical (delta, K) pair
/// for a general profile, so both are explicit parameters.
pub fn damage_from_sandwich_threshold(
    mesh: &Mesh2,
    u: &DisplacementField,
    params: &AdmissibilityParams,
    a: &HookeTensor,
    delta: f64,
    k: f64,
) -> Result<DamageMask> {
    let densities = strain_densities(mesh, u, a)?;
    let threshold = k / params.eps;
    Ok(DamageMask(
        densities.iter().map(|&q| (1.0 - delta) * q >= threshold).collect(),
    ))
}

/// Evaluates the two-field brittle energy
/// `sum (1-chi_T) |T∩Omega| A e:e + (kappa/eps) sum chi_T |T∩Omega|`
/// together with the crack-length bookkeeping.
pub fn two_field_energy(
    mesh: &Mesh2,
    u: &DisplacementField,
    chi: &DamageMask,
    params: &AdmissibilityParams,
    a: &HookeTensor,
    kappa: f64,
    domain: &DomainPolygon,
) -> Result<EnergyBreakdown> {
    let areas = ClippedAreas::new(mesh, domain);
    two_field_energy_with_areas(mesh, u, chi, params, a, kappa, &areas)
}

pub fn two_field_energy_with_areas(
    mesh: &Mesh2,
    u: &DisplacementField,
    chi: &DamageMask,
    params: &AdmissibilityParams,
    a: &HookeTensor,
    kappa: f64,
    areas: &ClippedAreas,
) -> Result<EnergyBreakdown> {
    chi.check_against(mesh)?;
    let densities = strain_densities(mesh, u, a)?;
    let split = split_with_areas(&densities, chi, areas, params.eps, kappa);
    let sin_theta0 = params.sin_theta0();
    let implied = split.damaged_area / (params.eps * sin_theta0);
    Ok(EnergyBreakdown {
        bulk: split.bulk,
        surface: split.surface,
        total: split.bulk + split.surface,
        implied_crack_length: implied,
        perimeter_bound: 6.0 * implied,
    })
}

/// An affine map per triangle: the restriction of a (possibly discontinuous)
/// piecewise field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriAffine {
    pub grad: Mat2,
    pub offset: Vec2,
}

impl TriAffine {
    pub const ZERO: TriAffine = TriAffine {
        grad: Mat2::ZERO,
        offset: Vec2::ZERO,
    };

    pub fn eval(&self, p: Point2) -> Vec2 {
        self.grad.mul_vec(p.to_vec()) + self.offset
    }
}

/// A field defined triangle by triangle, with no continuity requirement
/// across edges. Produced by [`truncate_by_mask`] and consumed by the
/// diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseField {
    pub per_tri: Vec<TriAffine>,
}

impl PiecewiseField {
    pub fn from_vertex_field(mesh: &Mesh2, u: &DisplacementField) -> Result<Self> {
        u.check_against(mesh)?;
        let per_tri = (0..mesh.n_triangles())
            .map(|t| {
                let grad = crate::elasticity::tri_gradient_unchecked(mesh, u, t)?;
                let v0 = mesh.triangle(t).v[0];
                let offset = u.0[v0] - grad.mul_vec(mesh.vertex(v0).to_vec());
                Ok(TriAffine { grad, offset })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PiecewiseField { per_tri })
    }

    pub fn len(&self) -> usize {
        self.per_tri.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_tri.is_empty()
    }
}

/// The truncation `v = (1 - chi) u`: equal to `u` on undamaged triangles and
/// zero on damaged ones. The result is generally discontinuous across
/// damaged-triangle boundaries.
pub fn truncate_by_mask(
    mesh: &Mesh2,
    u: &DisplacementField,
    chi: &DamageMask,
) -> Result<PiecewiseField> {
    chi.check_against(mesh)?;
    let mut field = PiecewiseField::from_vertex_field(mesh, u)?;
    for (t, affine) in field.per_tri.iter_mut().enumerate() {
        if chi.0[t] {
            *affine = TriAffine::ZERO;
        }
    }
    Ok(field)
}
