//! Shared fixtures for the criterion benches.

use griffith_core::elasticity::DisplacementField;
use griffith_core::geometry::{structured_grid, AdmissibilityParams, Mesh2};
use griffith_core::Vec2;

pub fn grid(n: usize) -> Mesh2 {
    structured_grid(-0.25, -0.25, 1.25, 1.25, 1.5 / n as f64).unwrap()
}

pub fn params_for(spacing: f64) -> AdmissibilityParams {
    AdmissibilityParams::new(0.6 * spacing, 6.0 * spacing, 18.0).unwrap()
}

/// Deterministic pseudo-random displacement values (LCG; no rand dependency
/// in the fixture path).
pub fn lcg_field(mesh: &Mesh2, seed: u64) -> DisplacementField {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    DisplacementField(
        (0..mesh.n_vertices())
            .map(|_| Vec2::new(next(), next()))
            .collect(),
    )
}
