//! Structured mesh generators used by the CLI benchmarks and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mesh::{Mesh2, Triangle};
use super::Point2;
use crate::{Error, Result};

/// Uniform right-isoceles grid over `[x0, x1] x [y0, y1]`: squares of side
/// `spacing`, each split along the same diagonal. All angles are 45 or 90
/// degrees; edges are `spacing` or `spacing * sqrt(2)`.
///
/// The last row/column is stretched by at most one cell so the grid covers
/// the rectangle exactly; `spacing` should divide the side lengths for a
/// perfectly uniform mesh.
pub fn structured_grid(x0: f64, y0: f64, x1: f64, y1: f64, spacing: f64) -> Result<Mesh2> {
    if !(spacing > 0.0) || !(x1 > x0) || !(y1 > y0) {
        return Err(Error::InvalidParams(format!(
            "bad grid spec: [{x0}, {x1}] x [{y0}, {y1}], spacing {spacing}"
        )));
    }
    let nx = ((x1 - x0) / spacing).round().max(1.0) as usize;
    let ny = ((y1 - y0) / spacing).round().max(1.0) as usize;
    let dx = (x1 - x0) / nx as f64;
    let dy = (y1 - y0) / ny as f64;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point2::new(x0 + i as f64 * dx, y0 + j as f64 * dy));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push(Triangle::new(id(i, j), id(i + 1, j), id(i + 1, j + 1)));
            triangles.push(Triangle::new(id(i, j), id(i + 1, j + 1), id(i, j + 1)));
        }
    }
    Mesh2::new(vertices, triangles)
}

/// Structured grid with interior vertices perturbed by a seeded uniform
/// jitter of at most `jitter_frac * spacing` per coordinate. Small jitter
/// keeps the mesh admissible for `eps` moderately below `spacing`; callers
/// validate.
pub fn jittered_grid(
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    spacing: f64,
    jitter_frac: f64,
    seed: u64,
) -> Result<Mesh2> {
    let base = structured_grid(x0, y0, x1, y1, spacing)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = base.vertices().to_vec();
    let amp = jitter_frac * spacing;
    for (v, p) in vertices.iter_mut().enumerate() {
        if base.is_interior_vertex(v) {
            p.x += rng.gen_range(-amp..=amp);
            p.y += rng.gen_range(-amp..=amp);
        }
    }
    Mesh2::new(vertices, base.triangles().to_vec())
}
