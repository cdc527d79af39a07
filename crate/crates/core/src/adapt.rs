//! Local mesh optimization: the mesh is part of the unknown, so the energy
//! can decrease under admissibility-preserving vertex relocations and edge
//! flips.
//!
//! The feasible set (angles at least theta0, edges in [eps, omega]) is
//! nonsmooth, so the optimizer is a greedy randomized local search rather
//! than a gradient method. Proposals are evaluated in a "frozen-field" mode
//! (vertex values kept, energy re-evaluated on the trial geometry) and the
//! displacement/damage pair is re-solved between sweeps.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::elasticity::{DisplacementField, DissipationProfile, HookeTensor};
use crate::energy::energy_f_eps;
use crate::geometry::{
    triangle_metrics_from_points, AdmissibilityParams, DomainPolygon, Mesh2, Point2,
};
use crate::solver::{alternate_minimize, AlternateResult, DirichletSetup, SolveOptions};
use crate::{Error, Result};

/// A candidate local modification of the mesh.
#[derive(Debug, Clone, PartialEq)]
pub enum MoveKind {
    VertexRelocate { vertex: usize, to: Point2 },
    EdgeFlip { edge: (usize, usize) },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoveProposal {
    pub kind: MoveKind,
    /// Whether the affected triangles stay admissible after the move.
    pub admissible: bool,
    /// Frozen-field energy change, filled in during evaluation.
    pub energy_delta: Option<f64>,
}

/// Admissibility of a triangle star against the class parameters, checked
/// with the same tolerance the validator uses.
fn star_admissible(mesh: &Mesh2, triangles: &[usize], params: &AdmissibilityParams) -> bool {
    const REL_TOL: f64 = 1e-9;
    for &t in triangles {
        let pts = mesh.tri_points(t);
        let Ok(m) = triangle_metrics_from_points(&pts, t) else {
            return false;
        };
        for len in m.edge_lengths {
            if len < params.eps * (1.0 - REL_TOL) || len > params.omega * (1.0 + REL_TOL) {
                return false;
            }
        }
        if m.min_angle_deg() < params.theta0_deg * (1.0 - REL_TOL) {
            return false;
        }
    }
    true
}

fn star_inside_domain(mesh: &Mesh2, triangles: &[usize], domain: &DomainPolygon) -> bool {
    triangles.iter().all(|&t| {
        mesh.tri_points(t)
            .iter()
            .all(|&p| domain.contains(p))
    })
}

/// Samples `n_candidates` relocations of `vertex` in a disk of radius
/// `step_frac * eps`, each checked for admissibility of the perturbed star.
/// Deterministic given the seed.
pub fn propose_vertex_moves(
    mesh: &Mesh2,
    params: &AdmissibilityParams,
    vertex: usize,
    rng_seed: u64,
    n_candidates: usize,
    step_frac: f64,
) -> Result<Vec<MoveProposal>> {
    if vertex >= mesh.n_vertices() {
        return Err(Error::IndexOutOfBounds {
            index: vertex,
            len: mesh.n_vertices(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let star: Vec<usize> = mesh.vertex_triangles(vertex).to_vec();
    let origin = mesh.vertex(vertex);
    let radius = step_frac * params.eps;
    let mut out = Vec::with_capacity(n_candidates);
    for _ in 0..n_candidates {
        // Uniform in the disk.
        let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = radius * rng.gen::<f64>().sqrt();
        let to = Point2::new(origin.x + r * ang.cos(), origin.y + r * ang.sin());
        // Check the star on a trial revision; orientation flips mean the
        // star folded over and the move is inadmissible.
        let admissible = match mesh.with_vertex_moved(vertex, to) {
            Ok(trial) => {
                let orientation_ok = star.iter().all(|&t| {
                    let tri = mesh.triangle(t);
                    let [a, b, c] = tri.v.map(|i| {
                        if i == vertex {
                            to
                        } else {
                            mesh.vertex(i)
                        }
                    });
                    (b - a).cross(c - a) > 0.0
                });
                orientation_ok && star_admissible(&trial, &star, params)
            }
            Err(_) => false,
        };
        out.push(MoveProposal {
            kind: MoveKind::VertexRelocate { vertex, to },
            admissible,
            energy_delta: None,
        });
    }
    Ok(out)
}

/// Applies an admissible proposal, producing a new mesh revision and the
/// transferred field. Vertex values are kept: relocations change the
/// geometry under the same nodal values, flips only retarget triangles.
pub fn apply_move(
    mesh: &Mesh2,
    u: &DisplacementField,
    proposal: &MoveProposal,
) -> Result<(Mesh2, DisplacementField)> {
    if !proposal.admissible {
        return Err(Error::InadmissibleMove {
            reason: "proposal was flagged inadmissible".into(),
        });
    }
    let new_mesh = match &proposal.kind {
        MoveKind::VertexRelocate { vertex, to } => mesh.with_vertex_moved(*vertex, *to)?,
        MoveKind::EdgeFlip { edge } => mesh.with_edge_flipped(edge.0, edge.1)?,
    };
    Ok((new_mesh, u.clone()))
}

/// Options of the greedy optimizer.
#[derive(Debug, Clone)]
pub struct AdaptOptions {
    pub max_sweeps: usize,
    pub n_candidates: usize,
    /// Relocation radius as a fraction of eps.
    pub step_frac: f64,
    pub seed: u64,
    /// Minimum relative energy decrease for accepting a move.
    pub min_decrease: f64,
    pub solve: SolveOptions,
}

impl Default for AdaptOptions {
    fn default() -> Self {
        AdaptOptions {
            max_sweeps: 4,
            n_candidates: 8,
            step_frac: 0.25,
            seed: 0,
            min_decrease: 1e-12,
            solve: SolveOptions::default(),
        }
    }
}

/// One row of the optimizer trace.
#[derive(Debug, Clone, Copy)]
pub struct SweepRecord {
    pub sweep: usize,
    pub accepted_moves: usize,
    /// Energy after the post-sweep re-solve.
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct AdaptResult {
    pub mesh: Mesh2,
    pub solution: AlternateResult,
    pub trace: Vec<SweepRecord>,
}

/// Frozen-field contribution of one triangle: `|T ∩ Omega| * min(A e:e,
/// kappa/eps)` for the current vertex values.
fn contribution(
    mesh: &Mesh2,
    u: &crate::elasticity::DisplacementField,
    a: &HookeTensor,
    kappa_over_eps: f64,
    domain: &DomainPolygon,
    t: usize,
) -> Result<f64> {
    let area = domain.intersection_area_with_triangle(&mesh.tri_points(t));
    if area <= 0.0 {
        return Ok(0.0);
    }
    let q = crate::energy::strain_density(mesh, u, a, t)?;
    Ok(area * q.min(kappa_over_eps))
}

/// Greedy mesh optimization interleaved with alternating minimization.
///
/// Per sweep, free vertices (interior, unpinned, star inside the inner
/// domain) are visited in a seeded random order; the best strictly
/// energy-decreasing admissible relocation is accepted under the frozen
/// field, with proposal deltas re-evaluated on the affected star only. A
/// flip pass over interior edges follows, then the displacement and damage
/// are re-solved. Every intermediate mesh stays admissible and the
/// accepted-move energy sequence is strictly decreasing.
pub fn optimize_mesh(
    mesh: &Mesh2,
    setup: &DirichletSetup,
    params: &AdmissibilityParams,
    a: &HookeTensor,
    kappa: f64,
    options: &AdaptOptions,
) -> Result<AdaptResult> {
    let profile = DissipationProfile::BrittleMin { kappa };
    let domain = &setup.domains.inner;
    let threshold = kappa / params.eps;
    let mut mesh = mesh.clone();
    let mut result = alternate_minimize(&mesh, setup, a, kappa, params, &options.solve)?;
    let mut trace = Vec::new();

    for sweep in 0..options.max_sweeps {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed ^ (sweep as u64).wrapping_mul(0x9e37));
        let mut free: Vec<usize> = (0..mesh.n_vertices())
            .filter(|&v| mesh.is_interior_vertex(v) && !setup.is_pinned_vertex(v))
            .collect();
        free.shuffle(&mut rng);

        let mut accepted = 0usize;
        let u = result.u.clone();
        let mut frozen_energy = energy_f_eps(&mesh, &u, params, a, &profile, domain)?;
        // Per-triangle contributions for incremental proposal deltas.
        let mut contribs: Vec<f64> = (0..mesh.n_triangles())
            .map(|t| contribution(&mesh, &u, a, threshold, domain, t))
            .collect::<Result<_>>()?;

        let eval_delta = |trial: &Mesh2,
                          affected: &[usize],
                          contribs: &[f64]|
         -> Result<Option<(f64, Vec<f64>)>> {
            if !star_inside_domain(trial, affected, domain) {
                return Ok(None);
            }
            let mut delta = 0.0;
            let mut new_contribs = Vec::with_capacity(affected.len());
            for &t in affected {
                let c = contribution(trial, &u, a, threshold, domain, t)?;
                delta += c - contribs[t];
                new_contribs.push(c);
            }
            Ok(Some((delta, new_contribs)))
        };

        for &v in &free {
            let seed_v = options
                .seed
                .wrapping_mul(0x517c_c1b7_2722_0a95)
                .wrapping_add((sweep as u64) << 32)
                .wrapping_add(v as u64);
            let proposals =
                propose_vertex_moves(&mesh, params, v, seed_v, options.n_candidates, options.step_frac)?;
            let star: Vec<usize> = mesh.vertex_triangles(v).to_vec();
            let mut best: Option<(f64, MoveProposal, Vec<f64>)> = None;
            for mut prop in proposals {
                if !prop.admissible {
                    continue;
                }
                let MoveKind::VertexRelocate { vertex, to } = prop.kind else {
                    continue;
                };
                // Pinned-triangle classification must stay intact, so the
                // moved star has to remain inside the inner domain closure.
                let trial = mesh.with_vertex_moved(vertex, to)?;
                let Some((delta, new_c)) = eval_delta(&trial, &star, &contribs)? else {
                    continue;
                };
                prop.energy_delta = Some(delta);
                if delta < -options.min_decrease * frozen_energy.abs().max(1.0)
                    && best.as_ref().is_none_or(|(b, _, _)| delta < *b)
                {
                    best = Some((delta, prop, new_c));
                }
            }
            if let Some((delta, prop, new_c)) = best {
                let (new_mesh, _) = apply_move(&mesh, &u, &prop)?;
                mesh = new_mesh;
                for (&t, &c) in star.iter().zip(&new_c) {
                    contribs[t] = c;
                }
                frozen_energy += delta;
                accepted += 1;
            }
        }

        // Flip pass over interior edges of a convex quad.
        let edges: Vec<(usize, usize)> = mesh
            .edges()
            .filter(|(_, tris)| tris.len() == 2)
            .map(|(&e, _)| e)
            .collect();
        for (ea, eb) in edges {
            if mesh.edge_triangles(ea, eb).len() != 2 {
                continue; // invalidated by an earlier flip
            }
            let tris = mesh.edge_triangles(ea, eb).to_vec();
            if tris.iter().any(|&t| setup.is_pinned_triangle(t)) {
                continue;
            }
            let Ok(trial) = mesh.with_edge_flipped(ea, eb) else {
                continue; // concave quad or boundary edge
            };
            if !star_admissible(&trial, &tris, params) {
                continue;
            }
            let Some((delta, new_c)) = eval_delta(&trial, &tris, &contribs)? else {
                continue;
            };
            if delta < -options.min_decrease * frozen_energy.abs().max(1.0) {
                mesh = trial;
                for (&t, &c) in tris.iter().zip(&new_c) {
                    contribs[t] = c;
                }
                frozen_energy += delta;
                accepted += 1;
            }
        }

        result = alternate_minimize(&mesh, setup, a, kappa, params, &options.solve)?;
        trace.push(SweepRecord {
            sweep,
            accepted_moves: accepted,
            energy: result.breakdown.total,
        });
        if accepted == 0 {
            break;
        }
    }

    Ok(AdaptResult {
        mesh,
        solution: result,
        trace,
    })
}
