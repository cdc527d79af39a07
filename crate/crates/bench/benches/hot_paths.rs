//! Benchmarks for the evaluation and solve hot paths: energy assembly,
//! admissibility validation, the elastic substep, the full alternation, the
//! strip construction and the convergence-in-measure metric.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use griffith_bench::{grid, lcg_field, params_for};
use griffith_core::diagnostics::distance_in_measure;
use griffith_core::elasticity::{DissipationProfile, HookeTensor};
use griffith_core::energy::{energy_f_eps_with_areas, ClippedAreas, DamageMask, PiecewiseField};
use griffith_core::geometry::{validate_admissible, AdmissibilityParams, DomainPair, DomainPolygon, DomainRole};
use griffith_core::recovery::{build_strip_mesh, Rect};
use griffith_core::solver::{
    alternate_minimize, elastic_solve, BoundaryDatum, DirichletSetup, SolveOptions,
};
use griffith_core::{Mat2, Vec2};

fn unit_domain() -> DomainPolygon {
    DomainPolygon::rectangle(0.0, 0.0, 1.0, 1.0, DomainRole::Inner).unwrap()
}

fn bench_energy(c: &mut Criterion) {
    let mut group = c.benchmark_group("energy_f_eps");
    for n in [16usize, 32, 64] {
        let mesh = grid(n);
        let spacing = 1.5 / n as f64;
        let params = params_for(spacing);
        let a = HookeTensor::identity();
        let f = DissipationProfile::BrittleMin { kappa: 1.0 };
        let domain = unit_domain();
        let areas = ClippedAreas::new(&mesh, &domain);
        let u = lcg_field(&mesh, 7);
        group.bench_with_input(BenchmarkId::from_parameter(mesh.n_triangles()), &n, |b, _| {
            b.iter(|| {
                energy_f_eps_with_areas(
                    black_box(&mesh),
                    black_box(&u),
                    &params,
                    &a,
                    &f,
                    &areas,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_validate(c: &mut Criterion) {
    let mut group = c.benchmark_group("validate_admissible");
    for n in [16usize, 32] {
        let mesh = grid(n);
        let params = params_for(1.5 / n as f64);
        let domain = unit_domain();
        group.bench_with_input(BenchmarkId::from_parameter(mesh.n_triangles()), &n, |b, _| {
            b.iter(|| validate_admissible(black_box(&mesh), &params, &domain))
        });
    }
    group.finish();
}

fn dirichlet_setup(n: usize) -> (griffith_core::geometry::Mesh2, DirichletSetup, AdmissibilityParams) {
    let mesh = grid(n);
    let inner = unit_domain();
    let outer = DomainPolygon::rectangle(-0.25, -0.25, 1.25, 1.25, DomainRole::Outer).unwrap();
    let datum = BoundaryDatum::Affine {
        m: Mat2::new(0.1, 0.02, 0.02, -0.07),
        c: Vec2::ZERO,
    };
    let setup = DirichletSetup::new(&mesh, DomainPair::new(inner, outer).unwrap(), datum).unwrap();
    let params = params_for(1.5 / n as f64);
    (mesh, setup, params)
}

fn bench_elastic_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("elastic_solve");
    group.sample_size(20);
    for n in [16usize, 32] {
        let (mesh, setup, _) = dirichlet_setup(n);
        let chi = DamageMask::all_false(mesh.n_triangles());
        let a = HookeTensor::identity();
        let opts = SolveOptions::default();
        group.bench_with_input(BenchmarkId::from_parameter(mesh.n_triangles()), &n, |b, _| {
            b.iter(|| elastic_solve(black_box(&mesh), &setup, &chi, &a, &opts).unwrap())
        });
    }
    group.finish();
}

fn bench_alternate(c: &mut Criterion) {
    let mut group = c.benchmark_group("alternate_minimize");
    group.sample_size(10);
    let (mesh, setup, params) = {
        let mesh = grid(16);
        let inner = unit_domain();
        let outer =
            DomainPolygon::rectangle(-0.25, -0.25, 1.25, 1.25, DomainRole::Outer).unwrap();
        let datum = BoundaryDatum::RampY {
            amplitude: 3.0,
            center: 0.5,
            half_width: 0.2,
        };
        let setup =
            DirichletSetup::new(&mesh, DomainPair::new(inner, outer).unwrap(), datum).unwrap();
        (mesh, setup, params_for(1.5 / 16.0))
    };
    let a = HookeTensor::identity();
    let opts = SolveOptions::default();
    group.bench_function("ramp_16", |b| {
        b.iter(|| alternate_minimize(black_box(&mesh), &setup, &a, 1.0, &params, &opts).unwrap())
    });
    group.finish();
}

fn bench_strip_build(c: &mut Criterion) {
    let mut group = c.benchmark_group("build_strip_mesh");
    group.sample_size(20);
    for eps_inv in [32usize, 64] {
        let eps = 1.0 / eps_inv as f64;
        let params =
            AdmissibilityParams::new(eps, 6.0 * eps, AdmissibilityParams::theta0_max_deg())
                .unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(eps_inv), &eps_inv, |b, _| {
            b.iter(|| build_strip_mesh(black_box(&Rect::unit()), 0.5, &params).unwrap())
        });
    }
    group.finish();
}

fn bench_distance_in_measure(c: &mut Criterion) {
    let mesh = grid(16);
    let domain = unit_domain();
    let u = PiecewiseField::from_vertex_field(&mesh, &lcg_field(&mesh, 1)).unwrap();
    let v = PiecewiseField::from_vertex_field(&mesh, &lcg_field(&mesh, 2)).unwrap();
    c.bench_function("distance_in_measure_512", |b| {
        b.iter(|| distance_in_measure(black_box(&u), black_box(&v), &mesh, 0.5, &domain).unwrap())
    });
}

criterion_group!(
    benches,
    bench_energy,
    bench_validate,
    bench_elastic_solve,
    bench_alternate,
    bench_strip_build,
    bench_distance_in_measure
);
criterion_main!(benches);
