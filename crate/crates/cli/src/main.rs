//! Batch front end for the brittle-damage finite element toolkit.
//!
//! Commands: `validate`, `energy`, `minimize`, `gamma-study`, `recovery`,
//! `slice-diag`. Configuration is a flat `key=value` file plus repeatable
//! `--set key=value` overrides (later wins). Exit codes: 0 success,
//! 1 validation/acceptance failure, 2 i/o or config error,
//! 3 non-convergence.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use config::Config;
use griffith_core::diagnostics::{slice_count, two_family_coverage};
use griffith_core::energy::{damage_from_threshold, two_field_energy};
use griffith_core::geometry::{
    jittered_grid, structured_grid, validate_admissible, DomainPair, DomainRole, Mesh2,
    SliceFrame,
};
use griffith_core::io;
use griffith_core::recovery::{build_strip_mesh, gamma_certificate, CrackSegment, Rect};
use griffith_core::solver::{alternate_minimize, DirichletSetup};
use griffith_core::{Point2, Vec2};

#[derive(Parser)]
#[command(
    name = "griffith",
    about = "Adaptive finite elements for brittle-damage fracture energies",
    long_about = "Validation, energy evaluation, alternating minimization, \
recovery certificates and slicing diagnostics for the discrete brittle-damage \
energy on angle- and edge-constrained triangulations.\n\nUnits: angles in \
degrees, lengths in domain units, kappa in energy per unit area. Numbers in \
configs accept fractions like 1/64.\n\nExit codes: 0 success, 1 validation or \
acceptance failure, 2 i/o error, 3 non-convergence."
)]
struct CliArgs {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key=value config file ('#' comments).
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key (repeatable, later wins).
    #[arg(short, long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn load(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::from_file(path)?,
            None => Config::default(),
        };
        cfg.apply_overrides(&self.set)?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a mesh against the admissibility class (edges, angles,
    /// conformity, coverage). Exit 0 iff admissible.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Node file (count, then "index x y").
        #[arg(long)]
        nodes: PathBuf,
        /// Element file (count, then "index v1 v2 v3").
        #[arg(long)]
        elements: PathBuf,
        /// Write the full report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evaluate the discrete energy of a displacement field on a mesh and
    /// print the breakdown CSV row.
    Energy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        nodes: PathBuf,
        #[arg(long)]
        elements: PathBuf,
        /// Displacement field file (count, then "index ux uy").
        #[arg(long)]
        field: PathBuf,
        /// Output CSV path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Alternating displacement/damage minimization under a Dirichlet datum;
    /// optionally with mesh optimization.
    Minimize {
        #[command(flatten)]
        common: Common,
        /// Interleave greedy mesh optimization with the minimization.
        #[arg(long)]
        adapt: bool,
    },
    /// Recovery-certificate sweep over eps; exit 0 iff deviations decrease
    /// monotonically and the final one is below gamma.bound.
    GammaStudy {
        #[command(flatten)]
        common: Common,
    },
    /// Emit recovery certificates plus the generated meshes (text + VTK).
    Recovery {
        #[command(flatten)]
        common: Common,
    },
    /// Slice-counting diagnostics on a damaged configuration: histogram CSV
    /// and the two projection families.
    SliceDiag {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = CliArgs::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: CliArgs) -> Result<ExitCode> {
    match cli.command {
        Command::Validate {
            common,
            nodes,
            elements,
            json,
        } => cmd_validate(&common, &nodes, &elements, json.as_deref()),
        Command::Energy {
            common,
            nodes,
            elements,
            field,
            out,
        } => cmd_energy(&common, &nodes, &elements, &field, out.as_deref()),
        Command::Minimize { common, adapt } => cmd_minimize(&common, adapt),
        Command::GammaStudy { common } => cmd_gamma_study(&common),
        Command::Recovery { common } => cmd_recovery(&common),
        Command::SliceDiag { common } => cmd_slice_diag(&common),
    }
}

fn domain_pair(cfg: &Config) -> Result<(Rect, Rect)> {
    let inner = cfg.rect("domain", Rect::unit())?;
    let default_outer = Rect {
        x0: inner.x0 - 0.25,
        y0: inner.y0 - 0.25,
        x1: inner.x1 + 0.25,
        y1: inner.y1 + 0.25,
    };
    let outer = cfg.rect("domain_outer", default_outer)?;
    Ok((inner, outer))
}

fn load_or_build_mesh(cfg: &Config, outer: &Rect) -> Result<Mesh2> {
    match (cfg.get("mesh.nodes"), cfg.get("mesh.elements")) {
        (Some(n), Some(e)) => Ok(io::read_mesh(Path::new(n), Path::new(e))?),
        (None, None) => {
            let spacing = cfg.required_number("mesh.spacing")?;
            let jitter = cfg.number("mesh.jitter", 0.0)?;
            let seed = cfg.integer("seed", 0)? as u64;
            if jitter > 0.0 {
                Ok(jittered_grid(
                    outer.x0, outer.y0, outer.x1, outer.y1, spacing, jitter, seed,
                )?)
            } else {
                Ok(structured_grid(outer.x0, outer.y0, outer.x1, outer.y1, spacing)?)
            }
        }
        _ => Err(anyhow!(
            "set both mesh.nodes and mesh.elements, or neither (grid via mesh.spacing)"
        )),
    }
}

fn cmd_validate(
    common: &Common,
    nodes: &Path,
    elements: &Path,
    json: Option<&Path>,
) -> Result<ExitCode> {
    let cfg = common.load()?;
    let params = cfg.admissibility()?;
    let (inner, _) = domain_pair(&cfg)?;
    let mesh = io::read_mesh(nodes, elements)?;
    let report = validate_admissible(&mesh, &params, &inner.to_polygon(DomainRole::Inner)?);
    println!(
        "mesh: {} vertices, {} triangles; eps = {}, omega = {}, theta0 = {} deg",
        report.n_vertices, report.n_triangles, params.eps, params.omega, params.theta0_deg
    );
    if report.is_admissible() {
        println!("admissible: yes");
    } else {
        println!("admissible: no ({} violations)", report.violations.len());
        for v in report.violations.iter().take(20) {
            println!("  {v:?}");
        }
        if report.violations.len() > 20 {
            println!("  ... {} more", report.violations.len() - 20);
        }
    }
    if let Some(path) = json {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(if report.is_admissible() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_energy(
    common: &Common,
    nodes: &Path,
    elements: &Path,
    field: &Path,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let cfg = common.load()?;
    let params = cfg.admissibility()?;
    let a = cfg.hooke()?;
    let kappa = cfg.number("kappa", 1.0)?;
    let (inner, _) = domain_pair(&cfg)?;
    let mesh = io::read_mesh(nodes, elements)?;
    let u = io::read_field(field)?;
    let domain = inner.to_polygon(DomainRole::Inner)?;
    let chi = damage_from_threshold(&mesh, &u, &params, &a, kappa)?;
    let breakdown = two_field_energy(&mesh, &u, &chi, &params, &a, kappa, &domain)?;
    let mut text = String::from(io::ENERGY_CSV_HEADER);
    text.push('\n');
    text.push_str(&io::energy_csv_row(params.eps, &breakdown));
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_minimize(common: &Common, adapt: bool) -> Result<ExitCode> {
    let cfg = common.load()?;
    let params = cfg.admissibility()?;
    let a = cfg.hooke()?;
    let kappa = cfg.number("kappa", 1.0)?;
    let (inner, outer) = domain_pair(&cfg)?;
    let mesh = load_or_build_mesh(&cfg, &outer)?;
    let datum = cfg.datum()?;
    let report = validate_admissible(&mesh, &params, &outer.to_polygon(DomainRole::Outer)?);
    if !report.is_admissible() {
        eprintln!(
            "warning: mesh has {} admissibility violations for eps = {}, omega = {}, theta0 = {}; \
             energies and crack lengths assume admissibility",
            report.violations.len(),
            params.eps,
            params.omega,
            params.theta0_deg
        );
    }
    let domains = DomainPair::new(
        inner.to_polygon(DomainRole::Inner)?,
        outer.to_polygon(DomainRole::Outer)?,
    )?;
    let setup = DirichletSetup::new(&mesh, domains, datum)?;
    let options = cfg.solve_options()?;
    let prefix = cfg.string("out.prefix", "minimize");

    let (final_mesh, result, sweeps) = if adapt {
        let opts = griffith_core::adapt::AdaptOptions {
            max_sweeps: cfg.integer("adapt.sweeps", 4)?,
            n_candidates: cfg.integer("adapt.candidates", 8)?,
            step_frac: cfg.number("adapt.step", 0.25)?,
            seed: cfg.integer("seed", 0)? as u64,
            min_decrease: 1e-12,
            solve: options,
        };
        let out = griffith_core::adapt::optimize_mesh(&mesh, &setup, &params, &a, kappa, &opts)?;
        (out.mesh, out.solution, Some(out.trace))
    } else {
        let result = alternate_minimize(&mesh, &setup, &a, kappa, &params, &options)?;
        (mesh, result, None)
    };

    io::write_mesh(
        &final_mesh,
        &PathBuf::from(format!("{prefix}.node")),
        &PathBuf::from(format!("{prefix}.ele")),
    )?;
    io::write_field(&result.u, &PathBuf::from(format!("{prefix}.field")))?;
    std::fs::write(
        format!("{prefix}.chi.csv"),
        io::write_mask_string(&result.chi),
    )?;
    let mut trace = String::from(io::TRACE_CSV_HEADER);
    trace.push('\n');
    for rec in &result.trace {
        trace.push_str(&io::trace_csv_row(rec));
        trace.push('\n');
    }
    std::fs::write(format!("{prefix}.trace.csv"), trace)?;
    if let Some(sweeps) = sweeps {
        let mut text = String::from(io::SWEEP_CSV_HEADER);
        text.push('\n');
        for rec in &sweeps {
            text.push_str(&io::sweep_csv_row(rec));
            text.push('\n');
        }
        std::fs::write(format!("{prefix}.sweeps.csv"), text)?;
    }
    std::fs::write(
        format!("{prefix}.vtk"),
        io::write_vtk_string(&final_mesh, Some(&result.chi), Some(&result.u), "minimize"),
    )?;

    println!(
        "energy: bulk {}, surface {}, total {}; damaged {} of {}; converged: {}",
        result.breakdown.bulk,
        result.breakdown.surface,
        result.breakdown.total,
        result.chi.n_damaged(),
        final_mesh.n_triangles(),
        result.converged,
    );
    Ok(if result.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn study_crack(cfg: &Config, inner: &Rect) -> Result<CrackSegment> {
    let y = cfg.number("crack.y", 0.5 * (inner.y0 + inner.y1))?;
    let jump = cfg.vec2("crack.jump", Vec2::new(1.0, 0.0))?;
    Ok(CrackSegment::new(
        Point2::new(inner.x0, y),
        Point2::new(inner.x1, y),
        Vec2::ZERO,
        jump,
    )?)
}

fn run_certificates(cfg: &Config) -> Result<(Vec<griffith_core::recovery::RecoveryCertificate>, Rect)> {
    let (inner, _) = domain_pair(cfg)?;
    let crack = study_crack(cfg, &inner)?;
    let eps_list = cfg.number_list("eps_list")?;
    let theta0 = cfg.number(
        "theta0",
        griffith_core::geometry::AdmissibilityParams::theta0_max_deg(),
    )?;
    let omega_factor = cfg.number("omega_factor", 6.0)?;
    let a = cfg.hooke()?;
    let kappa = cfg.number("kappa", 1.0)?;
    let certs = gamma_certificate(&inner, &crack, &eps_list, omega_factor, theta0, &a, kappa)?;
    Ok((certs, inner))
}

fn certificates_csv(certs: &[griffith_core::recovery::RecoveryCertificate]) -> String {
    let mut text = String::from(io::CERTIFICATE_CSV_HEADER);
    text.push('\n');
    for c in certs {
        text.push_str(&io::certificate_csv_row(c));
        text.push('\n');
    }
    text
}

fn cmd_gamma_study(common: &Common) -> Result<ExitCode> {
    let cfg = common.load()?;
    let (certs, _) = run_certificates(&cfg)?;
    let out = cfg.string("out", "gamma_study.csv");
    std::fs::write(&out, certificates_csv(&certs))?;
    let bound = cfg.number("gamma.bound", 0.05)?;
    let mut monotone = true;
    for w in certs.windows(2) {
        // Exact constructions sit at roundoff; allow a tiny slack.
        if w[1].deviation > w[0].deviation + 1e-12 {
            monotone = false;
        }
    }
    let final_dev = certs.last().map(|c| c.deviation).unwrap_or(f64::INFINITY);
    for c in &certs {
        println!(
            "eps {}: total {} target {} deviation {:.3e}",
            c.eps, c.energy.total, c.target_surface, c.deviation
        );
    }
    println!(
        "monotone: {monotone}; final deviation {final_dev:.3e} (bound {bound}); wrote {out}"
    );
    Ok(if monotone && final_dev <= bound {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_recovery(common: &Common) -> Result<ExitCode> {
    let cfg = common.load()?;
    let (certs, inner) = run_certificates(&cfg)?;
    let prefix = cfg.string("out.prefix", "recovery");
    std::fs::write(format!("{prefix}.csv"), certificates_csv(&certs))?;
    // Emit the meshes of the sweep.
    let theta0 = cfg.number(
        "theta0",
        griffith_core::geometry::AdmissibilityParams::theta0_max_deg(),
    )?;
    let omega_factor = cfg.number("omega_factor", 6.0)?;
    let crack = study_crack(&cfg, &inner)?;
    for c in &certs {
        let params = griffith_core::geometry::AdmissibilityParams::new(
            c.eps,
            omega_factor * c.eps,
            theta0,
        )?;
        let build = build_strip_mesh(&inner, crack.p.y, &params)?;
        let tag = format!("{prefix}_eps_{}", c.eps);
        io::write_mesh(
            &build.mesh,
            &PathBuf::from(format!("{tag}.node")),
            &PathBuf::from(format!("{tag}.ele")),
        )?;
        let field = griffith_core::recovery::PiecewiseSmoothField::step(crack.clone());
        let u = griffith_core::recovery::interpolate_piecewise(&build.mesh, &field)?;
        let a = cfg.hooke()?;
        let kappa = cfg.number("kappa", 1.0)?;
        let chi = damage_from_threshold(&build.mesh, &u, &params, &a, kappa)?;
        std::fs::write(
            format!("{tag}.vtk"),
            io::write_vtk_string(&build.mesh, Some(&chi), Some(&u), "recovery"),
        )?;
        println!(
            "eps {}: {} triangles ({} strip), end correction {:.3e}",
            c.eps,
            build.mesh.n_triangles(),
            build.strip.len(),
            build.end_correction
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_slice_diag(common: &Common) -> Result<ExitCode> {
    let cfg = common.load()?;
    let (inner, _) = domain_pair(&cfg)?;
    let crack = study_crack(&cfg, &inner)?;
    let n_lines = cfg.integer("n_lines", 1000)?;
    let seed = cfg.integer("seed", 0)? as u64;
    let prefix = cfg.string("out.prefix", "slice_diag");

    // Either an explicit (mesh, mask) pair or the recovery configuration.
    let (mesh, chi) = match (cfg.get("mesh.nodes"), cfg.get("mesh.elements"), cfg.get("mask")) {
        (Some(n), Some(e), Some(m)) => {
            let mesh = io::read_mesh(Path::new(n), Path::new(e))?;
            let mut chi = io::parse_mask(&std::fs::read_to_string(m)?)?;
            chi.0.resize(mesh.n_triangles(), false);
            (mesh, chi)
        }
        (None, None, None) => {
            let params = cfg.admissibility()?;
            let build = build_strip_mesh(&inner, crack.p.y, &params)?;
            let field = griffith_core::recovery::PiecewiseSmoothField::step(crack.clone());
            let u = griffith_core::recovery::interpolate_piecewise(&build.mesh, &field)?;
            let a = cfg.hooke()?;
            let kappa = cfg.number("kappa", 1.0)?;
            let chi = damage_from_threshold(&build.mesh, &u, &params, &a, kappa)?;
            (build.mesh, chi)
        }
        _ => {
            return Err(anyhow!(
                "set mesh.nodes, mesh.elements and mask together, or none of them \
                 (recovery configuration via eps)"
            ))
        }
    };

    let xi = cfg.vec2("xi", crack.nu)?;
    let frame = SliceFrame::new(crack.nu, xi)?;
    let report = slice_count(&mesh, &chi, &frame, &crack, n_lines, seed)?;
    let mut hist = String::from("count,lines\n");
    for (count, lines) in &report.histogram {
        hist.push_str(&format!("{count},{lines}\n"));
    }
    std::fs::write(format!("{prefix}.histogram.csv"), hist)?;

    let cov = two_family_coverage(&mesh, &chi, &frame, &crack, n_lines, seed)?;
    let fam = |ids: &[usize]| {
        ids.iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    std::fs::write(
        format!("{prefix}.families.txt"),
        format!(
            "family1 {}\nfamily2 {}\ncovered1 {}\ncovered2 {}\nskipped {}\n",
            fam(&cov.family1),
            fam(&cov.family2),
            cov.covered1,
            cov.covered2,
            cov.skipped
        ),
    )?;
    println!(
        "lines: {}; fraction >=1: {}; fraction >=2: {}; family coverage: {} / {}",
        n_lines, report.frac_ge1, report.frac_ge2, cov.covered1, cov.covered2
    );
    if !report.frame_constraint_ok {
        println!("note: nu . xi < 1/2; the slicing-frame constraint does not hold");
    }
    Ok(ExitCode::SUCCESS)
}
