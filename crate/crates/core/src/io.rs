//! Text mesh formats, VTK legacy export and CSV report rows.
//!
//! Mesh files are plain ASCII with 0-based indices and `#` comments:
//! a node file (`count`, then `index x y` per line) and an element file
//! (`count`, then `index v1 v2 v3` per line). Floats are written with
//! Rust's shortest round-trip formatting, so write-read-write cycles are
//! byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::elasticity::DisplacementField;
use crate::energy::{DamageMask, EnergyBreakdown};
use crate::geometry::{Mesh2, Point2, Triangle};
use crate::recovery::RecoveryCertificate;
use crate::solver::IterationRecord;
use crate::algebra::Vec2;
use crate::{Error, Result};

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(n, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((n + 1, line))
        }
    })
}

fn parse<T: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<T> {
    token.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {what} from '{token}'"),
    })
}

pub fn write_node_string(mesh: &Mesh2) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", mesh.n_vertices());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(out, "{} {} {}", i, p.x, p.y);
    }
    out
}

pub fn write_ele_string(mesh: &Mesh2) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", mesh.n_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let _ = writeln!(out, "{} {} {} {}", t, tri.v[0], tri.v[1], tri.v[2]);
    }
    out
}

pub fn parse_nodes(text: &str) -> Result<Vec<Point2>> {
    let mut lines = data_lines(text);
    let (ln, first) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty node file".into(),
    })?;
    let count: usize = parse(first.split_whitespace().next().unwrap_or(""), ln, "node count")?;
    let mut points = vec![None; count];
    for (ln, line) in lines {
        let mut tok = line.split_whitespace();
        let idx: usize = parse(tok.next().unwrap_or(""), ln, "node index")?;
        let x: f64 = parse(tok.next().unwrap_or(""), ln, "x coordinate")?;
        let y: f64 = parse(tok.next().unwrap_or(""), ln, "y coordinate")?;
        if idx >= count {
            return Err(Error::Parse {
                line: ln,
                msg: format!("node index {idx} out of range (count {count})"),
            });
        }
        points[idx] = Some(Point2::new(x, y));
    }
    points
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            p.ok_or(Error::Parse {
                line: 0,
                msg: format!("node {i} missing"),
            })
        })
        .collect()
}

pub fn parse_elements(text: &str) -> Result<Vec<Triangle>> {
    let mut lines = data_lines(text);
    let (ln, first) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty element file".into(),
    })?;
    let count: usize = parse(first.split_whitespace().next().unwrap_or(""), ln, "element count")?;
    let mut tris = vec![None; count];
    for (ln, line) in lines {
        let mut tok = line.split_whitespace();
        let idx: usize = parse(tok.next().unwrap_or(""), ln, "element index")?;
        let a: usize = parse(tok.next().unwrap_or(""), ln, "vertex index")?;
        let b: usize = parse(tok.next().unwrap_or(""), ln, "vertex index")?;
        let c: usize = parse(tok.next().unwrap_or(""), ln, "vertex index")?;
        if idx >= count {
            return Err(Error::Parse {
                line: ln,
                msg: format!("element index {idx} out of range (count {count})"),
            });
        }
        tris[idx] = Some(Triangle::new(a, b, c));
    }
    tris.into_iter()
        .enumerate()
        .map(|(i, t)| {
            t.ok_or(Error::Parse {
                line: 0,
                msg: format!("element {i} missing"),
            })
        })
        .collect()
}

pub fn read_mesh(node_path: &Path, ele_path: &Path) -> Result<Mesh2> {
    let nodes = parse_nodes(&fs::read_to_string(node_path)?)?;
    let tris = parse_elements(&fs::read_to_string(ele_path)?)?;
    Mesh2::new(nodes, tris)
}

pub fn write_mesh(mesh: &Mesh2, node_path: &Path, ele_path: &Path) -> Result<()> {
    fs::write(node_path, write_node_string(mesh))?;
    fs::write(ele_path, write_ele_string(mesh))?;
    Ok(())
}

/// Displacement field file: same layout as a node file (`count`, then
/// `index ux uy`).
pub fn write_field_string(u: &DisplacementField) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", u.0.len());
    for (i, v) in u.0.iter().enumerate() {
        let _ = writeln!(out, "{} {} {}", i, v.x, v.y);
    }
    out
}

pub fn parse_field(text: &str) -> Result<DisplacementField> {
    let pts = parse_nodes(text)?;
    Ok(DisplacementField(
        pts.into_iter().map(|p| Vec2::new(p.x, p.y)).collect(),
    ))
}

pub fn read_field(path: &Path) -> Result<DisplacementField> {
    parse_field(&fs::read_to_string(path)?)
}

pub fn write_field(u: &DisplacementField, path: &Path) -> Result<()> {
    fs::write(path, write_field_string(u))?;
    Ok(())
}

/// Damage mask CSV: `triangle,damaged` with 0/1 entries.
pub fn write_mask_string(chi: &DamageMask) -> String {
    let mut out = String::from("triangle,damaged\n");
    for (t, &d) in chi.0.iter().enumerate() {
        let _ = writeln!(out, "{},{}", t, d as u8);
    }
    out
}

pub fn parse_mask(text: &str) -> Result<DamageMask> {
    let mut entries: Vec<(usize, bool)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("triangle") {
            continue;
        }
        let (t, d) = line.split_once(',').ok_or(Error::Parse {
            line: n + 1,
            msg: format!("expected 'triangle,damaged', got '{line}'"),
        })?;
        let t: usize = parse(t.trim(), n + 1, "triangle index")?;
        let d: u8 = parse(d.trim(), n + 1, "damage flag")?;
        entries.push((t, d != 0));
    }
    let len = entries.iter().map(|&(t, _)| t + 1).max().unwrap_or(0);
    let mut mask = vec![false; len];
    for (t, d) in entries {
        mask[t] = d;
    }
    Ok(DamageMask(mask))
}

/// Legacy VTK (ASCII, unstructured grid of triangles) with optional damage
/// cell data and displacement point data, for visualization.
pub fn write_vtk_string(
    mesh: &Mesh2,
    damage: Option<&DamageMask>,
    displacement: Option<&DisplacementField>,
    title: &str,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# vtk DataFile Version 2.0");
    let _ = writeln!(out, "{title}");
    let _ = writeln!(out, "ASCII");
    let _ = writeln!(out, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(out, "POINTS {} double", mesh.n_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{} {} 0", p.x, p.y);
    }
    let m = mesh.n_triangles();
    let _ = writeln!(out, "CELLS {} {}", m, 4 * m);
    for tri in mesh.triangles() {
        let _ = writeln!(out, "3 {} {} {}", tri.v[0], tri.v[1], tri.v[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {m}");
    for _ in 0..m {
        let _ = writeln!(out, "5");
    }
    if let Some(chi) = damage {
        let _ = writeln!(out, "CELL_DATA {m}");
        let _ = writeln!(out, "SCALARS damage int 1");
        let _ = writeln!(out, "LOOKUP_TABLE default");
        for &d in &chi.0 {
            let _ = writeln!(out, "{}", d as u8);
        }
    }
    if let Some(u) = displacement {
        let _ = writeln!(out, "POINT_DATA {}", mesh.n_vertices());
        let _ = writeln!(out, "VECTORS displacement double");
        for v in &u.0 {
            let _ = writeln!(out, "{} {} 0", v.x, v.y);
        }
    }
    out
}

pub const ENERGY_CSV_HEADER: &str =
    "eps,bulk,surface,total,implied_crack_length,perimeter_bound";

pub fn energy_csv_row(eps: f64, b: &EnergyBreakdown) -> String {
    format!(
        "{},{},{},{},{},{}",
        eps, b.bulk, b.surface, b.total, b.implied_crack_length, b.perimeter_bound
    )
}

pub const CERTIFICATE_CSV_HEADER: &str = "eps,bulk,surface,total,implied_crack_length,\
perimeter_bound,target_surface,target_bulk,deviation,n_triangles,n_damaged";

pub fn certificate_csv_row(c: &RecoveryCertificate) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        c.eps,
        c.energy.bulk,
        c.energy.surface,
        c.energy.total,
        c.energy.implied_crack_length,
        c.energy.perimeter_bound,
        c.target_surface,
        c.target_bulk,
        c.deviation,
        c.n_triangles,
        c.n_damaged
    )
}

pub const TRACE_CSV_HEADER: &str = "iter,bulk,surface,total,n_damaged,residual";

pub fn trace_csv_row(r: &IterationRecord) -> String {
    format!(
        "{},{},{},{},{},{}",
        r.iter, r.bulk, r.surface, r.total, r.n_damaged, r.residual
    )
}

pub const SWEEP_CSV_HEADER: &str = "sweep,accepted_moves,energy";

pub fn sweep_csv_row(r: &crate::adapt::SweepRecord) -> String {
    format!("{},{},{}", r.sweep, r.accepted_moves, r.energy)
}
