//! Flat key=value configuration with command-line overrides (later wins).
//!
//! Angles are in degrees, lengths in domain units, kappa in energy per unit
//! area. Numbers may be written as plain floats or fractions like `1/64`.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use griffith_core::geometry::AdmissibilityParams;
use griffith_core::recovery::Rect;
use griffith_core::solver::{BoundaryDatum, Poly2, SolveOptions};
use griffith_core::{Mat2, Vec2};

#[derive(Debug, Clone, Default)]
pub struct Config {
    map: BTreeMap<String, String>,
}

pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: f64 = num.trim().parse().with_context(|| format!("bad number '{s}'"))?;
        let d: f64 = den.trim().parse().with_context(|| format!("bad number '{s}'"))?;
        if d == 0.0 {
            bail!("division by zero in '{s}'");
        }
        Ok(n / d)
    } else {
        s.parse().with_context(|| format!("bad number '{s}'"))
    }
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Config::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value, got '{line}'", n + 1))?;
            cfg.map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn apply_overrides(&mut self, sets: &[String]) -> Result<()> {
        for s in sets {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| anyhow!("--set expects key=value, got '{s}'"))?;
            self.map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn number(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            Some(v) => parse_number(v).with_context(|| format!("key '{key}'")),
            None => Ok(default),
        }
    }

    pub fn required_number(&self, key: &str) -> Result<f64> {
        parse_number(
            self.get(key)
                .ok_or_else(|| anyhow!("missing required config key '{key}'"))?,
        )
        .with_context(|| format!("key '{key}'"))
    }

    pub fn integer(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            Some(v) => v.parse().with_context(|| format!("key '{key}'")),
            None => Ok(default),
        }
    }

    pub fn string(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or(default).to_string()
    }

    /// Whitespace- or comma-separated list of numbers.
    pub fn number_list(&self, key: &str) -> Result<Vec<f64>> {
        let raw = self
            .get(key)
            .ok_or_else(|| anyhow!("missing required config key '{key}'"))?;
        raw.split([',', ' '])
            .filter(|t| !t.trim().is_empty())
            .map(parse_number)
            .collect()
    }

    /// Four numbers "x0 y0 x1 y1".
    pub fn rect(&self, key: &str, default: Rect) -> Result<Rect> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => {
                let v: Vec<f64> = raw
                    .split([',', ' '])
                    .filter(|t| !t.trim().is_empty())
                    .map(parse_number)
                    .collect::<Result<_>>()?;
                if v.len() != 4 {
                    bail!("key '{key}' needs 4 numbers (x0 y0 x1 y1), got {}", v.len());
                }
                Ok(Rect {
                    x0: v[0],
                    y0: v[1],
                    x1: v[2],
                    y1: v[3],
                })
            }
        }
    }

    pub fn vec2(&self, key: &str, default: Vec2) -> Result<Vec2> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => {
                let v: Vec<f64> = raw
                    .split([',', ' '])
                    .filter(|t| !t.trim().is_empty())
                    .map(parse_number)
                    .collect::<Result<_>>()?;
                if v.len() != 2 {
                    bail!("key '{key}' needs 2 numbers, got {}", v.len());
                }
                Ok(Vec2::new(v[0], v[1]))
            }
        }
    }

    pub fn admissibility(&self) -> Result<AdmissibilityParams> {
        let eps = self.required_number("eps")?;
        let theta0 = self.number("theta0", 18.0)?;
        let omega_factor = self.number("omega_factor", 6.0)?;
        Ok(AdmissibilityParams::new(eps, omega_factor * eps, theta0)?)
    }

    /// Hooke tensor: `hooke = identity | scaled(c) | lame(lambda, mu)`.
    /// `lame` without arguments reads `lame.lambda` / `lame.mu`.
    pub fn hooke(&self) -> Result<griffith_core::elasticity::HookeTensor> {
        use griffith_core::elasticity::HookeTensor;
        let spec = self.string("hooke", "identity");
        let args = |s: &str, name: &str| -> Option<Vec<f64>> {
            s.strip_prefix(name)
                .and_then(|r| r.trim().strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
                .map(|inner| {
                    inner
                        .split(',')
                        .map(parse_number)
                        .collect::<Result<Vec<f64>>>()
                })
                .transpose()
                .ok()
                .flatten()
        };
        if spec == "identity" {
            Ok(HookeTensor::identity())
        } else if let Some(c) = spec.strip_prefix("scaled:") {
            Ok(HookeTensor::scaled(parse_number(c)?)?)
        } else if let Some(v) = args(&spec, "scaled") {
            if v.len() != 1 {
                bail!("scaled(c) takes one number");
            }
            Ok(HookeTensor::scaled(v[0])?)
        } else if let Some(v) = args(&spec, "lame") {
            if v.len() != 2 {
                bail!("lame(lambda, mu) takes two numbers");
            }
            Ok(HookeTensor::lame(v[0], v[1])?)
        } else if spec == "lame" {
            let lambda = self.required_number("lame.lambda")?;
            let mu = self.required_number("lame.mu")?;
            Ok(HookeTensor::lame(lambda, mu)?)
        } else {
            bail!("unknown hooke spec '{spec}' (identity | scaled(c) | lame(lambda, mu))")
        }
    }

    /// Boundary datum: `datum.kind = affine | poly | ramp`.
    pub fn datum(&self) -> Result<BoundaryDatum> {
        match self.string("datum.kind", "affine").as_str() {
            "affine" => {
                let m = self
                    .get("datum.m")
                    .map(|raw| -> Result<Mat2> {
                        let v: Vec<f64> = raw
                            .split([',', ' '])
                            .filter(|t| !t.trim().is_empty())
                            .map(parse_number)
                            .collect::<Result<_>>()?;
                        if v.len() != 4 {
                            bail!("datum.m needs 4 numbers (row major)");
                        }
                        Ok(Mat2::new(v[0], v[1], v[2], v[3]))
                    })
                    .transpose()?
                    .unwrap_or(Mat2::ZERO);
                let c = self.vec2("datum.c", Vec2::ZERO)?;
                Ok(BoundaryDatum::Affine { m, c })
            }
            "ramp" => Ok(BoundaryDatum::RampY {
                amplitude: self.number("datum.amplitude", 1.0)?,
                center: self.number("datum.center", 0.5)?,
                half_width: self.number("datum.half_width", 0.2)?,
            }),
            "poly" => {
                let parse_poly = |key: &str| -> Result<Poly2> {
                    let raw = self
                        .get(key)
                        .ok_or_else(|| anyhow!("datum.kind=poly needs '{key}'"))?;
                    // Terms "i j coeff" separated by ';'.
                    let mut terms = Vec::new();
                    for term in raw.split(';') {
                        let t: Vec<&str> =
                            term.split_whitespace().filter(|s| !s.is_empty()).collect();
                        if t.len() != 3 {
                            bail!("poly term '{term}' must be 'i j coeff'");
                        }
                        let i: u8 = t[0].parse()?;
                        let j: u8 = t[1].parse()?;
                        if i + j > 3 {
                            bail!("poly degree at most 3, got x^{i} y^{j}");
                        }
                        terms.push((i, j, parse_number(t[2])?));
                    }
                    Ok(Poly2 { terms })
                };
                Ok(BoundaryDatum::Polynomial {
                    wx: parse_poly("datum.wx")?,
                    wy: parse_poly("datum.wy")?,
                })
            }
            other => bail!("unknown datum.kind '{other}' (affine | poly | ramp)"),
        }
    }

    pub fn solve_options(&self) -> Result<SolveOptions> {
        let d = SolveOptions::default();
        Ok(SolveOptions {
            cg_tolerance: self.number("solver.cg_tol", d.cg_tolerance)?,
            cg_max_iters: self.integer("solver.cg_max_iters", d.cg_max_iters)?,
            eta_factor: self.number("solver.eta", d.eta_factor)?,
            max_alternations: self.integer("solver.max_alternations", d.max_alternations)?,
            stagnation_tolerance: self.number("solver.stagnation_tol", d.stagnation_tolerance)?,
            mask_polish: self.integer("solver.mask_polish", 0)? != 0,
        })
    }
}
