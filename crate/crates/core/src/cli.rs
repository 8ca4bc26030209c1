//! Experiment configuration and the batch driver behind the `mfsc` binary.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::fem::FemSystem;
use crate::mfsc::{
    compare_runs, compute_moments, run_multifidelity, run_reference, Discretization, ErrorReport, MomentField,
    RunOptions, Setup,
};
use crate::model::{paper_forcing, parse_expansion, AffineForcing, AffineMode};
use crate::quadrature::LoadQuadrature;

pub const SWEEP_HEADER: &str = "eta,fe_calls,pod_calls,mean_l2,mean_linf,variance_l2,variance_linf";
pub const MOMENTS_HEADER: &str = "dof,x,y,mean,variance";

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    Paper,
    Affine(AffineForcing),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mesh_cells: usize,
    pub time_step: f64,
    pub horizon: f64,
    pub grid_level: usize,
    pub dim: usize,
    pub pod_rank: usize,
    pub snapshot_stride: usize,
    pub etas: Vec<f64>,
    pub forcing: ForcingSpec,
    pub quadrature: LoadQuadrature,
    pub out_dir: PathBuf,
    pub store_trajectories: bool,
    pub parallel: bool,
}

/// `4, 2, 1, 1/2, ..., (1/2)^16`.
pub fn default_eta_sweep() -> Vec<f64> {
    let mut etas = vec![4.0, 2.0, 1.0];
    etas.extend((1..=16).map(|p| 0.5f64.powi(p)));
    etas
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let d = Discretization::paper();
        ExperimentConfig {
            mesh_cells: d.mesh_cells,
            time_step: d.time_step,
            horizon: 1.0,
            grid_level: d.grid_level,
            dim: d.dim,
            pod_rank: d.pod_rank,
            snapshot_stride: d.snapshot_stride,
            etas: default_eta_sweep(),
            forcing: ForcingSpec::Paper,
            quadrature: d.quadrature,
            out_dir: PathBuf::from("out"),
            store_trajectories: false,
            parallel: false,
        }
    }
}

impl ExperimentConfig {
    pub fn quick() -> Self {
        let q = Discretization::quick();
        ExperimentConfig {
            mesh_cells: q.mesh_cells,
            grid_level: q.grid_level,
            ..Self::default()
        }
    }

    /// Number of time steps, `T / k` rounded.
    pub fn steps(&self) -> Result<usize> {
        let ratio = self.horizon / self.time_step;
        let steps = ratio.round();
        if !ratio.is_finite() || steps < 1.0 || (ratio - steps).abs() > 1e-9 {
            return Err(Error::config("k", format!("T / k = {ratio} is not a positive integer")));
        }
        Ok(steps as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mesh_cells < 1 {
            return Err(Error::config("n", "must be at least 1"));
        }
        if !(self.time_step > 0.0) {
            return Err(Error::config("k", "must be positive"));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::config("T", "must be positive"));
        }
        if self.dim < 1 {
            return Err(Error::config("r", "must be at least 1"));
        }
        if self.pod_rank < 1 {
            return Err(Error::config("d", "must be at least 1"));
        }
        if self.snapshot_stride < 1 {
            return Err(Error::config("snapshot_stride", "must be at least 1"));
        }
        if self.etas.is_empty() {
            return Err(Error::config("eta", "list is empty"));
        }
        if let Some(bad) = self.etas.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
            return Err(Error::config("eta", format!("{bad} is not a positive number")));
        }
        if let ForcingSpec::Affine(f) = &self.forcing {
            if f.dim() != self.dim {
                return Err(Error::config(
                    "forcing",
                    format!("{} modes given but r = {}", f.dim(), self.dim),
                ));
            }
        }
        let steps = self.steps()?;
        if self.snapshot_stride > steps {
            return Err(Error::config("snapshot_stride", "exceeds the number of time steps"));
        }
        Ok(())
    }

    pub fn discretization(&self) -> Result<Discretization> {
        Ok(Discretization {
            mesh_cells: self.mesh_cells,
            time_step: self.time_step,
            steps: self.steps()?,
            grid_level: self.grid_level,
            dim: self.dim,
            pod_rank: self.pod_rank,
            snapshot_stride: self.snapshot_stride,
            quadrature: self.quadrature,
        })
    }

    pub fn forcing(&self) -> AffineForcing {
        match &self.forcing {
            ForcingSpec::Paper => paper_forcing(self.dim),
            ForcingSpec::Affine(f) => f.clone(),
        }
    }
}

/// Parses one eta entry: a number, `2^-p`, or `(1/2)^p`.
fn parse_eta(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::config("eta", format!("cannot parse `{s}`"));
    let pow = |base: f64, exp: &str| exp.trim().parse::<i32>().map(|p| base.powi(p)).map_err(|_| bad());
    if let Some(exp) = s.strip_prefix("(1/2)^") {
        pow(0.5, exp)
    } else if let Some(exp) = s.strip_prefix("2^") {
        pow(2.0, exp)
    } else {
        s.parse::<f64>().map_err(|_| bad())
    }
}

pub fn parse_eta_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(parse_eta).collect()
}

fn parse_bool(field: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::config(field, format!("expected true or false, got `{v}`"))),
    }
}

fn parse_num<T: std::str::FromStr>(field: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::config(field, format!("cannot parse `{v}`")))
}

/// Reads the flat `key = value` configuration format. Unset keys keep the
/// values of `base`.
pub fn parse_config(text: &str, base: ExperimentConfig) -> Result<ExperimentConfig> {
    let mut cfg = base;
    let mut forcing_kind: Option<String> = None;
    let mut base_expr: Option<String> = None;
    let mut modes: Vec<(usize, String)> = Vec::new();
    let mut scales: Vec<(usize, f64)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", lineno + 1), "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "n" => cfg.mesh_cells = parse_num(key, value)?,
            "k" => cfg.time_step = parse_num(key, value)?,
            "T" => cfg.horizon = parse_num(key, value)?,
            "q" => cfg.grid_level = parse_num(key, value)?,
            "r" => cfg.dim = parse_num(key, value)?,
            "d" => cfg.pod_rank = parse_num(key, value)?,
            "snapshot_stride" => cfg.snapshot_stride = parse_num(key, value)?,
            "eta" => cfg.etas = parse_eta_list(value)?,
            "out" => cfg.out_dir = PathBuf::from(value),
            "store_trajectories" => cfg.store_trajectories = parse_bool(key, value)?,
            "parallel" => cfg.parallel = parse_bool(key, value)?,
            "load_quadrature" => {
                cfg.quadrature = match value {
                    "midpoint" => LoadQuadrature::EdgeMidpoint,
                    other => match other.strip_prefix("gauss") {
                        Some(order) => LoadQuadrature::CollapsedGauss {
                            order: parse_num(key, order)?,
                        },
                        None => return Err(Error::config(key, format!("unknown rule `{other}`"))),
                    },
                }
            }
            "forcing" => forcing_kind = Some(value.to_string()),
            "forcing.base" => base_expr = Some(value.to_string()),
            _ => {
                if let Some(i) = key.strip_prefix("forcing.mode.") {
                    modes.push((parse_num(key, i)?, value.to_string()));
                } else if let Some(i) = key.strip_prefix("forcing.scale.") {
                    scales.push((parse_num(key, i)?, parse_num(key, value)?));
                } else {
                    return Err(Error::config(key, "unknown key"));
                }
            }
        }
    }

    match forcing_kind.as_deref() {
        None if base_expr.is_none() && modes.is_empty() => {}
        Some("paper") => cfg.forcing = ForcingSpec::Paper,
        Some("affine") | None => {
            modes.sort_by_key(|(i, _)| *i);
            for (pos, (i, _)) in modes.iter().enumerate() {
                if *i != pos + 1 {
                    return Err(Error::config("forcing.mode", "modes must be numbered 1..r without gaps"));
                }
            }
            let mut built = Vec::with_capacity(modes.len());
            for (i, expr) in &modes {
                let scaling = scales.iter().rev().find(|(j, _)| j == i).map_or(1.0, |(_, s)| *s);
                built.push(AffineMode {
                    scaling,
                    field: parse_expansion(expr)?,
                });
            }
            cfg.forcing = ForcingSpec::Affine(AffineForcing {
                base: match &base_expr {
                    Some(e) => parse_expansion(e)?,
                    None => crate::model::Expansion::zero(),
                },
                modes: built,
            });
        }
        Some(other) => return Err(Error::config("forcing", format!("unknown forcing `{other}`"))),
    }
    Ok(cfg)
}

/// Fixed-width scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// File name used for the moments of one multi-fidelity run.
pub fn eta_file_name(eta: f64) -> String {
    format!("mfsc_{}.csv", fmt_f64(eta))
}

pub fn write_moments(path: &Path, system: &FemSystem, m: &MomentField) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{MOMENTS_HEADER}")?;
    for (i, [x, y]) in system.dof_coords().into_iter().enumerate() {
        writeln!(
            w,
            "{i},{},{},{},{}",
            fmt_f64(x),
            fmt_f64(y),
            fmt_f64(m.mean[i]),
            fmt_f64(m.variance[i])
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn sweep_row(eta: f64, r: &ErrorReport) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        fmt_f64(eta),
        r.fe_calls,
        r.pod_calls,
        fmt_f64(r.mean_l2),
        fmt_f64(r.mean_linf),
        fmt_f64(r.variance_l2),
        fmt_f64(r.variance_linf)
    )
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub grid_points: usize,
    pub rows: Vec<(f64, ErrorReport)>,
}

/// Runs the reference and every eta in the sweep, writing all artifacts
/// into `config.out_dir`. On failure a `FAILED` marker with the error text
/// is left next to whatever was already written.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir)?;
    let marker = config.out_dir.join("FAILED");
    if marker.exists() {
        fs::remove_file(&marker)?;
    }
    let result = sweep(config);
    if let Err(e) = &result {
        let _ = fs::write(&marker, format!("{e}\n"));
    }
    result
}

fn sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    let started = Instant::now();
    let setup = Setup::new(config.discretization()?, config.forcing())?;
    let opts = RunOptions {
        store_trajectories: config.store_trajectories,
        parallel: config.parallel,
    };
    let out = &config.out_dir;

    let t0 = Instant::now();
    let reference = run_reference(&setup, opts)?;
    let reference_secs = t0.elapsed().as_secs_f64();
    write_moments(&out.join("reference.csv"), &setup.system, &compute_moments(&reference))?;

    let one = |eta: f64| -> Result<(f64, ErrorReport, f64)> {
        let t = Instant::now();
        let run = run_multifidelity(&setup, eta, opts)?;
        let secs = t.elapsed().as_secs_f64();
        write_moments(&out.join(eta_file_name(eta)), &setup.system, &compute_moments(&run))?;
        let report = compare_runs(&run, &reference, &setup.system)?;
        log::info!(
            "eta={eta:e}: {} FE / {} POD calls, mean L2 {:.3e}, variance L2 {:.3e} ({secs:.1}s)",
            report.fe_calls,
            report.pod_calls,
            report.mean_l2,
            report.variance_l2
        );
        Ok((eta, report, secs))
    };
    let results: Vec<(f64, ErrorReport, f64)> = if config.parallel {
        config.etas.par_iter().map(|&e| one(e)).collect::<Result<_>>()?
    } else {
        config.etas.iter().map(|&e| one(e)).collect::<Result<_>>()?
    };

    let mut csv = String::new();
    writeln!(csv, "{SWEEP_HEADER}").unwrap();
    for (eta, report, _) in &results {
        writeln!(csv, "{}", sweep_row(*eta, report)).unwrap();
    }
    fs::write(out.join("sweep.csv"), csv)?;

    let forcing = config.forcing();
    let meta = json!({
        "n": config.mesh_cells,
        "k": config.time_step,
        "T": config.horizon,
        "steps": setup.disc.steps,
        "q": config.grid_level,
        "r": config.dim,
        "d": config.pod_rank,
        "snapshot_stride": config.snapshot_stride,
        "load_quadrature": format!("{:?}", config.quadrature),
        "eta": config.etas,
        "forcing": {
            "base": forcing.base.to_string(),
            "modes": forcing.modes.iter().map(|m| json!({"scale": m.scaling, "field": m.field.to_string()})).collect::<Vec<_>>(),
        },
        "store_trajectories": config.store_trajectories,
        "parallel": config.parallel,
        "grid_points": setup.grid.len(),
        "interior_dofs": setup.system.num_dofs(),
        "wall_seconds": {
            "reference": reference_secs,
            "per_eta": results.iter().map(|(e, _, s)| json!({"eta": e, "seconds": s})).collect::<Vec<_>>(),
            "total": started.elapsed().as_secs_f64(),
        },
    });
    fs::write(out.join("run.json"), serde_json::to_string_pretty(&meta).unwrap() + "\n")?;

    Ok(SweepResult {
        grid_points: setup.grid.len(),
        rows: results.into_iter().map(|(e, r, _)| (e, r)).collect(),
    })
}
