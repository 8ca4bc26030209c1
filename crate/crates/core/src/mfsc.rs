//! Multi-fidelity collocation sweep.
//!
//! Nodes are visited in grid generation order. A node with no previously
//! solved anchor strictly within `eta` is solved by the full FE march and
//! becomes an anchor; otherwise it is solved by the POD-Galerkin model of
//! the nearest anchor (ties go to the earliest anchor).
//!
//! Which node is an anchor, and which anchor serves which node, depends only
//! on the grid geometry and `eta`, so the run is planned first and executed
//! afterwards. Execution is the same sequence of pure solves in sequential
//! and parallel mode, and both give bit-identical results.

use std::collections::HashMap;
use std::sync::Arc;

use log::{debug, warn};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{assemble_with, march, AffineLoads, FemSystem, SnapshotSet};
use crate::grid::{smolyak_grid, SparseGrid};
use crate::mesh::build_structured_mesh;
use crate::model::{AffineForcing, ParameterPoint};
use crate::pod::{build_pod_basis, correlation_matrix, eigendecompose, ReducedModel, RANK_TOL};
use crate::quadrature::LoadQuadrature;

#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub mesh_cells: usize,
    pub time_step: f64,
    pub steps: usize,
    pub grid_level: usize,
    pub dim: usize,
    pub pod_rank: usize,
    pub snapshot_stride: usize,
    pub quadrature: LoadQuadrature,
}

impl Discretization {
    /// Mesh 32 x 32, `k = 0.1`, `T = 1`, `q = 8`, `r = 4`, 6 POD modes, every step a snapshot.
    pub fn paper() -> Self {
        Discretization {
            mesh_cells: 32,
            time_step: 0.1,
            steps: 10,
            grid_level: 8,
            dim: 4,
            pod_rank: 6,
            snapshot_stride: 1,
            quadrature: LoadQuadrature::default(),
        }
    }

    /// Desk-scale variant: mesh 8 x 8 and `q = 4`.
    pub fn quick() -> Self {
        Discretization {
            mesh_cells: 8,
            grid_level: 4,
            ..Self::paper()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub store_trajectories: bool,
    pub parallel: bool,
}

/// Everything shared by the runs of one experiment.
#[derive(Debug, Clone)]
pub struct Setup {
    pub disc: Discretization,
    pub forcing: AffineForcing,
    pub system: FemSystem,
    pub loads: AffineLoads,
    pub grid: Arc<SparseGrid>,
}

impl Setup {
    pub fn new(disc: Discretization, forcing: AffineForcing) -> Result<Self> {
        if forcing.dim() != disc.dim {
            return Err(Error::InvalidArgument(format!(
                "forcing has {} parameters but the grid dimension is {}",
                forcing.dim(),
                disc.dim
            )));
        }
        if disc.dim == 0 || disc.pod_rank == 0 || disc.snapshot_stride == 0 || disc.steps == 0 {
            return Err(Error::InvalidArgument(
                "dimension, POD rank, snapshot stride and step count must be positive".into(),
            ));
        }
        let mesh = build_structured_mesh(disc.mesh_cells)?;
        let system = assemble_with(&mesh, disc.quadrature);
        let loads = AffineLoads::assemble(&system, &forcing);
        let grid = Arc::new(smolyak_grid(disc.grid_level, disc.dim));
        Ok(Setup {
            disc,
            forcing,
            system,
            loads,
            grid,
        })
    }
}

/// Previously solved parameter points, searched within radius `eta`.
#[derive(Debug, Clone)]
pub struct AnchorCache {
    eta: f64,
    /// (grid point id, coordinates), in insertion order.
    entries: Vec<(usize, ParameterPoint)>,
}

impl AnchorCache {
    pub fn new(eta: f64) -> Self {
        AnchorCache {
            eta,
            entries: Vec::new(),
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, id: usize, point: ParameterPoint) {
        self.entries.push((id, point));
    }

    /// Nearest anchor with `||y - anchor|| < eta`, earliest on ties.
    pub fn lookup(&self, y: &ParameterPoint) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (id, p) in &self.entries {
            let dist = p.distance(y);
            if dist < self.eta && best.is_none_or(|(_, b)| dist < b) {
                best = Some((*id, dist));
            }
        }
        best.map(|(id, _)| id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSource {
    Full,
    /// Reduced solve with the basis of the given anchor node.
    Reduced { anchor: usize },
}

/// Decides, for every grid node in order, whether it is an anchor or which
/// anchor serves it.
pub fn plan(grid: &SparseGrid, eta: Option<f64>) -> Vec<NodeSource> {
    let Some(eta) = eta else {
        return vec![NodeSource::Full; grid.len()];
    };
    let mut cache = AnchorCache::new(eta);
    grid.points()
        .iter()
        .enumerate()
        .map(|(i, y)| match cache.lookup(y) {
            Some(anchor) => NodeSource::Reduced { anchor },
            None => {
                cache.insert(i, y.clone());
                NodeSource::Full
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CollocationRun {
    pub grid: Arc<SparseGrid>,
    pub disc: Discretization,
    /// `None` for the pure FE reference.
    pub eta: Option<f64>,
    pub sources: Vec<NodeSource>,
    /// Final-time FE coefficient vector per node.
    pub finals: Vec<Vec<f64>>,
    /// `w^1..w^N` per node, when requested.
    pub trajectories: Option<Vec<Vec<Vec<f64>>>>,
    pub fe_call_count: usize,
    pub pod_call_count: usize,
    /// Anchors whose POD rank had to be lowered to the snapshot rank.
    pub truncated_bases: usize,
}

struct FullSolve {
    snapshots: SnapshotSet,
    trajectory: Option<Vec<Vec<f64>>>,
}

fn full_solve(setup: &Setup, y: &ParameterPoint, keep_trajectory: bool) -> Result<FullSolve> {
    let disc = &setup.disc;
    let mut indices = Vec::new();
    let mut snaps = Vec::new();
    let mut final_state = Vec::new();
    let mut trajectory = keep_trajectory.then(Vec::new);
    march(
        &setup.system,
        &setup.loads.at(y.coords()),
        disc.steps,
        disc.time_step,
        |m, w| {
            if m % disc.snapshot_stride == 0 {
                indices.push(m);
                snaps.push(w.to_vec());
            }
            if m == disc.steps {
                final_state = w.to_vec();
            }
            if let Some(t) = trajectory.as_mut() {
                t.push(w.to_vec());
            }
        },
    )?;
    Ok(FullSolve {
        snapshots: SnapshotSet {
            anchor: y.clone(),
            time_step: disc.time_step,
            steps: disc.steps,
            times: indices.iter().map(|&m| m as f64 * disc.time_step).collect(),
            indices,
            snapshots: snaps,
            final_state,
        },
        trajectory,
    })
}

/// Reduced model of an anchor; the rank is lowered to the numerical
/// snapshot rank when needed. Returns whether it was lowered.
fn anchor_model(setup: &Setup, snaps: &SnapshotSet) -> Result<(ReducedModel, bool)> {
    let requested = setup.disc.pod_rank;
    let rank = eigendecompose(&correlation_matrix(snaps, &setup.system)?, RANK_TOL).rank;
    let d = requested.min(rank);
    if d < requested {
        debug!(
            "anchor {:?}: snapshot rank {rank} below requested POD rank {requested}, using {d}",
            snaps.anchor.coords()
        );
    }
    let basis = build_pod_basis(snaps, &setup.system, d)?;
    Ok((ReducedModel::new(&basis, &setup.system, &setup.loads), d < requested))
}

struct NodeResult {
    last: Vec<f64>,
    trajectory: Option<Vec<Vec<f64>>>,
}

fn reduced_solve(setup: &Setup, model: &ReducedModel, y: &ParameterPoint, keep: bool) -> Result<NodeResult> {
    let coeffs = model.solve(y, setup.disc.steps, setup.disc.time_step)?;
    Ok(NodeResult {
        last: model.lift(coeffs.last().expect("at least one step")),
        trajectory: keep.then(|| coeffs.iter().map(|c| model.lift(c)).collect()),
    })
}

fn at_node(y: &ParameterPoint) -> impl Fn(Error) -> Error + '_ {
    move |e| Error::AtNode {
        coords: y.0.clone(),
        source: Box::new(e),
    }
}

fn execute(setup: &Setup, eta: Option<f64>, opts: RunOptions) -> Result<CollocationRun> {
    let grid = Arc::clone(&setup.grid);
    let sources = plan(&grid, eta);
    let n_nodes = grid.len();
    let keep = opts.store_trajectories;

    let mut last_use: HashMap<usize, usize> = HashMap::new();
    for (i, s) in sources.iter().enumerate() {
        if let NodeSource::Reduced { anchor } = s {
            last_use.insert(*anchor, i);
        }
    }

    let mut results: Vec<Option<NodeResult>> = (0..n_nodes).map(|_| None).collect();
    let mut truncated = 0;

    let solve_anchor = |i: usize| -> Result<(NodeResult, Option<ReducedModel>, bool)> {
        let y = &grid.points()[i];
        let full = full_solve(setup, y, keep).map_err(at_node(y))?;
        let (model, lowered) = if last_use.contains_key(&i) {
            let (m, lowered) = anchor_model(setup, &full.snapshots).map_err(at_node(y))?;
            (Some(m), lowered)
        } else {
            (None, false)
        };
        let node = NodeResult {
            last: full.snapshots.final_state,
            trajectory: full.trajectory,
        };
        Ok((node, model, lowered))
    };

    if opts.parallel {
        let anchors: Vec<usize> = (0..n_nodes).filter(|&i| sources[i] == NodeSource::Full).collect();
        let solved: Vec<_> = anchors
            .par_iter()
            .map(|&i| solve_anchor(i).map(|r| (i, r)))
            .collect::<Result<_>>()?;
        let mut models = HashMap::new();
        for (i, (node, model, lowered)) in solved {
            results[i] = Some(node);
            truncated += usize::from(lowered);
            if let Some(m) = model {
                models.insert(i, m);
            }
        }
        let hits: Vec<(usize, usize)> = sources
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                NodeSource::Reduced { anchor } => Some((i, *anchor)),
                NodeSource::Full => None,
            })
            .collect();
        let reduced: Vec<_> = hits
            .par_iter()
            .map(|&(i, a)| {
                let y = &grid.points()[i];
                reduced_solve(setup, &models[&a], y, keep)
                    .map_err(at_node(y))
                    .map(|r| (i, r))
            })
            .collect::<Result<_>>()?;
        for (i, r) in reduced {
            results[i] = Some(r);
        }
    } else {
        let mut models: HashMap<usize, ReducedModel> = HashMap::new();
        for i in 0..n_nodes {
            match sources[i] {
                NodeSource::Full => {
                    let (node, model, lowered) = solve_anchor(i)?;
                    results[i] = Some(node);
                    truncated += usize::from(lowered);
                    if let Some(m) = model {
                        models.insert(i, m);
                    }
                }
                NodeSource::Reduced { anchor } => {
                    let y = &grid.points()[i];
                    let r = reduced_solve(setup, &models[&anchor], y, keep).map_err(at_node(y))?;
                    results[i] = Some(r);
                    if last_use[&anchor] == i {
                        models.remove(&anchor);
                    }
                }
            }
        }
    }

    let fe_call_count = sources.iter().filter(|s| **s == NodeSource::Full).count();
    let mut finals = Vec::with_capacity(n_nodes);
    let mut trajectories = keep.then(|| Vec::with_capacity(n_nodes));
    for r in results {
        let r = r.expect("every node is solved");
        finals.push(r.last);
        if let (Some(all), Some(t)) = (trajectories.as_mut(), r.trajectory) {
            all.push(t);
        }
    }
    if truncated > 0 {
        warn!(
            "{truncated} of {} anchors had snapshot rank below the requested POD rank {}; their bases were truncated",
            fe_call_count, setup.disc.pod_rank
        );
    }
    Ok(CollocationRun {
        grid,
        disc: setup.disc.clone(),
        eta,
        sources,
        finals,
        trajectories,
        fe_call_count,
        pod_call_count: n_nodes - fe_call_count,
        truncated_bases: truncated,
    })
}

/// Pure FE collocation: every node is a full solve.
pub fn run_reference(setup: &Setup, opts: RunOptions) -> Result<CollocationRun> {
    execute(setup, None, opts)
}

pub fn run_multifidelity(setup: &Setup, eta: f64, opts: RunOptions) -> Result<CollocationRun> {
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    execute(setup, Some(eta), opts)
}

/// Nodal mean and variance at the final time.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentField {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

pub fn compute_moments(run: &CollocationRun) -> MomentField {
    moments_of(run.grid.quadrature_weights(), &run.finals)
}

/// `E[u] = sum w_j u_j`, `Var[u] = sum w_j u_j^2 - E[u]^2` clamped at zero.
pub fn moments_of(weights: &[f64], samples: &[Vec<f64>]) -> MomentField {
    assert_eq!(weights.len(), samples.len());
    let n = samples.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; n];
    let mut second = vec![0.0; n];
    for (w, u) in weights.iter().zip(samples) {
        for i in 0..n {
            mean[i] += w * u[i];
            second[i] += w * u[i] * u[i];
        }
    }
    let variance = mean
        .iter()
        .zip(&second)
        .map(|(m, s)| (s - m * m).max(0.0))
        .collect();
    MomentField { mean, variance }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub mean_l2: f64,
    pub mean_linf: f64,
    pub variance_l2: f64,
    pub variance_linf: f64,
    pub fe_calls: usize,
    pub pod_calls: usize,
    pub reference_fe_calls: usize,
}

fn relative(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Relative mass-norm and max-norm distances between two nodal fields.
pub fn relative_errors(system: &FemSystem, test: &[f64], reference: &[f64]) -> (f64, f64) {
    let diff: Vec<f64> = test.iter().zip(reference).map(|(a, b)| a - b).collect();
    let linf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (
        relative(system.mass_norm(&diff), system.mass_norm(reference)),
        relative(linf(&diff), linf(reference)),
    )
}

pub fn compare_runs(test: &CollocationRun, reference: &CollocationRun, system: &FemSystem) -> Result<ErrorReport> {
    let (a, b) = (&test.disc, &reference.disc);
    let mismatch = |what: &str| Err(Error::InvalidComparison(format!("{what} differs")));
    if a.mesh_cells != b.mesh_cells {
        return mismatch("mesh");
    }
    if a.time_step != b.time_step || a.steps != b.steps {
        return mismatch("time discretisation");
    }
    if a.grid_level != b.grid_level || a.dim != b.dim || test.grid.len() != reference.grid.len() {
        return mismatch("sparse grid");
    }
    if system.num_dofs() != test.finals.first().map_or(0, Vec::len) {
        return mismatch("FE system");
    }
    let mt = compute_moments(test);
    let mr = compute_moments(reference);
    let (mean_l2, mean_linf) = relative_errors(system, &mt.mean, &mr.mean);
    let (variance_l2, variance_linf) = relative_errors(system, &mt.variance, &mr.variance);
    Ok(ErrorReport {
        mean_l2,
        mean_linf,
        variance_l2,
        variance_linf,
        fe_calls: test.fe_call_count,
        pod_calls: test.pod_call_count,
        reference_fe_calls: reference.fe_call_count,
    })
}
