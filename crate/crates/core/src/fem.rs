//! P1 finite elements on the structured mesh and the backward Euler march
//! `(M + k A) w^m = k F^m + M w^{m-1}` with homogeneous Dirichlet data.

use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::model::{AffineForcing, Expansion, ParameterPoint};
use crate::quadrature::{LoadQuadrature, TriangleRule};
use crate::sparse::{conjugate_gradient, CgSettings, CsrMatrix};

/// Mass and stiffness matrices over all vertices, before boundary elimination.
#[derive(Debug, Clone)]
pub struct GlobalMatrices {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
}

#[derive(Debug, Clone)]
pub struct FemSystem {
    mesh: Mesh,
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    rule: TriangleRule,
    pub cg: CgSettings,
}

/// Gradients of the three barycentric coordinates and the triangle area.
fn p1_gradients(c: &[[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let det = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
    let grads = [
        [(c[1][1] - c[2][1]) / det, (c[2][0] - c[1][0]) / det],
        [(c[2][1] - c[0][1]) / det, (c[0][0] - c[2][0]) / det],
        [(c[0][1] - c[1][1]) / det, (c[1][0] - c[0][0]) / det],
    ];
    (grads, 0.5 * det)
}

fn corners(mesh: &Mesh, t: usize) -> [[f64; 2]; 3] {
    mesh.triangles()[t].map(|v| mesh.vertices()[v])
}

pub fn assemble_global(mesh: &Mesh) -> GlobalMatrices {
    let nv = mesh.num_vertices();
    let mut mass = Vec::with_capacity(9 * mesh.triangles().len());
    let mut stiff = Vec::with_capacity(9 * mesh.triangles().len());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (g, area) = p1_gradients(&corners(mesh, t));
        for a in 0..3 {
            for b in 0..3 {
                let m = if a == b { area / 6.0 } else { area / 12.0 };
                let k = area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
                mass.push((tri[a], tri[b], m));
                stiff.push((tri[a], tri[b], k));
            }
        }
    }
    GlobalMatrices {
        mass: CsrMatrix::from_triplets(nv, nv, &mass),
        stiffness: CsrMatrix::from_triplets(nv, nv, &stiff),
    }
}

pub fn assemble(mesh: &Mesh) -> FemSystem {
    assemble_with(mesh, LoadQuadrature::default())
}

pub fn assemble_with(mesh: &Mesh, quadrature: LoadQuadrature) -> FemSystem {
    let global = assemble_global(mesh);
    let keep = mesh.interior_dofs();
    let index_of = |v| mesh.interior_index(v);
    FemSystem {
        mass: global.mass.restrict(keep, index_of),
        stiffness: global.stiffness.restrict(keep, index_of),
        mesh: mesh.clone(),
        rule: TriangleRule::new(quadrature),
        cg: CgSettings::default(),
    }
}

impl FemSystem {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn num_dofs(&self) -> usize {
        self.mass.nrows()
    }

    pub fn quadrature(&self) -> &TriangleRule {
        &self.rule
    }

    /// Coordinates of each interior unknown.
    pub fn dof_coords(&self) -> Vec<[f64; 2]> {
        self.mesh
            .interior_dofs()
            .iter()
            .map(|&v| self.mesh.vertices()[v])
            .collect()
    }

    pub fn mass_norm(&self, v: &[f64]) -> f64 {
        self.mass.inner(v, v).max(0.0).sqrt()
    }

    pub fn energy_norm(&self, v: &[f64]) -> f64 {
        self.stiffness.inner(v, v).max(0.0).sqrt()
    }
}

/// `int_D f phi_i dx` for every interior basis function.
pub fn load_vector(system: &FemSystem, forcing: impl Fn([f64; 2]) -> f64) -> Vec<f64> {
    let mesh = system.mesh();
    let mut out = vec![0.0; system.num_dofs()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let c = corners(mesh, t);
        let area = mesh.signed_area(t);
        let mut local = [0.0; 3];
        for (lambda, x, w) in system.rule.map(&c) {
            let fx = forcing(x) * w * area;
            for a in 0..3 {
                local[a] += fx * lambda[a];
            }
        }
        for a in 0..3 {
            if let Some(i) = mesh.interior_index(tri[a]) {
                out[i] += local[a];
            }
        }
    }
    out
}

/// One separable piece `exp(rate t) * vector` of a load.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableLoad {
    pub rate: f64,
    pub vector: Vec<f64>,
}

/// Load vectors of an affine forcing, split into time factors and
/// precomputed spatial vectors:
/// `F(t, y) = sum_base e^{a t} L + sum_n y_n sum_mode e^{a t} L`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineLoads {
    len: usize,
    base: Vec<SeparableLoad>,
    modes: Vec<Vec<SeparableLoad>>,
}

impl AffineLoads {
    pub fn assemble(system: &FemSystem, forcing: &AffineForcing) -> Self {
        let pieces = |e: &Expansion, scale: f64| -> Vec<SeparableLoad> {
            e.terms
                .iter()
                .map(|term| SeparableLoad {
                    rate: term.time_rate(),
                    vector: load_vector(system, |x| scale * term.space(x)),
                })
                .collect()
        };
        AffineLoads {
            len: system.num_dofs(),
            base: pieces(&forcing.base, 1.0),
            modes: forcing.modes.iter().map(|m| pieces(&m.field, m.scaling)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn eval_into(&self, t: f64, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.modes.len());
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut add = |piece: &SeparableLoad, scale: f64| {
            let s = scale * (piece.rate * t).exp();
            for (o, v) in out.iter_mut().zip(&piece.vector) {
                *o += s * v;
            }
        };
        for piece in &self.base {
            add(piece, 1.0);
        }
        for (pieces, &yn) in self.modes.iter().zip(y) {
            for piece in pieces {
                add(piece, yn);
            }
        }
    }

    pub fn eval(&self, t: f64, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        self.eval_into(t, y, &mut out);
        out
    }

    /// Applies a linear map to every spatial vector, e.g. a projection onto
    /// a reduced basis.
    pub fn map(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> AffineLoads {
        let apply = |pieces: &[SeparableLoad]| -> Vec<SeparableLoad> {
            pieces
                .iter()
                .map(|p| SeparableLoad {
                    rate: p.rate,
                    vector: f(&p.vector),
                })
                .collect()
        };
        let base = apply(&self.base);
        let modes: Vec<_> = self.modes.iter().map(|m| apply(m)).collect();
        let len = base
            .iter()
            .chain(modes.iter().flatten())
            .map(|p| p.vector.len())
            .next()
            .unwrap_or(0);
        AffineLoads { len, base, modes }
    }

    /// The load at a fixed parameter point, as a source for time stepping.
    pub fn at<'a>(&'a self, y: &'a [f64]) -> impl LoadSource + 'a {
        move |t: f64, out: &mut [f64]| self.eval_into(t, y, out)
    }
}

/// Right-hand side provider `t -> F(t)` for the time march.
pub trait LoadSource {
    fn load_into(&self, t: f64, out: &mut [f64]);
}

impl<F: Fn(f64, &mut [f64])> LoadSource for F {
    fn load_into(&self, t: f64, out: &mut [f64]) {
        self(t, out)
    }
}

/// Backward Euler from initial state `w0`; calls `visit(m, w^m)` for
/// `m = 1..=steps`.
pub fn march_from(
    system: &FemSystem,
    source: &impl LoadSource,
    w0: &[f64],
    steps: usize,
    dt: f64,
    mut visit: impl FnMut(usize, &[f64]),
) -> Result<()> {
    if steps == 0 || !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "backward Euler needs steps >= 1 and dt > 0, got steps={steps}, dt={dt}"
        )));
    }
    let n = system.num_dofs();
    let lhs = system.mass.linear_combination(1.0, &system.stiffness, dt);
    let inv_diag: Vec<f64> = lhs.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut w = w0.to_vec();
    let mut load = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for m in 1..=steps {
        let t = m as f64 * dt;
        source.load_into(t, &mut load);
        system.mass.mul_vec_into(&w, &mut rhs);
        for (r, f) in rhs.iter_mut().zip(&load) {
            *r += dt * f;
        }
        // previous iterate is the initial guess
        conjugate_gradient(&lhs, &inv_diag, &rhs, &mut w, system.cg)?;
        visit(m, &w);
    }
    Ok(())
}

pub fn march(
    system: &FemSystem,
    source: &impl LoadSource,
    steps: usize,
    dt: f64,
    visit: impl FnMut(usize, &[f64]),
) -> Result<()> {
    march_from(system, source, &vec![0.0; system.num_dofs()], steps, dt, visit)
}

/// Full-fidelity solutions at selected time steps of one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub anchor: ParameterPoint,
    pub time_step: f64,
    pub steps: usize,
    /// Step indices `m_i`, strictly increasing in `1..=steps`.
    pub indices: Vec<usize>,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    /// `w^N`, whether or not it is a snapshot.
    pub final_state: Vec<f64>,
}

impl SnapshotSet {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Dof-major CSV: one row per dof, one column per snapshot.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        let coords: Vec<String> = self.anchor.0.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "# anchor={} dt={:.16e} steps={}", coords.join(";"), self.time_step, self.steps)?;
        let header: Vec<String> = self.indices.iter().map(|m| format!("m{m}")).collect();
        writeln!(w, "dof,{}", header.join(","))?;
        let ndof = self.final_state.len();
        for i in 0..ndof {
            let row: Vec<String> = self.snapshots.iter().map(|s| format!("{:.16e}", s[i])).collect();
            writeln!(w, "{i},{}", row.join(","))?;
        }
        Ok(())
    }

    /// Reads back the output of [`SnapshotSet::write_csv`]. The final state
    /// is taken to be the last snapshot.
    pub fn read_csv(r: impl BufRead) -> Result<SnapshotSet> {
        let bad = |m: &str| Error::InvalidArgument(format!("snapshot csv: {m}"));
        let mut lines = r.lines();
        let meta = lines.next().ok_or_else(|| bad("missing header"))??;
        let mut anchor = Vec::new();
        let mut dt = f64::NAN;
        let mut steps = 0;
        for field in meta.trim_start_matches('#').split_whitespace() {
            let (k, v) = field.split_once('=').ok_or_else(|| bad("malformed metadata"))?;
            match k {
                "anchor" => {
                    anchor = v
                        .split(';')
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<f64>().map_err(|_| bad("anchor")))
                        .collect::<Result<_>>()?
                }
                "dt" => dt = v.parse().map_err(|_| bad("dt"))?,
                "steps" => steps = v.parse().map_err(|_| bad("steps"))?,
                _ => {}
            }
        }
        let header = lines.next().ok_or_else(|| bad("missing column header"))??;
        let indices: Vec<usize> = header
            .split(',')
            .skip(1)
            .map(|c| c.trim_start_matches('m').parse().map_err(|_| bad("column header")))
            .collect::<Result<_>>()?;
        let mut snapshots = vec![Vec::new(); indices.len()];
        for line in lines {
            let line = line?;
            let mut cols = line.split(',').skip(1);
            for s in snapshots.iter_mut() {
                let v = cols.next().ok_or_else(|| bad("short row"))?;
                s.push(v.parse().map_err(|_| bad("value"))?);
            }
        }
        let times = indices.iter().map(|&m| m as f64 * dt).collect();
        let final_state = snapshots.last().cloned().unwrap_or_default();
        Ok(SnapshotSet {
            anchor: ParameterPoint(anchor),
            time_step: dt,
            steps,
            indices,
            times,
            snapshots,
            final_state,
        })
    }
}

/// Full FE solve at `y`, keeping every `stride`-th step as a snapshot.
pub fn backward_euler_solve(
    system: &FemSystem,
    loads: &AffineLoads,
    y: &ParameterPoint,
    steps: usize,
    dt: f64,
    stride: usize,
) -> Result<SnapshotSet> {
    if stride == 0 {
        return Err(Error::InvalidArgument("snapshot stride must be positive".into()));
    }
    if y.dim() != loads.dim() {
        return Err(Error::InvalidArgument(format!(
            "parameter point has dimension {}, forcing expects {}",
            y.dim(),
            loads.dim()
        )));
    }
    let mut indices = Vec::new();
    let mut snapshots = Vec::new();
    let mut final_state = Vec::new();
    march(system, &loads.at(y.coords()), steps, dt, |m, w| {
        if m % stride == 0 {
            indices.push(m);
            snapshots.push(w.to_vec());
        }
        if m == steps {
            final_state = w.to_vec();
        }
    })?;
    Ok(SnapshotSet {
        anchor: y.clone(),
        time_step: dt,
        steps,
        times: indices.iter().map(|&m| m as f64 * dt).collect(),
        indices,
        snapshots,
        final_state,
    })
}

/// All iterates `w^1..w^N` of the full solve at `y`.
pub fn backward_euler_trajectory(
    system: &FemSystem,
    loads: &AffineLoads,
    y: &ParameterPoint,
    steps: usize,
    dt: f64,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(steps);
    march(system, &loads.at(y.coords()), steps, dt, |_, w| out.push(w.to_vec()))?;
    Ok(out)
}
