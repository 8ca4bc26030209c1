//! Proper orthogonal decomposition of FE snapshots in the `H^1_0` inner
//! product (the stiffness form) and the POD-Galerkin reduced march.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::{AffineLoads, FemSystem, SnapshotSet};
use crate::linalg::jacobi_eigen;
use crate::model::ParameterPoint;
use crate::sparse::dot;

/// Eigenvalues below `RANK_TOL * lambda_1` do not count towards the rank.
pub const RANK_TOL: f64 = 1e-12;

/// `K_ij = (1/l) (U_i, U_j)_{H^1_0}`, symmetrised.
pub fn correlation_matrix(snaps: &SnapshotSet, system: &FemSystem) -> Result<DMatrix<f64>> {
    let l = snaps.len();
    if l == 0 || snaps.snapshots.iter().all(|u| u.iter().all(|&v| v == 0.0)) {
        return Err(Error::DegenerateSnapshots);
    }
    let a_u: Vec<Vec<f64>> = snaps
        .snapshots
        .iter()
        .map(|u| system.stiffness().mul_vec(u))
        .collect();
    let mut k = DMatrix::zeros(l, l);
    for i in 0..l {
        for j in 0..l {
            k[(i, j)] = dot(&snaps.snapshots[i], &a_u[j]) / l as f64;
        }
    }
    Ok((&k + k.transpose()) * 0.5)
}

#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Non-increasing, negatives clamped to zero.
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    /// Number of eigenvalues above `rank_tol * values[0]`.
    pub rank: usize,
}

pub fn eigendecompose(k: &DMatrix<f64>, rank_tol: f64) -> Spectrum {
    let eig = jacobi_eigen(k, 1e-14, 100);
    let values: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let lead = values.first().copied().unwrap_or(0.0);
    let rank = values.iter().filter(|&&v| lead > 0.0 && v > rank_tol * lead).count();
    Spectrum {
        values,
        vectors: eig.vectors,
        rank,
    }
}

#[derive(Debug, Clone)]
pub struct PodBasis {
    pub anchor: ParameterPoint,
    /// `d` coefficient vectors over the interior dofs.
    pub modes: Vec<Vec<f64>>,
    /// `lambda_1 >= ... >= lambda_l > 0`.
    pub eigenvalues: Vec<f64>,
    /// Number of snapshots the basis was built from.
    pub snapshot_count: usize,
}

impl PodBasis {
    pub fn rank(&self) -> usize {
        self.modes.len()
    }

    /// Numerical rank `l` of the snapshot span.
    pub fn span_rank(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `sum_{j > d} lambda_j`.
    pub fn tail_energy(&self, d: usize) -> f64 {
        self.eigenvalues.iter().skip(d).sum()
    }

    /// Gram matrix of the modes in the stiffness inner product.
    pub fn gram(&self, system: &FemSystem) -> DMatrix<f64> {
        let d = self.rank();
        let a_psi: Vec<Vec<f64>> = self.modes.iter().map(|m| system.stiffness().mul_vec(m)).collect();
        DMatrix::from_fn(d, d, |i, j| dot(&self.modes[i], &a_psi[j]))
    }

    /// `(1/l) sum_i ||U_i - sum_{j<=d} (U_i, psi_j) psi_j||^2_{H^1_0}` over
    /// the leading `d` modes.
    pub fn projection_error(&self, snaps: &SnapshotSet, system: &FemSystem, d: usize) -> f64 {
        assert!(d <= self.rank());
        let a_psi: Vec<Vec<f64>> = self.modes[..d]
            .iter()
            .map(|m| system.stiffness().mul_vec(m))
            .collect();
        let total: f64 = snaps
            .snapshots
            .iter()
            .map(|u| {
                let mut residual = u.clone();
                for (psi, apsi) in self.modes[..d].iter().zip(&a_psi) {
                    let c = dot(u, apsi);
                    for (r, p) in residual.iter_mut().zip(psi) {
                        *r -= c * p;
                    }
                }
                system.stiffness().inner(&residual, &residual)
            })
            .sum();
        total / snaps.len() as f64
    }
}

/// Rank-`d` POD basis, `psi_i = (l lambda_i)^{-1/2} sum_j (v_i)_j U_j`.
pub fn build_pod_basis(snaps: &SnapshotSet, system: &FemSystem, d: usize) -> Result<PodBasis> {
    if d == 0 {
        return Err(Error::InvalidArgument("POD rank must be at least 1".into()));
    }
    let k = correlation_matrix(snaps, system)?;
    let spectrum = eigendecompose(&k, RANK_TOL);
    if d > spectrum.rank {
        return Err(Error::RankExceeded {
            requested: d,
            rank: spectrum.rank,
        });
    }
    let l = snaps.len() as f64;
    let n = system.num_dofs();
    let mut modes: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            let scale = 1.0 / (l * spectrum.values[i]).sqrt();
            let mut psi = vec![0.0; n];
            for (j, u) in snaps.snapshots.iter().enumerate() {
                let c = scale * spectrum.vectors[(j, i)];
                for (p, uj) in psi.iter_mut().zip(u) {
                    *p += c * uj;
                }
            }
            psi
        })
        .collect();
    // the formula loses orthogonality like eps * lambda_1 / lambda_i; two
    // Gram-Schmidt passes in the stiffness form restore it without changing
    // the nested spans
    for _ in 0..2 {
        for i in 0..d {
            for j in 0..i {
                let a_psi_j = system.stiffness().mul_vec(&modes[j]);
                let c = dot(&modes[i], &a_psi_j);
                let (head, tail) = modes.split_at_mut(i);
                for (p, q) in tail[0].iter_mut().zip(&head[j]) {
                    *p -= c * q;
                }
            }
            let norm = system.energy_norm(&modes[i]);
            modes[i].iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(PodBasis {
        anchor: snaps.anchor.clone(),
        modes,
        eigenvalues: spectrum.values[..spectrum.rank].to_vec(),
        snapshot_count: snaps.len(),
    })
}

/// Galerkin projection of the FE system onto a POD basis.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    modes: Vec<Vec<f64>>,
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    loads: AffineLoads,
}

impl ReducedModel {
    pub fn new(basis: &PodBasis, system: &FemSystem, loads: &AffineLoads) -> Self {
        let d = basis.rank();
        let project = |m: &crate::sparse::CsrMatrix| {
            let m_psi: Vec<Vec<f64>> = basis.modes.iter().map(|p| m.mul_vec(p)).collect();
            let r = DMatrix::from_fn(d, d, |i, j| dot(&basis.modes[i], &m_psi[j]));
            (&r + r.transpose()) * 0.5
        };
        ReducedModel {
            mass: project(system.mass()),
            stiffness: project(system.stiffness()),
            loads: loads.map(|v| basis.modes.iter().map(|p| dot(p, v)).collect()),
            modes: basis.modes.clone(),
        }
    }

    pub fn rank(&self) -> usize {
        self.modes.len()
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// Reduced coefficients `c^1..c^N` at parameter `y`, from `c^0 = 0`.
    pub fn solve(&self, y: &ParameterPoint, steps: usize, dt: f64) -> Result<Vec<DVector<f64>>> {
        if steps == 0 || !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "reduced march needs steps >= 1 and dt > 0, got steps={steps}, dt={dt}"
            )));
        }
        let d = self.rank();
        let lhs = &self.mass + &self.stiffness * dt;
        let chol = Cholesky::new(lhs).ok_or_else(|| {
            Error::InvalidArgument("reduced system matrix is not positive definite".into())
        })?;
        let mut c = DVector::zeros(d);
        let mut load = vec![0.0; d];
        let mut out = Vec::with_capacity(steps);
        for m in 1..=steps {
            self.loads.eval_into(m as f64 * dt, y.coords(), &mut load);
            let rhs = &self.mass * &c + DVector::from_column_slice(&load) * dt;
            c = chol.solve(&rhs);
            out.push(c.clone());
        }
        Ok(out)
    }

    /// `sum_j c_j psi_j` as a FE coefficient vector.
    pub fn lift(&self, c: &DVector<f64>) -> Vec<f64> {
        let n = self.modes.first().map_or(0, Vec::len);
        let mut out = vec![0.0; n];
        for (psi, &cj) in self.modes.iter().zip(c.iter()) {
            for (o, p) in out.iter_mut().zip(psi) {
                *o += cj * p;
            }
        }
        out
    }
}

/// Lifted reduced solutions `u_d^1..u_d^N` at `y`.
pub fn pod_galerkin_solve(
    basis: &PodBasis,
    system: &FemSystem,
    loads: &AffineLoads,
    y: &ParameterPoint,
    steps: usize,
    dt: f64,
) -> Result<Vec<Vec<f64>>> {
    let model = ReducedModel::new(basis, system, loads);
    Ok(model.solve(y, steps, dt)?.iter().map(|c| model.lift(c)).collect())
}
