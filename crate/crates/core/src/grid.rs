//! Clenshaw-Curtis abscissas on `[0, 1]` and the isotropic Smolyak
//! construction `A(q, r) = sum_{|i| <= q} Delta_{i_1} x ... x Delta_{i_r}`,
//! with level `i` holding `1` node for `i = 0` and `2^i + 1` nodes otherwise.
//!
//! Interpolation uses the combination technique: the Smolyak operator equals
//! `sum_{q - r < |i| <= q} c_i (I_{i_1} x ... x I_{i_r})` with
//! `c_i = sum_{e in {0,1}^r, |i + e| <= q} (-1)^{|e|}`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{self, Write};

use crate::model::ParameterPoint;

/// Number of nodes on level `i`.
pub fn level_size(i: usize) -> usize {
    if i == 0 {
        1
    } else {
        (1usize << i) + 1
    }
}

/// `(1 - cos(pi * num / den)) / 2`, written as `(1 + sin(pi (2 num - den) / (2 den))) / 2`
/// so that the midpoint is exactly `0.5` and the set is exactly symmetric.
fn chebyshev_extremum(num: u64, den: u64) -> f64 {
    let arg = (2 * num) as f64 - den as f64;
    0.5 * (1.0 + (PI * arg / (2 * den) as f64).sin())
}

#[derive(Debug, Clone)]
pub struct Level1D {
    pub index: usize,
    /// Ascending abscissas in `[0, 1]`.
    pub nodes: Vec<f64>,
    /// Barycentric weights for Lagrange interpolation through `nodes`.
    pub bary_weights: Vec<f64>,
    /// Clenshaw-Curtis weights for the uniform density on `[0, 1]`.
    pub quad_weights: Vec<f64>,
}

impl Level1D {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Values of all Lagrange basis polynomials at `x`.
    pub fn lagrange_basis(&self, x: f64) -> Vec<f64> {
        let m = self.nodes.len();
        if m == 1 {
            return vec![1.0];
        }
        if let Some(j) = self.nodes.iter().position(|&xj| xj == x) {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            return e;
        }
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.bary_weights)
            .map(|(xj, wj)| wj / (x - xj))
            .collect();
        let denom: f64 = terms.iter().sum();
        terms.into_iter().map(|t| t / denom).collect()
    }

    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        self.lagrange_basis(x).iter().zip(values).map(|(b, v)| b * v).sum()
    }
}

pub fn cc_nodes(i: usize) -> Level1D {
    if i == 0 {
        return Level1D {
            index: 0,
            nodes: vec![0.5],
            bary_weights: vec![1.0],
            quad_weights: vec![1.0],
        };
    }
    let n = 1u64 << i;
    let m = level_size(i);
    let nodes: Vec<f64> = (0..=n).map(|j| chebyshev_extremum(j, n)).collect();
    let bary_weights = (0..m)
        .map(|j| {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == m - 1 {
                0.5 * sign
            } else {
                sign
            }
        })
        .collect();

    // w_j = c_j / n (1 - sum_{k=1}^{n/2} b_k cos(2 k theta_j) / (4 k^2 - 1)) on
    // [-1, 1]; halved for the uniform density on [0, 1]
    let nf = n as f64;
    let half = (n / 2) as usize;
    let quad_weights = (0..m)
        .map(|j| {
            let theta = j as f64 * PI / nf;
            let mut s = 0.0;
            for k in 1..=half {
                let b = if k == half { 1.0 } else { 2.0 };
                let kf = k as f64;
                s += b * (2.0 * kf * theta).cos() / (4.0 * kf * kf - 1.0);
            }
            let c = if j == 0 || j == m - 1 { 1.0 } else { 2.0 };
            0.5 * c / nf * (1.0 - s)
        })
        .collect();
    Level1D {
        index: i,
        nodes,
        bary_weights,
        quad_weights,
    }
}

/// One full tensor interpolant in the combination formula.
#[derive(Debug, Clone)]
pub struct CombinationTerm {
    pub levels: Vec<usize>,
    pub coeff: f64,
    /// Grid point ids of the tensor nodes, last dimension fastest.
    pub point_ids: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SparseGrid {
    r: usize,
    q: usize,
    points: Vec<ParameterPoint>,
    weights: Vec<f64>,
    terms: Vec<CombinationTerm>,
    levels: Vec<Level1D>,
}

/// Multi-indices of length `r` with entries summing to at most `q`, in
/// lexicographic order.
fn multi_indices(r: usize, q: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, r: usize, budget: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == r {
            out.push(prefix.clone());
            return;
        }
        for i in 0..=budget {
            prefix.push(i);
            rec(prefix, r, budget - i, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(r), r, q, &mut out);
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Calls `f` with every tensor index over `sizes`, last dimension fastest.
fn for_each_tensor_index(sizes: &[usize], mut f: impl FnMut(&[usize])) {
    if sizes.iter().any(|&s| s == 0) {
        return;
    }
    let mut idx = vec![0usize; sizes.len()];
    loop {
        f(&idx);
        let mut d = sizes.len();
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < sizes[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

pub fn smolyak_grid(q: usize, r: usize) -> SparseGrid {
    assert!(r >= 1, "parameter dimension must be positive");
    let levels: Vec<Level1D> = (0..=q).map(cc_nodes).collect();
    // every node is identified by its index on the finest level
    let finest = q.max(1);
    let key = |level: usize, j: usize| -> u64 {
        if level == 0 {
            1u64 << (finest - 1)
        } else {
            (j as u64) << (finest - level)
        }
    };
    let den = 1u64 << finest;

    let mut lookup: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut points = Vec::new();
    let mut terms = Vec::new();
    for alpha in multi_indices(r, q) {
        let total: usize = alpha.iter().sum();
        // c_alpha = sum_{k=0}^{min(r, q-|alpha|)} (-1)^k C(r, k)
        let coeff: f64 = (0..=r.min(q - total))
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * binomial(r, k))
            .sum();
        let sizes: Vec<usize> = alpha.iter().map(|&a| level_size(a)).collect();
        let mut ids = Vec::new();
        for_each_tensor_index(&sizes, |idx| {
            let k: Vec<u64> = alpha.iter().zip(idx).map(|(&a, &j)| key(a, j)).collect();
            let id = *lookup.entry(k.clone()).or_insert_with(|| {
                points.push(ParameterPoint(k.iter().map(|&kk| chebyshev_extremum(kk, den)).collect()));
                points.len() - 1
            });
            ids.push(id);
        });
        if coeff != 0.0 {
            terms.push(CombinationTerm {
                levels: alpha,
                coeff,
                point_ids: ids,
            });
        }
    }

    let mut weights = vec![0.0; points.len()];
    for term in &terms {
        let sizes: Vec<usize> = term.levels.iter().map(|&a| level_size(a)).collect();
        let mut pos = 0;
        for_each_tensor_index(&sizes, |idx| {
            let w: f64 = term
                .levels
                .iter()
                .zip(idx)
                .map(|(&a, &j)| levels[a].quad_weights[j])
                .product();
            weights[term.point_ids[pos]] += term.coeff * w;
            pos += 1;
        });
    }

    SparseGrid {
        r,
        q,
        points,
        weights,
        terms,
        levels,
    }
}

impl SparseGrid {
    pub fn dim(&self) -> usize {
        self.r
    }

    pub fn level(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points in generation order.
    pub fn points(&self) -> &[ParameterPoint] {
        &self.points
    }

    pub fn terms(&self) -> &[CombinationTerm] {
        &self.terms
    }

    pub fn quadrature_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn quadrature(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Smolyak interpolant of the sampled values, evaluated at `y`.
    pub fn interpolate(&self, values: &[f64], y: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len());
        assert_eq!(y.len(), self.r);
        // 1D basis values per (dimension, level), computed lazily
        let mut basis: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; self.q + 1]; self.r];
        let mut total = 0.0;
        for term in &self.terms {
            for (d, &a) in term.levels.iter().enumerate() {
                if basis[d][a].is_none() {
                    basis[d][a] = Some(self.levels[a].lagrange_basis(y[d]));
                }
            }
            let sizes: Vec<usize> = term.levels.iter().map(|&a| level_size(a)).collect();
            let mut acc = 0.0;
            let mut pos = 0;
            for_each_tensor_index(&sizes, |idx| {
                let mut w = 1.0;
                for (d, (&a, &j)) in term.levels.iter().zip(idx).enumerate() {
                    w *= basis[d][a].as_ref().unwrap()[j];
                }
                acc += w * values[term.point_ids[pos]];
                pos += 1;
            });
            total += term.coeff * acc;
        }
        total
    }

    /// Smallest Euclidean distance between two distinct grid points.
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in (i + 1)..self.points.len() {
                best = best.min(self.points[i].distance(&self.points[j]));
            }
        }
        best
    }

    /// One row per point: `y1..yr,weight`.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        let header: Vec<String> = (1..=self.r).map(|d| format!("y{d}")).collect();
        writeln!(w, "{},weight", header.join(","))?;
        for (p, wt) in self.points.iter().zip(&self.weights) {
            let cols: Vec<String> = p.0.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{},{wt:.16e}", cols.join(","))?;
        }
        Ok(())
    }
}

/// Full tensor grid with the given level per dimension: points in
/// lexicographic order and their product quadrature weights.
pub fn tensor_grid(levels: &[usize]) -> (Vec<ParameterPoint>, Vec<f64>) {
    let rules: Vec<Level1D> = levels.iter().map(|&i| cc_nodes(i)).collect();
    let sizes: Vec<usize> = rules.iter().map(Level1D::len).collect();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for_each_tensor_index(&sizes, |idx| {
        points.push(ParameterPoint(rules.iter().zip(idx).map(|(r, &j)| r.nodes[j]).collect()));
        weights.push(rules.iter().zip(idx).map(|(r, &j)| r.quad_weights[j]).product());
    });
    (points, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_levels() {
        assert_eq!(cc_nodes(0).nodes, vec![0.5]);
        assert_eq!(cc_nodes(1).nodes, vec![0.0, 0.5, 1.0]);
        let l2 = cc_nodes(2);
        assert_eq!(l2.len(), 5);
        let expect = [0.0, 0.146_446_609_406_726_24, 0.5, 0.853_553_390_593_273_8, 1.0];
        for (a, b) in l2.nodes.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_and_nesting() {
        for i in 1..=10 {
            let lvl = cc_nodes(i);
            let m = lvl.len();
            assert_eq!(m, level_size(i));
            for (j, x) in lvl.nodes.iter().enumerate() {
                let cos_form = (1.0 - (PI * j as f64 / (m - 1) as f64).cos()) / 2.0;
                assert!((x - cos_form).abs() < 1e-15);
                // symmetric about 1/2
                assert!((x + lvl.nodes[m - 1 - j] - 1.0).abs() <= f64::EPSILON);
            }
            let finer = cc_nodes(i + 1);
            for (j, x) in lvl.nodes.iter().enumerate() {
                assert_eq!(finer.nodes[2 * j].to_bits(), x.to_bits());
            }
        }
        assert_eq!(cc_nodes(1).nodes[1].to_bits(), cc_nodes(0).nodes[0].to_bits());
    }

    #[test]
    fn three_point_weights() {
        let w = cc_nodes(1).quad_weights;
        assert!((w[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((w[2] - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn small_grids_by_hand() {
        let g = smolyak_grid(2, 1);
        assert_eq!(g.len(), 5);
        let mut xs: Vec<f64> = g.points().iter().map(|p| p.0[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, cc_nodes(2).nodes);

        let g = smolyak_grid(1, 2);
        let pts: Vec<Vec<f64>> = g.points().iter().map(|p| p.0.clone()).collect();
        assert_eq!(
            pts,
            vec![
                vec![0.5, 0.5],
                vec![0.5, 0.0],
                vec![0.5, 1.0],
                vec![0.0, 0.5],
                vec![1.0, 0.5],
            ]
        );

        let g = smolyak_grid(0, 4);
        assert_eq!(g.len(), 1);
        assert_eq!(g.points()[0].0, vec![0.5; 4]);
        assert_eq!(g.quadrature_weights(), &[1.0]);
    }

    #[test]
    fn combination_coefficients() {
        // r = 2: c = 1 on |i| = q, -1 on |i| = q - 1
        let g = smolyak_grid(3, 2);
        for t in g.terms() {
            let s: usize = t.levels.iter().sum();
            assert_eq!(t.coeff, if s == 3 { 1.0 } else { -1.0 });
        }
        assert_eq!(binomial(3, 2), 3.0);
    }

    #[test]
    fn tensor_grid_weights() {
        let (pts, w) = tensor_grid(&[1, 2]);
        assert_eq!(pts.len(), 15);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
