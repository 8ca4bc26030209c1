//! Quadrature rules on triangles, expressed in barycentric coordinates with
//! weights normalised to sum to one (multiply by the triangle area).

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadQuadrature {
    /// Three edge midpoints, exact for quadratics.
    EdgeMidpoint,
    /// Collapsed (Duffy) tensor Gauss-Legendre rule with `order` points per
    /// direction, exact for polynomials of degree `2 * order - 2`.
    CollapsedGauss { order: usize },
}

impl Default for LoadQuadrature {
    fn default() -> Self {
        LoadQuadrature::CollapsedGauss { order: 6 }
    }
}

#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn new(kind: LoadQuadrature) -> Self {
        match kind {
            LoadQuadrature::EdgeMidpoint => TriangleRule {
                points: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
                weights: vec![1.0 / 3.0; 3],
            },
            LoadQuadrature::CollapsedGauss { order } => collapsed_gauss(order),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical coordinates of each point on the triangle `corners`.
    pub fn map(&self, corners: &[[f64; 2]; 3]) -> impl Iterator<Item = ([f64; 3], [f64; 2], f64)> + '_ {
        let corners = *corners;
        self.points.iter().zip(&self.weights).map(move |(l, &w)| {
            let x = l[0] * corners[0][0] + l[1] * corners[1][0] + l[2] * corners[2][0];
            let y = l[0] * corners[0][1] + l[1] * corners[1][1] + l[2] * corners[2][1];
            (*l, [x, y], w)
        })
    }
}

fn collapsed_gauss(order: usize) -> TriangleRule {
    let order = NonZeroUsize::new(order).expect("quadrature order must be positive");
    let gl = GaussLegendre::new(order);
    // nodes on [0, 1]
    let pairs: Vec<(f64, f64)> = gl
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    let mut points = Vec::with_capacity(pairs.len() * pairs.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for &(s, ws) in &pairs {
        for &(t, wt) in &pairs {
            let u = s;
            let v = (1.0 - s) * t;
            points.push([1.0 - u - v, u, v]);
            // reference area is 1/2
            weights.push(2.0 * ws * wt * (1.0 - s));
        }
    }
    TriangleRule { points, weights }
}
