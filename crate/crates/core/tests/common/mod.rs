#![allow(dead_code)]

use mfsc::fem::FemSystem;
use mfsc::mesh::Mesh;

/// Gauss-Legendre nodes and weights on [0, 1] by Newton iteration on P_n.
pub fn gauss_legendre_01(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((1.0 - x) / 2.0, w / 2.0));
    }
    out
}

/// Collapsed-square rule on a triangle: `(barycentric, point, weight)`.
/// Exact for polynomials of degree `2n - 2`.
pub fn triangle_points(corners: [[f64; 2]; 3], n: usize) -> Vec<([f64; 3], [f64; 2], f64)> {
    let [a, b, c] = corners;
    let area = ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])).abs() / 2.0;
    let gl = gauss_legendre_01(n);
    let mut pts = Vec::with_capacity(n * n);
    for &(u, wu) in &gl {
        for &(v, wv) in &gl {
            let lam = [1.0 - u, u * (1.0 - v), u * v];
            let x = [
                lam[0] * a[0] + lam[1] * b[0] + lam[2] * c[0],
                lam[0] * a[1] + lam[1] * b[1] + lam[2] * c[1],
            ];
            pts.push((lam, x, wu * wv * u * 2.0 * area));
        }
    }
    pts
}

pub fn corners(mesh: &Mesh, t: usize) -> [[f64; 2]; 3] {
    let tri = mesh.triangles()[t];
    tri.map(|v| mesh.vertices()[v])
}

/// Interior coefficient vector to per-vertex values (boundary zero).
pub fn vertex_values(mesh: &Mesh, coeffs: &[f64]) -> Vec<f64> {
    (0..mesh.num_vertices())
        .map(|v| mesh.interior_index(v).map_or(0.0, |i| coeffs[i]))
        .collect()
}

/// `int (u_h - u)^2` with a collapsed rule of `n x n` points per triangle.
pub fn l2_error_sq(mesh: &Mesh, coeffs: &[f64], exact: impl Fn([f64; 2]) -> f64, n: usize) -> f64 {
    let vals = vertex_values(mesh, coeffs);
    let mut total = 0.0;
    for t in 0..mesh.triangles().len() {
        let tri = mesh.triangles()[t];
        for (lam, x, w) in triangle_points(corners(mesh, t), n) {
            let uh: f64 = (0..3).map(|k| lam[k] * vals[tri[k]]).sum();
            total += w * (uh - exact(x)).powi(2);
        }
    }
    total
}

/// `int f phi_i` for every interior dof.
pub fn load_oracle(system: &FemSystem, f: impl Fn([f64; 2]) -> f64, n: usize) -> Vec<f64> {
    let mesh = system.mesh();
    let mut b = vec![0.0; system.num_dofs()];
    for t in 0..mesh.triangles().len() {
        let tri = mesh.triangles()[t];
        for (lam, x, w) in triangle_points(corners(mesh, t), n) {
            let fx = f(x);
            for k in 0..3 {
                if let Some(i) = mesh.interior_index(tri[k]) {
                    b[i] += w * fx * lam[k];
                }
            }
        }
    }
    b
}

/// `int grad u . grad v` from per-triangle P1 gradients.
pub fn h1_inner(mesh: &Mesh, u: &[f64], v: &[f64]) -> f64 {
    let (uv, vv) = (vertex_values(mesh, u), vertex_values(mesh, v));
    let mut total = 0.0;
    for t in 0..mesh.triangles().len() {
        let tri = mesh.triangles()[t];
        let [a, b, c] = corners(mesh, t);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let grad = |f: &[f64]| {
            let (fa, fb, fc) = (f[tri[0]], f[tri[1]], f[tri[2]]);
            [
                ((fb - fa) * (c[1] - a[1]) - (fc - fa) * (b[1] - a[1])) / det,
                ((fc - fa) * (b[0] - a[0]) - (fb - fa) * (c[0] - a[0])) / det,
            ]
        };
        let (gu, gv) = (grad(&uv), grad(&vv));
        total += det.abs() / 2.0 * (gu[0] * gv[0] + gu[1] * gv[1]);
    }
    total
}

/// Observed order from errors on meshes halving `h`.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// `u = t sin(pi x) sin(pi y)` driven by `f = sin sin (1 + 2 pi^2 t)`:
/// L2 errors at `t = 1` for each `n`, with `k = 1/n^2`.
pub fn manufactured_errors(ns: &[usize]) -> Vec<f64> {
    use std::f64::consts::PI;
    let shape = |x: [f64; 2]| (PI * x[0]).sin() * (PI * x[1]).sin();
    ns.iter()
        .map(|&n| {
            let mesh = mfsc::mesh::build_structured_mesh(n).unwrap();
            let system = mfsc::fem::assemble(&mesh);
            let s = mfsc::fem::load_vector(&system, shape);
            let steps = n * n;
            let dt = 1.0 / steps as f64;
            let source = |t: f64, out: &mut [f64]| {
                for (o, v) in out.iter_mut().zip(&s) {
                    *o = v * (1.0 + 2.0 * PI * PI * t);
                }
            };
            let mut last = Vec::new();
            mfsc::fem::march(&system, &source, steps, dt, |m, w| {
                if m == steps {
                    last = w.to_vec();
                }
            })
            .unwrap();
            l2_error_sq(&mesh, &last, shape, 8).sqrt()
        })
        .collect()
}
