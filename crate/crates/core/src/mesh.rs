//! Structured Friedrichs-Keller triangulation of the unit square.
//!
//! Vertices are numbered row-major, `index = j * (n + 1) + i` for the
//! vertex at `(i / n, j / n)`. Every square is cut along the diagonal from
//! its lower-left to its upper-right corner.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Mesh {
    n_cells_per_side: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    interior_dofs: Vec<usize>,
    boundary_dofs: Vec<usize>,
    /// Maps a vertex to its position in `interior_dofs`, if interior.
    interior_index: Vec<Option<usize>>,
}

impl Mesh {
    pub fn n_cells_per_side(&self) -> usize {
        self.n_cells_per_side
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn interior_dofs(&self) -> &[usize] {
        &self.interior_dofs
    }

    pub fn boundary_dofs(&self) -> &[usize] {
        &self.boundary_dofs
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_interior(&self) -> usize {
        self.interior_dofs.len()
    }

    /// Position of `vertex` among the interior unknowns.
    pub fn interior_index(&self, vertex: usize) -> Option<usize> {
        self.interior_index[vertex]
    }

    /// Longest edge length, `sqrt(2) / n`.
    pub fn h(&self) -> f64 {
        std::f64::consts::SQRT_2 / self.n_cells_per_side as f64
    }

    /// Signed area of triangle `t` (positive for counter-clockwise orientation).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    /// Plain-text vertex and triangle listing, for debugging.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vertices {}", self.vertices.len());
        for (i, v) in self.vertices.iter().enumerate() {
            let _ = writeln!(out, "{i} {} {}", v[0], v[1]);
        }
        let _ = writeln!(out, "triangles {}", self.triangles.len());
        for (i, t) in self.triangles.iter().enumerate() {
            let _ = writeln!(out, "{i} {} {} {}", t[0], t[1], t[2]);
        }
        out
    }
}

pub fn build_structured_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "mesh needs at least one cell per side".into(),
        ));
    }
    let side = n + 1;
    let vid = |i: usize, j: usize| j * side + i;

    let mut vertices = Vec::with_capacity(side * side);
    let mut interior_dofs = Vec::new();
    let mut boundary_dofs = Vec::new();
    let mut interior_index = vec![None; side * side];
    for j in 0..side {
        for i in 0..side {
            vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
            let v = vid(i, j);
            if i == 0 || j == 0 || i == n || j == n {
                boundary_dofs.push(v);
            } else {
                interior_index[v] = Some(interior_dofs.len());
                interior_dofs.push(v);
            }
        }
    }

    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (ll, lr, ul, ur) = (vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));
            triangles.push([ll, lr, ur]);
            triangles.push([ll, ur, ul]);
        }
    }

    Ok(Mesh {
        n_cells_per_side: n,
        vertices,
        triangles,
        interior_dofs,
        boundary_dofs,
        interior_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    #[test]
    fn zero_cells_is_rejected() {
        assert!(matches!(build_structured_mesh(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn smallest_mesh_has_no_interior() {
        let m = build_structured_mesh(1).unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.triangles().len(), 2);
        assert_eq!(m.num_interior(), 0);
    }

    #[test]
    fn two_cell_mesh_has_center_dof() {
        let m = build_structured_mesh(2).unwrap();
        assert_eq!(m.num_vertices(), 9);
        assert_eq!(m.triangles().len(), 8);
        assert_eq!(m.interior_dofs(), &[4]);
        assert_eq!(m.vertices()[4], [0.5, 0.5]);
    }

    #[test]
    fn experiment_mesh_counts() {
        let m = build_structured_mesh(32).unwrap();
        assert_eq!(m.num_vertices(), 1089);
        assert_eq!(m.triangles().len(), 2048);
        assert_eq!(m.num_interior(), 961);
        assert_eq!(m.h(), 2f64.sqrt() / 32.0);
    }

    #[test]
    fn closed_form_counts_and_tiling() {
        for n in 1..=64 {
            let m = build_structured_mesh(n).unwrap();
            assert_eq!(m.num_vertices(), (n + 1) * (n + 1));
            assert_eq!(m.triangles().len(), 2 * n * n);
            assert_eq!(m.num_interior(), (n - 1) * (n - 1));
            assert_eq!(m.num_interior() + m.boundary_dofs().len(), m.num_vertices());

            let mut area = 0.0;
            for t in 0..m.triangles().len() {
                let a = m.signed_area(t);
                assert!(a > 0.0);
                area += a;
            }
            assert!((area - 1.0).abs() < 1e-12, "n={n} area={area}");

            for &v in m.boundary_dofs() {
                let [x, y] = m.vertices()[v];
                assert!(x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0);
                assert!(m.interior_index(v).is_none());
            }
            for (k, &v) in m.interior_dofs().iter().enumerate() {
                let [x, y] = m.vertices()[v];
                assert!(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0);
                assert_eq!(m.interior_index(v), Some(k));
            }
        }
    }

    #[test]
    fn edges_shared_by_two_triangles_inside() {
        for n in [1, 2, 5, 16] {
            let m = build_structured_mesh(n).unwrap();
            let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
            for t in m.triangles() {
                for k in 0..3 {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    *edges.entry((a.min(b), a.max(b))).or_default() += 1;
                }
            }
            for ((a, b), count) in edges {
                let on_boundary = |v: usize| m.interior_index(v).is_none();
                let [xa, ya] = m.vertices()[a];
                let [xb, yb] = m.vertices()[b];
                let boundary_edge = on_boundary(a)
                    && on_boundary(b)
                    && ((xa == xb && (xa == 0.0 || xa == 1.0)) || (ya == yb && (ya == 0.0 || ya == 1.0)));
                assert_eq!(count, if boundary_edge { 1 } else { 2 });
            }
        }
    }
}
