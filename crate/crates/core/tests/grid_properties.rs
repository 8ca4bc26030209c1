use mfsc::grid::{cc_nodes, smolyak_grid};

#[test]
fn paper_grid_cardinality() {
    let n = smolyak_grid(8, 4).len();
    assert!((18945..=18947).contains(&n), "{n}");
}

#[test]
fn interpolation_reproduces_nodal_values() {
    for r in 1..=4 {
        for q in 0..=4 {
            let g = smolyak_grid(q, r);
            let values: Vec<f64> = (0..g.len()).map(|i| ((i * 37 + 11) % 101) as f64 / 7.0 - 3.0).collect();
            for (k, y) in g.points().iter().enumerate() {
                let v = g.interpolate(&values, y.coords());
                assert!((v - values[k]).abs() <= 1e-13 * 15.0, "q={q} r={r} node {k}: {v} vs {}", values[k]);
            }
        }
    }
}

#[test]
fn low_degree_polynomials_are_interpolated_exactly() {
    let probes = [[0.13, 0.71, 0.4], [0.9, 0.05, 0.33], [0.5, 0.5, 0.99]];
    let g = smolyak_grid(2, 3);
    let f = |y: &[f64]| 1.0 - 2.0 * y[0] + 0.5 * y[2] + 3.0 * y[0] * y[1] - y[1] * y[1];
    let values: Vec<f64> = g.points().iter().map(|p| f(p.coords())).collect();
    for y in probes {
        assert!((g.interpolate(&values, &y) - f(&y)).abs() < 1e-13);
    }
    let g = smolyak_grid(1, 2);
    let values: Vec<f64> = g.points().iter().map(|p| p.coords()[0] * p.coords()[1]).collect();
    // y1 y2 needs level 1 in both directions at once
    assert!((g.interpolate(&values, &[0.2, 0.3]) - 0.06).abs() > 1e-3);
    let g = smolyak_grid(2, 2);
    let values: Vec<f64> = g.points().iter().map(|p| p.coords()[0] * p.coords()[1]).collect();
    assert!((g.interpolate(&values, &[0.2, 0.3]) - 0.06).abs() < 1e-14);
}

#[test]
fn quadrature_of_linear_and_quadratic_functionals() {
    let g = smolyak_grid(8, 4);
    let sum_y: Vec<f64> = g.points().iter().map(|p| p.coords().iter().sum()).collect();
    let sq: Vec<f64> = sum_y.iter().map(|s| s * s).collect();
    assert!((g.quadrature(&sum_y) - 2.0).abs() < 1e-10);
    assert!((g.quadrature(&sq) - (4.0 + 4.0 / 12.0)).abs() < 1e-10);
    assert!((g.quadrature(&vec![1.0; g.len()]) - 1.0).abs() < 1e-12);
    let smooth: Vec<f64> = g.points().iter().map(|p| p.coords().iter().map(|y| y.exp()).product()).collect();
    assert!((g.quadrature(&smooth) - (1f64.exp() - 1.0).powi(4)).abs() < 1e-9);
}

#[test]
fn grids_are_nested() {
    for r in 1..=3 {
        for q in 0..5 {
            let coarse = smolyak_grid(q, r);
            let fine = smolyak_grid(q + 1, r);
            for p in coarse.points() {
                assert!(fine.points().iter().any(|f| f == p), "q={q} r={r} {p:?}");
            }
        }
    }
    for i in 0..6 {
        let (a, b) = (cc_nodes(i), cc_nodes(i + 1));
        assert!(a.nodes.iter().all(|x| b.nodes.contains(x)));
    }
}
