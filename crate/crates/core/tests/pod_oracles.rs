mod common;

use mfsc::fem::{assemble, backward_euler_solve, AffineLoads, SnapshotSet};
use mfsc::mesh::build_structured_mesh;
use mfsc::model::{paper_forcing, ParameterPoint};
use mfsc::pod::{build_pod_basis, correlation_matrix, eigendecompose, RANK_TOL};

fn paper_snapshots() -> (mfsc::fem::FemSystem, SnapshotSet) {
    let system = assemble(&build_structured_mesh(32).unwrap());
    let loads = AffineLoads::assemble(&system, &paper_forcing(4));
    let y = ParameterPoint(vec![0.5; 4]);
    let snaps = backward_euler_solve(&system, &loads, &y, 10, 0.1, 1).unwrap();
    (system, snaps)
}

#[test]
fn correlation_matrix_matches_gradient_oracle() {
    let (system, snaps) = paper_snapshots();
    let k = correlation_matrix(&snaps, &system).unwrap();
    let l = snaps.len();
    assert_eq!(l, 10);
    let scale = k.amax();
    for i in 0..l {
        for j in 0..l {
            let oracle = common::h1_inner(system.mesh(), &snaps.snapshots[i], &snaps.snapshots[j]) / l as f64;
            assert!((k[(i, j)] - oracle).abs() <= 1e-10 * scale, "K[{i},{j}]");
        }
    }
}

#[test]
fn error_identity_and_orthonormality_at_the_centre_anchor() {
    let (system, snaps) = paper_snapshots();
    let spectrum = eigendecompose(&correlation_matrix(&snaps, &system).unwrap(), RANK_TOL);
    let l = spectrum.rank;
    assert!(l >= 1);
    let basis = build_pod_basis(&snaps, &system, l).unwrap();
    let lead = spectrum.values[0];
    for d in 1..=l {
        let lhs = basis.projection_error(&snaps, &system, d);
        let rhs: f64 = spectrum.values[d..].iter().sum();
        assert!((lhs - rhs).abs() <= 1e-8 * lead, "d={d}: {lhs} vs {rhs}");
    }
    let gram = basis.gram(&system);
    for i in 0..l {
        for j in 0..l {
            let target = if i == j { 1.0 } else { 0.0 };
            assert!((gram[(i, j)] - target).abs() <= 1e-10);
        }
    }
}
