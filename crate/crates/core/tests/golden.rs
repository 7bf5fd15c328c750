//! Frozen outputs. Set `DKF_REGEN_GOLDEN=1` to rewrite them.

use std::path::PathBuf;

use dkf_core::graph::{build_graph, is_connected, parse_edge_list, SensorGraph, Topology};
use dkf_core::linalg::{dare_solve, riccati_map, SymMatrix};
use dkf_core::model::{build_constant_velocity_model, SensorAssignment};
use nalgebra::DMatrix;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn regen() -> bool {
    std::env::var_os("DKF_REGEN_GOLDEN").is_some()
}

#[test]
fn random_geometric_hundred_nodes() {
    let g = build_graph(&Topology::RandomGeometric { radius: 0.3, seed: 7 }, 100).unwrap();
    assert!(is_connected(&g));
    let path = data("rgg_n100_r0.3_seed7.edges");
    if regen() {
        std::fs::write(&path, g.to_edge_list()).unwrap();
    }
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(g.to_edge_list(), text);
    let frozen = SensorGraph::from_edges(100, &parse_edge_list(&text).unwrap()).unwrap();
    assert!(is_connected(&frozen));
    assert_eq!(frozen.laplacian(), g.laplacian());
}

#[test]
fn steady_state_prior_covariance() {
    let model = build_constant_velocity_model(0.1, 1.0, 100, SensorAssignment::StaticSplit, 0.5).unwrap();
    let (h, r) = (model.stacked_h(0), model.stacked_r());
    let p = dare_solve(model.f(), &h, model.q(), &r, 1e-14, 100_000).unwrap();

    // independent check: 10,000 information-form Riccati iterations from the
    // identity, P ← F (P⁻¹ + HᵀR⁻¹H)⁻¹ Fᵀ + Q
    let info = h.transpose() * r.as_matrix().clone().try_inverse().unwrap() * &h;
    let (f, q) = (model.f(), model.q().as_matrix());
    let mut it = DMatrix::<f64>::identity(4, 4);
    for _ in 0..10_000 {
        let post = (it.clone().try_inverse().unwrap() + &info).try_inverse().unwrap();
        it = f * post * f.transpose() + q;
    }
    let it = SymMatrix::new(it).unwrap();
    let residual = (riccati_map(&it, model.f(), &h, model.q(), &r).unwrap().as_matrix() - it.as_matrix()).norm();
    assert!(residual < 1e-12, "{residual}");
    assert!((p.as_matrix() - it.as_matrix()).norm() < 1e-10 * p.norm());

    let path = data("pstar_cv_n100.txt");
    if regen() {
        let rows: Vec<String> =
            (0..4).map(|i| (0..4).map(|j| format!("{:.17e}", it[(i, j)])).collect::<Vec<_>>().join(" ")).collect();
        std::fs::write(&path, rows.join("\n") + "\n").unwrap();
    }
    let text = std::fs::read_to_string(&path).unwrap();
    let frozen: Vec<f64> = text.split_whitespace().map(|v| v.parse().unwrap()).collect();
    assert_eq!(frozen.len(), 16);
    for i in 0..4 {
        for j in 0..4 {
            let want = frozen[i * 4 + j];
            assert!((p[(i, j)] - want).abs() <= 1e-10 * p.norm(), "({i},{j}) {} vs {want}", p[(i, j)]);
        }
    }
}
