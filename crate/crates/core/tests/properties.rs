use dkf_core::dkf::{covariance_consensus_step, DkfParams, Execution, NodeState, Wire};
use dkf_core::graph::{build_graph, neighbor_disagreement, spectral_summary, Topology, DEFAULT_SPECTRAL_TOL};
use dkf_core::linalg::{HalfVec, SymMatrix};
use dkf_core::stability::{check_covariance_stability, check_state_stability};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn topology() -> impl Strategy<Value = (Topology, usize)> {
    prop_oneof![
        (3usize..20).prop_map(|n| (Topology::Ring, n)),
        (2usize..20).prop_map(|n| (Topology::Path, n)),
        (2usize..15).prop_map(|n| (Topology::Complete, n)),
        (3usize..25, any::<u64>()).prop_map(|(n, seed)| (Topology::RandomGeometric { radius: 0.6, seed }, n)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn laplacian_structure((topo, n) in topology()) {
        let g = build_graph(&topo, n).unwrap();
        let l = g.laplacian();
        prop_assert_eq!(l, &l.transpose());
        for i in 0..n {
            prop_assert!(l.row(i).sum().abs() < 1e-12);
            prop_assert_eq!(l[(i, i)], g.degree(i) as f64);
        }
        let s = spectral_summary(&g, DEFAULT_SPECTRAL_TOL).unwrap();
        prop_assert_eq!(s.eigenvalues[0], 0.0);
        prop_assert!(s.lambda_2 > 0.0);
        prop_assert!(s.lambda_max <= 2.0 * g.max_degree() as f64 + 1e-9);
    }

    #[test]
    fn disagreement_is_laplacian_row(
        (topo, n) in topology(),
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let g = build_graph(&topo, n).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<DVector<f64>> = (0..n).map(|_| DVector::from_fn(3, |_, _| rng.random_range(-5.0..5.0))).collect();
        let stacked = DVector::from_iterator(3 * n, vals.iter().flat_map(|v| v.iter().copied()));
        let dense = g.laplacian().kronecker(&DMatrix::<f64>::identity(3, 3)) * stacked;
        for i in 0..n {
            let d = neighbor_disagreement(&vals, &g, i).unwrap();
            prop_assert!((d - dense.rows(3 * i, 3)).amax() < 1e-12);
        }
    }

    #[test]
    fn sufficient_regions_are_schur(
        (topo, n) in topology(),
        a in 0.001f64..0.999,
        split in 0.001f64..0.999,
    ) {
        let s = spectral_summary(&build_graph(&topo, n).unwrap(), DEFAULT_SPECTRAL_TOL).unwrap();
        let cov = check_covariance_stability(a * 2.0 / (3.0 * s.lambda_max), &s);
        prop_assert!(cov.sufficient_bound_holds && cov.is_schur);
        // α_λ + 2μ = a·2/λ_max, split between the two
        let budget = a * 2.0 / s.lambda_max;
        let mu = split * budget / 2.0;
        let st = check_state_stability(budget - 2.0 * mu, mu, &s);
        prop_assert!(st.sufficient_bound_holds && st.is_schur);
    }

    #[test]
    fn covariance_sum_is_conserved(
        (topo, n) in topology(),
        a in 0.05f64..0.95,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let g = build_graph(&topo, n).unwrap();
        let s = spectral_summary(&g, DEFAULT_SPECTRAL_TOL).unwrap();
        let params = DkfParams::new(0.1, 0.01, a * 2.0 / (3.0 * s.lambda_max), 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n_omega: Vec<HalfVec> = (0..n)
            .map(|_| HalfVec::from_vector(DVector::from_fn(3, |_, _| rng.random_range(0.0..100.0))).unwrap())
            .collect();
        let mut nodes: Vec<_> = (0..n)
            .map(|i| NodeState::initial(i, DVector::zeros(2), SymMatrix::identity(2), n_omega[i].clone()).unwrap())
            .collect();
        let mut wire = Wire::new(n, 2);
        let target = n_omega.iter().fold(DVector::zeros(3), |acc, w| acc + w.as_vector());
        for t in 1..50 {
            covariance_consensus_step(&mut nodes, &n_omega, &g, &params, &mut wire, t, Execution::Serial).unwrap();
            let sum = nodes.iter().fold(DVector::zeros(3), |acc, s| acc + s.theta.as_vector() + s.nu_tilde.as_vector());
            prop_assert!((sum - &target).amax() <= 1e-12 * target.amax());
        }
    }
}
