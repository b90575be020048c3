use std::sync::Arc;

use proptest::prelude::*;
use sosmp::experiments::{mixture_chain, oracle, prepare};
use sosmp::prelude::*;

fn coarse() -> StateSpace {
    StateSpace::interval(-2.0, 2.0, 10).unwrap()
}

fn mixture_node(mean: f64, var: f64) -> NodePotential {
    NodePotential::GaussianMixture {
        weights: vec![0.7, 0.3],
        means: vec![mean, -mean],
        variances: vec![var, 2.0 * var],
    }
}

fn smooth_edge(var: f64) -> Arc<EdgePotential> {
    Arc::new(EdgePotential::GaussianMixtureDiff {
        weights: vec![1.0],
        variances: vec![var],
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Synthesis followed by projection is the identity on coefficients.
    #[test]
    fn projection_inverts_synthesis(a in prop::collection::vec(-3.0f64..3.0, 1..15)) {
        let space = StateSpace::standard();
        let grid = space.grid().unwrap();
        let basis = Basis::new(BasisSpec::for_space(&space, a.len()).unwrap(), &grid);
        let back = basis.project(&basis.synthesize(&a).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&back) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    /// BP is exact on a star, a tree that is not a path.
    #[test]
    fn bp_exact_on_stars(
        means in prop::collection::vec(-1.5f64..1.5, 4),
        var in 0.05f64..1.0,
        edge_var in 0.1f64..2.0,
    ) {
        let graph = Graph::new(4, vec![(0, 1), (0, 2), (0, 3)]).unwrap();
        let nodes = means.iter().map(|m| mixture_node(*m, var)).collect();
        let mrf = PairwiseMrf::new(coarse(), graph, nodes, vec![smooth_edge(edge_var); 3]).unwrap();
        let fp = run_to_fixed_point(&mrf, 1e-13, 10).unwrap();
        for u in 0..4 {
            let bp = marginal(&mrf, &fp.messages, u).unwrap();
            let exact = brute_force_marginal(&mrf, u).unwrap();
            prop_assert!(mrf.grid().l1_dist(&bp, &exact) < 1e-9);
        }
    }

    /// Every stochastic coefficient is bounded by `B_j` and every iterate
    /// stays within the same bound under the convex step rule.
    #[test]
    fn coefficients_respect_bounds(seed in 0u64..1000, k in 1usize..6) {
        let mrf = mixture_chain(4, seed + 1).unwrap();
        let basis = Basis::new(BasisSpec::for_space(mrf.space(), 6).unwrap(), mrf.grid());
        let tables = CompatTables::compute(&mrf, &basis).unwrap();
        let runner = Sosmp::new(&mrf, &basis, &tables, SosmpConfig::new(6, k).with_seed(seed)).unwrap();
        let bounds = tables.bounds().to_vec();
        let mut state = runner.init();
        for _ in 0..30 {
            let (fresh, _) = runner.estimates(&state);
            for b in fresh.iter().chain(&state.coeffs) {
                for (j, v) in b.iter().enumerate() {
                    prop_assert!(v.abs() <= bounds[j] * (1.0 + 1e-9));
                }
            }
            runner.step(&mut state);
        }
    }
}

#[test]
fn two_node_chain_converges_to_projected_fixed_point() {
    // With no incoming messages the update is unbiased for the projected
    // fixed point itself, so the error keeps shrinking.
    let mrf = mixture_chain(2, 3).unwrap();
    let fp = oracle(&mrf).unwrap();
    let p = prepare(&mrf, &fp, 8).unwrap();
    let cfg = SosmpConfig::new(8, 5).with_iters(2000).with_seed(4);
    let trace = Sosmp::new(&mrf, &p.basis, &p.tables, cfg)
        .unwrap()
        .run(Some(&p.reference))
        .unwrap();
    let last = trace.last().unwrap();
    assert!(last.e_rel < 1e-3, "e_rel = {}", last.e_rel);
    let mid = trace.records.iter().find(|r| r.t == 200).unwrap();
    assert!(last.e_t < mid.e_t);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mrf = mixture_chain(8, 2).unwrap();
    let basis = Basis::new(BasisSpec::for_space(mrf.space(), 5).unwrap(), mrf.grid());
    let tables = CompatTables::compute(&mrf, &basis).unwrap();
    let cfg = SosmpConfig::new(5, 3).with_iters(50).with_seed(9);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| Sosmp::new(&mrf, &basis, &tables, cfg.clone()).unwrap().run(None).unwrap())
    };
    assert_eq!(run(1).final_state, run(4).final_state);
}

#[test]
fn contractive_rule_with_unit_gamma_matches_basic() {
    let mrf = mixture_chain(5, 6).unwrap();
    let basis = Basis::new(BasisSpec::for_space(mrf.space(), 4).unwrap(), mrf.grid());
    let tables = CompatTables::compute(&mrf, &basis).unwrap();
    let base = SosmpConfig::new(4, 2).with_iters(40).with_seed(1);
    let a = Sosmp::new(&mrf, &basis, &tables, base.clone()).unwrap().run(None).unwrap();
    let b = Sosmp::new(&mrf, &basis, &tables, base.with_step_rule(StepRule::Contractive { gamma: 1.0 }))
        .unwrap()
        .run(None)
        .unwrap();
    assert_eq!(a.final_state, b.final_state);
}

#[test]
fn sosmp_marginals_are_as_good_as_the_truncated_fixed_point() {
    let n = 5;
    let nodes = (0..n).map(|i| mixture_node(0.3 * i as f64 - 0.6, 0.5)).collect();
    let mrf = PairwiseMrf::chain(StateSpace::standard(), nodes, vec![smooth_edge(1.0); n - 1]).unwrap();
    let fp = oracle(&mrf).unwrap();
    let p = prepare(&mrf, &fp, 10).unwrap();
    let cfg = SosmpConfig::new(10, 5).with_iters(1500).with_seed(2);
    let trace = Sosmp::new(&mrf, &p.basis, &p.tables, cfg).unwrap().run(Some(&p.reference)).unwrap();
    // Marginals built from the projected fixed point carry the truncation
    // error; SOSMP may add only a little stochastic error on top.
    let projected = SosmpState {
        t: 0,
        coeffs: p.reference.clone(),
    };
    for u in 0..n {
        let dense = marginal(&mrf, &fp.messages, u).unwrap();
        let truncated = marginal_from_coeffs(&mrf, &p.basis, &projected, u).unwrap();
        let approx = marginal_from_coeffs(&mrf, &p.basis, &trace.final_state, u).unwrap();
        let base = mrf.grid().l1_dist(&dense, &truncated);
        let l1 = mrf.grid().l1_dist(&dense, &approx);
        assert!(base < 0.06, "node {u}: truncation L1 {base}");
        assert!(l1 < base + 0.01, "node {u}: L1 {l1} vs truncation {base}");
    }
}
