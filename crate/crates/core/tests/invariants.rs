use dust_core::dust::{
    initialize, run, run_from, InitKind, NodeState, RoundOptions, RoundSummary, RunOptions, StepSchedule, SwarmState,
};
use dust_core::graph::{validate_assumption1, Edge, GraphKind, GraphSequence};
use dust_core::metrics::{consensus_diagnostics, max_tracker_norm, theory_constants};
use dust_core::problem::{make_pev_instance, PevParams, ProblemInstance};
use dust_core::Vector;
use proptest::prelude::*;

fn pev(n: usize, d: usize, p: usize, seed: u64, sign: f64, t: usize) -> ProblemInstance {
    make_pev_instance(&PevParams { linear_sign: sign, ..PevParams::new(n, d, p, seed, t) }).unwrap()
}

fn check_round_invariants(inst: &ProblemInstance, traj: &[RoundSummary]) {
    let n = inst.n() as f64;
    for row in traj {
        let rel = (&row.tracker_sum - &row.constraint_sum).norm() / (1.0 + row.constraint_sum.norm());
        assert!(rel <= 1e-9, "t={} tracking error {rel:e}", row.t);
        assert!((row.weight_sum - n).abs() <= 1e-9, "t={} weight sum {}", row.t, row.weight_sum);
        assert!(row.weight_min > 0.0);
        assert!(row.mu_min >= 0.0);
        assert!(row.increment_excess <= 1e-12, "t={} excess {:e}", row.t, row.increment_excess);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn run_invariants_hold(
        n in 2usize..8,
        d in 1usize..4,
        p in 1usize..4,
        window in 1usize..5,
        kind in 0usize..4,
        seed in 0u64..1000,
        utility in any::<bool>(),
        random_init in any::<bool>(),
    ) {
        let horizon = 150;
        let inst = pev(n, d, p, seed, if utility { -1.0 } else { 1.0 }, horizon);
        let seq = GraphSequence::generate(GraphKind::ALL[kind], n, window, seed ^ 0x55).unwrap();
        let init = if random_init { InitKind::SeededRandom(seed) } else { InitKind::ZeroProjected };
        let traj = run(&inst, &seq, &StepSchedule::default(), horizon, RunOptions { init, ..Default::default() }, &mut ()).unwrap();
        check_round_invariants(&inst, &traj);

        let report = validate_assumption1(&seq, horizon, 1.0 / n as f64).unwrap();
        prop_assert!(report.passed());
        let consts = theory_constants(n, p, window, 1.0 / n as f64, inst.bound_constants()).unwrap();
        prop_assert!(max_tracker_norm(&traj).ln() <= consts.ln_tracker_bound);
        for point in consensus_diagnostics(&traj, &consts) {
            prop_assert!(point.within_envelope(), "t={} observed {} envelope ln {}", point.t, point.observed_sum, point.ln_envelope);
        }
    }
}

#[test]
fn invariants_hold_for_other_schedules() {
    let inst = pev(5, 3, 2, 17, -1.0, 300);
    let seq = GraphSequence::generate(GraphKind::RandomBConnected, 5, 3, 4).unwrap();
    for (a, e) in [(0.0, 0.5), (0.25, 0.75), (1.0, 1.0), (0.5, 0.0)] {
        let sched = StepSchedule::powers(a, e).unwrap();
        let traj = run(&inst, &seq, &sched, 300, RunOptions::default(), &mut ()).unwrap();
        check_round_invariants(&inst, &traj);
    }
}

/// A 4-node strongly connected digraph whose out-degree weights are not
/// doubly stochastic.
fn lopsided_digraph() -> GraphSequence {
    let edges = vec![Edge::new(0, 1), Edge::new(1, 2), Edge::new(2, 3), Edge::new(3, 0), Edge::new(0, 2), Edge::new(0, 3)];
    GraphSequence::periodic(4, 1, vec![edges]).unwrap()
}

#[test]
fn frozen_trackers_reach_ratio_consensus() {
    let inst = pev(4, 2, 3, 2, 1.0, 300);
    let seq = lopsided_digraph();
    let w = seq.mixing(1);
    let row_sums: Vec<f64> = (0..4).map(|i| (0..4).map(|j| w.get(i, j)).sum()).collect();
    assert!(row_sums.iter().any(|s| (s - 1.0).abs() > 0.1), "graph should be unbalanced");

    let start = initialize(&inst, InitKind::ZeroProjected).unwrap();
    let duals = [[3.0, 0.0, 1.0], [0.0, 0.5, 0.0], [7.0, 2.0, 0.25], [1.0, 1.0, 1.0]];
    let nodes: Vec<NodeState> = start
        .nodes
        .iter()
        .zip(duals)
        .map(|(s, mu)| NodeState { y: Vector::zeros(3), mu: Vector::from_row_slice(&mu), ..s.clone() })
        .collect();
    let state = SwarmState::from_nodes(&inst, 1, nodes).unwrap();
    let mu_bar = state.mu_bar();
    let opts = RoundOptions { frozen_tracking: true, ..Default::default() };
    let traj = run_from(&inst, &seq, &StepSchedule::default(), 200, state, opts, &mut ()).unwrap();
    for row in &traj {
        assert!((&row.mu_bar - &mu_bar).norm() < 1e-12, "average dual drifted at t={}", row.t);
    }
    let last = traj.last().unwrap();
    assert!(last.consensus_err < 1e-6, "consensus error {:e}", last.consensus_err);
    assert!(traj[19].consensus_err > last.consensus_err);

    let consts = theory_constants(4, 3, 1, 0.25, inst.bound_constants()).unwrap();
    assert!(consensus_diagnostics(&traj, &consts).iter().all(|p| p.within_envelope()));
}

#[test]
fn doubly_stochastic_symmetric_start_has_no_disagreement() {
    let inst = pev(5, 2, 2, 8, -1.0, 100);
    let seq = GraphSequence::generate(GraphKind::StaticComplete, 5, 1, 0).unwrap();
    let traj = run(&inst, &seq, &StepSchedule::default(), 100, RunOptions::default(), &mut ()).unwrap();
    for row in &traj {
        assert!((row.weight_min - 1.0).abs() < 1e-12 && (row.weight_max - 1.0).abs() < 1e-12);
        assert!(row.consensus_err < 1e-12);
    }
}
