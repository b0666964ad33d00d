//! Solver behavior on small instances, checked against enumeration.

mod common;

use tcbo::model::gen_spin_glass;
use tcbo::oracle::brute_force;
use tcbo::region_graph::{build_grid_chain_decomposition, build_pair_singleton, build_star_edge, TreeDecomposition};
use tcbo::solvers::{
    decode_map, run_heskes, run_heskes_ordered, run_mplp, run_msd, run_trw_forward, run_trws, MsdSolver, SolverConfig,
    Termination,
};
use tcbo::{Assignment, DiscreteModel, Error, Factor, Mode};

fn all_assignments(model: &DiscreteModel) -> Vec<Assignment> {
    let cards = model.cardinalities();
    let mut out = Vec::new();
    let mut x = vec![0; cards.len()];
    loop {
        out.push(Assignment(x.clone()));
        if !tcbo::math::next_assignment(&mut x, cards) {
            return out;
        }
    }
}

fn zero_model() -> DiscreteModel {
    let m = gen_spin_glass(2, 2, 9.0, 1.0, 0).unwrap();
    let factors = m.factors().iter().map(|f| Factor::new(f.scope.clone(), vec![0.0; f.table.len()])).collect();
    DiscreteModel::new(m.cardinalities().to_vec(), factors).unwrap()
}

#[test]
fn msd_keeps_admissibility_on_every_assignment() {
    let m = gen_spin_glass(2, 2, 9.0, 1.0, 7).unwrap();
    let g = build_pair_singleton(&m, 1.0, 1.0).unwrap();
    let mut solver = MsdSolver::new(&g, &m, &SolverConfig::new(Mode::Max)).unwrap();
    for _ in 0..10 {
        for e in 0..g.edges().len() {
            solver.update_edge(e);
        }
    }
    let probes = all_assignments(&m);
    assert_eq!(probes.len(), 16);
    assert!(solver.ledger().admissibility_residual(&m, &probes) <= 1e-9);
}

#[test]
fn heskes_sum_fixed_point_is_order_independent() {
    let m = gen_spin_glass(2, 2, 9.0, 1.0, 7).unwrap();
    let g = build_star_edge(&m).unwrap();
    let config = SolverConfig::new(Mode::Sum).with_max_iters(5000);
    let a = run_heskes(&g, &m, &config).unwrap();
    let mut order = g.intersections();
    order.reverse();
    order.rotate_left(1);
    let b = run_heskes_ordered(&g, &m, &config, order).unwrap();
    assert_eq!(a.termination, Termination::Converged);
    assert_eq!(b.termination, Termination::Converged);
    assert!((a.final_bound() - b.final_bound()).abs() < 1e-6);
    assert!(a.final_bound() > brute_force(&m).unwrap().log_partition);
}

#[test]
fn heskes_rejects_bad_orders() {
    let m = gen_spin_glass(2, 2, 9.0, 1.0, 7).unwrap();
    let g = build_star_edge(&m).unwrap();
    let mut order = g.intersections();
    order.pop();
    let err = run_heskes_ordered(&g, &m, &SolverConfig::new(Mode::Max), order).unwrap_err();
    assert!(matches!(err, Error::ScheduleInvalid(_)));
}

#[test]
fn zero_model_is_a_fixed_point() {
    let m = zero_model();
    let g = build_pair_singleton(&m, 1.0, 1.0).unwrap();
    for mode in [Mode::Sum, Mode::Max] {
        let config = SolverConfig::new(mode).with_max_iters(5);
        let trace = run_msd(&g, &m, &config).unwrap();
        let first = trace.records[0].bound;
        assert!(trace.bounds().iter().all(|b| (b - first).abs() < 1e-12));
        let mplp = run_mplp(&m, &config).unwrap();
        if mode == Mode::Max {
            assert!(mplp.final_bound().abs() < 1e-12);
        }
    }
}

#[test]
fn msd_on_single_edge_recovers_map() {
    let m = DiscreteModel::new(
        vec![2, 2],
        vec![Factor::new(vec![0, 1], vec![1.0, -2.0, 0.5, 3.0]), Factor::new(vec![0], vec![0.2, -0.7])],
    )
    .unwrap();
    let exact = brute_force(&m).unwrap();
    let g = build_pair_singleton(&m, 1.0, 0.0).unwrap();
    let trace = run_msd(&g, &m, &SolverConfig::new(Mode::Max)).unwrap();
    assert!((trace.final_bound() - exact.map_value).abs() < 1e-9);
    let decoded = trace.decoded.unwrap();
    assert_eq!(decoded.assignment, exact.map_assignment);
    assert!((decoded.energy - exact.map_value).abs() < 1e-12);
}

#[test]
fn bound_tolerance_stop_implies_consistency() {
    let m = gen_spin_glass(3, 3, 9.0, 1.0, 1).unwrap();
    let config = SolverConfig::new(Mode::Max).with_max_iters(5000);
    let g = build_pair_singleton(&m, 1.0, 1.0).unwrap();
    for trace in [run_msd(&g, &m, &config).unwrap(), run_mplp(&m, &config).unwrap()] {
        if trace.termination == Termination::Converged {
            let last = trace.records.last().unwrap();
            assert!(last.consistency_residual <= 10.0 * config.consistency_tol);
        }
    }
}

#[test]
fn all_bounds_dominate_exact_values() {
    let m = gen_spin_glass(3, 3, 9.0, 1.0, 1).unwrap();
    let exact = brute_force(&m).unwrap();
    let d = build_grid_chain_decomposition(&m, 3, 3).unwrap();
    let star = build_star_edge(&m).unwrap();
    let ps = build_pair_singleton(&m, 1.0, 0.0).unwrap();
    for mode in [Mode::Sum, Mode::Max] {
        let config = SolverConfig::new(mode).with_max_iters(200);
        let target = if mode == Mode::Sum { exact.log_partition } else { exact.map_value };
        for trace in [
            run_trws(&m, &d, &config).unwrap(),
            run_trw_forward(&m, &d, &config).unwrap(),
            run_heskes(&star, &m, &config).unwrap(),
            run_mplp(&m, &config).unwrap(),
        ] {
            assert!(trace.bounds().iter().all(|&b| b >= target - 1e-9), "{:?} {mode}", trace.algorithm);
        }
        if mode == Mode::Max {
            assert!(run_msd(&ps, &m, &config).unwrap().final_bound() >= target - 1e-9);
        }
    }
}

#[test]
fn trw_is_exact_on_chains() {
    for seed in 0..5 {
        let m = common::random_chain(8, seed);
        let (log_z, map) = common::enumerate(&m);
        let d = TreeDecomposition::spanning_forest(&m).unwrap();
        let sum = run_trws(&m, &d, &SolverConfig::new(Mode::Sum).with_max_iters(3)).unwrap();
        let max = run_trws(&m, &d, &SolverConfig::new(Mode::Max).with_max_iters(3)).unwrap();
        assert!((sum.final_bound() - log_z).abs() < 1e-9);
        assert!((max.final_bound() - map).abs() < 1e-9);
        let decoded = max.decoded.unwrap();
        assert!((decoded.energy - map).abs() < 1e-9, "seed {seed}: {} vs {map}, beliefs {:?}", decoded.energy, max.beliefs);
    }
}

#[test]
fn monotone_solvers_never_rise_on_small_glasses() {
    for seed in 0..3 {
        let m = gen_spin_glass(4, 4, 9.0, 1.0, seed).unwrap();
        let d = build_grid_chain_decomposition(&m, 4, 4).unwrap();
        let config = SolverConfig::new(Mode::Sum).with_max_iters(100);
        assert!(run_trws(&m, &d, &config).unwrap().increases(1e-9).is_empty());
        let star = build_star_edge(&m).unwrap();
        assert!(run_heskes(&star, &m, &config).unwrap().increases(1e-9).is_empty());
    }
}

#[test]
fn trace_residuals_stay_small() {
    let m = gen_spin_glass(3, 3, 9.0, 1.0, 2).unwrap();
    let g = build_pair_singleton(&m, 1.0, 1.0).unwrap();
    let trace = run_msd(&g, &m, &SolverConfig::new(Mode::Sum).with_max_iters(50)).unwrap();
    assert!(trace.records.iter().all(|r| r.admissibility_residual <= 1e-9));
}

#[test]
fn decode_examples() {
    assert_eq!(decode_map(&[vec![0.9, 0.1], vec![0.2, 0.8]]), Assignment(vec![0, 1]));
    assert_eq!(decode_map(&[vec![0.5, 0.5]]), Assignment(vec![0]));
}

#[test]
fn structural_errors() {
    let m = gen_spin_glass(2, 2, 9.0, 1.0, 0).unwrap();
    let star = build_star_edge(&m).unwrap();
    assert!(matches!(run_msd(&star, &m, &SolverConfig::new(Mode::Max)), Err(Error::UnsupportedStructure(_))));
    assert!(build_grid_chain_decomposition(&m, 1, 4).is_err());
    let star_pairs = (1..4).map(|v| Factor::new(vec![0, v], vec![0.5, -0.5, -0.5, 0.5])).collect();
    let branching = DiscreteModel::new(vec![2; 4], star_pairs).unwrap();
    let forest = TreeDecomposition::spanning_forest(&branching).unwrap();
    assert!(matches!(run_trws(&branching, &forest, &SolverConfig::new(Mode::Sum)), Err(Error::UnsupportedStructure(_))));
    let triple = DiscreteModel::new(vec![2, 2, 2], vec![Factor::new(vec![0, 1, 2], vec![0.0; 8])]).unwrap();
    assert!(matches!(run_mplp(&triple, &SolverConfig::new(Mode::Max)), Err(Error::UnsupportedStructure(_))));
}
