mod common;

use common::{all_profiles, pure_potential_direct, random_scenario, Shape};
use cournot_nash::game::{potential_closed_mixed, potential_open};
use cournot_nash::nplayer::{
    best_response_dynamics_closed, best_response_dynamics_open, brute_force_min_closed, brute_force_min_open, dirac_strategies,
    solve_closed_mixed, verify_nash_closed, verify_nash_closed_pure, verify_nash_open, DynamicsConfig, Init,
};
use cournot_nash::{stream_rng, DiscreteMeasure, Error, ExtReal, FwConfig, Kernel, Scenario, Space};
use rand::Rng;

#[test]
fn best_response_dynamics_reach_nash_with_decreasing_potential() {
    let mut rng = stream_rng(31, 0);
    for _ in 0..100 {
        let shape = Shape { negative: true, ..Shape::finite(rng.gen_range(1..5), rng.gen_range(2..6)) };
        let s = random_scenario(&mut rng, shape);
        let n = rng.gen_range(1..12);
        let types: Vec<usize> = (0..n).map(|_| rng.gen_range(0..s.nx())).collect();
        let (p, trace) = best_response_dynamics_closed(&s, &types, Init::Greedy, &DynamicsConfig::default()).unwrap();
        assert!(trace.terminated && !trace.cycles_detected);
        assert!(verify_nash_closed_pure(&s, &p, 1e-12).is_nash);
        for w in trace.rounds.windows(2) {
            assert!(w[1].potential < w[0].potential);
        }
        if let Some(last) = trace.rounds.last() {
            assert!((last.potential.to_scalar() - pure_potential_direct(&s, &types, &p.plays).to_scalar()).abs() < 1e-12);
        }
    }
}

#[test]
fn brute_force_minimizers_are_exact() {
    let mut rng = stream_rng(32, 0);
    for _ in 0..60 {
        let shape = Shape { inf_prob: 0.1, negative: true, ..Shape::finite(rng.gen_range(1..4), rng.gen_range(2..4)) };
        let s = random_scenario(&mut rng, shape);
        let n = rng.gen_range(1..5);
        let types: Vec<usize> = (0..n).map(|_| rng.gen_range(0..s.nx())).collect();
        let Ok((best, minimizers)) = brute_force_min_closed(&s, &types) else { continue };
        let direct = all_profiles(s.ny(), n).into_iter().map(|p| pure_potential_direct(&s, &types, &p)).fold(ExtReal::Inf, ExtReal::min);
        assert!(best == direct || (best.to_scalar() - direct.to_scalar()).abs() < 1e-12);
        if best.is_finite() {
            for p in &minimizers {
                assert!(verify_nash_closed_pure(&s, p, 1e-12).is_nash);
            }
        }
    }
}

#[test]
fn mixed_minimum_equals_pure_minimum() {
    let mut rng = stream_rng(33, 0);
    for k in 0..30 {
        let (nx, ny) = (rng.gen_range(1..4), rng.gen_range(2..5));
        let shape = if k % 2 == 0 { Shape::psd(nx, ny) } else { Shape { negative: true, ..Shape::finite(nx, ny) } };
        let s = random_scenario(&mut rng, shape);
        let n = rng.gen_range(1..5);
        let types: Vec<usize> = (0..n).map(|_| rng.gen_range(0..s.nx())).collect();
        let (pure, _) = brute_force_min_closed(&s, &types).unwrap();
        let sol = solve_closed_mixed(&s, &types, &FwConfig::default()).unwrap();
        let v = potential_closed_mixed(&s, &types, &sol.strategies).to_scalar();
        assert!((v - sol.report.value).abs() < 1e-12);
        assert!(v >= pure.to_scalar() - 1e-9);
        if shape.psd {
            assert!((v - pure.to_scalar()).abs() <= 1e-6, "{v} vs {}", pure.to_scalar());
        }
        assert!(verify_nash_closed(&s, &types, &sol.strategies, 1e-8).is_nash);
        for st in &sol.strategies {
            assert!((st.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn pure_profiles_as_mixed_strategies() {
    let mut rng = stream_rng(34, 0);
    let s = random_scenario(&mut rng, Shape::finite(3, 3));
    let types = [0, 2, 2, 1];
    for plays in all_profiles(3, 4) {
        let st = dirac_strategies(3, &plays);
        let a = potential_closed_mixed(&s, &types, &st).to_scalar();
        let b = pure_potential_direct(&s, &types, &plays).to_scalar();
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn open_loop_dynamics_and_brute_force() {
    let mut rng = stream_rng(35, 0);
    for _ in 0..40 {
        let shape = Shape { negative: true, ..Shape::finite(rng.gen_range(1..3), rng.gen_range(2..4)) };
        let s = random_scenario(&mut rng, shape);
        let n = rng.gen_range(1..4);
        let (ks, trace) = best_response_dynamics_open(&s, n, &DynamicsConfig::default()).unwrap();
        assert!(trace.terminated);
        assert!(verify_nash_open(&s, &ks, 1e-12).is_nash);
        if let Ok((best, minimizers)) = brute_force_min_open(&s, n) {
            assert!(potential_open(&s, &ks).to_scalar() >= best.to_scalar() - 1e-12);
            for m in &minimizers {
                assert!(verify_nash_open(&s, m, 1e-12).is_nash);
                assert!((potential_open(&s, m).to_scalar() - best.to_scalar()).abs() < 1e-12);
            }
            let random: Vec<Kernel> =
                (0..n).map(|_| Kernel::new((0..s.nx()).map(|_| common::random_simplex(&mut rng, s.ny())).collect()).unwrap()).collect();
            assert!(potential_open(&s, &random).to_scalar() >= best.to_scalar() - 1e-12);
        }
    }
}

#[test]
fn infinite_individual_costs_are_infeasible() {
    let f = ExtReal::Finite;
    let s = Scenario::new(
        Space::discrete(1),
        Space::discrete(2),
        vec![vec![f(0.0), f(0.0)]],
        vec![ExtReal::Inf, ExtReal::Inf],
        vec![vec![f(0.0); 2]; 2],
        DiscreteMeasure::dirac(0),
    )
    .unwrap();
    assert!(matches!(
        best_response_dynamics_closed(&s, &[0, 0], Init::Greedy, &DynamicsConfig::default()),
        Err(Error::NoFiniteStrategy(0))
    ));
    assert!(matches!(solve_closed_mixed(&s, &[0], &FwConfig::default()), Err(Error::NoFiniteStrategy(0))));
}
