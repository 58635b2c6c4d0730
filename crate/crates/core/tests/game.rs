mod common;

use common::{
    all_profiles, individual_cost_direct, mixed_individual_cost, pure_potential_direct, random_plan, random_scenario, random_simplex, Shape,
};
use cournot_nash::game::{
    individual_cost_closed, individual_cost_open, phi, potential_closed_mixed, potential_closed_pure, potential_closed_self_interaction,
    potential_open, truncate_h,
};
use cournot_nash::{energy_j, stream_rng, Coupling, DiscreteMeasure, ExtReal, Kernel, PureProfile, Scenario, Space};
use rand::Rng;

fn random_kernel(rng: &mut impl Rng, nx: usize, ny: usize) -> Kernel {
    Kernel::new((0..nx).map(|_| random_simplex(rng, ny)).collect()).unwrap()
}

#[test]
fn pure_potential_matches_direct_sum() {
    let mut rng = stream_rng(11, 0);
    for _ in 0..300 {
        let shape = Shape { inf_prob: 0.15, negative: true, ..Shape::finite(rng.gen_range(1..5), rng.gen_range(1..5)) };
        let s = random_scenario(&mut rng, shape);
        let n = rng.gen_range(1..8);
        let types: Vec<usize> = (0..n).map(|_| rng.gen_range(0..s.nx())).collect();
        let plays: Vec<usize> = (0..n).map(|_| rng.gen_range(0..s.ny())).collect();
        let p = PureProfile::new(types.clone(), plays.clone()).unwrap();
        let (a, b) = (potential_closed_pure(&s, &p), pure_potential_direct(&s, &types, &plays));
        match (a, b) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => assert!((a - b).abs() < 1e-12),
            _ => assert_eq!(a, b),
        }
        for i in 0..n {
            let (a, b) = (individual_cost_closed(&s, i, &p), individual_cost_direct(&s, &types, &plays, i));
            assert!(a == b || (a.to_scalar() - b.to_scalar()).abs() < 1e-12);
        }
    }
}

#[test]
fn unilateral_deviations_move_the_potential_by_cost_over_n() {
    let mut rng = stream_rng(12, 0);
    for _ in 0..200 {
        let shape = Shape { negative: true, ..Shape::finite(rng.gen_range(1..5), rng.gen_range(2..5)) };
        let s = random_scenario(&mut rng, shape);
        let n = rng.gen_range(1..7);
        let nf = n as f64;
        let types: Vec<usize> = (0..n).map(|_| rng.gen_range(0..s.nx())).collect();
        let i = rng.gen_range(0..n);

        let mut st: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(&mut rng, s.ny())).collect();
        let before = potential_closed_mixed(&s, &types, &st).to_scalar();
        let cost_before = mixed_individual_cost(&s, &types, &st, i);
        st[i] = random_simplex(&mut rng, s.ny());
        let after = potential_closed_mixed(&s, &types, &st).to_scalar();
        let cost_after = mixed_individual_cost(&s, &types, &st, i);
        assert!(((after - before) - (cost_after - cost_before) / nf).abs() < 1e-12);

        let mut ks: Vec<Kernel> = (0..n).map(|_| random_kernel(&mut rng, s.nx(), s.ny())).collect();
        let before = potential_open(&s, &ks).to_scalar();
        let cost_before = individual_cost_open(&s, i, &ks).to_scalar();
        ks[i] = random_kernel(&mut rng, s.nx(), s.ny());
        let after = potential_open(&s, &ks).to_scalar();
        let cost_after = individual_cost_open(&s, i, &ks).to_scalar();
        assert!(((after - before) - (cost_after - cost_before) / nf).abs() < 1e-12);
    }
}

#[test]
fn first_variation_is_phi() {
    let mut rng = stream_rng(13, 0);
    for _ in 0..100 {
        let shape = Shape { negative: true, ..Shape::finite(rng.gen_range(1..5), rng.gen_range(2..5)) };
        let s = random_scenario(&mut rng, shape);
        let gamma = random_plan(&mut rng, &s);
        let x = s.mu().support()[rng.gen_range(0..s.mu().support().len())];
        let (a, b) = (rng.gen_range(0..s.ny()), rng.gen_range(0..s.ny()));
        let t = 1e-3 * gamma.get(x, a).min(gamma.get(x, b));
        let shifted = |t: f64| {
            let mut rows = gamma.rows().to_vec();
            rows[x][a] -= t;
            rows[x][b] += t;
            Coupling::new(rows, s.mu().clone()).unwrap()
        };
        let fd = (energy_j(&s, &shifted(t)).to_scalar() - energy_j(&s, &shifted(-t)).to_scalar()) / (2.0 * t);
        let nu = gamma.second_marginal();
        let exact = phi(&s, x, b, &nu).unwrap().to_scalar() - phi(&s, x, a, &nu).unwrap().to_scalar();
        assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "{fd} vs {exact}");
    }
}

#[test]
fn mixed_potential_is_expected_pure_potential() {
    let mut rng = stream_rng(14, 0);
    for _ in 0..50 {
        let shape = Shape { negative: true, ..Shape::finite(rng.gen_range(1..4), rng.gen_range(2..4)) };
        let s = random_scenario(&mut rng, shape);
        let n = rng.gen_range(1..5);
        let types: Vec<usize> = (0..n).map(|_| rng.gen_range(0..s.nx())).collect();
        let st: Vec<Vec<f64>> = (0..n).map(|_| random_simplex(&mut rng, s.ny())).collect();
        let expected: f64 = all_profiles(s.ny(), n)
            .into_iter()
            .map(|plays| {
                let prob: f64 = plays.iter().enumerate().map(|(i, &y)| st[i][y]).product();
                prob * pure_potential_direct(&s, &types, &plays).to_scalar()
            })
            .sum();
        assert!((potential_closed_mixed(&s, &types, &st).to_scalar() - expected).abs() < 1e-12);
    }
}

#[test]
fn open_potential_is_expected_closed_potential() {
    let mut rng = stream_rng(15, 0);
    for _ in 0..30 {
        let shape = Shape { negative: true, ..Shape::finite(rng.gen_range(1..4), rng.gen_range(2..4)) };
        let s = random_scenario(&mut rng, shape);
        let n = rng.gen_range(1..4);
        let ks: Vec<Kernel> = (0..n).map(|_| random_kernel(&mut rng, s.nx(), s.ny())).collect();
        let mut expected = 0.0;
        for types in all_profiles(s.nx(), n) {
            let pt: f64 = types.iter().map(|&x| s.mu().weight(x)).product();
            if pt == 0.0 {
                continue;
            }
            for plays in all_profiles(s.ny(), n) {
                let pp: f64 = (0..n).map(|i| ks[i].row(types[i])[plays[i]]).product();
                expected += pt * pp * pure_potential_direct(&s, &types, &plays).to_scalar();
            }
        }
        assert!((potential_open(&s, &ks).to_scalar() - expected).abs() < 1e-12);
    }
}

#[test]
fn truncation_is_monotone_in_the_level() {
    let mut rng = stream_rng(16, 0);
    for _ in 0..50 {
        let s = random_scenario(&mut rng, Shape { inf_prob: 0.2, ..Shape::finite(3, 3) });
        let gamma = random_plan(&mut rng, &s);
        let mut last = ExtReal::Finite(f64::NEG_INFINITY);
        for m in [0.0, 0.1, 0.5, 1.0, 10.0] {
            let v = energy_j(&truncate_h(&s, m).unwrap(), &gamma);
            assert!(v.is_finite() || s.c().iter().flatten().chain(s.l()).any(|e| e.is_inf()));
            assert!(last <= v);
            last = v;
        }
    }
}

#[test]
fn self_interaction_minimizers_are_atomic() {
    let mut rng = stream_rng(17, 0);
    let f = ExtReal::Finite;
    for _ in 0..20 {
        let off = rng.gen_range(0.1..2.0);
        let s = Scenario::new(
            Space::discrete(2),
            Space::discrete(2),
            (0..2).map(|_| (0..2).map(|_| f(rng.gen_range(0.0..1.0))).collect()).collect(),
            (0..2).map(|_| f(rng.gen_range(0.0..1.0))).collect(),
            vec![vec![f(0.0), f(off)], vec![f(off), f(0.0)]],
            DiscreteMeasure::uniform(2),
        )
        .unwrap();
        let types = [0, 1];
        let grid: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let mut best = (f64::INFINITY, Vec::new());
        for &p in &grid {
            for &q in &grid {
                let v = potential_closed_self_interaction(&s, &types, &[vec![p, 1.0 - p], vec![q, 1.0 - q]]).to_scalar();
                if v < best.0 - 1e-12 {
                    best = (v, vec![(p, q)]);
                } else if (v - best.0).abs() <= 1e-12 {
                    best.1.push((p, q));
                }
            }
        }
        for (p, q) in best.1 {
            assert!((p == 0.0 || p == 1.0) && (q == 0.0 || q == 1.0), "({p}, {q})");
        }
    }
}
