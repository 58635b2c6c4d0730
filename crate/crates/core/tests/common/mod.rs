//! Independent oracles shared by the integration tests. Nothing here calls
//! into the solver code paths it is used to check.
#![allow(dead_code, clippy::needless_range_loop)]

use cournot_nash::{Coupling, DiscreteMeasure, ExtReal, Scenario, Space};
use rand::Rng;

/// Exhaustive minimum of the transportation problem over the vertices of
/// the polytope restricted to finite-cost cells.
///
/// Vertices are exactly the feasible flows with acyclic support, so the
/// oracle enumerates every forest of finite cells and solves it by leaf
/// peeling. Returns `None` when no feasible vertex exists.
pub fn transport_by_vertices(cost: &[Vec<Option<f64>>], supply: &[f64], demand: &[f64]) -> Option<f64> {
    let m = supply.len();
    let n = demand.len();
    let cells: Vec<(usize, usize, f64)> =
        (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).filter_map(|(i, j)| cost[i][j].map(|c| (i, j, c))).collect();
    let max_edges = m + n - 1;
    let mut best: Option<f64> = None;
    for mask in 0u32..(1u32 << cells.len()) {
        if mask.count_ones() as usize > max_edges {
            continue;
        }
        let edges: Vec<(usize, usize, f64)> = (0..cells.len()).filter(|k| mask & (1 << k) != 0).map(|k| cells[k]).collect();
        if !acyclic(&edges, m, n) {
            continue;
        }
        if let Some(v) = solve_forest(&edges, supply, demand) {
            if best.is_none_or(|b| v < b) {
                best = Some(v);
            }
        }
    }
    best
}

fn acyclic(edges: &[(usize, usize, f64)], m: usize, n: usize) -> bool {
    let mut parent: Vec<usize> = (0..m + n).collect();
    fn find(p: &mut [usize], mut a: usize) -> usize {
        while p[a] != a {
            p[a] = p[p[a]];
            a = p[a];
        }
        a
    }
    for &(i, j, _) in edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, m + j));
        if a == b {
            return false;
        }
        parent[a] = b;
    }
    true
}

fn solve_forest(edges: &[(usize, usize, f64)], supply: &[f64], demand: &[f64]) -> Option<f64> {
    let m = supply.len();
    let mut residual: Vec<f64> = supply.iter().chain(demand).copied().collect();
    let mut alive = vec![true; edges.len()];
    let mut total = 0.0;
    loop {
        let mut degree = vec![0usize; residual.len()];
        for (k, &(i, j, _)) in edges.iter().enumerate() {
            if alive[k] {
                degree[i] += 1;
                degree[m + j] += 1;
            }
        }
        let Some(k) = (0..edges.len()).find(|&k| {
            let (i, j, _) = edges[k];
            alive[k] && (degree[i] == 1 || degree[m + j] == 1)
        }) else {
            break;
        };
        let (i, j, c) = edges[k];
        let (leaf, other) = if degree[i] == 1 { (i, m + j) } else { (m + j, i) };
        let flow = residual[leaf];
        if flow < -1e-12 {
            return None;
        }
        residual[leaf] = 0.0;
        residual[other] -= flow;
        total += c * flow;
        alive[k] = false;
    }
    residual.iter().all(|r| r.abs() <= 1e-12).then_some(total)
}

/// Random probability vector with all entries positive.
pub fn random_simplex(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

/// Direct `O(N²)` evaluation of the closed-loop pure potential.
pub fn pure_potential_direct(s: &Scenario, types: &[usize], plays: &[usize]) -> ExtReal {
    let n = types.len() as f64;
    let mut total = ExtReal::zero();
    for i in 0..types.len() {
        total += (s.c()[types[i]][plays[i]] + s.l()[plays[i]]).weighted(1.0 / n);
        for j in 0..types.len() {
            if i != j {
                total += s.h()[plays[i]][plays[j]].weighted(1.0 / (n * n));
            }
        }
    }
    total
}

/// Direct evaluation of the closed-loop individual cost of player `i`.
pub fn individual_cost_direct(s: &Scenario, types: &[usize], plays: &[usize], i: usize) -> ExtReal {
    let n = types.len() as f64;
    let mut total = s.c()[types[i]][plays[i]] + s.l()[plays[i]];
    for j in 0..types.len() {
        if j != i {
            total += s.h()[plays[j]][plays[i]].weighted(2.0 / n);
        }
    }
    total
}

/// All `|Y|^N` pure profiles in lexicographic order.
pub fn all_profiles(ny: usize, n: usize) -> Vec<Vec<usize>> {
    let total = ny.pow(n as u32);
    (0..total)
        .map(|mut k| {
            let mut p = vec![0; n];
            for slot in p.iter_mut().rev() {
                *slot = k % ny;
                k /= ny;
            }
            p
        })
        .collect()
}

/// Brute-force finiteness of `inf J`: some set of strategies with finite
/// `L`, pairwise finite `H`, and a finite-`c` strategy for every charged type.
pub fn infimum_finite_brute(s: &Scenario) -> bool {
    let ny = s.ny();
    let types: Vec<usize> = s.mu().support().to_vec();
    (1u32..(1 << ny)).any(|mask| {
        let set: Vec<usize> = (0..ny).filter(|y| mask & (1 << y) != 0).collect();
        set.iter().all(|&y| s.l()[y].is_finite())
            && set.iter().all(|&a| set.iter().all(|&b| s.h()[a][b].is_finite()))
            && types.iter().all(|&x| set.iter().any(|&y| s.c()[x][y].is_finite()))
    })
}

/// Shape of a random instance.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub nx: usize,
    pub ny: usize,
    /// Probability that an entry of `c`, `L` or `H` is `+∞`.
    pub inf_prob: f64,
    /// `H` is a Gram matrix (positive semidefinite, finite).
    pub psd: bool,
    /// Entries of a non-Gram `H` may be negative.
    pub negative: bool,
}

impl Shape {
    pub fn finite(nx: usize, ny: usize) -> Self {
        Shape { nx, ny, inf_prob: 0.0, psd: false, negative: false }
    }

    pub fn psd(nx: usize, ny: usize) -> Self {
        Shape { psd: true, ..Shape::finite(nx, ny) }
    }
}

fn maybe_inf(rng: &mut impl Rng, p: f64, v: f64) -> ExtReal {
    if rng.gen_bool(p) {
        ExtReal::Inf
    } else {
        ExtReal::Finite(v)
    }
}

/// Random scenario on lines, `μ` with random nonempty support.
pub fn random_scenario(rng: &mut impl Rng, shape: Shape) -> Scenario {
    let Shape { nx, ny, inf_prob, psd, negative } = shape;
    let line = |rng: &mut dyn rand::RngCore, n: usize| {
        let mut p: Vec<f64> = Vec::with_capacity(n);
        let mut at = 0.0;
        for _ in 0..n {
            p.push(at);
            at += rng.gen_range(0.1..1.0);
        }
        Space::line(&p)
    };
    let x = line(rng, nx);
    let y = line(rng, ny);
    let c = (0..nx)
        .map(|_| {
            (0..ny)
                .map(|_| {
                    let v = rng.gen_range(0.0..1.0);
                    maybe_inf(rng, inf_prob, v)
                })
                .collect()
        })
        .collect();
    let l = (0..ny)
        .map(|_| {
            let v = rng.gen_range(0.0..1.0);
            maybe_inf(rng, inf_prob, v)
        })
        .collect();
    let mut h = vec![vec![ExtReal::Finite(0.0); ny]; ny];
    if psd {
        let k = rng.gen_range(1..=ny + 1);
        let b: Vec<Vec<f64>> = (0..k).map(|_| (0..ny).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        for i in 0..ny {
            for j in 0..ny {
                h[i][j] = ExtReal::Finite((0..k).map(|r| b[r][i] * b[r][j]).sum::<f64>() / k as f64);
            }
        }
    } else {
        let lo = if negative { -0.5 } else { 0.0 };
        for i in 0..ny {
            for j in i..ny {
                let v = rng.gen_range(lo..1.0);
                let e = maybe_inf(rng, inf_prob, v);
                h[i][j] = e;
                h[j][i] = e;
            }
        }
    }
    let support: Vec<usize> = loop {
        let s: Vec<usize> = (0..nx).filter(|_| rng.gen_bool(0.7)).collect();
        if !s.is_empty() {
            break s;
        }
    };
    let w = random_simplex(rng, support.len());
    Scenario::new(x, y, c, l, h, DiscreteMeasure::new(support, w).unwrap()).unwrap()
}

/// Random plan with first marginal `μ` charging only finite-cost cells of
/// each row (uniform over the row if none is finite).
pub fn random_plan(rng: &mut impl Rng, s: &Scenario) -> Coupling {
    let rows = (0..s.nx())
        .map(|x| {
            let m = s.mu().weight(x);
            let w = random_simplex(rng, s.ny());
            w.into_iter().map(|v| v * m).collect()
        })
        .collect();
    Coupling::new(rows, s.mu().clone()).unwrap()
}

/// Closed-loop expected individual cost of player `i` under mixed
/// strategies, by direct summation.
pub fn mixed_individual_cost(s: &Scenario, types: &[usize], strategies: &[Vec<f64>], i: usize) -> f64 {
    let n = types.len() as f64;
    let mut total = 0.0;
    for (y, &p) in strategies[i].iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let mut cost = s.c()[types[i]][y].to_scalar() + s.l()[y].to_scalar();
        for (j, sj) in strategies.iter().enumerate() {
            if j != i {
                cost += 2.0 / n * sj.iter().enumerate().map(|(y2, q)| q * s.h()[y][y2].to_scalar()).sum::<f64>();
            }
        }
        total += p * cost;
    }
    total
}
