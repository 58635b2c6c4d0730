//! Minimization of the lifted energy `J` over plans with first marginal `μ`,
//! equilibrium certification, and the capacity criterion for `inf J < ∞`.

use serde::Serialize;

use crate::cg::{self, CgConfig, CgOutcome, Pairwise};
use crate::error::{Error, Result};
use crate::game::{energy_rows, Scenario};
use crate::measures::{ot_plan, Coupling, DiscreteMeasure, Kernel};
use crate::rng::{stream_rng, Rng};
use crate::scalar::{argmin_ext, ExtReal, Scalar};

/// Plans below this mass are treated as empty cells.
pub const MASS_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStep<T = f64> {
    pub iteration: usize,
    pub value: T,
    pub gap: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport<T = f64> {
    pub value: T,
    pub gap: T,
    pub iterations: usize,
    pub step_trace: Vec<TraceStep<T>>,
    pub converged: bool,
    /// The interaction is convex on the reachable strategies, so `value`
    /// is the global minimum.
    pub convex: bool,
    /// Number of starting points that were run.
    pub starts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct EquilibriumReport<T = f64> {
    pub is_equilibrium: bool,
    pub worst_violation: T,
    /// `(x, y, Φ(x, y, ν) − min_y' Φ(x, y', ν))` for every violating cell.
    pub violating_cells: Vec<(usize, usize, T)>,
    pub social_cost: ExtReal<T>,
    pub finite_social_cost: bool,
}

#[derive(Clone, Debug)]
pub struct FwConfig<T = f64> {
    pub max_iter: usize,
    pub gap_tol: T,
    /// Starting points used when the interaction is not convex.
    pub multistart_seeds: usize,
    pub seed: u64,
    /// Record every `trace_stride`-th iterate in the step trace.
    pub trace_stride: usize,
}

impl<T: Scalar> Default for FwConfig<T> {
    fn default() -> Self {
        FwConfig { max_iter: 10_000, gap_tol: T::lit(1e-10), multistart_seeds: 8, seed: 0, trace_stride: 1 }
    }
}

fn energy<T: Scalar>(s: &Scenario<T>) -> Pairwise<'_, T> {
    Pairwise { s, row_type: (0..s.nx()).collect(), exclude_self: false }
}

/// Φ(x, ·, ν) for every `x`, `ν` given densely.
pub fn phi_table<T: Scalar>(s: &Scenario<T>, nu: &[T]) -> Vec<Vec<ExtReal<T>>> {
    (0..s.nx()).map(|x| (0..s.ny()).map(|y| s.phi_dense(x, y, nu)).collect()).collect()
}

/// Dirac row at the lowest-index minimizer of Φ(x, ·, ν) for each `x`.
pub fn best_response_kernel<T: Scalar>(s: &Scenario<T>, nu: &DiscreteMeasure<T>) -> Result<Kernel<T>> {
    let nu = nu.dense(s.ny())?;
    let choice = phi_table(s, &nu)
        .into_iter()
        .enumerate()
        .map(|(x, row)| argmin_ext(row).map(|(y, _)| y).ok_or(Error::NoFiniteStrategy(x)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Kernel::deterministic(s.ny(), &choice))
}

/// Strategies that can carry mass on their own: finite `L` and finite
/// self-interaction.
fn self_finite<T: Scalar>(s: &Scenario<T>, y: usize) -> bool {
    s.l()[y].is_finite() && s.h()[y][y].is_finite()
}

fn plan_from_choice<T: Scalar>(s: &Scenario<T>, choice: &[Option<usize>]) -> Vec<Vec<T>> {
    let mut rows = vec![vec![T::zero(); s.ny()]; s.nx()];
    for (x, w) in s.mu().iter() {
        if let Some(y) = choice[x] {
            rows[x][y] = w;
        }
    }
    rows
}

/// A plan of finite energy, built from per-type cheapest admissible
/// strategies, a repair pass, and finally the capacity witness.
pub fn feasible_start<T: Scalar>(s: &Scenario<T>) -> Result<Coupling<T>> {
    let support = s.mu().support().to_vec();
    let pick = |x: usize, allowed: &dyn Fn(usize) -> bool| {
        argmin_ext((0..s.ny()).map(|y| if self_finite(s, y) && allowed(y) { s.base_cost(x, y) } else { ExtReal::Inf })).map(|(y, _)| y)
    };
    let mut choice: Vec<Option<usize>> = vec![None; s.nx()];
    for &x in &support {
        choice[x] = pick(x, &|_| true);
    }
    if support.iter().all(|&x| choice[x].is_some()) {
        let rows = plan_from_choice(s, &choice);
        if energy_rows(s, &rows).is_finite() {
            return Ok(Coupling::from_parts_unchecked(rows, s.mu().clone()));
        }
        for &x in &support {
            let others: Vec<usize> = support.iter().filter(|&&x2| x2 != x).filter_map(|&x2| choice[x2]).collect();
            if let Some(y) = pick(x, &|y| others.iter().all(|&y2| s.h()[y][y2].is_finite())) {
                choice[x] = Some(y);
            }
        }
        let rows = plan_from_choice(s, &choice);
        if energy_rows(s, &rows).is_finite() {
            return Ok(Coupling::from_parts_unchecked(rows, s.mu().clone()));
        }
    }
    match infimum_finite(s) {
        (true, Some(w)) => Ok(w),
        _ => Err(Error::InfimumInfinite),
    }
}

/// Whether `J` is convex along every direction that keeps it finite: the
/// strategies that can be charged must interact finitely and `H` restricted
/// to them must be positive semidefinite on zero-sum vectors.
pub fn interaction_is_convex<T: Scalar>(s: &Scenario<T>) -> bool {
    let block: Vec<usize> =
        (0..s.ny()).filter(|&y| self_finite(s, y) && s.mu().support().iter().any(|&x| s.c()[x][y].is_finite())).collect();
    let mut h = Vec::with_capacity(block.len());
    for &a in &block {
        let mut row = Vec::with_capacity(block.len());
        for &b in &block {
            match s.h()[a][b] {
                ExtReal::Finite(v) => row.push(v),
                ExtReal::Inf => return false,
            }
        }
        h.push(row);
    }
    cg::conditionally_psd(&h)
}

fn random_vertex<T: Scalar>(s: &Scenario<T>, rng: &mut impl Rng) -> Vec<Vec<T>> {
    let mut choice = vec![None; s.nx()];
    for &x in s.mu().support() {
        let options: Vec<usize> = (0..s.ny()).filter(|&y| self_finite(s, y) && s.c()[x][y].is_finite()).collect();
        if !options.is_empty() {
            choice[x] = Some(options[rng.gen_range(0..options.len())]);
        }
    }
    plan_from_choice(s, &choice)
}

fn to_report<T: Scalar>(out: &CgOutcome<T>, convex: bool, starts: usize) -> SolveReport<T> {
    SolveReport {
        value: out.value.to_scalar(),
        gap: out.gap,
        iterations: out.iterations,
        step_trace: out.trace.iter().map(|&(iteration, value, gap)| TraceStep { iteration, value, gap }).collect(),
        converged: out.converged,
        convex,
        starts,
    }
}

/// Runs the conditional-gradient solver from each start and keeps the
/// lowest value (earliest start on ties).
pub(crate) fn best_of<T: Scalar>(obj: &Pairwise<'_, T>, starts: Vec<Vec<Vec<T>>>, cfg: &CgConfig<T>) -> Option<CgOutcome<T>> {
    let mut best: Option<CgOutcome<T>> = None;
    for start in starts {
        let out = cg::minimize(obj, start, cfg);
        if out.value.is_inf() {
            continue;
        }
        if best.as_ref().is_none_or(|b| out.value < b.value) {
            best = Some(out);
        }
    }
    best
}

/// Minimizes `J` over plans with first marginal `μ`.
///
/// Each step moves toward the best-response plan `μ ⊗ BR(ν)` or, per row,
/// shifts the worst charged cell onto the best response, with exact line
/// search on the quadratic energy. When `H` is not convex on the reachable
/// strategies the best of `multistart_seeds` random vertex starts is kept.
pub fn solve_frank_wolfe<T: Scalar>(s: &Scenario<T>, cfg: &FwConfig<T>) -> Result<(Coupling<T>, SolveReport<T>)> {
    let first = feasible_start(s)?;
    let convex = interaction_is_convex(s);
    let mut starts = vec![first.rows().to_vec()];
    if !convex {
        for k in 1..cfg.multistart_seeds.max(1) {
            let mut rng = stream_rng(cfg.seed, k as u64);
            starts.push(random_vertex(s, &mut rng));
        }
    }
    let n_starts = starts.len();
    let obj = energy(s);
    let cg_cfg = CgConfig { max_iter: cfg.max_iter, gap_tol: cfg.gap_tol, trace_stride: cfg.trace_stride };
    let out = best_of(&obj, starts, &cg_cfg).ok_or(Error::InfimumInfinite)?;
    let report = to_report(&out, convex, n_starts);
    Ok((Coupling::from_parts_unchecked(out.rows, s.mu().clone()), report))
}

/// `Σ_{x,y} γ(x, y) [Φ(x, y, ν) − min_y' Φ(x, y', ν)]`, the duality gap of
/// the linearized problem; `+∞` when `γ` charges a cell of infinite Φ.
pub fn exploitability<T: Scalar>(s: &Scenario<T>, gamma: &Coupling<T>) -> T {
    let obj = energy(s);
    cg::gap_of(gamma.rows(), &obj.gradient(gamma.rows())).to_scalar()
}

/// Checks the support condition of a Cournot–Nash equilibrium at slack
/// `eps`, over cells carrying more than [`MASS_FLOOR`].
pub fn verify_cournot_nash<T: Scalar>(s: &Scenario<T>, gamma: &Coupling<T>, eps: T) -> EquilibriumReport<T> {
    let nu = gamma.column_sums();
    let table = phi_table(s, &nu);
    let floor = T::lit(MASS_FLOOR);
    let mut worst = T::zero();
    let mut violating = Vec::new();
    let mut social = ExtReal::zero();
    for (x, row) in gamma.rows().iter().enumerate() {
        let best = argmin_ext(table[x].iter().copied()).map(|(_, v)| v.to_scalar());
        for (y, &g) in row.iter().enumerate() {
            social += table[x][y].weighted(g.max(T::zero()));
            if g <= floor {
                continue;
            }
            let excess = match (table[x][y], best) {
                (ExtReal::Finite(v), Some(b)) => v - b,
                _ => T::infinity(),
            };
            worst = worst.max(excess);
            if excess > eps {
                violating.push((x, y, excess));
            }
        }
    }
    EquilibriumReport {
        is_equilibrium: violating.is_empty(),
        worst_violation: worst,
        violating_cells: violating,
        finite_social_cost: social.is_finite(),
        social_cost: social,
    }
}

/// Maximal cliques of an undirected graph (Bron–Kerbosch with pivoting).
fn maximal_cliques(adj: &[Vec<bool>], vertices: &[usize]) -> Vec<Vec<usize>> {
    fn expand(adj: &[Vec<bool>], r: &mut Vec<usize>, p: Vec<usize>, x: Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if p.is_empty() && x.is_empty() {
            let mut c = r.clone();
            c.sort_unstable();
            out.push(c);
            return;
        }
        let pivot = p.iter().chain(&x).copied().max_by_key(|&u| p.iter().filter(|&&v| adj[u][v]).count());
        let pivot = pivot.expect("p or x nonempty");
        let mut p = p;
        let mut x = x;
        for v in p.clone() {
            if adj[pivot][v] {
                continue;
            }
            r.push(v);
            let np = p.iter().copied().filter(|&u| u != v && adj[v][u]).collect();
            let nx = x.iter().copied().filter(|&u| adj[v][u]).collect();
            expand(adj, r, np, nx, out);
            r.pop();
            p.retain(|&u| u != v);
            x.push(v);
        }
    }
    let mut out = Vec::new();
    expand(adj, &mut Vec::new(), vertices.to_vec(), Vec::new(), &mut out);
    out.sort();
    out
}

struct CapacityOutcome<T> {
    capacity: ExtReal<T>,
    /// Minimizing plan of the inner problem; its second marginal is the
    /// optimal `ρ`.
    plan: Option<Vec<Vec<T>>>,
}

fn capacity_impl<T: Scalar>(s: &Scenario<T>, k: &[usize], seeds: usize) -> Result<CapacityOutcome<T>> {
    let empty = CapacityOutcome { capacity: ExtReal::Finite(T::zero()), plan: None };
    let ny = s.ny();
    let mut in_k = vec![false; ny];
    for &y in k {
        if y >= ny {
            return Err(Error::DimensionMismatch(format!("strategy {y} outside Y")));
        }
        in_k[y] = true;
    }
    let vertices: Vec<usize> = (0..ny).filter(|&y| in_k[y] && s.h()[y][y].is_finite()).collect();
    if vertices.is_empty() {
        return Ok(empty);
    }
    let adj: Vec<Vec<bool>> = (0..ny).map(|a| (0..ny).map(|b| a != b && s.h()[a][b].is_finite()).collect()).collect();
    let support = s.mu().support();
    let cg_cfg = CgConfig { max_iter: 5_000, gap_tol: T::lit(1e-12), trace_stride: usize::MAX };
    let mut best: Option<(T, Vec<Vec<T>>)> = None;
    for clique in maximal_cliques(&adj, &vertices) {
        if !support.iter().all(|&x| clique.iter().any(|&y| s.c()[x][y].is_finite())) {
            continue;
        }
        // Reachability only: zero transport cost on finite cells, and no
        // strategy cost inside the clique.
        let zero = ExtReal::Finite(T::zero());
        let c = s.c().iter().map(|row| row.iter().map(|v| if v.is_finite() { zero } else { ExtReal::Inf }).collect()).collect();
        let l = (0..ny).map(|y| if clique.contains(&y) { zero } else { ExtReal::Inf }).collect();
        let inner = Scenario::new(s.space_x().clone(), s.space_y().clone(), c, l, s.h().to_vec(), s.mu().clone())?;
        let obj = energy(&inner);
        let mut starts = vec![{
            let choice: Vec<Option<usize>> = (0..s.nx()).map(|x| clique.iter().copied().find(|&y| s.c()[x][y].is_finite())).collect();
            plan_from_choice(&inner, &choice)
        }];
        if !interaction_is_convex(&inner) {
            for j in 1..seeds.max(1) {
                let mut rng = stream_rng(clique.len() as u64, j as u64);
                starts.push(random_vertex(&inner, &mut rng));
            }
        }
        if let Some(out) = best_of(&obj, starts, &cg_cfg) {
            let v = out.value.to_scalar();
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, out.rows));
            }
        }
    }
    Ok(match best {
        None => empty,
        Some((v, rows)) => {
            CapacityOutcome { capacity: if v <= T::zero() { ExtReal::Inf } else { ExtReal::Finite(T::one() / v) }, plan: Some(rows) }
        }
    })
}

/// `(inf { ρᵀHρ : ρ ∈ P(K), W_c(μ, ρ) < ∞ })⁻¹`, with `1/0 = +∞`,
/// nonpositive infima mapped to `+∞`, and capacity `0` when no admissible
/// `ρ` has finite interaction.
pub fn capacity<T: Scalar>(s: &Scenario<T>, k: &[usize]) -> Result<ExtReal<T>> {
    Ok(capacity_impl(s, k, 8)?.capacity)
}

/// Whether `inf J < ∞`, decided by the capacity of `{L < ∞}`. When finite,
/// the witness is an optimal transport plan from `μ` to the minimizer of
/// the capacity problem and has finite energy.
pub fn infimum_finite<T: Scalar>(s: &Scenario<T>) -> (bool, Option<Coupling<T>>) {
    let k: Vec<usize> = (0..s.ny()).filter(|&y| s.l()[y].is_finite()).collect();
    let Ok(out) = capacity_impl(s, &k, 8) else { return (false, None) };
    let positive = out.capacity > ExtReal::Finite(T::zero());
    if !positive {
        return (false, None);
    }
    let witness = out.plan.and_then(|rows| {
        let rho_dense: Vec<T> = (0..s.ny()).map(|y| rows.iter().map(|r| r[y]).sum()).collect();
        let rho = DiscreteMeasure::from_dense(&rho_dense).ok()?;
        let plan = ot_plan(s.c(), s.mu(), &rho).ok()?.plan?;
        Some(Coupling::from_parts_unchecked(plan, s.mu().clone()))
    });
    (true, witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::energy_j;
    use crate::measures::Space;
    use crate::schema::load_builtin;

    fn f(v: f64) -> ExtReal {
        ExtReal::Finite(v)
    }

    fn one_type(h: Vec<Vec<ExtReal>>, l: Vec<ExtReal>) -> Scenario {
        let ny = l.len();
        Scenario::new(Space::discrete(1), Space::discrete(ny), vec![vec![f(0.0); ny]], l, h, DiscreteMeasure::dirac(0)).unwrap()
    }

    #[test]
    fn counterexample_infinite() {
        let s = load_builtin("counterexample_inf").unwrap().scenario;
        let k = best_response_kernel(&s, &DiscreteMeasure::dirac(0)).unwrap();
        assert_eq!(k.dirac_at(0), Some(1));
        let (plan, rep) = solve_frank_wolfe(&s, &FwConfig::default()).unwrap();
        assert_eq!(plan.rows(), &[vec![1.0, 0.0]]);
        assert_eq!(rep.value, 0.0);
        assert_eq!(rep.gap, 2.0);
        assert!(!rep.converged);
        let eq = verify_cournot_nash(&s, &plan, 1e-9);
        assert!(!eq.is_equilibrium);
        assert_eq!(eq.worst_violation, 2.0);
        assert_eq!(exploitability(&s, &plan), 2.0);
    }

    #[test]
    fn counterexample_m2() {
        let s = load_builtin("counterexample_M2").unwrap().scenario;
        let (plan, rep) = solve_frank_wolfe(&s, &FwConfig::default()).unwrap();
        assert!((plan.get(0, 0) - 0.75).abs() < 1e-12, "{:?}", plan.rows());
        assert!((rep.value + 0.25).abs() < 1e-12);
        assert!(rep.converged && rep.convex);
        assert!(verify_cournot_nash(&s, &plan, 1e-9).is_equilibrium);
    }

    #[test]
    fn decoupled_one_step() {
        let z = vec![vec![f(0.0); 3]; 3];
        let s = one_type(z, vec![f(0.5), f(0.2), f(0.2)]);
        let (plan, rep) = solve_frank_wolfe(&s, &FwConfig::default()).unwrap();
        assert_eq!(plan.rows(), &[vec![0.0, 1.0, 0.0]]);
        assert_eq!(rep.gap, 0.0);
        assert_eq!(rep.iterations, 0);
        let eq = verify_cournot_nash(&s, &plan, 0.0);
        assert!(eq.is_equilibrium && eq.finite_social_cost);
    }

    #[test]
    fn feasible_start_skips_infinite_strategy_cost() {
        let z = vec![vec![f(0.0); 2]; 2];
        let s = one_type(z, vec![ExtReal::Inf, f(3.0)]);
        assert_eq!(feasible_start(&s).unwrap().rows(), &[vec![0.0, 1.0]]);
    }

    #[test]
    fn infimum_infinite_when_all_pairs_blow_up() {
        // Two types that must use different strategies, which repel infinitely.
        let inf = ExtReal::Inf;
        let s = Scenario::new(
            Space::discrete(2),
            Space::discrete(2),
            vec![vec![f(0.0), inf], vec![inf, f(0.0)]],
            vec![f(0.0), f(0.0)],
            vec![vec![f(0.0), inf], vec![inf, f(0.0)]],
            DiscreteMeasure::uniform(2),
        )
        .unwrap();
        assert!(matches!(feasible_start(&s), Err(Error::InfimumInfinite)));
        assert!(!infimum_finite(&s).0);
        assert_eq!(capacity(&s, &[0, 1]).unwrap(), f(0.0));
    }

    #[test]
    fn capacity_examples() {
        let id = vec![vec![f(1.0), f(0.0)], vec![f(0.0), f(1.0)]];
        let s = one_type(id, vec![f(0.0); 2]);
        let cap = capacity(&s, &[0, 1]).unwrap().to_scalar();
        assert!((cap - 2.0).abs() < 1e-12, "{cap}");
        assert_eq!(capacity(&s, &[]).unwrap(), f(0.0));
        let z = one_type(vec![vec![f(0.0); 2]; 2], vec![f(0.0); 2]);
        assert_eq!(capacity(&z, &[0]).unwrap(), ExtReal::Inf);
        let (ok, witness) = infimum_finite(&s);
        assert!(ok && energy_j(&s, &witness.unwrap()).is_finite());
    }

    #[test]
    fn capacity_uses_only_finite_cliques() {
        let s = load_builtin("counterexample_inf").unwrap().scenario;
        // {1} alone has infinite self-interaction; the clique {0} has H = 0
        assert_eq!(capacity(&s, &[1]).unwrap(), f(0.0));
        assert_eq!(capacity(&s, &[0, 1]).unwrap(), ExtReal::Inf);
    }

    #[test]
    fn cliques() {
        let t = true;
        let n = false;
        let adj = vec![vec![n, t, t, n], vec![t, n, t, n], vec![t, t, n, t], vec![n, n, t, n]];
        assert_eq!(maximal_cliques(&adj, &[0, 1, 2, 3]), vec![vec![0, 1, 2], vec![2, 3]]);
    }

    #[test]
    fn benchmark_converges_to_equilibrium() {
        let s = load_builtin("benchmark_line5").unwrap().scenario;
        let (plan, rep) = solve_frank_wolfe(&s, &FwConfig::default()).unwrap();
        assert!(rep.convex && rep.converged, "{:?}", (rep.gap, rep.iterations));
        assert!(rep.step_trace.windows(2).all(|w| w[1].value <= w[0].value + 1e-12));
        assert!(verify_cournot_nash(&s, &plan, 1e-9).is_equilibrium);
    }
}
