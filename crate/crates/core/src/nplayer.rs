//! Nash equilibria of the N-player games through their exact potentials.

use serde::Serialize;

use crate::cg::{self, CgConfig, Pairwise};
use crate::continuum::{best_of, interaction_is_convex, FwConfig, SolveReport, TraceStep};
use crate::error::{Error, Result};
use crate::game::{individual_cost_open, pair_sum_from_counts, potential_closed_mixed, potential_open, PureProfile, Scenario};
use crate::measures::{Coupling, DiscreteMeasure, Kernel};
use crate::rng::{stream_rng, Rng};
use crate::scalar::{argmin_ext, ExtReal, Scalar};

/// Largest search space the exhaustive minimizers accept.
pub const BRUTE_FORCE_LIMIT: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NashReport<T = f64> {
    pub is_nash: bool,
    /// `(player, current cost − best deviation cost)`; nonpositive gains mean
    /// no incentive to deviate.
    pub per_player_margin: Vec<(usize, T)>,
    pub worst_margin: T,
}

/// One recorded best-response move. `x` is the type row that changed in the
/// open-loop game and `None` in the closed-loop game.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct Move<T = f64> {
    pub player: usize,
    pub x: Option<usize>,
    pub old: usize,
    pub new: usize,
    pub potential: ExtReal<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct DynamicsTrace<T = f64> {
    pub rounds: Vec<Move<T>>,
    pub passes: usize,
    pub terminated: bool,
    pub cycles_detected: bool,
}

#[derive(Clone, Debug)]
pub struct DynamicsConfig {
    pub max_passes: usize,
    pub record_moves: bool,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig { max_passes: 100_000, record_moves: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Init {
    /// Each player starts at the cheapest strategy ignoring interaction.
    Greedy,
    Plays(Vec<usize>),
}

/// Moves are taken only if they improve the mover's cost by more than this
/// relative amount.
fn improves<T: Scalar>(new: ExtReal<T>, cur: ExtReal<T>) -> bool {
    match (new, cur) {
        (ExtReal::Finite(n), ExtReal::Finite(c)) => n < c - T::lit(1e-12) * (T::one() + c.abs()),
        (ExtReal::Finite(_), ExtReal::Inf) => true,
        _ => false,
    }
}

fn check_players<T: Scalar>(s: &Scenario<T>, types: &[usize]) -> Result<()> {
    if types.is_empty() {
        return Err(Error::DimensionMismatch("at least one player is required".into()));
    }
    for &x in types {
        if x >= s.nx() {
            return Err(Error::DimensionMismatch(format!("type {x} outside X")));
        }
        if (0..s.ny()).all(|y| s.base_cost(x, y).is_inf()) {
            return Err(Error::NoFiniteStrategy(x));
        }
    }
    Ok(())
}

fn greedy_choice<T: Scalar>(s: &Scenario<T>, x: usize) -> usize {
    argmin_ext((0..s.ny()).map(|y| s.base_cost(x, y))).map_or(0, |(y, _)| y)
}

/// Cost of each strategy for a player of type `x` against `others`, the
/// strategy counts of the other players.
fn closed_costs<T: Scalar>(s: &Scenario<T>, x: usize, others: &[T], n: T) -> Vec<ExtReal<T>> {
    let k = T::lit(2.0) / n;
    (0..s.ny()).map(|y| s.base_cost(x, y) + s.h_against(y, others).weighted_signed(k)).collect()
}

/// Round-robin exact best responses in the closed-loop pure game until a
/// full pass brings no strict improvement.
pub fn best_response_dynamics_closed<T: Scalar>(
    s: &Scenario<T>,
    types: &[usize],
    init: Init,
    cfg: &DynamicsConfig,
) -> Result<(PureProfile, DynamicsTrace<T>)> {
    check_players(s, types)?;
    let n = types.len();
    let mut plays = match init {
        Init::Greedy => types.iter().map(|&x| greedy_choice(s, x)).collect(),
        Init::Plays(p) => {
            if p.len() != n || p.iter().any(|&y| y >= s.ny()) {
                return Err(Error::DimensionMismatch("initial plays do not match the players".into()));
            }
            p
        }
    };
    let nf = T::lit(n as f64);
    let mut counts = vec![0usize; s.ny()];
    for &y in &plays {
        counts[y] += 1;
    }
    let mut base: ExtReal<T> = types.iter().zip(&plays).map(|(&x, &y)| s.base_cost(x, y).weighted(T::one() / nf)).sum();
    let potential = |base: ExtReal<T>, counts: &[usize]| base + pair_sum_from_counts(s, counts).weighted(T::one() / (nf * nf));
    let mut current_potential = potential(base, &counts);
    let mut trace = DynamicsTrace { rounds: Vec::new(), passes: 0, terminated: false, cycles_detected: false };
    while trace.passes < cfg.max_passes {
        trace.passes += 1;
        let mut moved = false;
        for i in 0..n {
            let (x, old) = (types[i], plays[i]);
            let mut others: Vec<T> = counts.iter().map(|&c| T::lit(c as f64)).collect();
            others[old] = others[old] - T::one();
            let costs = closed_costs(s, x, &others, nf);
            let Some((best, best_cost)) = argmin_ext(costs.iter().copied()) else { continue };
            if best == old || !improves(best_cost, costs[old]) {
                continue;
            }
            plays[i] = best;
            counts[old] -= 1;
            counts[best] += 1;
            base = types.iter().zip(&plays).map(|(&x, &y)| s.base_cost(x, y).weighted(T::one() / nf)).sum();
            let next = potential(base, &counts);
            if !(next < current_potential) && !(current_potential.is_inf() && next.is_inf()) {
                trace.cycles_detected = true;
            }
            current_potential = next;
            moved = true;
            if cfg.record_moves {
                trace.rounds.push(Move { player: i, x: None, old, new: best, potential: next });
            }
        }
        if !moved {
            trace.terminated = true;
            break;
        }
    }
    Ok((PureProfile { types: types.to_vec(), plays }, trace))
}

/// Exact minimum of the closed-loop pure potential and every profile that
/// attains it (up to a relative `1e-12`).
pub fn brute_force_min_closed<T: Scalar>(s: &Scenario<T>, types: &[usize]) -> Result<(ExtReal<T>, Vec<PureProfile>)> {
    if types.is_empty() {
        return Err(Error::DimensionMismatch("at least one player is required".into()));
    }
    let (n, ny) = (types.len(), s.ny());
    let size = (ny as f64).powi(n as i32);
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeLimit { size, limit: BRUTE_FORCE_LIMIT });
    }
    let nf = T::lit(n as f64);
    let mut plays = vec![0usize; n];
    let mut values = Vec::with_capacity(size as usize);
    loop {
        let mut counts = vec![0usize; ny];
        let mut total = ExtReal::zero();
        for (&x, &y) in types.iter().zip(&plays) {
            counts[y] += 1;
            total += s.base_cost(x, y).weighted(T::one() / nf);
        }
        total += pair_sum_from_counts(s, &counts).weighted(T::one() / (nf * nf));
        values.push((total, plays.clone()));
        if !odometer(&mut plays, ny) {
            break;
        }
    }
    let best = values.iter().map(|v| v.0).fold(ExtReal::Inf, ExtReal::min);
    let minimizers = values
        .into_iter()
        .filter(|(v, _)| match (v, best) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => *a <= b + T::lit(1e-12) * (T::one() + b.abs()),
            (ExtReal::Inf, ExtReal::Inf) => true,
            _ => false,
        })
        .map(|(_, plays)| PureProfile { types: types.to_vec(), plays })
        .collect();
    Ok((best, minimizers))
}

/// Advances a base-`radix` counter, most significant digit first; `false`
/// after the last value.
fn odometer(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

fn nash_report<T: Scalar>(gains: Vec<T>, eps: T) -> NashReport<T> {
    let worst = gains.iter().copied().fold(T::neg_infinity(), T::max);
    NashReport { is_nash: gains.iter().all(|&g| g <= eps), per_player_margin: gains.into_iter().enumerate().collect(), worst_margin: worst }
}

fn gain<T: Scalar>(current: ExtReal<T>, best: Option<ExtReal<T>>) -> T {
    match (current, best) {
        (ExtReal::Finite(c), Some(ExtReal::Finite(b))) => c - b,
        (ExtReal::Inf, Some(ExtReal::Finite(_))) => T::infinity(),
        _ => T::zero(),
    }
}

/// Nash check of a closed-loop profile of mixed strategies (one
/// distribution over `Y` per player). Pure deviations suffice because each
/// cost is linear in the player's own strategy.
pub fn verify_nash_closed<T: Scalar>(s: &Scenario<T>, types: &[usize], strategies: &[Vec<T>], eps: T) -> NashReport<T> {
    let n = types.len();
    let nf = T::lit(n as f64);
    let ny = s.ny();
    let gains = (0..n)
        .map(|i| {
            let mut others = vec![T::zero(); ny];
            for (j, st) in strategies.iter().enumerate() {
                if j != i {
                    for (o, &v) in others.iter_mut().zip(st) {
                        *o += v;
                    }
                }
            }
            let costs = closed_costs(s, types[i], &others, nf);
            let current: ExtReal<T> = costs.iter().zip(&strategies[i]).map(|(c, &w)| c.weighted(w)).sum();
            gain(current, argmin_ext(costs.iter().copied()).map(|(_, v)| v))
        })
        .collect();
    nash_report(gains, eps)
}

/// [`verify_nash_closed`] for a pure profile, in `O(N |Y|²)`.
pub fn verify_nash_closed_pure<T: Scalar>(s: &Scenario<T>, p: &PureProfile, eps: T) -> NashReport<T> {
    let nf = T::lit(p.n() as f64);
    let mut counts = vec![T::zero(); s.ny()];
    for &y in &p.plays {
        counts[y] += T::one();
    }
    let gains = (0..p.n())
        .map(|i| {
            let mut others = counts.clone();
            others[p.plays[i]] = others[p.plays[i]] - T::one();
            let costs = closed_costs(s, p.types[i], &others, nf);
            gain(costs[p.plays[i]], argmin_ext(costs.iter().copied()).map(|(_, v)| v))
        })
        .collect();
    nash_report(gains, eps)
}

/// Dirac strategies of a pure profile.
pub fn dirac_strategies<T: Scalar>(ny: usize, plays: &[usize]) -> Vec<Vec<T>> {
    plays
        .iter()
        .map(|&y| {
            let mut v = vec![T::zero(); ny];
            v[y] = T::one();
            v
        })
        .collect()
}

/// Solution of the closed-loop game over mixed strategies.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedSolution<T = f64> {
    /// `γ_N = (1/N) Σ_i δ_{x_i} ⊗ ν_i`.
    pub plan: Coupling<T>,
    /// One distribution over `Y` per player.
    pub strategies: Vec<Vec<T>>,
    pub report: SolveReport<T>,
}

/// Starting points used by [`solve_closed_mixed`]; half are
/// best-response-polished pure profiles, half random interior points.
pub const MIXED_STARTS: usize = 32;

/// Minimizes the closed-loop mixed potential by conditional gradient over
/// per-player strategies. The potential is multilinear, hence not convex, so
/// the best of [`MIXED_STARTS`] starts is kept; interior results are
/// rounded by best-response dynamics when that lowers the potential.
pub fn solve_closed_mixed<T: Scalar>(s: &Scenario<T>, types: &[usize], cfg: &FwConfig<T>) -> Result<MixedSolution<T>> {
    check_players(s, types)?;
    let n = types.len();
    let ny = s.ny();
    let nf = T::lit(n as f64);
    let dyn_cfg = DynamicsConfig { record_moves: false, ..DynamicsConfig::default() };
    let obj = Pairwise { s, row_type: types.to_vec(), exclude_self: true };
    let cg_cfg = CgConfig { max_iter: cfg.max_iter, gap_tol: cfg.gap_tol, trace_stride: cfg.trace_stride };
    let scale =
        |strategies: Vec<Vec<T>>| -> Vec<Vec<T>> { strategies.into_iter().map(|st| st.into_iter().map(|v| v / nf).collect()).collect() };
    let finite_options: Vec<Vec<usize>> = types.iter().map(|&x| (0..ny).filter(|&y| s.base_cost(x, y).is_finite()).collect()).collect();

    let mut starts = Vec::with_capacity(MIXED_STARTS);
    let (greedy, _) = best_response_dynamics_closed(s, types, Init::Greedy, &dyn_cfg)?;
    starts.push(scale(dirac_strategies(ny, &greedy.plays)));
    for k in 1..MIXED_STARTS {
        let mut rng = stream_rng(cfg.seed, k as u64);
        if k < MIXED_STARTS / 2 {
            let plays = finite_options.iter().map(|o| o[rng.gen_range(0..o.len())]).collect();
            let (p, _) = best_response_dynamics_closed(s, types, Init::Plays(plays), &dyn_cfg)?;
            starts.push(scale(dirac_strategies(ny, &p.plays)));
        } else {
            let interior = finite_options
                .iter()
                .map(|o| {
                    let mut v = vec![T::zero(); ny];
                    let raw: Vec<f64> = o.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
                    let total: f64 = raw.iter().sum();
                    for (&y, r) in o.iter().zip(raw) {
                        v[y] = T::lit(r / total);
                    }
                    v
                })
                .collect();
            starts.push(scale(interior));
        }
    }
    let mut out = best_of(&obj, starts, &cg_cfg).ok_or(Error::InfimumInfinite)?;

    // Round to a pure profile and polish; keep whichever is lower.
    let plays: Vec<usize> = out.rows.iter().map(|r| (0..ny).fold(0, |b, y| if r[y] > r[b] { y } else { b })).collect();
    let (rounded, _) = best_response_dynamics_closed(s, types, Init::Plays(plays), &dyn_cfg)?;
    let pure_rows = scale(dirac_strategies(ny, &rounded.plays));
    let pure_value = obj.value(&pure_rows);
    if pure_value < out.value {
        let pure = cg::minimize(&obj, pure_rows, &cg_cfg);
        if pure.value <= pure_value {
            out = pure;
        }
    }

    let strategies: Vec<Vec<T>> = out
        .rows
        .iter()
        .map(|r| {
            let total: T = r.iter().copied().sum();
            r.iter().map(|&v| v / total).collect()
        })
        .collect();
    let mut rows = vec![vec![T::zero(); ny]; s.nx()];
    for (&x, r) in types.iter().zip(&out.rows) {
        for (acc, &v) in rows[x].iter_mut().zip(r) {
            *acc += v;
        }
    }
    let plan = Coupling::from_parts_unchecked(rows, DiscreteMeasure::empirical(types));
    let value = potential_closed_mixed(s, types, &strategies).to_scalar();
    let report = SolveReport {
        value,
        gap: out.gap,
        iterations: out.iterations,
        step_trace: out.trace.iter().map(|&(iteration, value, gap)| TraceStep { iteration, value, gap }).collect(),
        converged: out.converged,
        convex: interaction_is_convex(s),
        starts: MIXED_STARTS,
    };
    Ok(MixedSolution { plan, strategies, report })
}

/// Strategy distribution `Σ_x μ(x) δ_{choice[x]}` of a deterministic kernel.
fn bar_of<T: Scalar>(s: &Scenario<T>, choice: &[usize]) -> Vec<T> {
    let mut bar = vec![T::zero(); s.ny()];
    for (x, w) in s.mu().iter() {
        bar[choice[x]] += w;
    }
    bar
}

/// Round-robin exact best responses over deterministic kernels. A player's
/// best response is separable in its type, so rows are updated one at a time.
pub fn best_response_dynamics_open<T: Scalar>(
    s: &Scenario<T>,
    n: usize,
    cfg: &DynamicsConfig,
) -> Result<(Vec<Kernel<T>>, DynamicsTrace<T>)> {
    if n == 0 {
        return Err(Error::DimensionMismatch("at least one player is required".into()));
    }
    check_players(s, s.mu().support())?;
    let ny = s.ny();
    let nf = T::lit(n as f64);
    let greedy: Vec<usize> = (0..s.nx()).map(|x| greedy_choice(s, x)).collect();
    let mut choices = vec![greedy; n];
    let mut bars: Vec<Vec<T>> = choices.iter().map(|c| bar_of(s, c)).collect();
    let kernels_of = |choices: &[Vec<usize>]| -> Vec<Kernel<T>> { choices.iter().map(|c| Kernel::deterministic(ny, c)).collect() };
    let mut current_potential = potential_open(s, &kernels_of(&choices));
    let mut trace = DynamicsTrace { rounds: Vec::new(), passes: 0, terminated: false, cycles_detected: false };
    let k = T::lit(2.0) / nf;
    while trace.passes < cfg.max_passes {
        trace.passes += 1;
        let mut moved = false;
        for i in 0..n {
            let mut others = vec![T::zero(); ny];
            for (j, b) in bars.iter().enumerate() {
                if j != i {
                    for (o, &v) in others.iter_mut().zip(b) {
                        *o += v;
                    }
                }
            }
            let field: Vec<ExtReal<T>> = (0..ny).map(|y| s.h_against(y, &others).weighted_signed(k)).collect();
            for &x in s.mu().support() {
                let costs: Vec<ExtReal<T>> = (0..ny).map(|y| s.base_cost(x, y) + field[y]).collect();
                let old = choices[i][x];
                let Some((best, best_cost)) = argmin_ext(costs.iter().copied()) else { continue };
                if best == old || !improves(best_cost, costs[old]) {
                    continue;
                }
                choices[i][x] = best;
                bars[i] = bar_of(s, &choices[i]);
                let next = potential_open(s, &kernels_of(&choices));
                if !(next < current_potential) && !(current_potential.is_inf() && next.is_inf()) {
                    trace.cycles_detected = true;
                }
                current_potential = next;
                moved = true;
                if cfg.record_moves {
                    trace.rounds.push(Move { player: i, x: Some(x), old, new: best, potential: next });
                }
            }
        }
        if !moved {
            trace.terminated = true;
            break;
        }
    }
    Ok((kernels_of(&choices), trace))
}

/// Open-loop Nash check. A player's cost is linear in its own kernel and
/// separable in its type, so the best deviation picks a cheapest strategy
/// per type.
pub fn verify_nash_open<T: Scalar>(s: &Scenario<T>, kernels: &[Kernel<T>], eps: T) -> NashReport<T> {
    let n = kernels.len();
    let ny = s.ny();
    let k = T::lit(2.0) / T::lit(n as f64);
    let bars: Vec<Vec<T>> = kernels.iter().map(|kr| kr.pushforward(s.mu())).collect();
    let gains = (0..n)
        .map(|i| {
            let mut others = vec![T::zero(); ny];
            for (j, b) in bars.iter().enumerate() {
                if j != i {
                    for (o, &v) in others.iter_mut().zip(b) {
                        *o += v;
                    }
                }
            }
            let field: Vec<ExtReal<T>> = (0..ny).map(|y| s.h_against(y, &others).weighted_signed(k)).collect();
            let mut best = Some(ExtReal::zero());
            for (x, w) in s.mu().iter() {
                let row_best = argmin_ext((0..ny).map(|y| s.base_cost(x, y) + field[y])).map(|(_, v)| v.weighted(w));
                best = match (best, row_best) {
                    (Some(a), Some(b)) => Some(a + b),
                    _ => None,
                };
            }
            gain(individual_cost_open(s, i, kernels), best)
        })
        .collect();
    nash_report(gains, eps)
}

/// Minimal potential with every minimizing kernel profile.
pub type OpenMinimizers<T> = (ExtReal<T>, Vec<Vec<Kernel<T>>>);

/// Exact minimum of the open-loop potential over deterministic kernels
/// (rows off the support of `μ` are fixed at the cheapest strategy), with
/// all minimizing profiles.
pub fn brute_force_min_open<T: Scalar>(s: &Scenario<T>, n: usize) -> Result<OpenMinimizers<T>> {
    let ny = s.ny();
    let support = s.mu().support().to_vec();
    let digits = support.len() * n;
    let size = (ny as f64).powi(digits as i32);
    if size > BRUTE_FORCE_LIMIT || n == 0 {
        return Err(Error::SizeLimit { size, limit: BRUTE_FORCE_LIMIT });
    }
    let greedy: Vec<usize> = (0..s.nx()).map(|x| greedy_choice(s, x)).collect();
    let mut code = vec![0usize; digits];
    let mut all = Vec::new();
    loop {
        let kernels: Vec<Kernel<T>> = (0..n)
            .map(|i| {
                let mut choice = greedy.clone();
                for (k, &x) in support.iter().enumerate() {
                    choice[x] = code[i * support.len() + k];
                }
                Kernel::deterministic(ny, &choice)
            })
            .collect();
        all.push((potential_open(s, &kernels), kernels));
        if !odometer(&mut code, ny) {
            break;
        }
    }
    let best = all.iter().map(|v| v.0).fold(ExtReal::Inf, ExtReal::min);
    let minimizers = all
        .into_iter()
        .filter(|(v, _)| match (v, best) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => *a <= b + T::lit(1e-12) * (T::one() + b.abs()),
            (ExtReal::Inf, ExtReal::Inf) => true,
            _ => false,
        })
        .map(|(_, k)| k)
        .collect();
    Ok((best, minimizers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::potential_closed_pure;
    use crate::measures::Space;

    fn f(v: f64) -> ExtReal {
        ExtReal::Finite(v)
    }

    fn grid(v: &[&[f64]]) -> Vec<Vec<ExtReal>> {
        v.iter().map(|r| r.iter().map(|&x| f(x)).collect()).collect()
    }

    fn small(h: Vec<Vec<ExtReal>>) -> Scenario {
        Scenario::new(
            Space::line(&[0.0, 1.0]),
            Space::line(&[0.0, 0.5, 1.0]),
            grid(&[&[0.0, 0.3, 1.0], &[1.0, 0.3, 0.0]]),
            vec![f(0.1), f(0.0), f(0.1)],
            h,
            DiscreteMeasure::new(vec![0, 1], vec![0.5, 0.5]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_player_takes_individual_argmin() {
        let s = small(grid(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]));
        let (p, _) = best_response_dynamics_closed(&s, &[1], Init::Greedy, &DynamicsConfig::default()).unwrap();
        assert_eq!(p.plays, vec![2]);
        let (v, mins) = brute_force_min_closed(&s, &[1]).unwrap();
        assert_eq!(mins.len(), 1);
        assert_eq!(v, f(0.1));
        let mixed = solve_closed_mixed(&s, &[1], &FwConfig::default()).unwrap();
        assert_eq!(mixed.strategies, vec![vec![0.0, 0.0, 1.0]]);
    }

    #[test]
    fn decoupled_game_converges_in_one_pass() {
        let s = small(vec![vec![f(0.0); 3]; 3]);
        let (p, trace) = best_response_dynamics_closed(&s, &[0, 1, 1], Init::Plays(vec![1, 1, 1]), &DynamicsConfig::default()).unwrap();
        assert_eq!(p.plays, vec![0, 2, 2]);
        assert_eq!(trace.passes, 2);
        assert!(trace.terminated && !trace.cycles_detected);
    }

    #[test]
    fn crowding_splits_players_and_descends() {
        let s = small(grid(&[&[2.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 2.0]]));
        let types = vec![0, 0, 0, 1];
        let (p, trace) = best_response_dynamics_closed(&s, &types, Init::Plays(vec![1; 4]), &DynamicsConfig::default()).unwrap();
        assert!(verify_nash_closed_pure(&s, &p, 1e-12).is_nash);
        assert!(trace.rounds.windows(2).all(|w| w[1].potential < w[0].potential));
        assert_eq!(trace.rounds.last().unwrap().potential, potential_closed_pure(&s, &p));
    }

    #[test]
    fn injected_suboptimality_is_reported() {
        let s = small(vec![vec![f(0.0); 3]; 3]);
        let p = PureProfile::new(vec![0, 1], vec![0, 1]).unwrap();
        let r = verify_nash_closed_pure(&s, &p, 1e-12);
        assert!(!r.is_nash);
        // player 1 pays 0.3 at y = 1 and 0.1 at y = 2
        assert!((r.worst_margin - 0.2).abs() < 1e-15);
        let mixed = verify_nash_closed(&s, &p.types, &dirac_strategies(3, &p.plays), 1e-12);
        assert_eq!(mixed.per_player_margin, r.per_player_margin);
    }

    #[test]
    fn brute_force_size_limit() {
        let s = small(vec![vec![f(0.0); 3]; 3]);
        assert!(matches!(brute_force_min_closed(&s, &[0; 13]), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn infinite_strategy_costs_everywhere() {
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
    }

    #[test]
    fn open_dynamics_reach_nash() {
        let s = small(grid(&[&[1.0, 0.2, 0.0], &[0.2, 1.0, 0.2], &[0.0, 0.2, 1.0]]));
        let (kernels, trace) = best_response_dynamics_open(&s, 3, &DynamicsConfig::default()).unwrap();
        assert!(trace.terminated && !trace.cycles_detected);
        assert!(verify_nash_open(&s, &kernels, 1e-12).is_nash);
        let (best, _) = brute_force_min_open(&s, 2).unwrap();
        assert!(best.is_finite());
    }

    #[test]
    fn open_single_player_is_per_type_argmin() {
        let s = small(grid(&[&[5.0, 5.0, 5.0], &[5.0, 5.0, 5.0], &[5.0, 5.0, 5.0]]));
        let (kernels, _) = best_response_dynamics_open(&s, 1, &DynamicsConfig::default()).unwrap();
        assert_eq!(kernels[0].dirac_at(0), Some(0));
        assert_eq!(kernels[0].dirac_at(1), Some(2));
    }
}
