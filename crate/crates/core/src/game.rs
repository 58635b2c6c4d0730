//! Game data `(c, L, H, μ)`, the individual cost Φ, the lifted energy `J`
//! and the N-player potentials (closed loop pure and mixed, open loop).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{Coupling, DiscreteMeasure, Kernel, Space};
use crate::scalar::{ExtReal, Scalar};

/// Result of one hypothesis check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Pass,
    Fail,
    /// Cannot hold for finitely supported measures; the affected constructions
    /// use an explicit substitute rule instead.
    Replaced,
}

impl Check {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Check::Pass
        } else {
            Check::Fail
        }
    }

    pub fn is_ok(self) -> bool {
        self != Check::Fail
    }
}

/// Per-hypothesis report plus the sign flag on the interaction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// Atomless type distribution. Always [`Check::Replaced`]: ties between
    /// sampled types are kept at the profile level.
    pub h1_atomless: Check,
    /// `c`, `L` nonnegative (possibly `+∞`).
    pub h2_nonnegative: Check,
    /// `H` symmetric.
    pub h3_symmetric: Check,
    /// Compact sub-level sets of `L`; automatic on a finite `Y`.
    pub h4_compact: Check,
    /// Some finite entry of `H` is negative.
    pub h_negative: bool,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.h1_atomless.is_ok() && self.h2_nonnegative.is_ok() && self.h3_symmetric.is_ok() && self.h4_compact.is_ok()
    }
}

/// Finite game data: type space `X`, strategy space `Y`, type-vs-strategy
/// cost `c`, strategy cost `L`, pairwise interaction `H` and the type
/// distribution `μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario<T = f64> {
    space_x: Space<T>,
    space_y: Space<T>,
    c: Vec<Vec<ExtReal<T>>>,
    l: Vec<ExtReal<T>>,
    h: Vec<Vec<ExtReal<T>>>,
    mu: DiscreteMeasure<T>,
    h_negative: bool,
}

impl<T: Scalar> Scenario<T> {
    /// Validates shapes, nonnegativity of `c` and `L`, and exact symmetry
    /// of `H`. Negative finite interaction entries are accepted and flagged.
    pub fn new(
        space_x: Space<T>,
        space_y: Space<T>,
        c: Vec<Vec<ExtReal<T>>>,
        l: Vec<ExtReal<T>>,
        h: Vec<Vec<ExtReal<T>>>,
        mu: DiscreteMeasure<T>,
    ) -> Result<Self> {
        let (nx, ny) = (space_x.len(), space_y.len());
        if c.len() != nx {
            return Err(Error::scenario("c", format!("expected {nx} rows, found {}", c.len())));
        }
        for (x, row) in c.iter().enumerate() {
            if row.len() != ny {
                return Err(Error::scenario(format!("c[{x}]"), format!("expected {ny} entries, found {}", row.len())));
            }
            for (y, v) in row.iter().enumerate() {
                if let ExtReal::Finite(f) = v {
                    if !(*f >= T::zero()) {
                        return Err(Error::scenario(format!("c[{x}][{y}]"), format!("{f} is negative")));
                    }
                }
            }
        }
        if l.len() != ny {
            return Err(Error::scenario("L", format!("expected {ny} entries, found {}", l.len())));
        }
        for (y, v) in l.iter().enumerate() {
            if let ExtReal::Finite(f) = v {
                if !(*f >= T::zero()) {
                    return Err(Error::scenario(format!("L[{y}]"), format!("{f} is negative")));
                }
            }
        }
        if h.len() != ny {
            return Err(Error::scenario("H", format!("expected {ny} rows, found {}", h.len())));
        }
        let mut h_negative = false;
        for (a, row) in h.iter().enumerate() {
            if row.len() != ny {
                return Err(Error::scenario(format!("H[{a}]"), format!("expected {ny} entries, found {}", row.len())));
            }
            for (b, v) in row.iter().enumerate() {
                if *v != h[b][a] {
                    return Err(Error::scenario(format!("H[{a}][{b}]"), "H must be symmetric"));
                }
                if let ExtReal::Finite(f) = v {
                    if !f.is_finite() {
                        return Err(Error::scenario(format!("H[{a}][{b}]"), "not a number"));
                    }
                    h_negative |= *f < T::zero();
                }
            }
        }
        if mu.max_point() >= nx {
            return Err(Error::scenario("mu.support", format!("point {} outside X", mu.max_point())));
        }
        Ok(Scenario { space_x, space_y, c, l, h, mu, h_negative })
    }

    pub fn space_x(&self) -> &Space<T> {
        &self.space_x
    }

    pub fn space_y(&self) -> &Space<T> {
        &self.space_y
    }

    pub fn c(&self) -> &[Vec<ExtReal<T>>] {
        &self.c
    }

    pub fn l(&self) -> &[ExtReal<T>] {
        &self.l
    }

    pub fn h(&self) -> &[Vec<ExtReal<T>>] {
        &self.h
    }

    pub fn mu(&self) -> &DiscreteMeasure<T> {
        &self.mu
    }

    pub fn nx(&self) -> usize {
        self.space_x.len()
    }

    pub fn ny(&self) -> usize {
        self.space_y.len()
    }

    pub fn h_negative(&self) -> bool {
        self.h_negative
    }

    /// Same game with a different type distribution.
    pub fn with_mu(&self, mu: DiscreteMeasure<T>) -> Result<Self> {
        if mu.max_point() >= self.nx() {
            return Err(Error::scenario("mu.support", "point outside X"));
        }
        Ok(Scenario { mu, ..self.clone() })
    }

    /// `c(x, y) + L(y)`.
    #[inline]
    pub fn base_cost(&self, x: usize, y: usize) -> ExtReal<T> {
        self.c[x][y] + self.l[y]
    }

    /// `Σ_{y'} H(y, y') ν(y')` with `0·∞ = 0`.
    #[inline]
    pub fn h_against(&self, y: usize, nu: &[T]) -> ExtReal<T> {
        self.h[y].iter().zip(nu).map(|(h, &w)| h.weighted(w)).sum()
    }

    /// `∫ H d(a ⊗ b)` for nonnegative vectors `a`, `b`.
    pub fn interaction(&self, a: &[T], b: &[T]) -> ExtReal<T> {
        let mut total = ExtReal::zero();
        for (y, &wa) in a.iter().enumerate() {
            if wa == T::zero() {
                continue;
            }
            for (y2, &wb) in b.iter().enumerate() {
                total += self.h[y][y2].weighted(wa * wb);
            }
        }
        total
    }

    /// Φ against a dense strategy distribution.
    #[inline]
    pub fn phi_dense(&self, x: usize, y: usize, nu: &[T]) -> ExtReal<T> {
        self.base_cost(x, y) + self.h_against(y, nu).weighted_signed(T::lit(2.0))
    }

    /// Largest finite entry of `H` (zero when none).
    pub fn max_finite_h(&self) -> T {
        self.h.iter().flatten().filter_map(|v| v.finite()).fold(T::zero(), |m, v| m.max(v))
    }
}

impl<T: Scalar> ExtReal<T> {
    /// Multiplication by a positive constant (no `0·∞` subtlety).
    #[inline]
    pub(crate) fn weighted_signed(self, k: T) -> Self {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(v * k),
            ExtReal::Inf => ExtReal::Inf,
        }
    }
}

/// Types and plays of the `N` players of a closed-loop game.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PureProfile {
    pub types: Vec<usize>,
    pub plays: Vec<usize>,
}

impl PureProfile {
    pub fn new(types: Vec<usize>, plays: Vec<usize>) -> Result<Self> {
        if types.is_empty() || types.len() != plays.len() {
            return Err(Error::DimensionMismatch(format!(
                "profile needs N >= 1 and equal lengths, got {} types and {} plays",
                types.len(),
                plays.len()
            )));
        }
        Ok(PureProfile { types, plays })
    }

    pub fn n(&self) -> usize {
        self.types.len()
    }

    /// `(1/N) Σ δ_(x_i, y_i)` as a coupling.
    pub fn plan<T: Scalar>(&self, nx: usize, ny: usize) -> Coupling<T> {
        let w = T::one() / T::lit(self.n() as f64);
        let mut rows = vec![vec![T::zero(); ny]; nx];
        for (&x, &y) in self.types.iter().zip(&self.plays) {
            rows[x][y] += w;
        }
        Coupling::from_parts_unchecked(rows, DiscreteMeasure::empirical(&self.types))
    }
}

/// Φ(x, y, ν) = c(x, y) + L(y) + 2 ∫ H(y, ·) dν.
pub fn phi<T: Scalar>(s: &Scenario<T>, x: usize, y: usize, nu: &DiscreteMeasure<T>) -> Result<ExtReal<T>> {
    Ok(s.phi_dense(x, y, &nu.dense(s.ny())?))
}

/// Lifted energy `J(γ) = ∫ c dγ + ∫ L dν + ∫ H dν⊗ν`, `+∞` when the first
/// marginal of `γ` is not `μ`.
pub fn energy_j<T: Scalar>(s: &Scenario<T>, gamma: &Coupling<T>) -> ExtReal<T> {
    if gamma.nx() != s.nx() || gamma.ny() != s.ny() {
        return ExtReal::Inf;
    }
    let mu = s.mu.dense(s.nx()).expect("validated scenario");
    let on_mu = gamma.rows().iter().zip(&mu).all(|(row, &m)| (row.iter().copied().sum::<T>() - m).abs() <= T::mass_tol());
    if !on_mu {
        return ExtReal::Inf;
    }
    energy_rows(s, gamma.rows())
}

/// `J` evaluated on a raw table, without the marginal check.
pub(crate) fn energy_rows<T: Scalar>(s: &Scenario<T>, rows: &[Vec<T>]) -> ExtReal<T> {
    let mut nu = vec![T::zero(); s.ny()];
    let mut total = ExtReal::zero();
    for (x, row) in rows.iter().enumerate() {
        for (y, &g) in row.iter().enumerate() {
            total += s.c[x][y].weighted(g);
            nu[y] += g;
        }
    }
    for (y, &w) in nu.iter().enumerate() {
        total += s.l[y].weighted(w);
    }
    total + s.interaction(&nu, &nu)
}

/// `g_N(y_i; y_{-i}) = c(x_i, y_i) + L(y_i) + (2/N) Σ_{j≠i} H(y_j, y_i)`.
pub fn individual_cost_closed<T: Scalar>(s: &Scenario<T>, i: usize, p: &PureProfile) -> ExtReal<T> {
    let n = T::lit(p.n() as f64);
    let yi = p.plays[i];
    let mut total = s.base_cost(p.types[i], yi);
    let k = T::lit(2.0) / n;
    for (j, &yj) in p.plays.iter().enumerate() {
        if j != i {
            total += s.h[yj][yi].weighted(k);
        }
    }
    total
}

/// Closed-loop pure potential
/// `(1/N) Σ_i [c(x_i, y_i) + L(y_i)] + (1/N²) Σ_{i≠j} H(y_i, y_j)`,
/// evaluated through strategy counts in `O(N + |Y|²)`.
pub fn potential_closed_pure<T: Scalar>(s: &Scenario<T>, p: &PureProfile) -> ExtReal<T> {
    let n = T::lit(p.n() as f64);
    let mut counts = vec![0usize; s.ny()];
    let mut total = ExtReal::zero();
    for (&x, &y) in p.types.iter().zip(&p.plays) {
        total += s.base_cost(x, y).weighted(T::one() / n);
        counts[y] += 1;
    }
    total + pair_sum_from_counts(s, &counts).weighted(T::one() / (n * n))
}

/// `Σ_{i≠j} H(y_i, y_j)` from the strategy counts.
pub(crate) fn pair_sum_from_counts<T: Scalar>(s: &Scenario<T>, counts: &[usize]) -> ExtReal<T> {
    let mut total = ExtReal::zero();
    for (a, &na) in counts.iter().enumerate() {
        for (b, &nb) in counts.iter().enumerate() {
            let pairs = if a == b { na * na.saturating_sub(1) } else { na * nb };
            total += s.h[a][b].weighted(T::lit(pairs as f64));
        }
    }
    total
}

/// Closed-loop mixed potential
/// `∫ c dγ_N + (1/N) Σ_i L(ν_i) + (1/N²) Σ_{i≠j} H(ν_i, ν_j)` with
/// `γ_N = (1/N) Σ δ_{x_i} ⊗ ν_i`.
pub fn potential_closed_mixed<T: Scalar>(s: &Scenario<T>, types: &[usize], strategies: &[Vec<T>]) -> ExtReal<T> {
    closed_mixed_impl(s, types, strategies, false)
}

/// Variant of [`potential_closed_mixed`] in which players also interact
/// with themselves: the pair sum runs over all `(i, j)`.
pub fn potential_closed_self_interaction<T: Scalar>(s: &Scenario<T>, types: &[usize], strategies: &[Vec<T>]) -> ExtReal<T> {
    closed_mixed_impl(s, types, strategies, true)
}

fn closed_mixed_impl<T: Scalar>(s: &Scenario<T>, types: &[usize], strategies: &[Vec<T>], with_self: bool) -> ExtReal<T> {
    assert_eq!(types.len(), strategies.len(), "one strategy per player");
    let n = T::lit(types.len() as f64);
    let mut total = ExtReal::zero();
    for (&x, nu) in types.iter().zip(strategies) {
        for (y, &w) in nu.iter().enumerate() {
            total += s.base_cost(x, y).weighted(w / n);
        }
    }
    let inv_n2 = T::one() / (n * n);
    for (i, a) in strategies.iter().enumerate() {
        for (j, b) in strategies.iter().enumerate() {
            if i != j || with_self {
                total += s.interaction(a, b).weighted(inv_n2);
            }
        }
    }
    total
}

/// `Σ_x μ(x) Σ_y K(x, y) [c(x, y) + L(y)]`.
fn open_base<T: Scalar>(s: &Scenario<T>, k: &Kernel<T>) -> ExtReal<T> {
    let mut total = ExtReal::zero();
    for (x, w) in s.mu.iter() {
        for (y, &p) in k.row(x).iter().enumerate() {
            total += s.base_cost(x, y).weighted(w * p);
        }
    }
    total
}

/// Open-loop potential: the exact expectation under `μ^⊗N` of the
/// closed-loop potential, with independent types factorising the pair terms
/// into `ν̄_iᵀ H ν̄_j`, `ν̄_i = Σ_x μ(x) K_i(x, ·)`.
pub fn potential_open<T: Scalar>(s: &Scenario<T>, kernels: &[Kernel<T>]) -> ExtReal<T> {
    let n = T::lit(kernels.len() as f64);
    let bars: Vec<Vec<T>> = kernels.iter().map(|k| k.pushforward(&s.mu)).collect();
    let mut total: ExtReal<T> = kernels.iter().map(|k| open_base(s, k)).sum::<ExtReal<T>>().weighted_signed(T::one() / n);
    let inv_n2 = T::one() / (n * n);
    for (i, a) in bars.iter().enumerate() {
        for (j, b) in bars.iter().enumerate() {
            if i != j {
                total += s.interaction(a, b).weighted(inv_n2);
            }
        }
    }
    total
}

/// Open-loop individual cost of player `i`.
pub fn individual_cost_open<T: Scalar>(s: &Scenario<T>, i: usize, kernels: &[Kernel<T>]) -> ExtReal<T> {
    let n = T::lit(kernels.len() as f64);
    let own = kernels[i].pushforward(&s.mu);
    let mut total = open_base(s, &kernels[i]);
    let k = T::lit(2.0) / n;
    for (j, other) in kernels.iter().enumerate() {
        if j != i {
            total += s.interaction(&own, &other.pushforward(&s.mu)).weighted(k);
        }
    }
    total
}

/// Same game with `H` replaced by `H ∧ M`.
pub fn truncate_h<T: Scalar>(s: &Scenario<T>, m: T) -> Result<Scenario<T>> {
    if !(m >= T::zero()) || !m.is_finite() {
        return Err(Error::scenario("M", "truncation level must be finite and >= 0"));
    }
    let h = s.h.iter().map(|row| row.iter().map(|v| v.truncate(m)).collect()).collect();
    Scenario::new(s.space_x.clone(), s.space_y.clone(), s.c.clone(), s.l.clone(), h, s.mu.clone())
}

pub fn validate_hypotheses<T: Scalar>(s: &Scenario<T>) -> HypothesisReport {
    let nonneg = |v: &ExtReal<T>| v.finite().is_none_or(|f| f >= T::zero());
    let h2 = s.c.iter().flatten().all(nonneg) && s.l.iter().all(nonneg);
    let ny = s.ny();
    let h3 = (0..ny).all(|a| (0..ny).all(|b| s.h[a][b] == s.h[b][a]));
    HypothesisReport {
        h1_atomless: Check::Replaced,
        h2_nonnegative: Check::from_bool(h2),
        h3_symmetric: Check::from_bool(h3),
        h4_compact: Check::Pass,
        h_negative: s.h_negative,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_point(m: ExtReal) -> Scenario {
        let f = ExtReal::Finite;
        Scenario::new(
            Space::discrete(1),
            Space::line(&[0.0, 1.0]),
            vec![vec![f(0.0), f(0.0)]],
            vec![f(0.0), f(0.0)],
            vec![vec![f(0.0), f(-1.0)], vec![f(-1.0), m]],
            DiscreteMeasure::dirac(0),
        )
        .unwrap()
    }

    fn fin(v: &[&[f64]]) -> Vec<Vec<ExtReal>> {
        v.iter().map(|r| r.iter().map(|&x| ExtReal::Finite(x)).collect()).collect()
    }

    fn small() -> Scenario {
        Scenario::new(
            Space::line(&[0.0, 1.0]),
            Space::line(&[0.0, 1.0, 2.0]),
            fin(&[&[0.0, 1.0, 4.0], &[1.0, 0.0, 1.0]]),
            vec![ExtReal::Finite(0.5), ExtReal::Finite(0.0), ExtReal::Finite(0.25)],
            fin(&[&[1.0, 0.5, 0.0], &[0.5, 2.0, 0.3], &[0.0, 0.3, 1.0]]),
            DiscreteMeasure::new(vec![0, 1], vec![0.4, 0.6]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn counterexample_phi() {
        let s = two_point(ExtReal::Inf);
        let d0 = DiscreteMeasure::dirac(0);
        assert_eq!(phi(&s, 0, 0, &d0).unwrap(), ExtReal::Finite(0.0));
        assert_eq!(phi(&s, 0, 1, &d0).unwrap(), ExtReal::Finite(-2.0));
        assert!(validate_hypotheses(&s).h_negative);
        assert!(validate_hypotheses(&s).all_pass());
    }

    #[test]
    fn phi_without_interaction_and_with_dirac_field() {
        let s = small();
        let h0 = Scenario::new(
            s.space_x().clone(),
            s.space_y().clone(),
            s.c().to_vec(),
            s.l().to_vec(),
            fin(&[&[0.0; 3], &[0.0; 3], &[0.0; 3]]),
            s.mu().clone(),
        )
        .unwrap();
        let nu = DiscreteMeasure::new(vec![0, 2], vec![0.3, 0.7]).unwrap();
        assert_eq!(phi(&h0, 1, 2, &nu).unwrap(), ExtReal::Finite(1.25));
        let d1 = DiscreteMeasure::dirac(1);
        // c(0,2) + L(2) + 2 H(2,1) = 4 + 0.25 + 0.6
        assert!((phi(&s, 0, 2, &d1).unwrap().finite().unwrap() - 4.85).abs() < 1e-15);
    }

    #[test]
    fn energy_on_dirac_kernel_plan_and_infinite_cells() {
        let s = small();
        let plan = crate::measures::product_plan(s.mu(), &Kernel::deterministic(3, &[1, 1])).unwrap();
        // 0.4·1 + 0.6·0 + L(1) + H(1,1)
        assert!((energy_j(&s, &plan).finite().unwrap() - (0.4 + 0.0 + 2.0)).abs() < 1e-15);

        let mut c = s.c().to_vec();
        c[0][1] = ExtReal::Inf;
        let s_inf = Scenario::new(s.space_x().clone(), s.space_y().clone(), c, s.l().to_vec(), s.h().to_vec(), s.mu().clone()).unwrap();
        assert_eq!(energy_j(&s_inf, &plan), ExtReal::Inf);
        // the same infinite cell carries no mass here
        let other = crate::measures::product_plan(s.mu(), &Kernel::deterministic(3, &[0, 1])).unwrap();
        assert!(energy_j(&s_inf, &other).is_finite());
    }

    #[test]
    fn energy_off_marginal_is_inf() {
        let s = small();
        let plan = crate::measures::product_plan(&DiscreteMeasure::dirac(0), &Kernel::deterministic(3, &[1, 1])).unwrap();
        assert_eq!(energy_j(&s, &plan), ExtReal::Inf);
    }

    #[test]
    fn counterexample_energy_quadratic() {
        // ν = (1 − t, t): J = (M + 2) t² − 2t; with M = 2 and t = 1/4, J = −1/4.
        let s = two_point(ExtReal::Finite(2.0));
        let g = Coupling::from_table(vec![vec![0.75, 0.25]]).unwrap();
        assert_eq!(energy_j(&s, &g), ExtReal::Finite(-0.25));
    }

    #[test]
    fn closed_costs_small_cases() {
        let s = small();
        let p = PureProfile::new(vec![1], vec![2]).unwrap();
        assert_eq!(individual_cost_closed(&s, 0, &p), ExtReal::Finite(1.25));
        let p = PureProfile::new(vec![0, 1], vec![0, 2]).unwrap();
        assert_eq!(individual_cost_closed(&s, 0, &p), ExtReal::Finite(0.0 + 0.5 + 0.0));
        assert_eq!(individual_cost_closed(&s, 1, &p), ExtReal::Finite(1.0 + 0.25 + 0.0));
    }

    #[test]
    fn collapsed_pure_potential() {
        let s = small();
        let p = PureProfile::new(vec![1; 4], vec![1; 4]).unwrap();
        // c + L + (N − 1)/N · H(y, y) = 0 + 0 + 3/4 · 2
        assert_eq!(potential_closed_pure(&s, &p), ExtReal::Finite(1.5));
    }

    #[test]
    fn self_interaction_infinite_diagonal_allows_single_players() {
        let s = two_point(ExtReal::Inf);
        let p = PureProfile::new(vec![0, 0], vec![1, 0]).unwrap();
        // one player on y = 1 never meets itself in the i ≠ j sum
        assert_eq!(potential_closed_pure(&s, &p), ExtReal::Finite(-0.5));
        let p = PureProfile::new(vec![0, 0], vec![1, 1]).unwrap();
        assert_eq!(potential_closed_pure(&s, &p), ExtReal::Inf);
    }

    #[test]
    fn truncation() {
        let s = two_point(ExtReal::Inf);
        let t = truncate_h(&s, 5.0).unwrap();
        assert_eq!(t.h()[1][1], ExtReal::Finite(5.0));
        assert_eq!(t.h()[0][1], ExtReal::Finite(-1.0));
        let same = truncate_h(&small(), 10.0).unwrap();
        assert_eq!(same, small());
        assert!(truncate_h(&s, -1.0).is_err());
    }

    #[test]
    fn rejects_bad_data() {
        let s = small();
        let mut h = s.h().to_vec();
        h[0][1] = ExtReal::Finite(0.7);
        let err = Scenario::new(s.space_x().clone(), s.space_y().clone(), s.c().to_vec(), s.l().to_vec(), h, s.mu().clone()).unwrap_err();
        assert!(err.to_string().contains("H[0][1]"));
        let mut c = s.c().to_vec();
        c[1][2] = ExtReal::Finite(-0.1);
        let err = Scenario::new(s.space_x().clone(), s.space_y().clone(), c, s.l().to_vec(), s.h().to_vec(), s.mu().clone()).unwrap_err();
        assert!(err.to_string().contains("c[1][2]"));
    }

    #[test]
    fn infinite_c_passes_hypotheses() {
        let s = small();
        let mut c = s.c().to_vec();
        c[0][2] = ExtReal::Inf;
        let s = Scenario::new(s.space_x().clone(), s.space_y().clone(), c, s.l().to_vec(), s.h().to_vec(), s.mu().clone()).unwrap();
        let r = validate_hypotheses(&s);
        assert!(r.all_pass() && !r.h_negative);
        assert_eq!(r.h1_atomless, Check::Replaced);
    }
}
