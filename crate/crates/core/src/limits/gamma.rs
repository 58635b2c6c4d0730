//! Γ-convergence experiments: N-player equilibria against the continuum
//! limit, plus the two closed-loop recovery constructions.

use std::time::Instant;

use serde::Serialize;

use crate::continuum::{phi_table, solve_frank_wolfe, FwConfig, SolveReport};
use crate::error::Result;
use crate::game::{energy_j, potential_closed_mixed, potential_closed_pure, PureProfile, Scenario};
use crate::measures::{disintegrate, sample_iid, w1_product, Coupling, DiscreteMeasure, Kernel};
use crate::nplayer::{best_response_dynamics_closed, brute_force_min_closed, DynamicsConfig, Init};
use crate::rng::{stream_rng, StreamRng};
use crate::scalar::{ExtReal, Scalar};

/// Replicas with at most this many pure profiles are also brute-forced.
pub const BRUTE_CHECK_LIMIT: f64 = 1e5;

/// Upper bound for the median `|value_N − value_limit|` at `N = 512` over
/// 32 seeds on `benchmark_line5`. The pilot in `pilot/benchmark_line5.json`
/// (seeds 1000..1031, `examples/gamma_pilot.rs`) has median 1.79e-3 and
/// maximum 2.16e-3.
pub const PILOT_GAP_THRESHOLD_N512: f64 = 2.5e-3;

/// One `(N, seed)` replica. Field order matches the CSV columns.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub scenario: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    #[serde(rename = "value_N")]
    pub value_n: f64,
    pub value_limit: f64,
    pub abs_gap: f64,
    pub w1_to_limit: f64,
    /// Exploitability of the empirical plan under the limit cost.
    pub exploitability: f64,
    /// Zero unless timing was requested.
    pub wall_ms: u64,
    /// Exact pure minimum, when the replica was small enough to enumerate.
    #[serde(skip)]
    pub brute_force_min: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    /// `|J_{ω,N}(μ_N ⊗ k) − J(γ*)|`, every player mixing with the
    /// disintegration `k` of the limit plan.
    pub analytical_gap: f64,
    /// `|J_{ω,N}(pure profile) − J(γ*)|` with `(X_i, Y_i)` i.i.d. from `γ*`.
    pub probabilistic_gap: f64,
}

/// Limit problem of an experiment, solved once and shared by all replicas.
#[derive(Clone, Debug)]
pub struct GammaSetup<'a, T = f64> {
    s: &'a Scenario<T>,
    scenario: String,
    plan: Coupling<T>,
    report: SolveReport<T>,
    kernel: Kernel<T>,
    phi: Vec<Vec<ExtReal<T>>>,
    timing: bool,
}

fn ext_f64<T: Scalar>(v: ExtReal<T>) -> f64 {
    v.finite().map_or(f64::INFINITY, |x| x.as_f64())
}

impl<'a, T: Scalar> GammaSetup<'a, T> {
    pub fn new(s: &'a Scenario<T>, scenario: impl Into<String>, cfg: &FwConfig<T>, timing: bool) -> Result<Self> {
        let (plan, report) = solve_frank_wolfe(s, cfg)?;
        let phi = phi_table(s, &plan.column_sums());
        let kernel = disintegrate(&plan);
        Ok(GammaSetup { s, scenario: scenario.into(), plan, report, kernel, phi, timing })
    }

    pub fn limit_plan(&self) -> &Coupling<T> {
        &self.plan
    }

    pub fn limit_report(&self) -> &SolveReport<T> {
        &self.report
    }

    pub fn value_limit(&self) -> f64 {
        self.report.value.as_f64()
    }

    fn draw_types(&self, n: usize, seed: u64) -> (Vec<usize>, StreamRng) {
        let mut rng = stream_rng(seed, n as u64);
        (sample_iid(self.s.mu(), n, &mut rng), rng)
    }

    /// Best-response equilibrium of `N` players with types drawn from `μ`,
    /// compared with the limit.
    pub fn replica(&self, n: usize, seed: u64) -> Result<ExperimentRecord> {
        let start = Instant::now();
        let s = self.s;
        let (types, _) = self.draw_types(n, seed);
        let cfg = DynamicsConfig { record_moves: false, ..DynamicsConfig::default() };
        let (profile, _) = best_response_dynamics_closed(s, &types, Init::Greedy, &cfg)?;
        let value_n = ext_f64(potential_closed_pure(s, &profile));
        let brute_force_min =
            if (s.ny() as f64).powi(n as i32) <= BRUTE_CHECK_LIMIT { Some(ext_f64(brute_force_min_closed(s, &types)?.0)) } else { None };
        let gamma_n: Coupling<T> = profile.plan(s.nx(), s.ny());
        let w1 = w1_product(&gamma_n, &self.plan, s.space_x(), s.space_y())?.as_f64();
        let exploitability = self.exploitability_of(&profile);
        let value_limit = self.value_limit();
        let wall_ms = if self.timing { start.elapsed().as_millis() as u64 } else { 0 };
        Ok(ExperimentRecord {
            scenario: self.scenario.clone(),
            n,
            seed,
            value_n,
            value_limit,
            abs_gap: (value_n - value_limit).abs(),
            w1_to_limit: w1,
            exploitability,
            wall_ms,
            brute_force_min,
        })
    }

    /// Average regret of the players against the limit cost `Φ(·, ·, ν*)`.
    fn exploitability_of(&self, p: &PureProfile) -> f64 {
        let mut total = 0.0;
        for (&x, &y) in p.types.iter().zip(&p.plays) {
            let row = &self.phi[x];
            let best = row.iter().copied().fold(ExtReal::Inf, ExtReal::min);
            total += match (row[y], best) {
                (ExtReal::Finite(v), ExtReal::Finite(b)) => (v - b).as_f64(),
                (ExtReal::Inf, ExtReal::Finite(_)) => f64::INFINITY,
                _ => 0.0,
            };
        }
        total / p.n() as f64
    }

    /// Both recovery constructions for the limit plan on the same draw of
    /// types.
    pub fn recovery(&self, n: usize, seed: u64) -> Result<RecoveryRecord> {
        let s = self.s;
        let (types, mut rng) = self.draw_types(n, seed);
        let target = ext_f64(energy_j(s, &self.plan));
        let strategies: Vec<Vec<T>> = types.iter().map(|&x| self.kernel.row(x).to_vec()).collect();
        let analytical = ext_f64(potential_closed_mixed(s, &types, &strategies));
        let mut plays = Vec::with_capacity(n);
        for st in &strategies {
            let row = DiscreteMeasure::from_dense(st)?;
            plays.push(sample_iid(&row, 1, &mut rng)[0]);
        }
        let probabilistic = ext_f64(potential_closed_pure(s, &PureProfile::new(types, plays)?));
        Ok(RecoveryRecord { n, seed, analytical_gap: (analytical - target).abs(), probabilistic_gap: (probabilistic - target).abs() })
    }
}

/// Runs every `(N, seed)` replica and returns the records sorted by
/// `(N, seed)`. Types of replica `(N, seed)` come from stream `N` of `seed`.
pub fn gamma_convergence_experiment<T: Scalar>(
    s: &Scenario<T>,
    scenario: &str,
    ns: &[usize],
    seeds: &[u64],
    cfg: &FwConfig<T>,
) -> Result<Vec<ExperimentRecord>> {
    let setup = GammaSetup::new(s, scenario, cfg, false)?;
    let mut out = Vec::with_capacity(ns.len() * seeds.len());
    for &n in ns {
        for &seed in seeds {
            out.push(setup.replica(n, seed)?);
        }
    }
    out.sort_by_key(|r| (r.n, r.seed));
    Ok(out)
}
