//! Law of large numbers for symmetric pair averages and Hoeffding's bound.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{sample_iid, DiscreteMeasure};
use crate::rng::stream_rng;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LlnRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    /// `(1/N²) Σ_{i≠j} φ(X_i, X_j)`.
    pub s_n: f64,
    /// `Σ_{x,x'} μ(x) μ(x') φ(x, x')`.
    pub mean: f64,
    pub abs_err: f64,
}

/// Pair averages of a symmetric table over i.i.d. samples of `mu`, one
/// record per `(N, seed)`, sorted by `(N, seed)`. Sample `(N, seed)` uses
/// stream `N` of `seed`.
pub fn lln_symmetric_check<T: Scalar>(phi: &[Vec<T>], mu: &DiscreteMeasure<T>, ns: &[usize], seeds: &[u64]) -> Result<Vec<LlnRecord>> {
    let nx = phi.len();
    if phi.iter().any(|r| r.len() != nx) || mu.max_point() >= nx {
        return Err(Error::DimensionMismatch("phi must be square and cover the support of mu".into()));
    }
    for (a, row) in phi.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            if !v.is_finite() || *v != phi[b][a] {
                return Err(Error::InvalidScenario { path: format!("phi[{a}][{b}]"), msg: "must be finite and symmetric".into() });
            }
        }
    }
    let mean: f64 = mu.iter().flat_map(|(x, w)| mu.iter().map(move |(x2, w2)| (w * w2 * phi[x][x2]).as_f64())).sum();
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    let mut out = Vec::new();
    for &n in &ns {
        if n == 0 {
            return Err(Error::DimensionMismatch("N must be positive".into()));
        }
        for &seed in &seeds {
            let mut rng = stream_rng(seed, n as u64);
            let mut counts = vec![0f64; nx];
            for x in sample_iid(mu, n, &mut rng) {
                counts[x] += 1.0;
            }
            let mut total = 0.0;
            for a in 0..nx {
                if counts[a] == 0.0 {
                    continue;
                }
                for b in 0..nx {
                    let pairs = if a == b { counts[a] * (counts[a] - 1.0) } else { counts[a] * counts[b] };
                    total += pairs * phi[a][b].as_f64();
                }
            }
            let nf = n as f64;
            let s_n = total / (nf * nf);
            out.push(LlnRecord { n, seed, s_n, mean, abs_err: (s_n - mean).abs() });
        }
    }
    Ok(out)
}

/// `2 exp(−2 N ε² / (b − a)²)`; `2` when `ε = 0`, `0` when the range is
/// degenerate and `ε > 0`.
pub fn hoeffding_bound(n: usize, eps: f64, a: f64, b: f64) -> f64 {
    if eps <= 0.0 {
        return 2.0;
    }
    let width = b - a;
    if width <= 0.0 {
        return 0.0;
    }
    2.0 * (-2.0 * n as f64 * eps * eps / (width * width)).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HoeffdingRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub eps: f64,
    pub trials: usize,
    pub empirical_freq: f64,
    pub bound: f64,
    /// `bound + 2 sqrt(bound (1 − bound) / trials) + 0.01`, with the bound
    /// clipped to `[0, 1]` inside the square root.
    pub allowed: f64,
    pub passes: bool,
}

/// Frequency with which the mean of `n` i.i.d. draws of `values(X)`,
/// `X ~ mu`, deviates from its expectation by at least `eps`, against
/// Hoeffding's bound for values in `[a, b]`. Trial `t` uses stream `t` of
/// `seed`.
pub fn hoeffding_check<T: Scalar>(
    values: &[T],
    range: (T, T),
    mu: &DiscreteMeasure<T>,
    n: usize,
    eps: T,
    trials: usize,
    seed: u64,
) -> Result<HoeffdingRecord> {
    let (a, b) = (range.0.as_f64(), range.1.as_f64());
    if trials < 100 || n == 0 {
        return Err(Error::DimensionMismatch("need N >= 1 and at least 100 trials".into()));
    }
    if mu.max_point() >= values.len() {
        return Err(Error::DimensionMismatch("values must cover the support of mu".into()));
    }
    for (x, _) in mu.iter() {
        let v = values[x].as_f64();
        if !(a <= v && v <= b) {
            return Err(Error::InvalidMeasure(format!("value {v} at point {x} outside [{a}, {b}]")));
        }
    }
    let eps = eps.as_f64();
    let exact: f64 = mu.iter().map(|(x, w)| w.as_f64() * values[x].as_f64()).sum();
    let mut hits = 0usize;
    for t in 0..trials {
        let mut rng = stream_rng(seed, t as u64);
        let sum: f64 = sample_iid(mu, n, &mut rng).into_iter().map(|x| values[x].as_f64()).sum();
        if (sum / n as f64 - exact).abs() >= eps {
            hits += 1;
        }
    }
    let empirical_freq = hits as f64 / trials as f64;
    let bound = hoeffding_bound(n, eps, a, b);
    let p = bound.clamp(0.0, 1.0);
    let allowed = bound + 2.0 * (p * (1.0 - p) / trials as f64).sqrt() + 0.01;
    Ok(HoeffdingRecord { n, eps, trials, empirical_freq, bound, allowed, passes: empirical_freq <= allowed })
}
