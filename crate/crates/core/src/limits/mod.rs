//! Numerical checks of the limit theorems: gluing stability, recovery
//! identities, truncation bounds, Γ-convergence experiments and
//! concentration.

mod concentration;
mod gamma;
mod gluing;

pub use concentration::{hoeffding_bound, hoeffding_check, lln_symmetric_check, HoeffdingRecord, LlnRecord};
pub use gamma::{gamma_convergence_experiment, ExperimentRecord, GammaSetup, RecoveryRecord, BRUTE_CHECK_LIMIT, PILOT_GAP_THRESHOLD_N512};
pub use gluing::{glue_plan, stability_check, verify_gluing, GluingOperator, StabilityRecord};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{energy_j, potential_closed_mixed, potential_open, truncate_h, Scenario};
use crate::measures::{disintegrate, Coupling};
use crate::scalar::{ExtReal, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryIdentity<T = f64> {
    /// Open-loop potential with every player using the disintegration of `γ`.
    pub lhs: T,
    /// `J(γ) − νᵀHν / N`.
    pub rhs: T,
    pub abs_err: T,
    pub rel_err: T,
}

/// Evaluates both sides of `J_{Ω,N}(k, …, k) = J(γ) − νᵀHν / N`, `k` the
/// disintegration of `γ`.
pub fn recovery_identity_open<T: Scalar>(s: &Scenario<T>, gamma: &Coupling<T>, n: usize) -> Result<RecoveryIdentity<T>> {
    if n == 0 {
        return Err(Error::DimensionMismatch("N must be positive".into()));
    }
    let k = disintegrate(gamma);
    let kernels = vec![k; n];
    let nu = gamma.column_sums();
    let (ExtReal::Finite(j), ExtReal::Finite(hh)) = (energy_j(s, gamma), s.interaction(&nu, &nu)) else {
        return Err(Error::InvalidMeasure("the identity needs finite J and finite interaction".into()));
    };
    let lhs = potential_open(s, &kernels).to_scalar();
    let rhs = j - hh / T::lit(n as f64);
    let abs_err = (lhs - rhs).abs();
    Ok(RecoveryIdentity { lhs, rhs, abs_err, rel_err: abs_err / rhs.abs().max(T::one()) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct TruncationCheck<T = f64> {
    /// Closed-loop mixed potential of the profile.
    pub lhs: ExtReal<T>,
    /// `∫c dγ_N + L(ν_N) + H^M(ν_N, ν_N) − M/N`.
    pub rhs: ExtReal<T>,
    pub holds: bool,
}

/// Lower bound of the closed-loop potential by the truncated continuum
/// energy of the average strategy, losing at most `M/N`.
pub fn truncation_bound_check<T: Scalar>(s: &Scenario<T>, types: &[usize], strategies: &[Vec<T>], m: T) -> Result<TruncationCheck<T>> {
    if types.is_empty() || types.len() != strategies.len() {
        return Err(Error::DimensionMismatch("one strategy per player is required".into()));
    }
    let truncated = truncate_h(s, m)?;
    let n = T::lit(types.len() as f64);
    let lhs = potential_closed_mixed(s, types, strategies);
    let mut base = ExtReal::zero();
    let mut nu = vec![T::zero(); s.ny()];
    for (&x, st) in types.iter().zip(strategies) {
        for (y, &w) in st.iter().enumerate() {
            base += s.base_cost(x, y).weighted(w / n);
            nu[y] += w / n;
        }
    }
    let rhs = base + truncated.interaction(&nu, &nu) + ExtReal::Finite(-m / n);
    let holds = match (lhs, rhs) {
        (ExtReal::Inf, _) => true,
        (ExtReal::Finite(_), ExtReal::Inf) => false,
        (ExtReal::Finite(l), ExtReal::Finite(r)) => l >= r - T::lit(1e-12) * (T::one() + r.abs()),
    };
    Ok(TruncationCheck { lhs, rhs, holds })
}
