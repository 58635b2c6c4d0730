//! Gluing operators and the stability of the minimal value in `W1`.

use serde::Serialize;

use crate::continuum::{solve_frank_wolfe, FwConfig};
use crate::error::{Error, Result};
use crate::game::{energy_j, Scenario};
use crate::measures::{ot_plan, w1_distance, Coupling, DiscreteMeasure};
use crate::scalar::{ExtReal, Scalar};

/// `G(x1, x0, y)`: the strategy a player of type `x1` copies from a player
/// of type `x0` playing `y`, with its Lipschitz constant `C`.
#[derive(Clone, Debug, PartialEq)]
pub struct GluingOperator<T = f64> {
    map: Vec<Vec<Vec<usize>>>,
    constant: T,
}

impl<T: Scalar> GluingOperator<T> {
    /// Checks the shape `|X| × |X| × |Y|`, the range, `C ≥ 0`, and
    /// consistency `G(x, x, y) = y`.
    pub fn new(map: Vec<Vec<Vec<usize>>>, constant: T, nx: usize, ny: usize) -> Result<Self> {
        if map.len() != nx || map.iter().any(|m| m.len() != nx || m.iter().any(|r| r.len() != ny)) {
            return Err(Error::scenario("gluing.map", format!("expected a {nx}x{nx}x{ny} table")));
        }
        if map.iter().flatten().flatten().any(|&y| y >= ny) {
            return Err(Error::scenario("gluing.map", "strategy index outside Y"));
        }
        if !(constant >= T::zero()) || !constant.is_finite() {
            return Err(Error::scenario("gluing.constant", "must be finite and >= 0"));
        }
        for (x, plane) in map.iter().enumerate() {
            for (y, &g) in plane[x].iter().enumerate() {
                if g != y {
                    return Err(Error::InconsistentGluing { x, y });
                }
            }
        }
        Ok(GluingOperator { map, constant })
    }

    /// `G(x1, x0, y) = y`.
    pub fn identity(nx: usize, ny: usize, constant: T) -> Self {
        GluingOperator { map: vec![vec![(0..ny).collect(); nx]; nx], constant }
    }

    pub fn map(&self) -> &[Vec<Vec<usize>>] {
        &self.map
    }

    pub fn constant(&self) -> T {
        self.constant
    }

    #[inline]
    pub fn apply(&self, x1: usize, x0: usize, y: usize) -> usize {
        self.map[x1][x0][y]
    }
}

/// Smallest `C ≥ 0` with `lhs ≤ rhs + C d` (`+∞` if impossible).
fn ratio<T: Scalar>(lhs: ExtReal<T>, rhs: ExtReal<T>, d: T) -> T {
    match (lhs, rhs) {
        (_, ExtReal::Inf) => T::zero(),
        (ExtReal::Inf, _) => T::infinity(),
        (ExtReal::Finite(a), ExtReal::Finite(b)) => {
            if a <= b {
                T::zero()
            } else if d > T::zero() {
                (a - b) / d
            } else {
                T::infinity()
            }
        }
    }
}

/// Checks the three gluing inequalities exhaustively and returns whether
/// the operator's constant suffices (up to a relative `1e-12`), together
/// with the tight constant.
pub fn verify_gluing<T: Scalar>(s: &Scenario<T>, g: &GluingOperator<T>) -> (bool, T) {
    let (nx, ny) = (s.nx(), s.ny());
    let d = |a: usize, b: usize| s.space_x().dist(a, b);
    let mut tight = T::zero();
    for x1 in 0..nx {
        for x0 in 0..nx {
            for y in 0..ny {
                let gy = g.apply(x1, x0, y);
                tight = tight.max(ratio(s.c()[x1][gy], s.c()[x0][y], d(x1, x0)));
                tight = tight.max(ratio(s.l()[gy], s.l()[y], d(x1, x0)));
            }
        }
    }
    for x1 in 0..nx {
        for x0 in 0..nx {
            for u1 in 0..nx {
                for u0 in 0..nx {
                    let dist = d(x1, x0) + d(u1, u0);
                    for y in 0..ny {
                        let gy = g.apply(x1, x0, y);
                        for y2 in 0..ny {
                            let gy2 = g.apply(u1, u0, y2);
                            tight = tight.max(ratio(s.h()[gy][gy2], s.h()[y][y2], dist));
                        }
                    }
                }
            }
        }
    }
    // the ratios carry rounding error of a few ulps
    (g.constant + T::lit(1e-12) * (T::one() + g.constant) >= tight, tight)
}

/// Transfers `gamma0` (first marginal `μ0`) to a plan with first marginal
/// `mu1`: glue a `W1`-optimal coupling of `(mu1, μ0)` with `gamma0` along
/// `μ0` and push forward by `(x1, x0, y) ↦ (x1, G(x1, x0, y))`.
pub fn glue_plan<T: Scalar>(
    s0: &Scenario<T>,
    g: &GluingOperator<T>,
    gamma0: &Coupling<T>,
    mu1: &DiscreteMeasure<T>,
) -> Result<Coupling<T>> {
    let mu0 = gamma0.row_marginal();
    let metric: Vec<Vec<ExtReal<T>>> = s0.space_x().metric().iter().map(|r| r.iter().map(|&v| ExtReal::Finite(v)).collect()).collect();
    let pi = ot_plan(&metric, mu1, mu0)?.plan.ok_or_else(|| Error::InvalidMeasure("metric transport failed".into()))?;
    let (nx, ny) = (s0.nx(), s0.ny());
    let mut rows = vec![vec![T::zero(); ny]; nx];
    for x1 in 0..nx {
        for x0 in 0..nx {
            let p = pi[x1][x0];
            if p == T::zero() {
                continue;
            }
            let m0 = mu0.weight(x0);
            for y in 0..ny {
                let g0 = gamma0.get(x0, y);
                if g0 > T::zero() {
                    rows[x1][g.apply(x1, x0, y)] += p * g0 / m0;
                }
            }
        }
    }
    // exact row masses
    for (x1, row) in rows.iter_mut().enumerate() {
        let total: T = row.iter().copied().sum();
        let target = mu1.weight(x1);
        if total > T::zero() {
            let k = target / total;
            row.iter_mut().for_each(|v| *v = *v * k);
        }
    }
    Coupling::new(rows, mu1.clone())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityRecord<T = f64> {
    pub value0: T,
    pub value1: T,
    pub delta: T,
    pub w1: T,
    pub bound: T,
    /// `|Δ| / bound`, zero when the bound vanishes.
    pub tightness: T,
    pub passes: bool,
    /// `J(glued) − J(γ0) − 4C·W1`; nonpositive by the gluing inequality.
    pub glue_slack: T,
}

/// Solves the problem at `mu0` and `mu1` and compares the change of the
/// minimal value with `4 C W1(mu0, mu1)`.
pub fn stability_check<T: Scalar>(
    s: &Scenario<T>,
    g: &GluingOperator<T>,
    mu0: &DiscreteMeasure<T>,
    mu1: &DiscreteMeasure<T>,
    cfg: &FwConfig<T>,
) -> Result<StabilityRecord<T>> {
    let s0 = s.with_mu(mu0.clone())?;
    let s1 = s.with_mu(mu1.clone())?;
    let (plan0, rep0) = solve_frank_wolfe(&s0, cfg)?;
    let (_, rep1) = solve_frank_wolfe(&s1, cfg)?;
    let w1 = w1_distance(mu0, mu1, s.space_x())?;
    let bound = T::lit(4.0) * g.constant() * w1;
    let delta = (rep0.value - rep1.value).abs();
    let glued = glue_plan(&s0, g, &plan0, mu1)?;
    let glue_slack = energy_j(&s1, &glued).to_scalar() - rep0.value - bound;
    Ok(StabilityRecord {
        value0: rep0.value,
        value1: rep1.value,
        delta,
        w1,
        bound,
        tightness: if bound > T::zero() { delta / bound } else { T::zero() },
        passes: delta <= bound + T::lit(1e-9),
        glue_slack,
    })
}
