//! Scalar abstraction and the extended half-line `R ∪ {+∞}`.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use num_traits::{Float, FromPrimitive};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

/// Floating-point type the solvers are written against.
///
/// Tolerances are part of the trait because the sensible values differ by
/// orders of magnitude between `f32` and `f64`.
pub trait Scalar: Float + FromPrimitive + Sum + AddAssign + Default + fmt::Debug + fmt::Display + Send + Sync + 'static {
    /// Absolute slack on probability masses (marginal sums, row sums).
    fn mass_tol() -> Self;
    /// Pivoting tolerance for the exact transport solver.
    fn pivot_tol() -> Self;

    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn mass_tol() -> Self {
        1e-12
    }
    fn pivot_tol() -> Self {
        1e-12
    }
}

impl Scalar for f32 {
    fn mass_tol() -> Self {
        1e-5
    }
    fn pivot_tol() -> Self {
        1e-6
    }
}

/// A finite real or `+∞`.
///
/// Products with a mass use the measure-theoretic convention `0·∞ = 0`, so a
/// cell that carries no mass never contributes, whatever its cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal<T = f64> {
    Finite(T),
    Inf,
}

impl<T: Scalar> ExtReal<T> {
    pub fn zero() -> Self {
        ExtReal::Finite(T::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, ExtReal::Inf)
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Inf => None,
        }
    }

    /// The value as a float, mapping `+∞` to `T::infinity()`.
    pub fn to_scalar(&self) -> T {
        match *self {
            ExtReal::Finite(v) => v,
            ExtReal::Inf => T::infinity(),
        }
    }

    /// Accepts a float, mapping `+∞` to [`ExtReal::Inf`]. NaN and `-∞` are rejected.
    pub fn from_scalar(v: T) -> Option<Self> {
        if v.is_nan() || v == T::neg_infinity() {
            None
        } else if v == T::infinity() {
            Some(ExtReal::Inf)
        } else {
            Some(ExtReal::Finite(v))
        }
    }

    /// `mass · self` with `0·∞ = 0`. `mass` must be nonnegative.
    #[inline]
    pub fn weighted(self, mass: T) -> Self {
        debug_assert!(mass >= T::zero());
        if mass == T::zero() {
            return Self::zero();
        }
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(v * mass),
            ExtReal::Inf => ExtReal::Inf,
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// `self ∧ m`.
    pub fn truncate(self, m: T) -> Self {
        match self {
            ExtReal::Finite(v) => ExtReal::Finite(v.min(m)),
            ExtReal::Inf => ExtReal::Finite(m),
        }
    }
}

impl<T: Scalar> From<T> for ExtReal<T> {
    fn from(v: T) -> Self {
        ExtReal::from_scalar(v).expect("finite or +inf")
    }
}

impl<T: Scalar> Add for ExtReal<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::Inf,
        }
    }
}

impl<T: Scalar> AddAssign for ExtReal<T> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl<T: Scalar> Sum for ExtReal<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}

impl<T: Scalar> PartialOrd for ExtReal<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
            (ExtReal::Finite(_), ExtReal::Inf) => Some(Ordering::Less),
            (ExtReal::Inf, ExtReal::Finite(_)) => Some(Ordering::Greater),
            (ExtReal::Inf, ExtReal::Inf) => Some(Ordering::Equal),
        }
    }
}

impl<T: Scalar> fmt::Display for ExtReal<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Inf => f.write_str("inf"),
        }
    }
}

impl<T: Scalar + Serialize> Serialize for ExtReal<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => v.serialize(serializer),
            ExtReal::Inf => serializer.serialize_str("inf"),
        }
    }
}

impl<'de, T: Scalar> Deserialize<'de> for ExtReal<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExtVisitor<T>(std::marker::PhantomData<T>);

        impl<T: Scalar> Visitor<'_> for ExtVisitor<T> {
            type Value = ExtReal<T>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a finite number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
                if !v.is_finite() {
                    return Err(E::custom("non-finite numbers must be written as \"inf\""));
                }
                T::from_f64(v).map(ExtReal::Finite).ok_or_else(|| E::custom("number out of range"))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                match v {
                    "inf" | "+inf" | "Infinity" | "+Infinity" => Ok(ExtReal::Inf),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        deserializer.deserialize_any(ExtVisitor(std::marker::PhantomData))
    }
}

/// Index of the smallest entry, lowest index on ties. `None` when every entry is `+∞`.
pub fn argmin_ext<T: Scalar>(values: impl IntoIterator<Item = ExtReal<T>>) -> Option<(usize, ExtReal<T>)> {
    let mut best: Option<(usize, ExtReal<T>)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if v.is_inf() {
            continue;
        }
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

/// Median of a sample, sorting it in place; NaN when empty.
pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_times_inf_is_zero() {
        let inf: ExtReal<f64> = ExtReal::Inf;
        assert_eq!(inf.weighted(0.0), ExtReal::Finite(0.0));
        assert_eq!(inf.weighted(1e-300), ExtReal::Inf);
    }

    #[test]
    fn inf_absorbs_addition_and_dominates_order() {
        let a = ExtReal::Finite(-5.0f64);
        assert_eq!(a + ExtReal::Inf, ExtReal::Inf);
        assert!(ExtReal::Inf > ExtReal::Finite(1e300f64));
        assert_eq!(ExtReal::Finite(1.0f64).truncate(0.5), ExtReal::Finite(0.5));
        assert_eq!(ExtReal::<f64>::Inf.truncate(5.0), ExtReal::Finite(5.0));
    }

    #[test]
    fn json_uses_inf_string() {
        let v: Vec<ExtReal<f64>> = serde_json::from_str(r#"[1, 2.5, "inf"]"#).unwrap();
        assert_eq!(v, vec![ExtReal::Finite(1.0), ExtReal::Finite(2.5), ExtReal::Inf]);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"[1.0,2.5,"inf"]"#);
        assert!(serde_json::from_str::<ExtReal<f64>>(r#""-inf""#).is_err());
    }

    #[test]
    fn argmin_breaks_ties_low() {
        let v = [ExtReal::Inf, ExtReal::Finite(2.0f64), ExtReal::Finite(1.0), ExtReal::Finite(1.0)];
        assert_eq!(argmin_ext(v), Some((2, ExtReal::Finite(1.0))));
        assert_eq!(argmin_ext([ExtReal::<f64>::Inf]), None);
    }

    #[test]
    fn f32_works_too() {
        let x: ExtReal<f32> = ExtReal::Finite(0.25);
        assert_eq!((x + x).finite(), Some(0.5f32));
    }
}
