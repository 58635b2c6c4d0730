//! Finite metric spaces, discrete probability measures, couplings and
//! kernels, plus exact discrete optimal transport in [`ot`].

pub mod ot;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Rng, StreamRng};
use crate::scalar::Scalar;

pub use ot::{ot_plan, ot_value, w1_distance, w1_product, Transport};

/// A finite metric space: point labels, optional coordinates and the full
/// distance table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Space<T = f64> {
    labels: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<Vec<T>>>,
    metric: Vec<Vec<T>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceRepr<T> {
    labels: Vec<String>,
    #[serde(default)]
    coords: Option<Vec<Vec<T>>>,
    #[serde(default)]
    metric: Option<Vec<Vec<T>>>,
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for Space<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = SpaceRepr::<T>::deserialize(d)?;
        let built = match (repr.coords, repr.metric) {
            (Some(coords), None) => Space::from_coords(repr.labels, coords),
            (coords, Some(metric)) => Space::from_metric(repr.labels, metric).and_then(|s| match coords {
                Some(c) => s.with_coords(c),
                None => Ok(s),
            }),
            (None, None) => Err(Error::InvalidSpace("either `coords` or `metric` is required".into())),
        };
        built.map_err(serde::de::Error::custom)
    }
}

impl<T: Scalar> Space<T> {
    /// Builds a space from an explicit distance table, checking that it is a
    /// metric (exhaustively over triples).
    pub fn from_metric(labels: Vec<String>, metric: Vec<Vec<T>>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::InvalidSpace("empty space".into()));
        }
        if metric.len() != n || metric.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidSpace(format!("metric must be {n}x{n}")));
        }
        let scale = metric.iter().flatten().fold(T::one(), |m, &v| m.max(v.abs()));
        let tol = T::mass_tol() * scale;
        for i in 0..n {
            if metric[i][i] != T::zero() {
                return Err(Error::InvalidSpace(format!("d({i},{i}) must be 0")));
            }
            for j in 0..n {
                let d = metric[i][j];
                if !d.is_finite() || d < T::zero() {
                    return Err(Error::InvalidSpace(format!("d({i},{j}) must be finite and >= 0")));
                }
                if (d - metric[j][i]).abs() > tol {
                    return Err(Error::InvalidSpace(format!("metric not symmetric at ({i},{j})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if metric[i][k] > metric[i][j] + metric[j][k] + tol {
                        return Err(Error::InvalidSpace(format!("triangle inequality fails on ({i},{j},{k})")));
                    }
                }
            }
        }
        Ok(Space { labels, coords: None, metric })
    }

    /// Euclidean distances between the given coordinates.
    pub fn from_coords(labels: Vec<String>, coords: Vec<Vec<T>>) -> Result<Self> {
        if coords.len() != labels.len() {
            return Err(Error::InvalidSpace("one coordinate vector per label required".into()));
        }
        let metric = coords
            .iter()
            .map(|a| {
                coords.iter().map(|b| a.iter().zip(b).map(|(&p, &q)| (p - q) * (p - q)).fold(T::zero(), |s, v| s + v).sqrt()).collect()
            })
            .collect();
        Space::from_metric(labels, metric)?.with_coords(coords)
    }

    /// Points on the real line, labelled by index.
    pub fn line(positions: &[T]) -> Self {
        let labels = (0..positions.len()).map(|i| format!("p{i}")).collect();
        let coords = positions.iter().map(|&p| vec![p]).collect();
        Space::from_coords(labels, coords).expect("points on a line form a metric space")
    }

    /// `n` points at mutual distance one.
    pub fn discrete(n: usize) -> Self {
        let labels = (0..n).map(|i| format!("p{i}")).collect();
        let metric = (0..n).map(|i| (0..n).map(|j| if i == j { T::zero() } else { T::one() }).collect()).collect();
        Space::from_metric(labels, metric).expect("discrete metric")
    }

    fn with_coords(mut self, coords: Vec<Vec<T>>) -> Result<Self> {
        if coords.len() != self.labels.len() {
            return Err(Error::InvalidSpace("one coordinate vector per label required".into()));
        }
        self.coords = Some(coords);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn coords(&self) -> Option<&[Vec<T>]> {
        self.coords.as_deref()
    }

    pub fn metric(&self) -> &[Vec<T>] {
        &self.metric
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> T {
        self.metric[i][j]
    }
}

/// A probability measure on a finite set of point indices.
///
/// Support indices are distinct; weights are nonnegative and sum to one.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteMeasure<T = f64> {
    support: Vec<usize>,
    weights: Vec<T>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureRepr<T> {
    support: Vec<usize>,
    weights: Vec<T>,
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for DiscreteMeasure<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MeasureRepr::<T>::deserialize(d)?;
        DiscreteMeasure::new(repr.support, repr.weights).map_err(serde::de::Error::custom)
    }
}

impl<T: Scalar> DiscreteMeasure<T> {
    pub fn new(support: Vec<usize>, weights: Vec<T>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!("{} support points but {} weights", support.len(), weights.len())));
        }
        if support.is_empty() {
            return Err(Error::InvalidMeasure("empty support".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < T::zero()) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not a finite nonnegative number")));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::mass_tol() {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, expected 1")));
        }
        let mut seen = support.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidMeasure("repeated support point".into()));
        }
        Ok(DiscreteMeasure { support, weights })
    }

    pub fn dirac(point: usize) -> Self {
        DiscreteMeasure { support: vec![point], weights: vec![T::one()] }
    }

    /// Uniform measure on `0..n`.
    pub fn uniform(n: usize) -> Self {
        let w = T::one() / T::lit(n as f64);
        DiscreteMeasure { support: (0..n).collect(), weights: vec![w; n] }
    }

    /// Measure from a dense weight vector; zero entries are dropped.
    pub fn from_dense(weights: &[T]) -> Result<Self> {
        let (support, weights) = weights.iter().enumerate().filter(|(_, w)| **w != T::zero()).map(|(i, &w)| (i, w)).unzip();
        DiscreteMeasure::new(support, weights)
    }

    /// Empirical measure of a list of points; repeated points are merged and
    /// the support is sorted.
    pub fn empirical(points: &[usize]) -> Self {
        assert!(!points.is_empty(), "empirical measure of an empty sample");
        let mut sorted = points.to_vec();
        sorted.sort_unstable();
        let n = T::lit(points.len() as f64);
        let mut support = Vec::new();
        let mut weights = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let mut k = i;
            while k < sorted.len() && sorted[k] == sorted[i] {
                k += 1;
            }
            support.push(sorted[i]);
            weights.push(T::lit((k - i) as f64) / n);
            i = k;
        }
        DiscreteMeasure { support, weights }
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.support.iter().copied().zip(self.weights.iter().copied())
    }

    /// Mass at `point` (zero outside the support).
    pub fn weight(&self, point: usize) -> T {
        self.iter().find(|(p, _)| *p == point).map_or(T::zero(), |(_, w)| w)
    }

    pub fn max_point(&self) -> usize {
        self.support.iter().copied().max().unwrap_or(0)
    }

    /// Dense weight vector over `0..n`.
    pub fn dense(&self, n: usize) -> Result<Vec<T>> {
        if self.max_point() >= n {
            return Err(Error::DimensionMismatch(format!("support point {} outside a space of {n} points", self.max_point())));
        }
        let mut out = vec![T::zero(); n];
        for (p, w) in self.iter() {
            out[p] = w;
        }
        Ok(out)
    }

    /// Same measure as another up to `tol` per point.
    pub fn approx_eq(&self, other: &Self, tol: T) -> bool {
        let n = self.max_point().max(other.max_point()) + 1;
        let a = self.dense(n).expect("sized to fit");
        let b = other.dense(n).expect("sized to fit");
        a.iter().zip(&b).all(|(x, y)| (*x - *y).abs() <= tol)
    }
}

/// A nonnegative table over `X × Y` whose row sums are a prescribed
/// probability measure on `X`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Coupling<T = f64> {
    rows: Vec<Vec<T>>,
    row_marginal: DiscreteMeasure<T>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CouplingRepr<T> {
    rows: Vec<Vec<T>>,
    row_marginal: MeasureRepr<T>,
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for Coupling<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = CouplingRepr::<T>::deserialize(d)?;
        DiscreteMeasure::new(repr.row_marginal.support, repr.row_marginal.weights)
            .and_then(|m| Coupling::new(repr.rows, m))
            .map_err(serde::de::Error::custom)
    }
}

impl<T: Scalar> Coupling<T> {
    pub fn new(rows: Vec<Vec<T>>, row_marginal: DiscreteMeasure<T>) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, Vec::len);
        if nx == 0 || ny == 0 || rows.iter().any(|r| r.len() != ny) {
            return Err(Error::DimensionMismatch("coupling table must be a nonempty rectangle".into()));
        }
        let mu = row_marginal.dense(nx)?;
        for (x, row) in rows.iter().enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < T::zero()) {
                return Err(Error::InvalidMeasure(format!("row {x} has a negative or non-finite entry")));
            }
            let s: T = row.iter().copied().sum();
            if (s - mu[x]).abs() > T::mass_tol() {
                return Err(Error::InvalidMeasure(format!("row {x} sums to {s}, marginal is {}", mu[x])));
            }
        }
        Ok(Coupling { rows, row_marginal })
    }

    /// Coupling whose row marginal is read off the table.
    pub fn from_table(rows: Vec<Vec<T>>) -> Result<Self> {
        let sums: Vec<T> = rows.iter().map(|r| r.iter().copied().sum()).collect();
        let mu = DiscreteMeasure::from_dense(&sums)?;
        Coupling::new(rows, mu)
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts_unchecked(rows: Vec<Vec<T>>, row_marginal: DiscreteMeasure<T>) -> Self {
        Coupling { rows, row_marginal }
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn row_marginal(&self) -> &DiscreteMeasure<T> {
        &self.row_marginal
    }

    pub fn nx(&self) -> usize {
        self.rows.len()
    }

    pub fn ny(&self) -> usize {
        self.rows[0].len()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.rows[x][y]
    }

    /// Dense second marginal.
    pub fn column_sums(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.ny()];
        for row in &self.rows {
            for (o, &v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    pub fn second_marginal(&self) -> DiscreteMeasure<T> {
        DiscreteMeasure::from_dense(&self.column_sums()).expect("column sums of a coupling form a probability")
    }

    /// `(first marginal, second marginal)`.
    pub fn marginals(&self) -> (DiscreteMeasure<T>, DiscreteMeasure<T>) {
        (self.row_marginal.clone(), self.second_marginal())
    }

    /// Largest entrywise difference from another coupling of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.rows.iter().flatten().zip(other.rows.iter().flatten()).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

/// A row-stochastic table: one probability distribution over `Y` per `x`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Kernel<T = f64> {
    rows: Vec<Vec<T>>,
    /// Rows that were filled with the uniform distribution because the
    /// disintegrated plan put no mass there.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    defaulted: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelRepr<T> {
    rows: Vec<Vec<T>>,
    #[serde(default)]
    defaulted: Vec<usize>,
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for Kernel<T> {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = KernelRepr::<T>::deserialize(d)?;
        let mut k = Kernel::new(repr.rows).map_err(serde::de::Error::custom)?;
        k.defaulted = repr.defaulted;
        Ok(k)
    }
}

impl<T: Scalar> Kernel<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let ny = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || ny == 0 || rows.iter().any(|r| r.len() != ny) {
            return Err(Error::DimensionMismatch("kernel must be a nonempty rectangle".into()));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < T::zero()) {
                return Err(Error::InvalidMeasure(format!("kernel row {x} has a negative entry")));
            }
            let s: T = row.iter().copied().sum();
            if (s - T::one()).abs() > T::mass_tol() {
                return Err(Error::InvalidMeasure(format!("kernel row {x} sums to {s}")));
            }
        }
        Ok(Kernel { rows, defaulted: Vec::new() })
    }

    /// Deterministic kernel: row `x` is the Dirac mass at `choice[x]`.
    pub fn deterministic(ny: usize, choice: &[usize]) -> Self {
        let rows = choice
            .iter()
            .map(|&y| {
                let mut r = vec![T::zero(); ny];
                r[y] = T::one();
                r
            })
            .collect();
        Kernel { rows, defaulted: Vec::new() }
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.rows[x]
    }

    pub fn nx(&self) -> usize {
        self.rows.len()
    }

    pub fn ny(&self) -> usize {
        self.rows[0].len()
    }

    pub fn defaulted_rows(&self) -> &[usize] {
        &self.defaulted
    }

    /// Strategy index of a Dirac row, if the row is a Dirac.
    pub fn dirac_at(&self, x: usize) -> Option<usize> {
        let row = &self.rows[x];
        let pos = row.iter().position(|v| *v == T::one())?;
        row.iter().enumerate().all(|(y, v)| y == pos || *v == T::zero()).then_some(pos)
    }

    /// `Σ_x mu(x) K(x, ·)`, the strategy distribution induced under `mu`.
    pub fn pushforward(&self, mu: &DiscreteMeasure<T>) -> Vec<T> {
        let mut out = vec![T::zero(); self.ny()];
        for (x, w) in mu.iter() {
            for (o, &k) in out.iter_mut().zip(&self.rows[x]) {
                *o += w * k;
            }
        }
        out
    }
}

/// Draws `n` i.i.d. points from `mu` with the stream `(seed, 0)`; returns the
/// raw sample and its (merged) empirical measure.
pub fn sample_empirical<T: Scalar>(mu: &DiscreteMeasure<T>, n: usize, seed: u64) -> (Vec<usize>, DiscreteMeasure<T>) {
    let mut rng = stream_rng(seed, 0);
    let types = sample_iid(mu, n, &mut rng);
    let emp = DiscreteMeasure::empirical(&types);
    (types, emp)
}

/// `n` i.i.d. draws from `mu` by inversion of the cumulative weights.
pub fn sample_iid<T: Scalar>(mu: &DiscreteMeasure<T>, n: usize, rng: &mut StreamRng) -> Vec<usize> {
    assert!(n >= 1, "sample size must be positive");
    let cumulative: Vec<f64> = mu
        .weights()
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w.as_f64();
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().expect("nonempty support");
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * total;
            let k = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
            mu.support()[k]
        })
        .collect()
}

/// `mu ⊗ k`: entry `(x, y) = mu(x) k(x, y)`.
pub fn product_plan<T: Scalar>(mu: &DiscreteMeasure<T>, k: &Kernel<T>) -> Result<Coupling<T>> {
    let weights = mu.dense(k.nx())?;
    let rows = k.rows().iter().zip(&weights).map(|(row, &w)| row.iter().map(|&v| w * v).collect()).collect();
    Ok(Coupling::from_parts_unchecked(rows, mu.clone()))
}

/// Row-normalises a coupling. Rows without mass get the uniform
/// distribution and are listed in [`Kernel::defaulted_rows`].
pub fn disintegrate<T: Scalar>(gamma: &Coupling<T>) -> Kernel<T> {
    let ny = gamma.ny();
    let uniform = T::one() / T::lit(ny as f64);
    let mut defaulted = Vec::new();
    let rows = gamma
        .rows()
        .iter()
        .enumerate()
        .map(|(x, row)| {
            let mass: T = row.iter().copied().sum();
            if mass > T::zero() {
                row.iter().map(|&v| v / mass).collect()
            } else {
                defaulted.push(x);
                vec![uniform; ny]
            }
        })
        .collect();
    Kernel { rows, defaulted }
}
