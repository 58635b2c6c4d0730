//! Conditional-gradient minimization of pairwise energies over a product of
//! scaled simplices.
//!
//! The variable is a table of rows; row `r` carries a fixed mass `m_r` and is
//! charged with cost `a_r(y) = c(x_r, y) + L(y)`. The objective is
//!
//! `Σ_r ⟨row_r, a_r⟩ + Σ_{r,s} row_rᵀ H row_s`,
//!
//! with the diagonal pairs `r = s` dropped when `exclude_self` is set (the
//! closed-loop mixed potential, one row per player).

use crate::game::Scenario;
use crate::scalar::{argmin_ext, ExtReal, Scalar};

pub(crate) struct Pairwise<'a, T> {
    pub s: &'a Scenario<T>,
    /// Type index of each row.
    pub row_type: Vec<usize>,
    pub exclude_self: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct CgConfig<T> {
    pub max_iter: usize,
    pub gap_tol: T,
    pub trace_stride: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct CgOutcome<T> {
    pub rows: Vec<Vec<T>>,
    pub value: ExtReal<T>,
    pub gap: T,
    pub iterations: usize,
    pub trace: Vec<(usize, T, T)>,
    pub converged: bool,
}

fn column_sums<T: Scalar>(rows: &[Vec<T>], ny: usize) -> Vec<T> {
    let mut nu = vec![T::zero(); ny];
    for row in rows {
        for (acc, &v) in nu.iter_mut().zip(row) {
            *acc += v;
        }
    }
    nu
}

impl<T: Scalar> Pairwise<'_, T> {
    pub fn value(&self, rows: &[Vec<T>]) -> ExtReal<T> {
        let s = self.s;
        let mut total = ExtReal::zero();
        for (r, row) in rows.iter().enumerate() {
            for (y, &g) in row.iter().enumerate() {
                total += s.base_cost(self.row_type[r], y).weighted(g);
            }
        }
        let nu = column_sums(rows, s.ny());
        let full = s.interaction(&nu, &nu);
        if !self.exclude_self {
            return total + full;
        }
        match full {
            ExtReal::Finite(f) => {
                let own: T = rows.iter().map(|row| s.interaction(row, row).to_scalar()).sum();
                total + ExtReal::Finite(f - own)
            }
            ExtReal::Inf => {
                for (r, a) in rows.iter().enumerate() {
                    for (q, b) in rows.iter().enumerate() {
                        if r != q {
                            total += s.interaction(a, b);
                        }
                    }
                }
                total
            }
        }
    }

    /// Per-cell linearization: `a_r(y) + 2 (H ν_{-r})(y)`, where `ν_{-r}` is
    /// the full column sum, or the sum over the other rows when self pairs
    /// are excluded.
    pub fn gradient(&self, rows: &[Vec<T>]) -> Vec<Vec<ExtReal<T>>> {
        let s = self.s;
        let ny = s.ny();
        let nu = column_sums(rows, ny);
        let two = T::lit(2.0);
        if !self.exclude_self {
            let field: Vec<ExtReal<T>> = (0..ny).map(|y| s.h_against(y, &nu).weighted_signed(two)).collect();
            return (0..rows.len()).map(|r| (0..ny).map(|y| s.base_cost(self.row_type[r], y) + field[y]).collect()).collect();
        }
        let charged: Vec<usize> = (0..ny).map(|y| rows.iter().filter(|row| row[y] > T::zero()).count()).collect();
        rows.iter()
            .enumerate()
            .map(|(r, row)| {
                let others: Vec<T> = (0..ny)
                    .map(|y| {
                        let n_other = charged[y] - usize::from(row[y] > T::zero());
                        if n_other == 0 {
                            T::zero()
                        } else {
                            (nu[y] - row[y]).max(T::min_positive_value())
                        }
                    })
                    .collect();
                (0..ny).map(|y| s.base_cost(self.row_type[r], y) + s.h_against(y, &others).weighted_signed(two)).collect()
            })
            .collect()
    }

    /// Second-order coefficient of `t ↦ f(rows + t d)`, or `None` when the
    /// direction couples cells with infinite interaction.
    fn curvature(&self, d: &[Vec<T>]) -> Option<T> {
        let s = self.s;
        let ny = s.ny();
        let quad = |a: &[T], b: &[T]| -> Option<T> {
            let mut acc = T::zero();
            for y in 0..ny {
                if a[y] == T::zero() {
                    continue;
                }
                for y2 in 0..ny {
                    if b[y2] == T::zero() {
                        continue;
                    }
                    acc += s.h()[y][y2].finite()? * a[y] * b[y2];
                }
            }
            Some(acc)
        };
        let dnu = column_sums(d, ny);
        let mut q = quad(&dnu, &dnu)?;
        if self.exclude_self {
            for row in d {
                q = q - quad(row, row)?;
            }
        }
        Some(q)
    }

    /// Whether mass may enter cell `(r, y)` without making the energy
    /// infinite, given the currently charged strategies.
    fn admissible(&self, r: usize, y: usize, support: &[bool]) -> bool {
        let s = self.s;
        s.base_cost(self.row_type[r], y).is_finite()
            && s.h()[y][y].is_finite()
            && support.iter().enumerate().all(|(y2, &on)| !on || s.h()[y][y2].is_finite())
    }
}

/// `Σ_r Σ_y row_r(y) [g_r(y) − min_y' g_r(y')]` over charged cells.
pub(crate) fn gap_of<T: Scalar>(rows: &[Vec<T>], grad: &[Vec<ExtReal<T>>]) -> ExtReal<T> {
    let mut gap = ExtReal::zero();
    for (row, g) in rows.iter().zip(grad) {
        let Some((_, best)) = argmin_ext(g.iter().copied()) else {
            if row.iter().any(|&v| v > T::zero()) {
                return ExtReal::Inf;
            }
            continue;
        };
        let best = best.to_scalar();
        for (&v, gv) in row.iter().zip(g) {
            if v > T::zero() {
                match gv {
                    ExtReal::Finite(f) => gap += ExtReal::Finite(v * (*f - best)),
                    ExtReal::Inf => return ExtReal::Inf,
                }
            }
        }
    }
    gap
}

const POLISH_EVERY: usize = 64;

enum Step<T> {
    Moved(Vec<Vec<T>>, ExtReal<T>),
    Stuck,
}

pub(crate) fn minimize<T: Scalar>(obj: &Pairwise<'_, T>, start: Vec<Vec<T>>, cfg: &CgConfig<T>) -> CgOutcome<T> {
    let masses: Vec<T> = start.iter().map(|row| row.iter().copied().sum()).collect();
    let mut rows = start;
    let mut value = obj.value(&rows);
    let mut trace = Vec::new();
    let mut iterations = 0;
    let stride = cfg.trace_stride.max(1);
    let mut gap;
    let mut polished_at = usize::MAX;
    loop {
        let mut grad = obj.gradient(&rows);
        gap = gap_of(&rows, &grad);
        let done = value.is_inf() || gap.finite().is_some_and(|g| g <= cfg.gap_tol) || iterations >= cfg.max_iter;
        // Periodically, and before giving up, try to jump to the exact
        // stationary point on the current support.
        if !value.is_inf() && polished_at != iterations && (done || iterations % POLISH_EVERY == POLISH_EVERY - 1) {
            polished_at = iterations;
            if let Some((next, v, g, next_grad)) = polish(obj, &rows, &masses, &grad, value, gap) {
                rows = next;
                value = v;
                gap = g;
                grad = next_grad;
            }
        }
        if iterations % stride == 0 {
            trace.push((iterations, value.to_scalar(), gap.to_scalar()));
        }
        if value.is_inf() || gap.finite().is_some_and(|g| g <= cfg.gap_tol) || iterations >= cfg.max_iter {
            break;
        }
        match step(obj, &rows, &masses, &grad, value) {
            Step::Moved(next, v) => {
                rows = next;
                value = v;
                iterations += 1;
            }
            Step::Stuck => {
                if polished_at == iterations || value.is_inf() {
                    break;
                }
                polished_at = iterations;
                match polish(obj, &rows, &masses, &grad, value, gap) {
                    Some((next, v, _, _)) => {
                        rows = next;
                        value = v;
                    }
                    None => break,
                }
            }
        }
    }
    if trace.last().map(|t| t.0) != Some(iterations) {
        trace.push((iterations, value.to_scalar(), gap.to_scalar()));
    }
    let gap = gap.to_scalar();
    CgOutcome { rows, value, gap, iterations, trace, converged: gap <= cfg.gap_tol }
}

fn step<T: Scalar>(obj: &Pairwise<'_, T>, rows: &[Vec<T>], masses: &[T], grad: &[Vec<ExtReal<T>>], value: ExtReal<T>) -> Step<T> {
    let ny = obj.s.ny();
    let nu = column_sums(rows, ny);
    let support: Vec<bool> = nu.iter().map(|&v| v > T::zero()).collect();

    // Unrestricted best responses first, then best responses restricted to
    // cells that keep the energy finite.
    let br_free: Vec<Option<usize>> = grad.iter().map(|g| argmin_ext(g.iter().copied()).map(|(y, _)| y)).collect();
    let br_safe: Vec<Option<usize>> = grad
        .iter()
        .enumerate()
        .map(|(r, g)| {
            let masked =
                g.iter().enumerate().map(|(y, v)| if obj.admissible(r, y, &support) || rows[r][y] > T::zero() { *v } else { ExtReal::Inf });
            argmin_ext(masked).map(|(y, _)| y)
        })
        .collect();

    for br in [&br_free, &br_safe] {
        let mut candidates = vec![fw_direction(rows, masses, grad, br), pairwise_direction(rows, grad, br)];
        candidates.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        for (d, slope) in candidates {
            if !(slope < T::zero()) {
                continue;
            }
            if let Some(moved) = line_search(obj, rows, masses, &d, slope, value) {
                return moved;
            }
        }
    }
    // Single-row moves toward the restricted best response.
    for r in 0..rows.len() {
        let Some(y) = br_safe[r] else { continue };
        let mut d = vec![vec![T::zero(); ny]; rows.len()];
        let mut slope = T::zero();
        for y2 in 0..ny {
            d[r][y2] = -rows[r][y2];
        }
        d[r][y] += masses[r];
        for (y2, &dv) in d[r].iter().enumerate() {
            if dv != T::zero() {
                slope += dv * grad[r][y2].to_scalar();
            }
        }
        if slope < T::zero() {
            if let Some(moved) = line_search(obj, rows, masses, &d, slope, value) {
                return moved;
            }
        }
    }
    Step::Stuck
}

fn fw_direction<T: Scalar>(rows: &[Vec<T>], masses: &[T], grad: &[Vec<ExtReal<T>>], br: &[Option<usize>]) -> (Vec<Vec<T>>, T) {
    let mut slope = T::zero();
    let d = rows
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let Some(b) = br[r] else { return vec![T::zero(); row.len()] };
            let mut dr: Vec<T> = row.iter().map(|&v| -v).collect();
            dr[b] += masses[r];
            for (y, &dv) in dr.iter().enumerate() {
                if dv != T::zero() {
                    slope += dv * grad[r][y].to_scalar();
                }
            }
            dr
        })
        .collect();
    (d, slope)
}

/// Per row, shift all mass of the worst charged cell onto the best response.
fn pairwise_direction<T: Scalar>(rows: &[Vec<T>], grad: &[Vec<ExtReal<T>>], br: &[Option<usize>]) -> (Vec<Vec<T>>, T) {
    let mut slope = T::zero();
    let d = rows
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut dr = vec![T::zero(); row.len()];
            let Some(b) = br[r] else { return dr };
            let away = (0..row.len())
                .filter(|&y| row[y] > T::zero())
                .max_by(|&a, &c| grad[r][a].partial_cmp(&grad[r][c]).unwrap_or(std::cmp::Ordering::Equal).then(c.cmp(&a)));
            if let Some(a) = away {
                if a != b {
                    dr[a] = -row[a];
                    dr[b] = row[a];
                    slope += row[a] * (grad[r][b].to_scalar() - grad[r][a].to_scalar());
                }
            }
            dr
        })
        .collect();
    (d, slope)
}

fn apply<T: Scalar>(rows: &[Vec<T>], masses: &[T], d: &[Vec<T>], t: T) -> Vec<Vec<T>> {
    rows.iter()
        .zip(d)
        .zip(masses)
        .map(|((row, dr), &m)| {
            let mut next: Vec<T> = row
                .iter()
                .zip(dr)
                .map(|(&v, &dv)| {
                    // a full pairwise step must empty the away cell exactly
                    if t == T::one() && dv == -v {
                        T::zero()
                    } else {
                        (v + t * dv).max(T::zero())
                    }
                })
                .collect();
            let total: T = next.iter().copied().sum();
            if total > T::zero() && m > T::zero() {
                let k = m / total;
                next.iter_mut().for_each(|v| *v = *v * k);
            }
            next
        })
        .collect()
}

fn line_search<T: Scalar>(
    obj: &Pairwise<'_, T>,
    rows: &[Vec<T>],
    masses: &[T],
    d: &[Vec<T>],
    slope: T,
    value: ExtReal<T>,
) -> Option<Step<T>> {
    let f0 = value.finite()?;
    let slack = T::lit(1e-13) * (T::one() + f0.abs());
    let t = match obj.curvature(d) {
        Some(q) if q > T::zero() => (-slope / (T::lit(2.0) * q)).min(T::one()),
        Some(_) => T::one(),
        None => {
            // Infinite interaction inside the segment; only the far endpoint
            // can be finite.
            let next = apply(rows, masses, d, T::one());
            let v = obj.value(&next);
            return v.finite().filter(|&f| f < f0).map(|f| Step::Moved(next, ExtReal::Finite(f)));
        }
    };
    if !(t > T::zero()) {
        return None;
    }
    let next = apply(rows, masses, d, t);
    let v = obj.value(&next);
    match v {
        ExtReal::Finite(f) if f <= f0 + slack => Some(Step::Moved(next, ExtReal::Finite(f.min(f0)))),
        _ => None,
    }
}

type Polished<T> = (Vec<Vec<T>>, ExtReal<T>, ExtReal<T>, Vec<Vec<ExtReal<T>>>);

/// Active-set step: guess the support of the solution, solve the linear
/// system "equal linearization on the support, fixed row masses" and keep
/// the result if it is feasible, does not increase the value and lowers
/// the gap. Several guesses are tried and the best accepted one wins.
fn polish<T: Scalar>(
    obj: &Pairwise<'_, T>,
    rows: &[Vec<T>],
    masses: &[T],
    grad: &[Vec<ExtReal<T>>],
    value: ExtReal<T>,
    gap: ExtReal<T>,
) -> Option<Polished<T>> {
    let scale = T::one() + grad.iter().flatten().filter_map(|g| g.finite()).fold(T::zero(), |a, v| a.max(v.abs()));
    let mut tried: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut best: Option<Polished<T>> = None;
    let by_grad = [1e-6, 1e-4, 1e-2].map(|k| support_by_gradient(rows, masses, grad, T::lit(k) * scale));
    let by_mass = [1e-6, 1e-3].map(|k| support_by_mass(rows, masses, T::lit(k)));
    for support in by_grad.into_iter().chain(by_mass).flatten() {
        if tried.contains(&support) {
            continue;
        }
        let bar = best.as_ref().map_or(gap, |b| b.2);
        if let Some(p) = kkt_step(obj, &support, masses, value, bar) {
            best = Some(p);
        }
        tried.push(support);
    }
    best
}

/// Charged cells whose linearization is within `tol` of the row minimum.
fn support_by_gradient<T: Scalar>(rows: &[Vec<T>], masses: &[T], grad: &[Vec<ExtReal<T>>], tol: T) -> Option<Vec<Vec<usize>>> {
    let mut out = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        if masses[r] == T::zero() {
            out.push(Vec::new());
            continue;
        }
        let (_, best) = argmin_ext(grad[r].iter().copied())?;
        let best = best.to_scalar();
        let keep: Vec<usize> =
            (0..row.len()).filter(|&y| row[y] > T::zero() && grad[r][y].finite().is_some_and(|g| g - best <= tol)).collect();
        if keep.is_empty() {
            return None;
        }
        out.push(keep);
    }
    Some(out)
}

/// Cells carrying more than `frac` of their row's mass.
fn support_by_mass<T: Scalar>(rows: &[Vec<T>], masses: &[T], frac: T) -> Option<Vec<Vec<usize>>> {
    let mut out = Vec::with_capacity(rows.len());
    for (row, &m) in rows.iter().zip(masses) {
        let keep: Vec<usize> = (0..row.len()).filter(|&y| m > T::zero() && row[y] > frac * m).collect();
        if m > T::zero() && keep.is_empty() {
            return None;
        }
        out.push(keep);
    }
    Some(out)
}

fn kkt_step<T: Scalar>(
    obj: &Pairwise<'_, T>,
    support: &[Vec<usize>],
    masses: &[T],
    value: ExtReal<T>,
    gap: ExtReal<T>,
) -> Option<Polished<T>> {
    let s = obj.s;
    let mut cells: Vec<(usize, usize)> = Vec::new();
    let mut row_cells: Vec<Vec<usize>> = vec![Vec::new(); support.len()];
    for (r, ys) in support.iter().enumerate() {
        for &y in ys {
            row_cells[r].push(cells.len());
            cells.push((r, y));
        }
    }
    let n = cells.len();
    let mut a = vec![vec![T::zero(); n]; n];
    let mut b = vec![T::zero(); n];
    let two = T::lit(2.0);
    let mut eq = 0;
    for (r, idx) in row_cells.iter().enumerate() {
        let Some(&first) = idx.first() else { continue };
        let y0 = cells[first].1;
        let x = obj.row_type[r];
        for &k in &idx[1..] {
            let y = cells[k].1;
            for (col, &(r2, y2)) in cells.iter().enumerate() {
                if obj.exclude_self && r2 == r {
                    continue;
                }
                a[eq][col] = two * (s.h()[y][y2].finite()? - s.h()[y0][y2].finite()?);
            }
            b[eq] = s.base_cost(x, y0).finite()? - s.base_cost(x, y).finite()?;
            eq += 1;
        }
        for &k in idx {
            a[eq][k] = T::one();
        }
        b[eq] = masses[r];
        eq += 1;
    }
    let z = solve_dense(a, b)?;
    let mut next = vec![vec![T::zero(); s.ny()]; support.len()];
    for (k, &(r, y)) in cells.iter().enumerate() {
        if z[k] < -T::lit(1e-12) * masses[r].max(T::one()) {
            return None;
        }
        next[r][y] = z[k].max(T::zero());
    }
    for (r, row) in next.iter_mut().enumerate() {
        let total: T = row.iter().copied().sum();
        if total > T::zero() {
            let k = masses[r] / total;
            row.iter_mut().for_each(|v| *v = *v * k);
        }
    }
    let v = obj.value(&next);
    let f0 = value.finite()?;
    let f = v.finite()?;
    if f > f0 + T::lit(1e-13) * (T::one() + f0.abs()) {
        return None;
    }
    let next_grad = obj.gradient(&next);
    let g = gap_of(&next, &next_grad);
    (g < gap).then(|| (next, ExtReal::Finite(f.min(f0)), g, next_grad))
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_dense<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs())).max(T::min_positive_value());
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if a[piv][col].abs() <= T::lit(1e-11) * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for i in col + 1..n {
            let f = a[i][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let v = a[col][j];
                a[i][j] = a[i][j] - f * v;
            }
            let v = b[col];
            b[i] = b[i] - f * v;
        }
    }
    let mut z = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for j in i + 1..n {
            acc = acc - a[i][j] * z[j];
        }
        z[i] = acc / a[i][i];
    }
    z.iter().all(|v| v.is_finite()).then_some(z)
}

/// Whether the symmetric matrix is positive semidefinite on the subspace of
/// zero-sum vectors (pivoted Cholesky on the reduced form).
pub(crate) fn conditionally_psd<T: Scalar>(h: &[Vec<T>]) -> bool {
    let n = h.len();
    if n <= 1 {
        return true;
    }
    let m = n - 1;
    // basis e_i − e_{n−1}
    let mut b: Vec<Vec<T>> = (0..m).map(|i| (0..m).map(|j| h[i][j] - h[i][m] - h[m][j] + h[m][m]).collect()).collect();
    let scale = b.iter().flatten().fold(T::zero(), |a, v| a.max(v.abs())).max(T::one());
    let tol = T::lit(1e-10) * scale;
    let mut active: Vec<usize> = (0..m).collect();
    while !active.is_empty() {
        let (pos, &p) = active
            .iter()
            .enumerate()
            .max_by(|a, c| b[*a.1][*a.1].partial_cmp(&b[*c.1][*c.1]).unwrap_or(std::cmp::Ordering::Equal))
            .expect("nonempty");
        let piv = b[p][p];
        if piv < -tol {
            return false;
        }
        if piv <= tol {
            // remaining diagonal is ~0: the rest must vanish too
            return active.iter().all(|&i| active.iter().all(|&j| b[i][j].abs() <= T::lit(1e-8) * scale));
        }
        active.remove(pos);
        for &i in &active {
            for &j in &active {
                b[i][j] = b[i][j] - b[i][p] * b[p][j] / piv;
            }
        }
    }
    true
}
