//! Exact discrete optimal transport.
//!
//! The transportation problem is solved with the primal transportation
//! simplex (north-west corner start, dual potentials on the basis tree,
//! cycle pivots). Infinite costs never enter the arithmetic: every cell
//! carries a lexicographic cost `(infinite?, finite part)`, so the simplex
//! first minimises the mass sent along forbidden cells and only then the
//! finite cost. A positive forbidden mass at the optimum means no coupling
//! lives on finite-cost cells, and the value is `+∞`.

use super::{Coupling, DiscreteMeasure, Space};
use crate::error::{Error, Result};
use crate::scalar::{ExtReal, Scalar};

/// Optimal value and, when finite, an optimal plan over the full `X × Y` grid.
#[derive(Clone, Debug)]
pub struct Transport<T = f64> {
    pub value: ExtReal<T>,
    pub plan: Option<Vec<Vec<T>>>,
}

#[derive(Clone, Copy, Debug)]
struct LexCost<T> {
    forbidden: T,
    cost: T,
}

impl<T: Scalar> LexCost<T> {
    fn of(c: ExtReal<T>) -> Self {
        match c {
            ExtReal::Finite(v) => LexCost { forbidden: T::zero(), cost: v },
            ExtReal::Inf => LexCost { forbidden: T::one(), cost: T::zero() },
        }
    }

    fn sub(self, o: Self) -> Self {
        LexCost { forbidden: self.forbidden - o.forbidden, cost: self.cost - o.cost }
    }

    fn add(self, o: Self) -> Self {
        LexCost { forbidden: self.forbidden + o.forbidden, cost: self.cost + o.cost }
    }

    /// Strictly negative beyond the tolerances, lexicographically.
    fn is_negative(&self, tol: T, cost_tol: T) -> bool {
        self.forbidden < -tol || (self.forbidden.abs() <= tol && self.cost < -cost_tol)
    }

    /// Lexicographic `self < other`.
    fn less(&self, other: &Self) -> bool {
        self.forbidden < other.forbidden || (self.forbidden == other.forbidden && self.cost < other.cost)
    }
}

/// Consecutive degenerate pivots after which entering-variable selection
/// switches from Dantzig's rule to Bland's rule.
const DEGENERATE_SWITCH: usize = 50;

/// Optimal transport between `mu` (on rows) and `nu` (on columns) for the
/// dense extended-real `cost` table.
pub fn ot_plan<T: Scalar>(cost: &[Vec<ExtReal<T>>], mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> Result<Transport<T>> {
    let nx = cost.len();
    let ny = cost.first().map_or(0, Vec::len);
    if cost.iter().any(|r| r.len() != ny) {
        return Err(Error::DimensionMismatch("cost table is not rectangular".into()));
    }
    if mu.max_point() >= nx || nu.max_point() >= ny {
        return Err(Error::DimensionMismatch(format!("measures do not fit a {nx}x{ny} cost table")));
    }
    let rows: Vec<(usize, T)> = mu.iter().filter(|(_, w)| *w > T::zero()).collect();
    let cols: Vec<(usize, T)> = nu.iter().filter(|(_, w)| *w > T::zero()).collect();
    let m = rows.len();
    let n = cols.len();

    let lex: Vec<Vec<LexCost<T>>> = rows.iter().map(|&(x, _)| cols.iter().map(|&(y, _)| LexCost::of(cost[x][y])).collect()).collect();
    let scale = lex.iter().flatten().fold(T::one(), |s, c| s.max(c.cost.abs()));
    let tol = T::pivot_tol();
    let cost_tol = T::pivot_tol() * scale;

    let mut basis = north_west_corner(&rows, &cols);
    let mut in_basis = vec![vec![false; n]; m];
    for b in &basis {
        in_basis[b.i][b.j] = true;
    }

    let mut degenerate_run = 0usize;
    loop {
        let (u, v) = potentials(&basis, m, n, &lex);
        let entering = if degenerate_run < DEGENERATE_SWITCH {
            // Dantzig: most negative reduced cost.
            let mut best: Option<(usize, usize, LexCost<T>)> = None;
            for i in 0..m {
                for j in 0..n {
                    if in_basis[i][j] {
                        continue;
                    }
                    let r = lex[i][j].sub(u[i].add(v[j]));
                    if r.is_negative(tol, cost_tol) && best.as_ref().is_none_or(|b| r.less(&b.2)) {
                        best = Some((i, j, r));
                    }
                }
            }
            best.map(|(i, j, _)| (i, j))
        } else {
            // Bland: first improving cell in row-major order.
            (0..m)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .find(|&(i, j)| !in_basis[i][j] && lex[i][j].sub(u[i].add(v[j])).is_negative(tol, cost_tol))
        };
        let Some((ei, ej)) = entering else { break };

        let path = tree_path(&basis, m, n, ej, ei);
        // Edges on the path alternate −, +, −, … starting next to column ej.
        let mut leave: Option<usize> = None;
        for (k, &e) in path.iter().enumerate() {
            if k % 2 == 0 {
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let (f, fl) = (basis[e].flow, basis[l].flow);
                        f < fl || (f == fl && (basis[e].i, basis[e].j) < (basis[l].i, basis[l].j))
                    }
                };
                if better {
                    leave = Some(e);
                }
            }
        }
        let leave = leave.expect("basis tree path to an entering cell has a decreasing edge");
        let theta = basis[leave].flow;
        degenerate_run = if theta > T::zero() { 0 } else { degenerate_run + 1 };
        for (k, &e) in path.iter().enumerate() {
            let f = if k % 2 == 0 { basis[e].flow - theta } else { basis[e].flow + theta };
            basis[e].flow = f.max(T::zero());
        }
        in_basis[basis[leave].i][basis[leave].j] = false;
        basis[leave] = BasicCell { i: ei, j: ej, flow: theta };
        in_basis[ei][ej] = true;
    }

    let mut forbidden_mass = T::zero();
    let mut value = T::zero();
    let mut plan = vec![vec![T::zero(); ny]; nx];
    for b in &basis {
        let (x, y) = (rows[b.i].0, cols[b.j].0);
        match cost[x][y] {
            ExtReal::Inf => forbidden_mass += b.flow,
            ExtReal::Finite(c) => {
                value += c * b.flow;
                plan[x][y] += b.flow;
            }
        }
    }
    if forbidden_mass > T::mass_tol() {
        return Ok(Transport { value: ExtReal::Inf, plan: None });
    }
    Ok(Transport { value: ExtReal::Finite(value), plan: Some(plan) })
}

/// Optimal transport cost; `+∞` when no coupling lives on finite-cost cells.
pub fn ot_value<T: Scalar>(cost: &[Vec<ExtReal<T>>], mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> Result<ExtReal<T>> {
    Ok(ot_plan(cost, mu, nu)?.value)
}

/// Wasserstein-1 distance between two measures on the same space.
pub fn w1_distance<T: Scalar>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>, space: &Space<T>) -> Result<T> {
    let cost: Vec<Vec<ExtReal<T>>> = space.metric().iter().map(|r| r.iter().map(|&d| ExtReal::Finite(d)).collect()).collect();
    match ot_value(&cost, mu, nu)? {
        ExtReal::Finite(v) => Ok(v.max(T::zero())),
        ExtReal::Inf => unreachable!("metric costs are finite"),
    }
}

/// Wasserstein-1 distance between two plans seen as measures on `X × Y`
/// with the sum metric `d_X + d_Y`.
pub fn w1_product<T: Scalar>(g1: &Coupling<T>, g2: &Coupling<T>, space_x: &Space<T>, space_y: &Space<T>) -> Result<T> {
    if g1.nx() != g2.nx() || g1.ny() != g2.ny() || g1.nx() != space_x.len() || g1.ny() != space_y.len() {
        return Err(Error::DimensionMismatch("plans and spaces disagree in shape".into()));
    }
    let atoms = |g: &Coupling<T>| -> Vec<((usize, usize), T)> {
        g.rows()
            .iter()
            .enumerate()
            .flat_map(|(x, row)| row.iter().enumerate().filter(|(_, v)| **v > T::zero()).map(move |(y, &v)| ((x, y), v)))
            .collect()
    };
    let a = atoms(g1);
    let b = atoms(g2);
    let cost: Vec<Vec<ExtReal<T>>> = a
        .iter()
        .map(|((x1, y1), _)| b.iter().map(|((x2, y2), _)| ExtReal::Finite(space_x.dist(*x1, *x2) + space_y.dist(*y1, *y2))).collect())
        .collect();
    let normalise = |atoms: &[((usize, usize), T)]| -> Result<DiscreteMeasure<T>> {
        let total: T = atoms.iter().map(|(_, w)| *w).sum();
        DiscreteMeasure::new((0..atoms.len()).collect(), atoms.iter().map(|(_, w)| *w / total).collect())
    };
    let mu = normalise(&a)?;
    let nu = normalise(&b)?;
    match ot_value(&cost, &mu, &nu)? {
        ExtReal::Finite(v) => Ok(v.max(T::zero())),
        ExtReal::Inf => unreachable!("product metric costs are finite"),
    }
}

#[derive(Clone, Copy, Debug)]
struct BasicCell<T> {
    i: usize,
    j: usize,
    flow: T,
}

/// North-west corner rule; always yields `m + n − 1` basic cells (some
/// possibly at zero flow) forming a spanning tree of the bipartite graph.
fn north_west_corner<T: Scalar>(rows: &[(usize, T)], cols: &[(usize, T)]) -> Vec<BasicCell<T>> {
    let (m, n) = (rows.len(), cols.len());
    let mut supply: Vec<T> = rows.iter().map(|r| r.1).collect();
    let mut demand: Vec<T> = cols.iter().map(|c| c.1).collect();
    let mut basis = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let f = supply[i].max(T::zero()).min(demand[j].max(T::zero()));
        basis.push(BasicCell { i, j, flow: f });
        let row_done = supply[i] <= demand[j];
        supply[i] = supply[i] - f;
        demand[j] = demand[j] - f;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 || row_done {
            i += 1;
        } else {
            j += 1;
        }
    }
    // Rounding residue of unequal totals goes to the last cell.
    let last = basis.last_mut().expect("nonempty basis");
    last.flow += supply[m - 1].max(T::zero()).min(demand[n - 1].max(T::zero()));
    basis
}

fn adjacency<T>(basis: &[BasicCell<T>], m: usize, n: usize) -> Vec<Vec<(usize, usize)>> {
    // Nodes 0..m are rows, m..m+n columns; entries are (neighbour, basis index).
    let mut adj = vec![Vec::new(); m + n];
    for (k, b) in basis.iter().enumerate() {
        adj[b.i].push((m + b.j, k));
        adj[m + b.j].push((b.i, k));
    }
    adj
}

/// Dual potentials with `u_i + v_j = cost_ij` on basic cells and `u_0 = 0`.
fn potentials<T: Scalar>(basis: &[BasicCell<T>], m: usize, n: usize, lex: &[Vec<LexCost<T>>]) -> (Vec<LexCost<T>>, Vec<LexCost<T>>) {
    let zero = LexCost { forbidden: T::zero(), cost: T::zero() };
    let adj = adjacency(basis, m, n);
    let mut pot = vec![None; m + n];
    pot[0] = Some(zero);
    let mut stack = vec![0usize];
    while let Some(node) = stack.pop() {
        let p = pot[node].expect("visited");
        for &(nb, k) in &adj[node] {
            if pot[nb].is_none() {
                let c = lex[basis[k].i][basis[k].j];
                pot[nb] = Some(c.sub(p));
                stack.push(nb);
            }
        }
    }
    let pot: Vec<LexCost<T>> = pot.into_iter().map(|p| p.expect("basis is a spanning tree")).collect();
    (pot[..m].to_vec(), pot[m..].to_vec())
}

/// Basis indices on the tree path from column node `j` to row node `i`.
fn tree_path<T>(basis: &[BasicCell<T>], m: usize, n: usize, j: usize, i: usize) -> Vec<usize> {
    let adj = adjacency(basis, m, n);
    let start = m + j;
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; m + n];
    let mut seen = vec![false; m + n];
    seen[start] = true;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == i {
            break;
        }
        for &(nb, k) in &adj[node] {
            if !seen[nb] {
                seen[nb] = true;
                parent[nb] = Some((node, k));
                queue.push_back(nb);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = i;
    while node != start {
        let (prev, k) = parent[node].expect("basis is a spanning tree");
        path.push(k);
        node = prev;
    }
    path.reverse();
    path
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fin(t: &[&[f64]]) -> Vec<Vec<ExtReal<f64>>> {
        t.iter().map(|r| r.iter().map(|&v| ExtReal::from(v)).collect()).collect()
    }

    #[test]
    fn identity_transport_is_free() {
        let space = Space::<f64>::line(&[0.0, 1.0, 3.0]);
        let mu = DiscreteMeasure::new(vec![0, 1, 2], vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(w1_distance(&mu, &mu, &space).unwrap(), 0.0);
    }

    #[test]
    fn two_diracs() {
        let cost = fin(&[&[0.0, 7.0], &[2.0, 0.0]]);
        let v = ot_value(&cost, &DiscreteMeasure::dirac(0), &DiscreteMeasure::dirac(1)).unwrap();
        assert_eq!(v, ExtReal::Finite(7.0));
    }

    #[test]
    fn hand_checked_three_by_three() {
        // Supplies (0.5, 0.3, 0.2), demands (0.4, 0.4, 0.2); the optimum routes
        // 0.4 via (0,0), 0.1 via (0,1), 0.3 via (1,1), 0.2 via (2,2): cost 0.1·2 = 0.2.
        let cost = fin(&[&[0.0, 2.0, 5.0], &[3.0, 0.0, 4.0], &[6.0, 6.0, 0.0]]);
        let mu = DiscreteMeasure::new(vec![0, 1, 2], vec![0.5, 0.3, 0.2]).unwrap();
        let nu = DiscreteMeasure::new(vec![0, 1, 2], vec![0.4, 0.4, 0.2]).unwrap();
        let t = ot_plan(&cost, &mu, &nu).unwrap();
        assert!((t.value.finite().unwrap() - 0.2).abs() < 1e-15);
        let plan = t.plan.unwrap();
        for (x, row) in plan.iter().enumerate() {
            let s: f64 = row.iter().sum();
            assert!((s - mu.weight(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn forbidden_cells_give_inf_or_are_avoided() {
        let inf = ExtReal::Inf;
        let cost = vec![vec![ExtReal::Finite(1.0), inf], vec![inf, inf]];
        let mu = DiscreteMeasure::new(vec![0, 1], vec![0.5, 0.5]).unwrap();
        let nu = DiscreteMeasure::new(vec![0, 1], vec![0.5, 0.5]).unwrap();
        assert_eq!(ot_value(&cost, &mu, &nu).unwrap(), ExtReal::Inf);

        let cost = vec![vec![inf, ExtReal::Finite(100.0)], vec![ExtReal::Finite(100.0), inf]];
        assert_eq!(ot_value(&cost, &mu, &nu).unwrap(), ExtReal::Finite(100.0));
    }

    #[test]
    fn line_w1_matches_cdf_formula() {
        // W1 on the line is the integral of |F − G|.
        let pos = [0.0, 0.5, 1.5, 4.0];
        let space = Space::<f64>::line(&pos);
        let a = [0.1, 0.4, 0.2, 0.3];
        let b = [0.5, 0.0, 0.25, 0.25];
        let mu = DiscreteMeasure::from_dense(&a).unwrap();
        let nu = DiscreteMeasure::from_dense(&b).unwrap();
        let mut cdf: f64 = 0.0;
        let mut expected = 0.0;
        for k in 0..3 {
            cdf += a[k] - b[k];
            expected += cdf.abs() * (pos[k + 1] - pos[k]);
        }
        assert!((w1_distance(&mu, &nu, &space).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn w1_product_single_edge_move() {
        let sx = Space::<f64>::line(&[0.0, 1.0]);
        let sy = Space::<f64>::line(&[0.0, 0.3, 0.9]);
        let g1 = Coupling::from_table(vec![vec![0.5, 0.0, 0.0], vec![0.0, 0.5, 0.0]]).unwrap();
        let g2 = Coupling::from_table(vec![vec![0.5, 0.0, 0.0], vec![0.0, 0.4, 0.1]]).unwrap();
        assert_eq!(w1_product(&g1, &g1, &sx, &sy).unwrap(), 0.0);
        assert!((w1_product(&g1, &g2, &sx, &sy).unwrap() - 0.1 * 0.6).abs() < 1e-15);
    }

    #[test]
    fn degenerate_marginals_terminate() {
        // Equal partial sums make every north-west step a tie.
        let cost = fin(&[&[3.0, 1.0, 2.0], &[1.0, 3.0, 2.0], &[2.0, 2.0, 0.0]]);
        let mu = DiscreteMeasure::uniform(3);
        let t = ot_value(&cost, &mu, &mu).unwrap().finite().unwrap();
        assert!((t - 2.0 / 3.0).abs() < 1e-15);
    }
}
