//! Transportation LP kernel: optimal couplings between discrete
//! distributions, the squared Mallows distance, and the combined distance
//! over super-dimensions.
//!
//! The solver is a transportation simplex working on the basis spanning
//! tree with dual (u, v) pricing. It returns exact vertex solutions;
//! degenerate stalls switch entering selection to Bland's smallest-index
//! rule so the pivot sequence always terminates.

use serde::Serialize;

use crate::data::{DataObject, Distribution, GroundMetric};
use crate::error::{Error, Result};

/// Marginal tolerance for caller-supplied simplex weights.
pub const MARGINAL_TOL: f64 = 1e-9;
/// Tolerance the returned plan honors its marginals to.
pub const PLAN_TOL: f64 = 1e-8;
/// Plan entries below this are clamped to zero.
const CLAMP_TOL: f64 = 1e-12;

/// A transportation plan between two discrete distributions.
#[derive(Debug, Clone, Serialize)]
pub struct Coupling {
    rows: usize,
    cols: usize,
    /// Row-major `rows x cols` plan.
    plan: Vec<f64>,
    pub row_marginals: Vec<f64>,
    pub col_marginals: Vec<f64>,
}

impl Coupling {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.plan[r * self.cols + c]
    }

    pub fn plan(&self) -> &[f64] {
        &self.plan
    }

    /// Mass received by row `r` summed over all columns.
    pub fn row_sum(&self, r: usize) -> f64 {
        self.plan[r * self.cols..(r + 1) * self.cols].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> f64 {
        (0..self.rows).map(|r| self.entry(r, c)).sum()
    }

    /// Check marginal feasibility and non-negativity.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for &v in &self.plan {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::InfeasibleMarginals(format!(
                    "plan entry {v} negative or non-finite"
                )));
            }
        }
        for r in 0..self.rows {
            let diff = (self.row_sum(r) - self.row_marginals[r]).abs();
            if diff > tol {
                return Err(Error::InfeasibleMarginals(format!(
                    "row {r} off by {diff:.3e}"
                )));
            }
        }
        for c in 0..self.cols {
            let diff = (self.col_sum(c) - self.col_marginals[c]).abs();
            if diff > tol {
                return Err(Error::InfeasibleMarginals(format!(
                    "col {c} off by {diff:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// Build a coupling from a raw plan, clamping sub-tolerance entries to zero.
pub(crate) fn coupling_from_plan(
    plan: Vec<f64>,
    row_marginals: Vec<f64>,
    col_marginals: Vec<f64>,
) -> Coupling {
    let rows = row_marginals.len();
    let cols = col_marginals.len();
    let mut plan = plan;
    for v in &mut plan {
        if *v < CLAMP_TOL {
            *v = 0.0;
        }
    }
    Coupling {
        rows,
        cols,
        plan,
        row_marginals,
        col_marginals,
    }
}

struct TransportSimplex<'a> {
    s: usize,
    t: usize,
    cost: &'a [Vec<f64>],
    /// Basic cells as (row, col, flow).
    basis: Vec<(usize, usize, f64)>,
    bland: bool,
    stall: usize,
    pivots: usize,
}

impl<'a> TransportSimplex<'a> {
    /// Northwest-corner initial basic feasible solution with exactly
    /// `s + t - 1` basic cells.
    fn init(supply: &[f64], demand: &[f64], cost: &'a [Vec<f64>]) -> Self {
        let s = supply.len();
        let t = demand.len();
        let mut rem_s = supply.to_vec();
        let mut rem_d = demand.to_vec();
        let mut basis = Vec::with_capacity(s + t - 1);
        let (mut r, mut c) = (0, 0);
        loop {
            let f = rem_s[r].min(rem_d[c]).max(0.0);
            basis.push((r, c, f));
            rem_s[r] -= f;
            rem_d[c] -= f;
            if r == s - 1 && c == t - 1 {
                break;
            }
            // Advance along exactly one axis so the basis stays a tree.
            if (rem_s[r] <= rem_d[c] && r < s - 1) || c == t - 1 {
                r += 1;
            } else {
                c += 1;
            }
        }
        debug_assert_eq!(basis.len(), s + t - 1);
        TransportSimplex {
            s,
            t,
            cost,
            basis,
            bland: false,
            stall: 0,
            pivots: 0,
        }
    }

    /// Dual potentials from the basis tree (u[0] = 0).
    fn duals(&self) -> (Vec<f64>, Vec<f64>) {
        let mut u = vec![f64::NAN; self.s];
        let mut v = vec![f64::NAN; self.t];
        let mut row_cells: Vec<Vec<usize>> = vec![Vec::new(); self.s];
        let mut col_cells: Vec<Vec<usize>> = vec![Vec::new(); self.t];
        for (idx, &(r, c, _)) in self.basis.iter().enumerate() {
            row_cells[r].push(idx);
            col_cells[c].push(idx);
        }
        u[0] = 0.0;
        let mut stack = vec![(true, 0usize)];
        while let Some((is_row, node)) = stack.pop() {
            if is_row {
                for &idx in &row_cells[node] {
                    let (_, c, _) = self.basis[idx];
                    if v[c].is_nan() {
                        v[c] = self.cost[node][c] - u[node];
                        stack.push((false, c));
                    }
                }
            } else {
                for &idx in &col_cells[node] {
                    let (r, _, _) = self.basis[idx];
                    if u[r].is_nan() {
                        u[r] = self.cost[r][node] - v[node];
                        stack.push((true, r));
                    }
                }
            }
        }
        debug_assert!(u.iter().all(|x| !x.is_nan()) && v.iter().all(|x| !x.is_nan()));
        (u, v)
    }

    /// Entering cell with negative reduced cost, or None at optimality.
    fn entering(&self, u: &[f64], v: &[f64], tol: f64) -> Option<(usize, usize)> {
        let mut basic = vec![false; self.s * self.t];
        for &(r, c, _) in &self.basis {
            basic[r * self.t + c] = true;
        }
        let mut best: Option<((usize, usize), f64)> = None;
        for r in 0..self.s {
            for c in 0..self.t {
                if basic[r * self.t + c] {
                    continue;
                }
                let rc = self.cost[r][c] - u[r] - v[c];
                if rc < -tol {
                    if self.bland {
                        return Some((r, c));
                    }
                    if best.is_none() || rc < best.unwrap().1 {
                        best = Some(((r, c), rc));
                    }
                }
            }
        }
        best.map(|(cell, _)| cell)
    }

    /// Unique alternating cycle closed by the entering cell: the entering
    /// cell first, then the tree path from its row node to its col node.
    fn cycle(&self, er: usize, ec: usize) -> Vec<usize> {
        let nodes = self.s + self.t;
        // parent[node] = (previous node, basis cell index)
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; nodes];
        let mut visited = vec![false; nodes];
        visited[er] = true;
        let mut queue = std::collections::VecDeque::from([er]);
        while let Some(node) = queue.pop_front() {
            if node == self.s + ec {
                break;
            }
            for (idx, &(r, c, _)) in self.basis.iter().enumerate() {
                let (a, b) = (r, self.s + c);
                let next = if a == node {
                    b
                } else if b == node {
                    a
                } else {
                    continue;
                };
                if !visited[next] {
                    visited[next] = true;
                    parent[next] = Some((node, idx));
                    queue.push_back(next);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = self.s + ec;
        while node != er {
            let (prev, idx) = parent[node].expect("basis tree is connected");
            path.push(idx);
            node = prev;
        }
        path.reverse();
        debug_assert!(path.len() % 2 == 1);
        path
    }

    fn solve(&mut self, tol: f64) -> Result<()> {
        let max_pivots = 100 * self.s * self.t + 500;
        loop {
            if self.pivots > max_pivots {
                return Err(Error::LpFailure {
                    pivots: self.pivots,
                    reason: "transportation pivot limit exceeded".into(),
                });
            }
            let (u, v) = self.duals();
            let Some((er, ec)) = self.entering(&u, &v, tol) else {
                return Ok(());
            };
            let path = self.cycle(er, ec);
            // Odd path positions lose flow when the entering cell gains.
            let mut theta = f64::INFINITY;
            let mut leaving = usize::MAX;
            for (pos, &idx) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    let (r, c, f) = self.basis[idx];
                    if f < theta - CLAMP_TOL
                        || (f < theta + CLAMP_TOL
                            && (leaving == usize::MAX
                                || (r, c) < (self.basis[leaving].0, self.basis[leaving].1)))
                    {
                        theta = f;
                        leaving = idx;
                    }
                }
            }
            let theta = theta.max(0.0);
            for (pos, &idx) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    self.basis[idx].2 = (self.basis[idx].2 - theta).max(0.0);
                } else {
                    self.basis[idx].2 += theta;
                }
            }
            self.basis[leaving] = (er, ec, theta);
            self.pivots += 1;
            if theta <= CLAMP_TOL {
                self.stall += 1;
                if self.stall > self.s + self.t {
                    self.bland = true;
                }
            } else {
                self.stall = 0;
            }
        }
    }
}

/// Solve the transportation problem for simplex-weight marginals.
///
/// `supply` and `demand` must each sum to one within [`MARGINAL_TOL`];
/// anything farther off signals a caller bug and is rejected rather than
/// rescaled.
pub fn solve_transportation(
    supply: &[f64],
    demand: &[f64],
    cost: &[Vec<f64>],
) -> Result<(Coupling, f64)> {
    let s = supply.len();
    let t = demand.len();
    if s == 0 || t == 0 {
        return Err(Error::InfeasibleMarginals("empty marginals".into()));
    }
    if cost.len() != s || cost.iter().any(|row| row.len() != t) {
        return Err(Error::InfeasibleMarginals(format!(
            "cost matrix does not match {s}x{t} marginals"
        )));
    }
    let sum_s: f64 = supply.iter().sum();
    let sum_d: f64 = demand.iter().sum();
    if (sum_s - 1.0).abs() > MARGINAL_TOL {
        return Err(Error::InfeasibleMarginals(format!(
            "supply sums to {sum_s}"
        )));
    }
    if (sum_d - 1.0).abs() > MARGINAL_TOL {
        return Err(Error::InfeasibleMarginals(format!(
            "demand sums to {sum_d}"
        )));
    }
    let mut max_cost = 0.0f64;
    for row in cost {
        for &v in row {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InfeasibleMarginals(format!(
                    "cost {v} negative or non-finite"
                )));
            }
            max_cost = max_cost.max(v);
        }
    }
    if supply.iter().chain(demand).any(|&w| w < 0.0) {
        return Err(Error::InfeasibleMarginals("negative marginal".into()));
    }

    // Absorb the sub-tolerance residual so the fill exhausts both sides.
    let mut demand_adj = demand.to_vec();
    let last = t - 1;
    demand_adj[last] += sum_s - sum_d;

    let mut simplex = TransportSimplex::init(supply, &demand_adj, cost);
    simplex.solve(1e-10 * (1.0 + max_cost))?;

    let mut plan = vec![0.0; s * t];
    for &(r, c, f) in &simplex.basis {
        plan[r * t + c] += f;
    }
    let coupling = coupling_from_plan(plan, supply.to_vec(), demand.to_vec());
    coupling.validate(PLAN_TOL)?;
    let objective: f64 = (0..s)
        .map(|r| (0..t).map(|c| coupling.entry(r, c) * cost[r][c]).sum::<f64>())
        .sum();
    Ok((coupling, objective.max(0.0)))
}

/// Squared Mallows distance between two distributions under a ground
/// metric, together with the optimal coupling.
pub fn mallows_sq(
    a: &Distribution,
    b: &Distribution,
    metric: &GroundMetric,
) -> Result<(f64, Coupling)> {
    let cost: Vec<Vec<f64>> = a
        .supports
        .iter()
        .map(|p| b.supports.iter().map(|q| metric.cost(p, q)).collect())
        .collect();
    let (coupling, objective) = solve_transportation(&a.probs, &b.probs, &cost)?;
    Ok((objective, coupling))
}

/// Squared combined distance: sum of squared Mallows distances over
/// super-dimensions.
pub fn object_distance_sq(x: &DataObject, y: &DataObject, metrics: &[GroundMetric]) -> Result<f64> {
    if x.dists.len() != y.dists.len() {
        return Err(Error::SuperDimensionMismatch {
            left: x.dists.len(),
            right: y.dists.len(),
        });
    }
    if x.dists.len() != metrics.len() {
        return Err(Error::SuperDimensionMismatch {
            left: x.dists.len(),
            right: metrics.len(),
        });
    }
    let mut total = 0.0;
    for ((a, b), metric) in x.dists.iter().zip(&y.dists).zip(metrics) {
        total += mallows_sq(a, b, metric)?.0;
    }
    Ok(total)
}

/// Combined distance over super-dimensions: the root of the summed
/// squared Mallows distances.
pub fn object_distance(x: &DataObject, y: &DataObject, metrics: &[GroundMetric]) -> Result<f64> {
    Ok(object_distance_sq(x, y, metrics)?.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SupportPoint;

    fn dist1d(points: &[(f64, f64)]) -> Distribution {
        Distribution::new(
            points
                .iter()
                .map(|&(x, _)| SupportPoint::Numeric(vec![x]))
                .collect(),
            points.iter().map(|&(_, p)| p).collect(),
        )
    }

    #[test]
    fn unique_plan_1x1() {
        let (coupling, obj) = solve_transportation(&[1.0], &[1.0], &[vec![7.0]]).unwrap();
        assert!((coupling.entry(0, 0) - 1.0).abs() < 1e-12);
        assert!((obj - 7.0).abs() < 1e-12);
    }

    #[test]
    fn forced_coupling_2x1() {
        let (coupling, obj) =
            solve_transportation(&[0.5, 0.5], &[1.0], &[vec![1.0], vec![1.0]]).unwrap();
        assert!((coupling.entry(0, 0) - 0.5).abs() < 1e-12);
        assert!((coupling.entry(1, 0) - 0.5).abs() < 1e-12);
        assert!((obj - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_2x2() {
        // Enumerating the 2x2 transportation polytope gives optimum 1.0.
        let cost = vec![vec![1.0, 9.0], vec![4.0, 1.0]];
        let (coupling, obj) = solve_transportation(&[0.5, 0.5], &[0.5, 0.5], &cost).unwrap();
        assert!((obj - 1.0).abs() < 1e-9, "{obj}");
        coupling.validate(PLAN_TOL).unwrap();
    }

    #[test]
    fn rejects_infeasible_marginals() {
        let err = solve_transportation(&[0.5, 0.4], &[1.0], &[vec![1.0], vec![1.0]]).unwrap_err();
        assert!(matches!(err, Error::InfeasibleMarginals(_)));
    }

    #[test]
    fn mallows_identity_is_zero() {
        let a = dist1d(&[(0.0, 0.3), (2.0, 0.7)]);
        let (d2, _) = mallows_sq(&a, &a, &GroundMetric::SquaredEuclidean).unwrap();
        assert!(d2.abs() < 1e-12);
    }

    #[test]
    fn mallows_single_forced_match() {
        let a = dist1d(&[(0.0, 1.0)]);
        let b = dist1d(&[(3.0, 1.0)]);
        let (d2, _) = mallows_sq(&a, &b, &GroundMetric::SquaredEuclidean).unwrap();
        assert!((d2 - 9.0).abs() < 1e-12);
    }

    #[test]
    fn mallows_monotone_matching() {
        // Brute force over couplings: the monotone matching 0->1, 3->2 is
        // optimal with squared cost (0.5 * 1 + 0.5 * 1 = 1.0).
        let a = dist1d(&[(0.0, 0.5), (3.0, 0.5)]);
        let b = dist1d(&[(1.0, 0.5), (2.0, 0.5)]);
        let (d2, _) = mallows_sq(&a, &b, &GroundMetric::SquaredEuclidean).unwrap();
        assert!((d2 - 1.0).abs() < 1e-9, "{d2}");
    }

    #[test]
    fn object_distance_composes() {
        let metrics = vec![GroundMetric::SquaredEuclidean; 2];
        let x = DataObject::new("x", vec![dist1d(&[(0.0, 1.0)]), dist1d(&[(0.0, 1.0)])]);
        let y = DataObject::new("y", vec![dist1d(&[(3.0, 1.0)]), dist1d(&[(4.0, 1.0)])]);
        // Component squared distances 9 and 16 combine to 5.
        let d = object_distance(&x, &y, &metrics).unwrap();
        assert!((d - 5.0).abs() < 1e-9);
        assert!(object_distance(&x, &x, &metrics).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_super_dimension_equals_sqrt_mallows() {
        let metrics = vec![GroundMetric::SquaredEuclidean];
        let x = DataObject::single("x", dist1d(&[(0.0, 0.5), (1.0, 0.5)]));
        let y = DataObject::single("y", dist1d(&[(2.0, 1.0)]));
        let (d2, _) = mallows_sq(&x.dists[0], &y.dists[0], &metrics[0]).unwrap();
        let d = object_distance(&x, &y, &metrics).unwrap();
        assert!((d - d2.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn super_dimension_mismatch_is_error() {
        let metrics = vec![GroundMetric::SquaredEuclidean];
        let x = DataObject::single("x", dist1d(&[(0.0, 1.0)]));
        let y = DataObject::new("y", vec![dist1d(&[(0.0, 1.0)]), dist1d(&[(1.0, 1.0)])]);
        assert!(object_distance(&x, &y, &metrics).is_err());
    }
}
