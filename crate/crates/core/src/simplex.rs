//! Dense two-phase primal simplex for equality-form linear programs:
//! minimize `c·x` subject to `A x = b`, `x >= 0`.
//!
//! Returns exact vertex solutions. Degenerate stalls switch pivoting to
//! Bland's smallest-index rule, which guarantees termination. Redundant
//! constraint rows (common in coupled transportation systems) are detected
//! at the end of phase one and dropped.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const ZERO_TOL: f64 = 1e-12;

/// A sparse constraint row: (column, coefficient) pairs plus a right-hand side.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

struct Tableau {
    /// Structural variable count.
    n: usize,
    /// Constraint count (including rows later marked dead).
    m: usize,
    /// Row-major `m x (n + m + 1)`: structural | artificial | rhs.
    tab: Vec<f64>,
    basis: Vec<usize>,
    live: Vec<bool>,
    /// Reduced costs of the current phase, updated on every pivot and
    /// recomputed periodically against drift.
    cost_row: Vec<f64>,
    pivots: usize,
    bland: bool,
    stall: usize,
}

impl Tableau {
    fn width(&self) -> usize {
        self.n + self.m + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.tab[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.n + self.m)
    }

    fn new(rows: &[SparseRow], rhs: &[f64], n: usize) -> Tableau {
        let m = rows.len();
        let width = n + m + 1;
        let mut tab = vec![0.0; m * width];
        for (i, row) in rows.iter().enumerate() {
            let flip = if rhs[i] < 0.0 { -1.0 } else { 1.0 };
            for &(j, v) in row {
                debug_assert!(j < n);
                tab[i * width + j] += flip * v;
            }
            tab[i * width + n + i] = 1.0;
            tab[i * width + n + m] = flip * rhs[i];
        }
        Tableau {
            n,
            m,
            tab,
            basis: (0..m).map(|i| n + i).collect(),
            live: vec![true; m],
            cost_row: vec![0.0; n + m],
            pivots: 0,
            bland: false,
            stall: 0,
        }
    }

    /// Recompute the reduced-cost row from scratch for the effective
    /// objective `costs` (length n + m).
    fn reprice(&mut self, costs: &[f64]) {
        let width = self.width();
        let limit = self.n + self.m;
        let mut red = costs.to_vec();
        for i in 0..self.m {
            if !self.live[i] {
                continue;
            }
            let cb = costs[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.tab[i * width..i * width + limit];
            for (r, &a) in red.iter_mut().zip(row) {
                *r -= cb * a;
            }
        }
        self.cost_row = red;
    }

    fn choose_entering(&self, limit: usize, tol: f64) -> Option<usize> {
        let red = &self.cost_row[..limit];
        if self.bland {
            return red.iter().position(|&r| r < -tol);
        }
        let mut best = None;
        let mut best_val = -tol;
        for (j, &r) in red.iter().enumerate() {
            if r < best_val {
                best_val = r;
                best = Some(j);
            }
        }
        best
    }

    /// Ratio test; ties broken by smallest basis variable index.
    fn choose_leaving(&self, entering: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            if !self.live[i] {
                continue;
            }
            let a = self.at(i, entering);
            if a > PIVOT_TOL {
                let ratio = self.rhs(i).max(0.0) / a;
                match best {
                    None => best = Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - ZERO_TOL
                            || (ratio < br + ZERO_TOL && self.basis[i] < self.basis[bi])
                        {
                            best = Some((i, ratio));
                        }
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.width();
        let p = self.at(row, col);
        let inv = 1.0 / p;
        for j in 0..width {
            self.tab[row * width + j] *= inv;
        }
        self.tab[row * width + col] = 1.0;
        for r in 0..self.m {
            if r == row || !self.live[r] {
                continue;
            }
            let factor = self.at(r, col);
            if factor == 0.0 {
                continue;
            }
            for j in 0..width {
                self.tab[r * width + j] -= factor * self.tab[row * width + j];
            }
            self.tab[r * width + col] = 0.0;
            // Keep rhs feasible under roundoff.
            let rhs = r * width + width - 1;
            if self.tab[rhs] < 0.0 && self.tab[rhs] > -PIVOT_TOL {
                self.tab[rhs] = 0.0;
            }
        }
        // The reduced-cost row eliminates the pivot column like any other.
        let factor = self.cost_row[col];
        if factor != 0.0 {
            let row_slice = &self.tab[row * width..row * width + self.n + self.m];
            for (c, &a) in self.cost_row.iter_mut().zip(row_slice) {
                *c -= factor * a;
            }
            self.cost_row[col] = 0.0;
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Run the simplex loop for the given effective cost vector.
    fn optimize(
        &mut self,
        costs: &[f64],
        allow_artificial: bool,
        max_pivots: usize,
    ) -> Result<()> {
        let scale = 1.0 + costs.iter().fold(0.0f64, |a, &c| a.max(c.abs()));
        let tol = 1e-9 * scale;
        let limit = if allow_artificial { self.n + self.m } else { self.n };
        self.reprice(costs);
        let mut since_reprice = 0usize;
        loop {
            if self.pivots > max_pivots {
                return Err(Error::LpFailure {
                    pivots: self.pivots,
                    reason: "pivot limit exceeded".into(),
                });
            }
            if since_reprice > 128 {
                self.reprice(costs);
                since_reprice = 0;
            }
            let Some(entering) = self.choose_entering(limit, tol) else {
                // Confirm optimality against drift before accepting.
                self.reprice(costs);
                since_reprice = 0;
                if self.choose_entering(limit, tol).is_none() {
                    return Ok(());
                }
                continue;
            };
            let Some(leaving) = self.choose_leaving(entering) else {
                return Err(Error::LpFailure {
                    pivots: self.pivots,
                    reason: "unbounded direction in bounded problem".into(),
                });
            };
            let step = self.rhs(leaving).max(0.0) / self.at(leaving, entering);
            if step <= ZERO_TOL {
                self.stall += 1;
                if self.stall > self.m + self.n {
                    self.bland = true;
                }
            } else {
                self.stall = 0;
            }
            self.pivot(leaving, entering);
            since_reprice += 1;
        }
    }
}

/// Solve `min c·x` subject to `rows · x = rhs`, `x >= 0`.
pub fn solve(c: &[f64], rows: &[SparseRow], rhs: &[f64]) -> Result<LpSolution> {
    let n = c.len();
    let m = rows.len();
    debug_assert_eq!(m, rhs.len());
    let mut t = Tableau::new(rows, rhs, n);
    let max_pivots = 200 * (n + m) + 1000;

    // Phase 1: drive artificials to zero.
    let mut phase1 = vec![0.0; n + m];
    for v in phase1[n..].iter_mut() {
        *v = 1.0;
    }
    t.optimize(&phase1, true, max_pivots)?;
    let b_scale = 1.0 + rhs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let infeas: f64 = (0..m)
        .filter(|&i| t.live[i] && t.basis[i] >= n)
        .map(|i| t.rhs(i).max(0.0))
        .sum();
    if infeas > 1e-7 * b_scale {
        return Err(Error::LpFailure {
            pivots: t.pivots,
            reason: format!("infeasible system (residual {infeas:.3e})"),
        });
    }
    // Pivot leftover zero-level artificials out, or drop redundant rows.
    for i in 0..m {
        if !t.live[i] || t.basis[i] < n {
            continue;
        }
        let mut pivot_col = None;
        for j in 0..n {
            if t.at(i, j).abs() > PIVOT_TOL {
                pivot_col = Some(j);
                break;
            }
        }
        match pivot_col {
            Some(j) => t.pivot(i, j),
            None => t.live[i] = false,
        }
    }

    // Phase 2: original objective over structural columns only.
    let mut phase2 = vec![0.0; n + m];
    phase2[..n].copy_from_slice(c);
    t.bland = false;
    t.stall = 0;
    t.optimize(&phase2, false, max_pivots)?;

    let mut x = vec![0.0; n];
    for i in 0..m {
        if t.live[i] && t.basis[i] < n {
            x[t.basis[i]] = t.rhs(i).max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(c, x)| c * x).sum();
    Ok(LpSolution {
        x,
        objective,
        pivots: t.pivots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_single_constraint() {
        // min -x1 - 2 x2  s.t.  x1 + x2 + s = 4
        let c = vec![-1.0, -2.0, 0.0];
        let rows = vec![vec![(0, 1.0), (1, 1.0), (2, 1.0)]];
        let sol = solve(&c, &rows, &[4.0]).unwrap();
        assert!((sol.objective + 8.0).abs() < 1e-9);
        assert!((sol.x[1] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn handles_redundant_transportation_rows() {
        // 2x2 transportation with all four (rank-3) marginal constraints.
        let c = vec![1.0, 9.0, 4.0, 1.0];
        let rows = vec![
            vec![(0, 1.0), (1, 1.0)],
            vec![(2, 1.0), (3, 1.0)],
            vec![(0, 1.0), (2, 1.0)],
            vec![(1, 1.0), (3, 1.0)],
        ];
        let rhs = vec![0.5, 0.5, 0.5, 0.5];
        let sol = solve(&c, &rows, &rhs).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9, "{}", sol.objective);
        assert!((sol.x[0] - 0.5).abs() < 1e-9);
        assert!((sol.x[3] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn reports_infeasible_system() {
        // x1 = 1 and x1 = 2 cannot both hold.
        let c = vec![1.0];
        let rows = vec![vec![(0, 1.0)], vec![(0, 1.0)]];
        let err = solve(&c, &rows, &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::LpFailure { .. }));
    }

    #[test]
    fn degenerate_vertices_terminate() {
        // Multiple constraints through the same vertex.
        let c = vec![-1.0, -1.0, 0.0, 0.0, 0.0];
        let rows = vec![
            vec![(0, 1.0), (2, 1.0)],
            vec![(1, 1.0), (3, 1.0)],
            vec![(0, 1.0), (1, 1.0), (4, 1.0)],
        ];
        let sol = solve(&c, &rows, &[1.0, 1.0, 1.0]).unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-9);
    }
}
