//! Shared test oracles, independent of the library's solver paths:
//! `brute_force_transport` enumerates every basic solution of the
//! transportation polytope (spanning-tree bases) and takes the best
//! feasible one, and `BigM` is a self-contained dense Big-M tableau
//! simplex, written separately from the library's two-phase solver, used
//! as the generic-LP oracle for the joint centroid program.

#![allow(dead_code, clippy::needless_range_loop, clippy::manual_memcpy)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use d2cluster::data::{DataObject, Distribution, SupportPoint};

/// Solve a square linear system by Gaussian elimination with partial
/// pivoting. Returns None if near-singular.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum transportation cost by brute-force enumeration of all
/// spanning-tree bases (cell subsets of size s + t - 1).
pub fn brute_force_transport(supply: &[f64], demand: &[f64], cost: &[Vec<f64>]) -> f64 {
    let s = supply.len();
    let t = demand.len();
    let cells: Vec<(usize, usize)> = (0..s)
        .flat_map(|r| (0..t).map(move |c| (r, c)))
        .collect();
    let basis_size = s + t - 1;
    let mut best = f64::INFINITY;
    let mut choice: Vec<usize> = (0..basis_size).collect();
    loop {
        // Build the marginal system restricted to the chosen cells, with
        // the final demand equation dropped (it is implied).
        let rows = s + t - 1;
        let mut a = vec![vec![0.0; basis_size]; rows];
        let mut b = vec![0.0; rows];
        for (k, &ci) in choice.iter().enumerate() {
            let (r, c) = cells[ci];
            a[r][k] += 1.0;
            if c < t - 1 {
                a[s + c][k] += 1.0;
            }
        }
        for r in 0..s {
            b[r] = supply[r];
        }
        for c in 0..t - 1 {
            b[s + c] = demand[c];
        }
        if let Some(flows) = solve_linear(a, b) {
            if flows.iter().all(|&f| f >= -1e-9) {
                let obj: f64 = choice
                    .iter()
                    .zip(&flows)
                    .map(|(&ci, &f)| {
                        let (r, c) = cells[ci];
                        f.max(0.0) * cost[r][c]
                    })
                    .sum();
                best = best.min(obj);
            }
        }
        // Next combination in lexicographic order.
        let mut i = basis_size;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if choice[i] != i + cells.len() - basis_size {
                choice[i] += 1;
                for j in i + 1..basis_size {
                    choice[j] = choice[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Dense Big-M tableau simplex for `min c.x, A x = b, x >= 0`.
/// Deliberately a different method (single phase, Dantzig entering rule on
/// the maintained objective row) from the library solver.
pub struct BigM;

impl BigM {
    pub fn solve(raw_c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<(Vec<f64>, f64)> {
        let m = a.len();
        let n = raw_c.len();
        // Normalize costs so the Big-M constant dominates uniformly.
        let c_scale = 1.0 + raw_c.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
        let c: Vec<f64> = raw_c.iter().map(|&x| x / c_scale).collect();
        let big = 1e6;
        let width = n + m + 1;
        // Tableau rows plus maintained objective row.
        let mut tab = vec![vec![0.0; width]; m + 1];
        for i in 0..m {
            let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                tab[i][j] = flip * a[i][j];
            }
            tab[i][n + i] = 1.0;
            tab[i][width - 1] = flip * b[i];
        }
        let mut basis: Vec<usize> = (n..n + m).collect();
        // Objective row: c_j - sum(big * row_i) for artificial basis.
        for j in 0..n {
            tab[m][j] = c[j];
        }
        for j in n..n + m {
            tab[m][j] = big;
        }
        for i in 0..m {
            for j in 0..width {
                tab[m][j] -= big * tab[i][j];
            }
        }
        for _ in 0..50_000 {
            // Dantzig: most negative objective-row entry.
            let mut enter = None;
            let mut best = -1e-7;
            for j in 0..n + m {
                if tab[m][j] < best {
                    best = tab[m][j];
                    enter = Some(j);
                }
            }
            let Some(enter) = enter else {
                let mut x = vec![0.0; n];
                for i in 0..m {
                    if basis[i] < n {
                        x[basis[i]] = tab[i][width - 1];
                    } else if tab[i][width - 1] > 1e-6 {
                        return None; // artificial stuck positive: infeasible
                    }
                }
                let obj = raw_c.iter().zip(&x).map(|(c, x)| c * x).sum();
                return Some((x, obj));
            };
            let mut leave = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..m {
                if tab[i][enter] > 1e-9 {
                    let ratio = tab[i][width - 1] / tab[i][enter];
                    if ratio < best_ratio - 1e-12
                        || (ratio < best_ratio + 1e-12
                            && leave.is_some_and(|l: usize| basis[i] < basis[l]))
                    {
                        best_ratio = ratio;
                        leave = Some(i);
                    }
                }
            }
            let leave = leave?;
            let piv = tab[leave][enter];
            for j in 0..width {
                tab[leave][j] /= piv;
            }
            for r in 0..m + 1 {
                if r != leave {
                    let f = tab[r][enter];
                    if f != 0.0 {
                        for j in 0..width {
                            tab[r][j] -= f * tab[leave][j];
                        }
                    }
                }
            }
            basis[leave] = enter;
        }
        None
    }
}

/// Random simplex vector of the given length.
pub fn random_simplex(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    v
}

/// Random distribution with numeric supports in `[-range, range]^dim`.
pub fn random_distribution(
    rng: &mut ChaCha8Rng,
    max_supports: usize,
    dim: usize,
    range: f64,
) -> Distribution {
    let t = rng.random_range(1..=max_supports);
    let supports = (0..t)
        .map(|_| {
            SupportPoint::Numeric((0..dim).map(|_| rng.random_range(-range..range)).collect())
        })
        .collect();
    let probs = random_simplex(rng, t);
    Distribution::new(supports, probs)
}

/// Random single-super-dimension object.
pub fn random_object(
    rng: &mut ChaCha8Rng,
    id: usize,
    max_supports: usize,
    dim: usize,
    range: f64,
) -> DataObject {
    DataObject::single(format!("o{id}"), random_distribution(rng, max_supports, dim, range))
}
