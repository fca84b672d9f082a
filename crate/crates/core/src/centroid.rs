//! Centroid update for clusters of discrete distributions: alternate a
//! joint LP over the centroid probabilities and all member couplings with
//! weighted-average support relocation, until the objective converges.
//!
//! The joint LP couples every member through the shared centroid row
//! marginals, so it cannot be split per member; the constrained variant
//! (`update_centroid_uniform`) pins the centroid probabilities uniform,
//! which makes the problem separate into one small transportation problem
//! per member.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::config::Config;
use crate::data::{Distribution, GroundMetric, SupportPoint};
use crate::error::Result;
use crate::simplex::{self, SparseRow};
use crate::transport::{self, Coupling};

/// Result of one joint weight/coupling solve with the supports fixed.
#[derive(Debug, Clone)]
pub struct WeightLp {
    pub probs: Vec<f64>,
    pub couplings: Vec<Coupling>,
    pub objective: f64,
}

/// Converged centroid for one cluster and one super-dimension.
#[derive(Debug, Clone)]
pub struct CentroidState {
    pub centroid: Distribution,
    pub couplings: Vec<Coupling>,
    /// Final objective value.
    pub epsilon: f64,
    pub iters: usize,
    /// Objective after every iteration; non-increasing.
    pub history: Vec<f64>,
}

/// Draw an initial centroid for a cluster: support count is the rounded
/// mean of the member support counts, supports are sampled from member
/// supports with probability proportional to `weight * prob`, and the
/// probabilities start uniform.
pub fn init_centroid(
    members: &[&Distribution],
    weights: &[f64],
    rng: &mut ChaCha8Rng,
) -> Distribution {
    debug_assert!(!members.is_empty());
    let mean_t =
        members.iter().map(|m| m.len() as f64).sum::<f64>() / members.len() as f64;
    let target = (mean_t.round() as usize).max(1);

    let symbolic = matches!(members[0].supports[0], SupportPoint::Symbol(_));
    let mut pool: Vec<(SupportPoint, f64)> = Vec::new();
    if symbolic {
        // Sample over distinct symbols so the centroid never carries
        // duplicate rows.
        let mut mass: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for (m, &w) in members.iter().zip(weights) {
            for (s, &p) in m.supports.iter().zip(&m.probs) {
                if let SupportPoint::Symbol(sym) = s {
                    *mass.entry(*sym).or_insert(0.0) += w * p;
                }
            }
        }
        pool = mass
            .into_iter()
            .map(|(sym, w)| (SupportPoint::Symbol(sym), w))
            .collect();
    } else {
        for (m, &w) in members.iter().zip(weights) {
            for (s, &p) in m.supports.iter().zip(&m.probs) {
                pool.push((s.clone(), w * p));
            }
        }
    }

    let draws = target.min(pool.len());
    let mut supports = Vec::with_capacity(draws);
    for _ in 0..draws {
        let total: f64 = pool.iter().map(|&(_, w)| w).sum();
        let mut pick = rng.random_range(0.0..1.0) * total;
        let mut chosen = pool.len() - 1;
        for (idx, &(_, w)) in pool.iter().enumerate() {
            pick -= w;
            if pick <= 0.0 {
                chosen = idx;
                break;
            }
        }
        supports.push(pool.swap_remove(chosen).0);
    }
    Distribution::uniform(supports)
}

/// Solve the joint LP of the centroid update with the supports fixed:
/// optimize the centroid probabilities and all member couplings at once,
/// minimizing the weighted sum of coupling costs. Every member's coupling
/// shares the centroid probabilities as its row marginals.
pub fn centroid_weight_lp(
    z_supports: &[SupportPoint],
    members: &[&Distribution],
    weights: &[f64],
    metric: &GroundMetric,
) -> Result<WeightLp> {
    let s = z_supports.len();
    let n = members.len();
    debug_assert!(s >= 1 && n >= 1 && n == weights.len());

    // Variables: p_0..p_{s-1}, then per member the coupling entries in
    // row-major order.
    let mut offsets = Vec::with_capacity(n);
    let mut var_count = s;
    for m in members {
        offsets.push(var_count);
        var_count += s * m.len();
    }

    let mut costs = vec![0.0; var_count];
    for ((m, &w), &off) in members.iter().zip(weights).zip(&offsets) {
        for (r, z) in z_supports.iter().enumerate() {
            for (a, v) in m.supports.iter().enumerate() {
                costs[off + r * m.len() + a] = w * metric.cost(z, v);
            }
        }
    }

    let mut rows: Vec<SparseRow> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    // Centroid probabilities live on the simplex.
    rows.push((0..s).map(|r| (r, 1.0)).collect());
    rhs.push(1.0);
    // Row marginals of every coupling equal the centroid probabilities.
    for (m, &off) in members.iter().zip(&offsets) {
        let t = m.len();
        for r in 0..s {
            let mut row: SparseRow = (0..t).map(|a| (off + r * t + a, 1.0)).collect();
            row.push((r, -1.0));
            rows.push(row);
            rhs.push(0.0);
        }
    }
    // Column marginals equal the member probabilities.
    for (m, &off) in members.iter().zip(&offsets) {
        let t = m.len();
        for a in 0..t {
            rows.push((0..s).map(|r| (off + r * t + a, 1.0)).collect());
            rhs.push(m.probs[a]);
        }
    }

    let sol = simplex::solve(&costs, &rows, &rhs)?;

    let mut probs: Vec<f64> = sol.x[..s].iter().map(|&p| p.max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    let mut couplings = Vec::with_capacity(n);
    for (m, &off) in members.iter().zip(&offsets) {
        let t = m.len();
        let plan = sol.x[off..off + s * t].to_vec();
        let coupling = transport::coupling_from_plan(plan, probs.clone(), m.probs.clone());
        coupling.validate(transport::PLAN_TOL)?;
        couplings.push(coupling);
    }
    Ok(WeightLp {
        probs,
        couplings,
        objective: sol.objective.max(0.0),
    })
}

/// Constrained counterpart of [`centroid_weight_lp`]: the centroid
/// probabilities stay uniform, so each member's coupling is an
/// independent transportation problem.
fn uniform_prob_step(
    z_supports: &[SupportPoint],
    members: &[&Distribution],
    weights: &[f64],
    metric: &GroundMetric,
) -> Result<WeightLp> {
    let s = z_supports.len();
    let uniform = vec![1.0 / s as f64; s];
    let mut couplings = Vec::with_capacity(members.len());
    let mut objective = 0.0;
    for (m, &w) in members.iter().zip(weights) {
        let cost: Vec<Vec<f64>> = z_supports
            .iter()
            .map(|z| m.supports.iter().map(|v| metric.cost(z, v)).collect())
            .collect();
        let (coupling, obj) = transport::solve_transportation(&uniform, &m.probs, &cost)?;
        objective += w * obj;
        couplings.push(coupling);
    }
    Ok(WeightLp {
        probs: uniform,
        couplings,
        objective,
    })
}

/// Relocate centroid supports to the coupling-weighted member averages.
/// Rows that received no mass keep their previous support; deleting them
/// would change the support count mid-run.
pub fn update_supports(
    z_supports: &[SupportPoint],
    couplings: &[Coupling],
    members: &[&Distribution],
    weights: &[f64],
) -> Vec<SupportPoint> {
    let s = z_supports.len();
    let dim = match &z_supports[0] {
        SupportPoint::Numeric(v) => v.len(),
        SupportPoint::Symbol(_) => panic!("symbolic supports cannot be relocated"),
    };
    let mut result = Vec::with_capacity(s);
    for (r, old) in z_supports.iter().enumerate() {
        let mut num = vec![0.0; dim];
        let mut den = 0.0;
        for ((coupling, m), &w) in couplings.iter().zip(members).zip(weights) {
            for (a, v) in m.supports.iter().enumerate() {
                let mass = w * coupling.entry(r, a);
                if mass > 0.0 {
                    let coords = v.coords().expect("numeric member support");
                    for (acc, &x) in num.iter_mut().zip(coords) {
                        *acc += mass * x;
                    }
                    den += mass;
                }
            }
        }
        if den > 1e-15 {
            result.push(SupportPoint::Numeric(
                num.into_iter().map(|x| x / den).collect(),
            ));
        } else {
            result.push(old.clone());
        }
    }
    result
}

/// Weighted objective of a fixed (supports, couplings) pair.
fn objective_at(
    z_supports: &[SupportPoint],
    couplings: &[Coupling],
    members: &[&Distribution],
    weights: &[f64],
    metric: &GroundMetric,
) -> f64 {
    let mut total = 0.0;
    for ((coupling, m), &w) in couplings.iter().zip(members).zip(weights) {
        for (r, z) in z_supports.iter().enumerate() {
            for (a, v) in m.supports.iter().enumerate() {
                let mass = coupling.entry(r, a);
                if mass > 0.0 {
                    total += w * mass * metric.cost(z, v);
                }
            }
        }
    }
    total
}

fn centroid_loop(
    members: &[&Distribution],
    weights: &[f64],
    metric: &GroundMetric,
    config: &Config,
    mut z: Distribution,
    uniform: bool,
) -> Result<CentroidState> {
    let fix = config.fix_supports || metric.is_symbolic();
    if uniform {
        let s = z.len();
        z.probs = vec![1.0 / s as f64; s];
    }
    let mut history = Vec::new();
    let mut couplings = Vec::new();
    let mut prev = f64::INFINITY;
    let mut iters = 0;
    while iters < config.max_iters_centroid {
        iters += 1;
        let step = if uniform {
            uniform_prob_step(&z.supports, members, weights, metric)?
        } else {
            centroid_weight_lp(&z.supports, members, weights, metric)?
        };
        if !uniform {
            z.probs = step.probs;
        }
        couplings = step.couplings;
        let eps = if fix {
            step.objective
        } else {
            z.supports = update_supports(&z.supports, &couplings, members, weights);
            objective_at(&z.supports, &couplings, members, weights, metric)
        };
        debug_assert!(
            !prev.is_finite() || eps <= prev + 1e-9,
            "objective increased: {prev} -> {eps}"
        );
        history.push(eps);
        let converged = prev.is_finite()
            && (prev - eps).abs() <= config.rel_tol * prev.max(1e-12);
        prev = eps;
        if converged || eps <= 1e-15 {
            break;
        }
    }
    Ok(CentroidState {
        centroid: z,
        couplings,
        epsilon: prev,
        iters,
        history,
    })
}

/// Full centroid update: alternate the joint LP with support relocation
/// until the objective converges (relative tolerance) or the iteration cap
/// is reached. With `fix_supports` set, or symbolic data, the support step
/// is skipped entirely.
pub fn update_centroid(
    members: &[&Distribution],
    weights: &[f64],
    metric: &GroundMetric,
    config: &Config,
    initial: Distribution,
) -> Result<CentroidState> {
    centroid_loop(members, weights, metric, config, initial, false)
}

/// Constrained centroid update: keep the centroid probabilities uniform so
/// the coupling step separates per member; supports are still relocated.
pub fn update_centroid_uniform(
    members: &[&Distribution],
    weights: &[f64],
    metric: &GroundMetric,
    config: &Config,
    initial: Distribution,
) -> Result<CentroidState> {
    centroid_loop(members, weights, metric, config, initial, true)
}
