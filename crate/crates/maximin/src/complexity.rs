//! Closed-form sample-complexity terms and the information-theoretic lower
//! bound.
//!
//! The algebraic calculators (`h_star`, `theorem4_term`) run in exact
//! rational arithmetic over the instance's exact means, so decimal instances
//! produce the pencil-and-paper constants without rounding. The lower bound
//! `T*` is a constrained max-min program over the probability simplex,
//! solved by multi-start derivative-free direct search with projection and
//! guarded by a dense grid oracle in the tests.

use num::rational::BigRational;
use num::traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{elimination_divergence, exploration_beta, kl_bernoulli, ExplorationRate};
use crate::model::{ArmId, GameInstance};

#[derive(Debug, Error)]
pub enum ComplexityError {
    #[error("this calculator requires a 2x2 instance")]
    NotTwoByTwo,
    #[error("best and second-best maximin values are tied")]
    TiedMaximin,
    #[error("zero denominator at arm ({action},{response}): tied means")]
    ZeroDenominator { action: usize, response: usize },
    #[error("subset carries zero weight")]
    ZeroSubsetWeight,
    #[error("the reduced problem requires mu4 > mu2 after index resolution")]
    ParticularCaseNotApplicable,
    #[error("defining inequality unsatisfiable below t = {cap}")]
    Unsatisfiable { cap: u64 },
    #[error("simplex optimization failed to find a positive objective")]
    OptimizationFailed,
}

/// A point on the probability simplex: nonnegative weights summing to one
/// (within 1e-12).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, ComplexityError> {
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(ComplexityError::ZeroSubsetWeight);
        }
        Ok(WeightVector(weights))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }
}

/// Everything the `complexity` CLI subcommand reports for one instance.
#[derive(Debug, Clone, Serialize)]
pub struct ComplexityReport {
    /// Sum of the per-arm constants `c_P`.
    pub h_star: f64,
    /// Per-arm constants, row-major.
    pub c_p: Vec<f64>,
    /// Smallest t with `4 H* beta(t, delta) < t`.
    pub t_bound: u64,
    /// Two-action bound; present only for 2x2 instances.
    pub theorem4_term: Option<f64>,
    /// Per-arm asymptotic racing constants, row-major.
    pub racing_terms: Vec<f64>,
}

/// Best and second-best actions by exact worst-case value; errors when the
/// top two are tied.
fn resolved_actions(inst: &GameInstance) -> Result<(usize, usize), ComplexityError> {
    let worst = inst_exact_worst(inst);
    let mut best = 0;
    for i in 1..worst.len() {
        if worst[i] > worst[best] {
            best = i;
        }
    }
    let mut second = usize::MAX;
    for i in (0..worst.len()).filter(|&i| i != best) {
        if second == usize::MAX || worst[i] > worst[second] {
            second = i;
        }
    }
    if worst[best] == worst[second] {
        return Err(ComplexityError::TiedMaximin);
    }
    Ok((best, second))
}

fn inst_exact_worst(inst: &GameInstance) -> Vec<BigRational> {
    (0..inst.num_actions())
        .map(|i| {
            (0..inst.num_responses(i))
                .map(|j| inst.exact_mean(ArmId::new(i, j)).clone())
                .min()
                .expect("rows are non-empty")
        })
        .collect()
}

/// Instance complexity `H* = sum_P c_P` with
/// `c_P = 1 / max[(worst_i - c)^2, (mu_ij - worst_i)^2]` where `c` is the
/// midpoint of the two best per-action worst values. Exact over the
/// instance's rational means; returns `(H*, per-arm c_P)` row-major.
pub fn h_star(inst: &GameInstance) -> Result<(f64, Vec<f64>), ComplexityError> {
    let (best, second) = resolved_actions(inst)?;
    let worst = inst_exact_worst(inst);
    let two = BigRational::from_integer(2.into());
    let center = (&worst[best] + &worst[second]) / &two;
    let mut c_p = Vec::with_capacity(inst.total_arms());
    let mut total = BigRational::zero();
    for i in 0..inst.num_actions() {
        let n1 = {
            let g = &worst[i] - &center;
            &g * &g
        };
        for j in 0..inst.num_responses(i) {
            let g = inst.exact_mean(ArmId::new(i, j)) - &worst[i];
            let n2 = &g * &g;
            let denom = n1.clone().max(n2);
            if denom.is_zero() {
                return Err(ComplexityError::ZeroDenominator {
                    action: i,
                    response: j,
                });
            }
            let term = denom.recip();
            c_p.push(term.to_f64().unwrap_or(f64::NAN));
            total += term;
        }
    }
    Ok((total.to_f64().unwrap_or(f64::NAN), c_p))
}

const T_BOUND_SEARCH_CAP: u64 = 1 << 40;

/// Smallest `t` with `4 H* beta(t, delta) < t`, found by a monotone search
/// seeded with the closed-form guess for the `log(C t^(1+alpha)/delta)` rate
/// and refined linearly; the defining inequality is re-verified at `t` and
/// `t - 1`.
pub fn t_bound(
    inst: &GameInstance,
    rate: ExplorationRate,
    delta: f64,
) -> Result<u64, ComplexityError> {
    let (h, _) = h_star(inst)?;
    let holds = |t: u64| 4.0 * h * exploration_beta(rate, t, delta) < t as f64;

    // Closed-form seed: c1 x >= log(c2 x^(1+alpha)) at
    // x = (1+alpha)/c1 (log a + 2 loglog a), a = (1+alpha) c2^(1/(1+alpha)) / c1.
    let mut t = match rate {
        ExplorationRate::Corollary1 { c, alpha } => {
            let c1 = 1.0 / (4.0 * h);
            let c2 = c / delta;
            let a = (1.0 + alpha) * c2.powf(1.0 / (1.0 + alpha)) / c1;
            if a > 4.85 {
                ((1.0 + alpha) / c1 * (a.ln() + 2.0 * a.ln().ln())).ceil() as u64
            } else {
                1
            }
        }
        _ => 1,
    };
    t = t.max(1);
    while !holds(t) {
        if t >= T_BOUND_SEARCH_CAP {
            return Err(ComplexityError::Unsatisfiable {
                cap: T_BOUND_SEARCH_CAP,
            });
        }
        t = (t * 2).min(T_BOUND_SEARCH_CAP);
    }
    while t > 1 && holds(t - 1) {
        t -= 1;
    }
    debug_assert!(holds(t) && (t == 1 || !holds(t - 1)));
    Ok(t)
}

/// The two-action sample-complexity constant
/// `8 [ 2/(mu11-mu21)^2 + 1/(mu12-mu21)^2 + 1/max((mu11-mu21)^2, (mu22-mu21)^2) ]`
/// with indices resolved to (best action, sorted responses). Exact rational
/// evaluation.
pub fn theorem4_term(inst: &GameInstance) -> Result<f64, ComplexityError> {
    if inst.num_actions() != 2 || inst.num_responses(0) != 2 || inst.num_responses(1) != 2 {
        return Err(ComplexityError::NotTwoByTwo);
    }
    let (best, other) = resolved_actions(inst)?;
    let row = |i: usize| {
        let a = inst.exact_mean(ArmId::new(i, 0)).clone();
        let b = inst.exact_mean(ArmId::new(i, 1)).clone();
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    };
    let (mu11, mu12) = row(best);
    let (mu21, mu22) = row(other);
    let sq = |x: &BigRational| x * x;
    let g11 = &mu11 - &mu21;
    let g12 = &mu12 - &mu21;
    let g22 = &mu22 - &mu21;
    if g11.is_zero() || g12.is_zero() {
        return Err(ComplexityError::ZeroDenominator {
            action: other,
            response: 0,
        });
    }
    let eight = BigRational::from_integer(8.into());
    let two = BigRational::from_integer(2.into());
    let term = eight
        * (two / sq(&g11) + sq(&g12).recip() + sq(&g11).max(sq(&g22)).recip());
    Ok(term.to_f64().unwrap_or(f64::NAN))
}

/// The elimination divergence evaluated on the (larger, smaller) ordering of
/// the pair, so it measures separation regardless of argument order.
fn separation(a: f64, b: f64) -> f64 {
    elimination_divergence(a.max(b), a.min(b))
}

/// Per-arm asymptotic racing rate constants: for the best action's worst
/// arm, `1 / max(eps^2/2, I(second, best))`; for every other arm `(i,j)`,
/// `1 / max(eps^2/2, I(worst_i, best), I(mu_ij, worst_i))`, with `I`
/// evaluated on the separated ordering. Row-major.
pub fn racing_terms(inst: &GameInstance, eps: f64) -> Result<Vec<f64>, ComplexityError> {
    assert!(eps >= 0.0);
    let (best, second) = resolved_actions(inst)?;
    let worst: Vec<f64> = crate::model::worst_values(inst);
    let eps_term = eps * eps / 2.0;
    // the best action's worst arm, ties to the lowest response index
    let mut anchor = 0;
    for j in 1..inst.num_responses(best) {
        if inst.mean(ArmId::new(best, j)) < inst.mean(ArmId::new(best, anchor)) {
            anchor = j;
        }
    }
    let mut terms = Vec::with_capacity(inst.total_arms());
    for i in 0..inst.num_actions() {
        for j in 0..inst.num_responses(i) {
            let denom = if i == best && j == anchor {
                eps_term.max(separation(worst[second], worst[best]))
            } else {
                eps_term
                    .max(separation(worst[i], worst[best]))
                    .max(separation(inst.mean(ArmId::new(i, j)), worst[i]))
            };
            if denom == 0.0 {
                return Err(ComplexityError::ZeroDenominator {
                    action: i,
                    response: j,
                });
            }
            terms.push(1.0 / denom);
        }
    }
    Ok(terms)
}

/// Weighted mean of `mu` over `subset` under weights `w`.
pub fn weighted_mean_w(
    mu: &[f64],
    w: &WeightVector,
    subset: &[usize],
) -> Result<f64, ComplexityError> {
    let ws = w.weights();
    let total: f64 = subset.iter().map(|&a| ws[a]).sum();
    if total <= 0.0 {
        return Err(ComplexityError::ZeroSubsetWeight);
    }
    Ok(subset.iter().map(|&a| ws[a] * mu[a]).sum::<f64>() / total)
}

/// Cost of moving arm `a+1` (a in {0,1}) below arm 3 in the alternative-
/// model projection: the piecewise form with branch test
/// `mu4 >= pooled(a,3)`. Returns 0 when `w_a + w_3 = 0` (the discriminating
/// arms are unsampled, so alternatives are free).
pub fn f_a(mu: &[f64; 4], w: &WeightVector, a: usize) -> f64 {
    assert!(a < 2, "a selects one of the two top arms");
    f_a_raw(mu, w.weights(), a)
}

fn f_a_raw(mu: &[f64; 4], w: &[f64], a: usize) -> f64 {
    let (wa, w3, w4) = (w[a], w[2], w[3]);
    let pair = wa + w3;
    if pair <= 0.0 {
        return 0.0;
    }
    let weighted = |weight: f64, x: f64, m: f64| {
        if weight > 0.0 {
            weight * kl_bernoulli(x, m)
        } else {
            0.0
        }
    };
    let m2 = (wa * mu[a] + w3 * mu[2]) / pair;
    if mu[3] >= m2 {
        weighted(wa, mu[a], m2) + weighted(w3, mu[2], m2)
    } else {
        let all = pair + w4;
        let m3 = (wa * mu[a] + w3 * mu[2] + w4 * mu[3]) / all;
        weighted(wa, mu[a], m3) + weighted(w3, mu[2], m3) + weighted(w4, mu[3], m3)
    }
}

/// `min(F_1, F_2)`: the cheapest alternative model in which the maximin
/// action flips, at sampling proportions `w`.
pub fn alt_projection_value(mu: &[f64; 4], w: &WeightVector) -> f64 {
    alt_value_raw(mu, w.weights())
}

fn alt_value_raw(mu: &[f64; 4], w: &[f64]) -> f64 {
    f_a_raw(mu, w, 0).min(f_a_raw(mu, w, 1))
}

/// Flattens a 2x2 instance into the canonical arm order
/// (best-row min, best-row max, other-row min, other-row max).
pub fn resolve_mu4(inst: &GameInstance) -> Result<[f64; 4], ComplexityError> {
    if inst.num_actions() != 2 || inst.num_responses(0) != 2 || inst.num_responses(1) != 2 {
        return Err(ComplexityError::NotTwoByTwo);
    }
    let (best, other) = resolved_actions(inst)?;
    let row = |i: usize| {
        let a = inst.mean(ArmId::new(i, 0));
        let b = inst.mean(ArmId::new(i, 1));
        (a.min(b), a.max(b))
    };
    let (mu1, mu2) = row(best);
    let (mu3, mu4) = row(other);
    Ok([mu1, mu2, mu3, mu4])
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        css += uk;
        let candidate = (css - 1.0) / (k + 1) as f64;
        if uk - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Multi-start Nelder-Mead maximization of `f` over the simplex of the
/// given dimension, evaluating through projection. Returns the best
/// projected point and value.
fn maximize_on_simplex(
    dim: usize,
    f: &dyn Fn(&[f64]) -> f64,
    starts: &[Vec<f64>],
) -> (f64, Vec<f64>) {
    let mut best_val = f64::NEG_INFINITY;
    let mut best_x = vec![1.0 / dim as f64; dim];
    for start in starts {
        let (v, x) = nelder_mead(dim, f, start);
        if v > best_val {
            best_val = v;
            best_x = x;
        }
    }
    // polish the winner with one more restart from its own location
    let (v, x) = nelder_mead(dim, f, &best_x);
    if v > best_val {
        best_val = v;
        best_x = x;
    }
    (best_val, best_x)
}

fn nelder_mead(dim: usize, f: &dyn Fn(&[f64]) -> f64, start: &[f64]) -> (f64, Vec<f64>) {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;
    const FTOL: f64 = 1e-12;
    const MAX_ITER: usize = 4000;

    let eval = |x: &[f64]| f(&project_simplex(x));
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(start.to_vec());
    for k in 0..dim {
        let mut v = start.to_vec();
        v[k] += 0.15;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();

    for _ in 0..MAX_ITER {
        // descending by value: index 0 is the best vertex
        let mut order: Vec<usize> = (0..simplex.len()).collect();
        order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let revalues: Vec<f64> = order.iter().map(|&i| values[i]).collect();
        simplex = reordered;
        values = revalues;

        if values[0] - values[dim] < FTOL {
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|v| v[k]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].clone();
        let shifted = |coef: f64| -> Vec<f64> {
            (0..dim)
                .map(|k| centroid[k] + coef * (centroid[k] - worst[k]))
                .collect()
        };

        let reflected = shifted(REFLECT);
        let fr = eval(&reflected);
        if fr > values[0] {
            let expanded = shifted(EXPAND);
            let fe = eval(&expanded);
            if fe > fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
        } else if fr > values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
        } else {
            let contracted = if fr > values[dim] {
                shifted(CONTRACT)
            } else {
                shifted(-CONTRACT)
            };
            let fc = eval(&contracted);
            if fc > values[dim].max(fr) {
                simplex[dim] = contracted;
                values[dim] = fc;
            } else {
                let anchor = simplex[0].clone();
                for v in simplex.iter_mut().skip(1) {
                    for k in 0..dim {
                        v[k] = anchor[k] + SHRINK * (v[k] - anchor[k]);
                    }
                }
                // recompute all but the best vertex
                for i in 1..=dim {
                    values[i] = eval(&simplex[i]);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..simplex.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap());
    let best = project_simplex(&simplex[order[0]]);
    (values[order[0]], best)
}

fn standard_starts(dim: usize, extra_random: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut starts = Vec::new();
    starts.push(vec![1.0 / dim as f64; dim]);
    for k in 0..dim {
        let low = 0.3 / (dim as f64 - 1.0);
        let mut v = vec![low; dim];
        v[k] = 0.7;
        starts.push(v);
    }
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    for _ in 0..extra_random {
        // Dirichlet(1): normalized exponentials
        let mut v: Vec<f64> = (0..dim)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        let s: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= s);
        starts.push(v);
    }
    starts
}

/// The lower-bound characteristic `T*` and its optimal sampling proportions:
/// maximizes `min(F_1, F_2)` over the 4-point simplex by multi-start direct
/// search (barycenter, vertex-leaning and random starts) and returns
/// `(1 / value, argmax)` in the canonical arm order of [`resolve_mu4`].
pub fn t_star(inst: &GameInstance) -> Result<(f64, WeightVector), ComplexityError> {
    let mu = resolve_mu4(inst)?;
    let objective = move |w: &[f64]| alt_value_raw(&mu, w);
    let starts = standard_starts(4, 19, 0x7A57A123);
    let (value, w) = maximize_on_simplex(4, &objective, &starts);
    if !(value > 0.0) {
        return Err(ComplexityError::OptimizationFailed);
    }
    Ok((1.0 / value, WeightVector(w)))
}

/// The reduced three-weight problem valid when `mu4 > mu2`: both branch
/// tests then always take the two-term form and the optimum puts no weight
/// on arm 4. Returns weights padded with `w4 = 0`.
pub fn t_star_particular(inst: &GameInstance) -> Result<(f64, WeightVector), ComplexityError> {
    let mu = resolve_mu4(inst)?;
    if !(mu[3] > mu[1]) {
        return Err(ComplexityError::ParticularCaseNotApplicable);
    }
    let objective = move |w3: &[f64]| {
        let w = [w3[0], w3[1], w3[2], 0.0];
        alt_value_raw(&mu, &w)
    };
    let starts = standard_starts(3, 20, 0x7A57A456);
    let (value, w3) = maximize_on_simplex(3, &objective, &starts);
    if !(value > 0.0) {
        return Err(ComplexityError::OptimizationFailed);
    }
    let w = WeightVector(vec![w3[0], w3[1], w3[2], 0.0]);
    Ok((1.0 / value, w))
}

/// Sample-complexity lower bound `T*(mu) d(delta, 1 - delta)` for 2x2
/// instances and `delta` in (0, 1/2).
pub fn lower_bound(inst: &GameInstance, delta: f64) -> Result<f64, ComplexityError> {
    assert!(
        delta > 0.0 && delta < 0.5,
        "the lower bound needs delta in (0, 1/2)"
    );
    let (t_star_value, _) = t_star(inst)?;
    Ok(t_star_value * kl_bernoulli(delta, 1.0 - delta))
}

/// Bundles every calculator for the CLI `complexity` subcommand.
pub fn complexity_report(
    inst: &GameInstance,
    rate: ExplorationRate,
    delta: f64,
    eps: f64,
) -> Result<ComplexityReport, ComplexityError> {
    let (h, c_p) = h_star(inst)?;
    let t = t_bound(inst, rate, delta)?;
    let th4 = match theorem4_term(inst) {
        Ok(v) => Some(v),
        Err(ComplexityError::NotTwoByTwo) => None,
        Err(e) => return Err(e),
    };
    let racing = racing_terms(inst, eps)?;
    Ok(ComplexityReport {
        h_star: h,
        c_p,
        t_bound: t,
        theorem4_term: th4,
        racing_terms: racing,
    })
}
