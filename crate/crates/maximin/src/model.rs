//! Game instances, per-arm statistics, the seeded Bernoulli sampling
//! environment, and ground-truth predicates.
//!
//! A game instance is a ragged matrix of Bernoulli means `mu[i][j]`: the
//! first player picks a row `i` (K choices), the second player answers with
//! a column `j` (K_i choices for row i), and pulling the pair yields a win
//! with probability `mu[i][j]`. No ordering of the entries is assumed.
//!
//! Instances keep two copies of every mean: the `f64` used for sampling and
//! an exact rational used by the ground-truth predicates and the closed-form
//! complexity calculators. When an instance is loaded from JSON the rational
//! is the exact decimal written in the file, so e.g. a gap of `0.4 - 0.3`
//! compares to `eps = 0.1` without floating-point surprises.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One (action, response) pair, identifying a single Bernoulli arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArmId {
    pub action: usize,
    pub response: usize,
}

impl ArmId {
    pub fn new(action: usize, response: usize) -> Self {
        ArmId { action, response }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("instance parse error: {0}")]
    Parse(String),
    #[error("mean {value} at ({action},{response}) is outside [0,1]")]
    MeanOutOfRange {
        action: usize,
        response: usize,
        value: f64,
    },
    #[error("action {action} has no responses")]
    EmptyRow { action: usize },
    #[error("instance needs at least 2 actions, found {found}")]
    TooFewActions { found: usize },
    #[error("arm ({action},{response}) is not valid for this instance")]
    InvalidArm { action: usize, response: usize },
}

/// The two-round game: a ragged matrix of Bernoulli means in [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct GameInstance {
    means: Vec<Vec<f64>>,
    exact: Vec<Vec<BigRational>>,
}

#[derive(Deserialize)]
struct InstanceFile {
    means: Vec<Vec<serde_json::Number>>,
}

impl GameInstance {
    /// Builds an instance from plain floats. The exact means are the binary
    /// rationals the floats denote.
    pub fn new(means: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let exact = means
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&m| BigRational::from_float(m).unwrap_or_else(BigRational::zero))
                    .collect()
            })
            .collect();
        Self::build(means, exact)
    }

    fn build(means: Vec<Vec<f64>>, exact: Vec<Vec<BigRational>>) -> Result<Self, ModelError> {
        if means.len() < 2 {
            return Err(ModelError::TooFewActions { found: means.len() });
        }
        for (i, row) in means.iter().enumerate() {
            if row.is_empty() {
                return Err(ModelError::EmptyRow { action: i });
            }
            for (j, &m) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&m) || m.is_nan() {
                    return Err(ModelError::MeanOutOfRange {
                        action: i,
                        response: j,
                        value: m,
                    });
                }
            }
        }
        Ok(GameInstance { means, exact })
    }

    /// Number of first-player actions K.
    pub fn num_actions(&self) -> usize {
        self.means.len()
    }

    /// Number of responses K_i available against action `i`.
    pub fn num_responses(&self, action: usize) -> usize {
        self.means[action].len()
    }

    /// Total arm count: the sum of all K_i.
    pub fn total_arms(&self) -> usize {
        self.means.iter().map(Vec::len).sum()
    }

    pub fn mean(&self, arm: ArmId) -> f64 {
        self.means[arm.action][arm.response]
    }

    pub(crate) fn exact_mean(&self, arm: ArmId) -> &BigRational {
        &self.exact[arm.action][arm.response]
    }

    pub fn validate_arm(&self, arm: ArmId) -> Result<(), ModelError> {
        if arm.action < self.num_actions() && arm.response < self.num_responses(arm.action) {
            Ok(())
        } else {
            Err(ModelError::InvalidArm {
                action: arm.action,
                response: arm.response,
            })
        }
    }

    /// All arms in row-major order.
    pub fn arms(&self) -> impl Iterator<Item = ArmId> + '_ {
        self.means.iter().enumerate().flat_map(|(i, row)| {
            (0..row.len()).map(move |j| ArmId::new(i, j))
        })
    }

    /// Flat row-major index of an arm, matching the order of [`arms`](Self::arms).
    pub fn arm_index(&self, arm: ArmId) -> usize {
        self.means[..arm.action].iter().map(Vec::len).sum::<usize>() + arm.response
    }

    /// Worst-case (minimum over responses) exact mean of each action.
    pub(crate) fn exact_worst_values(&self) -> Vec<BigRational> {
        self.exact
            .iter()
            .map(|row| row.iter().min().expect("rows are non-empty").clone())
            .collect()
    }
}

/// Parses the documented instance format `{"means": [[...], [...]]}`.
///
/// Mean entries written as decimal literals are kept as exact rationals in
/// addition to their `f64` values.
pub fn load_instance(bytes: &[u8]) -> Result<GameInstance, ModelError> {
    let file: InstanceFile =
        serde_json::from_slice(bytes).map_err(|e| ModelError::Parse(e.to_string()))?;
    let mut means = Vec::with_capacity(file.means.len());
    let mut exact = Vec::with_capacity(file.means.len());
    for row in &file.means {
        let mut frow = Vec::with_capacity(row.len());
        let mut erow = Vec::with_capacity(row.len());
        for num in row {
            let f = num
                .as_f64()
                .ok_or_else(|| ModelError::Parse(format!("non-finite mean {num}")))?;
            let r = decimal_to_rational(&num.to_string())
                .or_else(|| BigRational::from_float(f))
                .ok_or_else(|| ModelError::Parse(format!("unparseable mean {num}")))?;
            frow.push(f);
            erow.push(r);
        }
        means.push(frow);
        exact.push(erow);
    }
    GameInstance::build(means, exact)
}

/// Exact rational denoted by a decimal literal such as `0.35` or `1e-3`.
fn decimal_to_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i64>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    let digits: String = format!("{int_part}{frac_part}");
    if digits.is_empty() || digits == "-" || digits == "+" {
        return None;
    }
    let numer: BigInt = digits.parse().ok()?;
    let scale = frac_part.len() as i64 - exp;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(numer);
    if scale > 0 {
        r /= BigRational::from_integer(ten.pow(scale as u32));
    } else if scale < 0 {
        r *= BigRational::from_integer(ten.pow((-scale) as u32));
    }
    Some(r)
}

/// The maximin action and its value, `argmax_i min_j mu[i][j]`.
///
/// Ties break to the lowest action index. Comparisons use the exact means,
/// so decimal instances behave like pencil-and-paper arithmetic.
pub fn true_maximin(inst: &GameInstance) -> (usize, f64) {
    let worst = inst.exact_worst_values();
    let mut best = 0;
    for i in 1..worst.len() {
        if worst[i] > worst[best] {
            best = i;
        }
    }
    (best, worst[best].to_f64().unwrap_or(f64::NAN))
}

/// Per-action worst-case values `min_j mu[i][j]`.
pub fn worst_values(inst: &GameInstance) -> Vec<f64> {
    inst.exact_worst_values()
        .iter()
        .map(|r| r.to_f64().unwrap_or(f64::NAN))
        .collect()
}

/// Whether action `i` is eps-optimal: the maximin value minus action `i`'s
/// worst-case value is at most `eps` (evaluated in exact arithmetic).
pub fn is_eps_optimal(inst: &GameInstance, i: usize, eps: f64) -> bool {
    assert!(i < inst.num_actions(), "action index out of range");
    assert!(eps >= 0.0, "eps must be nonnegative");
    let worst = inst.exact_worst_values();
    let best = worst.iter().max().expect("at least two actions").clone();
    let gap = best - &worst[i];
    let eps = BigRational::from_float(eps).unwrap_or_else(BigRational::zero);
    gap <= eps
}

/// Per-arm pull count and sum of 0/1 observations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ArmStats {
    count: u64,
    sum: u64,
}

impl ArmStats {
    pub fn new() -> Self {
        ArmStats::default()
    }

    /// Directly sets count and sum; handy for constructing test states.
    pub fn with_counts(count: u64, sum: u64) -> Self {
        assert!(sum <= count, "sum of 0/1 observations cannot exceed count");
        ArmStats { count, sum }
    }

    pub fn record(&mut self, observation: u8) {
        debug_assert!(observation <= 1);
        self.count += 1;
        self.sum += u64::from(observation);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn sum(&self) -> u64 {
        self.sum
    }

    /// Empirical mean. Requires at least one observation.
    pub fn mean(&self) -> f64 {
        assert!(self.count > 0, "mean of an undrawn arm");
        self.sum as f64 / self.count as f64
    }
}

/// Seeded Bernoulli sampling environment confined to a single run.
///
/// Identical seeds and identical request sequences produce bit-identical
/// observation streams (the generator is a counter-mode stream cipher).
#[derive(Debug, Clone)]
pub struct SamplingEnv {
    seed: u64,
    rng: ChaCha8Rng,
    total_samples: u64,
}

impl SamplingEnv {
    pub fn new(seed: u64) -> Self {
        SamplingEnv {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            total_samples: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn total_samples(&self) -> u64 {
        self.total_samples
    }

    /// Draws one observation from the arm's Bernoulli distribution: 1 with
    /// probability `mu`, else 0.
    pub fn sample(&mut self, inst: &GameInstance, arm: ArmId) -> Result<u8, ModelError> {
        inst.validate_arm(arm)?;
        self.total_samples += 1;
        let u: f64 = self.rng.random();
        Ok(u8::from(u < inst.mean(arm)))
    }
}

/// Why a run stopped: the stopping rule fired, or a cap was hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StoppedBy {
    Confidence,
    Cap,
}

/// Outcome of one full run of a strategy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunResult {
    /// Total number of samples at stopping.
    pub tau: u64,
    /// Per-arm draw counts in row-major order; they sum to `tau`.
    pub draws: Vec<u64>,
    /// Recommended action index.
    pub recommended: usize,
    pub stopped_by: StoppedBy,
    /// Whether the recommendation is eps-optimal under the true means.
    pub correct: bool,
}
