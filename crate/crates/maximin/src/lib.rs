//! Fixed-confidence maximin action identification in two-round zero-sum
//! stochastic games.
//!
//! The first player picks among K actions, the second answers with one of
//! K_i responses, and each (action, response) pair is a Bernoulli arm. The
//! learner samples pairs of its choosing and must identify, with confidence
//! 1 - delta, an action whose worst-case win probability is within epsilon
//! of the best such value.
//!
//! The crate provides:
//!
//! - [`model`]: game instances, arm statistics, seeded sampling, and
//!   ground-truth predicates;
//! - [`bounds`]: binary KL divergence, Hoeffding and Chernoff confidence
//!   intervals, exploration rates, and the pairwise GLRT statistic;
//! - [`strategies`]: the M-LUCB family (Hoeffding/KL intervals, interval or
//!   GLRT stopping), the racing algorithm, and a worst-arm KL-LUCB baseline;
//! - [`complexity`]: closed-form sample-complexity constants and the
//!   simplex-optimization lower bound `T*`;
//! - [`harness`]: a reproducible Monte Carlo experiment runner with CSV and
//!   JSON reports;
//! - [`cli`]: the `maximin` command-line interface.

pub mod bounds;
pub mod cli;
pub mod complexity;
pub mod harness;
pub mod model;
pub mod strategies;

pub use bounds::{
    compute_c_alpha, elimination_divergence, exploration_beta, glrt_statistic, hoeffding_interval,
    kl_bernoulli, kl_interval, weighted_mean_pair, BoundsError, ConfidenceInterval,
    ExplorationRate,
};
pub use complexity::{
    alt_projection_value, complexity_report, f_a, h_star, lower_bound, racing_terms, resolve_mu4,
    t_bound, t_star, t_star_particular, theorem4_term, weighted_mean_w, ComplexityError,
    ComplexityReport, WeightVector,
};
pub use harness::{
    emit, mix_seed, parse_report, run_experiment, AggregateReport, ExperimentConfig, HarnessError,
    OutputFormat, ReportDoc,
};
pub use model::{
    is_eps_optimal, load_instance, true_maximin, worst_values, ArmId, ArmStats, GameInstance,
    ModelError, RunResult, SamplingEnv, StoppedBy,
};
pub use strategies::{
    c_k, chernoff_stop, kl_lucb_baseline_step, mlucb_select, mlucb_stop, mlucb_two_action_select,
    racing_round, racing_terminate, run_strategy, Algorithm, IntervalKind, StrategyConfig,
    StrategyError, StrategyState,
};
