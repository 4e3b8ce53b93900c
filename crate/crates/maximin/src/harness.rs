//! Reproducible Monte Carlo experimentation: batch replication across
//! instances and algorithms, order-independent aggregation, and CSV/JSON
//! report serialization.
//!
//! Replication `k` of cell (instance `i`, algorithm `a`) runs on the seed
//! `mix_seed(master, i, a, k)`, so any cell can be reproduced in isolation
//! and replications can execute concurrently in any order. Aggregation sums
//! integer draw counts, which makes the report a pure function of the
//! configuration regardless of thread count or scheduling.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{compute_c_alpha, ExplorationRate};
use crate::complexity;
use crate::model::{load_instance, GameInstance, ModelError, RunResult, SamplingEnv, StoppedBy};
use crate::strategies::{c_k, run_strategy, Algorithm, StrategyConfig, StrategyError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("report parse error: {0}")]
    Report(String),
}

/// splitmix64 finalizer; the building block of [`mix_seed`].
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-replication seed: chained splitmix64 over
/// (master, instance index, algorithm id, replication index).
pub fn mix_seed(master: u64, instance: u64, algorithm: u64, replication: u64) -> u64 {
    let mut s = splitmix64(master);
    s = splitmix64(s ^ instance);
    s = splitmix64(s ^ algorithm);
    s = splitmix64(s ^ replication);
    s
}

fn default_reps() -> u64 {
    10_000
}

fn default_rate() -> String {
    "practical".to_owned()
}

fn default_out() -> String {
    "csv".to_owned()
}

fn default_cap() -> u64 {
    10_000_000
}

/// Batch experiment description, deserializable from the documented JSON:
/// `{"instances": [...], "algorithms": [...], "delta": 0.1, "epsilon": 0.0,
/// "reps": 10000, "seed": 1, "rate": "practical", "out": "csv"}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instances: Vec<String>,
    pub algorithms: Vec<String>,
    pub delta: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_reps")]
    pub reps: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_rate")]
    pub rate: String,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default, rename = "C")]
    pub c_cap: Option<f64>,
    #[serde(default)]
    pub b: Option<f64>,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub refined_ck: bool,
    #[serde(default = "default_out")]
    pub out: String,
    #[serde(default = "default_cap")]
    pub cap: u64,
    #[serde(default)]
    pub parallelism: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self, HarnessError> {
        serde_json::from_slice(bytes).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn output_format(&self) -> Result<OutputFormat, HarnessError> {
        match self.out.as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(HarnessError::Config(format!(
                "unknown output format '{other}' (expected csv or json)"
            ))),
        }
    }
}

/// Optional parameters accompanying a rate kind.
#[derive(Debug, Clone, Copy, Default)]
pub struct RateParams {
    pub alpha: Option<f64>,
    pub c_cap: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub refined_ck: bool,
}

/// Resolves a rate name plus parameters against an instance. Instance-
/// dependent constants (K1, K, C_K and the certified C for the
/// `corollary1` rate) are derived when not supplied.
pub fn resolve_rate(
    kind: &str,
    params: &RateParams,
    inst: &GameInstance,
) -> Result<ExplorationRate, HarnessError> {
    match kind {
        "practical" => Ok(ExplorationRate::Practical),
        "corollary1" => {
            let alpha = params.alpha.unwrap_or(1.0);
            if alpha <= 0.0 {
                return Err(HarnessError::Config("alpha must be positive".into()));
            }
            let c = match params.c_cap {
                Some(c) => c,
                None => compute_c_alpha(alpha, inst.total_arms())
                    .map_err(|e| HarnessError::Config(e.to_string()))?,
            };
            Ok(ExplorationRate::Corollary1 { c, alpha })
        }
        "corollary2" => {
            let c = params.c.unwrap_or(3.0);
            let b = params.b.unwrap_or(2.0);
            if !(c > 2.0 && b > c / 2.0) {
                return Err(HarnessError::Config(
                    "corollary2 needs c > 2 and b > c/2".into(),
                ));
            }
            Ok(ExplorationRate::Corollary2 { b, c })
        }
        "chernoff-pac" => {
            let k1 = (0..inst.num_actions())
                .map(|i| inst.num_responses(i))
                .max()
                .unwrap_or(1) as u64;
            Ok(ExplorationRate::ChernoffPac {
                k1,
                k: inst.num_actions() as u64,
            })
        }
        "racing" => Ok(ExplorationRate::Racing {
            c_k: c_k(inst, params.refined_ck),
        }),
        other => Err(HarnessError::Config(format!(
            "unknown exploration rate '{other}'"
        ))),
    }
}

/// Aggregated outcome of one (instance, algorithm) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub instance: String,
    pub algorithm: String,
    pub arms: Vec<ArmAggregate>,
    pub mean_tau: f64,
    pub se_tau: f64,
    pub error_rate: f64,
    pub reps: u64,
    pub cap_hits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmAggregate {
    pub action: usize,
    pub response: usize,
    pub mean_draws: f64,
    pub se_draws: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub cells: Vec<CellReport>,
}

/// Integer accumulators, so the reduction is exact and order-independent.
#[derive(Clone)]
struct CellAccumulator {
    sum_draws: Vec<u64>,
    sum_sq_draws: Vec<u128>,
    sum_tau: u64,
    sum_sq_tau: u128,
    errors: u64,
    cap_hits: u64,
    reps: u64,
}

impl CellAccumulator {
    fn new(arms: usize) -> Self {
        CellAccumulator {
            sum_draws: vec![0; arms],
            sum_sq_draws: vec![0; arms],
            sum_tau: 0,
            sum_sq_tau: 0,
            errors: 0,
            cap_hits: 0,
            reps: 0,
        }
    }

    fn add(&mut self, r: &RunResult) {
        for (k, &d) in r.draws.iter().enumerate() {
            self.sum_draws[k] += d;
            self.sum_sq_draws[k] += u128::from(d) * u128::from(d);
        }
        self.sum_tau += r.tau;
        self.sum_sq_tau += u128::from(r.tau) * u128::from(r.tau);
        self.errors += u64::from(!r.correct);
        self.cap_hits += u64::from(r.stopped_by == StoppedBy::Cap);
        self.reps += 1;
    }
}

fn mean_se(sum: u128, sum_sq: u128, n: u64) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum as f64 / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = (sum_sq as f64 - (sum as f64) * (sum as f64) / nf) / (nf - 1.0);
    (mean, (var.max(0.0) / nf).sqrt())
}

fn thread_count(config: &ExperimentConfig) -> usize {
    if let Ok(v) = std::env::var("MAXIMIN_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n;
        }
    }
    config.parallelism.unwrap_or(0)
}

/// Runs the whole experiment grid. Replications execute concurrently, each
/// on its own mixed seed; the resulting report is bit-identical for a given
/// configuration whatever the parallelism.
pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateReport, HarnessError> {
    if config.reps == 0 {
        return Err(HarnessError::Config("reps must be at least 1".into()));
    }
    if !(config.delta > 0.0 && config.delta < 1.0) {
        return Err(HarnessError::Config("delta must be in (0,1)".into()));
    }
    let mut instances = Vec::new();
    for path in &config.instances {
        let bytes = fs::read(Path::new(path)).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
        instances.push((path.clone(), load_instance(&bytes)?));
    }
    let algorithms: Vec<Algorithm> = config
        .algorithms
        .iter()
        .map(|name| name.parse::<Algorithm>().map_err(HarnessError::Config))
        .collect::<Result<_, _>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(config))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;

    let mut cells = Vec::new();
    for (ii, (name, inst)) in instances.iter().enumerate() {
        for &algo in &algorithms {
            if algo == Algorithm::KlLucbBaseline
                && (inst.num_actions() != 2
                    || inst.num_responses(0) != 2
                    || inst.num_responses(1) != 2)
            {
                return Err(HarnessError::Config(format!(
                    "{} requires a 2x2 instance but '{name}' is not",
                    algo.as_str()
                )));
            }
            let mut strat = StrategyConfig::new(config.delta, config.epsilon);
            strat.rate = resolve_rate(
                &config.rate,
                &RateParams {
                    alpha: config.alpha,
                    c_cap: config.c_cap,
                    b: config.b,
                    c: config.c,
                    refined_ck: config.refined_ck,
                },
                inst,
            )?;
            strat.sample_cap = config.cap;

            let results: Result<Vec<RunResult>, StrategyError> = pool.install(|| {
                (0..config.reps)
                    .into_par_iter()
                    .map(|k| {
                        let seed = mix_seed(config.seed, ii as u64, algo.index(), k);
                        let mut env = SamplingEnv::new(seed);
                        run_strategy(inst, algo, &strat, &mut env)
                    })
                    .collect()
            });
            let results = results?;

            let mut acc = CellAccumulator::new(inst.total_arms());
            for r in &results {
                acc.add(r);
            }
            let arms = inst
                .arms()
                .enumerate()
                .map(|(k, arm)| {
                    let (mean, se) = mean_se(
                        u128::from(acc.sum_draws[k]),
                        acc.sum_sq_draws[k],
                        acc.reps,
                    );
                    ArmAggregate {
                        action: arm.action,
                        response: arm.response,
                        mean_draws: mean,
                        se_draws: se,
                    }
                })
                .collect();
            let (mean_tau, se_tau) = mean_se(u128::from(acc.sum_tau), acc.sum_sq_tau, acc.reps);
            cells.push(CellReport {
                instance: name.clone(),
                algorithm: algo.as_str().to_owned(),
                arms,
                mean_tau,
                se_tau,
                error_rate: acc.errors as f64 / acc.reps as f64,
                reps: acc.reps,
                cap_hits: acc.cap_hits,
            });
        }
    }
    Ok(AggregateReport { cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// The documented emit schema: per cell, one row per arm with columns
/// `instance,algorithm,arm_action,arm_response,mean_draws,se_draws`, then a
/// summary row `instance,algorithm,TOTAL,,mean_tau,error_rate`. The JSON
/// form mirrors the same content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub cells: Vec<DocCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocCell {
    pub instance: String,
    pub algorithm: String,
    pub arms: Vec<DocArm>,
    pub mean_tau: f64,
    pub error_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocArm {
    pub arm_action: usize,
    pub arm_response: usize,
    pub mean_draws: f64,
    pub se_draws: f64,
}

impl From<&AggregateReport> for ReportDoc {
    fn from(report: &AggregateReport) -> Self {
        ReportDoc {
            cells: report
                .cells
                .iter()
                .map(|cell| DocCell {
                    instance: cell.instance.clone(),
                    algorithm: cell.algorithm.clone(),
                    arms: cell
                        .arms
                        .iter()
                        .map(|a| DocArm {
                            arm_action: a.action,
                            arm_response: a.response,
                            mean_draws: a.mean_draws,
                            se_draws: a.se_draws,
                        })
                        .collect(),
                    mean_tau: cell.mean_tau,
                    error_rate: cell.error_rate,
                })
                .collect(),
        }
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_owned()
    }
}

fn csv_fields(line: &str) -> Result<Vec<String>, HarnessError> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars().peekable();
    let mut quoted = false;
    while let Some(ch) = chars.next() {
        match ch {
            '"' if quoted => {
                if chars.peek() == Some(&'"') {
                    chars.next();
                    cur.push('"');
                } else {
                    quoted = false;
                }
            }
            '"' if cur.is_empty() => quoted = true,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(ch),
        }
    }
    if quoted {
        return Err(HarnessError::Report("unterminated quote".into()));
    }
    fields.push(cur);
    Ok(fields)
}

const CSV_HEADER: &str = "instance,algorithm,arm_action,arm_response,mean_draws,se_draws";

/// Serializes a report in the documented schema.
pub fn emit(report: &AggregateReport, format: OutputFormat) -> Vec<u8> {
    emit_doc(&ReportDoc::from(report), format)
}

pub fn emit_doc(doc: &ReportDoc, format: OutputFormat) -> Vec<u8> {
    match format {
        OutputFormat::Json => {
            let mut out = serde_json::to_vec_pretty(doc).expect("report serialization");
            out.push(b'\n');
            out
        }
        OutputFormat::Csv => {
            let mut out = String::new();
            out.push_str(CSV_HEADER);
            out.push('\n');
            for cell in &doc.cells {
                for arm in &cell.arms {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        csv_escape(&cell.instance),
                        csv_escape(&cell.algorithm),
                        arm.arm_action,
                        arm.arm_response,
                        arm.mean_draws,
                        arm.se_draws
                    ));
                }
                out.push_str(&format!(
                    "{},{},TOTAL,,{},{}\n",
                    csv_escape(&cell.instance),
                    csv_escape(&cell.algorithm),
                    cell.mean_tau,
                    cell.error_rate
                ));
            }
            out.into_bytes()
        }
    }
}

/// Parses bytes produced by [`emit`] back into the documented schema.
pub fn parse_report(bytes: &[u8], format: OutputFormat) -> Result<ReportDoc, HarnessError> {
    match format {
        OutputFormat::Json => {
            serde_json::from_slice(bytes).map_err(|e| HarnessError::Report(e.to_string()))
        }
        OutputFormat::Csv => {
            let text =
                std::str::from_utf8(bytes).map_err(|e| HarnessError::Report(e.to_string()))?;
            let mut lines = text.lines();
            match lines.next() {
                Some(h) if h == CSV_HEADER => {}
                _ => return Err(HarnessError::Report("missing csv header".into())),
            }
            let mut cells: Vec<DocCell> = Vec::new();
            let mut current: Option<DocCell> = None;
            for line in lines {
                if line.is_empty() {
                    continue;
                }
                let fields = csv_fields(line)?;
                if fields.len() != 6 {
                    return Err(HarnessError::Report(format!(
                        "expected 6 fields, got {}",
                        fields.len()
                    )));
                }
                let parse_f64 = |s: &str| {
                    s.parse::<f64>()
                        .map_err(|e| HarnessError::Report(format!("bad number '{s}': {e}")))
                };
                if current.is_none() {
                    current = Some(DocCell {
                        instance: fields[0].clone(),
                        algorithm: fields[1].clone(),
                        arms: Vec::new(),
                        mean_tau: 0.0,
                        error_rate: 0.0,
                    });
                }
                let cell = current.as_mut().expect("just initialized");
                if cell.instance != fields[0] || cell.algorithm != fields[1] {
                    return Err(HarnessError::Report(
                        "cell rows interleaved or summary row missing".into(),
                    ));
                }
                if fields[2] == "TOTAL" {
                    cell.mean_tau = parse_f64(&fields[4])?;
                    cell.error_rate = parse_f64(&fields[5])?;
                    cells.push(current.take().expect("current cell"));
                } else {
                    let parse_usize = |s: &str| {
                        s.parse::<usize>()
                            .map_err(|e| HarnessError::Report(format!("bad index '{s}': {e}")))
                    };
                    cell.arms.push(DocArm {
                        arm_action: parse_usize(&fields[2])?,
                        arm_response: parse_usize(&fields[3])?,
                        mean_draws: parse_f64(&fields[4])?,
                        se_draws: parse_f64(&fields[5])?,
                    });
                }
            }
            if current.is_some() {
                return Err(HarnessError::Report("trailing cell without summary".into()));
            }
            Ok(ReportDoc { cells })
        }
    }
}

/// Lower-bound summary for the `lowerbound` CLI subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub t_star: f64,
    pub w_star: Vec<f64>,
    pub bound: f64,
}

pub fn lower_bound_report(
    inst: &GameInstance,
    delta: f64,
) -> Result<LowerBoundReport, complexity::ComplexityError> {
    let (t_star, w_star) = complexity::t_star(inst)?;
    let bound = complexity::lower_bound(inst, delta)?;
    Ok(LowerBoundReport {
        t_star,
        w_star: w_star.weights().to_vec(),
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn manifest_instance(name: &str) -> String {
        format!("{}/instances/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    fn write_temp_instance(tag: &str, body: &str) -> String {
        let path = std::env::temp_dir().join(format!(
            "maximin_harness_{tag}_{}.json",
            std::process::id()
        ));
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path.to_string_lossy().into_owned()
    }

    fn quick_config(instances: Vec<String>, algorithms: Vec<&str>, reps: u64) -> ExperimentConfig {
        ExperimentConfig {
            instances,
            algorithms: algorithms.into_iter().map(str::to_owned).collect(),
            delta: 0.1,
            epsilon: 0.0,
            reps,
            seed: 1,
            rate: "practical".into(),
            alpha: None,
            c_cap: None,
            b: None,
            c: None,
            refined_ck: false,
            out: "csv".into(),
            cap: 10_000_000,
            parallelism: None,
        }
    }

    #[test]
    fn config_parses_documented_example() {
        let json = br#"{"instances": ["a.json"], "algorithms": ["m-chernoff"],
            "delta": 0.1, "epsilon": 0.0, "reps": 10000, "seed": 1,
            "rate": "practical", "out": "csv"}"#;
        let cfg = ExperimentConfig::from_json(json).unwrap();
        assert_eq!(cfg.reps, 10_000);
        assert_eq!(cfg.cap, 10_000_000);
        assert_eq!(cfg.output_format().unwrap(), OutputFormat::Csv);
        assert!(ExperimentConfig::from_json(br#"{"instances": []}"#).is_err());
    }

    #[test]
    fn mix_seed_is_sensitive_in_every_argument() {
        let base = mix_seed(1, 0, 0, 0);
        assert_eq!(base, mix_seed(1, 0, 0, 0));
        assert_ne!(base, mix_seed(2, 0, 0, 0));
        assert_ne!(base, mix_seed(1, 1, 0, 0));
        assert_ne!(base, mix_seed(1, 0, 1, 0));
        assert_ne!(base, mix_seed(1, 0, 0, 1));
    }

    #[test]
    fn single_rep_equals_direct_run() {
        let path = write_temp_instance("single", r#"{"means":[[1.0,1.0],[0.0,0.0]]}"#);
        let cfg = quick_config(vec![path.clone()], vec!["m-chernoff"], 1);
        let report = run_experiment(&cfg).unwrap();
        let cell = &report.cells[0];

        let inst = load_instance(&fs::read(&path).unwrap()).unwrap();
        let mut strat = StrategyConfig::new(0.1, 0.0);
        strat.rate = ExplorationRate::Practical;
        let mut env = SamplingEnv::new(mix_seed(1, 0, Algorithm::MChernoff.index(), 0));
        let single = run_strategy(&inst, Algorithm::MChernoff, &strat, &mut env).unwrap();

        assert_eq!(cell.mean_tau, single.tau as f64);
        assert_eq!(cell.reps, 1);
        for (agg, d) in cell.arms.iter().zip(&single.draws) {
            assert_eq!(agg.mean_draws, *d as f64);
            assert_eq!(agg.se_draws, 0.0);
        }
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn identical_configs_give_identical_reports() {
        let path = write_temp_instance("det", r#"{"means":[[1.0,1.0],[0.0,0.0]]}"#);
        let cfg = quick_config(vec![path.clone()], vec!["m-kl-lucb", "m-racing"], 50);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(emit(&a, OutputFormat::Csv), emit(&b, OutputFormat::Csv));
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn parallelism_does_not_change_the_report() {
        let path = write_temp_instance("par", r#"{"means":[[1.0,1.0],[0.0,0.0]]}"#);
        let mut cfg = quick_config(vec![path.clone()], vec!["m-lucb"], 64);
        cfg.parallelism = Some(1);
        let seq = run_experiment(&cfg).unwrap();
        cfg.parallelism = Some(4);
        let par = run_experiment(&cfg).unwrap();
        assert_eq!(seq, par);
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn baseline_on_non_2x2_is_a_config_error() {
        let cfg = quick_config(
            vec![manifest_instance("mu_3x3.json")],
            vec!["kl-lucb"],
            5,
        );
        assert!(matches!(
            run_experiment(&cfg),
            Err(HarnessError::Config(_))
        ));
    }

    #[test]
    fn csv_schema_counts() {
        let path = write_temp_instance("csv", r#"{"means":[[1.0,1.0],[0.0,0.0]]}"#);
        let cfg = quick_config(vec![path.clone()], vec!["m-chernoff"], 3);
        let report = run_experiment(&cfg).unwrap();
        let bytes = emit(&report, OutputFormat::Csv);
        let text = String::from_utf8(bytes).unwrap();
        // header + 4 arm rows + 1 summary row
        assert_eq!(text.trim_end().lines().count(), 6);
        assert!(text.starts_with(CSV_HEADER));
        assert!(text.contains(",TOTAL,,"));
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn three_by_three_report_has_nine_arm_rows() {
        let cfg = quick_config(
            vec![manifest_instance("mu_3x3.json")],
            vec!["m-racing"],
            2,
        );
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.cells[0].arms.len(), 9);
        let doc = ReportDoc::from(&report);
        assert_eq!(doc.cells[0].arms.len(), 9);
    }

    #[test]
    fn emit_round_trips_both_formats() {
        let path = write_temp_instance("rt", r#"{"means":[[1.0,1.0],[0.0,0.0]]}"#);
        let cfg = quick_config(vec![path.clone()], vec!["m-chernoff", "m-racing"], 10);
        let report = run_experiment(&cfg).unwrap();
        for format in [OutputFormat::Csv, OutputFormat::Json] {
            let bytes = emit(&report, format);
            let doc = parse_report(&bytes, format).unwrap();
            let again = emit_doc(&doc, format);
            assert_eq!(bytes, again, "{format:?} round trip not byte-identical");
        }
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn csv_escaping_round_trips() {
        let doc = ReportDoc {
            cells: vec![DocCell {
                instance: "odd,\"name\".json".into(),
                algorithm: "m-lucb".into(),
                arms: vec![DocArm {
                    arm_action: 0,
                    arm_response: 0,
                    mean_draws: 1.5,
                    se_draws: 0.25,
                }],
                mean_tau: 1.5,
                error_rate: 0.0,
            }],
        };
        let bytes = emit_doc(&doc, OutputFormat::Csv);
        let parsed = parse_report(&bytes, OutputFormat::Csv).unwrap();
        assert_eq!(parsed, doc);
    }

    #[test]
    fn resolve_rate_variants() {
        let inst = load_instance(br#"{"means":[[0.4,0.5],[0.3,0.35]]}"#).unwrap();
        let p = RateParams::default();
        assert_eq!(
            resolve_rate("practical", &p, &inst).unwrap(),
            ExplorationRate::Practical
        );
        assert_eq!(
            resolve_rate("chernoff-pac", &p, &inst).unwrap(),
            ExplorationRate::ChernoffPac { k1: 2, k: 2 }
        );
        assert_eq!(
            resolve_rate("racing", &p, &inst).unwrap(),
            ExplorationRate::Racing { c_k: 16.0 }
        );
        let refined = RateParams {
            refined_ck: true,
            ..RateParams::default()
        };
        assert_eq!(
            resolve_rate("racing", &refined, &inst).unwrap(),
            ExplorationRate::Racing { c_k: 4.0 }
        );
        let explicit = RateParams {
            alpha: Some(1.0),
            c_cap: Some(90.0),
            ..RateParams::default()
        };
        assert_eq!(
            resolve_rate("corollary1", &explicit, &inst).unwrap(),
            ExplorationRate::Corollary1 { c: 90.0, alpha: 1.0 }
        );
        assert!(resolve_rate("corollary2", &p, &inst).is_ok());
        assert!(resolve_rate("ucb", &p, &inst).is_err());
    }
}
