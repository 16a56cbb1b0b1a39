//! Configured experiments: trial runner, reports and sinks.

mod config;
mod selftest;

pub use config::{ClassSpec, DistributionSpec, ExperimentConfig, Num, Pipeline};
pub use selftest::{selftest, Check};

use std::collections::HashMap;
use std::hash::Hash;
use std::io::Write;
use std::time::Instant;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::brute::exact_transductive_audit;
use crate::classes::Enumerable;
use crate::data::{ratio_to_f64, BinaryLabel, Example, FiniteDistribution, Label, MulticlassLabel, Rational, RealLabel};
use crate::error::{Error, OracleKind, Result};
use crate::oig::{lazy_discount, WalkParams};
use crate::oracle::{self, ConceptClass, QueryLedger};
use crate::pipelines::{
    train_agnostic_partial, train_multiclass_agnostic, train_multiclass_realizable, train_realizable_partial,
    train_reg_agnostic, train_reg_realizable, PipelineParams, ThresholdGrid,
};
use crate::rng::RandomStream;
use crate::weak::{loo_distributional_error, transductive_error, WeakParams, WeakRealizable};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub train_err: f64,
    pub test_err: f64,
    pub oracle_calls: u64,
    pub query_cost: u64,
    pub wall_ms: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
    /// Record wall-clock time; otherwise `wall_ms` is 0 so output is reproducible byte for byte.
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

pub const CSV_HEADER: &str = "trial,train_err,test_err,oracle_calls,query_cost,wall_ms,seed";

pub fn write_reports<W: Write>(reports: &[TrialReport], format: Format, mut out: W) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for r in reports {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.trial,
                    sig17(r.train_err),
                    sig17(r.test_err),
                    r.oracle_calls,
                    r.query_cost,
                    r.wall_ms,
                    r.seed
                )?;
            }
        }
        Format::Jsonl => {
            for r in reports {
                serde_json::to_writer(&mut out, r)?;
                writeln!(out)?;
            }
        }
    }
    out.flush()
}

/// Fixed-point decimal with 17 significant digits.
pub fn sig17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let digits = (16 - x.abs().log10().floor() as i32).clamp(0, 340) as usize;
    format!("{x:.digits$}")
}

fn required(pipeline: Pipeline) -> &'static [OracleKind] {
    match pipeline {
        Pipeline::RealizablePartial | Pipeline::MulticlassRealizable | Pipeline::WeakTransductive => {
            &[OracleKind::Consistency]
        }
        Pipeline::AgnosticPartial | Pipeline::MulticlassAgnostic => &[OracleKind::Consistency, OracleKind::WeakErm],
        Pipeline::RegRealizable => &[OracleKind::RangeConsistency],
        Pipeline::RegAgnostic => &[OracleKind::WeakErm],
        Pipeline::Audit => &[],
    }
}

fn check_capabilities<X, Y, C: ConceptClass<X, Y> + ?Sized>(class: &C, pipeline: Pipeline) -> Result<()> {
    let caps = class.capabilities();
    match required(pipeline).iter().find(|k| !caps.supports(**k)) {
        Some(&oracle) => Err(Error::Capability { class: class.name(), oracle }),
        None => Ok(()),
    }
}

fn pipeline_params(cfg: &ExperimentConfig) -> PipelineParams {
    let mut p = PipelineParams::new(cfg.m, cfg.c1, cfg.delta);
    p.eta = cfg.eta;
    p.max_rounds = cfg.max_rounds;
    p.trials = cfg.rollouts;
    p
}

fn weak_params(cfg: &ExperimentConfig) -> Result<WeakParams> {
    let mut p = WeakParams::defaults(cfg.m, cfg.c1)?.with_lambda(cfg.lambda)?;
    if let Some(trials) = cfg.rollouts {
        p.walk = WalkParams::with_horizon(p.walk.gamma, p.walk.horizon, trials)?;
    }
    Ok(p)
}

/// Runs every trial; rows come back in trial order whatever the thread count.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<TrialReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| dispatch(cfg, opts))
}

fn dispatch(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<TrialReport>> {
    let d = &cfg.distribution;
    match cfg.pipeline {
        Pipeline::RealizablePartial | Pipeline::AgnosticPartial | Pipeline::WeakTransductive | Pipeline::Audit => {
            match &cfg.class {
                ClassSpec::FiniteTable { .. } => {
                    let class = cfg.class.finite_table()?;
                    let points = index_points(d, class.domain_size())?;
                    let dist = binary_distribution(d, points, Some(&class))?;
                    run_trials(cfg, opts, |t| binary_trial(cfg, &class, Some(&class), &dist, t, opts))
                }
                ClassSpec::MarginThreshold { .. } => {
                    let class = cfg.class.margin_threshold()?;
                    let points = d.points.iter().map(Num::rational).collect::<Result<Vec<_>>>()?;
                    let dist = binary_distribution(d, points, Some(&class))?;
                    run_trials(cfg, opts, |t| binary_trial(cfg, &class, Some(&class), &dist, t, opts))
                }
                ClassSpec::Hprime { .. } => {
                    let class = cfg.class.hprime()?;
                    if cfg.pipeline == Pipeline::Audit {
                        return Err(Error::Config("audit needs an enumerable class".into()));
                    }
                    let points = d
                        .points
                        .iter()
                        .map(|p| u64::try_from(p.integer()?).map_err(|_| Error::Config("negative point".into())))
                        .collect::<Result<Vec<_>>>()?;
                    let dist = binary_distribution::<u64, NotEnumerable>(d, points, None)?;
                    run_trials(cfg, opts, |t| binary_trial::<u64, _, NotEnumerable>(cfg, &class, None, &dist, t, opts))
                }
                _ => Err(Error::Config("binary pipelines need a finite_table, margin_threshold or hprime class".into())),
            }
        }
        Pipeline::MulticlassRealizable | Pipeline::MulticlassAgnostic => {
            let class = cfg.class.finite_multiclass()?;
            let classes = class.table()[0][0].classes();
            let points = index_points(d, class.domain_size())?;
            let dist = multiclass_distribution(d, points, &class, classes)?;
            run_trials(cfg, opts, |t| multiclass_trial(cfg, &class, &dist, t, opts))
        }
        Pipeline::RegRealizable | Pipeline::RegAgnostic => {
            let class = cfg.class.finite_real()?;
            let points = index_points(d, class.domain_size())?;
            let dist = real_distribution(d, points, &class)?;
            run_trials(cfg, opts, |t| regression_trial(cfg, &class, &dist, t, opts))
        }
    }
}

struct NotEnumerable;

impl<X> Enumerable<X, BinaryLabel> for NotEnumerable {
    fn num_hypotheses(&self) -> usize {
        0
    }
    fn evaluate(&self, _: usize, _: &X) -> BinaryLabel {
        BinaryLabel::Star
    }
}

fn run_trials<F>(cfg: &ExperimentConfig, _opts: &RunOptions, trial: F) -> Result<Vec<TrialReport>>
where
    F: Fn(usize) -> Result<TrialReport> + Sync + Send,
{
    (0..cfg.trials).into_par_iter().map(trial).collect()
}

fn index_points(d: &DistributionSpec, domain: usize) -> Result<Vec<usize>> {
    d.points
        .iter()
        .map(|p| {
            let i = p.integer()?;
            if i < 0 || i as usize >= domain {
                return Err(Error::Config(format!("point {i} outside the table domain 0..{domain}")));
            }
            Ok(i as usize)
        })
        .collect()
}

fn weights(d: &DistributionSpec) -> Result<Vec<Rational>> {
    match &d.weights {
        Some(w) => w.iter().map(Num::rational).collect(),
        None => Ok(vec![Rational::one(); d.points.len()]),
    }
}

fn noise(d: &DistributionSpec) -> Result<Rational> {
    d.noise.as_ref().map_or(Ok(Rational::zero()), Num::rational)
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Contract(msg) => Error::Config(msg),
        other => other,
    }
}

fn binary_distribution<X, E>(
    d: &DistributionSpec,
    points: Vec<X>,
    class: Option<&E>,
) -> Result<FiniteDistribution<X, BinaryLabel>>
where
    X: Clone,
    E: Enumerable<X, BinaryLabel>,
{
    let labels: Vec<BinaryLabel> = match (&d.labels, d.target, class) {
        (Some(labels), _, _) => labels
            .iter()
            .map(|l| match l.integer()? {
                0 => Ok(BinaryLabel::Zero),
                1 => Ok(BinaryLabel::One),
                other => Err(Error::Config(format!("binary label {other}"))),
            })
            .collect::<Result<_>>()?,
        (None, Some(h), Some(class)) => {
            if h >= class.num_hypotheses() {
                return Err(Error::Config(format!("target {h} outside the class")));
            }
            let labels: Vec<BinaryLabel> = points.iter().map(|x| class.evaluate(h, x)).collect();
            if labels.contains(&BinaryLabel::Star) {
                return Err(Error::Config("target hypothesis is undefined on a support point".into()));
            }
            labels
        }
        _ => return Err(Error::Config("this class needs explicit labels".into())),
    };
    let dist = FiniteDistribution::new(points.into_iter().zip(labels).collect(), weights(d)?).map_err(config_err)?;
    dist.with_label_noise(noise(d)?).map_err(config_err)
}

fn multiclass_distribution(
    d: &DistributionSpec,
    points: Vec<usize>,
    class: &crate::classes::FiniteTableClass<MulticlassLabel>,
    classes: u32,
) -> Result<FiniteDistribution<usize, MulticlassLabel>> {
    let labels: Vec<MulticlassLabel> = match (&d.labels, d.target) {
        (Some(labels), _) => labels
            .iter()
            .map(|l| {
                let v = u32::try_from(l.integer()?).map_err(|_| Error::Config("bad multiclass label".into()))?;
                MulticlassLabel::new(v, classes).map_err(config_err)
            })
            .collect::<Result<_>>()?,
        (None, Some(h)) if h < class.num_hypotheses() => points.iter().map(|x| class.evaluate(h, x)).collect(),
        _ => return Err(Error::Config("target outside the class".into())),
    };
    let rho = noise(d)?;
    let mut support = Vec::new();
    let mut w = Vec::new();
    for ((x, y), weight) in points.into_iter().zip(labels).zip(weights(d)?) {
        support.push((x, y));
        w.push(weight * (Rational::one() - rho));
        if !rho.is_zero() {
            for other in (1..=classes).filter(|&v| v != y.value()) {
                support.push((x, MulticlassLabel::new(other, classes)?));
                w.push(weight * rho / i64::from(classes - 1));
            }
        }
    }
    FiniteDistribution::new(support, w).map_err(config_err)
}

fn real_distribution(
    d: &DistributionSpec,
    points: Vec<usize>,
    class: &crate::classes::FiniteTableClass<RealLabel>,
) -> Result<FiniteDistribution<usize, RealLabel>> {
    if d.noise.is_some() {
        return Err(Error::Config("label noise is only defined for binary and multiclass labels".into()));
    }
    let labels: Vec<RealLabel> = match (&d.labels, d.target) {
        (Some(labels), _) => labels
            .iter()
            .map(|l| RealLabel::new(l.rational()?).map_err(config_err))
            .collect::<Result<_>>()?,
        (None, Some(h)) if h < class.num_hypotheses() => points.iter().map(|x| class.evaluate(h, x)).collect(),
        _ => return Err(Error::Config("target outside the class".into())),
    };
    FiniteDistribution::new(points.into_iter().zip(labels).collect(), weights(d)?).map_err(config_err)
}

/// Mean loss on the sample and exact expected loss under the distribution,
/// evaluating each distinct point once.
fn errors<X, L, F>(sample: &[Example<X, L>], dist: &FiniteDistribution<X, L>, mut predict: F) -> Result<(f64, f64)>
where
    X: Clone + Eq + Hash,
    L: Label,
    F: FnMut(&X) -> Result<L>,
{
    let mut cache: HashMap<X, L> = HashMap::new();
    let mut eval = |x: &X| -> Result<L> {
        if let Some(y) = cache.get(x) {
            return Ok(y.clone());
        }
        let y = predict(x)?;
        cache.insert(x.clone(), y.clone());
        Ok(y)
    };
    let mut train = Rational::zero();
    for (x, y) in sample {
        train += y.loss(&eval(x)?);
    }
    let mut test = Rational::zero();
    for ((x, y), w) in dist.support().iter().zip(dist.weights()) {
        if !w.is_zero() {
            test += *w * y.loss(&eval(x)?);
        }
    }
    Ok((ratio_to_f64(train / sample.len().max(1) as i64), ratio_to_f64(test)))
}

fn report(cfg: &ExperimentConfig, trial: usize, errs: (f64, f64), ledger: &QueryLedger, start: Instant, opts: &RunOptions) -> TrialReport {
    TrialReport {
        trial,
        train_err: errs.0,
        test_err: errs.1,
        oracle_calls: ledger.calls(),
        query_cost: ledger.cost(),
        wall_ms: if opts.timing { start.elapsed().as_millis() as u64 } else { 0 },
        seed: cfg.seed,
    }
}

fn trial_stream(cfg: &ExperimentConfig, trial: usize) -> RandomStream {
    RandomStream::new(cfg.seed).child(trial as u64)
}

fn binary_trial<X, C, E>(
    cfg: &ExperimentConfig,
    class: &C,
    enumerable: Option<&E>,
    dist: &FiniteDistribution<X, BinaryLabel>,
    trial: usize,
    opts: &RunOptions,
) -> Result<TrialReport>
where
    X: Clone + Eq + Hash,
    C: ConceptClass<X, BinaryLabel> + ?Sized,
    E: Enumerable<X, BinaryLabel> + ?Sized,
{
    check_capabilities(class, cfg.pipeline)?;
    let stream = trial_stream(cfg, trial);
    let ledger = QueryLedger::new();
    let start = Instant::now();
    let params = pipeline_params(cfg);
    let errs = match cfg.pipeline {
        Pipeline::RealizablePartial => {
            let s = dist.sample_n(cfg.n, &mut stream.child(0));
            let model = train_realizable_partial(&s, oracle::consistency(class, &ledger)?, &params, &stream.child(1))?;
            errors(&s, dist, |x| model.predict(x))?
        }
        Pipeline::AgnosticPartial => {
            let s = dist.sample_n(cfg.n, &mut stream.child(0));
            let erm = oracle::weak_erm(class, &ledger)?;
            let model = train_agnostic_partial(&s, &erm, oracle::consistency(class, &ledger)?, &params, &stream.child(1))?;
            errors(&s, dist, |x| model.predict(x))?
        }
        Pipeline::WeakTransductive => {
            let s = dist.sample_n(cfg.m, &mut stream.child(0));
            let learner = WeakRealizable::new(oracle::consistency(class, &ledger)?, weak_params(cfg)?);
            let transductive = transductive_error(&learner, &s, cfg.reps, &stream.child(1))?;
            let loo = loo_distributional_error(&learner, dist, cfg.m, cfg.reps, &stream.child(2))?;
            (transductive, loo)
        }
        Pipeline::Audit => {
            let enumerable = enumerable.ok_or_else(|| Error::Config("audit needs an enumerable class".into()))?;
            let s = dist.sample_n(cfg.m, &mut stream.child(0));
            let gamma = lazy_discount(weak_params(cfg)?.walk.gamma);
            let audit = exact_transductive_audit(enumerable, &s, gamma, cfg.lambda)?;
            (audit.loo_error, audit.bound / cfg.m as f64)
        }
        _ => unreachable!("dispatched by label type"),
    };
    Ok(report(cfg, trial, errs, &ledger, start, opts))
}

fn multiclass_trial(
    cfg: &ExperimentConfig,
    class: &crate::classes::FiniteTableClass<MulticlassLabel>,
    dist: &FiniteDistribution<usize, MulticlassLabel>,
    trial: usize,
    opts: &RunOptions,
) -> Result<TrialReport> {
    check_capabilities(class, cfg.pipeline)?;
    let stream = trial_stream(cfg, trial);
    let ledger = QueryLedger::new();
    let start = Instant::now();
    let params = pipeline_params(cfg);
    let s = dist.sample_n(cfg.n, &mut stream.child(0));
    let con = oracle::consistency(class, &ledger)?;
    let model = if cfg.pipeline == Pipeline::MulticlassAgnostic {
        train_multiclass_agnostic(&s, &oracle::weak_erm(class, &ledger)?, con, &params, &stream.child(1))?
    } else {
        train_multiclass_realizable(&s, con, &params, &stream.child(1))?
    };
    let errs = errors(&s, dist, |x| model.predict(x))?;
    Ok(report(cfg, trial, errs, &ledger, start, opts))
}

fn regression_trial(
    cfg: &ExperimentConfig,
    class: &crate::classes::FiniteTableClass<RealLabel>,
    dist: &FiniteDistribution<usize, RealLabel>,
    trial: usize,
    opts: &RunOptions,
) -> Result<TrialReport> {
    check_capabilities(class, cfg.pipeline)?;
    let stream = trial_stream(cfg, trial);
    let ledger = QueryLedger::new();
    let start = Instant::now();
    let params = pipeline_params(cfg);
    let grid = ThresholdGrid::new(cfg.grid.expect("validated")).map_err(config_err)?;
    let s = dist.sample_n(cfg.n, &mut stream.child(0));
    let clamp = |v: Rational| RealLabel::new(v.max(Rational::zero()).min(Rational::one())).expect("clamped");
    let errs = if cfg.pipeline == Pipeline::RegAgnostic {
        let model = train_reg_agnostic(&s, oracle::weak_erm(class, &ledger)?, grid, &params, &stream.child(1))?;
        errors(&s, dist, |x| Ok(clamp(model.predict(x)?)))?
    } else {
        let beta = match &cfg.beta {
            Some(b) => b.rational()?,
            None => grid.gamma(),
        };
        if beta.is_negative() {
            return Err(Error::Config("beta must be nonnegative".into()));
        }
        let model = train_reg_realizable(&s, oracle::range(class, &ledger)?, grid, beta, &params, &stream.child(1))?;
        errors(&s, dist, |x| Ok(clamp(model.predict(x)?)))?
    };
    Ok(report(cfg, trial, errs, &ledger, start, opts))
}

/// Exact orientation audit of one drawn sample of size `m`.
pub fn audit(cfg: &ExperimentConfig) -> Result<crate::brute::TransductiveAudit> {
    let d = &cfg.distribution;
    let stream = trial_stream(cfg, 0);
    let gamma = lazy_discount(weak_params(cfg)?.walk.gamma);
    match &cfg.class {
        ClassSpec::FiniteTable { .. } => {
            let class = cfg.class.finite_table()?;
            let dist = binary_distribution(d, index_points(d, class.domain_size())?, Some(&class))?;
            exact_transductive_audit(&class, &dist.sample_n(cfg.m, &mut stream.child(0)), gamma, cfg.lambda)
        }
        ClassSpec::MarginThreshold { .. } => {
            let class = cfg.class.margin_threshold()?;
            let points = d.points.iter().map(Num::rational).collect::<Result<Vec<_>>>()?;
            let dist = binary_distribution(d, points, Some(&class))?;
            exact_transductive_audit(&class, &dist.sample_n(cfg.m, &mut stream.child(0)), gamma, cfg.lambda)
        }
        _ => Err(Error::Config("audit needs a finite_table or margin_threshold class".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn margin_config(pipeline: &str, trials: usize) -> ExperimentConfig {
        ExperimentConfig::from_toml(&format!(
            r#"
pipeline = "{pipeline}"
seed = 3
trials = {trials}
n = 16
m = 8
rollouts = 300

[class]
kind = "margin_threshold"
grid = [0, "1/10", 11]
margin = "1/20"

[distribution]
points = ["1/10", "1/5", "3/10", "2/5", "3/5", "7/10", "4/5", "9/10"]
target = 5
"#
        ))
        .unwrap()
    }

    #[test]
    fn seventeen_digits() {
        assert_eq!(sig17(0.0), "0");
        assert_eq!(sig17(0.1), "0.10000000000000001");
        assert_eq!(sig17(1.0), "1.0000000000000000");
        assert_eq!(sig17(0.25), "0.25000000000000000");
    }

    #[test]
    fn zero_trials_gives_header_only() {
        let mut cfg = margin_config("realizable_partial", 1);
        cfg.trials = 0;
        let reports = run_experiment(&cfg, &RunOptions::default()).unwrap();
        assert!(reports.is_empty());
        let mut buf = Vec::new();
        write_reports(&reports, Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn singleton_class_has_zero_held_out_error() {
        let cfg = ExperimentConfig::from_toml(
            r#"
pipeline = "realizable_partial"
trials = 3
n = 10
m = 4
[class]
kind = "finite_table"
table = ["0110"]
[distribution]
points = [0, 1, 2, 3]
target = 0
"#,
        )
        .unwrap();
        for r in run_experiment(&cfg, &RunOptions::default()).unwrap() {
            assert_eq!((r.train_err, r.test_err), (0.0, 0.0));
        }
    }

    #[test]
    fn csv_shape() {
        let reports = run_experiment(&margin_config("realizable_partial", 2), &RunOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_reports(&reports, Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,"));
        assert!(lines[2].ends_with(",0,3"));
    }

    #[test]
    fn capability_mismatch_is_reported() {
        let cfg = ExperimentConfig::from_toml(
            r#"
pipeline = "agnostic_partial"
n = 4
m = 4
[class]
kind = "hprime"
bound = 50
[distribution]
points = [2, 3, 6, 7]
labels = [1, 1, 1, 0]
"#,
        )
        .unwrap();
        let err = run_experiment(&cfg, &RunOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Capability { oracle: OracleKind::WeakErm, .. }));
    }

    #[test]
    fn audit_pipeline_reports_slack() {
        let reports = run_experiment(&margin_config("audit", 1), &RunOptions::default()).unwrap();
        assert!(reports[0].train_err <= reports[0].test_err + 1e-12);
        let a = audit(&margin_config("audit", 1)).unwrap();
        assert!(a.slack >= -1e-9);
    }

    #[test]
    fn jsonl_rows() {
        let reports = run_experiment(&margin_config("weak_transductive", 1), &RunOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_reports(&reports, Format::Jsonl, &mut buf).unwrap();
        let row: serde_json::Value = serde_json::from_slice(buf.split(|&b| b == b'\n').next().unwrap()).unwrap();
        assert_eq!(row["trial"], 0);
        assert!(row["train_err"].as_f64().unwrap() <= 0.5);
    }
}
