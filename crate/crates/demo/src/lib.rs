//! Browser demo: three small interactive views onto the learner.

use rand::Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use oig_learn::classes::{Enumerable, MarginThresholdClass};
use oig_learn::data::{ratio_to_f64, FiniteDistribution};
use oig_learn::oig::{estimate_potential, lazy_discount, orientation_mass, GeneratingFunction, VertexSet, WalkParams};
use oig_learn::pipelines::{train_realizable_partial, PipelineParams};
use oig_learn::rng::RandomStream;
use oig_learn::{BinaryLabel, Rational};

#[derive(Serialize)]
struct FieldVertex {
    bits: String,
    potential: f64,
}

#[derive(Serialize)]
struct FieldEdge {
    from: String,
    to: String,
    coordinate: usize,
    /// Orientation mass placed on `to`.
    mass_to: f64,
}

#[derive(Serialize)]
struct Field {
    dimension: usize,
    gamma: f64,
    vertices: Vec<FieldVertex>,
    edges: Vec<FieldEdge>,
}

fn random_set(m: usize, density: f64, seed: u64) -> Result<VertexSet, String> {
    if !(1..=10).contains(&m) {
        return Err("dimension must be between 1 and 10".into());
    }
    let mut rng = RandomStream::new(seed);
    let mut indices: Vec<u64> = (0..1u64 << m).filter(|_| rng.gen_bool(density.clamp(0.0, 1.0))).collect();
    if indices.is_empty() {
        indices.push(0);
    }
    VertexSet::from_indices(m, indices).map_err(|e| e.to_string())
}

/// Exact potentials on a random vertex set and the orientation they induce.
pub fn potential_field_json(m: usize, density: f64, gamma: f64, lambda: f64, seed: u64) -> Result<String, String> {
    let w = random_set(m, density, seed)?;
    let gf = GeneratingFunction::solve(&w, lazy_discount(gamma)).map_err(|e| e.to_string())?;
    let vertices = w
        .sorted()
        .into_iter()
        .map(|v| FieldVertex { potential: gf.value(&v), bits: v.to_string() })
        .collect();
    let edges = w
        .edges()
        .into_iter()
        .map(|(v, i)| {
            let u = v.flipped(i);
            FieldEdge {
                mass_to: orientation_mass(gf.value(&u), gf.value(&v), lambda),
                from: v.to_string(),
                to: u.to_string(),
                coordinate: i,
            }
        })
        .collect();
    serde_json::to_string(&Field { dimension: m, gamma, vertices, edges }).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Convergence {
    start: String,
    exact: f64,
    /// `(rollouts, estimate)` pairs.
    estimates: Vec<(usize, f64)>,
}

/// Monte-Carlo potential at growing rollout counts against the exact value.
pub fn convergence_json(m: usize, density: f64, gamma: f64, seed: u64) -> Result<String, String> {
    let mut w = random_set(m, density, seed)?;
    let start = w.sorted()[0].clone();
    let exact = GeneratingFunction::solve(&w, lazy_discount(gamma)).map_err(|e| e.to_string())?.value(&start);
    let stream = RandomStream::new(seed).child(1);
    let mut estimates = Vec::new();
    for (k, trials) in [10usize, 100, 1_000, 10_000, 100_000].into_iter().enumerate() {
        let params = WalkParams::new(gamma, trials).map_err(|e| e.to_string())?;
        let value = estimate_potential(&start, &mut w, &params, &mut stream.child(k as u64)).map_err(|e| e.to_string())?;
        estimates.push((trials, value));
    }
    serde_json::to_string(&Convergence { start: start.to_string(), exact, estimates }).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct BoostRun {
    threshold: f64,
    sample: Vec<(f64, u8)>,
    rounds: usize,
    train_err: f64,
    test_err: f64,
    /// `(x, prediction)` across the unit interval.
    curve: Vec<(f64, u8)>,
}

fn bit(label: BinaryLabel) -> u8 {
    u8::from(label == BinaryLabel::One)
}

/// Boosted weak learner on a margin-threshold class with 21 thresholds.
pub fn boost_margin_json(n: usize, target: usize, seed: u64) -> Result<String, String> {
    let err = |e: oig_learn::Error| e.to_string();
    let class = MarginThresholdClass::grid(Rational::from_integer(0), Rational::new(1, 20), 21, Rational::new(1, 80))
        .map_err(err)?;
    if target >= class.num_hypotheses() {
        return Err("target index must be below 21".into());
    }
    let support: Vec<_> = (0..80)
        .map(|j| Rational::new(2 * j + 1, 160))
        .map(|x| (x, class.evaluate(target, &x)))
        .filter(|(_, y)| *y != BinaryLabel::Star)
        .collect();
    let dist = FiniteDistribution::uniform(support).map_err(err)?;
    let stream = RandomStream::new(seed);
    let sample = dist.sample_n(n.clamp(1, 200), &mut stream.child(0));
    let mut params = PipelineParams::new(12, 1.0, 0.2);
    params.trials = Some(500);
    let model = train_realizable_partial(&sample, &class, &params, &stream.child(1)).map_err(err)?;
    let mistakes = |pts: &[(Rational, BinaryLabel)]| -> Result<usize, String> {
        let mut wrong = 0;
        for (x, y) in pts {
            wrong += usize::from(model.predict(x).map_err(err)? != *y);
        }
        Ok(wrong)
    };
    let curve = (0..=100)
        .map(|k| {
            let x = Rational::new(k, 100);
            model.predict(&x).map(|y| (ratio_to_f64(x), bit(y))).map_err(err)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let run = BoostRun {
        threshold: ratio_to_f64(class.thresholds()[target]),
        sample: sample.iter().map(|(x, y)| (ratio_to_f64(*x), bit(*y))).collect(),
        rounds: model.boosted().map_or(0, |b| b.rounds().len()),
        train_err: mistakes(&sample)? as f64 / sample.len() as f64,
        test_err: mistakes(dist.support())? as f64 / dist.support().len() as f64,
        curve,
    };
    serde_json::to_string(&run).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn potential_field(m: usize, density: f64, gamma: f64, lambda: f64, seed: u64) -> Result<String, JsValue> {
    potential_field_json(m, density, gamma, lambda, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn convergence(m: usize, density: f64, gamma: f64, seed: u64) -> Result<String, JsValue> {
    convergence_json(m, density, gamma, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn boost_margin(n: usize, target: usize, seed: u64) -> Result<String, JsValue> {
    boost_margin_json(n, target, seed).map_err(|e| JsValue::from_str(&e))
}
