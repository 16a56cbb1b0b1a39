//! AdaBoost over resampled weak-learner calls.

use std::collections::HashMap;
use std::hash::Hash;

use rand::distributions::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

use crate::data::{BinaryLabel, Example};
use crate::error::{contract, Error, Result};
use crate::rng::{RandomStream, StreamKey};
use crate::weak::WeakLearner;

/// `ceil(16 ln(factor * n / delta) / eta^2)`.
pub fn rounds_for(n: usize, factor: f64, eta: f64, delta: f64) -> Result<usize> {
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(contract(format!("advantage {eta} outside (0, 1/2]")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(contract(format!("failure probability {delta} outside (0, 1)")));
    }
    if n == 0 {
        return Err(contract("boosting needs a nonempty sample"));
    }
    Ok((16.0 * (factor * n as f64 / delta).ln() / (eta * eta)).ceil().max(1.0) as usize)
}

/// `1 / (m ln m)`, the advantage the weak learner is guaranteed on `m`-point samples.
pub fn default_eta(m: usize) -> Result<f64> {
    if m < 2 {
        return Err(contract("advantage needs m >= 2"));
    }
    let mf = m as f64;
    Ok((1.0 / (mf * mf.ln())).min(0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoostParams {
    /// Points drawn from the current weights each round.
    pub weak_sample_size: usize,
    pub rounds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundKind {
    Weighted,
    /// Zero weighted error: the model is this round's hypothesis alone.
    Perfect,
    /// Every point wrong: the model is this round's hypothesis negated.
    Inverted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// Indices into the training sample forming this round's weak sample.
    pub indices: Vec<usize>,
    pub alpha: f64,
    pub epsilon: f64,
    pub z: f64,
    pub kind: RoundKind,
}

/// A trained vote. Weak hypotheses are replayed from the stored samples and
/// per-round stream keys.
#[derive(Debug, Clone)]
pub struct BoostedModel<X> {
    sample: Vec<Example<X, BinaryLabel>>,
    root: StreamKey,
    rounds: Vec<RoundRecord>,
}

fn round_stream(root: StreamKey, t: usize) -> RandomStream {
    RandomStream::from_key(root).child(t as u64)
}

impl<X: Clone + Eq + Hash> BoostedModel<X> {
    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    pub fn sample(&self) -> &[Example<X, BinaryLabel>] {
        &self.sample
    }

    /// Product of the normalizers over weighted rounds.
    pub fn z_product(&self) -> f64 {
        self.rounds.iter().filter(|r| r.kind == RoundKind::Weighted).map(|r| r.z).product()
    }

    pub fn stopped_early(&self) -> bool {
        self.rounds.last().is_some_and(|r| r.kind != RoundKind::Weighted)
    }

    fn weak_sample(&self, record: &RoundRecord) -> Vec<Example<X, BinaryLabel>> {
        record.indices.iter().map(|&i| self.sample[i].clone()).collect()
    }

    /// The weak hypothesis of round `t` at `x`.
    pub fn weak_prediction<W: WeakLearner<X> + ?Sized>(&self, learner: &W, t: usize, x: &X) -> Result<BinaryLabel> {
        let record = self.rounds.get(t).ok_or_else(|| contract(format!("no round {t}")))?;
        learner.predict(&self.weak_sample(record), x, &round_stream(self.root, t).child(1))
    }

    pub fn predict<W: WeakLearner<X> + ?Sized>(&self, learner: &W, x: &X) -> Result<BinaryLabel> {
        match self.rounds.last() {
            None => Ok(BinaryLabel::One),
            Some(last) if last.kind == RoundKind::Perfect => self.weak_prediction(learner, self.rounds.len() - 1, x),
            Some(last) if last.kind == RoundKind::Inverted => {
                Ok(self.weak_prediction(learner, self.rounds.len() - 1, x)?.flipped())
            }
            Some(_) => {
                let mut vote = 0.0;
                for (t, record) in self.rounds.iter().enumerate() {
                    vote += record.alpha * self.weak_prediction(learner, t, x)?.sign();
                }
                Ok(BinaryLabel::from_bit(vote >= 0.0))
            }
        }
    }

    /// Round records and stream key as TOML; the training sample is not included.
    pub fn to_toml(&self) -> Result<String> {
        let file = ModelFile {
            root: self.root.0.iter().map(|w| format!("{w:016x}")).collect(),
            rounds: self
                .rounds
                .iter()
                .map(|r| RoundFile {
                    indices: r.indices.clone(),
                    alpha: format!("{:.16e}", r.alpha),
                    epsilon: format!("{:.16e}", r.epsilon),
                    z: format!("{:.16e}", r.z),
                    kind: r.kind,
                })
                .collect(),
        };
        toml::to_string(&file).map_err(|e| Error::Config(e.to_string()))
    }

    /// Rebuilds a model from [`to_toml`](Self::to_toml) output and its training sample.
    pub fn from_toml(text: &str, sample: Vec<Example<X, BinaryLabel>>) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let words: Vec<u64> = file
            .root
            .iter()
            .map(|w| u64::from_str_radix(w, 16).map_err(|e| Error::Config(e.to_string())))
            .collect::<Result<_>>()?;
        let root: [u64; 4] = words.try_into().map_err(|_| Error::Config("stream key needs 4 words".into()))?;
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Config(e.to_string()));
        let rounds = file
            .rounds
            .into_iter()
            .map(|r| {
                if r.indices.iter().any(|&i| i >= sample.len()) {
                    return Err(Error::Config("round index outside the training sample".into()));
                }
                Ok(RoundRecord { alpha: num(&r.alpha)?, epsilon: num(&r.epsilon)?, z: num(&r.z)?, indices: r.indices, kind: r.kind })
            })
            .collect::<Result<_>>()?;
        Ok(BoostedModel { sample, root: StreamKey(root), rounds })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    root: Vec<String>,
    rounds: Vec<RoundFile>,
}

#[derive(Serialize, Deserialize)]
struct RoundFile {
    indices: Vec<usize>,
    alpha: String,
    epsilon: String,
    z: String,
    kind: RoundKind,
}

/// Runs up to `params.rounds` rounds, stopping as soon as a weak hypothesis
/// is perfect or perfectly wrong on the weighted sample.
pub fn adaboost_train<X, W>(
    sample: &[Example<X, BinaryLabel>],
    learner: &W,
    params: &BoostParams,
    stream: &RandomStream,
) -> Result<BoostedModel<X>>
where
    X: Clone + Eq + Hash,
    W: WeakLearner<X> + ?Sized,
{
    let n = sample.len();
    if n == 0 {
        return Err(contract("boosting needs a nonempty sample"));
    }
    if params.weak_sample_size == 0 {
        return Err(contract("weak sample size must be positive"));
    }
    if sample.iter().any(|(_, y)| *y == BinaryLabel::Star) {
        return Err(contract("training labels must be 0 or 1"));
    }
    let root = stream.key();
    let mut weights = vec![1.0 / n as f64; n];
    let mut rounds = Vec::new();
    for t in 0..params.rounds {
        let rt = round_stream(root, t);
        let picker = WeightedIndex::new(&weights).map_err(|e| Error::Numerical(e.to_string()))?;
        let mut draw = rt.child(0);
        let indices: Vec<usize> = (0..params.weak_sample_size).map(|_| picker.sample(&mut draw)).collect();
        let weak_sample: Vec<_> = indices.iter().map(|&i| sample[i].clone()).collect();
        let learner_stream = rt.child(1);

        let mut cache: HashMap<&X, BinaryLabel> = HashMap::new();
        let mut wrong = Vec::with_capacity(n);
        for (x, y) in sample {
            let h = match cache.get(x) {
                Some(&h) => h,
                None => {
                    let h = learner.predict(&weak_sample, x, &learner_stream)?;
                    cache.insert(x, h);
                    h
                }
            };
            wrong.push(h != *y);
        }
        let epsilon: f64 = weights.iter().zip(&wrong).filter(|(_, &w)| w).map(|(d, _)| d).sum();
        let terminal = if wrong.iter().all(|&w| !w) {
            Some(RoundKind::Perfect)
        } else if wrong.iter().all(|&w| w) {
            Some(RoundKind::Inverted)
        } else {
            None
        };
        if let Some(kind) = terminal {
            rounds.push(RoundRecord { indices, alpha: 0.0, epsilon, z: 0.0, kind });
            break;
        }
        let alpha = 0.5 * ((1.0 - epsilon) / epsilon).ln();
        let z = 2.0 * (epsilon * (1.0 - epsilon)).sqrt();
        for (d, &w) in weights.iter_mut().zip(&wrong) {
            *d *= if w { alpha.exp() } else { (-alpha).exp() };
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|d| *d /= total);
        rounds.push(RoundRecord { indices, alpha, epsilon, z, kind: RoundKind::Weighted });
    }
    Ok(BoostedModel { sample: sample.to_vec(), root, rounds })
}

/// Reweighting step on its own: returns the next weights and the normalizer.
pub fn reweight(weights: &[f64], wrong: &[bool], alpha: f64) -> (Vec<f64>, f64) {
    let raw: Vec<f64> = weights
        .iter()
        .zip(wrong)
        .map(|(d, &w)| d * if w { alpha.exp() } else { (-alpha).exp() })
        .collect();
    let z: f64 = raw.iter().sum();
    (raw.into_iter().map(|d| d / z).collect(), z)
}
