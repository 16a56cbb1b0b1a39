//! The randomized weak learner built on a consistency oracle.

use rand::Rng;

use crate::data::{BinaryLabel, Example, FiniteDistribution, Label};
use crate::error::{Error, Result};
use crate::oig::{component, estimate_potential, lazy_discount, GeneratingFunction, Membership, OracleMembership, Vertex, VertexSet, WalkParams};
use crate::oracle::ConsistencyOracle;
use crate::rng::RandomStream;

/// A learner that maps a labeled sample and a query point to a prediction.
pub trait WeakLearner<X> {
    fn predict(&self, sample: &[Example<X, BinaryLabel>], x: &X, stream: &RandomStream) -> Result<BinaryLabel>;
}

/// How the two potentials are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialMode {
    /// Truncated rollouts, as the algorithm prescribes.
    MonteCarlo,
    /// Exact untruncated potentials from the component of the query vertex.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakParams {
    pub walk: WalkParams,
    pub lambda: f64,
    pub memoize: bool,
    pub mode: PotentialMode,
}

impl WeakParams {
    /// Defaults for an `m`-point graph:
    /// `gamma = 1 - 1/(c1 m ln m)` clamped to `[1/2, 1 - 1e-6]`,
    /// `U = ceil(c1 m^2 ln^3 m)`, `lambda = 1`.
    pub fn defaults(m: usize, c1: f64) -> Result<Self> {
        if m < 2 {
            return Err(crate::error::contract("weak learner needs m >= 2"));
        }
        if !(c1 > 0.0 && c1.is_finite()) {
            return Err(crate::error::contract(format!("C1 must be positive, got {c1}")));
        }
        let mf = m as f64;
        let ln = mf.ln();
        let gamma = (1.0 - 1.0 / (c1 * mf * ln)).clamp(0.5, 1.0 - 1e-6);
        let trials = (c1 * mf * mf * ln.powi(3)).ceil().max(1.0) as usize;
        Ok(WeakParams {
            walk: WalkParams::new(gamma, trials)?,
            lambda: 1.0,
            memoize: true,
            mode: PotentialMode::MonteCarlo,
        })
    }

    pub fn with_mode(mut self, mode: PotentialMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_memoize(mut self, memoize: bool) -> Self {
        self.memoize = memoize;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(crate::error::contract(format!("lambda {lambda} outside (0, 1]")));
        }
        self.lambda = lambda;
        Ok(self)
    }
}

/// A prediction with the probability of answering 1 that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakPrediction {
    pub label: BinaryLabel,
    pub prob_one: f64,
    /// Potentials of the 0- and 1-completion when both were consistent.
    pub potentials: Option<(f64, f64)>,
}

/// Predicts by orienting the edge between the two completions of the sample.
#[derive(Debug, Clone)]
pub struct WeakRealizable<O> {
    oracle: O,
    params: WeakParams,
}

impl<O> WeakRealizable<O> {
    pub fn new(oracle: O, params: WeakParams) -> Self {
        WeakRealizable { oracle, params }
    }

    pub fn params(&self) -> &WeakParams {
        &self.params
    }

    pub fn oracle(&self) -> &O {
        &self.oracle
    }
}

impl<O> WeakRealizable<O> {
    pub fn predict_detailed<X>(
        &self,
        sample: &[Example<X, BinaryLabel>],
        x: &X,
        stream: &RandomStream,
    ) -> Result<WeakPrediction>
    where
        X: Clone + std::hash::Hash,
        O: ConsistencyOracle<X, BinaryLabel>,
    {
        let stream = stream.child_hashed(x);
        let mut points: Vec<X> = sample.iter().map(|(p, _)| p.clone()).collect();
        points.push(x.clone());
        let mut labels: Vec<BinaryLabel> = sample.iter().map(|(_, y)| *y).collect();
        labels.push(BinaryLabel::Zero);
        let y0 = Vertex::from_labels(&labels)?;
        let y1 = y0.flipped(labels.len() - 1);

        let with = |label: BinaryLabel| -> Result<bool> {
            let mut s = sample.to_vec();
            s.push((x.clone(), label));
            self.oracle.is_realizable(&s)
        };
        let zero_ok = with(BinaryLabel::Zero)?;
        let one_ok = with(BinaryLabel::One)?;
        let forced = |label: BinaryLabel| WeakPrediction {
            label,
            prob_one: if label == BinaryLabel::One { 1.0 } else { 0.0 },
            potentials: None,
        };
        match (zero_ok, one_ok) {
            (true, false) => return Ok(forced(BinaryLabel::Zero)),
            (false, true) => return Ok(forced(BinaryLabel::One)),
            (false, false) => {
                // The class is undefined at x for every hypothesis matching the sample.
                return if self.oracle.is_realizable(sample)? {
                    Ok(forced(BinaryLabel::One))
                } else {
                    Err(Error::Realizability("training sample is not realizable".into()))
                };
            }
            (true, true) => {}
        }

        let (f0, f1) = match self.params.mode {
            PotentialMode::MonteCarlo => {
                let f0 = self.potential(&points, &y0, &mut stream.child(0))?;
                let f1 = self.potential(&points, &y1, &mut stream.child(1))?;
                (f0, f1)
            }
            PotentialMode::Exact => {
                let mut w = OracleMembership::memoized(&points, &self.oracle);
                let comp = component(&y0, &mut w)?;
                let set = VertexSet::new(points.len(), comp)?;
                let gf = GeneratingFunction::solve(&set, lazy_discount(self.params.walk.gamma))?;
                (gf.value(&y0), gf.value(&y1))
            }
        };
        let prob_one = ((1.0 + self.params.lambda * (f0 - f1)) / 2.0).clamp(0.0, 1.0);
        let label = BinaryLabel::from_bit(stream.child(2).gen::<f64>() < prob_one);
        Ok(WeakPrediction { label, prob_one, potentials: Some((f0, f1)) })
    }

    fn potential<X>(&self, points: &[X], start: &Vertex, rng: &mut RandomStream) -> Result<f64>
    where
        X: Clone,
        O: ConsistencyOracle<X, BinaryLabel>,
    {
        let mut w: Box<dyn Membership + '_> = if self.params.memoize {
            Box::new(OracleMembership::memoized(points, &self.oracle))
        } else {
            Box::new(OracleMembership::raw(points, &self.oracle))
        };
        estimate_potential(start, w.as_mut(), &self.params.walk, rng)
    }
}

impl<X, O> WeakLearner<X> for WeakRealizable<O>
where
    X: Clone + std::hash::Hash,
    O: ConsistencyOracle<X, BinaryLabel>,
{
    fn predict(&self, sample: &[Example<X, BinaryLabel>], x: &X, stream: &RandomStream) -> Result<BinaryLabel> {
        Ok(self.predict_detailed(sample, x, stream)?.label)
    }
}

/// Mean leave-one-out error over `reps` independent repetitions.
pub fn transductive_error<X: Clone, W: WeakLearner<X> + ?Sized>(
    learner: &W,
    sample: &[Example<X, BinaryLabel>],
    reps: usize,
    stream: &RandomStream,
) -> Result<f64> {
    if sample.is_empty() || reps == 0 {
        return Err(crate::error::contract("transductive error needs a sample and repetitions"));
    }
    let mut mistakes = 0u64;
    for rep in 0..reps {
        let rs = stream.child(rep as u64);
        for i in 0..sample.len() {
            let mut rest = sample.to_vec();
            let (x, y) = rest.remove(i);
            let pred = learner.predict(&rest, &x, &rs.child(i as u64))?;
            mistakes += u64::from(y.loss(&pred) != 0.into());
        }
    }
    Ok(mistakes as f64 / (reps * sample.len()) as f64)
}

/// Mean error on a fresh draw after training on `m - 1` fresh draws.
pub fn loo_distributional_error<X: Clone, W: WeakLearner<X> + ?Sized>(
    learner: &W,
    distribution: &FiniteDistribution<X, BinaryLabel>,
    m: usize,
    reps: usize,
    stream: &RandomStream,
) -> Result<f64> {
    if m == 0 || reps == 0 {
        return Err(crate::error::contract("need m >= 1 and at least one repetition"));
    }
    let mut mistakes = 0u64;
    for rep in 0..reps {
        let rs = stream.child(rep as u64);
        let mut draw = rs.child(0);
        let train = distribution.sample_n(m - 1, &mut draw);
        let (x, y) = distribution.sample(&mut draw);
        let pred = learner.predict(&train, &x, &rs.child(1))?;
        mistakes += u64::from(y.loss(&pred) != 0.into());
    }
    Ok(mistakes as f64 / reps as f64)
}
