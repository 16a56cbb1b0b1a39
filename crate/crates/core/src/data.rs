//! Labels, losses, samples and finite distributions.

use std::fmt;
use std::hash::Hash;

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};

pub type Rational = Ratio<i64>;

/// A labeled example.
pub type Example<X, L> = (X, L);

/// Label types usable in samples and oracle queries.
pub trait Label: Clone + Eq + Hash + fmt::Debug + Send + Sync {
    /// Loss of predicting `predicted` when the truth is `self`.
    fn loss(&self, predicted: &Self) -> Rational;

    /// Whether this is the undefined label of a partial class.
    fn is_star(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BinaryLabel {
    Zero,
    One,
    Star,
}

impl BinaryLabel {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            BinaryLabel::One
        } else {
            BinaryLabel::Zero
        }
    }

    /// `Some(bit)` for defined labels.
    pub fn bit(self) -> Option<bool> {
        match self {
            BinaryLabel::Zero => Some(false),
            BinaryLabel::One => Some(true),
            BinaryLabel::Star => None,
        }
    }

    /// Swaps 0 and 1; `Star` stays `Star`.
    pub fn flipped(self) -> Self {
        match self {
            BinaryLabel::Zero => BinaryLabel::One,
            BinaryLabel::One => BinaryLabel::Zero,
            BinaryLabel::Star => BinaryLabel::Star,
        }
    }

    /// +1 for `One`, -1 otherwise.
    pub fn sign(self) -> f64 {
        if self == BinaryLabel::One {
            1.0
        } else {
            -1.0
        }
    }
}

impl fmt::Display for BinaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinaryLabel::Zero => f.write_str("0"),
            BinaryLabel::One => f.write_str("1"),
            BinaryLabel::Star => f.write_str("*"),
        }
    }
}

impl Label for BinaryLabel {
    fn loss(&self, predicted: &Self) -> Rational {
        Rational::from_integer(loss_bin(*self, *predicted) as i64)
    }

    fn is_star(&self) -> bool {
        *self == BinaryLabel::Star
    }
}

/// 0-1 loss. A `Star` prediction always counts as an error.
pub fn loss_bin(truth: BinaryLabel, predicted: BinaryLabel) -> u8 {
    u8::from(truth != predicted || predicted == BinaryLabel::Star)
}

/// A value in `1..=classes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MulticlassLabel {
    value: u32,
    classes: u32,
}

impl MulticlassLabel {
    pub fn new(value: u32, classes: u32) -> Result<Self> {
        if classes < 2 {
            return Err(contract(format!("need at least 2 classes, got {classes}")));
        }
        if value == 0 || value > classes {
            return Err(contract(format!("label {value} outside 1..={classes}")));
        }
        Ok(MulticlassLabel { value, classes })
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn classes(self) -> u32 {
        self.classes
    }
}

impl Label for MulticlassLabel {
    fn loss(&self, predicted: &Self) -> Rational {
        let l = loss_mc(*self, *predicted).expect("multiclass labels with different K");
        Rational::from_integer(l as i64)
    }
}

pub fn loss_mc(truth: MulticlassLabel, predicted: MulticlassLabel) -> Result<u8> {
    if truth.classes != predicted.classes {
        return Err(contract(format!(
            "label spaces differ: K={} vs K={}",
            truth.classes, predicted.classes
        )));
    }
    Ok(u8::from(truth.value != predicted.value))
}

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RealLabel(Rational);

impl RealLabel {
    pub fn new(value: Rational) -> Result<Self> {
        if value.is_negative() || value > Rational::one() {
            return Err(contract(format!("real label {value} outside [0, 1]")));
        }
        Ok(RealLabel(value))
    }

    pub fn value(self) -> Rational {
        self.0
    }
}

impl Label for RealLabel {
    fn loss(&self, predicted: &Self) -> Rational {
        loss_abs(self.0, predicted.0)
    }
}

pub fn loss_abs(truth: Rational, predicted: Rational) -> Rational {
    (truth - predicted).abs()
}

/// Mean loss of `h` on `sample`.
pub fn empirical_error<X, L: Label>(sample: &[Example<X, L>], mut h: impl FnMut(&X) -> L) -> Result<Rational> {
    if sample.is_empty() {
        return Err(contract("empirical error of an empty sample"));
    }
    let total = sample
        .iter()
        .fold(Rational::zero(), |acc, (x, y)| acc + y.loss(&h(x)));
    Ok(total / sample.len() as i64)
}

/// Parses `"3/8"`, `"0.375"` or `"1"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Config(format!("not a rational number: `{text}`"));
    if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if frac_part.len() > 15 || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let int: i64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad())? };
    let denom = 10i64.pow(frac_part.len() as u32);
    let frac: i64 = if frac_part.is_empty() { 0 } else { frac_part.parse().map_err(|_| bad())? };
    let value = Rational::new(
        int.checked_mul(denom).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?,
        denom,
    );
    Ok(if neg { -value } else { value })
}

/// Exact rational for a float written in shortest decimal form.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    if !x.is_finite() {
        return Err(Error::Config(format!("non-finite number {x}")));
    }
    parse_rational(&format!("{x}"))
}

/// A distribution with finite support over labeled examples.
#[derive(Debug, Clone)]
pub struct FiniteDistribution<X, L> {
    support: Vec<Example<X, L>>,
    weights: Vec<Rational>,
    cumulative: Vec<f64>,
}

impl<X: Clone, L: Clone> FiniteDistribution<X, L> {
    /// Normalizes `weights` to sum to one.
    pub fn new(support: Vec<Example<X, L>>, weights: Vec<Rational>) -> Result<Self> {
        if support.is_empty() {
            return Err(contract("distribution with empty support"));
        }
        if support.len() != weights.len() {
            return Err(contract(format!(
                "{} support points but {} weights",
                support.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| w.is_negative()) {
            return Err(contract("negative weight"));
        }
        let total: Rational = weights.iter().sum();
        if total.is_zero() {
            return Err(contract("weights sum to zero"));
        }
        let weights: Vec<Rational> = weights.into_iter().map(|w| w / total).collect();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += ratio_to_f64(*w);
                acc
            })
            .collect();
        Ok(FiniteDistribution { support, weights, cumulative })
    }

    pub fn uniform(support: Vec<Example<X, L>>) -> Result<Self> {
        let weights = vec![Rational::one(); support.len()];
        Self::new(support, weights)
    }

    pub fn support(&self) -> &[Example<X, L>] {
        &self.support
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    /// One draw by inverse CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Example<X, L> {
        let u: f64 = rng.gen();
        let mut idx = self.cumulative.partition_point(|&c| c <= u);
        if idx >= self.support.len() {
            idx = self
                .weights
                .iter()
                .rposition(|w| !w.is_zero())
                .expect("some weight is positive");
        }
        self.support[idx].clone()
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Example<X, L>> {
        (0..n).map(|_| self.sample(rng)).collect()
    }

    /// Exact expectation of `f` over the support.
    pub fn expectation(&self, mut f: impl FnMut(&X, &L) -> Rational) -> Rational {
        self.support
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| !w.is_zero())
            .fold(Rational::zero(), |acc, ((x, y), w)| acc + *w * f(x, y))
    }
}

impl<X: Clone> FiniteDistribution<X, BinaryLabel> {
    /// Flips each defined label with probability `rate`.
    pub fn with_label_noise(&self, rate: Rational) -> Result<Self> {
        if rate.is_negative() || rate > Rational::one() {
            return Err(contract(format!("noise rate {rate} outside [0, 1]")));
        }
        if rate.is_zero() {
            return Ok(self.clone());
        }
        let mut support = Vec::with_capacity(self.support.len() * 2);
        let mut weights = Vec::with_capacity(self.support.len() * 2);
        for ((x, y), w) in self.support.iter().zip(&self.weights) {
            support.push((x.clone(), *y));
            weights.push(*w * (Rational::one() - rate));
            support.push((x.clone(), y.flipped()));
            weights.push(*w * rate);
        }
        Self::new(support, weights)
    }
}

pub fn ratio_to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}
