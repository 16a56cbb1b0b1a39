use num_traits::{Signed, Zero};

use super::Enumerable;
use crate::data::{BinaryLabel, Example, Label, Rational};
use crate::error::{contract, Result};
use crate::oracle::{ConceptClass, ConsistencyOracle, StrongErmOracle, WeakErmOracle};

/// Thresholds with an undefined band of half-width `margin` around each cut.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginThresholdClass {
    thresholds: Vec<Rational>,
    margin: Rational,
}

impl MarginThresholdClass {
    pub fn new(mut thresholds: Vec<Rational>, margin: Rational) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(contract("threshold grid is empty"));
        }
        if !margin.is_positive() {
            return Err(contract(format!("margin must be positive, got {margin}")));
        }
        thresholds.sort();
        thresholds.dedup();
        Ok(MarginThresholdClass { thresholds, margin })
    }

    /// `count` thresholds `start, start + step, ...`.
    pub fn grid(start: Rational, step: Rational, count: usize, margin: Rational) -> Result<Self> {
        let thresholds = (0..count).map(|k| start + step * k as i64).collect();
        Self::new(thresholds, margin)
    }

    pub fn thresholds(&self) -> &[Rational] {
        &self.thresholds
    }

    pub fn margin(&self) -> Rational {
        self.margin
    }

    pub fn label_at(&self, threshold: Rational, x: Rational) -> BinaryLabel {
        if x >= threshold + self.margin {
            BinaryLabel::One
        } else if x <= threshold - self.margin {
            BinaryLabel::Zero
        } else {
            BinaryLabel::Star
        }
    }
}

impl Enumerable<Rational, BinaryLabel> for MarginThresholdClass {
    fn num_hypotheses(&self) -> usize {
        self.thresholds.len()
    }

    fn evaluate(&self, hypothesis: usize, x: &Rational) -> BinaryLabel {
        self.label_at(self.thresholds[hypothesis], *x)
    }
}

impl ConsistencyOracle<Rational, BinaryLabel> for MarginThresholdClass {
    fn is_realizable(&self, sample: &[Example<Rational, BinaryLabel>]) -> Result<bool> {
        // Feasible thresholds form [max zero + margin, min one - margin].
        let mut lo: Option<Rational> = None;
        let mut hi: Option<Rational> = None;
        for (x, y) in sample {
            match y {
                BinaryLabel::One => hi = Some(hi.map_or(*x, |h| h.min(*x))),
                BinaryLabel::Zero => lo = Some(lo.map_or(*x, |l| l.max(*x))),
                BinaryLabel::Star => return Ok(false),
            }
        }
        let lo = lo.map(|l| l + self.margin);
        let hi = hi.map(|h| h - self.margin);
        let start = match lo {
            Some(l) => self.thresholds.partition_point(|t| *t < l),
            None => 0,
        };
        Ok(match (self.thresholds.get(start), hi) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(t), Some(h)) => *t <= h,
        })
    }
}

impl MarginThresholdClass {
    fn losses<'a>(&'a self, sample: &'a [Example<Rational, BinaryLabel>]) -> impl Iterator<Item = Rational> + 'a {
        self.thresholds.iter().map(move |t| {
            sample
                .iter()
                .fold(Rational::zero(), |acc, (x, y)| acc + y.loss(&self.label_at(*t, *x)))
        })
    }
}

impl WeakErmOracle<Rational, BinaryLabel> for MarginThresholdClass {
    fn min_error(&self, sample: &[Example<Rational, BinaryLabel>]) -> Result<Rational> {
        if sample.is_empty() {
            return Err(contract("ERM query on an empty sample"));
        }
        let best = self.losses(sample).min().expect("grid is nonempty");
        Ok(best / sample.len() as i64)
    }
}

impl StrongErmOracle<Rational, BinaryLabel> for MarginThresholdClass {
    fn argmin(&self, sample: &[Example<Rational, BinaryLabel>]) -> Result<usize> {
        let losses: Vec<Rational> = self.losses(sample).collect();
        let best = *losses.iter().min().expect("grid is nonempty");
        Ok(losses.iter().position(|l| *l == best).expect("minimum is attained"))
    }
}

impl ConceptClass<Rational, BinaryLabel> for MarginThresholdClass {
    fn name(&self) -> String {
        format!("margin_threshold({} cuts, margin {})", self.thresholds.len(), self.margin)
    }

    fn consistency_oracle(&self) -> Option<&dyn ConsistencyOracle<Rational, BinaryLabel>> {
        Some(self)
    }

    fn weak_erm_oracle(&self) -> Option<&dyn WeakErmOracle<Rational, BinaryLabel>> {
        Some(self)
    }

    fn strong_erm_oracle(&self) -> Option<&dyn StrongErmOracle<Rational, BinaryLabel>> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn dense() -> MarginThresholdClass {
        MarginThresholdClass::grid(r(0, 1), r(1, 100), 101, r(1, 10)).unwrap()
    }

    #[test]
    fn separable_pair() {
        let c = dense();
        assert!(c.is_realizable(&[(r(9, 10), BinaryLabel::One), (r(1, 10), BinaryLabel::Zero)]).unwrap());
        assert!(!c.is_realizable(&[(r(1, 10), BinaryLabel::One), (r(9, 10), BinaryLabel::Zero)]).unwrap());
        assert!(c.is_realizable(&[]).unwrap());
    }

    #[test]
    fn band_points_are_undefined() {
        let c = dense();
        assert_eq!(c.label_at(r(1, 2), r(1, 2)), BinaryLabel::Star);
        assert_eq!(c.label_at(r(1, 2), r(6, 10)), BinaryLabel::One);
        assert_eq!(c.label_at(r(1, 2), r(4, 10)), BinaryLabel::Zero);
        assert!(MarginThresholdClass::grid(r(0, 1), r(1, 10), 3, r(0, 1)).is_err());
    }

    #[test]
    fn erm_counts_band_as_error() {
        let c = MarginThresholdClass::new(vec![r(1, 2)], r(1, 10)).unwrap();
        let s = [(r(1, 2), BinaryLabel::One), (r(9, 10), BinaryLabel::One)];
        assert_eq!(c.min_error(&s).unwrap(), r(1, 2));
    }

    fn brute(c: &MarginThresholdClass, s: &[Example<Rational, BinaryLabel>]) -> bool {
        (0..c.num_hypotheses()).any(|h| s.iter().all(|(x, y)| c.evaluate(h, x) == *y))
    }

    proptest! {
        #[test]
        fn interval_test_matches_enumeration(
            pts in proptest::collection::vec((0i64..=40, any::<bool>()), 0..8),
            margin in 1i64..6,
        ) {
            let c = MarginThresholdClass::grid(r(0, 1), r(1, 20), 21, r(margin, 40)).unwrap();
            let s: Vec<_> = pts.iter().map(|(x, b)| (r(*x, 40), BinaryLabel::from_bit(*b))).collect();
            prop_assert_eq!(c.is_realizable(&s).unwrap(), brute(&c, &s));
        }
    }
}
