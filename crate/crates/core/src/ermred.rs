//! Loss-vector recovery and range consistency from value-only ERM oracles.

use num_traits::Zero;

use crate::data::{Example, Label, Rational, RealLabel};
use crate::error::{contract, Result};
use crate::oracle::{RangeOracle, RangeQuery, WeakErmOracle};

fn total_loss<X: Clone, Y: Clone, O: WeakErmOracle<X, Y> + ?Sized>(
    sample: &[Example<X, Y>],
    keep: &[usize],
    oracle: &O,
) -> Result<Rational> {
    if keep.is_empty() {
        return Ok(Rational::zero());
    }
    let sub: Vec<_> = keep.iter().map(|&i| sample[i].clone()).collect();
    Ok(oracle.min_error(&sub)? * keep.len() as i64)
}

/// Greedily drops points whose removal lowers the total minimum loss.
///
/// Returns `z` with `z[i] = true` for dropped points; some empirical risk
/// minimizer on the full sample errs exactly on the dropped points.
/// Uses at most `2 n^2` oracle calls.
pub fn sample_erm_binary<X, Y, O>(sample: &[Example<X, Y>], oracle: &O) -> Result<Vec<bool>>
where
    X: Clone,
    Y: Label,
    O: WeakErmOracle<X, Y> + ?Sized,
{
    let mut keep: Vec<usize> = (0..sample.len()).collect();
    let mut current = total_loss(sample, &keep, oracle)?;
    'scan: while !keep.is_empty() {
        for pos in 0..keep.len() {
            let mut trial = keep.clone();
            trial.remove(pos);
            let value = total_loss(sample, &trial, oracle)?;
            if value < current {
                keep = trial;
                current = value;
                continue 'scan;
            }
        }
        break;
    }
    let mut removed = vec![true; sample.len()];
    for i in keep {
        removed[i] = false;
    }
    Ok(removed)
}

/// Rounds each label down to a grid of spacing `1 / grid` so that some
/// empirical risk minimizer lies in `[y'_i, y'_i + 1/grid]` at every point.
/// Uses `n * grid` oracle calls.
pub fn sample_erm_real<X, O>(sample: &[Example<X, RealLabel>], grid: u32, oracle: &O) -> Result<Vec<Rational>>
where
    X: Clone,
    O: WeakErmOracle<X, RealLabel> + ?Sized,
{
    if grid == 0 {
        return Err(contract("grid must have at least one cell"));
    }
    let step = Rational::new(1, i64::from(grid));
    let point = |k: u32| RealLabel::new(step * i64::from(k)).expect("grid point in [0, 1]");
    let mut pinned: Vec<Example<X, RealLabel>> = Vec::with_capacity(2 * sample.len());
    let mut rounded = Vec::with_capacity(sample.len());
    for (x, _) in sample {
        let mut query = pinned.clone();
        query.extend_from_slice(sample);
        let base = query.len();
        let mut best: Option<(Rational, u32)> = None;
        for k in 0..grid {
            query.truncate(base);
            query.push((x.clone(), point(k)));
            query.push((x.clone(), point(k + 1)));
            let value = oracle.min_error(&query)?;
            if best.is_none_or(|(b, _)| value < b) {
                best = Some((value, k));
            }
        }
        let (_, k) = best.expect("grid is nonempty");
        pinned.push((x.clone(), point(k)));
        pinned.push((x.clone(), point(k + 1)));
        rounded.push(step * i64::from(k));
    }
    Ok(rounded)
}

/// Range consistency from one ERM call on the interval endpoints: the
/// minimum total loss equals the summed interval widths exactly when some
/// hypothesis lands in every interval.
pub fn sample_con_real<X, O>(queries: &[RangeQuery<X>], oracle: &O) -> Result<bool>
where
    X: Clone,
    O: WeakErmOracle<X, RealLabel> + ?Sized,
{
    if queries.is_empty() {
        return Ok(true);
    }
    let mut endpoints = Vec::with_capacity(2 * queries.len());
    let mut widths = Rational::zero();
    for q in queries {
        if q.lower > q.upper {
            return Err(contract(format!("empty interval [{}, {}]", q.lower, q.upper)));
        }
        endpoints.push((q.x.clone(), RealLabel::new(q.lower)?));
        endpoints.push((q.x.clone(), RealLabel::new(q.upper)?));
        widths += q.upper - q.lower;
    }
    let total = oracle.min_error(&endpoints)? * endpoints.len() as i64;
    Ok(total <= widths)
}

/// A range-consistency oracle backed by a weak ERM oracle.
#[derive(Debug, Clone, Copy)]
pub struct ErmRange<O>(pub O);

impl<X: Clone, O: WeakErmOracle<X, RealLabel>> RangeOracle<X> for ErmRange<O> {
    fn range_feasible(&self, queries: &[RangeQuery<X>]) -> Result<bool> {
        sample_con_real(queries, &self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::FiniteTableClass;
    use crate::data::BinaryLabel;
    use crate::oracle::{Metered, QueryLedger};
    use BinaryLabel::{One, Zero};

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn real_class(rows: &[&[(i64, i64)]]) -> FiniteTableClass<RealLabel> {
        let table = rows
            .iter()
            .map(|row| row.iter().map(|&(n, d)| RealLabel::new(r(n, d)).unwrap()).collect())
            .collect();
        FiniteTableClass::new("real", table).unwrap()
    }

    #[test]
    fn realizable_sample_removes_nothing() {
        let c = FiniteTableClass::from_rows("c", &["0110", "1111"]).unwrap();
        let s = [(0, Zero), (1, One), (2, One)];
        assert_eq!(sample_erm_binary(&s, &c).unwrap(), vec![false; 3]);
    }

    #[test]
    fn single_mislabeled_point_is_removed() {
        let c = FiniteTableClass::from_rows("c", &["0000", "1111"]).unwrap();
        let s = [(0, One), (1, One), (2, Zero), (3, One)];
        assert_eq!(sample_erm_binary(&s, &c).unwrap(), vec![false, false, true, false]);
    }

    #[test]
    fn binary_call_budget() {
        let c = FiniteTableClass::from_rows("c", &["0000", "1111", "0101"]).unwrap();
        let s = [(0, One), (1, Zero), (2, Zero), (3, Zero), (0, Zero)];
        let ledger = QueryLedger::new();
        sample_erm_binary(&s, &Metered::new(&c, &ledger)).unwrap();
        assert!(ledger.calls() <= 2 * 25);
    }

    #[test]
    fn real_rounding_brackets_constant() {
        let c = real_class(&[&[(3, 10)]]);
        let s = [(0, RealLabel::new(r(3, 10)).unwrap())];
        let ledger = QueryLedger::new();
        let y = sample_erm_real(&s, 4, &Metered::new(&c, &ledger)).unwrap();
        assert_eq!(y, vec![r(1, 4)]);
        assert_eq!(ledger.calls(), 4);
    }

    #[test]
    fn range_from_erm() {
        let c = real_class(&[&[(1, 5)], &[(4, 5)]]);
        assert!(sample_con_real(&[RangeQuery::new(0, r(7, 10), r(1, 1))], &c).unwrap());
        assert!(!sample_con_real(&[RangeQuery::new(0, r(3, 10), r(7, 10))], &c).unwrap());
        assert!(sample_con_real::<usize, _>(&[], &c).unwrap());
    }
}
