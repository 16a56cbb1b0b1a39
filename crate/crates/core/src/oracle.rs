//! Oracle interfaces, capability checks and the query-cost ledger.

use std::sync::atomic::{AtomicU64, Ordering};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::data::{Example, Label, Rational};
use crate::error::{contract, Error, OracleKind, Result};

/// Counts oracle calls and charges `|S|` per call.
#[derive(Debug, Default)]
pub struct QueryLedger {
    calls: AtomicU64,
    cost: AtomicU64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LedgerSnapshot {
    pub calls: u64,
    pub cost: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&self, sample_size: usize) {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.cost.fetch_add(sample_size as u64, Ordering::Relaxed);
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn cost(&self) -> u64 {
        self.cost.load(Ordering::Relaxed)
    }

    pub fn snapshot(&self) -> LedgerSnapshot {
        LedgerSnapshot { calls: self.calls(), cost: self.cost() }
    }
}

/// Decides whether some hypothesis matches every example.
pub trait ConsistencyOracle<X, Y> {
    fn is_realizable(&self, sample: &[Example<X, Y>]) -> Result<bool>;
}

/// Returns the minimum mean loss over the class; the minimizer stays hidden.
pub trait WeakErmOracle<X, Y> {
    fn min_error(&self, sample: &[Example<X, Y>]) -> Result<Rational>;
}

/// A point with a closed target interval `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RangeQuery<X> {
    pub x: X,
    pub lower: Rational,
    pub upper: Rational,
}

impl<X> RangeQuery<X> {
    pub fn new(x: X, lower: Rational, upper: Rational) -> Self {
        RangeQuery { x, lower, upper }
    }
}

/// Decides whether some hypothesis lands every point inside its interval.
pub trait RangeOracle<X> {
    fn range_feasible(&self, queries: &[RangeQuery<X>]) -> Result<bool>;
}

/// Returns a handle to an empirical risk minimizer.
pub trait StrongErmOracle<X, Y> {
    fn argmin(&self, sample: &[Example<X, Y>]) -> Result<usize>;
}

impl<X, Y, T: ConsistencyOracle<X, Y> + ?Sized> ConsistencyOracle<X, Y> for &T {
    fn is_realizable(&self, sample: &[Example<X, Y>]) -> Result<bool> {
        (**self).is_realizable(sample)
    }
}

impl<X, Y, T: WeakErmOracle<X, Y> + ?Sized> WeakErmOracle<X, Y> for &T {
    fn min_error(&self, sample: &[Example<X, Y>]) -> Result<Rational> {
        (**self).min_error(sample)
    }
}

impl<X, T: RangeOracle<X> + ?Sized> RangeOracle<X> for &T {
    fn range_feasible(&self, queries: &[RangeQuery<X>]) -> Result<bool> {
        (**self).range_feasible(queries)
    }
}

impl<X, Y, T: StrongErmOracle<X, Y> + ?Sized> StrongErmOracle<X, Y> for &T {
    fn argmin(&self, sample: &[Example<X, Y>]) -> Result<usize> {
        (**self).argmin(sample)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Capabilities {
    pub consistency: bool,
    pub weak_erm: bool,
    pub range_consistency: bool,
    pub strong_erm: bool,
}

impl Capabilities {
    pub fn supports(&self, kind: OracleKind) -> bool {
        match kind {
            OracleKind::Consistency => self.consistency,
            OracleKind::WeakErm => self.weak_erm,
            OracleKind::RangeConsistency => self.range_consistency,
            OracleKind::StrongErm => self.strong_erm,
        }
    }
}

/// A concept class together with the oracles it is willing to answer.
pub trait ConceptClass<X, Y> {
    fn name(&self) -> String;

    fn consistency_oracle(&self) -> Option<&dyn ConsistencyOracle<X, Y>> {
        None
    }

    fn weak_erm_oracle(&self) -> Option<&dyn WeakErmOracle<X, Y>> {
        None
    }

    fn range_oracle(&self) -> Option<&dyn RangeOracle<X>> {
        None
    }

    fn strong_erm_oracle(&self) -> Option<&dyn StrongErmOracle<X, Y>> {
        None
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            consistency: self.consistency_oracle().is_some(),
            weak_erm: self.weak_erm_oracle().is_some(),
            range_consistency: self.range_oracle().is_some(),
            strong_erm: self.strong_erm_oracle().is_some(),
        }
    }
}

/// Wraps an oracle so every call is validated and charged to a ledger.
pub struct Metered<'a, O: ?Sized> {
    inner: &'a O,
    ledger: &'a QueryLedger,
}

impl<O: ?Sized> Clone for Metered<'_, O> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<O: ?Sized> Copy for Metered<'_, O> {}

impl<'a, O: ?Sized> Metered<'a, O> {
    pub fn new(inner: &'a O, ledger: &'a QueryLedger) -> Self {
        Metered { inner, ledger }
    }

    pub fn ledger(&self) -> &'a QueryLedger {
        self.ledger
    }
}

fn reject_stars<X, Y: Label>(sample: &[Example<X, Y>]) -> Result<()> {
    if sample.iter().any(|(_, y)| y.is_star()) {
        return Err(contract("oracle queries may not contain the undefined label"));
    }
    Ok(())
}

impl<X, Y: Label, O: ConsistencyOracle<X, Y> + ?Sized> ConsistencyOracle<X, Y> for Metered<'_, O> {
    fn is_realizable(&self, sample: &[Example<X, Y>]) -> Result<bool> {
        reject_stars(sample)?;
        self.ledger.record(sample.len());
        self.inner.is_realizable(sample)
    }
}

impl<X, Y: Label, O: WeakErmOracle<X, Y> + ?Sized> WeakErmOracle<X, Y> for Metered<'_, O> {
    fn min_error(&self, sample: &[Example<X, Y>]) -> Result<Rational> {
        if sample.is_empty() {
            return Err(contract("ERM query on an empty sample"));
        }
        reject_stars(sample)?;
        self.ledger.record(sample.len());
        self.inner.min_error(sample)
    }
}

impl<X, O: RangeOracle<X> + ?Sized> RangeOracle<X> for Metered<'_, O> {
    fn range_feasible(&self, queries: &[RangeQuery<X>]) -> Result<bool> {
        for q in queries {
            if q.lower > q.upper || q.lower < Rational::zero() || q.upper > Rational::one() {
                return Err(contract(format!("bad interval [{}, {}]", q.lower, q.upper)));
            }
        }
        self.ledger.record(queries.len());
        self.inner.range_feasible(queries)
    }
}

impl<X, Y: Label, O: StrongErmOracle<X, Y> + ?Sized> StrongErmOracle<X, Y> for Metered<'_, O> {
    fn argmin(&self, sample: &[Example<X, Y>]) -> Result<usize> {
        if sample.is_empty() {
            return Err(contract("ERM query on an empty sample"));
        }
        reject_stars(sample)?;
        self.ledger.record(sample.len());
        self.inner.argmin(sample)
    }
}

fn missing<X, Y, C: ConceptClass<X, Y> + ?Sized>(class: &C, oracle: OracleKind) -> Error {
    Error::Capability { class: class.name(), oracle }
}

/// Metered consistency access, or a capability error.
pub fn consistency<'a, X, Y, C: ConceptClass<X, Y> + ?Sized>(
    class: &'a C,
    ledger: &'a QueryLedger,
) -> Result<Metered<'a, dyn ConsistencyOracle<X, Y> + 'a>> {
    let o = class.consistency_oracle().ok_or_else(|| missing(class, OracleKind::Consistency))?;
    Ok(Metered::new(o, ledger))
}

pub fn weak_erm<'a, X, Y, C: ConceptClass<X, Y> + ?Sized>(
    class: &'a C,
    ledger: &'a QueryLedger,
) -> Result<Metered<'a, dyn WeakErmOracle<X, Y> + 'a>> {
    let o = class.weak_erm_oracle().ok_or_else(|| missing(class, OracleKind::WeakErm))?;
    Ok(Metered::new(o, ledger))
}

pub fn range<'a, X, Y, C: ConceptClass<X, Y> + ?Sized>(
    class: &'a C,
    ledger: &'a QueryLedger,
) -> Result<Metered<'a, dyn RangeOracle<X> + 'a>> {
    let o = class.range_oracle().ok_or_else(|| missing(class, OracleKind::RangeConsistency))?;
    Ok(Metered::new(o, ledger))
}

pub fn strong_erm<'a, X, Y, C: ConceptClass<X, Y> + ?Sized>(
    class: &'a C,
    ledger: &'a QueryLedger,
) -> Result<Metered<'a, dyn StrongErmOracle<X, Y> + 'a>> {
    let o = class.strong_erm_oracle().ok_or_else(|| missing(class, OracleKind::StrongErm))?;
    Ok(Metered::new(o, ledger))
}

pub fn query_consistency<X, Y: Label, C: ConceptClass<X, Y> + ?Sized>(
    class: &C,
    sample: &[Example<X, Y>],
    ledger: &QueryLedger,
) -> Result<bool> {
    consistency(class, ledger)?.is_realizable(sample)
}

pub fn query_weak_erm<X, Y: Label, C: ConceptClass<X, Y> + ?Sized>(
    class: &C,
    sample: &[Example<X, Y>],
    ledger: &QueryLedger,
) -> Result<Rational> {
    weak_erm(class, ledger)?.min_error(sample)
}

pub fn query_range<X, Y, C: ConceptClass<X, Y> + ?Sized>(
    class: &C,
    queries: &[RangeQuery<X>],
    ledger: &QueryLedger,
) -> Result<bool> {
    range(class, ledger)?.range_feasible(queries)
}

pub fn query_strong_erm<X, Y: Label, C: ConceptClass<X, Y> + ?Sized>(
    class: &C,
    sample: &[Example<X, Y>],
    ledger: &QueryLedger,
) -> Result<usize> {
    strong_erm(class, ledger)?.argmin(sample)
}
