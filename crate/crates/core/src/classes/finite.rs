use num_traits::Zero;

use super::Enumerable;
use crate::data::{BinaryLabel, Example, Label, MulticlassLabel, Rational, RealLabel};
use crate::error::{contract, Result};
use crate::oracle::{
    ConceptClass, ConsistencyOracle, RangeOracle, RangeQuery, StrongErmOracle, WeakErmOracle,
};

/// An explicit table of hypotheses over the domain `0..domain_size`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteTableClass<L> {
    name: String,
    table: Vec<Vec<L>>,
    domain_size: usize,
}

impl<L: Label> FiniteTableClass<L> {
    pub fn new(name: impl Into<String>, table: Vec<Vec<L>>) -> Result<Self> {
        let domain_size = table.first().map(Vec::len).unwrap_or(0);
        if table.is_empty() || domain_size == 0 {
            return Err(contract("finite class needs a hypothesis and a nonempty domain"));
        }
        if table.iter().any(|h| h.len() != domain_size) {
            return Err(contract("hypotheses must cover the whole domain"));
        }
        let distinct: std::collections::HashSet<&Vec<L>> = table.iter().collect();
        if distinct.len() != table.len() {
            return Err(contract("hypotheses must be distinct"));
        }
        Ok(FiniteTableClass { name: name.into(), table, domain_size })
    }

    pub fn table(&self) -> &[Vec<L>] {
        &self.table
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn domain(&self) -> Vec<usize> {
        (0..self.domain_size).collect()
    }

    fn check_point(&self, x: usize) -> Result<()> {
        if x >= self.domain_size {
            return Err(contract(format!("point {x} outside domain of size {}", self.domain_size)));
        }
        Ok(())
    }

    fn losses(&self, sample: &[Example<usize, L>]) -> Result<impl Iterator<Item = Rational> + '_> {
        for (x, _) in sample {
            self.check_point(*x)?;
        }
        let sample = sample.to_vec();
        Ok(self.table.iter().map(move |h| {
            sample.iter().fold(Rational::zero(), |acc, (x, y)| acc + y.loss(&h[*x]))
        }))
    }
}

impl FiniteTableClass<BinaryLabel> {
    /// Rows written as strings over `0`, `1` and `*`.
    pub fn from_rows(name: impl Into<String>, rows: &[&str]) -> Result<Self> {
        let table = rows
            .iter()
            .map(|row| {
                row.chars()
                    .map(|c| match c {
                        '0' => Ok(BinaryLabel::Zero),
                        '1' => Ok(BinaryLabel::One),
                        '*' => Ok(BinaryLabel::Star),
                        other => Err(contract(format!("bad table symbol `{other}`"))),
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, table)
    }
}

impl<L> Enumerable<usize, L> for FiniteTableClass<L>
where
    L: Clone,
{
    fn num_hypotheses(&self) -> usize {
        self.table.len()
    }

    fn evaluate(&self, hypothesis: usize, x: &usize) -> L {
        self.table[hypothesis][*x].clone()
    }
}

impl<L: Label> ConsistencyOracle<usize, L> for FiniteTableClass<L> {
    fn is_realizable(&self, sample: &[Example<usize, L>]) -> Result<bool> {
        for (x, _) in sample {
            self.check_point(*x)?;
        }
        Ok(self
            .table
            .iter()
            .any(|h| sample.iter().all(|(x, y)| !y.is_star() && h[*x] == *y)))
    }
}

impl<L: Label> WeakErmOracle<usize, L> for FiniteTableClass<L> {
    fn min_error(&self, sample: &[Example<usize, L>]) -> Result<Rational> {
        if sample.is_empty() {
            return Err(contract("ERM query on an empty sample"));
        }
        let best = self.losses(sample)?.min().expect("table is nonempty");
        Ok(best / sample.len() as i64)
    }
}

impl<L: Label> StrongErmOracle<usize, L> for FiniteTableClass<L> {
    fn argmin(&self, sample: &[Example<usize, L>]) -> Result<usize> {
        let losses: Vec<Rational> = self.losses(sample)?.collect();
        let best = losses.iter().min().expect("table is nonempty");
        Ok(losses.iter().position(|l| l == best).expect("minimum is attained"))
    }
}

impl RangeOracle<usize> for FiniteTableClass<RealLabel> {
    fn range_feasible(&self, queries: &[RangeQuery<usize>]) -> Result<bool> {
        for q in queries {
            self.check_point(q.x)?;
        }
        Ok(self.table.iter().any(|h| {
            queries
                .iter()
                .all(|q| q.lower <= h[q.x].value() && h[q.x].value() <= q.upper)
        }))
    }
}

/// Label types a table class can hold; real tables additionally answer range queries.
pub trait TableLabel: Label + Sized + 'static {
    fn range_of(class: &FiniteTableClass<Self>) -> Option<&dyn RangeOracle<usize>>;
}

impl TableLabel for BinaryLabel {
    fn range_of(_: &FiniteTableClass<Self>) -> Option<&dyn RangeOracle<usize>> {
        None
    }
}

impl TableLabel for MulticlassLabel {
    fn range_of(_: &FiniteTableClass<Self>) -> Option<&dyn RangeOracle<usize>> {
        None
    }
}

impl TableLabel for RealLabel {
    fn range_of(class: &FiniteTableClass<Self>) -> Option<&dyn RangeOracle<usize>> {
        Some(class)
    }
}

impl<L: TableLabel> ConceptClass<usize, L> for FiniteTableClass<L> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn consistency_oracle(&self) -> Option<&dyn ConsistencyOracle<usize, L>> {
        Some(self)
    }

    fn weak_erm_oracle(&self) -> Option<&dyn WeakErmOracle<usize, L>> {
        Some(self)
    }

    fn range_oracle(&self) -> Option<&dyn RangeOracle<usize>> {
        L::range_of(self)
    }

    fn strong_erm_oracle(&self) -> Option<&dyn StrongErmOracle<usize, L>> {
        Some(self)
    }
}
