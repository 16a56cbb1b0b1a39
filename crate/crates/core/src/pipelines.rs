//! End-to-end learners for partial binary, multiclass and real-valued classes.

use std::hash::Hash;

use num_traits::{One, Zero};

use crate::boost::{adaboost_train, default_eta, rounds_for, BoostParams, BoostedModel};
use crate::data::{BinaryLabel, Example, MulticlassLabel, Rational, RealLabel};
use crate::error::{contract, Result};
use crate::ermred::{sample_erm_binary, sample_erm_real, ErmRange};
use crate::oig::WalkParams;
use crate::oracle::{ConsistencyOracle, RangeOracle, RangeQuery, WeakErmOracle};
use crate::rng::RandomStream;
use crate::weak::{PotentialMode, WeakParams, WeakRealizable};

/// Settings shared by every pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineParams {
    /// Size of each resampled weak-learner training set.
    pub weak_sample_size: usize,
    pub c1: f64,
    /// Defaults to `1 / (m ln m)` for `m = weak_sample_size`.
    pub eta: Option<f64>,
    pub delta: f64,
    /// Upper limit on boosting rounds, applied after the formula.
    pub max_rounds: Option<usize>,
    pub mode: PotentialMode,
    pub memoize: bool,
    /// Replaces the default rollout count when set.
    pub trials: Option<usize>,
}

impl PipelineParams {
    pub fn new(weak_sample_size: usize, c1: f64, delta: f64) -> Self {
        PipelineParams {
            weak_sample_size,
            c1,
            eta: None,
            delta,
            max_rounds: None,
            mode: PotentialMode::MonteCarlo,
            memoize: true,
            trials: None,
        }
    }

    /// The weak learner sees `m` examples plus the query point.
    pub fn weak_params(&self) -> Result<WeakParams> {
        let mut p = WeakParams::defaults(self.weak_sample_size + 1, self.c1)?
            .with_mode(self.mode)
            .with_memoize(self.memoize);
        if let Some(trials) = self.trials {
            p.walk = WalkParams::with_horizon(p.walk.gamma, p.walk.horizon, trials)?;
        }
        Ok(p)
    }

    pub fn eta(&self) -> Result<f64> {
        match self.eta {
            Some(e) => Ok(e),
            None => default_eta(self.weak_sample_size),
        }
    }

    fn boost_params(&self, n: usize, factor: f64) -> Result<BoostParams> {
        let mut rounds = rounds_for(n, factor, self.eta()?, self.delta)?;
        if let Some(cap) = self.max_rounds {
            rounds = rounds.min(cap);
        }
        Ok(BoostParams { weak_sample_size: self.weak_sample_size, rounds })
    }
}

/// A boosted vote of weak-learner replays over a partial binary class.
#[derive(Debug, Clone)]
pub struct PartialModel<X, O> {
    learner: WeakRealizable<O>,
    boosted: Option<BoostedModel<X>>,
}

impl<X: Clone + Eq + Hash, O: ConsistencyOracle<X, BinaryLabel>> PartialModel<X, O> {
    pub fn predict(&self, x: &X) -> Result<BinaryLabel> {
        match &self.boosted {
            Some(model) => model.predict(&self.learner, x),
            None => Ok(BinaryLabel::One),
        }
    }

    pub fn boosted(&self) -> Option<&BoostedModel<X>> {
        self.boosted.as_ref()
    }

    pub fn learner(&self) -> &WeakRealizable<O> {
        &self.learner
    }

    fn fit(sample: &[Example<X, BinaryLabel>], oracle: O, params: &PipelineParams, boost: BoostParams, stream: &RandomStream) -> Result<Self> {
        let learner = WeakRealizable::new(oracle, params.weak_params()?);
        let boosted = if sample.is_empty() {
            None
        } else {
            Some(adaboost_train(sample, &learner, &boost, stream)?)
        };
        Ok(PartialModel { learner, boosted })
    }
}

/// Boosting on a realizable sample with `T = ceil(16 ln(4n/delta)/eta^2)`.
pub fn train_realizable_partial<X, O>(
    sample: &[Example<X, BinaryLabel>],
    oracle: O,
    params: &PipelineParams,
    stream: &RandomStream,
) -> Result<PartialModel<X, O>>
where
    X: Clone + Eq + Hash,
    O: ConsistencyOracle<X, BinaryLabel>,
{
    let boost = params.boost_params(sample.len().max(1), 4.0)?;
    PartialModel::fit(sample, oracle, params, boost, stream)
}

/// Drops a minimum set of points so the rest is realizable, then boosts with
/// `T = ceil(16 ln(6n/delta)/eta^2)`.
pub fn train_agnostic_partial<X, O, E>(
    sample: &[Example<X, BinaryLabel>],
    erm: &E,
    oracle: O,
    params: &PipelineParams,
    stream: &RandomStream,
) -> Result<PartialModel<X, O>>
where
    X: Clone + Eq + Hash,
    O: ConsistencyOracle<X, BinaryLabel>,
    E: WeakErmOracle<X, BinaryLabel> + ?Sized,
{
    let removed = sample_erm_binary(sample, erm)?;
    let kept: Vec<_> = sample.iter().zip(&removed).filter(|(_, &z)| !z).map(|(e, _)| e.clone()).collect();
    let boost = params.boost_params(sample.len().max(1), 6.0)?;
    PartialModel::fit(&kept, oracle, params, boost, stream)
}

/// An ordered pair of distinct labels `(first, second)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Menu {
    pub first: u32,
    pub second: u32,
}

impl Menu {
    pub fn new(first: u32, second: u32) -> Result<Self> {
        if first == second {
            return Err(contract(format!("menu needs two distinct labels, got ({first}, {first})")));
        }
        Ok(Menu { first, second })
    }
}

/// 0 if the value is the menu's first label, 1 if its second, undefined otherwise.
pub fn menu_project(value: MulticlassLabel, menu: Menu) -> BinaryLabel {
    if value.value() == menu.first {
        BinaryLabel::Zero
    } else if value.value() == menu.second {
        BinaryLabel::One
    } else {
        BinaryLabel::Star
    }
}

/// Consistency for the menu class through one call to the base oracle.
#[derive(Debug, Clone)]
pub struct MenuOracle<O> {
    base: O,
    classes: u32,
}

impl<O> MenuOracle<O> {
    pub fn new(base: O, classes: u32) -> Self {
        MenuOracle { base, classes }
    }
}

impl<X: Clone, O: ConsistencyOracle<X, MulticlassLabel>> ConsistencyOracle<(X, Menu), BinaryLabel> for MenuOracle<O> {
    fn is_realizable(&self, sample: &[Example<(X, Menu), BinaryLabel>]) -> Result<bool> {
        let translated = sample
            .iter()
            .map(|((x, menu), b)| {
                let value = match b {
                    BinaryLabel::Zero => menu.first,
                    BinaryLabel::One => menu.second,
                    BinaryLabel::Star => return Err(contract("menu queries need defined labels")),
                };
                Ok((x.clone(), MulticlassLabel::new(value, self.classes)?))
            })
            .collect::<Result<Vec<_>>>()?;
        self.base.is_realizable(&translated)
    }
}

/// The unique `k` with `J(x, (k, l)) = 0` and `J(x, (l, k)) = 1` for all
/// `l != k`, or 1 when there is none.
pub fn decode_multiclass<X>(
    mut j: impl FnMut(&X, Menu) -> Result<BinaryLabel>,
    x: &X,
    classes: u32,
) -> Result<MulticlassLabel> {
    if classes < 2 {
        return Err(contract("decoding needs K >= 2"));
    }
    'candidate: for k in 1..=classes {
        for l in (1..=classes).filter(|&l| l != k) {
            if j(x, Menu { first: k, second: l })? != BinaryLabel::Zero
                || j(x, Menu { first: l, second: k })? != BinaryLabel::One
            {
                continue 'candidate;
            }
        }
        return MulticlassLabel::new(k, classes);
    }
    MulticlassLabel::new(1, classes)
}

/// The `2n(K-1)` menu examples encoding a multiclass sample.
pub fn menu_sample<X: Clone>(sample: &[Example<X, MulticlassLabel>]) -> Result<(Vec<Example<(X, Menu), BinaryLabel>>, u32)> {
    let classes = sample.first().map(|(_, y)| y.classes()).ok_or_else(|| contract("empty multiclass sample"))?;
    if sample.iter().any(|(_, y)| y.classes() != classes) {
        return Err(contract("labels disagree on K"));
    }
    let mut out = Vec::with_capacity(2 * sample.len() * (classes as usize - 1));
    for (x, y) in sample {
        for l in (1..=classes).filter(|&l| l != y.value()) {
            out.push(((x.clone(), Menu { first: y.value(), second: l }), BinaryLabel::Zero));
        }
    }
    for (x, y) in sample {
        for l in (1..=classes).filter(|&l| l != y.value()) {
            out.push(((x.clone(), Menu { first: l, second: y.value() }), BinaryLabel::One));
        }
    }
    Ok((out, classes))
}

#[derive(Debug, Clone)]
pub struct MulticlassModel<X, O> {
    menu: PartialModel<(X, Menu), MenuOracle<O>>,
    classes: u32,
}

impl<X: Clone + Eq + Hash, O: ConsistencyOracle<X, MulticlassLabel>> MulticlassModel<X, O> {
    pub fn predict(&self, x: &X) -> Result<MulticlassLabel> {
        decode_multiclass(|x, menu| self.menu.predict(&(x.clone(), menu)), x, self.classes)
    }

    pub fn menu_model(&self) -> &PartialModel<(X, Menu), MenuOracle<O>> {
        &self.menu
    }
}

/// Boosts on the menu encoding with `T = ceil(16 ln(4nK/delta)/eta^2)`.
pub fn train_multiclass_realizable<X, O>(
    sample: &[Example<X, MulticlassLabel>],
    oracle: O,
    params: &PipelineParams,
    stream: &RandomStream,
) -> Result<MulticlassModel<X, O>>
where
    X: Clone + Eq + Hash,
    O: ConsistencyOracle<X, MulticlassLabel>,
{
    let (menus, classes) = menu_sample(sample)?;
    let boost = params.boost_params(sample.len(), 4.0 * classes as f64)?;
    let menu = PartialModel::fit(&menus, MenuOracle::new(oracle, classes), params, boost, stream)?;
    Ok(MulticlassModel { menu, classes })
}

pub fn train_multiclass_agnostic<X, O, E>(
    sample: &[Example<X, MulticlassLabel>],
    erm: &E,
    oracle: O,
    params: &PipelineParams,
    stream: &RandomStream,
) -> Result<MulticlassModel<X, O>>
where
    X: Clone + Eq + Hash,
    O: ConsistencyOracle<X, MulticlassLabel>,
    E: WeakErmOracle<X, MulticlassLabel> + ?Sized,
{
    let classes = sample.first().map(|(_, y)| y.classes()).ok_or_else(|| contract("empty multiclass sample"))?;
    let removed = sample_erm_binary(sample, erm)?;
    let kept: Vec<_> = sample.iter().zip(&removed).filter(|(_, &z)| !z).map(|(e, _)| e.clone()).collect();
    if kept.is_empty() {
        let boost = params.boost_params(sample.len(), 4.0 * classes as f64)?;
        let menu = PartialModel::fit(&[], MenuOracle::new(oracle, classes), params, boost, stream)?;
        return Ok(MulticlassModel { menu, classes });
    }
    train_multiclass_realizable(&kept, oracle, params, stream)
}

/// The cuts `0, 1/G, ..., 1` of a regression grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdGrid {
    cells: u32,
}

impl ThresholdGrid {
    pub fn new(cells: u32) -> Result<Self> {
        if cells == 0 {
            return Err(contract("grid needs at least one cell"));
        }
        Ok(ThresholdGrid { cells })
    }

    pub fn cells(&self) -> u32 {
        self.cells
    }

    pub fn gamma(&self) -> Rational {
        Rational::new(1, i64::from(self.cells))
    }

    pub fn tau(&self, k: u32) -> Rational {
        self.gamma() * i64::from(k)
    }

    /// Cut indices `0..=G`.
    pub fn taus(&self) -> impl Iterator<Item = u32> {
        0..=self.cells
    }
}

/// 1 at or above `tau + gamma`, 0 at or below `tau - gamma`, undefined between.
pub fn threshold_project(value: Rational, tau: Rational, gamma: Rational) -> BinaryLabel {
    if value >= tau + gamma {
        BinaryLabel::One
    } else if value <= tau - gamma {
        BinaryLabel::Zero
    } else {
        BinaryLabel::Star
    }
}

/// Consistency for the threshold class through one range query.
#[derive(Debug, Clone)]
pub struct ThresholdOracle<R> {
    range: R,
    grid: ThresholdGrid,
}

impl<R> ThresholdOracle<R> {
    pub fn new(range: R, grid: ThresholdGrid) -> Self {
        ThresholdOracle { range, grid }
    }
}

impl<X: Clone, R: RangeOracle<X>> ConsistencyOracle<(X, u32), BinaryLabel> for ThresholdOracle<R> {
    fn is_realizable(&self, sample: &[Example<(X, u32), BinaryLabel>]) -> Result<bool> {
        let gamma = self.grid.gamma();
        let mut queries = Vec::with_capacity(sample.len());
        for ((x, k), b) in sample {
            if *k > self.grid.cells() {
                return Err(contract(format!("cut index {k} beyond the grid")));
            }
            let tau = self.grid.tau(*k);
            let (lower, upper) = match b {
                BinaryLabel::One => (tau + gamma, Rational::one()),
                BinaryLabel::Zero => (Rational::zero(), tau - gamma),
                BinaryLabel::Star => return Err(contract("threshold queries need defined labels")),
            };
            if lower > upper {
                return Ok(false);
            }
            queries.push(RangeQuery::new(x.clone(), lower, upper));
        }
        self.range.range_feasible(&queries)
    }
}

/// Threshold examples with margin `beta`: label 1 where `y >= tau + beta`,
/// 0 where `y <= tau - beta`, omitted otherwise.
pub fn threshold_sample<X: Clone>(
    sample: &[Example<X, RealLabel>],
    grid: ThresholdGrid,
    beta: Rational,
) -> Vec<Example<(X, u32), BinaryLabel>> {
    let mut out = Vec::new();
    for (x, y) in sample {
        for k in grid.taus() {
            let tau = grid.tau(k);
            if y.value() >= tau + beta {
                out.push(((x.clone(), k), BinaryLabel::One));
            } else if y.value() <= tau - beta {
                out.push(((x.clone(), k), BinaryLabel::Zero));
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct RegressionModel<X, R> {
    thresholds: PartialModel<(X, u32), ThresholdOracle<R>>,
    grid: ThresholdGrid,
}

impl<X: Clone + Eq + Hash, R: RangeOracle<X>> RegressionModel<X, R> {
    /// `gamma * #{tau : J(x, tau) = 1}`; not clamped to `[0, 1]`.
    pub fn predict(&self, x: &X) -> Result<Rational> {
        let mut ones = 0i64;
        for k in self.grid.taus() {
            if self.thresholds.predict(&(x.clone(), k))? == BinaryLabel::One {
                ones += 1;
            }
        }
        Ok(self.grid.gamma() * ones)
    }

    pub fn grid(&self) -> ThresholdGrid {
        self.grid
    }
}

/// Boosts on threshold examples with `T = ceil(16 ln(4n/delta)/eta^2)`.
pub fn train_reg_realizable<X, R>(
    sample: &[Example<X, RealLabel>],
    range: R,
    grid: ThresholdGrid,
    beta: Rational,
    params: &PipelineParams,
    stream: &RandomStream,
) -> Result<RegressionModel<X, R>>
where
    X: Clone + Eq + Hash,
    R: RangeOracle<X>,
{
    if beta < grid.gamma() {
        return Err(contract(format!("margin {beta} below the grid spacing {}", grid.gamma())));
    }
    let examples = threshold_sample(sample, grid, beta);
    let boost = params.boost_params(sample.len().max(1), 4.0)?;
    let thresholds = PartialModel::fit(&examples, ThresholdOracle::new(range, grid), params, boost, stream)?;
    Ok(RegressionModel { thresholds, grid })
}

/// Rounds labels onto a half-spacing grid with value-only ERM calls, then
/// runs the realizable learner with margin `2 gamma` and a range oracle
/// synthesized from the same ERM oracle.
pub fn train_reg_agnostic<X, E>(
    sample: &[Example<X, RealLabel>],
    erm: E,
    grid: ThresholdGrid,
    params: &PipelineParams,
    stream: &RandomStream,
) -> Result<RegressionModel<X, ErmRange<E>>>
where
    X: Clone + Eq + Hash,
    E: WeakErmOracle<X, RealLabel>,
{
    let rounded = sample_erm_real(sample, 2 * grid.cells(), &erm)?;
    let relabeled: Vec<_> = sample
        .iter()
        .zip(rounded)
        .map(|((x, _), y)| Ok((x.clone(), RealLabel::new(y)?)))
        .collect::<Result<_>>()?;
    train_reg_realizable(&relabeled, ErmRange(erm), grid, grid.gamma() * 2, params, stream)
}
