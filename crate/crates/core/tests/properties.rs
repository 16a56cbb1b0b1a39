//! Cross-module properties on random small instances, checked against enumeration.

use num_traits::{Signed, Zero};
use proptest::prelude::*;

use oig_learn::brute::{
    brute_consistency, brute_erm, brute_range, exact_transductive_audit, sauer_shelah_holds, truncated_flip_potential,
};
use oig_learn::classes::{FiniteTableClass, MarginThresholdClass};
use oig_learn::data::{empirical_error, loss_abs, loss_bin};
use oig_learn::ermred::{sample_con_real, sample_erm_binary, sample_erm_real};
use oig_learn::harness::{run_experiment, ExperimentConfig, RunOptions};
use oig_learn::oig::{estimate_potential, lazy_discount, Vertex, VertexSet, WalkParams};
use oig_learn::oracle::{self, ConsistencyOracle, QueryLedger, RangeQuery, WeakErmOracle};
use oig_learn::rng::RandomStream;
use oig_learn::weak::{PotentialMode, WeakParams, WeakRealizable};
use oig_learn::{BinaryLabel, Example, Label, MulticlassLabel, Rational, RealLabel};

const DOMAIN: usize = 6;

fn binary_label(code: u8) -> BinaryLabel {
    match code {
        0 => BinaryLabel::Zero,
        1 => BinaryLabel::One,
        _ => BinaryLabel::Star,
    }
}

fn dedup<T: PartialEq>(rows: Vec<T>) -> Vec<T> {
    let mut out = Vec::new();
    for row in rows {
        if !out.contains(&row) {
            out.push(row);
        }
    }
    out
}

fn binary_class() -> impl Strategy<Value = FiniteTableClass<BinaryLabel>> {
    prop::collection::vec(prop::collection::vec(0u8..3, DOMAIN), 1..=8).prop_map(|rows| {
        let rows = rows.into_iter().map(|r| r.into_iter().map(binary_label).collect()).collect();
        FiniteTableClass::new("random", dedup(rows)).unwrap()
    })
}

fn binary_sample(max: usize) -> impl Strategy<Value = Vec<Example<usize, BinaryLabel>>> {
    prop::collection::vec((0..DOMAIN, any::<bool>()), 1..=max)
        .prop_map(|v| v.into_iter().map(|(x, b)| (x, BinaryLabel::from_bit(b))).collect())
}

fn multiclass_class() -> impl Strategy<Value = FiniteTableClass<MulticlassLabel>> {
    prop::collection::vec(prop::collection::vec(1u32..=3, DOMAIN), 1..=8).prop_map(|rows| {
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|v| MulticlassLabel::new(v, 3).unwrap()).collect())
            .collect();
        FiniteTableClass::new("random", dedup(rows)).unwrap()
    })
}

fn real_class() -> impl Strategy<Value = FiniteTableClass<RealLabel>> {
    prop::collection::vec(prop::collection::vec(0i64..=8, DOMAIN), 1..=8).prop_map(|rows| {
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|v| RealLabel::new(Rational::new(v, 8)).unwrap()).collect())
            .collect();
        FiniteTableClass::new("random", dedup(rows)).unwrap()
    })
}

fn vertex_set(m: usize) -> impl Strategy<Value = VertexSet> {
    prop::collection::btree_set(0..1u64 << m, 1..=(1usize << m)).prop_map(move |s| VertexSet::from_indices(m, s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn binary_loss_is_symmetric(a in 0u8..3, b in 0u8..2) {
        let (a, b) = (binary_label(a), binary_label(b));
        if a != BinaryLabel::Star {
            prop_assert_eq!(loss_bin(a, b), loss_bin(b, a));
        }
    }

    #[test]
    fn absolute_loss_triangle(a in 0i64..=60, b in 0i64..=60, c in 0i64..=60) {
        let (a, b, c) = (Rational::new(a, 60), Rational::new(b, 60), Rational::new(c, 60));
        prop_assert!(loss_abs(a, c) <= loss_abs(a, b) + loss_abs(b, c));
    }

    #[test]
    fn empirical_error_lies_on_the_grid(sample in binary_sample(10), flip in prop::collection::vec(any::<bool>(), DOMAIN)) {
        let e = empirical_error(&sample, |x| BinaryLabel::from_bit(flip[*x])).unwrap();
        prop_assert!(e >= Rational::zero() && e <= Rational::from_integer(1));
        prop_assert!((e * sample.len() as i64).is_integer());
    }

    #[test]
    fn consistency_is_zero_minimum_error(class in binary_class(), sample in binary_sample(8)) {
        let ledger = QueryLedger::new();
        let con = oracle::query_consistency(&class, &sample, &ledger).unwrap();
        let erm = oracle::query_weak_erm(&class, &sample, &ledger).unwrap();
        prop_assert_eq!(con, erm.is_zero());
    }

    #[test]
    fn ledger_adds_input_sizes(class in binary_class(), samples in prop::collection::vec(binary_sample(8), 1..6)) {
        let ledger = QueryLedger::new();
        let o = oracle::consistency(&class, &ledger).unwrap();
        for s in &samples {
            o.is_realizable(s).unwrap();
        }
        prop_assert_eq!(ledger.calls(), samples.len() as u64);
        prop_assert_eq!(ledger.cost(), samples.iter().map(|s| s.len() as u64).sum::<u64>());
    }

    #[test]
    fn appending_never_restores_consistency(class in binary_class(), sample in binary_sample(8), extra in binary_sample(4)) {
        let before = class.is_realizable(&sample).unwrap();
        let mut longer = sample.clone();
        longer.extend(extra);
        prop_assert!(before || !class.is_realizable(&longer).unwrap());
    }

    #[test]
    fn table_oracles_match_enumeration(class in binary_class(), sample in binary_sample(8)) {
        prop_assert_eq!(class.is_realizable(&sample).unwrap(), brute_consistency(&class, &sample));
        prop_assert_eq!(class.min_error(&sample).unwrap(), brute_erm(&class, &sample).unwrap().0);
    }

    #[test]
    fn multiclass_oracles_match_enumeration(class in multiclass_class(), raw in prop::collection::vec((0..DOMAIN, 1u32..=3), 1..=8)) {
        let sample: Vec<_> = raw.into_iter().map(|(x, v)| (x, MulticlassLabel::new(v, 3).unwrap())).collect();
        prop_assert_eq!(class.is_realizable(&sample).unwrap(), brute_consistency(&class, &sample));
        prop_assert_eq!(class.min_error(&sample).unwrap(), brute_erm(&class, &sample).unwrap().0);
    }

    #[test]
    fn range_oracles_match_enumeration(class in real_class(), raw in prop::collection::vec((0..DOMAIN, 0i64..=8, 0i64..=8), 1..=5)) {
        let queries: Vec<_> = raw
            .into_iter()
            .map(|(x, a, b)| RangeQuery::new(x, Rational::new(a.min(b), 8), Rational::new(a.max(b), 8)))
            .collect();
        let ledger = QueryLedger::new();
        let direct = oracle::query_range(&class, &queries, &ledger).unwrap();
        let via_erm = sample_con_real(&queries, &class).unwrap();
        prop_assert_eq!(direct, brute_range(&class, &queries));
        prop_assert_eq!(via_erm, direct);
    }

    #[test]
    fn sample_erm_binary_keeps_a_realizable_core(class in multiclass_class(), raw in prop::collection::vec((0..DOMAIN, 1u32..=3), 1..=8)) {
        let sample: Vec<_> = raw.into_iter().map(|(x, v)| (x, MulticlassLabel::new(v, 3).unwrap())).collect();
        let ledger = QueryLedger::new();
        let z = sample_erm_binary(&sample, &oracle::weak_erm(&class, &ledger).unwrap()).unwrap();
        let n = sample.len();
        prop_assert!(ledger.calls() <= 2 * (n * n) as u64);
        let kept: Vec<_> = sample.iter().zip(&z).filter(|(_, &d)| !d).map(|(e, _)| *e).collect();
        prop_assert!(kept.is_empty() || brute_consistency(&class, &kept));
        let (opt, argmins) = brute_erm(&class, &sample).unwrap();
        prop_assert_eq!(Rational::from_integer(z.iter().filter(|&&d| d).count() as i64), opt * n as i64);
        let matches = argmins.iter().any(|&h| {
            sample.iter().zip(&z).all(|((x, y), &d)| (class.table()[h][*x] != *y) == d)
        });
        prop_assert!(matches);
    }

    #[test]
    fn sample_erm_real_brackets_a_minimizer(class in real_class(), raw in prop::collection::vec((0..DOMAIN, 0i64..=16), 1..=6), grid in 2u32..=6) {
        let sample: Vec<_> = raw.into_iter().map(|(x, v)| (x, RealLabel::new(Rational::new(v, 16)).unwrap())).collect();
        let ledger = QueryLedger::new();
        let lows = sample_erm_real(&sample, grid, &oracle::weak_erm(&class, &ledger).unwrap()).unwrap();
        prop_assert_eq!(ledger.calls(), sample.len() as u64 * u64::from(grid));
        let width = Rational::new(1, i64::from(grid));
        let (_, argmins) = brute_erm(&class, &sample).unwrap();
        let bracketed = argmins.iter().any(|&h| {
            sample.iter().zip(&lows).all(|((x, _), &lo)| {
                let v = class.table()[h][*x].value();
                lo <= v && v <= lo + width
            })
        });
        prop_assert!(bracketed);
    }

    #[test]
    fn sauer_shelah_on_random_tables(class in binary_class()) {
        prop_assert!(sauer_shelah_holds(&class, &class.domain()).unwrap());
    }

    #[test]
    fn potentials_are_probabilities(w in vertex_set(4), start in 0u64..16, gamma in 0.3f64..0.99, seed in any::<u64>()) {
        let v = Vertex::from_index(4, start);
        let params = WalkParams::new(gamma, 200).unwrap();
        let mut set = w.clone();
        let est = estimate_potential(&v, &mut set, &params, &mut RandomStream::new(seed)).unwrap();
        prop_assert!((0.0..=1.0).contains(&est));
        prop_assert_eq!(est == 1.0, !w.has(&v));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn margin_oracles_match_enumeration(
        raw in prop::collection::vec((0i64..=40, any::<bool>()), 1..=8),
        margin in 1i64..=4,
    ) {
        let class = MarginThresholdClass::grid(Rational::zero(), Rational::new(1, 10), 11, Rational::new(margin, 40)).unwrap();
        let sample: Vec<_> = raw.into_iter().map(|(x, b)| (Rational::new(x, 40), BinaryLabel::from_bit(b))).collect();
        prop_assert_eq!(class.is_realizable(&sample).unwrap(), brute_consistency(&class, &sample));
        prop_assert_eq!(class.min_error(&sample).unwrap(), brute_erm(&class, &sample).unwrap().0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn monte_carlo_within_four_standard_errors(w in vertex_set(5), pick in any::<prop::sample::Index>(), gamma in 0.5f64..0.95, seed in any::<u64>()) {
        let start = w.sorted()[pick.index(w.len())].clone();
        let params = WalkParams::new(gamma, 100_000).unwrap();
        let exact = truncated_flip_potential(&w, &start, gamma, params.horizon);
        let mut set = w.clone();
        let est = estimate_potential(&start, &mut set, &params, &mut RandomStream::new(seed)).unwrap();
        prop_assert!((est - exact).abs() <= 4.0 * (1.0 / 400_000f64).sqrt(), "{} vs {}", est, exact);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The audit's out-degree equals the summed leave-one-out error
    /// probabilities of the learner running on exact potentials.
    #[test]
    fn audit_matches_exact_weak_learner(class in binary_class(), target in any::<prop::sample::Index>(), gamma in 0.5f64..0.99) {
        let h = target.index(class.table().len());
        let sample: Vec<_> = (0..DOMAIN)
            .filter(|&x| class.table()[h][x] != BinaryLabel::Star)
            .map(|x| (x, class.table()[h][x]))
            .collect();
        prop_assume!(sample.len() >= 2);
        let m = sample.len();
        let mut params = WeakParams::defaults(m, 1.0).unwrap().with_mode(PotentialMode::Exact);
        params.walk = WalkParams::with_horizon(gamma, params.walk.horizon, 1).unwrap();
        let learner = WeakRealizable::new(&class, params);
        let stream = RandomStream::new(3);
        let mut expected = 0.0;
        for i in 0..m {
            let mut rest = sample.clone();
            let (x, y) = rest.remove(i);
            let p = learner.predict_detailed(&rest, &x, &stream).unwrap().prob_one;
            expected += if y == BinaryLabel::One { 1.0 - p } else { p };
        }
        let audit = exact_transductive_audit(&class, &sample, lazy_discount(gamma), 1.0).unwrap();
        prop_assert!((audit.out_degree - expected).abs() < 1e-9, "{} vs {}", audit.out_degree, expected);
        prop_assert!((audit.out_degree - m as f64 * audit.loo_error).abs() < 1e-12);
        prop_assert!(audit.slack >= -1e-9);
    }

    #[test]
    fn weak_prediction_is_reproducible(class in binary_class(), sample in binary_sample(5), x in 0..DOMAIN, seed in any::<u64>()) {
        prop_assume!(class.is_realizable(&sample).unwrap());
        let mut params = WeakParams::defaults(sample.len() + 1, 1.0).unwrap();
        params.walk = WalkParams::with_horizon(params.walk.gamma, params.walk.horizon, 50).unwrap();
        let learner = WeakRealizable::new(&class, params);
        let stream = RandomStream::new(seed);
        let a = learner.predict_detailed(&sample, &x, &stream).unwrap();
        let b = learner.predict_detailed(&sample, &x, &stream).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn reweighting_normalizes(weights in prop::collection::vec(0.01f64..1.0, 1..20), wrong_bits in any::<u32>(), alpha in -2.0f64..2.0) {
        let total: f64 = weights.iter().sum();
        let d: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let wrong: Vec<bool> = (0..d.len()).map(|i| wrong_bits >> i & 1 == 1).collect();
        let (next, _) = oig_learn::boost::reweight(&d, &wrong, alpha);
        prop_assert!((next.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

fn random_config(rows: &[String], labels: &[u8], pipeline: &str, seed: u64) -> String {
    format!(
        r#"
pipeline = "{pipeline}"
seed = {seed}
trials = 2
n = 8
m = 4
rollouts = 40

[class]
kind = "finite_table"
table = [{}]

[distribution]
points = [{}]
labels = [{}]
"#,
        rows.iter().map(|r| format!("\"{r}\"")).collect::<Vec<_>>().join(", "),
        (0..labels.len()).map(|i| i.to_string()).collect::<Vec<_>>().join(", "),
        labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", "),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Runs on random configurations repeat exactly, and the held-out error is
    /// consistent with the support weights.
    #[test]
    fn experiments_repeat_exactly(
        rows in prop::collection::btree_set(prop::collection::vec(0u8..3, 5), 1..6),
        labels in prop::collection::vec(0u8..2, 5),
        agnostic in any::<bool>(),
        seed in 0..i64::MAX as u64,
    ) {
        let rows: Vec<String> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|c| ['0', '1', '*'][c as usize]).collect())
            .collect();
        let pipeline = if agnostic { "agnostic_partial" } else { "realizable_partial" };
        let cfg = ExperimentConfig::from_toml(&random_config(&rows, &labels, pipeline, seed)).unwrap();
        let one = run_experiment(&cfg, &RunOptions { threads: 1, timing: false });
        let two = run_experiment(&cfg, &RunOptions { threads: 2, timing: false });
        match (one, two) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(&a, &b);
                for r in &a {
                    prop_assert!((r.test_err * 5.0 - (r.test_err * 5.0).round()).abs() < 1e-9);
                }
            }
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            _ => prop_assert!(false, "one run failed and the other did not"),
        }
    }
}

#[test]
fn truncated_potential_is_one_off_the_set() {
    let w = VertexSet::from_indices(3, [0, 1]).unwrap();
    assert_eq!(truncated_flip_potential(&w, &Vertex::from_index(3, 7), 0.9, 10), 1.0);
    assert!(truncated_flip_potential(&w, &Vertex::from_index(3, 0), 0.9, 10).abs() < 1.0);
}

#[test]
fn multiclass_losses_in_erm_ties() {
    let a = MulticlassLabel::new(2, 3).unwrap();
    let b = MulticlassLabel::new(3, 3).unwrap();
    assert_eq!(a.loss(&b), Rational::from_integer(1));
    assert!(a.loss(&a).is_zero());
    assert!(!Rational::new(-1, 2).is_positive());
}
