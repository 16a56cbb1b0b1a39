//! Brute-force cross-checks of the analytic oracles and reductions on small random instances.

use num_traits::Zero;
use rand::Rng;

use crate::brute::{brute_consistency, brute_erm, exact_transductive_audit};
use crate::classes::{FiniteTableClass, HPrimeClass, MarginThresholdClass};
use crate::data::{BinaryLabel, Example, Label, Rational};
use crate::ermred::sample_erm_binary;
use crate::error::Result;
use crate::oig::{GeneratingFunction, VertexSet};
use crate::oracle::{ConsistencyOracle, WeakErmOracle};
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn random_table(rng: &mut RandomStream, domain: usize, max_rows: usize) -> FiniteTableClass<BinaryLabel> {
    let rows = rng.gen_range(1..=max_rows);
    let mut table: Vec<Vec<BinaryLabel>> = Vec::new();
    while table.len() < rows {
        let row: Vec<BinaryLabel> = (0..domain)
            .map(|_| match rng.gen_range(0..5) {
                0 => BinaryLabel::Star,
                1 | 2 => BinaryLabel::Zero,
                _ => BinaryLabel::One,
            })
            .collect();
        if !table.contains(&row) {
            table.push(row);
        }
    }
    FiniteTableClass::new("random", table).expect("distinct rows")
}

fn random_sample(rng: &mut RandomStream, domain: usize, len: usize) -> Vec<Example<usize, BinaryLabel>> {
    (0..len)
        .map(|_| (rng.gen_range(0..domain), BinaryLabel::from_bit(rng.gen_bool(0.5))))
        .collect()
}

fn table_oracles(stream: &RandomStream, cases: usize) -> Result<Check> {
    let mut rng = stream.child(0);
    let mut failures = 0;
    for _ in 0..cases {
        let class = random_table(&mut rng, 6, 12);
        let len = rng.gen_range(1..=6);
        let s = random_sample(&mut rng, 6, len);
        let (opt, _) = brute_erm(&class, &s)?;
        if class.is_realizable(&s)? != brute_consistency(&class, &s) || class.min_error(&s)? != opt {
            failures += 1;
        }
    }
    Ok(Check { name: "finite table oracles", cases, failures })
}

fn margin_oracles(stream: &RandomStream, cases: usize) -> Result<Check> {
    let mut rng = stream.child(1);
    let class = MarginThresholdClass::grid(Rational::zero(), Rational::new(1, 10), 11, Rational::new(1, 20))?;
    let mut failures = 0;
    for _ in 0..cases {
        let len = rng.gen_range(1..=6);
        let s: Vec<_> = (0..len)
            .map(|_| (Rational::new(rng.gen_range(0..=40), 40), BinaryLabel::from_bit(rng.gen_bool(0.5))))
            .collect();
        let (opt, _) = brute_erm(&class, &s)?;
        if class.is_realizable(&s)? != brute_consistency(&class, &s) || class.min_error(&s)? != opt {
            failures += 1;
        }
    }
    Ok(Check { name: "margin threshold oracles", cases, failures })
}

fn hprime_oracle(stream: &RandomStream, cases: usize) -> Result<Check> {
    let mut rng = stream.child(2);
    let (lo, hi) = (2, 40);
    let window = HPrimeClass::window_table(lo, hi)?;
    let class = HPrimeClass::new(1 << 20)?;
    let mut failures = 0;
    for _ in 0..cases {
        let len = rng.gen_range(1..=4);
        let s: Vec<_> = (0..len)
            .map(|_| (rng.gen_range(lo..=hi), BinaryLabel::from_bit(rng.gen_bool(0.5))))
            .collect();
        let shifted: Vec<_> = s.iter().map(|&(x, y)| ((x - lo) as usize, y)).collect();
        if class.is_realizable(&s)? != brute_consistency(&window, &shifted) {
            failures += 1;
        }
    }
    Ok(Check { name: "hprime consistency", cases, failures })
}

fn sample_erm(stream: &RandomStream, cases: usize) -> Result<Check> {
    let mut rng = stream.child(3);
    let mut failures = 0;
    for _ in 0..cases {
        let class = random_table(&mut rng, 5, 10);
        let len = rng.gen_range(1..=6);
        let s = random_sample(&mut rng, 5, len);
        let z = sample_erm_binary(&s, &class)?;
        let (_, argmins) = brute_erm(&class, &s)?;
        let matches = argmins.iter().any(|&h| {
            s.iter().zip(&z).all(|((x, y), &dropped)| {
                let wrong = !y.loss(&class.table()[h][*x]).is_zero();
                wrong == dropped
            })
        });
        if !matches {
            failures += 1;
        }
    }
    Ok(Check { name: "sample erm recovery", cases, failures })
}

fn potentials(stream: &RandomStream, cases: usize) -> Result<Check> {
    let mut rng = stream.child(4);
    let mut failures = 0;
    for _ in 0..cases {
        let m = rng.gen_range(1..=7);
        let size = rng.gen_range(1..=(1usize << m));
        let indices: Vec<u64> = (0..size).map(|_| rng.gen_range(0..1u64 << m)).collect();
        let w = VertexSet::from_indices(m, indices)?;
        let gf = GeneratingFunction::solve(&w, rng.gen_range(0.3..0.99))?;
        if gf.residual() > 1e-10 {
            failures += 1;
        }
    }
    Ok(Check { name: "potential recursion", cases, failures })
}

fn audits(stream: &RandomStream, cases: usize) -> Result<Check> {
    let mut rng = stream.child(5);
    let mut failures = 0;
    for _ in 0..cases {
        let class = random_table(&mut rng, 8, 20);
        let h = rng.gen_range(0..class.table().len());
        let points: Vec<usize> = (0..8).filter(|&x| class.table()[h][x] != BinaryLabel::Star).collect();
        if points.is_empty() {
            continue;
        }
        let s: Vec<_> = points.iter().map(|&x| (x, class.table()[h][x])).collect();
        let audit = exact_transductive_audit(&class, &s, rng.gen_range(0.5..0.99), 1.0)?;
        if audit.slack < -1e-9 {
            failures += 1;
        }
    }
    Ok(Check { name: "out-degree audit", cases, failures })
}

/// Runs the whole suite; the seed fixes every instance.
pub fn selftest(seed: u64) -> Result<Vec<Check>> {
    let stream = RandomStream::new(seed);
    Ok(vec![
        table_oracles(&stream, 300)?,
        margin_oracles(&stream, 300)?,
        hprime_oracle(&stream, 300)?,
        sample_erm(&stream, 200)?,
        potentials(&stream, 100)?,
        audits(&stream, 50)?,
    ])
}
