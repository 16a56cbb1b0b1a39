use std::collections::BTreeSet;

use super::primes::is_prime;
use super::FiniteTableClass;
use crate::data::{BinaryLabel, Example};
use crate::error::{contract, Result};
use crate::oracle::{ConceptClass, ConsistencyOracle};

/// Hypotheses `h_{p,q}` (one exactly on `{p, q, pq}` for primes `p, q`) and
/// point indicators `g_n` for `n` not a product of two primes.
///
/// Consistency is cheap; no ERM oracle is offered, since recovering a
/// minimizer for `{(pq, 1)}` would factor `pq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HPrimeClass {
    bound: u64,
}

impl HPrimeClass {
    pub fn new(bound: u64) -> Result<Self> {
        if bound == 0 {
            return Err(contract("bound must be positive"));
        }
        Ok(HPrimeClass { bound })
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    fn consistent(&self, sample: &[Example<u64, BinaryLabel>]) -> Result<bool> {
        let mut ones = BTreeSet::new();
        let mut zeros = BTreeSet::new();
        for (x, y) in sample {
            if *x == 0 || *x > self.bound {
                return Err(contract(format!("point {x} outside 1..={}", self.bound)));
            }
            match y {
                BinaryLabel::One => ones.insert(*x),
                BinaryLabel::Zero => zeros.insert(*x),
                BinaryLabel::Star => return Ok(false),
            };
        }
        if ones.intersection(&zeros).next().is_some() {
            return Ok(false);
        }
        if ones.is_empty() {
            return Ok(true);
        }
        if ones.len() == 1 {
            let n = *ones.first().expect("one positive");
            // Only h_{p,q} with n = pq can be ruled out, and only by a negative at p or q.
            let blocked = zeros
                .iter()
                .any(|&z| n % z == 0 && is_prime(z) && is_prime(n / z));
            return Ok(!blocked);
        }
        if ones.contains(&1) {
            return Ok(false);
        }
        let (primes, composites): (Vec<u64>, Vec<u64>) = ones.iter().partition(|&&x| is_prime(x));
        if composites.len() >= 2 || primes.len() >= 3 {
            return Ok(false);
        }
        Ok(match (primes.as_slice(), composites.as_slice()) {
            ([p, q], []) => match p.checked_mul(*q) {
                Some(m) => !zeros.contains(&m),
                None => true,
            },
            ([p, q], [m]) => p.checked_mul(*q) == Some(*m),
            ([p], [m]) => m % p == 0 && is_prime(m / p) && !zeros.contains(&(m / p)),
            _ => unreachable!("at least two positives with at most one composite"),
        })
    }

    /// Distinct restrictions of the class to `lo..=hi`, as sets of positive points.
    pub fn window_restrictions(lo: u64, hi: u64) -> Vec<BTreeSet<u64>> {
        let inside = |x: u64| lo <= x && x <= hi;
        let primes: Vec<u64> = (2..=hi).filter(|&p| is_prime(p)).collect();
        let mut sets = BTreeSet::new();
        sets.insert(BTreeSet::new());
        for (i, &p) in primes.iter().enumerate() {
            sets.insert([p].into_iter().filter(|&x| inside(x)).collect());
            for &q in &primes[i..] {
                sets.insert([p, q, p * q].into_iter().filter(|&x| inside(x)).collect());
            }
        }
        for n in lo..=hi {
            let semiprime = primes.iter().take_while(|&&p| p * p <= n).any(|&p| n % p == 0 && is_prime(n / p));
            if !semiprime {
                sets.insert([n].into_iter().collect());
            }
        }
        sets.into_iter().collect()
    }

    /// The class restricted to `lo..=hi` as a table; domain index `i` is the integer `lo + i`.
    pub fn window_table(lo: u64, hi: u64) -> Result<FiniteTableClass<BinaryLabel>> {
        if lo == 0 || lo > hi {
            return Err(contract(format!("bad window {lo}..={hi}")));
        }
        let table = Self::window_restrictions(lo, hi)
            .into_iter()
            .map(|set| (lo..=hi).map(|x| BinaryLabel::from_bit(set.contains(&x))).collect())
            .collect();
        FiniteTableClass::new(format!("hprime[{lo}..={hi}]"), table)
    }
}

impl ConsistencyOracle<u64, BinaryLabel> for HPrimeClass {
    fn is_realizable(&self, sample: &[Example<u64, BinaryLabel>]) -> Result<bool> {
        self.consistent(sample)
    }
}

impl ConceptClass<u64, BinaryLabel> for HPrimeClass {
    fn name(&self) -> String {
        format!("hprime(bound {})", self.bound)
    }

    fn consistency_oracle(&self) -> Option<&dyn ConsistencyOracle<u64, BinaryLabel>> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::{Error, OracleKind};
    use crate::oracle::{query_strong_erm, QueryLedger};
    use BinaryLabel::{One, Zero};

    fn class() -> HPrimeClass {
        HPrimeClass::new(1000).unwrap()
    }

    #[test]
    fn no_positives_is_consistent() {
        assert!(class().is_realizable(&[(4, Zero), (9, Zero), (2, Zero)]).unwrap());
    }

    #[test]
    fn semiprime_with_negative_factor() {
        assert!(!class().is_realizable(&[(15, One), (3, Zero)]).unwrap());
        assert!(class().is_realizable(&[(15, One), (4, Zero)]).unwrap());
    }

    #[test]
    fn lone_prime() {
        assert!(class().is_realizable(&[(7, One)]).unwrap());
        assert!(class().is_realizable(&[(7, One), (1, Zero), (14, Zero)]).unwrap());
    }

    #[test]
    fn lone_number_with_three_factors_uses_indicator() {
        assert!(class().is_realizable(&[(12, One), (4, Zero), (6, Zero), (2, Zero), (3, Zero)]).unwrap());
    }

    #[test]
    fn composite_plus_prime_needs_cofactor() {
        assert!(!class().is_realizable(&[(9, One), (2, One)]).unwrap());
        assert!(class().is_realizable(&[(10, One), (2, One)]).unwrap());
        assert!(!class().is_realizable(&[(10, One), (2, One), (5, Zero)]).unwrap());
        assert!(class().is_realizable(&[(6, One), (2, One), (3, One)]).unwrap());
        assert!(!class().is_realizable(&[(12, One), (2, One), (3, One)]).unwrap());
    }

    #[test]
    fn two_primes_and_their_product() {
        assert!(class().is_realizable(&[(3, One), (5, One)]).unwrap());
        assert!(!class().is_realizable(&[(3, One), (5, One), (15, Zero)]).unwrap());
        assert!(!class().is_realizable(&[(3, One), (5, One), (7, One)]).unwrap());
    }

    #[test]
    fn contradictions_and_bounds() {
        assert!(!class().is_realizable(&[(6, One), (6, Zero)]).unwrap());
        assert!(!class().is_realizable(&[(1, One), (2, One)]).unwrap());
        assert!(class().is_realizable(&[(0, One)]).is_err());
        assert!(class().is_realizable(&[(1001, One)]).is_err());
    }

    #[test]
    fn strong_erm_is_withheld() {
        let err = query_strong_erm(&class(), &[(15, One)], &QueryLedger::new()).unwrap_err();
        assert!(matches!(err, Error::Capability { oracle: OracleKind::StrongErm, .. }));
    }

    #[test]
    fn window_table_matches_procedure_on_pairs() {
        let table = HPrimeClass::window_table(2, 30).unwrap();
        let c = HPrimeClass::new(30).unwrap();
        for a in 2..=30u64 {
            for b in a + 1..=30 {
                for bits in 0..4u8 {
                    let s = [(a, BinaryLabel::from_bit(bits & 1 == 1)), (b, BinaryLabel::from_bit(bits & 2 == 2))];
                    let idx: Vec<_> = s.iter().map(|(x, y)| ((x - 2) as usize, *y)).collect();
                    assert_eq!(c.is_realizable(&s).unwrap(), table.is_realizable(&idx).unwrap(), "{s:?}");
                }
            }
        }
    }
}
