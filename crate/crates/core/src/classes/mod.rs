//! Concrete concept classes and their oracles.

mod finite;
mod hprime;
mod margin;
mod primes;

pub use finite::{FiniteTableClass, TableLabel};
pub use hprime::HPrimeClass;
pub use margin::MarginThresholdClass;
pub use primes::is_prime;

/// A class whose hypotheses can be listed and evaluated one by one.
pub trait Enumerable<X, Y> {
    fn num_hypotheses(&self) -> usize;
    fn evaluate(&self, hypothesis: usize, x: &X) -> Y;
}
