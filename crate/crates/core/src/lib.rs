pub mod boost;
pub mod brute;
pub mod classes;
pub mod data;
pub mod ermred;
pub mod error;
pub mod harness;
pub mod oig;
pub mod oracle;
pub mod pipelines;
pub mod rng;
pub mod weak;

pub use data::{BinaryLabel, Example, Label, MulticlassLabel, Rational, RealLabel};
pub use error::{Error, Result};
