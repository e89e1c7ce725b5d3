//! Exact semimeasures over finite alphabets, staged (enumerable) approximations,
//! Hellinger-distance analytics and the randomness constructions built on them.
//!
//! Probabilities are exact rationals. Square roots, logarithms and exponentials
//! live in [`real`] at a caller-chosen binary precision.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod alphabet;
pub mod counterexample;
pub mod error;
pub mod families;
pub mod hellinger;
pub mod measure;
pub mod prob;
pub mod quasi;
pub mod randomness;
pub mod real;
pub mod registry;
pub mod sample;
pub mod staged;

pub use alphabet::{Alphabet, Budget, Str, Symbol};
pub use error::{Error, Result};
pub use measure::{PathProfile, Semimeasure};
pub use prob::{ExactProb, Rational};
pub use real::{Precision, Real};
pub use registry::{ModelRegistry, WeightRule};
pub use staged::StagedSemimeasure;
