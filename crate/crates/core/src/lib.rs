//! Imbalanced survival classification on categorical tabular data.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithm:
//! preprocessing policies and horizon labeling ([`data`]), ANOVA screening
//! and Cramér's V ([`stats`]), exact k-NN ([`neighbors`]), ENN / RENN /
//! SMOTE pipelines ([`sampling`]), tree classifiers ([`models`]),
//! stratified cross-validation ([`eval`]) and seeded generators
//! ([`synth`]). File IO and the command-line driver live in the `survbal`
//! crate.
#![no_std]

extern crate alloc;

pub mod data;
pub mod error;
pub mod eval;
pub mod exec;
pub mod models;
pub mod neighbors;
pub mod rng;
pub mod sampling;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
