//! Bucketing codes for the planted nearest-neighbor problem.
//!
//! * [`probmodel`]: probability matrices, divergences and the planted-pair
//!   dataset generator.
//! * [`information`]: the bucketing information function, sub-conjugacy and
//!   the work lower bounds built on them.
//! * [`codes`]: concrete bucketing codes with exact success and work.
//! * [`simharness`]: Monte Carlo validation and exponent tables.
//!
//! Randomized operations take an explicit seed. Sub-streams are ChaCha8
//! generators keyed by hashing `(seed, purpose tag, index)`, so results do
//! not depend on thread count or execution order.

pub mod error;
pub mod exec;
pub mod information;
pub mod logspace;
pub mod probmodel;
pub mod rng;
pub mod simharness;
pub mod codes;

pub use error::{Error, Result};
pub use exec::Execution;
