//! Numerical core for EEG mental-workload classification.
//!
//! Raw multi-channel EEG goes through average re-referencing, a zero-phase
//! 1 Hz high-pass and FastICA artifact rejection ([`preprocess`]), is turned
//! into per-second theta/alpha cluster powers and their ratios
//! ([`bandindex`]), summarised by a 210-entry feature catalog ([`features`]),
//! ranked and pruned ([`select`]) and finally fed to three classifier
//! families ([`learn`]) evaluated by repeated subject-level Monte Carlo
//! splits ([`montecarlo`]). [`synth`] fits a Gaussian copula to feature rows
//! and scores how faithful its samples are.
//!
//! ```text
//! EegRecording ─ denoise ─ compute_indexes ─ extract_all ─ select ─ run_experiment
//!                                                             └── synth (augment)
//! ```
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line front end and parallel drivers live in the companion `mwl` crate.
#![no_std]
// NaN-rejecting guards are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bandindex;
pub mod cohort;
mod error;
pub mod features;
pub mod learn;
pub mod linalg;
pub mod montecarlo;
pub mod preprocess;
pub mod recording;
pub mod rng;
pub mod select;
pub mod signal;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use features::{FeatureCatalog, FeatureMatrix};
pub use recording::{Condition, EegRecording, Rating, WorkloadClass};
