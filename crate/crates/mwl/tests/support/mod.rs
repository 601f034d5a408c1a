//! Helpers shared by the integration tests.

#![allow(dead_code)]

pub mod oracle;

use std::fmt::Display;
use std::sync::atomic::{AtomicBool, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Set by [`verdict`]; lets a harness tell a failed check from a panic
/// that happened before any verdict was printed.
pub static REPORTED: AtomicBool = AtomicBool::new(false);

/// Prints one verdict line and returns whether it passed.
pub fn verdict(criterion: &str, pass: bool, detail: impl Display) -> bool {
    REPORTED.store(true, Ordering::SeqCst);
    println!("{} criterion {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

pub fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}
