//! Shared fixtures for the tactic benchmarks.

use disclosure_core::model::{Column, Representation, Table};
use disclosure_core::SplitMix64;

/// A sample with columns `x` and `y`: `n` draws from a correlated
/// two-dimensional normal.
pub fn points(n: usize, seed: u64) -> Representation {
    let mut rng = SplitMix64::new(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.next_gaussian() * 2.0 + 5.0).collect();
    let y: Vec<f64> = x.iter().map(|v| 0.6 * v + rng.next_gaussian()).collect();
    Representation::sample(Table::new(vec![Column::numeric("x", &x), Column::numeric("y", &y)], "points").unwrap())
}
