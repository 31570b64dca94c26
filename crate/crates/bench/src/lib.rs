//! Shared fixtures for the benchmarks.

use biphoton_core::sim::{simulate_pairs, Preset};
use biphoton_core::TagStream;

/// A short paper-2023-like run with realistic singles and noise rates.
pub fn fixture_stream(duration_s: f64) -> TagStream {
    let cfg = Preset::Paper2023.source(200e3, duration_s, 42);
    simulate_pairs(&cfg).expect("preset simulates")
}
