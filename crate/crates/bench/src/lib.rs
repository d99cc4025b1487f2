//! Shared fixtures for the benchmarks.

use counterpoint_core::world::walk;
use counterpoint_core::{DualInterval, TransitionSequence, World};

/// A seeded walk of `len` steps through `w`, starting at the unison over 0.
pub fn passage(w: &World, len: usize, seed: u64) -> TransitionSequence {
    let start = DualInterval::new(0, 0, w.modulus());
    let report = walk(w, &start, len, seed).expect("matching modulus");
    let text: Vec<String> = report
        .path
        .windows(2)
        .map(|p| format!("{}>{}", p[0], p[1]))
        .collect();
    TransitionSequence::parse(&text.join("\n"), w.modulus()).expect("rendered steps")
}
