//! Synthetic piecewise-constant test signals.
//!
//! Start from zeros, paint random axis-aligned rectangles (intervals in 1-D)
//! with value 1 or 2 until each value covers 20% ± 5% of the cells, then add
//! Gaussian noise with standard deviation 0.2. Rectangle sides are uniform in
//! `[max(1, d/20), max(1, d/4)]` for a dimension of length `d`, positions are
//! uniform. Painting that would push either class above 25% is rejected.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub const NOISE_SD: f64 = 0.2;
const TARGET: f64 = 0.20;
const BAND: f64 = 0.05;
const MAX_ATTEMPTS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub rows: usize,
    pub cols: usize,
    /// Row-major values in {0, 1, 2} before noise.
    pub clean: Vec<f64>,
    /// Row-major `clean` plus noise; this is the signal to denoise.
    pub noisy: Vec<f64>,
}

impl Simulation {
    /// Fraction of clean cells equal to `value`.
    pub fn fraction(&self, value: f64) -> f64 {
        self.clean.iter().filter(|&&v| v == value).count() as f64 / self.clean.len() as f64
    }
}

/// `n`-point signal made of painted intervals.
pub fn simulate_1d(n: usize, seed: u64) -> Simulation {
    simulate_grid(1, n, seed)
}

/// `n × n` image made of painted rectangles.
pub fn simulate_2d(n: usize, seed: u64) -> Simulation {
    simulate_grid(n, n, seed)
}

pub fn simulate_grid(rows: usize, cols: usize, seed: u64) -> Simulation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = rows * cols;
    let mut clean = vec![0u8; total];
    let mut count = [total, 0, 0];
    let limit = (TARGET + BAND) * total as f64;
    let in_band = |c: usize| ((c as f64 / total as f64) - TARGET).abs() <= BAND;
    let side = |d: usize| {
        let lo = (d / 20).max(1);
        (lo, (d / 4).max(lo))
    };
    let (row_side, col_side) = (side(rows), side(cols));

    let mut attempts = 0;
    while total > 0 && !(in_band(count[1]) && in_band(count[2])) && attempts < MAX_ATTEMPTS {
        attempts += 1;
        let value: u8 = if count[1] <= count[2] { 1 } else { 2 };
        let h = rng.gen_range(row_side.0..=row_side.1);
        let w = rng.gen_range(col_side.0..=col_side.1);
        let r0 = rng.gen_range(0..=rows - h);
        let c0 = rng.gen_range(0..=cols - w);
        let mut next = count;
        for r in r0..r0 + h {
            for c in c0..c0 + w {
                next[clean[r * cols + c] as usize] -= 1;
                next[value as usize] += 1;
            }
        }
        if next[1] as f64 > limit || next[2] as f64 > limit {
            continue;
        }
        for r in r0..r0 + h {
            clean[r * cols + c0..r * cols + c0 + w].fill(value);
        }
        count = next;
    }

    let noise = Normal::new(0.0, NOISE_SD).expect("positive standard deviation");
    let clean: Vec<f64> = clean.into_iter().map(f64::from).collect();
    let noisy = clean.iter().map(|&v| v + noise.sample(&mut rng)).collect();
    Simulation { rows, cols, clean, noisy }
}
