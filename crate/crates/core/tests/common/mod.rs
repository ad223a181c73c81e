//! Oracles and fixtures shared by the integration and acceptance tests.
#![allow(dead_code)]

pub mod corpus;
pub mod desk;
pub mod grad;
pub mod pipeline;

use rand::Rng;
use sing::midi::{PianoRoll, N_PITCHES};

/// Exhaustive simplex projection: the closest feasible point over every
/// candidate support set.
pub fn sparsemax_oracle(z: &[f64]) -> Vec<f64> {
    let k = z.len();
    assert!(k <= 16, "oracle is exponential in the input length");
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1 << k) {
        let support: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let tau = (support.iter().map(|&i| z[i]).sum::<f64>() - 1.0) / support.len() as f64;
        let mut p = vec![0.0; k];
        let mut feasible = true;
        for &i in &support {
            p[i] = z[i] - tau;
            if p[i] < 0.0 {
                feasible = false;
            }
        }
        if !feasible {
            continue;
        }
        let dist: f64 = p.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(d, _)| dist < *d) {
            best = Some((dist, p));
        }
    }
    best.expect("some support is always feasible").1
}

pub fn random_roll<R: Rng>(rng: &mut R, n: usize, density: f64, tempo: f64) -> PianoRoll {
    let data = (0..n * N_PITCHES).map(|_| u8::from(rng.random_bool(density))).collect();
    PianoRoll::from_data(n, data, tempo).unwrap()
}

/// Roll whose samples each hold 1-3 random pitches, with some silent ones.
pub fn sparse_roll<R: Rng>(rng: &mut R, n: usize, tempo: f64) -> PianoRoll {
    let mut roll = PianoRoll::zeros(n, tempo).unwrap();
    for s in 0..n {
        if rng.random_bool(0.15) {
            continue;
        }
        for _ in 0..rng.random_range(1..=3) {
            roll.set(rng.random_range(0..N_PITCHES), s, true);
        }
    }
    roll
}
