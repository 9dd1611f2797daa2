//! Seeded shot sampling.
//!
//! Shots are drawn one at a time by inverse-CDF lookup of a uniform `f64` from
//! ChaCha20 seeded with `seed_from_u64`. Both the stream cipher and rand's
//! 53-bit float conversion are fixed algorithms, so a given seed produces the
//! same counts on every platform.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ConventionConfig, OutcomeDistribution};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CountsError {
    #[error("counts sum to {sum}, expected {shots} shots")]
    ShotMismatch { sum: u64, shots: u64 },
    #[error("bitstring {key:?} has width {width}, expected {expected}")]
    Width { key: String, width: usize, expected: usize },
    #[error("bitstring {0:?} contains characters other than '0' and '1'")]
    NotBinary(String),
    #[error("bitstring {0:?} has a zero count")]
    ZeroCount(String),
    #[error("bitstring width {0} is odd or zero")]
    OddWidth(usize),
}

/// Shot histogram keyed by rendered bitstring.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    shots: u64,
    map: BTreeMap<String, u64>,
}

impl Counts {
    pub fn new(shots: u64, map: BTreeMap<String, u64>) -> Result<Self, CountsError> {
        let counts = Self { shots, map };
        counts.validate()?;
        Ok(counts)
    }

    /// Shots inferred as the sum of all counts.
    pub fn from_map(map: BTreeMap<String, u64>) -> Result<Self, CountsError> {
        let shots = map.values().sum();
        Self::new(shots, map)
    }

    fn validate(&self) -> Result<(), CountsError> {
        let sum: u64 = self.map.values().sum();
        if sum != self.shots {
            return Err(CountsError::ShotMismatch { sum, shots: self.shots });
        }
        let expected = self.map.keys().next().map(|k| k.len());
        if let Some(expected) = expected {
            if expected == 0 || expected % 2 == 1 {
                return Err(CountsError::OddWidth(expected));
            }
        }
        for (key, &count) in &self.map {
            if Some(key.len()) != expected {
                return Err(CountsError::Width { key: key.clone(), width: key.len(), expected: expected.unwrap_or(0) });
            }
            if !key.bytes().all(|c| c == b'0' || c == b'1') {
                return Err(CountsError::NotBinary(key.clone()));
            }
            if count == 0 {
                return Err(CountsError::ZeroCount(key.clone()));
            }
        }
        Ok(())
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn map(&self) -> &BTreeMap<String, u64> {
        &self.map
    }

    /// Width of every key, `None` when empty.
    pub fn width(&self) -> Option<usize> {
        self.map.keys().next().map(String::len)
    }

    pub fn into_map(self) -> BTreeMap<String, u64> {
        self.map
    }
}

/// Draws `shots` outcomes from `dist` and renders them per `conventions`.
pub fn sample(dist: &OutcomeDistribution, shots: u64, seed: u64, conventions: &ConventionConfig) -> Counts {
    assert!(shots >= 1, "need at least one shot");
    let cdf: Vec<f64> = dist
        .probs()
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p.max(0.0);
            Some(*acc)
        })
        .collect();
    let total = *cdf.last().expect("non-empty distribution");
    let last_live = dist.probs().iter().rposition(|&p| p > 0.0).expect("some mass");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut tally = vec![0u64; cdf.len()];
    for _ in 0..shots {
        let x = rng.gen::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= x).min(last_live);
        tally[idx] += 1;
    }
    let n = dist.bits();
    let map = tally
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(classical, c)| (conventions.render(classical as u64, n), c))
        .collect();
    Counts::new(shots, map).expect("sampler output is well formed")
}
