//! Synthetic noise: a global depolarizing mix followed by independent readout
//! flips on each classical bit.

use super::OutcomeDistribution;

/// `p' = (1 - eps) p + eps / 4^n`, then each of the `2n` outcome bits flips
/// independently with probability `readout_flip`.
pub fn apply_noise(dist: &OutcomeDistribution, epsilon: f64, readout_flip: f64) -> OutcomeDistribution {
    assert!((0.0..=1.0).contains(&epsilon), "epsilon {epsilon} outside [0, 1]");
    assert!((0.0..=1.0).contains(&readout_flip), "readout flip {readout_flip} outside [0, 1]");
    let n = dist.bits();
    let size = dist.probs().len();
    let uniform = 1.0 / size as f64;
    let mut probs: Vec<f64> = dist.probs().iter().map(|p| (1.0 - epsilon) * p + epsilon * uniform).collect();
    if readout_flip > 0.0 {
        for bit in 0..2 * n {
            let mask = 1usize << bit;
            probs = (0..size).map(|i| (1.0 - readout_flip) * probs[i] + readout_flip * probs[i ^ mask]).collect();
        }
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    OutcomeDistribution::from_probs(n, probs)
}
