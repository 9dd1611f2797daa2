//! Dense statevector simulation of the attack circuit.
//!
//! The adders are applied as index permutations and the QFTs as length-`2^n`
//! FFTs over each register slice, so a full `n = 5` run touches 32,768
//! amplitudes a handful of times. Kernels parallelize over disjoint
//! contiguous chunks and never reorder floating-point reductions, so results
//! do not depend on the worker count.

mod conventions;
mod noise;
mod sampling;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};
use thiserror::Error;

use crate::circuit::{Circuit, Gate, Register, RegisterLayout};

pub(crate) use conventions::bit_reverse;
pub use conventions::{
    calibrate_conventions, calibrated, ConventionConfig, NoConsistentConvention, RegisterHalves, RenderOrder,
    RidgeOrientation, Sign,
};
pub use noise::apply_noise;
pub use sampling::{sample, Counts, CountsError};

pub const NORM_TOLERANCE: f64 = 1e-12;
pub const ANALYTIC_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("state has {state} qubits but the layout needs {layout}")]
    WidthMismatch { state: u32, layout: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: u32,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`
    pub fn zero(n_qubits: u32) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amplitudes }
    }

    pub fn basis(n_qubits: u32, index: usize) -> Self {
        let mut state = Self::zero(n_qubits);
        state.amplitudes[0] = Complex64::new(0.0, 0.0);
        state.amplitudes[index] = Complex64::new(1.0, 0.0);
        state
    }

    /// Arbitrary (not necessarily normalized) amplitudes; useful for tracing permutations.
    pub fn from_amplitudes(n_qubits: u32, amplitudes: Vec<Complex64>) -> Self {
        assert_eq!(amplitudes.len(), 1 << n_qubits, "amplitude count must be 2^n_qubits");
        Self { n_qubits, amplitudes }
    }

    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

fn hadamard_qubit(amps: &mut [Complex64], qubit: u32) {
    let half = 1usize << qubit;
    amps.par_chunks_mut(half << 1).for_each(|chunk| {
        let (lo, hi) = chunk.split_at_mut(half);
        for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
            let (s, d) = (*x + *y, *x - *y);
            *x = s * FRAC_1_SQRT_2;
            *y = d * FRAC_1_SQRT_2;
        }
    });
}

fn controlled_add(
    amps: &[Complex64],
    layout: &RegisterLayout,
    control: u32,
    target: Register,
    constant: u64,
) -> Vec<Complex64> {
    let modulus = layout.modulus();
    let back = (modulus - constant % modulus) % modulus;
    // gather form: each destination pulls from its unique preimage
    (0..amps.len())
        .into_par_iter()
        .map(|dest| {
            if dest >> control & 1 == 1 {
                let x = layout.extract(dest, target);
                amps[layout.replace(dest, target, x + back)]
            } else {
                amps[dest]
            }
        })
        .collect()
}

fn qft_register(amps: &mut [Complex64], layout: &RegisterLayout, reg: Register, swaps: bool, sign: Sign) {
    let n = layout.bits();
    let size = layout.modulus() as usize;
    let stride = 1usize << layout.range(reg).start;
    let direction = match sign {
        Sign::Plus => FftDirection::Inverse,
        Sign::Minus => FftDirection::Forward,
    };
    let fft = FftPlanner::<f64>::new().plan_fft(size, direction);
    let scale = 1.0 / (size as f64).sqrt();
    amps.par_chunks_mut(stride * size).for_each(|block| {
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for offset in 0..stride {
            for (x, slot) in buf.iter_mut().enumerate() {
                *slot = block[offset + x * stride];
            }
            fft.process_with_scratch(&mut buf, &mut scratch);
            for (y, value) in buf.iter().enumerate() {
                let out = if swaps { y } else { bit_reverse(y as u64, n) as usize };
                block[offset + out * stride] = value * scale;
            }
        }
    });
}

/// Applies one gate in place. Barriers and measurements leave the state alone;
/// measurement is handled by [`run_exact`] marginalizing the final state.
pub fn apply_gate(state: &mut StateVector, gate: &Gate, layout: &RegisterLayout) -> Result<(), SimError> {
    if state.n_qubits != layout.n_qubits() {
        return Err(SimError::WidthMismatch { state: state.n_qubits, layout: layout.n_qubits() });
    }
    match gate {
        Gate::HadamardAll(reg) => {
            for q in layout.range(*reg) {
                hadamard_qubit(&mut state.amplitudes, q);
            }
        }
        Gate::ControlledAddConst { control, target, constant } => {
            state.amplitudes = controlled_add(&state.amplitudes, layout, *control, *target, *constant);
        }
        Gate::Qft { register, final_swaps, sign } => {
            qft_register(&mut state.amplitudes, layout, *register, *final_swaps, *sign);
        }
        Gate::Barrier | Gate::Measure { .. } => {}
    }
    Ok(())
}

/// Runs every gate of `circuit` on `|0...0>`.
pub fn run_state(circuit: &Circuit) -> StateVector {
    let layout = circuit.layout();
    let mut state = StateVector::zero(layout.n_qubits());
    for gate in circuit.gates() {
        apply_gate(&mut state, gate, layout).expect("state built from the same layout");
    }
    state
}

/// Exact probabilities over the `2n` classical bits.
///
/// Outcome index is the classical register value, so index `a + 2^n b` holds
/// the probability of reading `a` from the a-register and `b` from the
/// b-register (little-endian within each). The point register is summed out.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    n: u32,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn from_probs(n: u32, probs: Vec<f64>) -> Self {
        assert_eq!(probs.len(), 1 << (2 * n), "distribution needs 2^(2n) entries");
        Self { n, probs }
    }

    pub fn bits(&self) -> u32 {
        self.n
    }

    pub fn modulus(&self) -> u64 {
        1 << self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, a: u64, b: u64) -> f64 {
        self.probs[(a | (b << self.n)) as usize]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Classical values with probability above `threshold`, ascending.
    pub fn support(&self, threshold: f64) -> Vec<(u64, f64)> {
        self.probs.iter().enumerate().filter(|(_, &p)| p > threshold).map(|(i, &p)| (i as u64, p)).collect()
    }

    pub fn max_abs_diff(&self, other: &OutcomeDistribution) -> f64 {
        assert_eq!(self.n, other.n);
        self.probs.iter().zip(&other.probs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// `a,b,probability` with `a`, `b` the measured register values.
    pub fn to_csv(&self) -> String {
        let mask = self.modulus() - 1;
        let mut out = String::from("a,b,probability\n");
        for (i, p) in self.probs.iter().enumerate() {
            let i = i as u64;
            writeln!(out, "{},{},{}", i & mask, i >> self.n, p).unwrap();
        }
        out
    }
}

pub fn run_exact(circuit: &Circuit) -> OutcomeDistribution {
    let layout = circuit.layout();
    let state = run_state(circuit);
    let measures: Vec<(Register, u32)> = circuit
        .gates()
        .iter()
        .filter_map(|g| match g {
            Gate::Measure { register, offset } => Some((*register, *offset)),
            _ => None,
        })
        .collect();
    let mut probs = vec![0.0; 1 << layout.n_clbits()];
    for (index, amp) in state.amplitudes.iter().enumerate() {
        let classical: u64 =
            measures.iter().map(|(reg, offset)| layout.extract(index, *reg) << offset).fold(0, |acc, v| acc | v);
        probs[classical as usize] += amp.norm_sqr();
    }
    OutcomeDistribution::from_probs(layout.bits(), probs)
}

/// Closed-form noiseless output: uniform over the `2^n` classical outcomes whose
/// parsed pair lies on the ridge `k_eff` in the orientation of `conventions`.
pub fn analytic_distribution(n: u32, k_eff: u64, conventions: &ConventionConfig) -> OutcomeDistribution {
    let modulus = 1u64 << n;
    let orientation = conventions.ridge_orientation();
    let weight = 1.0 / modulus as f64;
    let probs = (0..modulus * modulus)
        .map(|classical| {
            let (a, b) = conventions.parse_classical(classical, n);
            if orientation.holds(a, b, k_eff, modulus) {
                weight
            } else {
                0.0
            }
        })
        .collect();
    OutcomeDistribution::from_probs(n, probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_oracle, build_shor_circuit};
    use std::f64::consts::PI;

    fn naive_dft(input: &[Complex64], sign: f64) -> Vec<Complex64> {
        let size = input.len();
        let scale = 1.0 / (size as f64).sqrt();
        (0..size)
            .map(|y| {
                input
                    .iter()
                    .enumerate()
                    .map(|(x, v)| {
                        let theta = sign * 2.0 * PI * (x * y) as f64 / size as f64;
                        v * Complex64::from_polar(scale, theta)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn hadamard_layer_is_uniform() {
        let layout = RegisterLayout::new(5);
        let mut state = StateVector::zero(15);
        apply_gate(&mut state, &Gate::HadamardAll(Register::A), &layout).unwrap();
        let expected = 1.0 / 32f64.sqrt();
        for a in 0..32 {
            let amp = state.amplitudes()[layout.compose(a, 0, 0)];
            assert!((amp.re - expected).abs() < 1e-15 && amp.im.abs() < 1e-15);
        }
        assert!((state.norm_sqr() - 1.0).abs() < NORM_TOLERANCE);
    }

    #[test]
    fn adder_with_clear_control_is_identity() {
        let layout = RegisterLayout::new(3);
        let mut state = StateVector::basis(9, layout.compose(6, 3, 5));
        let before = state.clone();
        let gate = Gate::ControlledAddConst { control: 0, target: Register::P, constant: 3 };
        apply_gate(&mut state, &gate, &layout).unwrap();
        assert_eq!(state, before);
        let gate = Gate::ControlledAddConst { control: 1, target: Register::P, constant: 3 };
        apply_gate(&mut state, &gate, &layout).unwrap();
        assert_eq!(state, StateVector::basis(9, layout.compose(6, 3, 0)));
    }

    #[test]
    fn single_qubit_qft_is_hadamard() {
        let layout = RegisterLayout::new(1);
        for sign in [Sign::Plus, Sign::Minus] {
            for swaps in [false, true] {
                for input in 0..2 {
                    let mut via_qft = StateVector::basis(3, input);
                    let mut via_h = via_qft.clone();
                    let qft = Gate::Qft { register: Register::A, final_swaps: swaps, sign };
                    apply_gate(&mut via_qft, &qft, &layout).unwrap();
                    apply_gate(&mut via_h, &Gate::HadamardAll(Register::A), &layout).unwrap();
                    for (x, y) in via_qft.amplitudes().iter().zip(via_h.amplitudes()) {
                        assert!((x - y).norm() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn qft_matches_naive_dft_on_every_register() {
        let layout = RegisterLayout::new(3);
        // arbitrary normalized state
        let raw: Vec<Complex64> =
            (0..512).map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let input = StateVector { n_qubits: 9, amplitudes: raw.iter().map(|a| a / norm).collect() };
        for reg in [Register::A, Register::B, Register::P] {
            for sign in [Sign::Plus, Sign::Minus] {
                for swaps in [true, false] {
                    let mut state = input.clone();
                    let gate = Gate::Qft { register: reg, final_swaps: swaps, sign };
                    apply_gate(&mut state, &gate, &layout).unwrap();
                    for base in (0..512).filter(|&i| layout.extract(i, reg) == 0) {
                        let slice: Vec<Complex64> =
                            (0..8).map(|x| input.amplitudes[layout.replace(base, reg, x)]).collect();
                        let expect = naive_dft(&slice, sign.value() as f64);
                        for (y, e) in expect.iter().enumerate() {
                            let out = if swaps { y as u64 } else { bit_reverse(y as u64, 3) };
                            let got = state.amplitudes[layout.replace(base, reg, out)];
                            assert!((got - e).norm() < 1e-12);
                        }
                    }
                    assert!((state.norm_sqr() - 1.0).abs() < NORM_TOLERANCE);
                }
            }
        }
    }

    #[test]
    fn width_mismatch() {
        let layout = RegisterLayout::new(2);
        let mut state = StateVector::zero(9);
        assert_eq!(
            apply_gate(&mut state, &Gate::Barrier, &layout),
            Err(SimError::WidthMismatch { state: 9, layout: 6 })
        );
    }

    #[test]
    fn one_bit_instance_support() {
        let conv = ConventionConfig::consistent();
        let dist = run_exact(&build_shor_circuit(1, 1, 1, &conv));
        assert!((dist.prob(0, 0) - 0.5).abs() < 1e-12);
        assert!((dist.prob(1, 1) - 0.5).abs() < 1e-12);
        assert!(dist.prob(0, 1).abs() < 1e-12 && dist.prob(1, 0).abs() < 1e-12);
    }

    #[test]
    fn empty_oracle_refocuses_to_zero() {
        // H then QFT on an untouched register is the identity up to |0>
        for conv in ConventionConfig::search_space() {
            for n in 1..=3 {
                let dist = run_exact(&build_shor_circuit(n, 0, 0, &conv));
                assert!((dist.prob(0, 0) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_writes_linear_index() {
        for n in 1..=3 {
            let layout = RegisterLayout::new(n);
            let modulus = layout.modulus();
            for (p_index, q_index) in [(1, 3 % modulus), (modulus - 1, 2 % modulus), (0, 1)] {
                let mut gates = vec![Gate::HadamardAll(Register::A), Gate::HadamardAll(Register::B)];
                gates.extend(build_oracle(&layout, p_index, q_index));
                let circuit = Circuit::new(layout, gates).unwrap();
                let probs = run_state(&circuit).probabilities();
                let expected = 1.0 / (modulus * modulus) as f64;
                for a in 0..modulus {
                    for b in 0..modulus {
                        for p in 0..modulus {
                            let prob = probs[layout.compose(a, b, p)];
                            if p == (a * p_index + b * q_index) % modulus {
                                assert!((prob - expected).abs() < 1e-12);
                            } else {
                                assert!(prob < 1e-15);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn exact_matches_analytic_for_small_widths() {
        let conv = ConventionConfig::consistent();
        for n in 1..=2 {
            for k in 0..(1 << n) {
                let exact = run_exact(&build_shor_circuit(n, 1, k, &conv));
                let k_eff = conv.ridge_multiplier(1, k, n).unwrap();
                let analytic = analytic_distribution(n, k_eff, &conv);
                assert!(exact.max_abs_diff(&analytic) < ANALYTIC_TOLERANCE);
            }
        }
    }

    #[test]
    fn degenerate_ridge_is_first_column() {
        let conv = ConventionConfig::consistent();
        let dist = analytic_distribution(5, 0, &conv);
        let support = dist.support(0.0);
        assert_eq!(support.len(), 32);
        for (classical, p) in support {
            let (a, _) = conv.parse_classical(classical, 5);
            assert_eq!(a, 0);
            assert!((p - 1.0 / 32.0).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_dump_rows() {
        let conv = ConventionConfig::consistent();
        let dist = run_exact(&build_shor_circuit(1, 1, 1, &conv));
        let csv = dist.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("a,b,probability\n0,0,"));
    }
}
