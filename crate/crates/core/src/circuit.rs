//! Register-level circuit description for the discrete-log attack.
//!
//! Qubits are numbered little-endian inside each register: qubit `i` of a
//! register carries weight `2^i`. The three registers are laid out back to back
//! as `a | b | p`, so the global basis index is `a + 2^n b + 2^{2n} p`.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::simulator::{ConventionConfig, Sign};

pub const MAX_BITS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Register {
    A,
    B,
    P,
}

impl Register {
    fn slot(self) -> u32 {
        match self {
            Register::A => 0,
            Register::B => 1,
            Register::P => 2,
        }
    }
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Register::A => "a",
            Register::B => "b",
            Register::P => "p",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    n: u32,
}

impl RegisterLayout {
    pub fn new(n: u32) -> Self {
        assert!((1..=MAX_BITS).contains(&n), "register width {n} outside 1..={MAX_BITS}");
        Self { n }
    }

    /// Bits per register.
    pub fn bits(&self) -> u32 {
        self.n
    }

    /// `2^n`, the group order.
    pub fn modulus(&self) -> u64 {
        1 << self.n
    }

    pub fn n_qubits(&self) -> u32 {
        3 * self.n
    }

    pub fn n_clbits(&self) -> u32 {
        2 * self.n
    }

    pub fn range(&self, reg: Register) -> Range<u32> {
        let start = reg.slot() * self.n;
        start..start + self.n
    }

    pub fn qubit(&self, reg: Register, bit: u32) -> u32 {
        debug_assert!(bit < self.n);
        reg.slot() * self.n + bit
    }

    /// Value held by `reg` in the global basis index.
    pub fn extract(&self, index: usize, reg: Register) -> u64 {
        ((index >> (reg.slot() * self.n)) as u64) & (self.modulus() - 1)
    }

    /// Global basis index with `reg` overwritten by `value`.
    pub fn replace(&self, index: usize, reg: Register, value: u64) -> usize {
        let shift = reg.slot() * self.n;
        let mask = ((self.modulus() - 1) as usize) << shift;
        (index & !mask) | (((value & (self.modulus() - 1)) as usize) << shift)
    }

    pub fn compose(&self, a: u64, b: u64, p: u64) -> usize {
        let n = self.n;
        (a | (b << n) | (p << (2 * n))) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gate {
    HadamardAll(Register),
    /// `|x> -> |x + constant mod 2^n>` on `target` when `control` is set.
    ControlledAddConst {
        control: u32,
        target: Register,
        constant: u64,
    },
    Qft {
        register: Register,
        final_swaps: bool,
        sign: Sign,
    },
    Barrier,
    /// Writes the register into classical bits `offset..offset + n`, bit `i` to `offset + i`.
    Measure {
        register: Register,
        offset: u32,
    },
}

impl Gate {
    fn render(&self, layout: &RegisterLayout) -> String {
        let n = layout.bits();
        match self {
            Gate::HadamardAll(reg) => format!("H {reg}"),
            Gate::ControlledAddConst { control, target, constant } => {
                let (reg, bit) = [Register::A, Register::B, Register::P]
                    .into_iter()
                    .find_map(|r| {
                        let range = layout.range(r);
                        range.contains(control).then(|| (r, control - range.start))
                    })
                    .expect("control inside layout");
                format!("CADD c={constant} ctrl={reg}[{bit}] tgt={target}")
            }
            Gate::Qft { register, final_swaps, sign } => {
                let swaps = if *final_swaps { "swap" } else { "noswap" };
                match sign {
                    Sign::Plus => format!("QFT {register} {swaps}"),
                    Sign::Minus => format!("QFT {register} {swaps} sign=-1"),
                }
            }
            Gate::Barrier => "BARRIER".to_string(),
            Gate::Measure { register, offset } => {
                format!("M {register}\u{2192}c[{offset}..{})", offset + n)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CircuitError {
    #[error("gate {index} references qubit {qubit} outside a {width}-qubit layout")]
    QubitOutOfRange { index: usize, qubit: u32, width: u32 },
    #[error("gate {index}: adder constant {constant} outside 1..{modulus}")]
    BadConstant { index: usize, constant: u64, modulus: u64 },
    #[error("gate {index}: control qubit lies inside the target register")]
    ControlInTarget { index: usize },
    #[error("gate {index}: measurement before the final QFT")]
    EarlyMeasurement { index: usize },
    #[error("gate {index}: classical bits {offset}..{end} exceed {width}")]
    ClassicalOutOfRange { index: usize, offset: u32, end: u32, width: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    layout: RegisterLayout,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(layout: RegisterLayout, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        let circuit = Self { layout, gates };
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn oracle_gates(&self) -> impl Iterator<Item = &Gate> {
        self.gates.iter().filter(|g| matches!(g, Gate::ControlledAddConst { .. }))
    }

    fn validate(&self) -> Result<(), CircuitError> {
        let width = self.layout.n_qubits();
        let modulus = self.layout.modulus();
        let last_qft = self.gates.iter().rposition(|g| matches!(g, Gate::Qft { .. }));
        for (index, gate) in self.gates.iter().enumerate() {
            match gate {
                Gate::ControlledAddConst { control, target, constant } => {
                    if *control >= width {
                        return Err(CircuitError::QubitOutOfRange { index, qubit: *control, width });
                    }
                    if *constant == 0 || *constant >= modulus {
                        return Err(CircuitError::BadConstant { index, constant: *constant, modulus });
                    }
                    if self.layout.range(*target).contains(control) {
                        return Err(CircuitError::ControlInTarget { index });
                    }
                }
                Gate::Measure { offset, .. } => {
                    if last_qft.is_some_and(|q| index < q) {
                        return Err(CircuitError::EarlyMeasurement { index });
                    }
                    let end = offset + self.layout.bits();
                    if end > self.layout.n_clbits() {
                        return Err(CircuitError::ClassicalOutOfRange {
                            index,
                            offset: *offset,
                            end,
                            width: self.layout.n_clbits(),
                        });
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// One gate per line, e.g. `CADD c=14 ctrl=b[1] tgt=p`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for gate in &self.gates {
            out.push_str(&gate.render(&self.layout));
            out.push('\n');
        }
        out
    }
}

/// `x -> (x + c) mod 2^n` as an index map: `perm[x]` is the image of `x`.
pub fn add_const_permutation(c: u64, n: u32) -> Vec<u64> {
    let modulus = 1u64 << n;
    assert!(c < modulus, "constant {c} not reduced mod {modulus}");
    (0..modulus).map(|x| (x + c) % modulus).collect()
}

/// Controlled constant additions computing `p += a * p_index + b * q_index`.
///
/// Bit `i` of `a` adds `p_index * 2^i mod 2^n`, then bit `i` of `b` adds
/// `q_index * 2^i mod 2^n`. Zero constants emit no gate.
pub fn build_oracle(layout: &RegisterLayout, p_index: u64, q_index: u64) -> Vec<Gate> {
    let modulus = layout.modulus();
    let mut gates = Vec::new();
    for (reg, index) in [(Register::A, p_index), (Register::B, q_index)] {
        for i in 0..layout.bits() {
            let constant = (index % modulus) * (1 << i) % modulus;
            if constant != 0 {
                gates.push(Gate::ControlledAddConst { control: layout.qubit(reg, i), target: Register::P, constant });
            }
        }
    }
    gates
}

pub fn build_shor_circuit(n: u32, p_index: u64, q_index: u64, conventions: &ConventionConfig) -> Circuit {
    let layout = RegisterLayout::new(n);
    let mut gates = vec![Gate::HadamardAll(Register::A), Gate::HadamardAll(Register::B)];
    gates.extend(build_oracle(&layout, p_index, q_index));
    gates.push(Gate::Barrier);
    gates.push(Gate::Qft {
        register: Register::A,
        final_swaps: conventions.qft_final_swaps,
        sign: conventions.qft_sign_a,
    });
    gates.push(Gate::Qft {
        register: Register::B,
        final_swaps: conventions.qft_final_swaps,
        sign: conventions.qft_sign_b,
    });
    gates.push(Gate::Measure { register: Register::A, offset: 0 });
    gates.push(Gate::Measure { register: Register::B, offset: n });
    Circuit::new(layout, gates).expect("builder emits a valid circuit")
}
