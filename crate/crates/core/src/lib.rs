//! Offline laboratory for a Shor-style attack on a toy elliptic-curve
//! discrete logarithm.
//!
//! The order-`2^n` subgroup of a small curve is encoded as `Z_{2^n}`, the
//! oracle `|a>|b>|0> -> |a>|b>|a P + b Q>` becomes a chain of controlled
//! constant adders, and the whole circuit is simulated exactly. Sampled
//! counts go through the classical recovery `k = -a b^{-1} mod 2^n`, and the
//! analysis module turns any set of counts (simulated or from hardware) into
//! figure datasets.

pub mod analysis;
pub mod calibration;
pub mod circuit;
pub mod cli;
pub mod ecgroup;
pub mod postprocess;
pub mod simulator;
