//! Classical key recovery from measured counts.
//!
//! Each bitstring becomes an `(a, b)` pair; pairs with `b` a unit mod `N`
//! yield the candidate `k = -a b^{-1} mod N`. Candidates are ranked by count
//! and the attack succeeds when the true key shows up in the first `top_n`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::simulator::{ConventionConfig, Counts, RegisterHalves};

pub const DEFAULT_TOP_N: usize = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PostError {
    #[error("{b} is not invertible modulo {modulus}")]
    NotInvertible { b: u64, modulus: u64 },
    #[error("malformed bitstring {key:?}: {reason}")]
    MalformedBitstring { key: String, reason: String },
}

/// `b^{-1} mod modulus` by extended Euclid.
pub fn mod_inverse(b: u64, modulus: u64) -> Result<u64, PostError> {
    assert!(modulus >= 2, "modulus must be at least 2");
    let (mut old_r, mut r) = ((b % modulus) as i128, modulus as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(PostError::NotInvertible { b, modulus });
    }
    Ok(old_s.rem_euclid(modulus as i128) as u64)
}

/// `-a b^{-1} mod modulus`, or `None` when `b` is not a unit.
pub fn candidate_key(a: u64, b: u64, modulus: u64) -> Option<u64> {
    let inv = mod_inverse(b, modulus).ok()?;
    Some((modulus - a % modulus) % modulus * inv % modulus)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AbPair {
    pub a: u64,
    pub b: u64,
    pub count: u64,
}

/// Splits each key into `(a, b)`, the same way the original script does it:
/// optionally reverse the whole string, then read each half as a binary
/// number. Pairs that collide are merged. Output is sorted by `(a, b)`.
pub fn parse_counts(counts: &Counts, n: u32, conventions: &ConventionConfig) -> Result<Vec<AbPair>, PostError> {
    let width = 2 * n as usize;
    let mut merged: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    for (key, &count) in counts.map() {
        if key.len() != width {
            return Err(PostError::MalformedBitstring {
                key: key.clone(),
                reason: format!("width {} != {width}", key.len()),
            });
        }
        if !key.bytes().all(|c| c == b'0' || c == b'1') {
            return Err(PostError::MalformedBitstring { key: key.clone(), reason: "non-binary character".into() });
        }
        let s: String = if conventions.postparse_endian_flip { key.chars().rev().collect() } else { key.clone() };
        let (first, second) = s.split_at(n as usize);
        // without the flip the first characters are the high classical bits
        let (low, high) = if conventions.postparse_endian_flip { (first, second) } else { (second, first) };
        let value = |bits: &str| u64::from_str_radix(bits, 2).expect("checked binary");
        let (a, b) = match conventions.register_halves_order {
            RegisterHalves::BHigh => (value(low), value(high)),
            RegisterHalves::AHigh => (value(high), value(low)),
        };
        *merged.entry((a, b)).or_default() += count;
    }
    Ok(merged.into_iter().map(|((a, b), count)| AbPair { a, b, count }).collect())
}

/// Merges duplicate `(a, b)` entries.
pub fn merge_pairs(pairs: &[AbPair]) -> Vec<AbPair> {
    let mut merged: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    for p in pairs {
        *merged.entry((p.a, p.b)).or_default() += p.count;
    }
    merged.into_iter().map(|((a, b), count)| AbPair { a, b, count }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub pair: AbPair,
    pub k: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateTable {
    candidates: Vec<Candidate>,
    top_n: usize,
}

/// Pairs sorted by descending count, ties by ascending `(a, b)`.
pub fn rank_pairs(pairs: &[AbPair]) -> Vec<AbPair> {
    let mut ranked = merge_pairs(pairs);
    ranked.sort_by(|x, y| y.count.cmp(&x.count).then((x.a, x.b).cmp(&(y.a, y.b))));
    ranked
}

pub fn extract_candidates(pairs: &[AbPair], modulus: u64, top_n: usize) -> CandidateTable {
    assert!(top_n >= 1, "top_n must be positive");
    let candidates = rank_pairs(pairs)
        .into_iter()
        .filter_map(|pair| candidate_key(pair.a, pair.b, modulus).map(|k| Candidate { pair, k }))
        .take(top_n)
        .collect();
    CandidateTable { candidates, top_n }
}

/// Total count per recovered key; index is `k`.
pub fn aggregate_k_histogram(pairs: &[AbPair], modulus: u64) -> Vec<u64> {
    let mut hist = vec![0; modulus as usize];
    for p in pairs {
        if let Some(k) = candidate_key(p.a, p.b, modulus) {
            hist[k as usize] += p.count;
        }
    }
    hist
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuccessReport {
    pub hit: bool,
    /// 1-based rank of the first matching candidate.
    pub rank: Option<usize>,
}

pub fn success_check(table: &CandidateTable, k_true: u64) -> SuccessReport {
    let rank = table.candidates.iter().position(|c| c.k == k_true).map(|i| i + 1);
    SuccessReport { hit: rank.is_some(), rank }
}

impl CandidateTable {
    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn top_n(&self) -> usize {
        self.top_n
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// `rank,a,b,k,count,is_target`
    pub fn to_csv(&self, target: Option<u64>) -> String {
        let mut out = String::from("rank,a,b,k,count,is_target\n");
        for (i, c) in self.candidates.iter().enumerate() {
            let is_target = target == Some(c.k);
            writeln!(out, "{},{},{},{},{},{}", i + 1, c.pair.a, c.pair.b, c.k, c.pair.count, is_target).unwrap();
        }
        out
    }

    /// Console listing with `<<<` on rows that decode to `target`.
    pub fn report(&self, target: Option<u64>) -> String {
        let mut out = String::new();
        if let Some(k) = target {
            if success_check(self, k).hit {
                writeln!(out, "SUCCESS \u{2014} k = {k} found in top {} results", self.top_n).unwrap();
            } else {
                writeln!(out, "WARNING \u{2014} k = {k} NOT found in top {} results", self.top_n).unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "Top {} invertible (a, b) pairs and recovered k:", self.top_n).unwrap();
        for c in &self.candidates {
            let tag = if target == Some(c.k) { " <<<" } else { "" };
            writeln!(
                out,
                " (a={:2}, b={:2}) \u{2192} k = {:2} (count = {}){tag}",
                c.pair.a, c.pair.b, c.k, c.pair.count
            )
            .unwrap();
        }
        out
    }
}
