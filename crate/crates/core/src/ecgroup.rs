//! Small short-Weierstrass curves over prime fields and the encoding of a
//! cyclic subgroup `<G>` of order `N = 2^n` as the additive group `Z_N`.
//!
//! Everything here is affine, exhaustive and meant for primes well below
//! `2^32`; the point is to ground the `xG <-> x` index map used by the
//! circuit, not to be fast.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EcError {
    #[error("modulus {0} is not a prime greater than 3")]
    NotPrime(u64),
    #[error("singular curve: 4a^3 + 27b^2 = 0 mod {p}")]
    Singular { p: u64 },
    #[error("point {0} is not on the curve")]
    NotOnCurve(Point),
    #[error("no point of exact order {0} on the curve")]
    NoSuchSubgroup(u64),
    #[error("subgroup order must be a power of two, got {0}")]
    InvalidOrder(u64),
    #[error("generator has order {actual}, expected {expected}")]
    OrderMismatch { expected: u64, actual: u64 },
    #[error("point {0} is not in the encoded subgroup")]
    NotInSubgroup(Point),
    #[error("index {index} out of range for subgroup of order {order}")]
    IndexOutOfRange { index: u64, order: u64 },
}

pub type Result<T> = std::result::Result<T, EcError>;

/// A point on the curve, or the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Point {
    Infinity,
    Affine { x: u64, y: u64 },
}

impl Point {
    pub fn affine(x: u64, y: u64) -> Self {
        Point::Affine { x, y }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Infinity => write!(f, "O"),
            Point::Affine { x, y } => write!(f, "({x}, {y})"),
        }
    }
}

/// `y^2 = x^3 + a x + b` over `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CurveParams {
    p: u64,
    a: u64,
    b: u64,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

fn mul_mod(x: u64, y: u64, m: u64) -> u64 {
    ((x as u128 * y as u128) % m as u128) as u64
}

fn add_mod(x: u64, y: u64, m: u64) -> u64 {
    ((x as u128 + y as u128) % m as u128) as u64
}

fn sub_mod(x: u64, y: u64, m: u64) -> u64 {
    add_mod(x, m - y % m, m)
}

/// Inverse of `x` modulo the prime `p` via extended Euclid.
fn inv_mod_prime(x: u64, p: u64) -> u64 {
    let (mut old_r, mut r) = (x as i128 % p as i128, p as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1, "{x} has no inverse mod {p}");
    old_s.rem_euclid(p as i128) as u64
}

impl CurveParams {
    pub fn new(p: u64, a: u64, b: u64) -> Result<Self> {
        if p <= 3 || !is_prime(p) || p >= 1 << 32 {
            return Err(EcError::NotPrime(p));
        }
        let (a, b) = (a % p, b % p);
        let disc = add_mod(mul_mod(4, mul_mod(a, mul_mod(a, a, p), p), p), mul_mod(27, mul_mod(b, b, p), p), p);
        if disc == 0 {
            return Err(EcError::Singular { p });
        }
        Ok(Self { p, a, b })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn contains(&self, point: &Point) -> bool {
        match *point {
            Point::Infinity => true,
            Point::Affine { x, y } => {
                let p = self.p;
                if x >= p || y >= p {
                    return false;
                }
                let lhs = mul_mod(y, y, p);
                let rhs = add_mod(add_mod(mul_mod(x, mul_mod(x, x, p), p), mul_mod(self.a, x, p), p), self.b, p);
                lhs == rhs
            }
        }
    }

    pub fn negate(&self, point: &Point) -> Point {
        match *point {
            Point::Infinity => Point::Infinity,
            Point::Affine { x, y } => Point::affine(x, (self.p - y) % self.p),
        }
    }

    /// Chord-and-tangent addition. Both inputs must lie on the curve.
    pub fn add(&self, lhs: &Point, rhs: &Point) -> Point {
        let p = self.p;
        match (*lhs, *rhs) {
            (Point::Infinity, q) => q,
            (q, Point::Infinity) => q,
            (Point::Affine { x: x1, y: y1 }, Point::Affine { x: x2, y: y2 }) => {
                let slope = if x1 == x2 {
                    if add_mod(y1, y2, p) == 0 {
                        return Point::Infinity;
                    }
                    // tangent: (3x^2 + a) / 2y
                    let num = add_mod(mul_mod(3, mul_mod(x1, x1, p), p), self.a, p);
                    mul_mod(num, inv_mod_prime(mul_mod(2, y1, p), p), p)
                } else {
                    mul_mod(sub_mod(y2, y1, p), inv_mod_prime(sub_mod(x2, x1, p), p), p)
                };
                let x3 = sub_mod(sub_mod(mul_mod(slope, slope, p), x1, p), x2, p);
                let y3 = sub_mod(mul_mod(slope, sub_mod(x1, x3, p), p), y1, p);
                Point::affine(x3, y3)
            }
        }
    }

    /// Double-and-add scalar multiplication.
    pub fn scalar_mul(&self, k: u64, point: &Point) -> Point {
        let mut acc = Point::Infinity;
        let mut addend = *point;
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(&acc, &addend);
            }
            addend = self.add(&addend, &addend);
            k >>= 1;
        }
        acc
    }

    /// All points of the curve, infinity first, then affine points sorted by `(x, y)`.
    pub fn points(&self) -> Vec<Point> {
        let p = self.p;
        let mut roots: HashMap<u64, Vec<u64>> = HashMap::new();
        for y in 0..p {
            roots.entry(mul_mod(y, y, p)).or_default().push(y);
        }
        let mut out = vec![Point::Infinity];
        for x in 0..p {
            let rhs = add_mod(add_mod(mul_mod(x, mul_mod(x, x, p), p), mul_mod(self.a, x, p), p), self.b, p);
            if let Some(ys) = roots.get(&rhs) {
                out.extend(ys.iter().map(|&y| Point::affine(x, y)));
            }
        }
        out
    }

    /// Order of `point` by repeated addition. Only sensible for small groups.
    pub fn order_of(&self, point: &Point) -> u64 {
        let mut acc = *point;
        let mut order = 1;
        while !acc.is_infinity() {
            acc = self.add(&acc, point);
            order += 1;
        }
        order
    }

    fn has_exact_order(&self, point: &Point, order: u64) -> bool {
        if order == 1 {
            return point.is_infinity();
        }
        self.scalar_mul(order, point).is_infinity() && !self.scalar_mul(order / 2, point).is_infinity()
    }

    /// Smallest point (by `x`, then `y`) of exact power-of-two order `order`.
    pub fn find_generator_of_order(&self, order: u64) -> Result<Point> {
        if !order.is_power_of_two() {
            return Err(EcError::InvalidOrder(order));
        }
        if order == 1 {
            return Ok(Point::Infinity);
        }
        let points = self.points();
        if !(points.len() as u64).is_multiple_of(order) {
            return Err(EcError::NoSuchSubgroup(order));
        }
        points.into_iter().find(|pt| self.has_exact_order(pt, order)).ok_or(EcError::NoSuchSubgroup(order))
    }
}

pub fn point_add(curve: &CurveParams, lhs: &Point, rhs: &Point) -> Point {
    curve.add(lhs, rhs)
}

pub fn scalar_mul(curve: &CurveParams, k: u64, point: &Point) -> Point {
    curve.scalar_mul(k, point)
}

pub fn find_generator_of_order(curve: &CurveParams, order: u64) -> Result<Point> {
    curve.find_generator_of_order(order)
}

/// The isomorphism `<G> -> (Z_N, +)`, `xG <-> x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgroupEncoding {
    curve: CurveParams,
    generator: Point,
    table: Vec<Point>,
    index: HashMap<Point, u64>,
}

impl SubgroupEncoding {
    pub fn build(curve: CurveParams, generator: Point, order: u64) -> Result<Self> {
        if !curve.contains(&generator) {
            return Err(EcError::NotOnCurve(generator));
        }
        if !order.is_power_of_two() {
            return Err(EcError::InvalidOrder(order));
        }
        let actual = curve.order_of(&generator);
        if actual != order {
            return Err(EcError::OrderMismatch { expected: order, actual });
        }
        let mut table = Vec::with_capacity(order as usize);
        let mut acc = Point::Infinity;
        for _ in 0..order {
            table.push(acc);
            acc = curve.add(&acc, &generator);
        }
        let index = table.iter().enumerate().map(|(i, pt)| (*pt, i as u64)).collect();
        Ok(Self { curve, generator, table, index })
    }

    pub fn curve(&self) -> &CurveParams {
        &self.curve
    }

    pub fn generator(&self) -> Point {
        self.generator
    }

    pub fn order(&self) -> u64 {
        self.table.len() as u64
    }

    pub fn point(&self, index: u64) -> Result<Point> {
        self.table.get(index as usize).copied().ok_or(EcError::IndexOutOfRange { index, order: self.order() })
    }

    pub fn index_of(&self, point: &Point) -> Result<u64> {
        self.index.get(point).copied().ok_or(EcError::NotInSubgroup(*point))
    }

    pub fn table(&self) -> &[Point] {
        &self.table
    }
}

pub fn build_encoding(curve: CurveParams, generator: Point, order: u64) -> Result<SubgroupEncoding> {
    SubgroupEncoding::build(curve, generator, order)
}

/// Classical ground truth: linear scan of the encoding table.
pub fn discrete_log_bruteforce(encoding: &SubgroupEncoding, target: &Point) -> Result<u64> {
    encoding.table().iter().position(|pt| pt == target).map(|i| i as u64).ok_or(EcError::NotInSubgroup(*target))
}

/// On-disk form of a curve with a chosen subgroup generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveFixture {
    pub p: u64,
    pub a: u64,
    pub b: u64,
    pub generator: [u64; 2],
    pub order: u64,
}

impl CurveFixture {
    pub fn from_encoding(encoding: &SubgroupEncoding) -> Self {
        let curve = encoding.curve();
        let generator = match encoding.generator() {
            Point::Affine { x, y } => [x, y],
            // order-1 subgroups have no affine generator; never written by the tools
            Point::Infinity => [0, 0],
        };
        Self { p: curve.p(), a: curve.a(), b: curve.b(), generator, order: encoding.order() }
    }

    pub fn to_encoding(&self) -> Result<SubgroupEncoding> {
        let curve = CurveParams::new(self.p, self.a, self.b)?;
        let [x, y] = self.generator;
        SubgroupEncoding::build(curve, Point::affine(x, y), self.order)
    }
}

/// Deterministic search: ascending primes `p > 3`, then ascending `a`, then
/// ascending `b`, stopping at the first non-singular curve that has a point of
/// exact order `order`. The generator is the smallest such point.
pub fn search_curve_with_subgroup(order: u64) -> Result<SubgroupEncoding> {
    if !order.is_power_of_two() || order < 2 {
        return Err(EcError::InvalidOrder(order));
    }
    for p in (5u64..).filter(|&p| is_prime(p)) {
        for a in 0..p {
            for b in 0..p {
                let Ok(curve) = CurveParams::new(p, a, b) else { continue };
                if let Ok(generator) = curve.find_generator_of_order(order) {
                    return SubgroupEncoding::build(curve, generator, order);
                }
            }
        }
    }
    unreachable!("prime search is unbounded")
}

const DEFAULT_CURVE_JSON: &str = include_str!("../fixtures/default_curve.json");

/// The shipped order-32 curve, as recorded in `fixtures/default_curve.json`.
pub fn default_fixture() -> CurveFixture {
    serde_json::from_str(DEFAULT_CURVE_JSON).expect("bundled curve fixture is valid JSON")
}

/// Encoding for `Z_{2^n}`. Uses the bundled fixture for `n = 5` and reruns the
/// curve search for every other width.
pub fn default_encoding(n: u32) -> Result<SubgroupEncoding> {
    let order = 1u64 << n;
    let fixture = default_fixture();
    if fixture.order == order {
        return fixture.to_encoding();
    }
    search_curve_with_subgroup(order)
}

/// A discrete-log instance over an encoded subgroup.
#[derive(Debug, Clone)]
pub struct EcdlpInstance {
    encoding: SubgroupEncoding,
    p_index: u64,
    q_index: u64,
    secret_k: Option<u64>,
}

impl EcdlpInstance {
    /// Self-consistent instance: `Q = k P`, and `q_index` is recovered from the
    /// point `Q` through the encoding, never from `k` directly.
    pub fn consistent(encoding: SubgroupEncoding, p_index: u64, k: u64) -> Result<Self> {
        let order = encoding.order();
        let base = encoding.point(p_index)?;
        let public = encoding.curve().scalar_mul(k, &base);
        let q_index = encoding.index_of(&public)?;
        debug_assert_eq!(q_index, (k % order) * p_index % order);
        Ok(Self { encoding, p_index, q_index, secret_k: Some(k % order) })
    }

    /// Takes `q_index` verbatim, as the original experiment hardcodes it.
    pub fn with_indices(encoding: SubgroupEncoding, p_index: u64, q_index: u64, secret_k: Option<u64>) -> Result<Self> {
        let order = encoding.order();
        for index in [p_index, q_index] {
            if index >= order {
                return Err(EcError::IndexOutOfRange { index, order });
            }
        }
        Ok(Self { encoding, p_index, q_index, secret_k })
    }

    pub fn encoding(&self) -> &SubgroupEncoding {
        &self.encoding
    }

    pub fn p_index(&self) -> u64 {
        self.p_index
    }

    pub fn q_index(&self) -> u64 {
        self.q_index
    }

    pub fn secret_k(&self) -> Option<u64> {
        self.secret_k
    }

    pub fn base_point(&self) -> Point {
        self.encoding.table()[self.p_index as usize]
    }

    pub fn public_point(&self) -> Point {
        self.encoding.table()[self.q_index as usize]
    }
}
