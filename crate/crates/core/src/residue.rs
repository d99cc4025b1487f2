//! Exact arithmetic on `Z_n`, affine maps of `Z_n`, the dual numbers
//! `Z_n[ε]` (with `ε² = 0`) and the affine group of `Z_n[ε]`.
//!
//! Every value carries its [`Modulus`]; residues are stored in canonical
//! form `0..n`, so derived equality is structural. Operations that combine
//! two values with different moduli fail with
//! [`AlgebraError::ModulusMismatch`].
//!
//! Composition follows functional notation: `f.compose(&g)` is the map
//! `x ↦ f(g(x))`, i.e. `g` is applied first.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("invalid modulus {0}: expected an even integer in 4..=64")]
    InvalidModulus(u32),
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u32, right: u32 },
    #[error("{0} is not invertible")]
    NotInvertible(String),
    #[error("cannot parse {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

fn parse_error(input: &str, reason: impl Into<String>) -> AlgebraError {
    AlgebraError::Parse {
        input: input.to_string(),
        reason: reason.into(),
    }
}

/// The modulus `n` of the pitch-class ring `Z_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Modulus(u32);

impl Modulus {
    pub const TWELVE: Modulus = Modulus(12);
    /// Largest supported modulus; pitch-class sets are `u64` bitmasks.
    pub const MAX: u32 = 64;

    pub fn new(n: u32) -> Result<Self, AlgebraError> {
        if n < 4 || !n.is_multiple_of(2) || n > Self::MAX {
            return Err(AlgebraError::InvalidModulus(n));
        }
        Ok(Modulus(n))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    /// `n / 2`, the size of each half of a dichotomy.
    #[inline]
    pub fn half(self) -> u32 {
        self.0 / 2
    }

    #[inline]
    pub fn reduce(self, x: i64) -> u32 {
        x.rem_euclid(i64::from(self.0)) as u32
    }

    #[inline]
    pub(crate) fn add(self, x: u32, y: u32) -> u32 {
        (x + y) % self.0
    }

    #[inline]
    pub(crate) fn mul(self, x: u32, y: u32) -> u32 {
        (x * y) % self.0
    }

    #[inline]
    pub(crate) fn neg(self, x: u32) -> u32 {
        (self.0 - x) % self.0
    }

    pub fn is_unit(self, v: u32) -> bool {
        gcd(v % self.0, self.0) == 1
    }

    /// Multiplicative inverse of `v`, if `v` is a unit.
    pub fn inverse(self, v: u32) -> Option<u32> {
        let v = v % self.0;
        (1..self.0).find(|&w| self.mul(v, w) == 1)
    }

    /// The unit group in increasing order (`{1, 5, 7, 11}` for `n = 12`).
    pub fn units(self) -> Vec<u32> {
        (1..self.0).filter(|&v| self.is_unit(v)).collect()
    }

    /// Every residue `0..n`.
    pub fn residues(self) -> std::ops::Range<u32> {
        0..self.0
    }

    fn check(self, other: Modulus) -> Result<(), AlgebraError> {
        if self == other {
            Ok(())
        } else {
            Err(AlgebraError::ModulusMismatch {
                left: self.0,
                right: other.0,
            })
        }
    }
}

impl Default for Modulus {
    fn default() -> Self {
        Modulus::TWELVE
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub(crate) fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Parses a canonical residue: decimal digits, no sign, no leading zero,
/// strictly below the modulus.
pub(crate) fn parse_residue(text: &str, modulus: Modulus, whole: &str) -> Result<u32, AlgebraError> {
    if text.is_empty() {
        return Err(parse_error(whole, "missing residue"));
    }
    if !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(parse_error(whole, format!("{text:?} is not a residue")));
    }
    if text.len() > 1 && text.starts_with('0') {
        return Err(parse_error(whole, format!("{text:?} has a leading zero")));
    }
    let value: u32 = text
        .parse()
        .map_err(|_| parse_error(whole, format!("{text:?} is out of range")))?;
    if value >= modulus.get() {
        return Err(parse_error(
            whole,
            format!("{value} is not a canonical residue mod {modulus}"),
        ));
    }
    Ok(value)
}

/// The affine map `e^u.v : x ↦ v·x + u` of `Z_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResidueAffineMap {
    u: u32,
    v: u32,
    modulus: Modulus,
}

impl ResidueAffineMap {
    pub fn new(u: i64, v: i64, modulus: Modulus) -> Self {
        ResidueAffineMap {
            u: modulus.reduce(u),
            v: modulus.reduce(v),
            modulus,
        }
    }

    pub fn identity(modulus: Modulus) -> Self {
        Self::new(0, 1, modulus)
    }

    pub fn translation(t: i64, modulus: Modulus) -> Self {
        Self::new(t, 1, modulus)
    }

    /// Translation part.
    pub fn u(&self) -> u32 {
        self.u
    }

    /// Linear part.
    pub fn v(&self) -> u32 {
        self.v
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn is_identity(&self) -> bool {
        self.u == 0 && self.v == 1
    }

    pub fn is_invertible(&self) -> bool {
        self.modulus.is_unit(self.v)
    }

    #[inline]
    pub fn apply(&self, x: u32) -> u32 {
        let m = self.modulus;
        m.add(m.mul(self.v, x % m.get()), self.u)
    }

    /// `x ↦ self(g(x))`.
    pub fn compose(&self, g: &ResidueAffineMap) -> Result<Self, AlgebraError> {
        self.modulus.check(g.modulus)?;
        let m = self.modulus;
        Ok(ResidueAffineMap {
            u: m.add(self.u, m.mul(self.v, g.u)),
            v: m.mul(self.v, g.v),
            modulus: m,
        })
    }

    pub fn invert(&self) -> Result<Self, AlgebraError> {
        let m = self.modulus;
        let w = m
            .inverse(self.v)
            .ok_or_else(|| AlgebraError::NotInvertible(self.to_string()))?;
        Ok(ResidueAffineMap {
            u: m.neg(m.mul(w, self.u)),
            v: w,
            modulus: m,
        })
    }

    /// All `n²` affine maps, ordered by linear part, then translation.
    pub fn all(modulus: Modulus) -> impl Iterator<Item = ResidueAffineMap> {
        modulus.residues().flat_map(move |v| {
            modulus.residues().map(move |u| ResidueAffineMap { u, v, modulus })
        })
    }

    /// The `φ(n)·n` invertible maps, ordered by linear part, then translation.
    pub fn invertible(modulus: Modulus) -> Vec<ResidueAffineMap> {
        Self::all(modulus).filter(|m| m.is_invertible()).collect()
    }

    pub fn parse(text: &str, modulus: Modulus) -> Result<Self, AlgebraError> {
        let body = text
            .strip_prefix("e^")
            .ok_or_else(|| parse_error(text, "expected `e^u.v`"))?;
        let (u, v) = body
            .split_once('.')
            .ok_or_else(|| parse_error(text, "expected `e^u.v`"))?;
        Ok(ResidueAffineMap {
            u: parse_residue(u, modulus, text)?,
            v: parse_residue(v, modulus, text)?,
            modulus,
        })
    }
}

impl fmt::Display for ResidueAffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e^{}.{}", self.u, self.v)
    }
}

impl FromStr for ResidueAffineMap {
    type Err = AlgebraError;

    /// Parses against the default modulus 12.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s, Modulus::TWELVE)
    }
}

impl Serialize for ResidueAffineMap {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A dual number `a + ε·b` in `Z_n[ε]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualNumber {
    a: u32,
    b: u32,
    modulus: Modulus,
}

impl DualNumber {
    pub fn new(a: i64, b: i64, modulus: Modulus) -> Self {
        DualNumber {
            a: modulus.reduce(a),
            b: modulus.reduce(b),
            modulus,
        }
    }

    pub fn zero(modulus: Modulus) -> Self {
        Self::new(0, 0, modulus)
    }

    pub fn one(modulus: Modulus) -> Self {
        Self::new(1, 0, modulus)
    }

    /// The nilpotent generator `ε`.
    pub fn epsilon(modulus: Modulus) -> Self {
        Self::new(0, 1, modulus)
    }

    /// Base part.
    pub fn a(&self) -> u32 {
        self.a
    }

    /// `ε` part.
    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn is_unit(&self) -> bool {
        self.modulus.is_unit(self.a)
    }

    pub fn checked_add(&self, rhs: &DualNumber) -> Result<Self, AlgebraError> {
        self.modulus.check(rhs.modulus)?;
        let m = self.modulus;
        Ok(DualNumber {
            a: m.add(self.a, rhs.a),
            b: m.add(self.b, rhs.b),
            modulus: m,
        })
    }

    /// `(a + εb)(c + εd) = ac + ε(ad + bc)`.
    pub fn checked_mul(&self, rhs: &DualNumber) -> Result<Self, AlgebraError> {
        self.modulus.check(rhs.modulus)?;
        let m = self.modulus;
        Ok(DualNumber {
            a: m.mul(self.a, rhs.a),
            b: m.add(m.mul(self.a, rhs.b), m.mul(self.b, rhs.a)),
            modulus: m,
        })
    }

    pub fn neg(&self) -> Self {
        let m = self.modulus;
        DualNumber {
            a: m.neg(self.a),
            b: m.neg(self.b),
            modulus: m,
        }
    }

    /// `(a + εb)⁻¹ = a⁻¹ − ε·b·a⁻²`.
    pub fn invert(&self) -> Result<Self, AlgebraError> {
        let m = self.modulus;
        let w = m
            .inverse(self.a)
            .ok_or_else(|| AlgebraError::NotInvertible(self.to_string()))?;
        Ok(DualNumber {
            a: w,
            b: m.neg(m.mul(self.b, m.mul(w, w))),
            modulus: m,
        })
    }

    /// All `n²` dual numbers, ordered by base part, then `ε` part.
    pub fn all(modulus: Modulus) -> impl Iterator<Item = DualNumber> {
        modulus
            .residues()
            .flat_map(move |a| modulus.residues().map(move |b| DualNumber { a, b, modulus }))
    }

    pub fn parse(text: &str, modulus: Modulus) -> Result<Self, AlgebraError> {
        let (a, b) = text
            .split_once("+e")
            .ok_or_else(|| parse_error(text, "expected `x+ek`"))?;
        Ok(DualNumber {
            a: parse_residue(a, modulus, text)?,
            b: parse_residue(b, modulus, text)?,
            modulus,
        })
    }
}

impl fmt::Display for DualNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+e{}", self.a, self.b)
    }
}

impl FromStr for DualNumber {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s, Modulus::TWELVE)
    }
}

/// The affine map `z ↦ linear·z + translation` of `Z_n[ε]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualAffineMap {
    linear: DualNumber,
    translation: DualNumber,
}

impl DualAffineMap {
    pub fn new(linear: DualNumber, translation: DualNumber) -> Result<Self, AlgebraError> {
        linear.modulus.check(translation.modulus)?;
        Ok(DualAffineMap {
            linear,
            translation,
        })
    }

    pub(crate) fn from_parts(a: u32, b: u32, s: u32, t: u32, modulus: Modulus) -> Self {
        DualAffineMap {
            linear: DualNumber { a, b, modulus },
            translation: DualNumber { a: s, b: t, modulus },
        }
    }

    pub fn identity(modulus: Modulus) -> Self {
        DualAffineMap {
            linear: DualNumber::one(modulus),
            translation: DualNumber::zero(modulus),
        }
    }

    pub fn linear(&self) -> DualNumber {
        self.linear
    }

    pub fn translation(&self) -> DualNumber {
        self.translation
    }

    pub fn modulus(&self) -> Modulus {
        self.linear.modulus
    }

    pub fn is_invertible(&self) -> bool {
        self.linear.is_unit()
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.modulus())
    }

    pub fn apply(&self, z: &DualNumber) -> Result<DualNumber, AlgebraError> {
        self.linear.checked_mul(z)?.checked_add(&self.translation)
    }

    /// Applies the map to `c + εt` given as raw canonical parts.
    #[inline]
    pub(crate) fn apply_parts(&self, c: u32, t: u32) -> (u32, u32) {
        let m = self.modulus();
        let (a, b) = (self.linear.a, self.linear.b);
        (
            m.add(m.mul(a, c), self.translation.a),
            m.add(m.add(m.mul(a, t), m.mul(b, c)), self.translation.b),
        )
    }

    /// `z ↦ self(g(z))`.
    pub fn compose(&self, g: &DualAffineMap) -> Result<Self, AlgebraError> {
        let linear = self.linear.checked_mul(&g.linear)?;
        let translation = self
            .linear
            .checked_mul(&g.translation)?
            .checked_add(&self.translation)?;
        Ok(DualAffineMap {
            linear,
            translation,
        })
    }

    pub fn invert(&self) -> Result<Self, AlgebraError> {
        let inv = self
            .linear
            .invert()
            .map_err(|_| AlgebraError::NotInvertible(self.to_string()))?;
        let translation = inv.checked_mul(&self.translation)?.neg();
        Ok(DualAffineMap {
            linear: inv,
            translation,
        })
    }
}

impl fmt::Display for DualAffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e^({}).({})", self.translation, self.linear)
    }
}

impl Serialize for DualAffineMap {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Every invertible affine map of `Z_n[ε]`, each exactly once
/// (`φ(n)·n·n²` maps; 6912 for `n = 12`).
pub fn enumerate_dual_symmetries(modulus: Modulus) -> Vec<DualAffineMap> {
    let mut out = Vec::new();
    for a in modulus.units() {
        for b in modulus.residues() {
            for s in modulus.residues() {
                for t in modulus.residues() {
                    out.push(DualAffineMap::from_parts(a, b, s, t, modulus));
                }
            }
        }
    }
    out
}
