//! Pitch-class sets as bitmasks over `Z_n`.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::residue::{Modulus, ResidueAffineMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PcSetError {
    #[error("pitch class {value} out of range for modulus {modulus}")]
    OutOfRange { value: i64, modulus: u32 },
    #[error("pitch class {0} listed twice")]
    Duplicate(u32),
    #[error("cannot parse pitch-class list {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

/// A subset of `Z_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PcSet {
    bits: u64,
    modulus: Modulus,
}

impl PcSet {
    pub fn empty(modulus: Modulus) -> Self {
        PcSet { bits: 0, modulus }
    }

    pub fn full(modulus: Modulus) -> Self {
        PcSet {
            bits: full_mask(modulus),
            modulus,
        }
    }

    /// Builds a set from distinct residues in `0..n`.
    pub fn new<I>(elements: I, modulus: Modulus) -> Result<Self, PcSetError>
    where
        I: IntoIterator<Item = u32>,
    {
        let mut bits = 0u64;
        for x in elements {
            if x >= modulus.get() {
                return Err(PcSetError::OutOfRange {
                    value: i64::from(x),
                    modulus: modulus.get(),
                });
            }
            if bits & (1 << x) != 0 {
                return Err(PcSetError::Duplicate(x));
            }
            bits |= 1 << x;
        }
        Ok(PcSet { bits, modulus })
    }

    /// Builds a set from arbitrary integers, reducing them mod `n`.
    pub fn from_reduced<I>(elements: I, modulus: Modulus) -> Self
    where
        I: IntoIterator<Item = i64>,
    {
        let bits = elements
            .into_iter()
            .fold(0u64, |acc, x| acc | (1 << modulus.reduce(x)));
        PcSet { bits, modulus }
    }

    pub fn from_bits(bits: u64, modulus: Modulus) -> Self {
        PcSet {
            bits: bits & full_mask(modulus),
            modulus,
        }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn contains(&self, x: u32) -> bool {
        x < self.modulus.get() && self.bits & (1 << x) != 0
    }

    /// Elements in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        let bits = self.bits;
        self.modulus.residues().filter(move |&x| bits & (1 << x) != 0)
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }

    pub fn complement(&self) -> Self {
        PcSet {
            bits: !self.bits & full_mask(self.modulus),
            modulus: self.modulus,
        }
    }

    pub fn union(&self, other: &PcSet) -> Self {
        PcSet {
            bits: self.bits | other.bits,
            modulus: self.modulus,
        }
    }

    pub fn intersection(&self, other: &PcSet) -> Self {
        PcSet {
            bits: self.bits & other.bits,
            modulus: self.modulus,
        }
    }

    pub fn is_subset(&self, other: &PcSet) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn insert(&mut self, x: u32) {
        self.bits |= 1 << (x % self.modulus.get());
    }

    pub fn remove(&mut self, x: u32) {
        self.bits &= !(1 << (x % self.modulus.get()));
    }

    /// The image `{m(x) : x ∈ self}`.
    pub fn image(&self, m: &ResidueAffineMap) -> Self {
        let bits = self.iter().fold(0u64, |acc, x| acc | (1 << m.apply(x)));
        PcSet {
            bits,
            modulus: self.modulus,
        }
    }

    pub fn transpose(&self, t: i64) -> Self {
        self.image(&ResidueAffineMap::translation(t, self.modulus))
    }

    /// Parses a comma-separated list such as `0,2,4,6,8,11`.
    pub fn parse(text: &str, modulus: Modulus) -> Result<Self, PcSetError> {
        let parse_err = |reason: String| PcSetError::Parse {
            input: text.to_string(),
            reason,
        };
        if text.trim().is_empty() {
            return Ok(Self::empty(modulus));
        }
        let mut values = Vec::new();
        for item in text.split(',') {
            let item = item.trim();
            let value: i64 = item
                .parse()
                .map_err(|_| parse_err(format!("{item:?} is not an integer")))?;
            if !(0..i64::from(modulus.get())).contains(&value) {
                return Err(PcSetError::OutOfRange {
                    value,
                    modulus: modulus.get(),
                });
            }
            values.push(value as u32);
        }
        Self::new(values, modulus)
    }
}

fn full_mask(modulus: Modulus) -> u64 {
    if modulus.get() == 64 {
        u64::MAX
    } else {
        (1u64 << modulus.get()) - 1
    }
}

impl fmt::Display for PcSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for x in self.iter() {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{x}")?;
            first = false;
        }
        Ok(())
    }
}

impl Serialize for PcSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

/// Iterates every subset of `Z_n` of size `k` in increasing bitmask order.
pub fn subsets_of_size(modulus: Modulus, k: u32) -> impl Iterator<Item = PcSet> {
    let n = modulus.get();
    let limit = full_mask(modulus);
    let mut next = if k == 0 {
        Some(0u64)
    } else if k > n {
        None
    } else {
        Some(if k == 64 { u64::MAX } else { (1u64 << k) - 1 })
    };
    std::iter::from_fn(move || {
        let current = next?;
        // Gosper's hack
        next = if current == 0 {
            None
        } else {
            let c = current & current.wrapping_neg();
            let r = current.wrapping_add(c);
            if r == 0 {
                None
            } else {
                let candidate = (((r ^ current) >> 2) / c) | r;
                (candidate <= limit && candidate.count_ones() == k).then_some(candidate)
            }
        };
        Some(PcSet::from_bits(current, modulus))
    })
}
