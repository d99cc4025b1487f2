//! Counterpoint worlds: per-step counts of counterpoint symmetries over all
//! `n⁴` steps between dual intervals, plus the queries built on them.
//!
//! A dual interval `ξ = x + εk` pairs a cantus pitch class `x` with an
//! interval `k`; it is consonant when `k ∈ K`. For a strong dichotomy with
//! polarity `e^u.v` the local polarity at cantus `x` is
//! `(c + εt) ↦ (v·c + (1−v)·x) + ε(v·t + u)`. The counterpoint symmetries of
//! `ξ` are the invertible dual affine maps `g` that
//!
//! 1. deform: `ξ ∈ g(S̄[ε])`, with `S` the species of `ξ` and `S̄` the other;
//! 2. commute with the local polarity at `x`;
//! 3. maximize `|g(S[ε]) ∩ S[ε]|` among maps meeting 1 and 2.
//!
//! How those maps are turned into a step count is a [`ModelVariant`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dichotomy::Dichotomy;
use crate::pcset::PcSet;
use crate::residue::{enumerate_dual_symmetries, AlgebraError, DualAffineMap, DualNumber, Modulus, ResidueAffineMap};
use crate::stats::{Histogram, Moments, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("dichotomy {0} is not strong")]
    NotStrong(String),
    #[error("modulus mismatch: {left} vs {right}")]
    ModulusMismatch { left: u32, right: u32 },
    #[error("step {from}>{to} has {count} symmetries, more than a byte can hold")]
    CountOverflow {
        from: String,
        to: String,
        count: usize,
    },
    #[error("{0} has no valid successor")]
    DeadEnd(String),
    #[error("count matrix has {found} entries, expected {expected}")]
    InvalidCounts { expected: usize, found: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// The contrapuntal interval `x + εk`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualInterval {
    cantus: u32,
    interval: u32,
    modulus: Modulus,
}

impl DualInterval {
    pub fn new(cantus: i64, interval: i64, modulus: Modulus) -> Self {
        DualInterval {
            cantus: modulus.reduce(cantus),
            interval: modulus.reduce(interval),
            modulus,
        }
    }

    pub fn cantus(&self) -> u32 {
        self.cantus
    }

    pub fn interval(&self) -> u32 {
        self.interval
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    /// Pitch class of the upper voice, `x + k`.
    pub fn upper_voice(&self) -> u32 {
        (self.cantus + self.interval) % self.modulus.get()
    }

    /// Row-major position `x·n + k`.
    pub fn index(&self) -> usize {
        (self.cantus * self.modulus.get() + self.interval) as usize
    }

    pub fn from_index(index: usize, modulus: Modulus) -> Self {
        let n = modulus.get() as usize;
        DualInterval {
            cantus: (index / n % n) as u32,
            interval: (index % n) as u32,
            modulus,
        }
    }

    /// Shifts the cantus by `t`, keeping the interval.
    pub fn transpose(&self, t: i64) -> Self {
        Self::new(i64::from(self.cantus) + t, i64::from(self.interval), self.modulus)
    }

    pub fn is_consonant(&self, d: &Dichotomy) -> bool {
        d.is_marked(self.interval)
    }

    pub fn to_dual(&self) -> DualNumber {
        DualNumber::new(i64::from(self.cantus), i64::from(self.interval), self.modulus)
    }

    pub fn from_dual(z: &DualNumber) -> Self {
        DualInterval {
            cantus: z.a(),
            interval: z.b(),
            modulus: z.modulus(),
        }
    }

    /// All `n²` intervals in row-major order.
    pub fn all(modulus: Modulus) -> impl Iterator<Item = DualInterval> {
        (0..(modulus.get() * modulus.get()) as usize).map(move |i| Self::from_index(i, modulus))
    }

    /// Parses `x+ek`.
    pub fn parse(text: &str, modulus: Modulus) -> Result<Self, AlgebraError> {
        DualNumber::parse(text, modulus).map(|z| Self::from_dual(&z))
    }
}

impl fmt::Display for DualInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+e{}", self.cantus, self.interval)
    }
}

impl FromStr for DualInterval {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s, Modulus::TWELVE)
    }
}

impl Serialize for DualInterval {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A set of dual intervals, stored as a bitmask over row-major indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointSet {
    words: Vec<u64>,
    size: usize,
}

impl PointSet {
    pub fn empty(modulus: Modulus) -> Self {
        let size = (modulus.get() * modulus.get()) as usize;
        PointSet {
            words: vec![0; size.div_ceil(64)],
            size,
        }
    }

    /// Intervals whose interval part lies in `species`.
    pub fn species(species: &PcSet) -> Self {
        let m = species.modulus();
        let mut set = Self::empty(m);
        for xi in DualInterval::all(m) {
            if species.contains(xi.interval) {
                set.insert(xi.index());
            }
        }
        set
    }

    /// The image `g(self)`.
    pub fn image(&self, g: &DualAffineMap, modulus: Modulus) -> Self {
        let n = modulus.get();
        let mut out = Self::empty(modulus);
        for i in self.iter() {
            let (c, t) = g.apply_parts(i as u32 / n, i as u32 % n);
            out.insert((c * n + t) as usize);
        }
        out
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn complement(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        let tail = self.size % 64;
        if tail != 0 {
            *words.last_mut().expect("nonempty") &= (1u64 << tail) - 1;
        }
        PointSet {
            words,
            size: self.size,
        }
    }

    pub fn intersection_len(&self, other: &PointSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).filter(move |&i| self.contains(i))
    }
}

/// How the local polarity moves the cantus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CantusAction {
    /// `c ↦ v·c + (1−v)·x`.
    Affine,
    /// `c ↦ c`.
    Identity,
}

/// The overlap maximized by condition 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Maximized {
    /// `|g(S[ε]) ∩ S[ε]|` for the species `S` of `ξ`.
    SourceSpecies,
    /// `|g(K[ε]) ∩ K[ε]|`.
    Consonances,
}

/// Which deformed species a successor must fall in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuccessorRule {
    /// `η ∈ g(S_η[ε])`.
    SuccessorSpecies,
    /// `η ∈ g(S_ξ[ε])`.
    SourceSpecies,
}

/// What is counted per step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Multiplicity {
    /// Every symmetry `g`.
    Maps,
    /// Every distinct deformed species `g(S_ξ[ε])`.
    Deformations,
}

/// A choice of world model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ModelVariant {
    pub cantus_action: CantusAction,
    pub maximized: Maximized,
    pub successor_rule: SuccessorRule,
    pub multiplicity: Multiplicity,
    /// Read mixed-species steps from the world of the dual dichotomy `D/K`.
    pub mixed_from_dual: bool,
}

impl ModelVariant {
    /// Count symmetry maps; successors must lie in their own deformed species.
    pub const BASELINE: ModelVariant = ModelVariant {
        cantus_action: CantusAction::Affine,
        maximized: Maximized::SourceSpecies,
        successor_rule: SuccessorRule::SuccessorSpecies,
        multiplicity: Multiplicity::Maps,
        mixed_from_dual: false,
    };

    /// Count distinct deformations; successors must lie in the deformed
    /// species of the source interval.
    pub const DEFORMATIONS: ModelVariant = ModelVariant {
        cantus_action: CantusAction::Affine,
        maximized: Maximized::SourceSpecies,
        successor_rule: SuccessorRule::SourceSpecies,
        multiplicity: Multiplicity::Deformations,
        mixed_from_dual: false,
    };

    /// The candidate models in the order they are tried.
    pub fn ladder() -> Vec<(&'static str, ModelVariant)> {
        let base = Self::BASELINE;
        vec![
            ("baseline", base),
            (
                "a",
                ModelVariant {
                    cantus_action: CantusAction::Identity,
                    ..base
                },
            ),
            (
                "b",
                ModelVariant {
                    maximized: Maximized::Consonances,
                    ..base
                },
            ),
            (
                "c",
                ModelVariant {
                    mixed_from_dual: true,
                    ..base
                },
            ),
            ("d", Self::DEFORMATIONS),
        ]
    }

    /// Ladder label, if the variant is one of the rungs.
    pub fn rung(&self) -> Option<&'static str> {
        Self::ladder()
            .into_iter()
            .find(|(_, v)| v == self)
            .map(|(name, _)| name)
    }

    /// Stable textual identity, used in reports and cache keys.
    pub fn fingerprint(&self) -> String {
        format!(
            "cantus={};max={};successor={};count={};mixed={}",
            match self.cantus_action {
                CantusAction::Affine => "affine",
                CantusAction::Identity => "identity",
            },
            match self.maximized {
                Maximized::SourceSpecies => "source",
                Maximized::Consonances => "consonances",
            },
            match self.successor_rule {
                SuccessorRule::SuccessorSpecies => "successor",
                SuccessorRule::SourceSpecies => "source",
            },
            match self.multiplicity {
                Multiplicity::Maps => "maps",
                Multiplicity::Deformations => "deformations",
            },
            if self.mixed_from_dual { "dual" } else { "same" },
        )
    }
}

impl Default for ModelVariant {
    fn default() -> Self {
        Self::DEFORMATIONS
    }
}


/// The local polarity at a cantus pitch class, `(c + εt) ↦ (α·c + β) + ε(γ·t + δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LocalPolarity {
    pub cantus: u32,
    #[serde(skip)]
    modulus: Modulus,
    base: (u32, u32),
    epsilon: (u32, u32),
}

impl LocalPolarity {
    #[inline]
    fn apply_parts(&self, c: u32, t: u32) -> (u32, u32) {
        let m = self.modulus;
        (
            m.add(m.mul(self.base.0, c), self.base.1),
            m.add(m.mul(self.epsilon.0, t), self.epsilon.1),
        )
    }

    pub fn apply(&self, xi: &DualInterval) -> DualInterval {
        let (c, t) = self.apply_parts(xi.cantus, xi.interval);
        DualInterval {
            cantus: c,
            interval: t,
            modulus: self.modulus,
        }
    }

    /// The polarity as an affine map of `Z_n[ε]`; absent when the base and
    /// `ε` parts scale differently.
    pub fn as_dual_map(&self) -> Option<DualAffineMap> {
        (self.base.0 == self.epsilon.0).then(|| {
            DualAffineMap::from_parts(self.base.0, 0, self.base.1, self.epsilon.1, self.modulus)
        })
    }

    /// `g∘P = P∘g` on every point of `Z_n[ε]`.
    pub fn commutes_pointwise(&self, g: &DualAffineMap) -> bool {
        let m = self.modulus;
        m.residues().all(|c| {
            m.residues().all(|t| {
                let (pc, pt) = self.apply_parts(c, t);
                let (gc, gt) = g.apply_parts(c, t);
                g.apply_parts(pc, pt) == self.apply_parts(gc, gt)
            })
        })
    }

    /// `g∘P = P∘g` compared as affine maps; `None` when `P` is not affine.
    pub fn commutes_algebraic(&self, g: &DualAffineMap) -> Option<bool> {
        let p = self.as_dual_map()?;
        Some(matches!(
            (g.compose(&p), p.compose(g)),
            (Ok(a), Ok(b)) if a == b
        ))
    }

    pub fn commutes(&self, g: &DualAffineMap) -> bool {
        self.commutes_algebraic(g)
            .unwrap_or_else(|| self.commutes_pointwise(g))
    }
}

impl fmt::Display for LocalPolarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(c+et) -> ({}c+{})+e({}t+{})",
            self.base.0, self.base.1, self.epsilon.0, self.epsilon.1
        )
    }
}

pub fn local_polarity(d: &Dichotomy, x: u32) -> Result<LocalPolarity, WorldError> {
    local_polarity_with(d, x, CantusAction::Affine)
}

pub fn local_polarity_with(
    d: &Dichotomy,
    x: u32,
    action: CantusAction,
) -> Result<LocalPolarity, WorldError> {
    Ok(polarity_at(&strong_polarity(d)?, x, action, d.modulus()))
}

fn strong_polarity(d: &Dichotomy) -> Result<ResidueAffineMap, WorldError> {
    d.strength()
        .strong_polarity()
        .ok_or_else(|| WorldError::NotStrong(d.to_string()))
}

fn polarity_at(p: &ResidueAffineMap, x: u32, action: CantusAction, m: Modulus) -> LocalPolarity {
    let x = x % m.get();
    let base = match action {
        CantusAction::Affine => (p.v(), m.mul(m.add(1, m.neg(p.v())), x)),
        CantusAction::Identity => (1, 0),
    };
    LocalPolarity {
        cantus: x,
        modulus: m,
        base,
        epsilon: (p.v(), p.u()),
    }
}

/// A candidate symmetry with its deformed species.
#[derive(Debug, Clone)]
struct Deformed {
    map: DualAffineMap,
    /// `g(K[ε])`.
    consonant: PointSet,
    /// `g(S_ξ[ε])`.
    species: PointSet,
}

/// Computes counterpoint symmetries and step counts for one dichotomy.
#[derive(Debug, Clone)]
pub struct SymmetryEngine {
    dichotomy: Dichotomy,
    polarity: ResidueAffineMap,
    variant: ModelVariant,
    group: Vec<DualAffineMap>,
    consonant: PointSet,
    dissonant: PointSet,
}

impl SymmetryEngine {
    pub fn new(d: &Dichotomy, variant: ModelVariant) -> Result<Self, WorldError> {
        let polarity = strong_polarity(d)?;
        let consonant = PointSet::species(&d.half());
        Ok(SymmetryEngine {
            dichotomy: *d,
            polarity,
            variant,
            group: enumerate_dual_symmetries(d.modulus()),
            dissonant: consonant.complement(),
            consonant,
        })
    }

    pub fn dichotomy(&self) -> &Dichotomy {
        &self.dichotomy
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    pub fn modulus(&self) -> Modulus {
        self.dichotomy.modulus()
    }

    pub fn local_polarity(&self, x: u32) -> LocalPolarity {
        polarity_at(&self.polarity, x, self.variant.cantus_action, self.modulus())
    }

    /// Maps of the ambient group commuting with the local polarity at `x`.
    pub fn centralizer(&self, x: u32) -> Vec<DualAffineMap> {
        let p = self.local_polarity(x);
        self.group.iter().filter(|g| p.commutes(g)).copied().collect()
    }

    fn species_points(&self, xi: &DualInterval) -> (&PointSet, &PointSet) {
        if xi.is_consonant(&self.dichotomy) {
            (&self.consonant, &self.dissonant)
        } else {
            (&self.dissonant, &self.consonant)
        }
    }

    fn select(&self, xi: &DualInterval, centralizer: &[DualAffineMap]) -> Vec<Deformed> {
        let m = self.modulus();
        let consonant_xi = xi.is_consonant(&self.dichotomy);
        let (species, other) = self.species_points(xi);
        let mut best = 0usize;
        let mut chosen: Vec<Deformed> = Vec::new();
        for g in centralizer {
            let Ok(inverse) = g.invert() else { continue };
            let (c, t) = inverse.apply_parts(xi.cantus, xi.interval);
            if !other.contains((c * m.get() + t) as usize) {
                continue;
            }
            let consonant = self.consonant.image(g, m);
            let image = if consonant_xi {
                consonant.clone()
            } else {
                consonant.complement()
            };
            let overlap = match self.variant.maximized {
                Maximized::SourceSpecies => image.intersection_len(species),
                Maximized::Consonances => consonant.intersection_len(&self.consonant),
            };
            if overlap < best {
                continue;
            }
            if overlap > best || chosen.is_empty() {
                best = overlap;
                chosen.clear();
            }
            chosen.push(Deformed {
                map: *g,
                consonant,
                species: image,
            });
        }
        chosen
    }

    /// The counterpoint symmetries of `ξ`.
    pub fn counterpoint_symmetries(&self, xi: &DualInterval) -> Vec<DualAffineMap> {
        self.select(xi, &self.centralizer(xi.cantus))
            .into_iter()
            .map(|d| d.map)
            .collect()
    }

    /// The distinct deformed species `g(S_ξ[ε])` over the symmetries of `ξ`.
    pub fn deformations(&self, xi: &DualInterval) -> Vec<PointSet> {
        self.select(xi, &self.centralizer(xi.cantus))
            .into_iter()
            .map(|d| d.species)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    fn row(&self, xi: &DualInterval, centralizer: &[DualAffineMap]) -> Result<Vec<u8>, WorldError> {
        let m = self.modulus();
        let mut chosen = self.select(xi, centralizer);
        if self.variant.multiplicity == Multiplicity::Deformations {
            chosen.sort_by(|a, b| a.species.cmp(&b.species));
            chosen.dedup_by(|a, b| a.species == b.species);
        }
        let mut row = vec![0usize; (m.get() * m.get()) as usize];
        for d in &chosen {
            for (j, slot) in row.iter_mut().enumerate() {
                let hit = match self.variant.successor_rule {
                    SuccessorRule::SourceSpecies => d.species.contains(j),
                    SuccessorRule::SuccessorSpecies => {
                        d.consonant.contains(j) == self.consonant.contains(j)
                    }
                };
                *slot += usize::from(hit);
            }
        }
        row.into_iter()
            .enumerate()
            .map(|(j, c)| {
                u8::try_from(c).map_err(|_| WorldError::CountOverflow {
                    from: xi.to_string(),
                    to: DualInterval::from_index(j, m).to_string(),
                    count: c,
                })
            })
            .collect()
    }

    /// Symmetry count of the step `ξ → η`.
    pub fn count(&self, xi: &DualInterval, eta: &DualInterval) -> Result<u8, WorldError> {
        let engine = self.engine_for(xi, eta)?;
        let row = engine.row(xi, &engine.centralizer(xi.cantus))?;
        Ok(row[eta.index()])
    }

    fn engine_for(&self, xi: &DualInterval, eta: &DualInterval) -> Result<SymmetryEngine, WorldError> {
        let mixed = xi.is_consonant(&self.dichotomy) != eta.is_consonant(&self.dichotomy);
        if self.variant.mixed_from_dual && mixed {
            self.dual_engine()
        } else {
            Ok(self.clone())
        }
    }

    fn dual_engine(&self) -> Result<SymmetryEngine, WorldError> {
        SymmetryEngine::new(
            &self.dichotomy.dual(),
            ModelVariant {
                mixed_from_dual: false,
                ..self.variant
            },
        )
    }

    fn all_rows(&self) -> Result<Vec<Vec<u8>>, WorldError> {
        let m = self.modulus();
        let centralizers: Vec<Vec<DualAffineMap>> = m
            .residues()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|x| self.centralizer(x))
            .collect();
        (0..(m.get() * m.get()) as usize)
            .into_par_iter()
            .map(|i| {
                let xi = DualInterval::from_index(i, m);
                self.row(&xi, &centralizers[xi.cantus as usize])
            })
            .collect()
    }

    /// Fills the full `n² × n²` count matrix.
    pub fn build(&self) -> Result<World, WorldError> {
        let m = self.modulus();
        let size = (m.get() * m.get()) as usize;
        let own = self.all_rows()?;
        let dual = if self.variant.mixed_from_dual {
            Some(self.dual_engine()?.all_rows()?)
        } else {
            None
        };
        let mut counts = Vec::with_capacity(size * size);
        for (i, row) in own.iter().enumerate() {
            let xi_consonant = self.consonant.contains(i);
            for (j, &c) in row.iter().enumerate() {
                let mixed = xi_consonant != self.consonant.contains(j);
                counts.push(match (&dual, mixed) {
                    (Some(dual), true) => dual[i][j],
                    _ => c,
                });
            }
        }
        World::from_counts(self.dichotomy, self.variant, counts)
    }
}

/// Builds a world with the default model.
pub fn build_world(d: &Dichotomy) -> Result<World, WorldError> {
    build_world_with(d, ModelVariant::default())
}

pub fn build_world_with(d: &Dichotomy, variant: ModelVariant) -> Result<World, WorldError> {
    SymmetryEngine::new(d, variant)?.build()
}

/// Symmetry counts for every step between dual intervals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct World {
    dichotomy: Dichotomy,
    variant: ModelVariant,
    counts: Vec<u8>,
    histogram: Histogram,
}

impl World {
    /// Wraps a precomputed row-major count matrix.
    pub fn from_counts(
        dichotomy: Dichotomy,
        variant: ModelVariant,
        counts: Vec<u8>,
    ) -> Result<Self, WorldError> {
        let n = dichotomy.modulus().get() as usize;
        let expected = n.pow(4);
        if counts.len() != expected {
            return Err(WorldError::InvalidCounts {
                expected,
                found: counts.len(),
            });
        }
        let histogram = Histogram::from_values(counts.iter().map(|&c| u32::from(c)));
        Ok(World {
            dichotomy,
            variant,
            counts,
            histogram,
        })
    }

    pub fn dichotomy(&self) -> &Dichotomy {
        &self.dichotomy
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    pub fn modulus(&self) -> Modulus {
        self.dichotomy.modulus()
    }

    /// Row-major counts, `counts[ξ·n² + η]`.
    pub fn counts(&self) -> &[u8] {
        &self.counts
    }

    fn side(&self) -> usize {
        let n = self.modulus().get() as usize;
        n * n
    }

    pub fn count(&self, xi: &DualInterval, eta: &DualInterval) -> u8 {
        self.counts[xi.index() * self.side() + eta.index()]
    }

    pub fn is_valid(&self, xi: &DualInterval, eta: &DualInterval) -> bool {
        self.count(xi, eta) > 0
    }

    pub fn row(&self, xi: &DualInterval) -> &[u8] {
        let side = self.side();
        &self.counts[xi.index() * side..(xi.index() + 1) * side]
    }

    pub fn successors(&self, xi: &DualInterval) -> Vec<DualInterval> {
        let m = self.modulus();
        self.row(xi)
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, _)| DualInterval::from_index(j, m))
            .collect()
    }

    pub fn histogram(&self) -> &Histogram {
        &self.histogram
    }

    pub fn moments(&self) -> Moments {
        self.histogram.moments()
    }

    pub fn total_steps(&self) -> u64 {
        self.counts.len() as u64
    }

    pub fn valid_steps(&self) -> u64 {
        self.counts.iter().filter(|&&c| c > 0).count() as u64
    }

    pub fn max_count(&self) -> u8 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    /// All steps `(ξ, η, count)` in row-major order.
    pub fn steps(&self) -> impl Iterator<Item = (DualInterval, DualInterval, u8)> + '_ {
        let m = self.modulus();
        let side = self.side();
        self.counts.iter().enumerate().map(move |(i, &c)| {
            (
                DualInterval::from_index(i / side, m),
                DualInterval::from_index(i % side, m),
                c,
            )
        })
    }

    /// CSV `from,to,count`, row-major.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.counts.len() * 14);
        out.push_str("from,to,count\n");
        for (xi, eta, c) in self.steps() {
            out.push_str(&format!("{xi},{eta},{c}\n"));
        }
        out
    }

    /// CSV `symmetries,steps`.
    pub fn histogram_csv(&self) -> String {
        self.histogram.to_csv()
    }
}

/// Validity probabilities of two worlds and their independence gap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorldOverlap {
    pub p_a: Rational,
    pub p_b: Rational,
    pub p_ab: Rational,
    /// `|p_ab − p_a·p_b|`.
    pub gap: Rational,
}

impl Serialize for WorldOverlap {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("WorldOverlap", 8)?;
        for (name, exact, value) in [
            ("p_a", "p_a_exact", self.p_a),
            ("p_b", "p_b_exact", self.p_b),
            ("p_ab", "p_ab_exact", self.p_ab),
            ("gap", "gap_exact", self.gap),
        ] {
            s.serialize_field(name, &crate::stats::ratio_to_f64(value))?;
            s.serialize_field(exact, &value.to_string())?;
        }
        s.end()
    }
}

pub fn world_overlap(a: &World, b: &World) -> Result<WorldOverlap, WorldError> {
    if a.modulus() != b.modulus() {
        return Err(WorldError::ModulusMismatch {
            left: a.modulus().get(),
            right: b.modulus().get(),
        });
    }
    let total = a.total_steps() as i64;
    let both = a
        .counts
        .iter()
        .zip(&b.counts)
        .filter(|(&x, &y)| x > 0 && y > 0)
        .count() as i64;
    let p_a = Ratio::new(a.valid_steps() as i64, total);
    let p_b = Ratio::new(b.valid_steps() as i64, total);
    let p_ab = Ratio::new(both, total);
    let product = p_a * p_b;
    let gap = if p_ab >= product {
        p_ab - product
    } else {
        product - p_ab
    };
    Ok(WorldOverlap {
        p_a,
        p_b,
        p_ab,
        gap,
    })
}

/// Which voices must stay inside the scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RestrictionMode {
    /// Both cantus pitch classes.
    CantusOnly,
    /// Both cantus and both upper-voice pitch classes.
    BothVoices,
}

impl FromStr for RestrictionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cantus-only" => Ok(Self::CantusOnly),
            "both-voices" => Ok(Self::BothVoices),
            _ => Err(format!("unknown restriction mode {s:?}")),
        }
    }
}

impl fmt::Display for RestrictionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::CantusOnly => "cantus-only",
            Self::BothVoices => "both-voices",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ForbiddenStep {
    pub from: DualInterval,
    pub to: DualInterval,
}

/// Forbidden consonant-to-consonant steps inside a scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScaleRestrictionReport {
    pub scale: PcSet,
    pub mode: RestrictionMode,
    pub domain_steps: u64,
    pub forbidden_count: u64,
    pub forbidden: Vec<ForbiddenStep>,
}

pub fn scale_restriction_report(
    w: &World,
    scale: &PcSet,
    mode: RestrictionMode,
) -> Result<ScaleRestrictionReport, WorldError> {
    if scale.modulus() != w.modulus() {
        return Err(WorldError::ModulusMismatch {
            left: w.modulus().get(),
            right: scale.modulus().get(),
        });
    }
    let d = w.dichotomy();
    let inside = |xi: &DualInterval| {
        xi.is_consonant(d)
            && scale.contains(xi.cantus)
            && (mode == RestrictionMode::CantusOnly || scale.contains(xi.upper_voice()))
    };
    let domain: Vec<DualInterval> = DualInterval::all(w.modulus()).filter(inside).collect();
    let mut forbidden = Vec::new();
    for xi in &domain {
        for eta in &domain {
            if !w.is_valid(xi, eta) {
                forbidden.push(ForbiddenStep { from: *xi, to: *eta });
            }
        }
    }
    Ok(ScaleRestrictionReport {
        scale: *scale,
        mode,
        domain_steps: (domain.len() * domain.len()) as u64,
        forbidden_count: forbidden.len() as u64,
        forbidden,
    })
}

/// A seeded random walk along valid steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WalkReport {
    pub seed: u64,
    pub requested: usize,
    pub path: Vec<DualInterval>,
    /// The interval where the walk stopped early, if any.
    pub dead_end: Option<DualInterval>,
}

pub fn walk(
    w: &World,
    start: &DualInterval,
    length: usize,
    seed: u64,
) -> Result<WalkReport, WorldError> {
    if start.modulus() != w.modulus() {
        return Err(WorldError::ModulusMismatch {
            left: w.modulus().get(),
            right: start.modulus().get(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut path = vec![*start];
    let mut dead_end = None;
    for _ in 0..length {
        let current = *path.last().expect("nonempty path");
        let next = w.successors(&current);
        if next.is_empty() {
            if path.len() == 1 {
                return Err(WorldError::DeadEnd(current.to_string()));
            }
            dead_end = Some(current);
            break;
        }
        path.push(next[rng.random_range(0..next.len())]);
    }
    Ok(WalkReport {
        seed,
        requested: length,
        path,
        dead_end,
    })
}

/// Published count distribution of a reference dichotomy class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReferenceWorld {
    pub name: &'static str,
    pub histogram: Histogram,
}

/// Reference histograms for the Fux and mystic classes at `n = 12`.
pub fn reference_world(d: &Dichotomy) -> Option<ReferenceWorld> {
    if d.modulus() != Modulus::TWELVE {
        return None;
    }
    let class = d.classify().canonical_representative;
    if class == Dichotomy::fux().classify().canonical_representative {
        Some(ReferenceWorld {
            name: "Fux",
            histogram: Histogram::from_pairs([
                (0, 6720),
                (1, 4992),
                (2, 5568),
                (3, 1440),
                (4, 1152),
                (5, 864),
            ]),
        })
    } else if class == Dichotomy::mystic().classify().canonical_representative {
        Some(ReferenceWorld {
            name: "mystic",
            histogram: Histogram::from_pairs([(0, 16128), (1, 576), (2, 2880), (4, 1152)]),
        })
    } else {
        None
    }
}

/// Outcome of checking a built world against its reference histogram.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum GateStatus {
    Match { reference: &'static str },
    Mismatch {
        reference: &'static str,
        expected: Histogram,
        found: Histogram,
    },
    NoReference,
}

impl GateStatus {
    pub fn is_mismatch(&self) -> bool {
        matches!(self, GateStatus::Mismatch { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            GateStatus::Match { .. } => "match",
            GateStatus::Mismatch { .. } => "mismatch",
            GateStatus::NoReference => "no-reference",
        }
    }
}

pub fn gate(w: &World) -> GateStatus {
    match reference_world(w.dichotomy()) {
        None => GateStatus::NoReference,
        Some(r) if &r.histogram == w.histogram() => GateStatus::Match { reference: r.name },
        Some(r) => GateStatus::Mismatch {
            reference: r.name,
            expected: r.histogram,
            found: w.histogram().clone(),
        },
    }
}

/// Gate outcome of every ladder rung for one dichotomy.
pub fn run_ladder(d: &Dichotomy) -> Result<Vec<(&'static str, ModelVariant, GateStatus)>, WorldError> {
    ModelVariant::ladder()
        .into_iter()
        .map(|(name, variant)| Ok((name, variant, gate(&build_world_with(d, variant)?))))
        .collect()
}
