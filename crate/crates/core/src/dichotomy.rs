//! Dichotomies of `Z_n`: strength, polarity, affine classification, chord
//! endomorphisms and whole-tone relations of chords.
//!
//! A dichotomy splits `Z_n` into a marked half `K` ("consonances") and its
//! complement `D` ("dissonances"). It is *strong* when the only invertible
//! affine map fixing `K` is the identity and some affine map (the polarity)
//! exchanges `K` and `D`; the polarity of a strong dichotomy is unique.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::pcset::{subsets_of_size, PcSet, PcSetError};
use crate::residue::{AlgebraError, Modulus, ResidueAffineMap};

/// Fux's consonances `{0,3,4,7,8,9}`.
pub const FUX_CONSONANCES: [u32; 6] = [0, 3, 4, 7, 8, 9];
/// The mystic chord on C, `{0,2,4,6,8,11}`.
pub const MYSTIC_CHORD: [u32; 6] = [0, 2, 4, 6, 8, 11];
pub const EVEN_WHOLE_TONE: [u32; 6] = [0, 2, 4, 6, 8, 10];
pub const ODD_WHOLE_TONE: [u32; 6] = [1, 3, 5, 7, 9, 11];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DichotomyError {
    #[error(transparent)]
    PcSet(#[from] PcSetError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("a dichotomy of Z_{modulus} needs {expected} classes in its marked half, got {found}")]
    WrongSize {
        modulus: u32,
        expected: usize,
        found: usize,
    },
    #[error("chord is empty")]
    EmptyChord,
    #[error("operation is only defined for modulus 12, got {0}")]
    UnsupportedModulus(u32),
}

/// A marked half/half bipartition `K / D` of `Z_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dichotomy {
    half: PcSet,
}

impl Dichotomy {
    pub fn new(half: PcSet) -> Result<Self, DichotomyError> {
        let modulus = half.modulus();
        if half.len() != modulus.half() as usize {
            return Err(DichotomyError::WrongSize {
                modulus: modulus.get(),
                expected: modulus.half() as usize,
                found: half.len(),
            });
        }
        Ok(Dichotomy { half })
    }

    pub fn fux() -> Self {
        Self::from_preset(&FUX_CONSONANCES)
    }

    pub fn mystic() -> Self {
        Self::from_preset(&MYSTIC_CHORD)
    }

    fn from_preset(elements: &[u32]) -> Self {
        let half = PcSet::new(elements.iter().copied(), Modulus::TWELVE).expect("valid preset");
        Dichotomy { half }
    }

    /// Parses `fux`, `mystic` or a comma-separated residue list.
    pub fn parse(text: &str, modulus: Modulus) -> Result<Self, DichotomyError> {
        match text.trim() {
            "fux" if modulus == Modulus::TWELVE => Ok(Self::fux()),
            "mystic" if modulus == Modulus::TWELVE => Ok(Self::mystic()),
            "fux" | "mystic" => Err(DichotomyError::UnsupportedModulus(modulus.get())),
            list => Self::new(PcSet::parse(list, modulus)?),
        }
    }

    /// The marked half `K`.
    pub fn half(&self) -> PcSet {
        self.half
    }

    /// The complementary half `D`.
    pub fn complement(&self) -> PcSet {
        self.half.complement()
    }

    pub fn modulus(&self) -> Modulus {
        self.half.modulus()
    }

    #[inline]
    pub fn is_marked(&self, x: u32) -> bool {
        self.half.contains(x)
    }

    /// The dichotomy `m(K) / m(D)`.
    pub fn image(&self, m: &ResidueAffineMap) -> Result<Self, DichotomyError> {
        Self::new(self.half.image(m))
    }

    /// The swapped dichotomy `D / K`.
    pub fn dual(&self) -> Self {
        Dichotomy {
            half: self.complement(),
        }
    }

    pub fn strength(&self) -> StrengthCertificate {
        strength(self)
    }

    pub fn classify(&self) -> DichotomyClass {
        classify(self)
    }
}

impl fmt::Display for Dichotomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.half.fmt(f)
    }
}

impl Serialize for Dichotomy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.half.serialize(serializer)
    }
}

/// Affine stabilizer of `K` and a polarity `K → D`, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StrengthCertificate {
    pub stabilizer: Vec<ResidueAffineMap>,
    /// First map (by linear part, then translation) carrying `K` onto `D`.
    pub polarity: Option<ResidueAffineMap>,
}

impl StrengthCertificate {
    /// Only the identity fixes `K`.
    pub fn is_rigid(&self) -> bool {
        self.stabilizer.len() == 1
    }

    pub fn is_strong(&self) -> bool {
        self.is_rigid() && self.polarity.is_some()
    }

    /// The polarity of a strong dichotomy.
    pub fn strong_polarity(&self) -> Option<ResidueAffineMap> {
        if self.is_rigid() {
            self.polarity
        } else {
            None
        }
    }
}

pub fn strength(d: &Dichotomy) -> StrengthCertificate {
    let k = d.half();
    let dissonances = d.complement();
    let mut stabilizer = Vec::new();
    let mut polarity = None;
    for m in ResidueAffineMap::invertible(d.modulus()) {
        let image = k.image(&m);
        if image == k {
            stabilizer.push(m);
        } else if polarity.is_none() && image == dissonances {
            polarity = Some(m);
        }
    }
    StrengthCertificate {
        stabilizer,
        polarity,
    }
}

/// An affine orbit of half-sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DichotomyClass {
    /// Lexicographically least sorted member of the orbit.
    pub canonical_representative: Vec<u32>,
    pub orbit_size: usize,
    pub alias: Option<String>,
    pub strong: bool,
}

fn canonical_and_orbit(half: &PcSet, maps: &[ResidueAffineMap]) -> (Vec<u32>, usize) {
    let mut images: Vec<Vec<u32>> = maps.iter().map(|m| half.image(m).to_vec()).collect();
    images.sort();
    images.dedup();
    let size = images.len();
    (images.swap_remove(0), size)
}

fn alias_for(representative: &[u32], modulus: Modulus) -> Option<String> {
    if modulus != Modulus::TWELVE {
        return None;
    }
    let maps = ResidueAffineMap::invertible(modulus);
    let of = |preset: Dichotomy| canonical_and_orbit(&preset.half(), &maps).0;
    if representative == of(Dichotomy::mystic()).as_slice() {
        Some("78 (mystic)".to_string())
    } else if representative == of(Dichotomy::fux()).as_slice() {
        Some("Fux".to_string())
    } else {
        None
    }
}

pub fn classify(d: &Dichotomy) -> DichotomyClass {
    let maps = ResidueAffineMap::invertible(d.modulus());
    let (canonical_representative, orbit_size) = canonical_and_orbit(&d.half(), &maps);
    let alias = alias_for(&canonical_representative, d.modulus());
    DichotomyClass {
        canonical_representative,
        orbit_size,
        alias,
        strong: d.strength().is_strong(),
    }
}

/// Every affine class of half-sets, sorted by canonical representative.
pub fn affine_classes(modulus: Modulus) -> Vec<DichotomyClass> {
    let maps = ResidueAffineMap::invertible(modulus);
    let mut seen = std::collections::HashSet::new();
    let mut classes = Vec::new();
    for half in subsets_of_size(modulus, modulus.half()) {
        if seen.contains(&half.bits()) {
            continue;
        }
        for m in &maps {
            seen.insert(half.image(m).bits());
        }
        let d = Dichotomy { half };
        classes.push(classify(&d));
    }
    classes.sort_by(|a, b| a.canonical_representative.cmp(&b.canonical_representative));
    classes
}

/// The strong affine classes of half-sets (6 for `n = 12`).
pub fn strong_atlas(modulus: Modulus) -> Vec<DichotomyClass> {
    affine_classes(modulus)
        .into_iter()
        .filter(|c| c.strong)
        .collect()
}

/// Affine endomorphisms of a chord (maps with image inside the chord).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChordEndomorphismReport {
    pub chord: PcSet,
    pub endomorphisms: Vec<ResidueAffineMap>,
    pub linear_parts: PcSet,
    pub strong_verdict: bool,
}

/// All `e^u.v` (including non-invertible ones) with `v·chord + u ⊆ chord`.
pub fn chord_endomorphisms(chord: &PcSet) -> Result<ChordEndomorphismReport, DichotomyError> {
    if chord.is_empty() {
        return Err(DichotomyError::EmptyChord);
    }
    let modulus = chord.modulus();
    let endomorphisms: Vec<_> = ResidueAffineMap::all(modulus)
        .filter(|m| chord.image(m).is_subset(chord))
        .collect();
    let mut linear_parts = PcSet::empty(modulus);
    for m in &endomorphisms {
        linear_parts.insert(m.v());
    }
    let strong_verdict = linear_parts.len() == modulus.half() as usize
        && Dichotomy::new(linear_parts)
            .map(|d| d.strength().is_strong())
            .unwrap_or(false);
    Ok(ChordEndomorphismReport {
        chord: *chord,
        endomorphisms,
        linear_parts,
        strong_verdict,
    })
}

/// The 20 three-note subsets of the even whole-tone scale.
pub fn whole_tone_triads() -> Vec<PcSet> {
    let scale = twelve(&EVEN_WHOLE_TONE);
    subsets_of_size(Modulus::TWELVE, 3)
        .filter(|t| t.is_subset(&scale))
        .collect()
}

/// All 220 three-note subsets of `Z_12`.
pub fn all_triads() -> Vec<PcSet> {
    subsets_of_size(Modulus::TWELVE, 3).collect()
}

fn twelve(elements: &[u32]) -> PcSet {
    PcSet::new(elements.iter().copied(), Modulus::TWELVE).expect("valid pitch classes")
}

fn require_twelve(chord: &PcSet) -> Result<(), DichotomyError> {
    if chord.modulus() == Modulus::TWELVE {
        Ok(())
    } else {
        Err(DichotomyError::UnsupportedModulus(chord.modulus().get()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TriadKind {
    Augmented,
    Diminished,
    Major,
    Minor,
}

impl TriadKind {
    pub const ALL: [TriadKind; 4] = [
        TriadKind::Augmented,
        TriadKind::Diminished,
        TriadKind::Major,
        TriadKind::Minor,
    ];

    fn shape(self) -> [u32; 3] {
        match self {
            TriadKind::Augmented => [0, 4, 8],
            TriadKind::Diminished => [0, 3, 6],
            TriadKind::Major => [0, 4, 7],
            TriadKind::Minor => [0, 3, 7],
        }
    }

    /// Distinct transpositions of this triad shape.
    pub fn transpositions(self) -> Vec<PcSet> {
        let base = twelve(&self.shape());
        let mut out: Vec<PcSet> = (0..12).map(|t| base.transpose(t)).collect();
        out.sort_by_key(|s| s.to_vec());
        out.dedup();
        out
    }
}

/// A minor and a major triad whose union is the chord minus one tone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NearCover {
    pub minor: PcSet,
    pub major: PcSet,
    pub outside: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TriadCoverReport {
    pub augmented: Vec<PcSet>,
    pub diminished: Vec<PcSet>,
    pub major: Vec<PcSet>,
    pub minor: Vec<PcSet>,
    pub near_covers: Vec<NearCover>,
}

impl TriadCoverReport {
    pub fn of_kind(&self, kind: TriadKind) -> &[PcSet] {
        match kind {
            TriadKind::Augmented => &self.augmented,
            TriadKind::Diminished => &self.diminished,
            TriadKind::Major => &self.major,
            TriadKind::Minor => &self.minor,
        }
    }
}

pub fn triad_covers(chord: &PcSet) -> Result<TriadCoverReport, DichotomyError> {
    require_twelve(chord)?;
    let inside = |kind: TriadKind| -> Vec<PcSet> {
        kind.transpositions()
            .into_iter()
            .filter(|t| t.is_subset(chord))
            .collect()
    };
    let major = inside(TriadKind::Major);
    let minor = inside(TriadKind::Minor);
    let mut near_covers = Vec::new();
    for mi in &minor {
        for ma in &major {
            let covered = mi.union(ma);
            let missing = chord.intersection(&covered.complement());
            if missing.len() == 1 {
                near_covers.push(NearCover {
                    minor: *mi,
                    major: *ma,
                    outside: missing.iter().next().expect("one tone"),
                });
            }
        }
    }
    Ok(TriadCoverReport {
        augmented: inside(TriadKind::Augmented),
        diminished: inside(TriadKind::Diminished),
        major,
        minor,
        near_covers,
    })
}

/// Tones shared with the even and odd whole-tone scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WholeToneAffinity {
    pub even: usize,
    pub odd: usize,
}

pub fn whole_tone_affinity(chord: &PcSet) -> Result<WholeToneAffinity, DichotomyError> {
    require_twelve(chord)?;
    Ok(WholeToneAffinity {
        even: chord.intersection(&twelve(&EVEN_WHOLE_TONE)).len(),
        odd: chord.intersection(&twelve(&ODD_WHOLE_TONE)).len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MysticParity {
    Even,
    Odd,
    NotMysticForm,
}

impl fmt::Display for MysticParity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MysticParity::Even => "even",
            MysticParity::Odd => "odd",
            MysticParity::NotMysticForm => "not-mystic-form",
        })
    }
}

/// Even or odd mystic chord, depending on which whole-tone scale holds five
/// of its six tones.
pub fn mystic_parity(chord: &PcSet) -> Result<MysticParity, DichotomyError> {
    require_twelve(chord)?;
    let Ok(d) = Dichotomy::new(*chord) else {
        return Ok(MysticParity::NotMysticForm);
    };
    if classify(&d).canonical_representative != classify(&Dichotomy::mystic()).canonical_representative
    {
        return Ok(MysticParity::NotMysticForm);
    }
    let affinity = whole_tone_affinity(chord)?;
    Ok(match (affinity.even, affinity.odd) {
        (5, _) => MysticParity::Even,
        (_, 5) => MysticParity::Odd,
        _ => MysticParity::NotMysticForm,
    })
}
