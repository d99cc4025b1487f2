//! Mathematical first-species counterpoint over the dual numbers `Z_n[ε]`.
//!
//! - [`residue`]: `Z_n`, affine maps, dual numbers and their affine group.
//! - [`pcset`]: pitch-class sets as bitmasks.
//! - [`dichotomy`]: strong dichotomies, classification, chord endomorphisms.
//! - [`world`]: counterpoint symmetries and counterpoint worlds.
//! - [`stats`]: moments, effect sizes and chi-square goodness of fit.
//! - [`score`]: encoded passages and their transitions.
//! - [`report`]: analysis pipeline and report rendering.

pub mod dichotomy;
pub mod pcset;
pub mod report;
pub mod residue;
pub mod score;
pub mod stats;
pub mod world;

pub use dichotomy::{Dichotomy, DichotomyClass, DichotomyError, StrengthCertificate};
pub use pcset::{PcSet, PcSetError};
pub use report::{AnalysisConfig, AnalysisReport};
pub use residue::{AlgebraError, DualAffineMap, DualNumber, Modulus, ResidueAffineMap};
pub use score::{ScoreEvent, Step, TransitionSequence};
pub use stats::{Histogram, PopulationSpec, SampleSummary, StatsError};
pub use world::{DualInterval, ModelVariant, World, WorldError};
