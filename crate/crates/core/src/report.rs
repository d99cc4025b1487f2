//! Report structures and text rendering for worlds and passage analyses.
//!
//! JSON payloads carry no timestamps, so identical inputs give identical
//! bytes. Text renderings use 4 decimals.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::dichotomy::Dichotomy;
use crate::residue::Modulus;
use crate::score::{
    extract_transitions, score_against_world, CantusPolicy, Dedup, ScoreError, ScoreEvent, Step,
    TransitionSequence,
};
use crate::stats::{
    chi_square_gof_with, effect_size, sample_summary, ChiSquareResult, EffectSizeResult, GofOptions,
    Histogram, Moments, PopulationSpec, SampleSummary, SdDivisor, StatsError,
};
use crate::world::{gate, reference_world, GateStatus, ModelVariant, World, WorldOverlap};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Published standard deviation for the mystic class; it disagrees with the
/// published distribution of the same class.
pub const MYSTIC_PRINTED_SD: f64 = 1.9026;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Identity of a world: dichotomy, class, model and gate outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldSummary {
    pub modulus: Modulus,
    pub consonances: Vec<u32>,
    pub class_representative: Vec<u32>,
    pub alias: Option<String>,
    pub variant: ModelVariant,
    pub fingerprint: String,
    pub rung: Option<&'static str>,
    pub gate: GateStatus,
}

pub fn world_summary(w: &World) -> WorldSummary {
    let class = w.dichotomy().classify();
    WorldSummary {
        modulus: w.modulus(),
        consonances: w.dichotomy().half().to_vec(),
        class_representative: class.canonical_representative,
        alias: class.alias,
        variant: w.variant(),
        fingerprint: w.variant().fingerprint(),
        rung: w.variant().rung(),
        gate: gate(w),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceSummary {
    pub name: &'static str,
    pub histogram: Histogram,
    pub moments: Moments,
}

/// Count distribution and moments of a world.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorldTable {
    pub world: WorldSummary,
    pub histogram: Histogram,
    pub total_steps: u64,
    pub valid_steps: u64,
    pub max_count: u8,
    pub moments: Moments,
    pub reference: Option<ReferenceSummary>,
    pub notes: Vec<String>,
}

pub fn world_table(w: &World) -> WorldTable {
    let reference = reference_world(w.dichotomy()).map(|r| ReferenceSummary {
        name: r.name,
        moments: r.histogram.moments(),
        histogram: r.histogram,
    });
    let mut notes = Vec::new();
    if let Some(r) = reference.as_ref().filter(|r| r.name == "mystic") {
        notes.push(format!(
            "the published standard deviation {MYSTIC_PRINTED_SD:.4} for the mystic class does not follow from its published distribution, which gives {:.4}",
            r.moments.sd
        ));
    }
    WorldTable {
        world: world_summary(w),
        histogram: w.histogram().clone(),
        total_steps: w.total_steps(),
        valid_steps: w.valid_steps(),
        max_count: w.max_count(),
        moments: w.moments(),
        reference,
        notes,
    }
}

fn render_histogram(out: &mut String, h: &Histogram, moments: &Moments) {
    let _ = writeln!(out, "symmetries  steps");
    for (c, f) in h.dense().into_iter().enumerate() {
        let _ = writeln!(out, "{c:>10}  {f:>5}");
    }
    let _ = writeln!(out, "mean {:.4}  sd {:.4}", moments.mean_f64(), moments.sd);
}

fn render_world_header(out: &mut String, w: &WorldSummary) {
    let consonances: Vec<String> = w.consonances.iter().map(u32::to_string).collect();
    let _ = writeln!(out, "dichotomy {{{}}} mod {}", consonances.join(","), w.modulus);
    if let Some(alias) = &w.alias {
        let _ = writeln!(out, "class {alias}");
    }
    let _ = writeln!(
        out,
        "model {} ({})",
        w.rung.unwrap_or("custom"),
        w.fingerprint
    );
    let _ = writeln!(out, "gate {}", w.gate.label());
}

pub fn render_world_table(t: &WorldTable) -> String {
    let mut out = String::new();
    render_world_header(&mut out, &t.world);
    let _ = writeln!(out);
    render_histogram(&mut out, &t.histogram, &t.moments);
    let _ = writeln!(
        out,
        "valid {} of {}  max {}",
        t.valid_steps, t.total_steps, t.max_count
    );
    if let Some(r) = &t.reference {
        let _ = writeln!(out, "\nreference distribution ({})", r.name);
        render_histogram(&mut out, &r.histogram, &r.moments);
    }
    for note in &t.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}

pub fn render_overlap(o: &WorldOverlap) -> String {
    format!(
        "p_a  {} ({:.4})\np_b  {} ({:.4})\np_ab {} ({:.4})\ngap  {} ({:.4})\n",
        o.p_a,
        crate::stats::ratio_to_f64(o.p_a),
        o.p_b,
        crate::stats::ratio_to_f64(o.p_b),
        o.p_ab,
        crate::stats::ratio_to_f64(o.p_ab),
        o.gap,
        crate::stats::ratio_to_f64(o.gap),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalysisConfig {
    pub policy: CantusPolicy,
    pub dedup: Dedup,
    pub alpha: f64,
    pub yates: bool,
    pub sd_divisor: SdDivisor,
    pub merge_below: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            policy: CantusPolicy::Column,
            dedup: Dedup::Consecutive,
            alpha: 0.10,
            yates: true,
            sd_divisor: SdDivisor::N,
            merge_below: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDetail {
    pub step: Step,
    pub count: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PopulationSummary {
    pub mean: f64,
    pub mean_exact: String,
    pub sd: f64,
    pub support: Vec<u32>,
}

/// A passage scored against one world.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub tool_version: &'static str,
    pub world: WorldSummary,
    pub config: AnalysisConfig,
    pub transitions: usize,
    pub raw_transitions: usize,
    pub dedup_applied: bool,
    pub observed: Histogram,
    pub sample: SampleSummary,
    pub population: PopulationSummary,
    pub effect_size: EffectSizeResult,
    pub chi_square: Option<ChiSquareResult>,
    pub chi_square_error: Option<String>,
    pub steps: Vec<StepDetail>,
}

pub fn analyze(
    events: &[ScoreEvent],
    w: &World,
    config: &AnalysisConfig,
) -> Result<AnalysisReport, AnalysisError> {
    let seq = extract_transitions(events, config.policy, config.dedup)?;
    analyze_sequence(&seq, w, config)
}

pub fn analyze_sequence(
    seq: &TransitionSequence,
    w: &World,
    config: &AnalysisConfig,
) -> Result<AnalysisReport, AnalysisError> {
    let counts = score_against_world(seq, w)?;
    let values: Vec<u32> = counts.iter().map(|&c| u32::from(c)).collect();
    let population = PopulationSpec::from_histogram(w.histogram());
    let sample = sample_summary(&values, &population.support, config.sd_divisor)?;
    let effect_size = effect_size(&sample, &population, config.alpha)?;
    let gof = chi_square_gof_with(
        &sample,
        &population,
        GofOptions {
            yates: config.yates,
            merge_below: config.merge_below,
        },
    );
    let (chi_square, chi_square_error) = match gof {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(AnalysisReport {
        tool_version: TOOL_VERSION,
        world: world_summary(w),
        config: *config,
        transitions: seq.len(),
        raw_transitions: seq.raw_steps,
        dedup_applied: seq.dedup_applied,
        observed: Histogram::from_values(values.iter().copied()),
        population: PopulationSummary {
            mean: population.mean(),
            mean_exact: population.moments.mean.to_string(),
            sd: population.sd(),
            support: population.support.clone(),
        },
        sample,
        effect_size,
        chi_square,
        chi_square_error,
        steps: seq
            .steps
            .iter()
            .zip(counts)
            .map(|(&step, count)| StepDetail { step, count })
            .collect(),
    })
}

pub fn render_analysis(r: &AnalysisReport) -> String {
    let mut out = String::new();
    render_world_header(&mut out, &r.world);
    let _ = writeln!(
        out,
        "\ntransitions {} (raw {}, dedup {})",
        r.transitions,
        r.raw_transitions,
        if r.dedup_applied { "consecutive" } else { "none" }
    );
    let _ = writeln!(out, "symmetries  observed");
    for (c, f) in r.observed.dense().into_iter().enumerate() {
        let _ = writeln!(out, "{c:>10}  {f:>8}");
    }
    let _ = writeln!(
        out,
        "sample mean {:.4}  sd {:.4}",
        r.sample.mean, r.sample.sd
    );
    let _ = writeln!(
        out,
        "population mean {:.4}  sd {:.4}",
        r.population.mean, r.population.sd
    );
    let e = &r.effect_size;
    let _ = writeln!(
        out,
        "effect size {:.4}  {:.0}% CI [{:.4}, {:.4}]",
        e.d,
        (1.0 - e.alpha) * 100.0,
        e.ci_low,
        e.ci_high
    );
    match (&r.chi_square, &r.chi_square_error) {
        (Some(c), _) => {
            let _ = writeln!(
                out,
                "chi-square {:.4}  df {}  p {:.4e}{}",
                c.statistic,
                c.df,
                c.p_value,
                if c.yates { "  (Yates)" } else { "" }
            );
        }
        (None, Some(err)) => {
            let _ = writeln!(out, "chi-square not computed: {err}");
        }
        (None, None) => {}
    }
    let _ = writeln!(out, "\nstep  count");
    for s in &r.steps {
        let _ = writeln!(out, "{}  {}", s.step, s.count);
    }
    out
}

/// Convenience for presets and comma lists.
pub fn parse_dichotomy(text: &str) -> Result<Dichotomy, crate::dichotomy::DichotomyError> {
    Dichotomy::parse(text, Modulus::TWELVE)
}
