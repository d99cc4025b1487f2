//! Encoded two-voice passages and their first-species transitions.
//!
//! Two CSV layouts are accepted, each starting with an exact header line:
//!
//! - `measure,beat,cantus,discant`: cantus and upper voice as MIDI numbers;
//! - `measure,beat,pitch`: a single voice over a drone cantus given later.
//!
//! Beats are non-negative decimals such as `1` or `2.5`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::residue::Modulus;
use crate::stats::Rational;
use crate::world::{DualInterval, World};

pub const TWO_VOICE_HEADER: &str = "measure,beat,cantus,discant";
pub const DRONE_HEADER: &str = "measure,beat,pitch";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: event at measure {measure}, beat {beat} is not after the previous event")]
    Order {
        line: usize,
        measure: u32,
        beat: String,
    },
    #[error("need at least 2 events, got {0}")]
    TooFewEvents(usize),
    #[error("event {0} has no cantus pitch; use a fixed cantus")]
    MissingCantus(usize),
    #[error("cannot parse step {input:?}: {reason}")]
    Step { input: String, reason: String },
    #[error("modulus mismatch: sequence uses {left}, world uses {right}")]
    ModulusMismatch { left: u32, right: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreFormat {
    TwoVoice,
    Drone,
}

impl ScoreFormat {
    pub fn header(self) -> &'static str {
        match self {
            ScoreFormat::TwoVoice => TWO_VOICE_HEADER,
            ScoreFormat::Drone => DRONE_HEADER,
        }
    }

    /// Recognizes the layout from the first line.
    pub fn detect(input: &str) -> Option<Self> {
        match input.lines().next()? {
            TWO_VOICE_HEADER => Some(ScoreFormat::TwoVoice),
            DRONE_HEADER => Some(ScoreFormat::Drone),
            _ => None,
        }
    }
}

/// One note-against-note time point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScoreEvent {
    pub measure: u32,
    #[serde(serialize_with = "serialize_ratio")]
    pub beat: Rational,
    pub cantus: Option<u8>,
    pub pitch: u8,
}

fn serialize_ratio<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(r)
}

fn parse_beat(text: &str) -> Option<Rational> {
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(whole) || (text.contains('.') && !digits(frac)) || frac.len() > 9 {
        return None;
    }
    let scale = 10i64.pow(frac.len() as u32);
    let whole: i64 = whole.parse().ok()?;
    let frac: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    Some(Ratio::new(whole.checked_mul(scale)?.checked_add(frac)?, scale))
}

fn parse_pitch(text: &str, line: usize, what: &str) -> Result<u8, ScoreError> {
    let value: i64 = text.parse().map_err(|_| ScoreError::Parse {
        line,
        reason: format!("{what} {text:?} is not an integer"),
    })?;
    u8::try_from(value)
        .ok()
        .filter(|&p| p <= 127)
        .ok_or_else(|| ScoreError::Parse {
            line,
            reason: format!("{what} {value} is outside the MIDI range 0..=127"),
        })
}

pub fn parse_score(input: &str, format: ScoreFormat) -> Result<Vec<ScoreEvent>, ScoreError> {
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, header)) if header == format.header() => {}
        other => {
            return Err(ScoreError::Parse {
                line: 1,
                reason: format!(
                    "expected header {:?}, found {:?}",
                    format.header(),
                    other.map(|(_, l)| l).unwrap_or("")
                ),
            })
        }
    }
    let columns = format.header().split(',').count();
    let mut events: Vec<ScoreEvent> = Vec::new();
    for (line, text) in lines {
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() != columns {
            return Err(ScoreError::Parse {
                line,
                reason: format!("expected {columns} fields, found {}", fields.len()),
            });
        }
        let measure: u32 = fields[0].parse().map_err(|_| ScoreError::Parse {
            line,
            reason: format!("measure {:?} is not a non-negative integer", fields[0]),
        })?;
        let beat = parse_beat(fields[1]).ok_or_else(|| ScoreError::Parse {
            line,
            reason: format!("beat {:?} is not a decimal number", fields[1]),
        })?;
        let (cantus, pitch) = match format {
            ScoreFormat::TwoVoice => (
                Some(parse_pitch(fields[2], line, "cantus")?),
                parse_pitch(fields[3], line, "discant")?,
            ),
            ScoreFormat::Drone => (None, parse_pitch(fields[2], line, "pitch")?),
        };
        if let Some(prev) = events.last() {
            if (measure, beat) <= (prev.measure, prev.beat) {
                return Err(ScoreError::Order {
                    line,
                    measure,
                    beat: fields[1].to_string(),
                });
            }
        }
        events.push(ScoreEvent {
            measure,
            beat,
            cantus,
            pitch,
        });
    }
    Ok(events)
}

/// Where the cantus firmus comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CantusPolicy {
    /// A constant cantus pitch class.
    Fixed(u32),
    /// The cantus column of a two-voice file.
    Column,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dedup {
    None,
    /// Drop a step equal to the one right before it.
    #[default]
    Consecutive,
}

/// A step `ξ → η` between consecutive intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Step {
    pub from: DualInterval,
    pub to: DualInterval,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}>{}", self.from, self.to)
    }
}

impl Step {
    pub fn parse(text: &str, modulus: Modulus) -> Result<Self, ScoreError> {
        let err = |reason: String| ScoreError::Step {
            input: text.to_string(),
            reason,
        };
        let (a, b) = text
            .split_once('>')
            .ok_or_else(|| err("expected `x+ek>y+el`".to_string()))?;
        Ok(Step {
            from: DualInterval::parse(a, modulus).map_err(|e| err(e.to_string()))?,
            to: DualInterval::parse(b, modulus).map_err(|e| err(e.to_string()))?,
        })
    }
}

impl FromStr for Step {
    type Err = ScoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s, Modulus::TWELVE)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransitionSequence {
    pub steps: Vec<Step>,
    pub dedup_applied: bool,
    /// Steps before deduplication.
    pub raw_steps: usize,
}

impl TransitionSequence {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// One `x+ek>y+el` line per step.
    pub fn render(&self) -> String {
        self.steps.iter().map(|s| format!("{s}\n")).collect()
    }

    /// Parses the step-list format; blank lines are skipped.
    pub fn parse(text: &str, modulus: Modulus) -> Result<Self, ScoreError> {
        let steps = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| Step::parse(l.trim(), modulus))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TransitionSequence {
            raw_steps: steps.len(),
            steps,
            dedup_applied: false,
        })
    }
}

/// The dual interval of each event, reduced mod 12.
pub fn event_intervals(
    events: &[ScoreEvent],
    policy: CantusPolicy,
) -> Result<Vec<DualInterval>, ScoreError> {
    let m = Modulus::TWELVE;
    events
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let cantus = match policy {
                CantusPolicy::Fixed(pc) => i64::from(pc),
                CantusPolicy::Column => i64::from(e.cantus.ok_or(ScoreError::MissingCantus(i + 1))?),
            };
            Ok(DualInterval::new(cantus, i64::from(e.pitch) - cantus, m))
        })
        .collect()
}

pub fn extract_transitions(
    events: &[ScoreEvent],
    policy: CantusPolicy,
    dedup: Dedup,
) -> Result<TransitionSequence, ScoreError> {
    if events.len() < 2 {
        return Err(ScoreError::TooFewEvents(events.len()));
    }
    let intervals = event_intervals(events, policy)?;
    let raw: Vec<Step> = intervals
        .windows(2)
        .map(|w| Step {
            from: w[0],
            to: w[1],
        })
        .collect();
    let raw_steps = raw.len();
    let steps = match dedup {
        Dedup::None => raw,
        Dedup::Consecutive => {
            let mut out = raw;
            out.dedup();
            out
        }
    };
    Ok(TransitionSequence {
        steps,
        dedup_applied: dedup == Dedup::Consecutive,
        raw_steps,
    })
}

/// Per-step symmetry counts, in order.
pub fn score_against_world(seq: &TransitionSequence, w: &World) -> Result<Vec<u8>, ScoreError> {
    seq.steps
        .iter()
        .map(|s| {
            for m in [s.from.modulus(), s.to.modulus()] {
                if m != w.modulus() {
                    return Err(ScoreError::ModulusMismatch {
                        left: m.get(),
                        right: w.modulus().get(),
                    });
                }
            }
            Ok(w.count(&s.from, &s.to))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drone(pitches: &[u8]) -> Vec<ScoreEvent> {
        pitches
            .iter()
            .enumerate()
            .map(|(i, &p)| ScoreEvent {
                measure: i as u32 + 1,
                beat: Rational::from_integer(1),
                cantus: None,
                pitch: p,
            })
            .collect()
    }

    #[test]
    fn two_voice_row() {
        let e = parse_score("measure,beat,cantus,discant\n13,1,52,64\n", ScoreFormat::TwoVoice).unwrap();
        assert_eq!(
            e,
            vec![ScoreEvent {
                measure: 13,
                beat: Rational::from_integer(1),
                cantus: Some(52),
                pitch: 64
            }]
        );
    }

    #[test]
    fn drone_rows_have_no_cantus() {
        let e = parse_score("measure,beat,pitch\n1,1,64\n1,2.5,71\n", ScoreFormat::Drone).unwrap();
        assert!(e.iter().all(|e| e.cantus.is_none()));
        assert_eq!(e[1].beat, Rational::new(5, 2));
        assert_eq!(ScoreFormat::detect("measure,beat,pitch\n"), Some(ScoreFormat::Drone));
        assert!(matches!(
            extract_transitions(&e, CantusPolicy::Column, Dedup::None),
            Err(ScoreError::MissingCantus(1))
        ));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("measure,beat,pitch\n1,1,200\n", 2),
            ("measure,beat,pitch\n1,1,60\n2,x,60\n", 3),
            ("measure,beat,pitch\n1,1\n", 2),
            ("measure,beat,cantus\n", 1),
            ("measure,beat,pitch\n1,1,-3\n", 2),
            ("measure,beat,pitch\n1,1.,60\n", 2),
        ];
        for (input, line) in cases {
            match parse_score(input, ScoreFormat::Drone) {
                Err(ScoreError::Parse { line: l, .. }) => assert_eq!(l, line, "{input:?}"),
                other => panic!("{input:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn order_errors() {
        for input in [
            "measure,beat,pitch\n2,1,60\n1,1,60\n",
            "measure,beat,pitch\n1,2,60\n1,1.5,60\n",
            "measure,beat,pitch\n1,1,60\n1,1,62\n",
        ] {
            assert!(
                matches!(parse_score(input, ScoreFormat::Drone), Err(ScoreError::Order { line: 3, .. })),
                "{input:?}"
            );
        }
    }

    #[test]
    fn fixed_cantus_extraction() {
        let seq = extract_transitions(&drone(&[64, 71]), CantusPolicy::Fixed(4), Dedup::None).unwrap();
        assert_eq!(seq.steps, vec!["4+e0>4+e7".parse().unwrap()]);
    }

    #[test]
    fn raw_step_count_and_minimum() {
        let pitches: Vec<u8> = (0..31).map(|i| 60 + (i % 5) as u8).collect();
        let seq = extract_transitions(&drone(&pitches), CantusPolicy::Fixed(4), Dedup::None).unwrap();
        assert_eq!(seq.len(), 30);
        assert!(matches!(
            extract_transitions(&drone(&[60]), CantusPolicy::Fixed(0), Dedup::None),
            Err(ScoreError::TooFewEvents(1))
        ));
    }

    #[test]
    fn consecutive_dedup() {
        // s, s, t
        let seq = extract_transitions(&drone(&[60, 64, 60, 64, 67]), CantusPolicy::Fixed(0), Dedup::None).unwrap();
        assert_eq!(seq.len(), 4);
        let events = drone(&[60, 64, 64, 64, 67]);
        let raw = extract_transitions(&events, CantusPolicy::Fixed(0), Dedup::None).unwrap();
        let dedup = extract_transitions(&events, CantusPolicy::Fixed(0), Dedup::Consecutive).unwrap();
        assert_eq!(raw.len(), 4);
        assert_eq!(
            dedup.steps,
            vec![raw.steps[0], raw.steps[1], raw.steps[3]]
        );
        assert_eq!(dedup.raw_steps, 4);
        assert!(dedup.dedup_applied);
    }

    #[test]
    fn column_cantus_intervals() {
        let input = "measure,beat,cantus,discant\n1,1,52,64\n1,2,50,65\n";
        let e = parse_score(input, ScoreFormat::TwoVoice).unwrap();
        let seq = extract_transitions(&e, CantusPolicy::Column, Dedup::None).unwrap();
        assert_eq!(seq.render(), "4+e0>2+e3\n");
    }

    #[test]
    fn step_grammar_round_trip() {
        let text = "0+e3>2+e4\n0+e7>2+e7\n11+e11>0+e0\n";
        let seq = TransitionSequence::parse(text, Modulus::TWELVE).unwrap();
        assert_eq!(seq.render(), text);
        for bad in ["0+e3", "0+e3>", "0+e3>2+e12", "0+e3 2+e4"] {
            assert!(bad.parse::<Step>().is_err(), "{bad}");
        }
    }

    #[test]
    fn empty_sequence_scores_empty() {
        let w = World::from_counts(
            crate::dichotomy::Dichotomy::fux(),
            crate::world::ModelVariant::default(),
            vec![0; 20736],
        )
        .unwrap();
        let seq = TransitionSequence::parse("", Modulus::TWELVE).unwrap();
        assert_eq!(score_against_world(&seq, &w).unwrap(), Vec::<u8>::new());
    }
}
