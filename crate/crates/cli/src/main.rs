mod cache;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use counterpoint_core::dichotomy::{
    affine_classes, all_triads, chord_endomorphisms, mystic_parity, strong_atlas, triad_covers,
    whole_tone_affinity, whole_tone_triads, ChordEndomorphismReport, DichotomyError,
};
use counterpoint_core::report::{
    analyze_sequence, render_analysis, render_overlap, render_world_table, world_summary,
    world_table, AnalysisConfig,
};
use counterpoint_core::score::{
    extract_transitions, parse_score, CantusPolicy, Dedup, ScoreError, ScoreFormat,
};
use counterpoint_core::stats::{Histogram, SdDivisor};
use counterpoint_core::world::{
    gate, run_ladder, scale_restriction_report, walk, world_overlap, RestrictionMode,
    SymmetryEngine,
};
use counterpoint_core::{
    AlgebraError, Dichotomy, DualInterval, ModelVariant, Modulus, PcSet, PcSetError,
    TransitionSequence, World, WorldError,
};

use cache::{WorldCache, CACHE_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "counterpoint",
    version,
    about = "Counterpoint worlds, strong dichotomies and passage statistics"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Directory for cached worlds
    #[arg(long, global = true, env = CACHE_ENV)]
    cache_dir: Option<PathBuf>,
    /// Build worlds without reading or writing the cache
    #[arg(long, global = true)]
    no_cache: bool,
    /// Continue when a built world differs from its reference distribution
    #[arg(long, global = true)]
    allow_gate_mismatch: bool,
    /// World model: baseline, a, b, c or d
    #[arg(long, global = true, default_value = "d", value_parser = parse_model)]
    model: ModelVariant,
    /// Modulus for dichotomies, chords and intervals without an `@n` suffix
    #[arg(long, global = true, default_value_t = 12)]
    modulus: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build and inspect counterpoint worlds
    Worlds {
        #[command(subcommand)]
        command: WorldsCommand,
    },
    /// Symmetry count of one step
    Step {
        #[arg(long, short)]
        dichotomy: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// List the counterpoint symmetries of the source interval
        #[arg(long)]
        explain: bool,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
    /// Validity overlap of two worlds
    Compare {
        a: String,
        b: String,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
    /// Score an encoded passage against a world
    Analyze(AnalyzeArgs),
    /// Affine endomorphisms of a chord and the strength of their linear parts
    Noll {
        chord: Option<String>,
        #[arg(long, value_enum, conflicts_with = "chord")]
        scan: Option<Scan>,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
    /// Triad covers, whole-tone affinity and mystic parity of a chord
    Chord {
        chord: String,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
    /// Forbidden consonant steps inside a scale
    ScaleReport {
        #[arg(long, short)]
        dichotomy: String,
        #[arg(long)]
        scale: String,
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeArg,
        /// List every forbidden step
        #[arg(long)]
        list: bool,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
    /// Affine classes of dichotomies
    Atlas {
        /// Include classes that are not strong
        #[arg(long)]
        all: bool,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
    /// Class, strength and polarity of one dichotomy
    Classify {
        dichotomy: String,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
    /// Seeded random walk along valid steps
    Walk {
        #[arg(long, short)]
        dichotomy: String,
        #[arg(long)]
        start: String,
        #[arg(long, default_value_t = 8)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
}

#[derive(Debug, Subcommand)]
enum WorldsCommand {
    /// Count distribution and moments
    Table {
        #[arg(long, short)]
        dichotomy: String,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
    /// CSV of every step (`from,to,count`) or of the distribution
    Export {
        #[arg(long, short)]
        dichotomy: String,
        /// Export `symmetries,steps` instead of the step matrix
        #[arg(long)]
        histogram: bool,
    },
    /// Gate outcome of every candidate model
    Ladder {
        #[arg(long, short)]
        dichotomy: String,
        #[arg(long, value_enum, default_value = "text")]
        output: Output,
    },
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Score CSV or step list
    file: PathBuf,
    #[arg(long, short, default_value = "fux")]
    dichotomy: String,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    /// `column`, a pitch class (0-11) or a note name such as `E` or `F#`
    #[arg(long, default_value = "column")]
    cantus: String,
    #[arg(long, default_value_t = 0.10)]
    alpha: f64,
    /// Chi-square without continuity correction
    #[arg(long)]
    no_yates: bool,
    /// Keep repeated consecutive steps
    #[arg(long)]
    no_dedup: bool,
    #[arg(long, value_enum, default_value = "n")]
    sd_divisor: DivisorArg,
    /// Pool adjacent categories until each expected count reaches this value
    #[arg(long)]
    merge_below: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Auto,
    TwoVoice,
    Drone,
    Steps,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DivisorArg {
    N,
    #[value(name = "n-1")]
    NMinus1,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scan {
    WtTriads,
    AllTriads,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    CantusOnly,
    BothVoices,
    Both,
}

fn parse_model(s: &str) -> Result<ModelVariant, String> {
    ModelVariant::ladder()
        .into_iter()
        .find(|(name, _)| *name == s)
        .map(|(_, v)| v)
        .ok_or_else(|| format!("unknown model {s:?}; expected baseline, a, b, c or d"))
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Model(String),
    Gate(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Model(_) => 3,
            CliError::Gate(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Model(m) | CliError::Gate(m) => m,
        }
    }
}

impl From<DichotomyError> for CliError {
    fn from(e: DichotomyError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<AlgebraError> for CliError {
    fn from(e: AlgebraError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<PcSetError> for CliError {
    fn from(e: PcSetError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<WorldError> for CliError {
    fn from(e: WorldError) -> Self {
        match e {
            WorldError::Algebra(e) => e.into(),
            e => CliError::Model(e.to_string()),
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::ModulusMismatch { .. } => CliError::Model(e.to_string()),
            e => CliError::Input(e.to_string()),
        }
    }
}

impl From<counterpoint_core::report::AnalysisError> for CliError {
    fn from(e: counterpoint_core::report::AnalysisError) -> Self {
        use counterpoint_core::report::AnalysisError;
        match e {
            AnalysisError::Score(e) => e.into(),
            AnalysisError::Stats(e) => CliError::Model(e.to_string()),
        }
    }
}

type CliResult = Result<String, CliError>;

struct Context {
    cache: WorldCache,
    allow_gate_mismatch: bool,
    model: ModelVariant,
    modulus: Modulus,
}

impl Context {
    fn new(g: &Global) -> Result<Self, CliError> {
        let dir = if g.no_cache {
            None
        } else {
            g.cache_dir.clone().or_else(WorldCache::default_dir)
        };
        Ok(Context {
            cache: WorldCache::new(dir),
            allow_gate_mismatch: g.allow_gate_mismatch,
            model: g.model,
            modulus: Modulus::new(g.modulus)?,
        })
    }

    /// Splits an optional `@n` modulus suffix.
    fn split_modulus<'a>(&self, text: &'a str) -> Result<(&'a str, Modulus), CliError> {
        match text.rsplit_once('@') {
            Some((body, n)) => {
                let n: u32 = n
                    .parse()
                    .map_err(|_| CliError::Input(format!("bad modulus suffix in {text:?}")))?;
                Ok((body, Modulus::new(n)?))
            }
            None => Ok((text, self.modulus)),
        }
    }

    fn dichotomy(&self, text: &str) -> Result<Dichotomy, CliError> {
        let (body, m) = self.split_modulus(text)?;
        Ok(Dichotomy::parse(body, m)?)
    }

    /// A comma list or one of the presets `fux` and `mystic`.
    fn pcset(&self, text: &str) -> Result<PcSet, CliError> {
        match text {
            "fux" | "mystic" => Ok(self.dichotomy(text)?.half()),
            _ => {
                let (body, m) = self.split_modulus(text)?;
                Ok(PcSet::parse(body, m)?)
            }
        }
    }

    fn interval(&self, text: &str, m: Modulus) -> Result<DualInterval, CliError> {
        Ok(DualInterval::parse(text, m)?)
    }

    fn world(&self, d: &Dichotomy) -> Result<World, CliError> {
        let w = self.cache.world(d, self.model)?;
        if let counterpoint_core::world::GateStatus::Mismatch {
            reference,
            expected,
            found,
        } = gate(&w)
        {
            let msg = format!(
                "world for {{{d}}} does not reproduce the {reference} reference distribution: expected {}, built {}",
                fmt_histogram(&expected),
                fmt_histogram(&found)
            );
            if !self.allow_gate_mismatch {
                return Err(CliError::Gate(format!(
                    "{msg}; rerun with --allow-gate-mismatch to continue"
                )));
            }
            eprintln!("warning: {msg}");
        }
        Ok(w)
    }
}

fn fmt_histogram(h: &Histogram) -> String {
    let cells: Vec<String> = h.iter().map(|(c, f)| format!("{c}:{f}")).collect();
    format!("{{{}}}", cells.join(", "))
}

fn json<T: Serialize>(value: &T) -> CliResult {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Model(e.to_string()))
}

fn no_csv(command: &str) -> CliError {
    CliError::Input(format!("{command} has no CSV output"))
}

fn braces(set: &PcSet) -> String {
    format!("{{{set}}}")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Context::new(&cli.global).and_then(|ctx| run(&ctx, cli.command));
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(ctx: &Context, command: Command) -> CliResult {
    match command {
        Command::Worlds { command } => worlds(ctx, command),
        Command::Step {
            dichotomy,
            from,
            to,
            explain,
            output,
        } => step(ctx, &dichotomy, &from, &to, explain, output),
        Command::Compare { a, b, output } => compare(ctx, &a, &b, output),
        Command::Analyze(args) => analyze(ctx, args),
        Command::Noll {
            chord,
            scan,
            output,
        } => noll(ctx, chord.as_deref(), scan, output),
        Command::Chord { chord, output } => chord_report(ctx, &chord, output),
        Command::ScaleReport {
            dichotomy,
            scale,
            mode,
            list,
            output,
        } => scale_report(ctx, &dichotomy, &scale, mode, list, output),
        Command::Atlas { all, output } => atlas(ctx, all, output),
        Command::Classify { dichotomy, output } => classify(ctx, &dichotomy, output),
        Command::Walk {
            dichotomy,
            start,
            length,
            seed,
            output,
        } => walk_cmd(ctx, &dichotomy, &start, length, seed, output),
    }
}

fn worlds(ctx: &Context, command: WorldsCommand) -> CliResult {
    match command {
        WorldsCommand::Table { dichotomy, output } => {
            let w = ctx.world(&ctx.dichotomy(&dichotomy)?)?;
            let table = world_table(&w);
            match output {
                Output::Text => Ok(render_world_table(&table)),
                Output::Json => json(&table),
                Output::Csv => Ok(w.histogram_csv()),
            }
        }
        WorldsCommand::Export {
            dichotomy,
            histogram,
        } => {
            let w = ctx.world(&ctx.dichotomy(&dichotomy)?)?;
            Ok(if histogram {
                w.histogram_csv()
            } else {
                w.to_csv()
            })
        }
        WorldsCommand::Ladder { dichotomy, output } => {
            let d = ctx.dichotomy(&dichotomy)?;
            let rungs = run_ladder(&d)?;
            #[derive(Serialize)]
            struct Rung {
                rung: &'static str,
                fingerprint: String,
                gate: counterpoint_core::world::GateStatus,
            }
            let rows: Vec<Rung> = rungs
                .into_iter()
                .map(|(rung, v, gate)| Rung {
                    rung,
                    fingerprint: v.fingerprint(),
                    gate,
                })
                .collect();
            match output {
                Output::Json => json(&rows),
                Output::Csv => Err(no_csv("worlds ladder")),
                Output::Text => {
                    let mut out = String::new();
                    for r in &rows {
                        let _ = write!(out, "{:<8} {:<12} {}", r.rung, r.gate.label(), r.fingerprint);
                        if let counterpoint_core::world::GateStatus::Mismatch { found, .. } = &r.gate {
                            let _ = write!(out, "  built {}", fmt_histogram(found));
                        }
                        out.push('\n');
                    }
                    Ok(out)
                }
            }
        }
    }
}

fn step(ctx: &Context, d: &str, from: &str, to: &str, explain: bool, output: Output) -> CliResult {
    let d = ctx.dichotomy(d)?;
    let xi = ctx.interval(from, d.modulus())?;
    let eta = ctx.interval(to, d.modulus())?;
    let w = ctx.world(&d)?;
    let count = w.count(&xi, &eta);
    let symmetries = if explain {
        SymmetryEngine::new(&d, ctx.model)?.counterpoint_symmetries(&xi)
    } else {
        Vec::new()
    };
    #[derive(Serialize)]
    struct StepReport {
        from: DualInterval,
        to: DualInterval,
        count: u8,
        world: counterpoint_core::report::WorldSummary,
        #[serde(skip_serializing_if = "Vec::is_empty")]
        symmetries: Vec<counterpoint_core::DualAffineMap>,
    }
    match output {
        Output::Json => json(&StepReport {
            from: xi,
            to: eta,
            count,
            world: world_summary(&w),
            symmetries,
        }),
        Output::Csv => Ok(format!("from,to,count\n{xi},{eta},{count}\n")),
        Output::Text => {
            let mut out = format!("{count}\n");
            if explain {
                let _ = writeln!(out, "symmetries of {xi}: {}", symmetries.len());
                for g in &symmetries {
                    let _ = writeln!(out, "  {g}");
                }
            }
            Ok(out)
        }
    }
}

fn compare(ctx: &Context, a: &str, b: &str, output: Output) -> CliResult {
    let (da, db) = (ctx.dichotomy(a)?, ctx.dichotomy(b)?);
    if da.modulus() != db.modulus() {
        return Err(WorldError::ModulusMismatch {
            left: da.modulus().get(),
            right: db.modulus().get(),
        }
        .into());
    }
    let (wa, wb) = (ctx.world(&da)?, ctx.world(&db)?);
    let overlap = world_overlap(&wa, &wb)?;
    match output {
        Output::Json => json(&overlap),
        Output::Csv => Err(no_csv("compare")),
        Output::Text => Ok(render_overlap(&overlap)),
    }
}

fn note_pc(text: &str) -> Option<u32> {
    let mut chars = text.chars();
    let base: i32 = match chars.next()?.to_ascii_uppercase() {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        'B' => 11,
        _ => return None,
    };
    let mut pc = base;
    for c in chars {
        pc += match c {
            '#' => 1,
            'b' => -1,
            _ => return None,
        };
    }
    Some(pc.rem_euclid(12) as u32)
}

fn analyze(ctx: &Context, args: AnalyzeArgs) -> CliResult {
    let d = ctx.dichotomy(&args.dichotomy)?;
    let text = std::fs::read_to_string(&args.file)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.file.display())))?;
    let policy = match args.cantus.as_str() {
        "column" => CantusPolicy::Column,
        s => CantusPolicy::Fixed(match s.parse::<u32>() {
            Ok(pc) if pc < 12 => pc,
            _ => note_pc(s).ok_or_else(|| {
                CliError::Input(format!("cantus {s:?} is not `column`, a pitch class or a note name"))
            })?,
        }),
    };
    let dedup = if args.no_dedup {
        Dedup::None
    } else {
        Dedup::Consecutive
    };
    let format = match args.format {
        FormatArg::Auto => ScoreFormat::detect(&text).map_or(FormatArg::Steps, |f| match f {
            ScoreFormat::TwoVoice => FormatArg::TwoVoice,
            ScoreFormat::Drone => FormatArg::Drone,
        }),
        f => f,
    };
    let seq = match format {
        FormatArg::Steps => {
            let seq = TransitionSequence::parse(&text, d.modulus())?;
            if dedup == Dedup::Consecutive {
                let mut steps = seq.steps.clone();
                steps.dedup();
                TransitionSequence {
                    steps,
                    dedup_applied: true,
                    raw_steps: seq.raw_steps,
                }
            } else {
                seq
            }
        }
        FormatArg::TwoVoice | FormatArg::Drone | FormatArg::Auto => {
            let f = if matches!(format, FormatArg::TwoVoice) {
                ScoreFormat::TwoVoice
            } else {
                ScoreFormat::Drone
            };
            let events = parse_score(&text, f)?;
            extract_transitions(&events, policy, dedup)?
        }
    };
    let config = AnalysisConfig {
        policy,
        dedup,
        alpha: args.alpha,
        yates: !args.no_yates,
        sd_divisor: match args.sd_divisor {
            DivisorArg::N => SdDivisor::N,
            DivisorArg::NMinus1 => SdDivisor::NMinus1,
        },
        merge_below: args.merge_below,
    };
    let w = ctx.world(&d)?;
    let report = analyze_sequence(&seq, &w, &config)?;
    match args.output {
        Output::Json => json(&report),
        Output::Csv => {
            let mut out = String::from("from,to,count\n");
            for s in &report.steps {
                let _ = writeln!(out, "{},{},{}", s.step.from, s.step.to, s.count);
            }
            Ok(out)
        }
        Output::Text => Ok(render_analysis(&report)),
    }
}

fn render_noll(r: &ChordEndomorphismReport) -> String {
    let maps: Vec<String> = r.endomorphisms.iter().map(|m| m.to_string()).collect();
    format!(
        "chord {}\nendomorphisms {}: {}\nlinear parts {}\nstrong {}\n",
        braces(&r.chord),
        maps.len(),
        maps.join(" "),
        braces(&r.linear_parts),
        r.strong_verdict
    )
}

fn noll(ctx: &Context, chord: Option<&str>, scan: Option<Scan>, output: Output) -> CliResult {
    let reports = match (chord, scan) {
        (Some(c), _) => vec![chord_endomorphisms(&ctx.pcset(c)?)?],
        (None, Some(scan)) => {
            let chords = match scan {
                Scan::WtTriads => whole_tone_triads(),
                Scan::AllTriads => all_triads(),
            };
            chords
                .iter()
                .map(chord_endomorphisms)
                .collect::<Result<Vec<_>, _>>()?
        }
        (None, None) => return Err(CliError::Input("give a chord or --scan".into())),
    };
    match output {
        Output::Csv => Err(no_csv("noll")),
        Output::Json if chord.is_some() => json(&reports[0]),
        Output::Json => json(&reports),
        Output::Text if chord.is_some() => Ok(render_noll(&reports[0])),
        Output::Text => {
            let mut out = String::new();
            for r in &reports {
                let _ = writeln!(
                    out,
                    "{:<12} endomorphisms {:>3}  linear parts {:<28} strong {}",
                    braces(&r.chord),
                    r.endomorphisms.len(),
                    braces(&r.linear_parts),
                    r.strong_verdict
                );
            }
            let strong = reports.iter().filter(|r| r.strong_verdict).count();
            let _ = writeln!(out, "{} chords, {strong} with strong linear parts", reports.len());
            Ok(out)
        }
    }
}

fn chord_report(ctx: &Context, chord: &str, output: Output) -> CliResult {
    let set = ctx.pcset(chord)?;
    let covers = triad_covers(&set)?;
    let affinity = whole_tone_affinity(&set)?;
    let parity = mystic_parity(&set)?;
    #[derive(Serialize)]
    struct ChordReport {
        chord: PcSet,
        covers: counterpoint_core::dichotomy::TriadCoverReport,
        whole_tone: counterpoint_core::dichotomy::WholeToneAffinity,
        mystic_parity: String,
    }
    let report = ChordReport {
        chord: set,
        covers,
        whole_tone: affinity,
        mystic_parity: parity.to_string(),
    };
    match output {
        Output::Csv => Err(no_csv("chord")),
        Output::Json => json(&report),
        Output::Text => {
            let list = |v: &[PcSet]| {
                v.iter().map(braces).collect::<Vec<_>>().join(" ")
            };
            let mut out = format!("chord {}\n", braces(&set));
            let c = &report.covers;
            let _ = writeln!(out, "augmented  {}", list(&c.augmented));
            let _ = writeln!(out, "diminished {}", list(&c.diminished));
            let _ = writeln!(out, "major      {}", list(&c.major));
            let _ = writeln!(out, "minor      {}", list(&c.minor));
            for n in &c.near_covers {
                let _ = writeln!(
                    out,
                    "minor {} + major {} leave {} outside",
                    braces(&n.minor),
                    braces(&n.major),
                    n.outside
                );
            }
            let _ = writeln!(
                out,
                "whole-tone even {} odd {}",
                report.whole_tone.even, report.whole_tone.odd
            );
            let _ = writeln!(out, "mystic parity {}", report.mystic_parity);
            Ok(out)
        }
    }
}

fn scale_report(
    ctx: &Context,
    d: &str,
    scale: &str,
    mode: ModeArg,
    list: bool,
    output: Output,
) -> CliResult {
    let d = ctx.dichotomy(d)?;
    let scale = if scale.trim().is_empty() {
        PcSet::empty(d.modulus())
    } else {
        let (body, m) = ctx.split_modulus(scale)?;
        let m = if scale.contains('@') { m } else { d.modulus() };
        PcSet::parse(body, m)?
    };
    let modes = match mode {
        ModeArg::CantusOnly => vec![RestrictionMode::CantusOnly],
        ModeArg::BothVoices => vec![RestrictionMode::BothVoices],
        ModeArg::Both => vec![RestrictionMode::CantusOnly, RestrictionMode::BothVoices],
    };
    let w = ctx.world(&d)?;
    let mut reports = modes
        .into_iter()
        .map(|m| scale_restriction_report(&w, &scale, m))
        .collect::<Result<Vec<_>, _>>()?;
    if !list {
        for r in &mut reports {
            r.forbidden.clear();
        }
    }
    match output {
        Output::Json => json(&reports),
        Output::Csv => {
            let mut out = String::from("mode,domain_steps,forbidden\n");
            for r in &reports {
                let _ = writeln!(out, "{},{},{}", r.mode, r.domain_steps, r.forbidden_count);
            }
            Ok(out)
        }
        Output::Text => {
            let mut out = format!("scale {}\n", braces(&scale));
            for r in &reports {
                let _ = writeln!(
                    out,
                    "{:<12} consonant steps {:>5}  forbidden {:>5}",
                    r.mode, r.domain_steps, r.forbidden_count
                );
                for s in &r.forbidden {
                    let _ = writeln!(out, "  {}>{}", s.from, s.to);
                }
            }
            Ok(out)
        }
    }
}

fn atlas(ctx: &Context, all: bool, output: Output) -> CliResult {
    let m = ctx.modulus;
    let classes = if all {
        affine_classes(m)
    } else {
        strong_atlas(m)
    };
    match output {
        Output::Json => json(&classes),
        Output::Csv => {
            let mut out = String::from("representative,orbit_size,strong,alias\n");
            for c in &classes {
                let rep: Vec<String> = c.canonical_representative.iter().map(u32::to_string).collect();
                let _ = writeln!(
                    out,
                    "\"{}\",{},{},{}",
                    rep.join(","),
                    c.orbit_size,
                    c.strong,
                    c.alias.as_deref().unwrap_or("")
                );
            }
            Ok(out)
        }
        Output::Text => {
            let mut out = String::new();
            for c in &classes {
                let rep: Vec<String> = c.canonical_representative.iter().map(u32::to_string).collect();
                let _ = writeln!(
                    out,
                    "{:<24} orbit {:>3}  {}{}",
                    format!("{{{}}}", rep.join(",")),
                    c.orbit_size,
                    if c.strong { "strong" } else { "weak" },
                    c.alias.as_ref().map(|a| format!("  {a}")).unwrap_or_default()
                );
            }
            let strong: Vec<_> = classes.iter().filter(|c| c.strong).collect();
            let _ = writeln!(
                out,
                "{} classes, {} strong covering {} half-sets",
                classes.len(),
                strong.len(),
                strong.iter().map(|c| c.orbit_size).sum::<usize>()
            );
            Ok(out)
        }
    }
}

fn classify(ctx: &Context, d: &str, output: Output) -> CliResult {
    let d = ctx.dichotomy(d)?;
    let class = d.classify();
    let cert = d.strength();
    let parity = if d.modulus() == Modulus::TWELVE {
        Some(mystic_parity(&d.half())?.to_string())
    } else {
        None
    };
    #[derive(Serialize)]
    struct ClassifyReport {
        dichotomy: Dichotomy,
        class: counterpoint_core::DichotomyClass,
        strength: counterpoint_core::StrengthCertificate,
        rigid: bool,
        mystic_parity: Option<String>,
    }
    let report = ClassifyReport {
        dichotomy: d,
        rigid: cert.is_rigid(),
        class,
        strength: cert,
        mystic_parity: parity,
    };
    match output {
        Output::Csv => Err(no_csv("classify")),
        Output::Json => json(&report),
        Output::Text => {
            let rep: Vec<String> = report
                .class
                .canonical_representative
                .iter()
                .map(u32::to_string)
                .collect();
            let mut out = format!("dichotomy {{{d}}}\n");
            let _ = writeln!(out, "class {{{}}} orbit {}", rep.join(","), report.class.orbit_size);
            if let Some(a) = &report.class.alias {
                let _ = writeln!(out, "alias {a}");
            }
            let _ = writeln!(out, "stabilizer {}", report.strength.stabilizer.len());
            let _ = writeln!(
                out,
                "polarity {}",
                report
                    .strength
                    .polarity
                    .map(|p| p.to_string())
                    .unwrap_or_else(|| "none".into())
            );
            let _ = writeln!(out, "strong {}", report.class.strong);
            if let Some(p) = &report.mystic_parity {
                let _ = writeln!(out, "mystic parity {p}");
            }
            Ok(out)
        }
    }
}

fn walk_cmd(
    ctx: &Context,
    d: &str,
    start: &str,
    length: usize,
    seed: u64,
    output: Output,
) -> CliResult {
    let d = ctx.dichotomy(d)?;
    let start = ctx.interval(start, d.modulus())?;
    let w = ctx.world(&d)?;
    let r = walk(&w, &start, length, seed)?;
    match output {
        Output::Json => json(&r),
        Output::Csv => {
            let mut out = String::from("from,to,count\n");
            for p in r.path.windows(2) {
                let _ = writeln!(out, "{},{},{}", p[0], p[1], w.count(&p[0], &p[1]));
            }
            Ok(out)
        }
        Output::Text => {
            let path: Vec<String> = r.path.iter().map(|x| x.to_string()).collect();
            let mut out = format!("{}\n", path.join(" > "));
            if let Some(dead) = r.dead_end {
                let _ = writeln!(out, "dead end at {dead} after {} steps", r.path.len() - 1);
            }
            Ok(out)
        }
    }
}
