//! `cam-model` command line: fit, generate, validate, info, import.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::alphabet::{IntervalSet, SizeSet};
use crate::fit::{detect_size_bins, fit};
use crate::generate::{generate_separate, generate_stream, Budget, GeneratedStream};
use crate::metrics::{validate, KlOptions, LogBase, ValidateOptions};
use crate::model::{CamModel, ModelMode, ModelSpec};
use crate::model_file::{import_matrix, parse_model, write_model};
use crate::presets::Preset;
use crate::trace::{quantize, read_trace, write_trace, QuantizeOptions, DEFAULT_SIZE_TOLERANCE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cam-model", version, about = "Markov-source models of CAM traffic")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model from a CAM trace
    Fit(FitArgs),
    /// Generate a synthetic CAM trace from a model
    Generate(GenerateArgs),
    /// Compare a generated trace with a reference trace
    Validate(ValidateArgs),
    /// Summarize a model file or a bundled preset
    Info(InfoArgs),
    /// Build a model file from a headerless transition matrix
    Import(ImportArgs),
}

#[derive(Debug, Args)]
pub struct AlphabetArgs {
    /// Comma-separated size set in bytes
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["auto_sizes", "preset"])]
    pub sizes: Option<Vec<u32>>,
    /// Detect the size set from the trace's 10-byte size histogram
    #[arg(long)]
    pub auto_sizes: bool,
    /// Take the size set from a preset (vw-highway, renault-urban, ...)
    #[arg(long, conflicts_with = "auto_sizes")]
    pub preset: Option<String>,
    /// Comma-separated interval set in ms
    #[arg(long, value_delimiter = ',', default_value = "100,200,300,400,500,600,700,800,900,1000")]
    pub intervals: Vec<u32>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Markov order
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value = "complete")]
    pub mode: ModelMode,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub alphabet: AlphabetArgs,
    /// Maximum distance in bytes when snapping sizes
    #[arg(long, default_value_t = DEFAULT_SIZE_TOLERANCE)]
    pub size_tolerance: u32,
    /// Minimum histogram mass of a detected size peak
    #[arg(long, default_value_t = 0.05)]
    pub min_peak_prob: f64,
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Model file; give a size model and an interval model to run them as
    /// separate chains
    #[arg(long, required = true, num_args = 1..=2)]
    pub model: Vec<PathBuf>,
    #[arg(long, conflicts_with = "duration", required_unless_present = "duration")]
    pub count: Option<usize>,
    /// Trace length in seconds
    #[arg(long)]
    pub duration: Option<f64>,
    /// Omit to draw one from system entropy; the chosen seed is printed
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Add a `symbol` column with the complete-alphabet symbol
    #[arg(long)]
    pub emit_symbols: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long)]
    pub generated: PathBuf,
    #[arg(long, default_value_t = 15)]
    pub lags: usize,
    #[arg(long, default_value = "e")]
    pub kl_base: LogBase,
    /// Additive smoothing applied to the generated PDF before KL
    #[arg(long)]
    pub smooth: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SIZE_TOLERANCE)]
    pub size_tolerance: u32,
    /// Text report path; the structured report goes to `<path>.json`
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, default_value = "complete")]
    pub mode: ModelMode,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Headerless rows of m+2 whitespace-separated fields
    #[arg(long)]
    pub matrix: PathBuf,
    /// Headerless rows of m+1 fields; uniform over matrix contexts if absent
    #[arg(long)]
    pub initial: Option<PathBuf>,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value = "complete")]
    pub mode: ModelMode,
    #[command(flatten)]
    pub alphabet: AlphabetArgs,
    /// Defaults to the preset's value, else 0
    #[arg(long)]
    pub jitter: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub label: Option<String>,
}

/// Argument combinations clap cannot check.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn preset(name: &str) -> Result<Preset> {
    Preset::by_name(name).ok_or_else(|| usage(format!("unknown preset `{name}`")))
}

fn read_events(path: &Path) -> Result<Vec<crate::trace::CamEvent>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_trace(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn load_model(path: &Path) -> Result<CamModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text).with_context(|| format!("parsing {}", path.display()))
}

fn build_spec(
    mode: ModelMode,
    m: usize,
    alphabet: &AlphabetArgs,
    events: Option<&[crate::trace::CamEvent]>,
    min_peak_prob: f64,
    jitter: f64,
) -> Result<ModelSpec> {
    let sizes = if mode.models_sizes() {
        Some(match (&alphabet.sizes, &alphabet.preset, alphabet.auto_sizes) {
            (Some(s), _, _) => SizeSet::new(s.clone())?,
            (None, Some(p), _) => preset(p)?.sizes(),
            (None, None, true) => {
                let events = events.ok_or_else(|| usage("--auto-sizes needs a trace"))?;
                detect_size_bins(events, 10, min_peak_prob)?
            }
            (None, None, false) => {
                return Err(usage("size set required: pass --sizes, --preset or --auto-sizes"))
            }
        })
    } else {
        None
    };
    let intervals = mode
        .models_intervals()
        .then(|| IntervalSet::with_gcd_quantum(alphabet.intervals.clone()))
        .transpose()?;
    let jitter = if mode.models_intervals() { jitter } else { 0.0 };
    Ok(ModelSpec::new(mode, m, sizes, intervals, jitter)?)
}

fn cmd_fit(a: &FitArgs, out: &mut dyn Write) -> Result<()> {
    if a.m == 0 {
        return Err(usage("--m must be >= 1"));
    }
    let events = read_events(&a.trace)?;
    let spec = build_spec(a.mode, a.m, &a.alphabet, Some(&events), a.min_peak_prob, 0.0)?;
    let q = quantize(
        &events,
        &spec,
        QuantizeOptions {
            size_tolerance: a.size_tolerance,
        },
    )?;
    let fitted = fit(&q, &spec)?;
    let mut model = fitted.model;
    if let Some(l) = a.label.as_ref().or(a.alphabet.preset.as_ref()) {
        model = model.with_label(l.clone());
    }
    fs::write(&a.out, write_model(&model)).with_context(|| format!("writing {}", a.out.display()))?;

    writeln!(out, "alphabet_size\t{}", spec.alphabet_len())?;
    writeln!(out, "transition_rows\t{}", model.table().entry_count())?;
    writeln!(out, "contexts\t{}", model.table().context_count())?;
    writeln!(out, "initial_contexts\t{}", model.initial().len())?;
    writeln!(out, "symbols\t{}", q.symbol_count())?;
    writeln!(out, "dropped_events\t{}", q.dropped)?;
    writeln!(out, "clamped_intervals\t{}", q.clamped)?;
    writeln!(out, "segments\t{}", q.segments.len())?;
    match fitted.jitter_std_ms {
        Some(s) => writeln!(out, "jitter_std_ms\t{s:.4}")?,
        None => writeln!(out, "jitter_std_ms\t-")?,
    }
    Ok(())
}

fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let budget = match (a.count, a.duration) {
        (Some(n), _) => Budget::Count(n),
        (None, Some(d)) if d > 0.0 && d.is_finite() => Budget::DurationMs(d * 1000.0),
        _ => return Err(usage("--duration must be a positive number of seconds")),
    };
    let seed = match a.seed {
        Some(s) => s,
        None => {
            let s = rand::random::<u64>();
            writeln!(err, "seed\t{s}")?;
            s
        }
    };
    let models = a
        .model
        .iter()
        .map(|p| load_model(p))
        .collect::<Result<Vec<_>>>()?;
    let stream: GeneratedStream = match &models[..] {
        [m] => generate_stream(m, budget, seed)?,
        [x, y] => {
            let (size, interval) = match (x.spec().mode(), y.spec().mode()) {
                (ModelMode::SizeOnly, ModelMode::IntervalOnly) => (x, y),
                (ModelMode::IntervalOnly, ModelMode::SizeOnly) => (y, x),
                _ => return Err(usage("two models must be one size model and one interval model")),
            };
            generate_separate(size, interval, budget, seed)?
        }
        _ => unreachable!("clap limits --model to 1..=2"),
    };
    let f = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let symbols = a.emit_symbols.then_some(&stream.symbols[..]);
    write_trace(&stream.events, symbols, f)?;
    writeln!(out, "events\t{}", stream.events.len())?;
    writeln!(out, "dead_end_redraws\t{}", stream.dead_end_redraws)?;
    Ok(())
}

fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    let reference = read_events(&a.reference)?;
    let generated = read_events(&a.generated)?;
    let opts = ValidateOptions {
        max_lag: a.lags,
        kl: KlOptions {
            base: a.kl_base,
            smoothing: a.smooth,
        },
        quantize: QuantizeOptions {
            size_tolerance: a.size_tolerance,
        },
    };
    let report = validate(model.spec(), &reference, &generated, opts)?;
    let text = report.to_text();
    fs::write(&a.report, &text).with_context(|| format!("writing {}", a.report.display()))?;
    let mut json_path = a.report.clone().into_os_string();
    json_path.push(".json");
    let json = serde_json::to_string_pretty(&report.to_json())?;
    fs::write(&json_path, json + "\n")
        .with_context(|| format!("writing {}", Path::new(&json_path).display()))?;
    for line in text.lines().filter(|l| !l.contains('[')) {
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn cmd_info(a: &InfoArgs, out: &mut dyn Write) -> Result<()> {
    let (spec, model) = match (&a.model, &a.preset) {
        (Some(path), _) => {
            let m = load_model(path)?;
            (m.spec().clone(), Some(m))
        }
        (None, Some(name)) => {
            if a.m == 0 {
                return Err(usage("--m must be >= 1"));
            }
            (preset(name)?.spec(a.mode, a.m)?, None)
        }
        (None, None) => return Err(usage("pass --model or --preset")),
    };
    writeln!(out, "mode\t{}", spec.mode())?;
    writeln!(out, "m\t{}", spec.order())?;
    writeln!(out, "S\t{}", spec.sizes().map_or(0, SizeSet::len))?;
    writeln!(out, "G\t{}", spec.intervals().map_or(0, IntervalSet::len))?;
    writeln!(out, "A\t{}", spec.alphabet_len())?;
    if let Some(m) = &model {
        writeln!(out, "transition_rows\t{}", m.table().entry_count())?;
        writeln!(out, "initial_contexts\t{}", m.initial().len())?;
        writeln!(out, "dead_end_contexts\t{}", m.dead_ends().len())?;
        if let Some(l) = m.label() {
            writeln!(out, "label\t{l}")?;
        }
    }
    writeln!(out, "jitter_std_ms\t{}", spec.jitter_std_ms())?;
    Ok(())
}

fn cmd_import(a: &ImportArgs, out: &mut dyn Write) -> Result<()> {
    if a.m == 0 {
        return Err(usage("--m must be >= 1"));
    }
    let jitter = match (a.jitter, &a.alphabet.preset) {
        (Some(j), _) => j,
        (None, Some(p)) => preset(p)?.jitter_std_ms(),
        (None, None) => 0.0,
    };
    if a.alphabet.auto_sizes {
        return Err(usage("--auto-sizes needs a trace; pass --sizes or --preset"));
    }
    let spec = build_spec(a.mode, a.m, &a.alphabet, None, 0.0, jitter)?;
    let matrix = fs::read_to_string(&a.matrix)
        .with_context(|| format!("reading {}", a.matrix.display()))?;
    let initial = a
        .initial
        .as_ref()
        .map(|p| fs::read_to_string(p).with_context(|| format!("reading {}", p.display())))
        .transpose()?;
    let mut model = import_matrix(spec, &matrix, initial.as_deref())?;
    if let Some(l) = a.label.as_ref().or(a.alphabet.preset.as_ref()) {
        model = model.with_label(l.clone());
    }
    fs::write(&a.out, write_model(&model)).with_context(|| format!("writing {}", a.out.display()))?;
    writeln!(out, "transition_rows\t{}", model.table().entry_count())?;
    writeln!(out, "initial_contexts\t{}", model.initial().len())?;
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Generate(a) => cmd_generate(a, out, err),
        Command::Validate(a) => cmd_validate(a, out),
        Command::Info(a) => cmd_info(a, out),
        Command::Import(a) => cmd_import(a, out),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.is::<UsageError>() {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}

