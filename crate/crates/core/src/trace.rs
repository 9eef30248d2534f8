//! CAM trace files and quantization onto a model alphabet.
//!
//! The on-disk format is CSV with a `t_ms,size_bytes` header (an optional
//! third `symbol` column is written by the generator and ignored on read).
//! Timestamps are printed with exactly three decimals.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::alphabet::Symbol;
use crate::model::{ModelMode, ModelSpec};

pub const TRACE_HEADER: &str = "t_ms,size_bytes";
pub const DEFAULT_SIZE_TOLERANCE: u32 = 30;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("line {line}: timestamp {t_ms} is not after the previous one ({prev_ms})")]
    NonMonotonic { line: u64, t_ms: f64, prev_ms: f64 },
    #[error("event {index}: timestamp {t_ms} is not after the previous one ({prev_ms})")]
    Unordered { index: usize, t_ms: f64, prev_ms: f64 },
    #[error("{0} symbols supplied for {1} events")]
    SymbolCount(usize, usize),
    #[error("need at least {needed} events to quantize, got {got}")]
    TooFewEvents { needed: usize, got: usize },
    #[error("all {0} events were dropped during quantization")]
    EmptyModel(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One CAM: generation time and size on air.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CamEvent {
    pub t_ms: f64,
    pub size_bytes: u32,
}

impl CamEvent {
    pub fn new(t_ms: f64, size_bytes: u32) -> Self {
        CamEvent { t_ms, size_bytes }
    }
}

pub fn read_trace<R: Read>(reader: R) -> Result<Vec<CamEvent>, TraceError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut events: Vec<CamEvent> = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(k as u64 + 1, |p| p.line());
        if k == 0 && record.get(0) == Some("t_ms") {
            continue;
        }
        if record.len() < 2 || record.len() > 3 {
            return Err(TraceError::Parse {
                line,
                msg: format!("expected 2 or 3 fields, found {}", record.len()),
            });
        }
        let t_ms: f64 = record[0].parse().map_err(|e| TraceError::Parse {
            line,
            msg: format!("bad timestamp `{}`: {e}", &record[0]),
        })?;
        if !t_ms.is_finite() {
            return Err(TraceError::Parse {
                line,
                msg: format!("timestamp `{}` is not finite", &record[0]),
            });
        }
        let size_bytes: u32 = record[1].parse().map_err(|e| TraceError::Parse {
            line,
            msg: format!("bad size `{}`: {e}", &record[1]),
        })?;
        if size_bytes == 0 {
            return Err(TraceError::Parse {
                line,
                msg: "size must be positive".into(),
            });
        }
        if let Some(prev) = events.last() {
            if t_ms <= prev.t_ms {
                return Err(TraceError::NonMonotonic {
                    line,
                    t_ms,
                    prev_ms: prev.t_ms,
                });
            }
        }
        events.push(CamEvent { t_ms, size_bytes });
    }
    Ok(events)
}

/// Writes the CSV form. With `symbols`, a third `symbol` column is added.
pub fn write_trace<W: Write>(
    events: &[CamEvent],
    symbols: Option<&[Symbol]>,
    writer: W,
) -> Result<(), TraceError> {
    if let Some(s) = symbols {
        if s.len() != events.len() {
            return Err(TraceError::SymbolCount(s.len(), events.len()));
        }
    }
    // Ordering is checked on the printed (millisecond-thousandths) values so
    // the output always reads back.
    let mut prev: Option<(f64, i64)> = None;
    for (index, e) in events.iter().enumerate() {
        let micros = (e.t_ms * 1000.0).round() as i64;
        if let Some((prev_ms, prev_micros)) = prev {
            if !(e.t_ms > prev_ms && micros > prev_micros) {
                return Err(TraceError::Unordered {
                    index,
                    t_ms: e.t_ms,
                    prev_ms,
                });
            }
        }
        prev = Some((e.t_ms, micros));
    }
    let mut w = io::BufWriter::new(writer);
    match symbols {
        Some(_) => writeln!(w, "{TRACE_HEADER},symbol")?,
        None => writeln!(w, "{TRACE_HEADER}")?,
    }
    for (k, e) in events.iter().enumerate() {
        match symbols {
            Some(s) => writeln!(w, "{:.3},{},{}", e.t_ms, e.size_bytes, s[k])?,
            None => writeln!(w, "{:.3},{}", e.t_ms, e.size_bytes)?,
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct QuantizeOptions {
    /// Maximum distance in bytes between a raw size and its snapped value.
    pub size_tolerance: u32,
}

impl Default for QuantizeOptions {
    fn default() -> Self {
        QuantizeOptions {
            size_tolerance: DEFAULT_SIZE_TOLERANCE,
        }
    }
}

/// Contiguous run of symbols. Windows used for fitting never cross a
/// segment boundary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Segment {
    pub symbols: Vec<Symbol>,
    /// Inter-arrival minus assigned interval, aligned with `symbols`. Empty
    /// when the mode does not model intervals.
    pub residuals_ms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedTrace {
    pub mode: ModelMode,
    pub segments: Vec<Segment>,
    /// Events whose size or interval could not be mapped.
    pub dropped: usize,
    /// Intervals moved into `[min(G), max(G)]`.
    pub clamped: usize,
    /// Gaps longer than `max(G) + q/2` that started a new segment.
    pub gap_splits: usize,
}

impl QuantizedTrace {
    /// Wraps a bare symbol sequence as a single segment.
    pub fn from_symbols(mode: ModelMode, symbols: Vec<Symbol>) -> Self {
        QuantizedTrace {
            mode,
            segments: vec![Segment {
                symbols,
                residuals_ms: Vec::new(),
            }],
            dropped: 0,
            clamped: 0,
            gap_splits: 0,
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.segments.iter().flat_map(|s| s.symbols.iter().copied())
    }

    pub fn symbol_count(&self) -> usize {
        self.segments.iter().map(|s| s.symbols.len()).sum()
    }

    pub fn residuals(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().flat_map(|s| s.residuals_ms.iter().copied())
    }

    /// Projects complete-mode symbols onto size indices or interval indices.
    pub fn project(&self, mode: ModelMode, size_card: u32) -> QuantizedTrace {
        if mode == self.mode || self.mode != ModelMode::Complete {
            return self.clone();
        }
        let segments = self
            .segments
            .iter()
            .map(|seg| {
                let symbols = seg
                    .symbols
                    .iter()
                    .map(|s| {
                        let n = s.get() - 1;
                        let k = match mode {
                            ModelMode::SizeOnly => n % size_card,
                            _ => n / size_card,
                        };
                        Symbol::new(k + 1).unwrap()
                    })
                    .collect();
                let residuals_ms = if mode.models_intervals() {
                    seg.residuals_ms.clone()
                } else {
                    Vec::new()
                };
                Segment {
                    symbols,
                    residuals_ms,
                }
            })
            .collect();
        QuantizedTrace {
            mode,
            segments,
            dropped: self.dropped,
            clamped: self.clamped,
            gap_splits: self.gap_splits,
        }
    }
}

/// Maps events onto the symbols of `spec`.
///
/// Each inter-arrival `t_k - t_{k-1}` rounds to the nearest multiple of the
/// interval quantum, clamped into `[min(G), max(G)]`; the difference is kept
/// as a residual. Each size snaps to the nearest member of `S` within the
/// size tolerance. An event that fails either mapping is dropped and closes
/// the current segment; the following event still measures its interval
/// from the dropped one. Gaps beyond `max(G) + q/2` split the trace.
pub fn quantize(
    events: &[CamEvent],
    spec: &ModelSpec,
    opts: QuantizeOptions,
) -> Result<QuantizedTrace, TraceError> {
    let mode = spec.mode();
    let needed = if mode.models_intervals() { 2 } else { 1 };
    if events.len() < needed {
        return Err(TraceError::TooFewEvents {
            needed,
            got: events.len(),
        });
    }
    let mut out = QuantizedTrace {
        mode,
        segments: Vec::new(),
        dropped: 0,
        clamped: 0,
        gap_splits: 0,
    };
    let mut current = Segment::default();
    let close = |current: &mut Segment, segments: &mut Vec<Segment>| {
        if !current.symbols.is_empty() {
            segments.push(std::mem::take(current));
        }
    };

    let size_index = |e: &CamEvent| {
        spec.sizes()
            .map(|s| s.nearest(e.size_bytes, opts.size_tolerance))
    };

    match spec.intervals() {
        None => {
            for e in events {
                match size_index(e).flatten() {
                    Some(i) => current.symbols.push(Symbol::new(i).unwrap()),
                    None => {
                        out.dropped += 1;
                        close(&mut current, &mut out.segments);
                    }
                }
            }
        }
        Some(g) => {
            let q = f64::from(g.quantum());
            let split_above = f64::from(g.max()) + q / 2.0;
            let product = spec.product();
            for pair in events.windows(2) {
                let delta = pair[1].t_ms - pair[0].t_ms;
                if delta > split_above {
                    out.gap_splits += 1;
                    close(&mut current, &mut out.segments);
                    continue;
                }
                let nearest = (delta / q).round() * q;
                let snapped = nearest.clamp(f64::from(g.min()), f64::from(g.max()));
                if snapped != nearest {
                    out.clamped += 1;
                }
                let j = g.index_of(snapped as u32);
                let symbol = match (size_index(&pair[1]), j) {
                    (None, Some(j)) => Symbol::new(j),
                    (Some(Some(i)), Some(j)) => {
                        product.and_then(|a| a.join(i, j).ok())
                    }
                    _ => None,
                };
                match symbol {
                    Some(s) => {
                        current.symbols.push(s);
                        current.residuals_ms.push(delta - snapped);
                    }
                    None => {
                        out.dropped += 1;
                        close(&mut current, &mut out.segments);
                    }
                }
            }
        }
    }
    close(&mut current, &mut out.segments);
    if out.segments.is_empty() {
        return Err(TraceError::EmptyModel(events.len()));
    }
    Ok(out)
}
