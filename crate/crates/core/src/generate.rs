//! Synthetic CAM streams from a fitted model.
//!
//! A generator seeds its context from the initial distribution, then for
//! every CAM draws the next symbol by inverse CDF, maps it to a size and an
//! interval, advances a jitter-free nominal clock by the interval and emits
//! the CAM at the nominal time plus a Gaussian jitter. Jitter never
//! accumulates into the nominal clock.
//!
//! Randomness comes from ChaCha8 seeded with a `u64`. Independent instances
//! sharing a seed take distinct stream ids: `generate_stream` uses stream 0,
//! `generate_separate` drives sizes from stream 0 and intervals from
//! stream 1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::alphabet::Symbol;
use crate::model::{CamModel, ModelError, ModelMode};
use crate::table::InitialDistribution;
use crate::trace::CamEvent;

/// Largest jitter magnitude emitted with a 100 ms quantum.
pub const JITTER_BOUND_MS: f64 = 20.0;

/// Jitter truncation for an interval quantum: `min(20 ms, q / 5)`. Keeping
/// two jitters' difference below `q / 2` lets quantization recover every
/// generated interval exactly.
pub fn jitter_bound_for_quantum(quantum_ms: f64) -> f64 {
    JITTER_BOUND_MS.min(quantum_ms / 5.0)
}

/// Draws an initial context with probability equal to its weight.
pub fn seed_context<'a, R: Rng + ?Sized>(init: &'a InitialDistribution, rng: &mut R) -> &'a [Symbol] {
    init.sample(rng.random::<f64>())
}

/// Zero-mean Gaussian with standard deviation `std_ms`, resampled (not
/// clipped) until it lies within `[-bound, bound]`.
pub fn sample_jitter<R: Rng + ?Sized>(rng: &mut R, std_ms: f64, bound_ms: f64) -> f64 {
    if std_ms == 0.0 {
        return 0.0;
    }
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let j = z * std_ms;
        if j.abs() <= bound_ms {
            return j;
        }
    }
}

/// Walks the Markov chain of one model.
#[derive(Debug, Clone)]
pub struct Generator<'a> {
    model: &'a CamModel,
    rng: ChaCha8Rng,
    context: Vec<Symbol>,
    nominal_t_ms: f64,
    jitter_bound_ms: f64,
    dead_end_redraws: u64,
    sizes: Vec<Option<u32>>,
    intervals: Vec<Option<u32>>,
}

impl<'a> Generator<'a> {
    pub fn new(model: &'a CamModel, seed: u64) -> Self {
        Self::with_stream(model, seed, 0)
    }

    pub fn with_stream(model: &'a CamModel, seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let spec = model.spec();
        let (sizes, intervals) = (1..=spec.alphabet_len())
            .map(|n| spec.decode(Symbol::new(n).unwrap()).unwrap_or((None, None)))
            .unzip();
        let jitter_bound_ms = spec
            .intervals()
            .map_or(JITTER_BOUND_MS, |g| jitter_bound_for_quantum(f64::from(g.quantum())));
        Generator {
            model,
            rng,
            context: Vec::new(),
            nominal_t_ms: 0.0,
            jitter_bound_ms,
            dead_end_redraws: 0,
            sizes,
            intervals,
        }
    }

    pub fn model(&self) -> &CamModel {
        self.model
    }

    /// Current context, or `None` before the first draw.
    pub fn context(&self) -> Option<&[Symbol]> {
        (!self.context.is_empty()).then_some(&self.context[..])
    }

    pub fn nominal_t_ms(&self) -> f64 {
        self.nominal_t_ms
    }

    /// Times a context without successors forced a fresh initial draw.
    pub fn dead_end_redraws(&self) -> u64 {
        self.dead_end_redraws
    }

    fn reseed(&mut self) {
        let ctx = seed_context(self.model.initial(), &mut self.rng);
        self.context.clear();
        self.context.extend_from_slice(ctx);
    }

    /// Samples the next symbol and shifts it into the context.
    pub fn next_symbol(&mut self) -> Symbol {
        if self.context.is_empty() {
            self.reseed();
        }
        let table = self.model.table();
        let row = loop {
            match table.row(&self.context) {
                Some(row) => break row,
                None => {
                    self.dead_end_redraws += 1;
                    self.reseed();
                }
            }
        };
        let next = row.sample(self.rng.random::<f64>());
        self.context.copy_within(1.., 0);
        *self.context.last_mut().unwrap() = next;
        next
    }

    /// Advances the nominal clock by the symbol's interval and returns the
    /// jittered emission time.
    fn advance_clock(&mut self, interval_ms: u32) -> f64 {
        self.nominal_t_ms += f64::from(interval_ms);
        let jitter = sample_jitter(
            &mut self.rng,
            self.model.spec().jitter_std_ms(),
            self.jitter_bound_ms,
        );
        self.nominal_t_ms + jitter
    }

    /// One CAM from a complete-mode model.
    pub fn emit_cam(&mut self) -> Result<(CamEvent, Symbol), ModelError> {
        let got = self.model.spec().mode();
        if got != ModelMode::Complete {
            return Err(ModelError::WrongMode {
                expected: ModelMode::Complete,
                got,
            });
        }
        let s = self.next_symbol();
        let size = self.sizes[s.index0()].expect("complete symbol has a size");
        let interval = self.intervals[s.index0()].expect("complete symbol has an interval");
        let t_ms = self.advance_clock(interval);
        Ok((CamEvent::new(t_ms, size), s))
    }

    /// Next size in bytes from a size-carrying model.
    pub fn next_size(&mut self) -> Result<(u32, Symbol), ModelError> {
        let got = self.model.spec().mode();
        if !got.models_sizes() {
            return Err(ModelError::WrongMode {
                expected: ModelMode::SizeOnly,
                got,
            });
        }
        let s = self.next_symbol();
        Ok((self.sizes[s.index0()].unwrap(), s))
    }

    /// Next jittered emission time from an interval-carrying model.
    pub fn next_time(&mut self) -> Result<(f64, Symbol), ModelError> {
        let got = self.model.spec().mode();
        if !got.models_intervals() {
            return Err(ModelError::WrongMode {
                expected: ModelMode::IntervalOnly,
                got,
            });
        }
        let s = self.next_symbol();
        let interval = self.intervals[s.index0()].unwrap();
        Ok((self.advance_clock(interval), s))
    }
}

/// How much to generate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Count(usize),
    /// Stop before the first CAM later than this many milliseconds.
    DurationMs(f64),
}

impl Budget {
    fn capacity_hint(self) -> usize {
        match self {
            Budget::Count(n) => n,
            Budget::DurationMs(d) => (d / 100.0).clamp(0.0, 1e7) as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedStream {
    pub events: Vec<CamEvent>,
    /// Complete-alphabet symbol of each event.
    pub symbols: Vec<Symbol>,
    pub dead_end_redraws: u64,
}

fn run<F>(budget: Budget, mut step: F) -> Result<(Vec<CamEvent>, Vec<Symbol>), ModelError>
where
    F: FnMut() -> Result<(CamEvent, Symbol), ModelError>,
{
    let mut events = Vec::with_capacity(budget.capacity_hint());
    let mut symbols = Vec::with_capacity(budget.capacity_hint());
    match budget {
        Budget::Count(n) => {
            for _ in 0..n {
                let (e, s) = step()?;
                events.push(e);
                symbols.push(s);
            }
        }
        Budget::DurationMs(limit) => loop {
            let (e, s) = step()?;
            if e.t_ms > limit {
                break;
            }
            events.push(e);
            symbols.push(s);
        },
    }
    Ok((events, symbols))
}

/// Generates from a complete-mode model. Deterministic for a given
/// `(model, budget, seed)`.
pub fn generate_stream(model: &CamModel, budget: Budget, seed: u64) -> Result<GeneratedStream, ModelError> {
    let mut gen = Generator::new(model, seed);
    if budget == Budget::Count(0) {
        return Ok(GeneratedStream {
            events: Vec::new(),
            symbols: Vec::new(),
            dead_end_redraws: 0,
        });
    }
    let (events, symbols) = run(budget, || gen.emit_cam())?;
    Ok(GeneratedStream {
        events,
        symbols,
        dead_end_redraws: gen.dead_end_redraws(),
    })
}

/// Generates from two independent chains: sizes from a size-only model,
/// emission times from an interval-only model. The returned symbols are the
/// complete-alphabet symbols `(j - 1) * |S| + i` of each pair.
pub fn generate_separate(
    size_model: &CamModel,
    interval_model: &CamModel,
    budget: Budget,
    seed: u64,
) -> Result<GeneratedStream, ModelError> {
    for (model, expected) in [
        (size_model, ModelMode::SizeOnly),
        (interval_model, ModelMode::IntervalOnly),
    ] {
        let got = model.spec().mode();
        if got != expected {
            return Err(ModelError::WrongMode { expected, got });
        }
    }
    let size_card = size_model.spec().alphabet_len();
    let mut sizes = Generator::with_stream(size_model, seed, 0);
    let mut times = Generator::with_stream(interval_model, seed, 1);
    let (events, symbols) = run(budget, || {
        let (size, i) = sizes.next_size()?;
        let (t_ms, j) = times.next_time()?;
        let n = (j.get() - 1) * size_card + i.get();
        Ok((CamEvent::new(t_ms, size), Symbol::new(n).unwrap()))
    })?;
    Ok(GeneratedStream {
        events,
        symbols,
        dead_end_redraws: sizes.dead_end_redraws() + times.dead_end_redraws(),
    })
}
