//! Model specification and the fitted model bundle.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::alphabet::{AlphabetError, IntervalSet, ProductAlphabet, SizeSet, Symbol};
use crate::table::{InitialDistribution, TableError, TransitionTable};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("model order must be >= 1")]
    ZeroOrder,
    #[error("jitter standard deviation must be finite and >= 0, got {0}")]
    BadJitter(f64),
    #[error("{mode} mode requires {what}")]
    MissingSet { mode: ModelMode, what: &'static str },
    #[error("{mode} mode does not use {what}")]
    UnexpectedSet { mode: ModelMode, what: &'static str },
    #[error("{0} context length {1} does not match order {2}")]
    OrderMismatch(&'static str, usize, usize),
    #[error("symbol {symbol} in {what} exceeds alphabet size {len}")]
    SymbolOutOfAlphabet {
        what: &'static str,
        symbol: u32,
        len: u32,
    },
    #[error("model has no initial contexts")]
    EmptyInitial,
    #[error("no initial context has a successor in the transition table")]
    NoLiveContext,
    #[error("operation needs a {expected} model, got {got}")]
    WrongMode { expected: ModelMode, got: ModelMode },
}

/// Which variables a model's alphabet covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelMode {
    /// `A = S x G`
    Complete,
    /// `A = S`
    SizeOnly,
    /// `A = G`
    IntervalOnly,
}

impl ModelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelMode::Complete => "complete",
            ModelMode::SizeOnly => "size",
            ModelMode::IntervalOnly => "interval",
        }
    }

    pub fn models_sizes(self) -> bool {
        matches!(self, ModelMode::Complete | ModelMode::SizeOnly)
    }

    pub fn models_intervals(self) -> bool {
        matches!(self, ModelMode::Complete | ModelMode::IntervalOnly)
    }
}

impl fmt::Display for ModelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "complete" => Ok(ModelMode::Complete),
            "size" | "size-only" => Ok(ModelMode::SizeOnly),
            "interval" | "interval-only" => Ok(ModelMode::IntervalOnly),
            other => Err(format!(
                "unknown mode `{other}` (expected complete, size or interval)"
            )),
        }
    }
}

/// Alphabet definition plus order and jitter parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    mode: ModelMode,
    order: usize,
    sizes: Option<SizeSet>,
    intervals: Option<IntervalSet>,
    jitter_std_ms: f64,
}

impl ModelSpec {
    pub fn new(
        mode: ModelMode,
        order: usize,
        sizes: Option<SizeSet>,
        intervals: Option<IntervalSet>,
        jitter_std_ms: f64,
    ) -> Result<Self, ModelError> {
        if order == 0 {
            return Err(ModelError::ZeroOrder);
        }
        if !(jitter_std_ms.is_finite() && jitter_std_ms >= 0.0) {
            return Err(ModelError::BadJitter(jitter_std_ms));
        }
        match (mode.models_sizes(), sizes.is_some()) {
            (true, false) => return Err(ModelError::MissingSet { mode, what: "S" }),
            (false, true) => return Err(ModelError::UnexpectedSet { mode, what: "S" }),
            _ => {}
        }
        match (mode.models_intervals(), intervals.is_some()) {
            (true, false) => return Err(ModelError::MissingSet { mode, what: "G" }),
            (false, true) => return Err(ModelError::UnexpectedSet { mode, what: "G" }),
            _ => {}
        }
        Ok(ModelSpec {
            mode,
            order,
            sizes,
            intervals,
            jitter_std_ms,
        })
    }

    pub fn complete(
        order: usize,
        sizes: SizeSet,
        intervals: IntervalSet,
        jitter_std_ms: f64,
    ) -> Result<Self, ModelError> {
        Self::new(
            ModelMode::Complete,
            order,
            Some(sizes),
            Some(intervals),
            jitter_std_ms,
        )
    }

    pub fn size_only(order: usize, sizes: SizeSet) -> Result<Self, ModelError> {
        Self::new(ModelMode::SizeOnly, order, Some(sizes), None, 0.0)
    }

    pub fn interval_only(
        order: usize,
        intervals: IntervalSet,
        jitter_std_ms: f64,
    ) -> Result<Self, ModelError> {
        Self::new(
            ModelMode::IntervalOnly,
            order,
            None,
            Some(intervals),
            jitter_std_ms,
        )
    }

    pub fn mode(&self) -> ModelMode {
        self.mode
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn sizes(&self) -> Option<&SizeSet> {
        self.sizes.as_ref()
    }

    pub fn intervals(&self) -> Option<&IntervalSet> {
        self.intervals.as_ref()
    }

    pub fn jitter_std_ms(&self) -> f64 {
        self.jitter_std_ms
    }

    pub fn with_jitter(mut self, jitter_std_ms: f64) -> Result<Self, ModelError> {
        if !(jitter_std_ms.is_finite() && jitter_std_ms >= 0.0) {
            return Err(ModelError::BadJitter(jitter_std_ms));
        }
        self.jitter_std_ms = jitter_std_ms;
        Ok(self)
    }

    pub fn with_order(mut self, order: usize) -> Result<Self, ModelError> {
        if order == 0 {
            return Err(ModelError::ZeroOrder);
        }
        self.order = order;
        Ok(self)
    }

    /// Same order and sets, projected onto a separate-model mode.
    pub fn project(&self, mode: ModelMode) -> Result<ModelSpec, ModelError> {
        let sizes = if mode.models_sizes() {
            Some(self.sizes.clone().ok_or(ModelError::MissingSet { mode, what: "S" })?)
        } else {
            None
        };
        let intervals = if mode.models_intervals() {
            Some(
                self.intervals
                    .clone()
                    .ok_or(ModelError::MissingSet { mode, what: "G" })?,
            )
        } else {
            None
        };
        let jitter = if mode.models_intervals() {
            self.jitter_std_ms
        } else {
            0.0
        };
        ModelSpec::new(mode, self.order, sizes, intervals, jitter)
    }

    /// `|A|`
    pub fn alphabet_len(&self) -> u32 {
        match self.mode {
            ModelMode::Complete => self.product().unwrap().len(),
            ModelMode::SizeOnly => self.sizes.as_ref().unwrap().len() as u32,
            ModelMode::IntervalOnly => self.intervals.as_ref().unwrap().len() as u32,
        }
    }

    /// Product alphabet shape; only defined in complete mode.
    pub fn product(&self) -> Option<ProductAlphabet> {
        match (&self.sizes, &self.intervals) {
            (Some(s), Some(g)) => ProductAlphabet::new(s.len() as u32, g.len() as u32).ok(),
            _ => None,
        }
    }

    /// Size (bytes) and interval (ms) carried by a symbol. Components the
    /// mode does not model are `None`.
    pub fn decode(&self, symbol: Symbol) -> Result<(Option<u32>, Option<u32>), ModelError> {
        let n = symbol.get();
        Ok(match self.mode {
            ModelMode::Complete => {
                let (i, j) = self.product().unwrap().split(symbol)?;
                (
                    Some(self.sizes.as_ref().unwrap().value(i)?),
                    Some(self.intervals.as_ref().unwrap().value(j)?),
                )
            }
            ModelMode::SizeOnly => (Some(self.sizes.as_ref().unwrap().value(n)?), None),
            ModelMode::IntervalOnly => (None, Some(self.intervals.as_ref().unwrap().value(n)?)),
        })
    }
}

/// A fitted or loaded Markov source: specification, transition table and
/// initial-context distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CamModel {
    spec: ModelSpec,
    table: TransitionTable,
    initial: InitialDistribution,
    label: Option<String>,
}

impl CamModel {
    pub fn new(
        spec: ModelSpec,
        table: TransitionTable,
        initial: InitialDistribution,
    ) -> Result<Self, ModelError> {
        let m = spec.order();
        if table.order() != m {
            return Err(ModelError::OrderMismatch("transition", table.order(), m));
        }
        if initial.order() != m {
            return Err(ModelError::OrderMismatch("initial", initial.order(), m));
        }
        if initial.is_empty() {
            return Err(ModelError::EmptyInitial);
        }
        let len = spec.alphabet_len();
        if let Some(s) = table.max_symbol().filter(|s| s.get() > len) {
            return Err(ModelError::SymbolOutOfAlphabet {
                what: "transitions",
                symbol: s.get(),
                len,
            });
        }
        if let Some(s) = initial.max_symbol().filter(|s| s.get() > len) {
            return Err(ModelError::SymbolOutOfAlphabet {
                what: "initial",
                symbol: s.get(),
                len,
            });
        }
        if initial.contexts().all(|c| table.row(c).is_none()) {
            return Err(ModelError::NoLiveContext);
        }
        Ok(CamModel {
            spec,
            table,
            initial,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn table(&self) -> &TransitionTable {
        &self.table
    }

    pub fn initial(&self) -> &InitialDistribution {
        &self.initial
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Initial contexts with no recorded successor.
    pub fn dead_ends(&self) -> Vec<&[Symbol]> {
        self.initial
            .contexts()
            .filter(|c| self.table.row(c).is_none())
            .collect()
    }
}
