//! Sparse transition table and initial-context distribution.
//!
//! Contexts are ordered oldest to newest. Only successors with non-zero
//! probability are stored. Weights are kept exactly as supplied (so a loaded
//! file can be written back unchanged) and every probability handed out is
//! the weight divided by its row total.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::alphabet::Symbol;

/// Load-time tolerance on row sums for probabilities read from text.
pub const FILE_SUM_TOLERANCE: f64 = 1e-3;
/// Tolerance for tables built from exact counts.
pub const EXACT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("context [{context}] has length {len}, expected {order}")]
    ContextLength {
        context: String,
        len: usize,
        order: usize,
    },
    #[error("probability {p} for [{context}] is outside (0, 1]")]
    BadProbability { context: String, p: f64 },
    #[error("duplicate entry for [{context}]")]
    Duplicate { context: String },
    #[error("probabilities for context [{context}] sum to {sum}, not 1")]
    Normalization { context: String, sum: f64 },
    #[error("distribution has no entries")]
    Empty,
}

fn show(ctx: &[Symbol]) -> String {
    let mut s = String::new();
    for (k, sym) in ctx.iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{sym}");
    }
    s
}

fn check_probability(ctx: &[Symbol], p: f64) -> Result<(), TableError> {
    if p.is_finite() && p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(TableError::BadProbability {
            context: show(ctx),
            p,
        })
    }
}

/// Cumulative distribution with the last bucket pinned to exactly 1.
fn cumulative(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = weights
        .iter()
        .map(|w| {
            acc += w;
            acc / total
        })
        .collect();
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    cdf
}

/// Inverse-CDF lookup for `u` in `[0, 1)`. The final bucket absorbs any
/// floating-point residue so an index is always returned.
fn inverse_cdf(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Successor distribution of one context.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    next: Vec<Symbol>,
    weights: Vec<f64>,
    total: f64,
    cdf: Vec<f64>,
}

impl Row {
    fn new(mut pairs: Vec<(Symbol, f64)>) -> Self {
        pairs.sort_by_key(|&(s, _)| s);
        let (next, weights): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let total = weights.iter().sum();
        let cdf = cumulative(&weights);
        Row {
            next,
            weights,
            total,
            cdf,
        }
    }

    pub fn len(&self) -> usize {
        self.next.len()
    }

    pub fn is_empty(&self) -> bool {
        self.next.is_empty()
    }

    /// Successors with normalized probabilities, ascending by symbol.
    pub fn successors(&self) -> impl Iterator<Item = (Symbol, f64)> + '_ {
        self.next
            .iter()
            .zip(&self.weights)
            .map(move |(&s, &w)| (s, w / self.total))
    }

    /// Successors with the weights as stored.
    pub fn raw(&self) -> impl Iterator<Item = (Symbol, f64)> + '_ {
        self.next.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn probability(&self, next: Symbol) -> f64 {
        match self.next.binary_search(&next) {
            Ok(k) => self.weights[k] / self.total,
            Err(_) => 0.0,
        }
    }

    /// Draws a successor given a uniform variate in `[0, 1)`.
    pub fn sample(&self, u: f64) -> Symbol {
        self.next[inverse_cdf(&self.cdf, u)]
    }
}

/// `P(a(t) | a(t-m) .. a(t-1))`, one row per observed context.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    order: usize,
    rows: BTreeMap<Box<[Symbol]>, Row>,
}

impl TransitionTable {
    /// Builds a table from `(context, next, probability)` triples. Each
    /// context's probabilities must sum to 1 within `tolerance`.
    pub fn from_entries<I>(order: usize, entries: I, tolerance: f64) -> Result<Self, TableError>
    where
        I: IntoIterator<Item = (Vec<Symbol>, Symbol, f64)>,
    {
        let mut grouped: BTreeMap<Box<[Symbol]>, Vec<(Symbol, f64)>> = BTreeMap::new();
        for (ctx, next, p) in entries {
            if ctx.len() != order {
                return Err(TableError::ContextLength {
                    context: show(&ctx),
                    len: ctx.len(),
                    order,
                });
            }
            check_probability(&ctx, p)?;
            grouped.entry(ctx.into()).or_default().push((next, p));
        }
        let mut rows = BTreeMap::new();
        for (ctx, mut pairs) in grouped {
            pairs.sort_by_key(|&(s, _)| s);
            if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
                let mut c = ctx.to_vec();
                c.push(pairs.windows(2).find(|w| w[0].0 == w[1].0).unwrap()[0].0);
                return Err(TableError::Duplicate { context: show(&c) });
            }
            let sum: f64 = pairs.iter().map(|&(_, p)| p).sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(TableError::Normalization {
                    context: show(&ctx),
                    sum,
                });
            }
            rows.insert(ctx, Row::new(pairs));
        }
        Ok(TransitionTable { order, rows })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn row(&self, context: &[Symbol]) -> Option<&Row> {
        self.rows.get(context)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[Symbol], &Row)> {
        self.rows.iter().map(|(c, r)| (&**c, r))
    }

    pub fn contexts(&self) -> impl Iterator<Item = &[Symbol]> {
        self.rows.keys().map(|c| &**c)
    }

    pub fn context_count(&self) -> usize {
        self.rows.len()
    }

    /// Number of `(context, next)` entries, i.e. rows of the matrix form.
    pub fn entry_count(&self) -> usize {
        self.rows.values().map(Row::len).sum()
    }

    /// All entries with normalized probabilities, sorted by context then
    /// next symbol.
    pub fn entries(&self) -> impl Iterator<Item = (&[Symbol], Symbol, f64)> {
        self.rows()
            .flat_map(|(c, r)| r.successors().map(move |(s, p)| (c, s, p)))
    }

    pub fn probability(&self, context: &[Symbol], next: Symbol) -> f64 {
        self.row(context).map_or(0.0, |r| r.probability(next))
    }

    pub fn max_symbol(&self) -> Option<Symbol> {
        self.rows
            .iter()
            .flat_map(|(c, r)| c.iter().chain(&r.next))
            .copied()
            .max()
    }
}

/// Probability of each length-`m` context used to seed generation.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDistribution {
    order: usize,
    contexts: Vec<Box<[Symbol]>>,
    weights: Vec<f64>,
    total: f64,
    cdf: Vec<f64>,
}

impl InitialDistribution {
    pub fn from_entries<I>(order: usize, entries: I, tolerance: f64) -> Result<Self, TableError>
    where
        I: IntoIterator<Item = (Vec<Symbol>, f64)>,
    {
        let mut pairs: Vec<(Box<[Symbol]>, f64)> = Vec::new();
        for (ctx, p) in entries {
            if ctx.len() != order {
                return Err(TableError::ContextLength {
                    context: show(&ctx),
                    len: ctx.len(),
                    order,
                });
            }
            check_probability(&ctx, p)?;
            pairs.push((ctx.into(), p));
        }
        if pairs.is_empty() {
            return Err(TableError::Empty);
        }
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(TableError::Duplicate {
                context: show(&w[0].0),
            });
        }
        let sum: f64 = pairs.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > tolerance {
            return Err(TableError::Normalization {
                context: "initial".into(),
                sum,
            });
        }
        let (contexts, weights): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let cdf = cumulative(&weights);
        Ok(InitialDistribution {
            order,
            contexts,
            weights,
            total: sum,
            cdf,
        })
    }

    /// Uniform weights over the given contexts.
    pub fn uniform<I>(order: usize, contexts: I) -> Result<Self, TableError>
    where
        I: IntoIterator<Item = Vec<Symbol>>,
    {
        let contexts: Vec<_> = contexts.into_iter().collect();
        let p = 1.0 / contexts.len().max(1) as f64;
        Self::from_entries(order, contexts.into_iter().map(|c| (c, p)), 1e-6)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn contexts(&self) -> impl Iterator<Item = &[Symbol]> {
        self.contexts.iter().map(|c| &**c)
    }

    /// Contexts with normalized probabilities, sorted by context.
    pub fn entries(&self) -> impl Iterator<Item = (&[Symbol], f64)> {
        self.contexts
            .iter()
            .zip(&self.weights)
            .map(move |(c, &w)| (&**c, w / self.total))
    }

    /// Contexts with the weights as stored.
    pub fn raw(&self) -> impl Iterator<Item = (&[Symbol], f64)> {
        self.contexts.iter().map(|c| &**c).zip(self.weights.iter().copied())
    }

    pub fn probability(&self, context: &[Symbol]) -> f64 {
        match self.contexts.binary_search_by(|c| (**c).cmp(context)) {
            Ok(k) => self.weights[k] / self.total,
            Err(_) => 0.0,
        }
    }

    pub fn sample(&self, u: f64) -> &[Symbol] {
        &self.contexts[inverse_cdf(&self.cdf, u)]
    }

    pub fn max_symbol(&self) -> Option<Symbol> {
        self.contexts.iter().flat_map(|c| c.iter()).copied().max()
    }
}
