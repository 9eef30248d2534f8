//! Maximum-likelihood estimation of transition tables from quantized traces.
//!
//! For each length-`m` context `c` and successor `a`,
//! `P(a | c) = count(c, a) / total(c)` where `total(c)` is the sum of the
//! context's counts. Unobserved transitions stay absent; there is no
//! smoothing.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::alphabet::{AlphabetError, SizeSet, Symbol};
use crate::model::{CamModel, ModelError, ModelMode, ModelSpec};
use crate::table::{InitialDistribution, TransitionTable, EXACT_SUM_TOLERANCE};
use crate::trace::{CamEvent, QuantizedTrace};

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need more than {order} symbols in some segment to fit an order-{order} model (longest segment has {longest})")]
    InsufficientData { order: usize, longest: usize },
    #[error("cannot fit a {spec} model from a {trace} trace")]
    ModeMismatch { spec: ModelMode, trace: ModelMode },
    #[error("separate fit needs a size or interval spec, got {0}")]
    NotSeparate(ModelMode),
    #[error("no size peak above probability {min_peak_prob}; pass explicit sizes instead")]
    NoSizePeaks { min_peak_prob: f64 },
    #[error("size histogram needs at least one event")]
    NoEvents,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Alphabet(#[from] AlphabetError),
}

/// Occurrence counts of `(context, next)` pairs plus every length-`m` window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountTable {
    order: usize,
    transitions: BTreeMap<Box<[Symbol]>, BTreeMap<Symbol, u64>>,
    windows: BTreeMap<Box<[Symbol]>, u64>,
}

impl CountTable {
    pub fn new(order: usize) -> Self {
        CountTable {
            order,
            transitions: BTreeMap::new(),
            windows: BTreeMap::new(),
        }
    }

    /// Counts one contiguous symbol run. Windows are overlapping.
    pub fn add_sequence(&mut self, symbols: &[Symbol]) {
        let m = self.order;
        if symbols.len() < m {
            return;
        }
        for w in symbols.windows(m) {
            *self.windows.entry(w.into()).or_default() += 1;
        }
        for w in symbols.windows(m + 1) {
            *self
                .transitions
                .entry(w[..m].into())
                .or_default()
                .entry(w[m])
                .or_default() += 1;
        }
    }

    pub fn from_trace(order: usize, trace: &QuantizedTrace) -> Self {
        let mut counts = CountTable::new(order);
        for seg in &trace.segments {
            counts.add_sequence(&seg.symbols);
        }
        counts
    }

    /// Adds another table's counts. The result does not depend on how the
    /// input was partitioned.
    pub fn merge(&mut self, other: &CountTable) {
        assert_eq!(self.order, other.order, "merging tables of different order");
        for (ctx, row) in &other.transitions {
            let dst = self.transitions.entry(ctx.clone()).or_default();
            for (&next, &c) in row {
                *dst.entry(next).or_default() += c;
            }
        }
        for (ctx, &c) in &other.windows {
            *self.windows.entry(ctx.clone()).or_default() += c;
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn count(&self, context: &[Symbol], next: Symbol) -> u64 {
        self.transitions
            .get(context)
            .and_then(|r| r.get(&next))
            .copied()
            .unwrap_or(0)
    }

    /// Row total `r(context) = sum over next of count(context, next)`.
    pub fn row_total(&self, context: &[Symbol]) -> u64 {
        self.transitions
            .get(context)
            .map_or(0, |r| r.values().sum())
    }

    /// Number of counted transitions.
    pub fn total(&self) -> u64 {
        self.transitions.values().flat_map(|r| r.values()).sum()
    }

    pub fn window_total(&self) -> u64 {
        self.windows.values().sum()
    }

    pub fn contexts(&self) -> impl Iterator<Item = &[Symbol]> {
        self.transitions.keys().map(|c| &**c)
    }

    pub fn to_table(&self) -> Result<TransitionTable, FitError> {
        let entries = self.transitions.iter().flat_map(|(ctx, row)| {
            let total: u64 = row.values().sum();
            row.iter()
                .map(move |(&next, &c)| (ctx.to_vec(), next, c as f64 / total as f64))
        });
        Ok(TransitionTable::from_entries(self.order, entries, EXACT_SUM_TOLERANCE)
            .map_err(ModelError::from)?)
    }

    pub fn to_initial(&self) -> Result<InitialDistribution, FitError> {
        let total = self.window_total() as f64;
        let entries = self
            .windows
            .iter()
            .map(|(ctx, &c)| (ctx.to_vec(), c as f64 / total));
        Ok(InitialDistribution::from_entries(self.order, entries, EXACT_SUM_TOLERANCE)
            .map_err(ModelError::from)?)
    }
}

/// Output of a fit: the model (carrying the estimated jitter) and the raw
/// counts.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub model: CamModel,
    pub counts: CountTable,
    /// `None` when the mode has no intervals or too few residuals.
    pub jitter_std_ms: Option<f64>,
}

/// Jitter standard deviation from interval residuals.
///
/// A residual is the difference of two independent jitters on a nominal
/// grid, so its variance is twice the jitter variance. Residuals at or beyond
/// half a quantum come from clamped intervals and are ignored.
pub fn estimate_jitter_std(residuals: impl IntoIterator<Item = f64>, quantum_ms: f64) -> Option<f64> {
    let limit = quantum_ms / 2.0;
    let (mut n, mut mean, mut m2) = (0u64, 0.0f64, 0.0f64);
    for r in residuals.into_iter().filter(|r| r.abs() < limit) {
        // Welford
        n += 1;
        let d = r - mean;
        mean += d / n as f64;
        m2 += d * (r - mean);
    }
    (n >= 2).then(|| (m2 / (n - 1) as f64).sqrt() / std::f64::consts::SQRT_2)
}

/// Fits `spec` to a quantized trace. A complete-mode trace may be fitted
/// with a separate-mode spec; its symbols are projected first.
pub fn fit(trace: &QuantizedTrace, spec: &ModelSpec) -> Result<Fitted, FitError> {
    let projected;
    let trace = if trace.mode == spec.mode() {
        trace
    } else if trace.mode == ModelMode::Complete {
        let size_card = match trace_size_card(spec) {
            Some(c) => c,
            None => {
                return Err(FitError::ModeMismatch {
                    spec: spec.mode(),
                    trace: trace.mode,
                })
            }
        };
        projected = trace.project(spec.mode(), size_card);
        &projected
    } else {
        return Err(FitError::ModeMismatch {
            spec: spec.mode(),
            trace: trace.mode,
        });
    };

    let m = spec.order();
    let counts = CountTable::from_trace(m, trace);
    if counts.total() == 0 {
        return Err(FitError::InsufficientData {
            order: m,
            longest: trace.segments.iter().map(|s| s.symbols.len()).max().unwrap_or(0),
        });
    }

    let jitter_std_ms = match spec.intervals() {
        Some(g) if spec.mode().models_intervals() => {
            estimate_jitter_std(trace.residuals(), f64::from(g.quantum()))
        }
        _ => None,
    };
    let fitted_spec = spec.clone().with_jitter(jitter_std_ms.unwrap_or(0.0))?;
    let model = CamModel::new(fitted_spec, counts.to_table()?, counts.to_initial()?)?;
    Ok(Fitted {
        model,
        counts,
        jitter_std_ms,
    })
}

// Projecting a complete trace needs |S|, which only a size spec carries.
// Interval-only fits from complete traces go through `fit_separate`.
fn trace_size_card(spec: &ModelSpec) -> Option<u32> {
    spec.sizes().map(|s| s.len() as u32)
}

/// Fits a separate (size-only or interval-only) model from a complete-mode
/// trace with size cardinality `size_card`, or from an already projected
/// trace.
pub fn fit_separate(
    trace: &QuantizedTrace,
    spec: &ModelSpec,
    size_card: u32,
) -> Result<Fitted, FitError> {
    if spec.mode() == ModelMode::Complete {
        return Err(FitError::NotSeparate(spec.mode()));
    }
    let projected = trace.project(spec.mode(), size_card);
    fit(&projected, spec)
}

/// Candidate size set from the peaks of a size histogram.
///
/// Sizes are binned `hist_bin` bytes wide. A bin is a peak when its count is
/// at least its left neighbour's and strictly above its right neighbour's,
/// and its share of events exceeds `min_peak_prob`. Each peak is reported as
/// the rounded mean of the raw sizes in the peak bin and its two neighbours.
pub fn detect_size_bins(
    events: &[CamEvent],
    hist_bin: u32,
    min_peak_prob: f64,
) -> Result<SizeSet, FitError> {
    if events.is_empty() {
        return Err(FitError::NoEvents);
    }
    let hist_bin = hist_bin.max(1);
    let mut bins: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    for e in events {
        let b = bins.entry(e.size_bytes / hist_bin).or_default();
        b.0 += 1;
        b.1 += u64::from(e.size_bytes);
    }
    let n = events.len() as f64;
    let get = |k: Option<u32>| k.and_then(|k| bins.get(&k)).copied().unwrap_or((0, 0));
    let mut peaks = Vec::new();
    for (&k, &(count, _)) in &bins {
        let left = get(k.checked_sub(1));
        let right = get(k.checked_add(1));
        if count >= left.0 && count > right.0 && count as f64 / n > min_peak_prob {
            let c = count + left.0 + right.0;
            let s = get(Some(k)).1 + left.1 + right.1;
            peaks.push(((s as f64 / c as f64).round() as u32).max(1));
        }
    }
    peaks.dedup();
    if peaks.is_empty() {
        return Err(FitError::NoSizePeaks { min_peak_prob });
    }
    Ok(SizeSet::new(peaks)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::IntervalSet;

    fn syms(v: &[u32]) -> Vec<Symbol> {
        v.iter().map(|&n| Symbol::new(n).unwrap()).collect()
    }

    fn two_symbol_spec(m: usize) -> ModelSpec {
        ModelSpec::size_only(m, SizeSet::new(vec![200, 300]).unwrap()).unwrap()
    }

    fn fit_symbols(v: &[u32], m: usize) -> Fitted {
        let t = QuantizedTrace::from_symbols(ModelMode::SizeOnly, syms(v));
        fit(&t, &two_symbol_spec(m)).unwrap()
    }

    #[test]
    fn alternating_sequence() {
        let f = fit_symbols(&[1, 2, 1, 2, 1, 2, 1], 1);
        let t = f.model.table();
        assert_eq!(t.probability(&syms(&[1]), syms(&[2])[0]), 1.0);
        assert_eq!(t.probability(&syms(&[2]), syms(&[1])[0]), 1.0);
        assert_eq!(t.entry_count(), 2);
    }

    #[test]
    fn brute_force_counts() {
        // pairs (1,1),(1,2),(2,1),(1,1),(1,2)
        let f = fit_symbols(&[1, 1, 2, 1, 1, 2], 1);
        let t = f.model.table();
        assert_eq!(t.probability(&syms(&[1]), syms(&[1])[0]), 0.5);
        assert_eq!(t.probability(&syms(&[1]), syms(&[2])[0]), 0.5);
        assert_eq!(t.probability(&syms(&[2]), syms(&[1])[0]), 1.0);
        assert_eq!(f.counts.total(), 5);
        assert_eq!(f.counts.row_total(&syms(&[1])), 4);
    }

    #[test]
    fn initial_windows() {
        let f = fit_symbols(&[1, 1, 2, 1, 1, 2], 2);
        let init = f.model.initial();
        assert_eq!(init.len(), 3);
        assert!((init.probability(&syms(&[1, 1])) - 0.4).abs() < 1e-15);
        assert!((init.probability(&syms(&[1, 2])) - 0.4).abs() < 1e-15);
        assert!((init.probability(&syms(&[2, 1])) - 0.2).abs() < 1e-15);
        // the final window (1,2) does have a successor earlier in the trace
        assert!(f.model.dead_ends().is_empty());
    }

    #[test]
    fn dead_end_context() {
        let f = fit_symbols(&[1, 1, 1, 2], 2);
        let dead = f.model.dead_ends();
        assert_eq!(dead, vec![&syms(&[1, 2])[..]]);
        assert!(f.model.table().row(&syms(&[1, 2])).is_none());
    }

    #[test]
    fn insufficient_data() {
        let t = QuantizedTrace::from_symbols(ModelMode::SizeOnly, syms(&[1, 2]));
        assert!(matches!(
            fit(&t, &two_symbol_spec(2)),
            Err(FitError::InsufficientData { order: 2, .. })
        ));
    }

    #[test]
    fn windows_do_not_cross_segments() {
        let mut t = QuantizedTrace::from_symbols(ModelMode::SizeOnly, syms(&[1, 1]));
        t.segments.push(crate::trace::Segment {
            symbols: syms(&[2, 2]),
            residuals_ms: vec![],
        });
        let f = fit(&t, &two_symbol_spec(1)).unwrap();
        assert_eq!(f.counts.count(&syms(&[1]), syms(&[2])[0]), 0);
        assert_eq!(f.counts.total(), 2);
    }

    #[test]
    fn merge_matches_joint_count() {
        let a = syms(&[1, 2, 2, 1, 1]);
        let b = syms(&[2, 1, 2, 2]);
        let mut joint = CountTable::new(1);
        joint.add_sequence(&a);
        joint.add_sequence(&b);
        let mut left = CountTable::new(1);
        left.add_sequence(&b);
        let mut right = CountTable::new(1);
        right.add_sequence(&a);
        left.merge(&right);
        assert_eq!(left, joint);
    }

    #[test]
    fn separate_projection_matches_direct_fit() {
        let spec = ModelSpec::complete(
            1,
            SizeSet::new(vec![200, 300, 360, 455]).unwrap(),
            IntervalSet::etsi_default(),
            0.0,
        )
        .unwrap();
        let complete = QuantizedTrace::from_symbols(
            ModelMode::Complete,
            syms(&[13, 6, 15, 14, 13, 16, 2, 8, 13, 6]),
        );
        let size_spec = spec.project(ModelMode::SizeOnly).unwrap();
        let via_projection = fit_separate(&complete, &size_spec, 4).unwrap();
        let direct_syms: Vec<u32> = complete
            .symbols()
            .map(|s| (s.get() - 1) % 4 + 1)
            .collect();
        let direct = fit(
            &QuantizedTrace::from_symbols(ModelMode::SizeOnly, syms(&direct_syms)),
            &size_spec,
        )
        .unwrap();
        assert_eq!(via_projection.model.table(), direct.model.table());
        assert!(fit_separate(&complete, &spec, 4).is_err());
    }

    #[test]
    fn jitter_estimator() {
        // residuals +-a alternate: std = a * sqrt(n/(n-1)), sigma = std / sqrt 2
        let r: Vec<f64> = (0..1000).map(|k| if k % 2 == 0 { 2.0 } else { -2.0 }).collect();
        let s = estimate_jitter_std(r, 100.0).unwrap();
        let expect = 2.0 * (1000.0f64 / 999.0).sqrt() / 2f64.sqrt();
        assert!((s - expect).abs() < 1e-12);
        assert_eq!(estimate_jitter_std([1.0], 100.0), None);
        // clamped residuals are ignored
        assert_eq!(estimate_jitter_std([-70.0, 1.0], 100.0), None);
    }

    #[test]
    fn size_bins_single_mode() {
        let ev: Vec<CamEvent> = (0..50).map(|k| CamEvent::new(k as f64, 200)).collect();
        assert_eq!(detect_size_bins(&ev, 10, 0.05).unwrap().as_slice(), &[200]);
    }

    #[test]
    fn size_bins_empty() {
        assert!(matches!(detect_size_bins(&[], 10, 0.05), Err(FitError::NoEvents)));
    }
}
