use std::fmt::Write as _;

use serde_json::{json, Value};

use super::{
    autocorrelation, axis_pdf, cross_correlation, joint_pdf, kl_divergence, total_variation,
    KlOptions, LogBase, MetricError, Pdf,
};
use crate::alphabet::Symbol;
use crate::fit::estimate_jitter_std;
use crate::model::{ModelMode, ModelSpec};
use crate::trace::{quantize, CamEvent, QuantizeOptions, QuantizedTrace, TraceError};

pub const REPORT_SCHEMA: &str = "cam-validation v1";

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    pub max_lag: usize,
    pub kl: KlOptions,
    pub quantize: QuantizeOptions,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions {
            max_lag: 15,
            kl: KlOptions::default(),
            quantize: QuantizeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distance {
    pub kl: f64,
    pub tv: f64,
}

impl Distance {
    fn between(p: &Pdf, q: &Pdf, opts: KlOptions) -> Result<Self, MetricError> {
        Ok(Distance {
            kl: kl_divergence(p, q, opts)?,
            tv: total_variation(p, q)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationPair<L> {
    pub reference: Vec<(L, f64)>,
    pub generated: Vec<(L, f64)>,
}

impl<L: Copy + PartialEq> CorrelationPair<L> {
    /// Largest absolute difference over all lags.
    pub fn max_abs_diff(&self) -> f64 {
        self.reference
            .iter()
            .zip(&self.generated)
            .map(|((_, a), (_, b))| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub mode: ModelMode,
    pub kl_base: LogBase,
    pub reference_symbols: usize,
    pub generated_symbols: usize,
    /// Joint PDF in complete mode, the single marginal otherwise.
    pub distance: Distance,
    pub size: Option<Distance>,
    pub interval: Option<Distance>,
    /// `None` where a series is constant.
    pub autocorr_size: Option<CorrelationPair<usize>>,
    pub autocorr_interval: Option<CorrelationPair<usize>>,
    pub crosscorr: Option<CorrelationPair<i64>>,
    pub jitter_std_ms_reference: Option<f64>,
    pub jitter_std_ms_generated: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ValidateError {
    #[error("reference trace: {0}")]
    Reference(TraceError),
    #[error("generated trace: {0}")]
    Generated(TraceError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

struct Series {
    symbols: Vec<Symbol>,
    sizes: Option<Vec<f64>>,
    intervals: Option<Vec<f64>>,
    jitter: Option<f64>,
}

fn series(spec: &ModelSpec, trace: &QuantizedTrace) -> Series {
    let symbols: Vec<Symbol> = trace.symbols().collect();
    let decoded: Vec<(Option<u32>, Option<u32>)> = symbols
        .iter()
        .map(|&s| spec.decode(s).expect("quantized symbols lie in the alphabet"))
        .collect();
    let sizes = spec
        .mode()
        .models_sizes()
        .then(|| decoded.iter().map(|d| f64::from(d.0.unwrap())).collect());
    let intervals = spec
        .mode()
        .models_intervals()
        .then(|| decoded.iter().map(|d| f64::from(d.1.unwrap())).collect());
    let jitter = spec
        .intervals()
        .and_then(|g| estimate_jitter_std(trace.residuals(), f64::from(g.quantum())));
    Series {
        symbols,
        sizes,
        intervals,
        jitter,
    }
}

fn auto_pair(
    a: Option<&Vec<f64>>,
    b: Option<&Vec<f64>>,
    max_lag: usize,
) -> Option<CorrelationPair<usize>> {
    Some(CorrelationPair {
        reference: autocorrelation(a?, max_lag).ok()?,
        generated: autocorrelation(b?, max_lag).ok()?,
    })
}

/// Compares a generated trace with a reference trace under `spec`.
///
/// Both traces are quantized onto the spec's alphabet. Distances compare the
/// reference PDF `P` with the generated PDF `Q`. Correlations use the
/// physical sizes (bytes) and intervals (ms) of the quantized symbols,
/// concatenated across segments.
pub fn validate(
    spec: &ModelSpec,
    reference: &[CamEvent],
    generated: &[CamEvent],
    opts: ValidateOptions,
) -> Result<ValidationReport, ValidateError> {
    let qr = quantize(reference, spec, opts.quantize).map_err(ValidateError::Reference)?;
    let qg = quantize(generated, spec, opts.quantize).map_err(ValidateError::Generated)?;
    let r = series(spec, &qr);
    let g = series(spec, &qg);

    let len = spec.alphabet_len();
    let distance = Distance::between(&joint_pdf(&r.symbols, len)?, &joint_pdf(&g.symbols, len)?, opts.kl)?;
    let (size, interval) = match spec.product() {
        Some(a) if spec.mode() == ModelMode::Complete => (
            Some(Distance::between(
                &axis_pdf(&r.symbols, a, true)?,
                &axis_pdf(&g.symbols, a, true)?,
                opts.kl,
            )?),
            Some(Distance::between(
                &axis_pdf(&r.symbols, a, false)?,
                &axis_pdf(&g.symbols, a, false)?,
                opts.kl,
            )?),
        ),
        _ => match spec.mode() {
            ModelMode::SizeOnly => (Some(distance), None),
            _ => (None, Some(distance)),
        },
    };

    let max_lag = opts.max_lag;
    let crosscorr = (|| {
        Some(CorrelationPair {
            reference: cross_correlation(r.sizes.as_ref()?, r.intervals.as_ref()?, max_lag).ok()?,
            generated: cross_correlation(g.sizes.as_ref()?, g.intervals.as_ref()?, max_lag).ok()?,
        })
    })();

    Ok(ValidationReport {
        mode: spec.mode(),
        kl_base: opts.kl.base,
        reference_symbols: r.symbols.len(),
        generated_symbols: g.symbols.len(),
        distance,
        size,
        interval,
        autocorr_size: auto_pair(r.sizes.as_ref(), g.sizes.as_ref(), max_lag),
        autocorr_interval: auto_pair(r.intervals.as_ref(), g.intervals.as_ref(), max_lag),
        crosscorr,
        jitter_std_ms_reference: r.jitter,
        jitter_std_ms_generated: g.jitter,
    })
}

fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.6e}")
    }
}

impl ValidationReport {
    /// Flat `(metric, lag, value)` records in report order.
    pub fn records(&self) -> Vec<(String, Option<i64>, f64)> {
        let mut out: Vec<(String, Option<i64>, f64)> = vec![
            ("reference_symbols".into(), None, self.reference_symbols as f64),
            ("generated_symbols".into(), None, self.generated_symbols as f64),
            ("kl".into(), None, self.distance.kl),
            ("tv".into(), None, self.distance.tv),
        ];
        for (name, d) in [("size", self.size), ("interval", self.interval)] {
            if let Some(d) = d {
                out.push((format!("{name}_kl"), None, d.kl));
                out.push((format!("{name}_tv"), None, d.tv));
            }
        }
        for (name, v) in [
            ("jitter_std_ms.reference", self.jitter_std_ms_reference),
            ("jitter_std_ms.generated", self.jitter_std_ms_generated),
        ] {
            if let Some(v) = v {
                out.push((name.into(), None, v));
            }
        }
        for (name, pair) in [
            ("autocorr_size", &self.autocorr_size),
            ("autocorr_interval", &self.autocorr_interval),
        ] {
            if let Some(p) = pair {
                out.push((format!("{name}.max_abs_diff"), None, p.max_abs_diff()));
                for (side, v) in [("reference", &p.reference), ("generated", &p.generated)] {
                    for &(lag, r) in v {
                        out.push((format!("{name}.{side}"), Some(lag as i64), r));
                    }
                }
            }
        }
        if let Some(p) = &self.crosscorr {
            out.push(("crosscorr.max_abs_diff".into(), None, p.max_abs_diff()));
            for (side, v) in [("reference", &p.reference), ("generated", &p.generated)] {
                for &(lag, r) in v {
                    out.push((format!("crosscorr.{side}"), Some(lag), r));
                }
            }
        }
        out
    }

    /// `key<TAB>value` lines. Lagged values use `metric[lag]` keys.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode\t{}", self.mode);
        let _ = writeln!(s, "kl_base\t{}", self.kl_base.as_str());
        for (metric, lag, v) in self.records() {
            let value = if metric.ends_with("_symbols") {
                format!("{}", v as u64)
            } else {
                fmt_value(v)
            };
            match lag {
                Some(l) => {
                    let _ = writeln!(s, "{metric}[{l}]\t{value}");
                }
                None => {
                    let _ = writeln!(s, "{metric}\t{value}");
                }
            }
        }
        s
    }

    /// Machine-readable form: `{"schema", "mode", "kl_base", "metrics": [{"metric", "lag"?, "value"}]}`.
    /// Infinite values are the strings `"inf"` / `"-inf"`.
    pub fn to_json(&self) -> Value {
        let metrics: Vec<Value> = self
            .records()
            .into_iter()
            .map(|(metric, lag, v)| match lag {
                Some(l) => json!({ "metric": metric, "lag": l, "value": num(v) }),
                None => json!({ "metric": metric, "value": num(v) }),
            })
            .collect();
        json!({
            "schema": REPORT_SCHEMA,
            "mode": self.mode.as_str(),
            "kl_base": self.kl_base.as_str(),
            "metrics": metrics,
        })
    }
}
