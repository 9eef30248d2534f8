//! Distribution comparison and correlation statistics for validating
//! generated streams.

mod correlation;
mod report;

pub use correlation::{autocorrelation, cross_correlation};
pub use report::{
    validate, CorrelationPair, Distance, ValidateError, ValidateOptions, ValidationReport,
    REPORT_SCHEMA,
};

use thiserror::Error;

use crate::alphabet::{ProductAlphabet, Symbol};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("cannot build a distribution from an empty sample")]
    Empty,
    #[error("distributions are defined over different supports")]
    SupportMismatch,
    #[error("symbol {symbol} outside alphabet of size {len}")]
    SymbolOutOfRange { symbol: u32, len: u32 },
    #[error("invalid distribution: {0}")]
    InvalidPdf(String),
    #[error("correlation undefined for a constant series")]
    ZeroVariance,
    #[error("series of length {len} too short for lag {max_lag}")]
    TooShort { len: usize, max_lag: usize },
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("smoothing epsilon must be finite and > 0, got {0}")]
    BadSmoothing(f64),
}

/// Discrete distribution over an ordered support.
#[derive(Debug, Clone, PartialEq)]
pub struct Pdf {
    support: Vec<i64>,
    probs: Vec<f64>,
    // Kept for empirical PDFs so marginals are exact.
    counts: Option<Vec<u64>>,
}

impl Pdf {
    pub fn new(support: Vec<i64>, probs: Vec<f64>) -> Result<Self, MetricError> {
        if support.len() != probs.len() {
            return Err(MetricError::InvalidPdf(format!(
                "{} labels for {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        if probs.is_empty() {
            return Err(MetricError::Empty);
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(MetricError::InvalidPdf("negative or non-finite probability".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(MetricError::InvalidPdf(format!("probabilities sum to {sum}")));
        }
        Ok(Pdf {
            support,
            probs,
            counts: None,
        })
    }

    pub fn from_counts(support: Vec<i64>, counts: Vec<u64>) -> Result<Self, MetricError> {
        if support.len() != counts.len() {
            return Err(MetricError::InvalidPdf("label/count length mismatch".into()));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(MetricError::Empty);
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Pdf {
            support,
            probs,
            counts: Some(counts),
        })
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, label: i64) -> f64 {
        self.support
            .iter()
            .position(|&l| l == label)
            .map_or(0.0, |k| self.probs[k])
    }

    /// Sums a joint PDF over the product alphabet `A = S x G` down to the
    /// size axis (`sizes = true`) or interval axis.
    pub fn marginal(&self, alphabet: ProductAlphabet, sizes: bool) -> Result<Pdf, MetricError> {
        let len = alphabet.len() as usize;
        if self.len() != len || self.support.iter().zip(1..).any(|(&l, n)| l != n) {
            return Err(MetricError::SupportMismatch);
        }
        let card = if sizes {
            alphabet.size_card()
        } else {
            alphabet.interval_card()
        } as usize;
        let axis = |k: usize| {
            let (i, j) = alphabet.split(Symbol::new(k as u32 + 1).unwrap()).unwrap();
            (if sizes { i } else { j }) as usize - 1
        };
        let support = (1..=card as i64).collect();
        match &self.counts {
            Some(counts) => {
                let mut out = vec![0u64; card];
                for (k, &c) in counts.iter().enumerate() {
                    out[axis(k)] += c;
                }
                Pdf::from_counts(support, out)
            }
            None => {
                let mut out = vec![0.0; card];
                for (k, &p) in self.probs.iter().enumerate() {
                    out[axis(k)] += p;
                }
                Pdf::new(support, out)
            }
        }
    }
}

/// Empirical frequency of each symbol `1..=alphabet_len`; unseen symbols
/// keep probability 0.
pub fn joint_pdf(symbols: &[Symbol], alphabet_len: u32) -> Result<Pdf, MetricError> {
    if symbols.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut counts = vec![0u64; alphabet_len as usize];
    for s in symbols {
        if s.get() > alphabet_len {
            return Err(MetricError::SymbolOutOfRange {
                symbol: s.get(),
                len: alphabet_len,
            });
        }
        counts[s.index0()] += 1;
    }
    Pdf::from_counts((1..=i64::from(alphabet_len)).collect(), counts)
}

/// Size-index (`sizes = true`) or interval-index PDF counted directly from
/// complete-alphabet symbols.
pub fn axis_pdf(symbols: &[Symbol], alphabet: ProductAlphabet, sizes: bool) -> Result<Pdf, MetricError> {
    if symbols.is_empty() {
        return Err(MetricError::Empty);
    }
    let card = if sizes {
        alphabet.size_card()
    } else {
        alphabet.interval_card()
    };
    let mut counts = vec![0u64; card as usize];
    for &s in symbols {
        let (i, j) = alphabet.split(s).map_err(|_| MetricError::SymbolOutOfRange {
            symbol: s.get(),
            len: alphabet.len(),
        })?;
        counts[(if sizes { i } else { j }) as usize - 1] += 1;
    }
    Pdf::from_counts((1..=i64::from(card)).collect(), counts)
}

/// Histogram PDF of raw values with `bin_width`-wide bins. Labels are the
/// bins' lower edges; empty bins between the extremes are kept.
pub fn histogram_pdf(values: &[f64], bin_width: f64) -> Result<Pdf, MetricError> {
    if values.is_empty() {
        return Err(MetricError::Empty);
    }
    if !(bin_width.is_finite() && bin_width > 0.0) {
        return Err(MetricError::InvalidPdf(format!("bin width {bin_width}")));
    }
    let bin = |v: f64| (v / bin_width).floor() as i64;
    let lo = values.iter().map(|&v| bin(v)).min().unwrap();
    let hi = values.iter().map(|&v| bin(v)).max().unwrap();
    let mut counts = vec![0u64; (hi - lo + 1) as usize];
    for &v in values {
        counts[(bin(v) - lo) as usize] += 1;
    }
    let support = (lo..=hi)
        .map(|b| (b as f64 * bin_width).round() as i64)
        .collect();
    Pdf::from_counts(support, counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    /// nats
    #[default]
    E,
    /// bits
    Two,
}

impl LogBase {
    pub fn as_str(self) -> &'static str {
        match self {
            LogBase::E => "e",
            LogBase::Two => "2",
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "e" | "nats" => Ok(LogBase::E),
            "2" | "bits" => Ok(LogBase::Two),
            other => Err(format!("unknown log base `{other}` (expected e or 2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KlOptions {
    pub base: LogBase,
    /// When set, `Q` is replaced by `(Q + eps) / (1 + |A| eps)` first.
    pub smoothing: Option<f64>,
}

fn same_support(p: &Pdf, q: &Pdf) -> Result<(), MetricError> {
    if p.support != q.support {
        Err(MetricError::SupportMismatch)
    } else {
        Ok(())
    }
}

/// `D_KL(P || Q) = sum over P(a) > 0 of P(a) log(P(a) / Q(a))`.
///
/// Terms with `P(a) = 0` contribute nothing. Without smoothing, any `a` with
/// `P(a) > 0` and `Q(a) = 0` gives `+inf`.
pub fn kl_divergence(p: &Pdf, q: &Pdf, opts: KlOptions) -> Result<f64, MetricError> {
    same_support(p, q)?;
    let (shift, scale) = match opts.smoothing {
        None => (0.0, 1.0),
        Some(eps) if eps.is_finite() && eps > 0.0 => (eps, 1.0 + eps * q.len() as f64),
        Some(eps) => return Err(MetricError::BadSmoothing(eps)),
    };
    let mut d = 0.0;
    for (&pa, &qa) in p.probs.iter().zip(&q.probs) {
        if pa == 0.0 {
            continue;
        }
        let qa = (qa + shift) / scale;
        if qa == 0.0 {
            return Ok(f64::INFINITY);
        }
        d += pa * (pa / qa).ln();
    }
    // Rounding can leave a tiny negative value for P close to Q.
    let d = d.max(0.0);
    Ok(match opts.base {
        LogBase::E => d,
        LogBase::Two => d / std::f64::consts::LN_2,
    })
}

/// `delta(P, Q) = max over a of |P(a) - Q(a)|`.
pub fn total_variation(p: &Pdf, q: &Pdf) -> Result<f64, MetricError> {
    same_support(p, q)?;
    Ok(p.probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pdf(p: &[f64]) -> Pdf {
        Pdf::new((1..=p.len() as i64).collect(), p.to_vec()).unwrap()
    }

    fn syms(v: &[u32]) -> Vec<Symbol> {
        v.iter().map(|&n| Symbol::new(n).unwrap()).collect()
    }

    #[test]
    fn joint_pdf_examples() {
        assert_eq!(joint_pdf(&syms(&[1, 1, 1]), 2).unwrap().probs(), &[1.0, 0.0]);
        assert_eq!(joint_pdf(&syms(&[1, 2, 1, 2]), 2).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(joint_pdf(&[], 2), Err(MetricError::Empty));
        assert!(matches!(
            joint_pdf(&syms(&[3]), 2),
            Err(MetricError::SymbolOutOfRange { .. })
        ));
    }

    #[test]
    fn kl_examples() {
        let p = pdf(&[0.5, 0.5]);
        let q = pdf(&[0.25, 0.75]);
        let expect = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        let got = kl_divergence(&p, &q, KlOptions::default()).unwrap();
        assert!((got - expect).abs() < 1e-12);
        assert!((got - 0.1438).abs() < 1e-4);
        assert_eq!(kl_divergence(&p, &p, KlOptions::default()).unwrap(), 0.0);

        let bits = kl_divergence(
            &p,
            &q,
            KlOptions {
                base: LogBase::Two,
                smoothing: None,
            },
        )
        .unwrap();
        assert!((bits - expect / std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn kl_disjoint_support() {
        let p = pdf(&[1.0, 0.0]);
        let q = pdf(&[0.0, 1.0]);
        assert_eq!(kl_divergence(&p, &q, KlOptions::default()).unwrap(), f64::INFINITY);
        let smoothed = kl_divergence(
            &p,
            &q,
            KlOptions {
                base: LogBase::E,
                smoothing: Some(1e-6),
            },
        )
        .unwrap();
        assert!(smoothed.is_finite() && smoothed > 10.0);
        assert!(kl_divergence(
            &p,
            &q,
            KlOptions {
                base: LogBase::E,
                smoothing: Some(-1.0)
            }
        )
        .is_err());
    }

    #[test]
    fn tv_examples() {
        let p = pdf(&[0.5, 0.5]);
        let q = pdf(&[0.25, 0.75]);
        assert_eq!(total_variation(&p, &q).unwrap(), 0.25);
        assert_eq!(total_variation(&p, &p).unwrap(), 0.0);
        assert_eq!(
            total_variation(&pdf(&[1.0, 0.0]), &pdf(&[0.0, 1.0])).unwrap(),
            1.0
        );
    }

    #[test]
    fn mismatched_supports() {
        let p = pdf(&[0.5, 0.5]);
        let q = pdf(&[0.2, 0.3, 0.5]);
        assert_eq!(total_variation(&p, &q), Err(MetricError::SupportMismatch));
        assert_eq!(
            kl_divergence(&p, &q, KlOptions::default()),
            Err(MetricError::SupportMismatch)
        );
    }

    #[test]
    fn pdf_validation() {
        assert!(Pdf::new(vec![1, 2], vec![0.5, 0.6]).is_err());
        assert!(Pdf::new(vec![1, 2], vec![-0.5, 1.5]).is_err());
        assert!(Pdf::new(vec![1], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn marginal_matches_direct_count() {
        let a = ProductAlphabet::new(4, 10).unwrap();
        let s = syms(&[1, 5, 6, 13, 16, 40, 13, 6, 15, 14, 13]);
        let joint = joint_pdf(&s, 40).unwrap();
        assert_eq!(joint.marginal(a, true).unwrap(), axis_pdf(&s, a, true).unwrap());
        assert_eq!(joint.marginal(a, false).unwrap(), axis_pdf(&s, a, false).unwrap());
    }

    #[test]
    fn histogram() {
        let h = histogram_pdf(&[200.0, 203.0, 215.0, 236.0], 10.0).unwrap();
        assert_eq!(h.support(), &[200, 210, 220, 230]);
        assert_eq!(h.probs(), &[0.5, 0.25, 0.0, 0.25]);
        let j = histogram_pdf(&[-1.5, 0.2, 0.7], 1.0).unwrap();
        assert_eq!(j.support(), &[-2, -1, 0]);
    }
}
