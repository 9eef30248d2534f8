//! Plain-text model files.
//!
//! ```text
//! # cam-model v1
//! mode=complete
//! m=1
//! S=200,300,360,455
//! G=100,200,300,400,500,600,700,800,900,1000
//! q=100
//! jitter_std_ms=3.444
//! label=vw-highway
//! [initial]
//! 1 0.250000000
//! ...
//! [transitions]
//! 1 1 0.500000000
//! 1 6 0.500000000
//! ...
//! ```
//!
//! Transition rows are `m` context symbols (oldest first), the next symbol
//! and its probability, sorted by context then next symbol. Initial rows are
//! `m` symbols and a probability. Probabilities carry 9 significant digits;
//! each context must sum to 1 within 1e-3 on load. `q` is optional and
//! defaults to the gcd of `G`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::alphabet::{IntervalSet, SizeSet, Symbol};
use crate::model::{CamModel, ModelError, ModelMode, ModelSpec};
use crate::table::{InitialDistribution, TransitionTable, FILE_SUM_TOLERANCE};

pub const MAGIC: &str = "# cam-model v1";

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing header field `{0}`")]
    MissingField(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn syntax(line: usize, msg: impl Into<String>) -> ModelFileError {
    ModelFileError::Syntax {
        line,
        msg: msg.into(),
    }
}

/// Fixed-point rendering with 9 significant digits. Stable under
/// parse-and-reprint.
pub fn format_probability(p: f64) -> String {
    let sci = format!("{p:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let rounded: f64 = format!("{mantissa}e{exp}").parse().expect("valid float");
    let decimals = (8 - exp).max(0) as usize;
    format!("{rounded:.decimals$}")
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

pub fn write_model(model: &CamModel) -> String {
    let spec = model.spec();
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "mode={}", spec.mode());
    let _ = writeln!(s, "m={}", spec.order());
    if let Some(sizes) = spec.sizes() {
        let _ = writeln!(s, "S={}", join(sizes.as_slice()));
    }
    if let Some(g) = spec.intervals() {
        let _ = writeln!(s, "G={}", join(g.as_slice()));
        let _ = writeln!(s, "q={}", g.quantum());
    }
    let _ = writeln!(s, "jitter_std_ms={}", spec.jitter_std_ms());
    if let Some(label) = model.label() {
        let _ = writeln!(s, "label={label}");
    }
    s.push_str("[initial]\n");
    for (ctx, p) in model.initial().raw() {
        for sym in ctx {
            let _ = write!(s, "{sym} ");
        }
        let _ = writeln!(s, "{}", format_probability(p));
    }
    s.push_str("[transitions]\n");
    for (ctx, row) in model.table().rows() {
        for (next, p) in row.raw() {
            for sym in ctx {
                let _ = write!(s, "{sym} ");
            }
            let _ = writeln!(s, "{next} {}", format_probability(p));
        }
    }
    s
}

fn parse_list(line: usize, v: &str) -> Result<Vec<u32>, ModelFileError> {
    v.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|e| syntax(line, format!("bad list item `{x}`: {e}")))
        })
        .collect()
}

fn parse_symbol(line: usize, field: &str) -> Result<Symbol, ModelFileError> {
    field
        .parse::<u32>()
        .ok()
        .and_then(Symbol::new)
        .ok_or_else(|| syntax(line, format!("bad symbol `{field}`")))
}

fn parse_prob(line: usize, field: &str) -> Result<f64, ModelFileError> {
    field
        .parse::<f64>()
        .map_err(|e| syntax(line, format!("bad probability `{field}`: {e}")))
}

/// Parses whitespace-separated rows of `width` fields: `width - 1` symbols
/// and a probability.
fn parse_row(line: usize, text: &str, width: usize) -> Result<(Vec<Symbol>, f64), ModelFileError> {
    let fields: Vec<&str> = text.split_whitespace().collect();
    if fields.len() != width {
        return Err(syntax(
            line,
            format!("expected {width} fields, found {}", fields.len()),
        ));
    }
    let syms = fields[..width - 1]
        .iter()
        .map(|f| parse_symbol(line, f))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((syms, parse_prob(line, fields[width - 1])?))
}

#[derive(PartialEq)]
enum Section {
    Header,
    Initial,
    Transitions,
}

pub fn parse_model(text: &str) -> Result<CamModel, ModelFileError> {
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim()));
    match lines.next() {
        Some((_, MAGIC)) => {}
        Some((n, other)) => return Err(syntax(n, format!("expected `{MAGIC}`, found `{other}`"))),
        None => return Err(syntax(1, "empty model file")),
    }

    let mut mode = None;
    let mut order = None;
    let mut sizes = None;
    let mut intervals = None;
    let mut quantum = None;
    let mut jitter = None;
    let mut label = None;
    let mut initial = Vec::new();
    let mut transitions = Vec::new();
    let mut section = Section::Header;

    for (n, l) in lines {
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        match l {
            "[initial]" => {
                section = Section::Initial;
                continue;
            }
            "[transitions]" => {
                section = Section::Transitions;
                continue;
            }
            _ => {}
        }
        match section {
            Section::Header => {
                let (k, v) = l
                    .split_once('=')
                    .ok_or_else(|| syntax(n, format!("expected key=value, found `{l}`")))?;
                let v = v.trim();
                match k.trim() {
                    "mode" => mode = Some(v.parse::<ModelMode>().map_err(|e| syntax(n, e))?),
                    "m" => {
                        order = Some(
                            v.parse::<usize>()
                                .map_err(|e| syntax(n, format!("bad order: {e}")))?,
                        )
                    }
                    "S" => sizes = Some(parse_list(n, v)?),
                    "G" => intervals = Some(parse_list(n, v)?),
                    "q" => {
                        quantum = Some(
                            v.parse::<u32>()
                                .map_err(|e| syntax(n, format!("bad quantum: {e}")))?,
                        )
                    }
                    "jitter_std_ms" => {
                        jitter = Some(
                            v.parse::<f64>()
                                .map_err(|e| syntax(n, format!("bad jitter: {e}")))?,
                        )
                    }
                    "label" => label = Some(v.to_string()),
                    other => return Err(syntax(n, format!("unknown header field `{other}`"))),
                }
            }
            Section::Initial => {
                let m = order.ok_or(ModelFileError::MissingField("m"))?;
                initial.push(parse_row(n, l, m + 1)?);
            }
            Section::Transitions => {
                let m = order.ok_or(ModelFileError::MissingField("m"))?;
                let (mut syms, p) = parse_row(n, l, m + 2)?;
                let next = syms.pop().unwrap();
                transitions.push((syms, next, p));
            }
        }
    }

    let mode = mode.ok_or(ModelFileError::MissingField("mode"))?;
    let order = order.ok_or(ModelFileError::MissingField("m"))?;
    let jitter = jitter.unwrap_or(0.0);
    let sizes = sizes.map(SizeSet::new).transpose().map_err(ModelError::from)?;
    let intervals = intervals
        .map(|g| match quantum {
            Some(q) => IntervalSet::new(g, q),
            None => IntervalSet::with_gcd_quantum(g),
        })
        .transpose()
        .map_err(ModelError::from)?;
    let spec = ModelSpec::new(mode, order, sizes, intervals, jitter)?;
    build(spec, transitions, Some(initial), label)
}

fn build(
    spec: ModelSpec,
    transitions: Vec<(Vec<Symbol>, Symbol, f64)>,
    initial: Option<Vec<(Vec<Symbol>, f64)>>,
    label: Option<String>,
) -> Result<CamModel, ModelFileError> {
    let m = spec.order();
    let table =
        TransitionTable::from_entries(m, transitions, FILE_SUM_TOLERANCE).map_err(ModelError::from)?;
    let initial = match initial {
        Some(rows) => InitialDistribution::from_entries(m, rows, FILE_SUM_TOLERANCE),
        None => InitialDistribution::uniform(m, table.contexts().map(<[Symbol]>::to_vec)),
    }
    .map_err(ModelError::from)?;
    let model = CamModel::new(spec, table, initial)?;
    Ok(match label {
        Some(l) => model.with_label(l),
        None => model,
    })
}

/// Reads a headerless matrix (`m + 2` whitespace-separated fields per row)
/// under a caller-supplied spec. `initial`, if given, holds `m + 1` field
/// rows; otherwise every context of the matrix is equally likely.
pub fn import_matrix(
    spec: ModelSpec,
    matrix: &str,
    initial: Option<&str>,
) -> Result<CamModel, ModelFileError> {
    let m = spec.order();
    let rows = |text: &str, width: usize| -> Result<Vec<(Vec<Symbol>, f64)>, ModelFileError> {
        text.lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .map(|(n, l)| parse_row(n, l, width))
            .collect()
    };
    let transitions = rows(matrix, m + 2)?
        .into_iter()
        .map(|(mut syms, p)| {
            let next = syms.pop().unwrap();
            (syms, next, p)
        })
        .collect();
    let initial = initial.map(|t| rows(t, m + 1)).transpose()?;
    build(spec, transitions, initial, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "# cam-model v1
mode=size
m=1
S=200,300
jitter_std_ms=0
[initial]
1 0.500000000
2 0.500000000
[transitions]
1 2 1.00000000
2 1 1.00000000
";

    #[test]
    fn probability_format() {
        assert_eq!(format_probability(1.0), "1.00000000");
        assert_eq!(format_probability(0.5), "0.500000000");
        assert_eq!(format_probability(4.0 / 7.0), "0.571428571");
        assert_eq!(format_probability(0.099_999_999_99), "0.100000000");
        assert_eq!(format_probability(1.234_567_891_2e-5), "0.0000123456789");
        for p in [0.099_999_999_99, 1.0 / 3.0, 2.5e-7, 0.999_999_999_9] {
            let once = format_probability(p);
            assert_eq!(format_probability(once.parse().unwrap()), once);
        }
    }

    #[test]
    fn toy_round_trip() {
        let model = parse_model(TOY).unwrap();
        assert_eq!(model.spec().mode(), ModelMode::SizeOnly);
        assert_eq!(model.table().entry_count(), 2);
        assert_eq!(write_model(&model), TOY);
    }

    #[test]
    fn three_decimal_rows_accepted() {
        let text = "# cam-model v1\nmode=size\nm=1\nS=1,2,3,4\n[initial]\n1 1\n[transitions]\n\
                    1 1 0.143\n1 2 0.143\n1 3 0.143\n1 4 0.571\n";
        let model = parse_model(text).unwrap();
        let sum: f64 = model.table().entries().map(|(_, _, p)| p).sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(
            parse_model("mode=size\n"),
            Err(ModelFileError::Syntax { line: 1, .. })
        ));
        let bad_sum = TOY.replace("2 1 1.00000000", "2 1 0.9");
        assert!(matches!(parse_model(&bad_sum), Err(ModelFileError::Model(_))));
        let bad_width = TOY.replace("1 2 1.00000000", "1 2");
        assert!(matches!(
            parse_model(&bad_width),
            Err(ModelFileError::Syntax { line: 10, .. })
        ));
        let bad_symbol = TOY.replace("2 1 1.00000000", "2 9 1.00000000");
        assert!(parse_model(&bad_symbol).is_err());
        let zero = TOY.replace("2 1 1.00000000", "2 0 1.00000000");
        assert!(parse_model(&zero).is_err());
        let no_mode = TOY.replace("mode=size\n", "");
        assert!(matches!(
            parse_model(&no_mode),
            Err(ModelFileError::MissingField("mode"))
        ));
        let unknown = TOY.replace("m=1\n", "m=1\ncolour=red\n");
        assert!(parse_model(&unknown).is_err());
    }

    #[test]
    fn import_headerless_matrix() {
        let spec = ModelSpec::size_only(2, SizeSet::new(vec![200, 300, 360, 455]).unwrap()).unwrap();
        let matrix = "1 2 3 0.250\n1 2 4 0.750\n2 4 1 1.000\n4 1 2 1.000\n";
        let model = import_matrix(spec.clone(), matrix, None).unwrap();
        assert_eq!(model.table().context_count(), 3);
        assert_eq!(model.initial().len(), 3);
        assert!((model.initial().probability(&[Symbol::new(2).unwrap(), Symbol::new(4).unwrap()]) - 1.0 / 3.0).abs() < 1e-12);
        let with_init = import_matrix(spec.clone(), matrix, Some("1 2 1.0\n")).unwrap();
        assert_eq!(with_init.initial().len(), 1);
        assert!(import_matrix(spec, "1 2 0.5\n", None).is_err());
    }
}
