//! Source alphabets and the symbol index arithmetic.
//!
//! A complete-model alphabet is the cartesian product of a size set `S` and an
//! interval set `G`. Symbol `n` (1-based) pairs size index `i` with interval
//! index `j` through
//!
//! ```text
//! i = ((n - 1) % |S|) + 1
//! j = ((n - 1) / |S|) + 1
//! n = (j - 1) * |S| + i
//! ```
//!
//! so sizes vary fastest. All indices exposed here are 1-based.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlphabetError {
    #[error("symbol {n} outside alphabet 1..={len}")]
    SymbolOutOfRange { n: u32, len: u32 },
    #[error("size index {i} outside 1..={len}")]
    SizeIndexOutOfRange { i: u32, len: u32 },
    #[error("interval index {j} outside 1..={len}")]
    IntervalIndexOutOfRange { j: u32, len: u32 },
    #[error("size set must be non-empty")]
    EmptySizeSet,
    #[error("interval set must be non-empty")]
    EmptyIntervalSet,
    #[error("sizes must be >= 1 byte and strictly increasing, got {0:?}")]
    BadSizes(Vec<u32>),
    #[error("intervals must be strictly increasing positive multiples of {quantum} ms, got {values:?}")]
    BadIntervals { values: Vec<u32>, quantum: u32 },
    #[error("interval quantum must be positive")]
    ZeroQuantum,
}

/// A source symbol, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(u32);

impl Symbol {
    /// Wraps a 1-based index. Returns `None` for zero.
    pub fn new(n: u32) -> Option<Self> {
        (n >= 1).then_some(Symbol(n))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Zero-based position, for indexing dense arrays.
    pub fn index0(self) -> usize {
        (self.0 - 1) as usize
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Ordered set of message sizes in bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeSet(Vec<u32>);

impl SizeSet {
    pub fn new(sizes: Vec<u32>) -> Result<Self, AlphabetError> {
        if sizes.is_empty() {
            return Err(AlphabetError::EmptySizeSet);
        }
        if sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AlphabetError::BadSizes(sizes));
        }
        Ok(SizeSet(sizes))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Size in bytes for a 1-based size index.
    pub fn value(&self, i: u32) -> Result<u32, AlphabetError> {
        check_index(i, self.0.len())
            .map(|k| self.0[k])
            .ok_or(AlphabetError::SizeIndexOutOfRange {
                i,
                len: self.0.len() as u32,
            })
    }

    /// 1-based index of the size closest to `bytes`, if within `tolerance`.
    /// Ties go to the smaller size.
    pub fn nearest(&self, bytes: u32, tolerance: u32) -> Option<u32> {
        let (k, dist) = self
            .0
            .iter()
            .enumerate()
            .map(|(k, &s)| (k, s.abs_diff(bytes)))
            .min_by_key(|&(_, d)| d)?;
        (dist <= tolerance).then_some(k as u32 + 1)
    }
}

/// Ordered set of generation intervals in milliseconds, all multiples of a
/// base quantum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalSet {
    values: Vec<u32>,
    quantum: u32,
}

impl IntervalSet {
    pub fn new(values: Vec<u32>, quantum: u32) -> Result<Self, AlphabetError> {
        if quantum == 0 {
            return Err(AlphabetError::ZeroQuantum);
        }
        if values.is_empty() {
            return Err(AlphabetError::EmptyIntervalSet);
        }
        let ok = values.iter().all(|&g| g > 0 && g % quantum == 0)
            && values.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(AlphabetError::BadIntervals { values, quantum });
        }
        Ok(IntervalSet { values, quantum })
    }

    /// Builds a set using the gcd of the values as quantum.
    pub fn with_gcd_quantum(values: Vec<u32>) -> Result<Self, AlphabetError> {
        let quantum = values.iter().copied().fold(0, gcd);
        IntervalSet::new(values, quantum)
    }

    /// `{100, 200, ..., 1000}` ms with a 100 ms quantum.
    pub fn etsi_default() -> Self {
        IntervalSet {
            values: (1..=10).map(|k| k * 100).collect(),
            quantum: 100,
        }
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.values
    }

    pub fn quantum(&self) -> u32 {
        self.quantum
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> u32 {
        self.values[0]
    }

    pub fn max(&self) -> u32 {
        *self.values.last().unwrap()
    }

    /// Interval in ms for a 1-based interval index.
    pub fn value(&self, j: u32) -> Result<u32, AlphabetError> {
        check_index(j, self.values.len())
            .map(|k| self.values[k])
            .ok_or(AlphabetError::IntervalIndexOutOfRange {
                j,
                len: self.values.len() as u32,
            })
    }

    /// 1-based index of an exact member.
    pub fn index_of(&self, g: u32) -> Option<u32> {
        self.values.binary_search(&g).ok().map(|k| k as u32 + 1)
    }
}

impl Default for IntervalSet {
    fn default() -> Self {
        IntervalSet::etsi_default()
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn check_index(k: u32, len: usize) -> Option<usize> {
    (k >= 1 && (k as usize) <= len).then(|| (k - 1) as usize)
}

/// Shape of the product alphabet `A = S x G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductAlphabet {
    size_card: u32,
    interval_card: u32,
}

impl ProductAlphabet {
    pub fn new(size_card: u32, interval_card: u32) -> Result<Self, AlphabetError> {
        if size_card == 0 {
            return Err(AlphabetError::EmptySizeSet);
        }
        if interval_card == 0 {
            return Err(AlphabetError::EmptyIntervalSet);
        }
        Ok(ProductAlphabet {
            size_card,
            interval_card,
        })
    }

    pub fn size_card(&self) -> u32 {
        self.size_card
    }

    pub fn interval_card(&self) -> u32 {
        self.interval_card
    }

    pub fn len(&self) -> u32 {
        self.size_card * self.interval_card
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn check_symbol(&self, n: u32) -> Result<u32, AlphabetError> {
        if n == 0 || n > self.len() {
            Err(AlphabetError::SymbolOutOfRange { n, len: self.len() })
        } else {
            Ok(n)
        }
    }

    /// `i = ((n - 1) % |S|) + 1`
    pub fn size_index(&self, n: u32) -> Result<u32, AlphabetError> {
        let n = self.check_symbol(n)?;
        Ok((n - 1) % self.size_card + 1)
    }

    /// `j = floor((n - 1) / |S|) + 1`
    pub fn interval_index(&self, n: u32) -> Result<u32, AlphabetError> {
        let n = self.check_symbol(n)?;
        Ok((n - 1) / self.size_card + 1)
    }

    /// `n = (j - 1) * |S| + i`
    pub fn symbol(&self, i: u32, j: u32) -> Result<u32, AlphabetError> {
        if i == 0 || i > self.size_card {
            return Err(AlphabetError::SizeIndexOutOfRange {
                i,
                len: self.size_card,
            });
        }
        if j == 0 || j > self.interval_card {
            return Err(AlphabetError::IntervalIndexOutOfRange {
                j,
                len: self.interval_card,
            });
        }
        Ok((j - 1) * self.size_card + i)
    }

    pub fn split(&self, s: Symbol) -> Result<(u32, u32), AlphabetError> {
        Ok((self.size_index(s.get())?, self.interval_index(s.get())?))
    }

    pub fn join(&self, i: u32, j: u32) -> Result<Symbol, AlphabetError> {
        self.symbol(i, j).map(Symbol)
    }
}
