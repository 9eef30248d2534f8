//! Reference implementations used as test oracles. They share no code with
//! the library: chains are sampled by linear scan with `StdRng`, counts are
//! kept in hash maps, and traces are synthesized directly from symbol
//! arithmetic.
#![allow(dead_code)]

use std::collections::HashMap;

use cam_model::table::{InitialDistribution, TransitionTable};
use cam_model::{CamEvent, CamModel, ModelSpec, Symbol};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

pub fn syms(v: &[u32]) -> Vec<Symbol> {
    v.iter().map(|&n| Symbol::new(n).unwrap()).collect()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Linear-scan draw from `(value, weight)` pairs whose weights sum to 1.
pub fn draw<T: Copy>(choices: &[(T, f64)], rng: &mut StdRng) -> T {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(v, p) in choices {
        acc += p;
        if u < acc {
            return v;
        }
    }
    choices.last().unwrap().0
}

/// Order-1 chain given as a dense matrix; row `a-1` holds P(b | a).
pub fn sample_order1(matrix: &[Vec<f64>], start: u32, n: usize, rng: &mut StdRng) -> Vec<u32> {
    let rows: Vec<Vec<(u32, f64)>> = matrix
        .iter()
        .map(|r| r.iter().enumerate().map(|(k, &p)| (k as u32 + 1, p)).collect())
        .collect();
    let mut out = Vec::with_capacity(n);
    let mut x = start;
    for _ in 0..n {
        x = draw(&rows[x as usize - 1], rng);
        out.push(x);
    }
    out
}

/// `x_t = x_{t-5}` with probability `keep`, otherwise uniform over `1..=k`.
pub fn sample_lag5(k: u32, keep: f64, n: usize, rng: &mut StdRng) -> Vec<u32> {
    let mut out: Vec<u32> = (0..5).map(|_| rng.random_range(1..=k)).collect();
    while out.len() < n {
        let x = if rng.random::<f64>() < keep {
            out[out.len() - 5]
        } else {
            rng.random_range(1..=k)
        };
        out.push(x);
    }
    out
}

/// Transition counts of every `m+1` window, keyed by (context, next).
pub fn count_windows(seq: &[u32], m: usize) -> HashMap<(Vec<u32>, u32), u64> {
    let mut counts = HashMap::new();
    for w in seq.windows(m + 1) {
        *counts.entry((w[..m].to_vec(), w[m])).or_insert(0) += 1;
    }
    counts
}

pub fn context_totals(counts: &HashMap<(Vec<u32>, u32), u64>) -> HashMap<Vec<u32>, u64> {
    let mut totals = HashMap::new();
    for ((ctx, _), &c) in counts {
        *totals.entry(ctx.clone()).or_insert(0) += c;
    }
    totals
}

/// CAM trace for complete-alphabet symbols: each symbol advances a nominal
/// clock by its interval, and the emitted time carries N(0, jitter) noise
/// clipped at `clip` ms.
pub fn events_for(
    symbols: &[u32],
    sizes: &[u32],
    intervals: &[u32],
    jitter: f64,
    clip: f64,
    rng: &mut StdRng,
) -> Vec<CamEvent> {
    let s = sizes.len() as u32;
    let normal = (jitter > 0.0).then(|| Normal::new(0.0, jitter).unwrap());
    let mut t = 0.0;
    let mut out = Vec::with_capacity(symbols.len() + 1);
    out.push(CamEvent::new(0.0, sizes[0]));
    for &n in symbols {
        let i = (n - 1) % s;
        let j = (n - 1) / s;
        t += f64::from(intervals[j as usize]);
        let noise = normal.map_or(0.0, |d| d.sample(rng).clamp(-clip, clip));
        out.push(CamEvent::new(t + noise, sizes[i as usize]));
    }
    out
}

/// Model with full rows over every context of `live` symbols, random weights,
/// and a uniform initial distribution.
pub fn random_dense_model(spec: ModelSpec, live: &[u32], rng: &mut StdRng) -> CamModel {
    let m = spec.order();
    let mut contexts: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..m {
        contexts = contexts
            .into_iter()
            .flat_map(|c| {
                live.iter().map(move |&s| {
                    let mut c = c.clone();
                    c.push(s);
                    c
                })
            })
            .collect();
    }
    let mut entries = Vec::new();
    for ctx in &contexts {
        let w: Vec<f64> = live.iter().map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = w.iter().sum();
        for (&s, wi) in live.iter().zip(&w) {
            entries.push((syms(ctx), Symbol::new(s).unwrap(), wi / total));
        }
    }
    let table = TransitionTable::from_entries(m, entries, 1e-9).unwrap();
    let initial = InitialDistribution::uniform(m, contexts.iter().map(|c| syms(c))).unwrap();
    CamModel::new(spec, table, initial).unwrap()
}

pub fn symbol_values(v: &[Symbol]) -> Vec<u32> {
    v.iter().map(|s| s.get()).collect()
}
