mod common;

use cam_model::fit::FitError;
use cam_model::{detect_size_bins, fit, quantize, CamEvent, ModelMode, ModelSpec, Preset, QuantizeOptions};
use common::*;
use rand::Rng;

#[test]
fn size_bins_from_mixture() {
    let mut r = rng(1);
    let mix = [(200u32, 0.4), (300, 0.3), (360, 0.2), (455, 0.1)];
    let events: Vec<CamEvent> = (0..100_000)
        .map(|k| {
            let centre = draw(&mix, &mut r);
            let size = centre - 3 + r.random_range(0..=6);
            CamEvent::new(k as f64 * 100.0, size)
        })
        .collect();
    let s = detect_size_bins(&events, 10, 0.05).unwrap();
    assert_eq!(s.as_slice(), &[200, 300, 360, 455]);
}

#[test]
fn size_bins_reject_uniform_sizes() {
    let mut r = rng(2);
    let events: Vec<CamEvent> = (0..100_000)
        .map(|k| CamEvent::new(k as f64 * 100.0, r.random_range(200..=800)))
        .collect();
    assert!(matches!(
        detect_size_bins(&events, 10, 0.05),
        Err(FitError::NoSizePeaks { .. })
    ));
}

#[test]
fn fit_matches_independent_counts() {
    // A trace with the full VW alphabet in play, quantized and fitted at m=2,
    // against counts taken straight from the symbol sequence.
    let mut r = rng(3);
    let truth: Vec<Vec<f64>> = (0..40)
        .map(|a| {
            let mut w = vec![0.0; 40];
            w[(a * 3 + 1) % 40] = 0.6;
            w[(a * 11 + 7) % 40] += 0.4;
            w
        })
        .collect();
    let seq = sample_order1(&truth, 1, 50_000, &mut r);
    let g: Vec<u32> = (1..=10).map(|k| k * 100).collect();
    let events = events_for(&seq, &[200, 300, 360, 455], &g, 3.2, 20.0, &mut r);

    let spec = Preset::by_name("vw-urban").unwrap().spec(ModelMode::Complete, 2).unwrap();
    let q = quantize(&events, &spec, QuantizeOptions::default()).unwrap();
    assert_eq!(symbol_values(&q.symbols().collect::<Vec<_>>()), seq);
    let fitted = fit(&q, &spec).unwrap();
    let model = &fitted.model;

    let counts = count_windows(&seq, 2);
    let totals = context_totals(&counts);
    assert_eq!(model.table().entry_count(), counts.len());
    for ((ctx, next), c) in &counts {
        let expect = *c as f64 / totals[ctx] as f64;
        let got = model.table().probability(&syms(ctx), syms(&[*next])[0]);
        assert!((got - expect).abs() < 1e-12, "{ctx:?} -> {next}");
    }
    let sigma = fitted.jitter_std_ms.unwrap();
    assert!((sigma - 3.2).abs() / 3.2 < 0.05, "sigma {sigma}");
}

#[test]
fn separate_fits_count_projected_axes() {
    let mut r = rng(4);
    let truth = vec![vec![0.2, 0.3, 0.5, 0.0], vec![0.0, 0.5, 0.5, 0.0], vec![0.4, 0.0, 0.1, 0.5], vec![1.0, 0.0, 0.0, 0.0]];
    let seq = sample_order1(&truth, 1, 20_000, &mut r);
    let events = events_for(&seq, &[200, 300], &[100, 200], 1.0, 20.0, &mut r);
    let spec = ModelSpec::complete(
        1,
        cam_model::SizeSet::new(vec![200, 300]).unwrap(),
        cam_model::IntervalSet::new(vec![100, 200], 100).unwrap(),
        0.0,
    )
    .unwrap();
    let q = quantize(&events, &spec, QuantizeOptions::default()).unwrap();

    let sizes: Vec<u32> = seq.iter().map(|n| (n - 1) % 2 + 1).collect();
    let size_model = fit(&q, &spec.project(ModelMode::SizeOnly).unwrap()).unwrap().model;
    let counts = count_windows(&sizes, 1);
    let totals = context_totals(&counts);
    for ((ctx, next), c) in &counts {
        let got = size_model.table().probability(&syms(ctx), syms(&[*next])[0]);
        assert!((got - *c as f64 / totals[ctx] as f64).abs() < 1e-12);
    }

    let intervals: Vec<u32> = seq.iter().map(|n| (n - 1) / 2 + 1).collect();
    let interval_spec = spec.project(ModelMode::IntervalOnly).unwrap();
    let fitted = cam_model::fit_separate(&q, &interval_spec, 2).unwrap();
    let counts = count_windows(&intervals, 1);
    let totals = context_totals(&counts);
    for ((ctx, next), c) in &counts {
        let got = fitted.model.table().probability(&syms(ctx), syms(&[*next])[0]);
        assert!((got - *c as f64 / totals[ctx] as f64).abs() < 1e-12);
    }
    assert!(fitted.jitter_std_ms.is_some());
}

#[test]
fn order_longer_than_trace_is_insufficient() {
    let spec = Preset::by_name("vw").unwrap().spec(ModelMode::Complete, 5).unwrap();
    let events: Vec<CamEvent> = (0..4).map(|k| CamEvent::new(k as f64 * 100.0, 200)).collect();
    let q = quantize(&events, &spec, QuantizeOptions::default()).unwrap();
    assert!(matches!(fit(&q, &spec), Err(FitError::InsufficientData { .. })));
}
