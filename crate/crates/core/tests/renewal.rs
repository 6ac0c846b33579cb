use proptest::prelude::*;
use vage::distributions::DistributionSpec;
use vage::renewal::*;
use vage::rng::RngStream;

const U02: DistributionSpec = DistributionSpec::Uniform { lo: 0.0, hi: 2.0 };

fn record(spec: DistributionSpec, seed: u64, until: f64) -> (RenewalStream, Vec<f64>) {
    let mut s = RenewalStream::seeded(spec, seed, 0, 0).unwrap();
    let ev: Vec<f64> = s.advance(until).collect();
    (s, ev)
}

#[test]
fn recurrence_times_straddle_the_gap() {
    let mut pick = RngStream::new(1, 0, 99);
    for spec in [U02, DistributionSpec::Exponential { rate: 3.0 }, DistributionSpec::ChiSquare { k: 1 }] {
        let (stream, mut events) = record(spec, 4, 100.0);
        events.push(stream.next_event());
        for _ in 0..1000 {
            let t = 100.0 * pick.open01();
            let v = recurrence_at(&events, t).unwrap();
            let n = v.count as usize;
            let prev = if n == 0 { 0.0 } else { events[n - 1] };
            let gap = events[n] - prev;
            assert!((v.backward + v.forward - gap).abs() <= 4.0 * f64::EPSILON * events[n]);
            assert!(v.backward >= 0.0 && v.backward <= t && v.forward > 0.0);
            // count consistency
            assert_eq!(v.count as usize, events.iter().filter(|&&e| e <= t).count());
        }
    }
}

#[test]
fn stream_view_agrees_with_recorded_events() {
    let (tail, mut events) = record(U02, 8, 60.0);
    events.push(tail.next_event());
    let mut s = RenewalStream::seeded(U02, 8, 0, 0).unwrap();
    for t in [0.1, 3.0, 17.5, 40.0, 59.9] {
        let live = s.recurrence(t);
        let recorded = recurrence_at(&events, t).unwrap();
        assert_eq!(live, recorded);
    }
}

#[test]
fn poisson_counts() {
    let rate = 2.0;
    let horizon = 5.0;
    let streams = 4000;
    let total: usize = (0..streams)
        .map(|k| {
            RenewalStream::seeded(DistributionSpec::Exponential { rate }, 3, k, 0).unwrap().advance(horizon).count()
        })
        .sum();
    let mean = total as f64 / streams as f64;
    let expected = rate * horizon;
    assert!((mean - expected).abs() < 4.0 * (expected / streams as f64).sqrt(), "{mean}");
}

#[test]
fn elementary_renewal_rate() {
    for spec in [U02, DistributionSpec::Rayleigh { sigma: 1.0 }, DistributionSpec::ParetoI { a: 3.0, m: 1.0 / 3.0 }] {
        let m = spec.moments().unwrap();
        let horizon = 1e3 * m.mean;
        let rates: Vec<f64> = (0..200)
            .map(|k| RenewalStream::seeded(spec, 21, k, 0).unwrap().recurrence(horizon).count as f64 / horizon)
            .collect();
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (rates.len() - 1) as f64;
        let z = (mean - 1.0 / m.mean) / (var / rates.len() as f64).sqrt();
        assert!(z.abs() < 4.0, "{spec}: z = {z}");
    }
}

#[test]
fn martingale_examples() {
    let e = verify_martingale_zero_mean(&DistributionSpec::Exponential { rate: 1.0 }, &[10.0], 100_000, 1).unwrap();
    assert!(e[0].passes(4.0), "{:?}", e[0]);
    let u = verify_martingale_zero_mean(&U02, &[50.0, 1.0, 5.0], 100_000, 2).unwrap();
    assert_eq!(u.len(), 3);
    assert!(u[0].label.contains("t=50"));
    for c in &u {
        assert!(c.passes(4.0), "{c:?}");
        assert_eq!(c.target, 0.0);
    }
}

#[test]
fn backward_recurrence_examples() {
    let c = verify_backward_recurrence_limit(&U02, 100.0, 100_000, 3).unwrap();
    assert!((c.target - 2.0 / 3.0).abs() < 1e-15);
    assert!(c.passes(4.0), "{c:?}");
    let c = verify_backward_recurrence_limit(&DistributionSpec::Exponential { rate: 0.5 }, 200.0, 20_000, 3).unwrap();
    assert!((c.target - 2.0).abs() < 1e-15);
    assert!(c.passes(4.0), "{c:?}");
    let c = verify_backward_recurrence_limit(&DistributionSpec::Rayleigh { sigma: 1.0 }, 100.0, 50_000, 3).unwrap();
    assert!((c.target - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-15);
    assert!(c.passes(4.0), "{c:?}");
    let c = verify_backward_recurrence_limit(&DistributionSpec::Deterministic { c: 2.0 }, 100.0, 20_000, 3).unwrap();
    assert_eq!(c.target, 1.0);
    assert!(c.passes(4.0), "{c:?}");
}

#[test]
fn lemma2_examples() {
    let exp = |rate| DistributionSpec::Exponential { rate };
    let c = verify_lemma2(&exp(3.0), &exp(1.5), 100.0, 50_000, 4).unwrap();
    assert!((c.target - 2.0).abs() < 1e-14);
    assert!(c.passes(4.0), "{c:?}");

    let src = DistributionSpec::Beta { alpha: 2.0, beta: 3.0 };
    let c = verify_lemma2(&src, &U02, 100.0, 50_000, 4).unwrap();
    assert!((c.target - (2.0 / 3.0) / 0.4).abs() < 1e-14);
    assert!(c.passes(4.0), "{c:?}");

    let c = verify_lemma2(&exp(1.0), &DistributionSpec::Deterministic { c: 1.5 }, 100.0, 50_000, 4).unwrap();
    assert!((c.target - 0.75).abs() < 1e-15);
    assert!(c.passes(4.0), "{c:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chunking_does_not_change_the_sequence(seed in any::<u64>(), cuts in proptest::collection::vec(0.0f64..50.0, 0..12)) {
        let spec = DistributionSpec::Beta { alpha: 0.7, beta: 2.0 };
        let mut whole = RenewalStream::seeded(spec, seed, 0, 0).unwrap();
        let expected: Vec<u64> = whole.advance(50.0).map(f64::to_bits).collect();

        let mut cuts = cuts;
        cuts.sort_by(f64::total_cmp);
        cuts.push(50.0);
        let mut chunked = RenewalStream::seeded(spec, seed, 0, 0).unwrap();
        let mut got = Vec::new();
        for c in cuts {
            got.extend(chunked.advance(c).map(f64::to_bits));
        }
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn events_strictly_increase(seed in any::<u64>()) {
        let (_, ev) = record(DistributionSpec::ChiSquare { k: 1 }, seed, 30.0);
        prop_assert!(ev.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(ev.first().is_none_or(|&e| e > 0.0));
    }
}
