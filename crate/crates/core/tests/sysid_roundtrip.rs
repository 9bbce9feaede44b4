use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skatesim::{
    identify, identify_from_peaks, identify_multi_peak, simulate_free_decay, FreeDecayTrace,
    PeakDetection, TiltModel,
};

fn bench() -> PeakDetection<f64> {
    PeakDetection {
        noise_floor: 1e-12,
        ..PeakDetection::default()
    }
}

fn random_model(rng: &mut ChaCha8Rng) -> TiltModel<f64> {
    let zeta = rng.gen_range(0.05..0.9);
    let wn = rng.gen_range(20.0..=100.0);
    let inertia = rng.gen_range(5e-3..=1.5e-2);
    TiltModel::from_modal(inertia, wn, zeta).unwrap()
}

fn round_trip(m: &TiltModel<f64>) -> (f64, f64) {
    let period = m.damped_period().unwrap();
    let trace = simulate_free_decay(m, 0.15, 2.5 * period, 0.002).unwrap();
    let id = identify(&trace, m.inertia, &bench()).unwrap();
    (
        (id.stiffness - m.stiffness).abs() / m.stiffness,
        (id.damping - m.damping).abs() / m.damping,
    )
}

#[test]
fn fifty_random_models_recovered_within_two_percent() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..50 {
        let m = random_model(&mut rng);
        let (ek, ed) = round_trip(&m);
        assert!(ek < 0.02 && ed < 0.02, "{m:?}: k err {ek}, d err {ed}");
    }
}

#[test]
fn published_boards() {
    let r = identify_from_peaks::<f64>(0.614, 0.0108, 0.107, 7.15e-3).unwrap();
    assert!((r.stiffness - 34.835).abs() / 34.835 < 0.01);
    assert!((r.damping - 0.540).abs() / 0.540 < 0.01);
    let r = identify_from_peaks::<f64>(0.583, 0.0081, 0.185, 8.70e-3).unwrap();
    assert!((r.stiffness - 14.677).abs() / 14.677 < 0.01);
    assert!((r.damping - 0.402).abs() / 0.402 < 0.01);
}

#[test]
fn multi_peak_fit_agrees_on_clean_trace() {
    let m = TiltModel::from_modal(1e-2, 40.0, 0.08).unwrap();
    let trace = simulate_free_decay(&m, 0.15, 1.0, 0.001).unwrap();
    let id = identify_multi_peak(&trace, m.inertia, &bench()).unwrap();
    assert!((id.stiffness - m.stiffness).abs() / m.stiffness < 0.01);
    assert!((id.damping - m.damping).abs() / m.damping < 0.02);
}

#[test]
fn csv_round_trip_preserves_identification() {
    let m = TiltModel::standard_board();
    let trace = simulate_free_decay(&m, 0.614, 0.4, 0.002).unwrap();
    let mut buf = Vec::new();
    trace.write_csv(&mut buf).unwrap();
    let back = FreeDecayTrace::read_csv(buf.as_slice(), "mem").unwrap();
    assert_eq!(back, trace);
}

#[test]
fn flat_trace_has_no_oscillation() {
    let trace = FreeDecayTrace::new((0..50).map(|i| (i as f64 * 0.01, 0.0)).collect()).unwrap();
    assert!(identify(&trace, 1e-2, &PeakDetection::default()).is_err());
}

#[test]
fn malformed_csv_reports_line() {
    let err = FreeDecayTrace::<f64>::read_csv("t,roll\n0,0.1\n0.01,abc\n".as_bytes(), "x.csv")
        .unwrap_err();
    assert!(err.to_string().starts_with("x.csv:3:"), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn identified_model_is_physical(phi1 in 0.01f64..1.0, ratio in 1.01f64..1e4, period in 0.01f64..2.0, inertia in 1e-3f64..1.0) {
        let r = identify_from_peaks(phi1, phi1 / ratio, period, inertia).unwrap();
        prop_assert!(r.damping_ratio > 0.0 && r.damping_ratio < 1.0);
        prop_assert!(r.stiffness > 0.0 && r.damping > 0.0);
        prop_assert!(r.natural_frequency >= r.damped_frequency);
    }

    #[test]
    fn round_trip_random(seed in 0u64..1000) {
        let m = random_model(&mut ChaCha8Rng::seed_from_u64(seed));
        let (ek, ed) = round_trip(&m);
        prop_assert!(ek < 0.02 && ed < 0.02);
    }
}
