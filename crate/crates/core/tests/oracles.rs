//! Frozen reference values from independent computations (40-digit mpmath
//! for phase matching, adaptive quadrature for the temporal mode, a
//! semi-analytic rate model for the presets) checked through the public API.

use biphoton_core::mode::{hom_coincidence_probability, mode_overlap};
use biphoton_core::phasematch::{
    delta_k_exact, delta_k_small_angle, evaluate, optimal_signal_angle, scan_phase_matching,
    small_angle_optimum,
};
use biphoton_core::sim::{simulate_pairs, Preset, SourceConfig};
use biphoton_core::{g2_cross, g2_peak, heralding_efficiency, HeraldWindow, HistogramParams, OpticalGeometry, TemporalMode};

const NS: f64 = 1e-9;

fn close(x: f64, reference: f64, rel: f64) -> bool {
    (x - reference).abs() <= rel * reference.abs()
}

#[test]
fn phase_mismatch_reference_values() {
    let g = OpticalGeometry::default().with_angle_deg(1.4);
    let cases = [
        (-1.1, -33.778_479_931_515_42, -33.776_648_718_384_02),
        (1.0, 54.247_010_990_455_22, f64::NAN),
    ];
    for (d, exact, small) in cases {
        let g = g.with_detuning_ghz(d);
        assert!(close(delta_k_exact(&g), exact, 1e-12), "{d}");
        if small.is_finite() {
            assert!(close(delta_k_small_angle(&g), small, 1e-12));
        }
    }
    assert!(close(evaluate(&g.with_detuning_ghz(-1.1)).factor, 0.941_968_410_484_61, 1e-12));
    let r10 = evaluate(&g.with_detuning_ghz(-1.1)).factor / evaluate(&g.with_detuning_ghz(1.0)).factor;
    let r11 = evaluate(&g.with_detuning_ghz(-1.1)).factor / evaluate(&g.with_detuning_ghz(1.1)).factor;
    assert!(close(r10, 1.100_653_623_862_684_6, 1e-11));
    assert!(close(r11, 1.129_032_087_109_943, 1e-11));
}

#[test]
fn optimal_angles() {
    let g = OpticalGeometry::default().with_detuning_ghz(-1.1);
    let exact = optimal_signal_angle(&g).optimal_angle.unwrap();
    assert!(close(exact, 0.047_260_819_268_835_4, 1e-11));
    let approx = small_angle_optimum(&g).unwrap();
    assert!(close(approx.to_degrees(), 2.707_093_313_852_388, 1e-11));
}

#[test]
fn small_angle_error_is_sub_permille_at_three_degrees() {
    // Relative error of the geometric term alone, zero detuning.
    let g = OpticalGeometry::default().with_angle_deg(3.0);
    let rel = (delta_k_small_angle(&g) - delta_k_exact(&g)) / delta_k_exact(&g);
    assert!(close(rel.abs(), 6.8e-4, 0.02), "{rel}");
}

#[test]
fn scan_is_detuning_major() {
    let rows = scan_phase_matching(&[0.0, 1.4f64.to_radians()], &[-1.1, 1.0], &OpticalGeometry::default()).unwrap();
    let order: Vec<(f64, f64)> = rows.iter().map(|r| (r.detuning_ghz, r.theta.to_degrees())).collect();
    assert_eq!(order.len(), 4);
    assert_eq!(order[0].0, -1.1);
    assert_eq!(order[1].0, -1.1);
    assert!(close(rows[1].factor, 0.941_968_410_484_61, 1e-12));
}

#[test]
fn temporal_mode_reference_values() {
    let m = TemporalMode::default();
    assert!(close(m.energy_fraction(3.5 * NS), 0.998_548_561_579_162_2, 1e-12));
    assert!(close(m.mean_delay(), 0.705_434_782_608_695_7 * NS, 1e-12));
    for (dt, ovl) in [(1.0, 0.432_574_760_119_107_45), (0.1, 0.973_911_588_448_318_5), (0.05, 0.992_646_738_72)] {
        assert!(close(mode_overlap(&m, &m, dt * NS), ovl, 1e-10), "{dt}");
    }
    let other = TemporalMode::new(0.2 * NS, 1.5 * NS).unwrap();
    for (dt, ovl) in [(0.0, 0.968_459_321_496_766_1), (0.7, 0.543_368_861_773_643_6), (-0.7, 0.729_593_321_164_563_4)] {
        assert!(close(mode_overlap(&m, &other, dt * NS), ovl, 1e-10), "{dt}");
    }
    let p = hom_coincidence_probability(&m, &m, 1.0 * NS);
    assert!(close(p, 0.5 * (1.0 - 0.432_574_760_119_107_45f64.powi(2)), 1e-10));
}

/// Fraction of pairs landing in the fullest 100 ps bin (bins aligned at -5 ns).
fn peak_bin_fraction(jitter: f64) -> f64 {
    let mut cfg = SourceConfig::ideal(2e5, 2.0, 61);
    cfg.jitter_fwhm = jitter;
    let s = simulate_pairs(&cfg).unwrap();
    let h = g2_cross(&s, 0, 1, &HistogramParams::default()).unwrap();
    *h.counts.iter().max().unwrap() as f64 / s.count(0) as f64
}

#[test]
fn peak_bin_fraction_matches_rate_model() {
    // 4e5 pairs: the binomial error on ~0.1 is about 5e-4.
    assert!((peak_bin_fraction(55e-12) - 0.1162).abs() < 0.003);
    assert!((peak_bin_fraction(350e-12) - 0.0933).abs() < 0.003);
}

#[test]
fn earlier_setup_preset() {
    let s = simulate_pairs(&Preset::Paper2021.source(200e3, 2.0, 62)).unwrap();
    let d = Some(2_000_000_000_000);
    let (_, g2max) = g2_peak(&g2_cross(&s, 0, 1, &HistogramParams { duration_ps: d, ..Default::default() }).unwrap()).unwrap();
    let eta = heralding_efficiency(&s, 0, 1, &HeraldWindow::default(), d).unwrap().efficiency;
    assert!(close(g2max, 69.0, 0.05), "{g2max}");
    assert!(close(eta, 0.105, 0.05), "{eta}");
}
