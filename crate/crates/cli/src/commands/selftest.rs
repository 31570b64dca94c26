//! Quick end-to-end sanity checks of an installed binary.

use biphoton_core::phasematch::{evaluate, idler_angle, optimal_signal_angle};
use biphoton_core::sim::simulate_pairs;
use biphoton_core::tagstream::{decode, write_stream};
use biphoton_core::{
    g2_cross, g2_peak, heralding_efficiency, HeraldWindow, HistogramParams, OpticalGeometry, SourceConfig,
    TemporalMode,
};
use serde::Serialize;
use serde_json::json;

use super::emit;
use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn factor(deg: f64, ghz: f64) -> f64 {
    evaluate(&OpticalGeometry::default().with_angle_deg(deg).with_detuning_ghz(ghz)).factor
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool").install(f)
}

fn checks() -> Vec<Check> {
    let mut out = Vec::new();

    let r1 = factor(1.4, -1.1) / factor(1.4, 1.0);
    let r2 = factor(1.4, -1.1) / factor(1.4, 1.1);
    out.push(Check {
        name: "phase-matching ratios",
        pass: (r1 - 1.11).abs() <= 0.02 && (r2 - 1.14).abs() <= 0.02,
        detail: format!("{r1:.4}, {r2:.4}"),
    });

    let g = OpticalGeometry::default().with_detuning_ghz(-1.1);
    let theta = optimal_signal_angle(&g).optimal_angle.unwrap_or(0.0);
    let dev = (1.0 - idler_angle(theta, &g) / theta) * 100.0;
    out.push(Check {
        name: "idler angle ratio",
        pass: (dev - 0.5).abs() <= 0.05,
        detail: format!("optimum {:.4} deg, idler deviation {dev:.4}%", theta.to_degrees()),
    });

    let e = TemporalMode::default().energy_fraction(3.5e-9);
    out.push(Check { name: "herald window energy", pass: e >= 0.95, detail: format!("{e:.6}") });

    let cfg = SourceConfig::ideal(1e5, 0.2, 1);
    let run = || -> biphoton_core::Result<_> {
        let s = simulate_pairs(&cfg)?;
        let h = g2_cross(&s, 0, 1, &HistogramParams::default())?;
        Ok((s, h))
    };
    match (in_pool(1, run), in_pool(2, run)) {
        (Ok((s1, h1)), Ok((s2, h2))) => {
            out.push(Check {
                name: "worker-count independence",
                pass: s1 == s2 && h1 == h2,
                detail: format!("{} tags", s1.len()),
            });
            let mut bytes = Vec::new();
            let round_trip = write_stream(&s1, &mut bytes).is_ok() && decode(&bytes).is_ok_and(|d| d == s1);
            out.push(Check { name: "binary round trip", pass: round_trip, detail: format!("{} bytes", bytes.len()) });
            let peak = g2_peak(&h1).map(|p| p.1).unwrap_or(0.0);
            let eta = heralding_efficiency(&s1, 0, 1, &HeraldWindow::default(), None)
                .map(|r| r.efficiency)
                .unwrap_or(0.0);
            out.push(Check {
                name: "lossless source analysis",
                pass: peak > 100.0 && eta > 0.99,
                detail: format!("g2max {peak:.0}, eta_h {eta:.4}"),
            });
        }
        (Err(e), _) | (_, Err(e)) => out.push(Check { name: "simulation", pass: false, detail: e.to_string() }),
    }
    out
}

pub fn run() -> CliResult<()> {
    let checks = checks();
    let passed = checks.iter().all(|c| c.pass);
    emit(&json!({ "command": "selftest", "checks": checks, "passed": passed }))?;
    if passed {
        Ok(())
    } else {
        let failed: Vec<_> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
        Err(CliError::Failed(format!("self-test failed: {}", failed.join(", "))))
    }
}
