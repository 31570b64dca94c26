use std::path::PathBuf;

use biphoton_core::phasematch::{
    delta_k_small_angle, evaluate, idler_angle, optimal_signal_angle, phase_match_factor,
    scan_phase_matching, small_angle_optimum, write_scan_csv,
};
use clap::Args;
use serde_json::json;

use super::{emit, write_file};
use crate::config::{overlay, parse_grid, FileConfig, GeometrySpec, PhasematchSpec};
use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct PhasematchArgs {
    #[command(flatten)]
    pub geometry: GeometrySpec,
    #[command(flatten)]
    pub scan: PhasematchSpec,
    /// Locate the best signal angle for every detuning.
    #[arg(long)]
    pub find_optimum: bool,
    /// Scan table as CSV (`theta_deg,detuning_ghz,factor`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &PhasematchArgs, file: &FileConfig) -> CliResult<()> {
    let geometry = overlay(&file.geometry, &args.geometry).filled();
    let scan = overlay(&file.phasematch, &args.scan).filled();
    let geom = geometry.build()?;
    let thetas_deg = parse_grid(scan.theta_grid_deg.as_deref().unwrap())?;
    if thetas_deg.iter().any(|t| !(0.0..90.0).contains(t)) {
        return Err(CliError::usage("signal angles must lie in [0, 90) deg"));
    }
    let detunings = scan.detunings_ghz.clone().unwrap();
    if detunings.is_empty() || detunings.iter().any(|d| !d.is_finite()) {
        return Err(CliError::usage("detunings must be a non-empty list of finite values"));
    }
    let thetas: Vec<f64> = thetas_deg.iter().map(|t| t.to_radians()).collect();
    let rows = scan_phase_matching(&thetas, &detunings, &geom)?;
    let csv = args.out.as_ref().map(|p| file.output_path(p));
    if let Some(path) = &csv {
        write_file(path, |w| write_scan_csv(&rows, w))?;
    }

    let angle = scan.ratio_angle_deg.unwrap();
    let at = |ghz: f64| geom.with_angle_deg(angle).with_detuning_ghz(ghz);
    let exact = |ghz: f64| evaluate(&at(ghz)).factor;
    let small = |ghz: f64| phase_match_factor(delta_k_small_angle(&at(ghz)), geom.cell_length);
    let ratios: Vec<_> = [(-1.1, 1.0), (-1.1, 1.1)]
        .into_iter()
        .map(|(n, d)| {
            json!({
                "numerator_ghz": n,
                "denominator_ghz": d,
                "exact": exact(n) / exact(d),
                "small_angle": small(n) / small(d),
            })
        })
        .collect();
    let factors: Vec<_> = detunings
        .iter()
        .map(|&d| json!({ "detuning_ghz": d, "exact": exact(d), "small_angle": small(d) }))
        .collect();
    let optimum: Option<Vec<_>> = args.find_optimum.then(|| {
        detunings
            .iter()
            .map(|&d| {
                let g = geom.with_detuning_ghz(d);
                let best = optimal_signal_angle(&g);
                let theta = best.optimal_angle.unwrap_or(0.0);
                let idler = idler_angle(theta, &g);
                json!({
                    "detuning_ghz": d,
                    "theta_deg": theta.to_degrees(),
                    "theta_small_angle_deg": small_angle_optimum(&g).map(f64::to_degrees),
                    "delta_k_per_m": best.delta_k,
                    "factor": best.factor,
                    "idler_angle_deg": idler.to_degrees(),
                    "idler_ratio_deviation_percent": if theta > 0.0 { (1.0 - idler / theta) * 100.0 } else { f64::NAN },
                })
            })
            .collect()
    });

    emit(&json!({
        "command": "phasematch",
        "config": { "geometry": geometry, "phasematch": scan },
        "rows": rows.len(),
        "csv": csv,
        "ratio_angle_deg": angle,
        "ratios": ratios,
        "factors_at_ratio_angle": factors,
        "optimum": optimum,
    }))
}
