//! Longitudinal phase matching of the ladder-scheme four-wave-mixing process.
//!
//! Pump (780 nm leg) and control (776 nm leg) counter-propagate along the
//! optical axis. Signal and idler are emitted at small angles on opposite
//! sides of the axis; transverse momentum conservation fixes the idler angle
//! at `theta_s * k_s / k_i`. The pair rate and heralding efficiency scale with
//! `sinc^2(delta_k * L / 2)` where `delta_k` is the mismatch of the axial
//! projections `(k_p - k_c) - (k_s - k_i)`.
//!
//! Signal and idler are taken to be emitted on their atomic resonances, so
//! the pump detuning enters only the pump and control wavevectors.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt::sig;

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Upper end of the optimal-angle search interval [rad].
pub const MAX_SEARCH_ANGLE: f64 = 0.2;

/// Absolute tolerance of the optimal-angle bisection [rad].
pub const ANGLE_TOLERANCE: f64 = 1e-12;

/// Below this |x| the sinc is evaluated from its Taylor series.
const SINC_SERIES_CUTOFF: f64 = 1e-4;

/// Converts an ordinary frequency in GHz to an angular frequency in rad/s.
pub fn ghz_to_angular(ghz: f64) -> f64 {
    2.0 * PI * ghz * 1e9
}

/// Converts an angular frequency in rad/s to an ordinary frequency in GHz.
pub fn angular_to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e9)
}

/// Beam geometry and laser tuning of the vapor cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OpticalGeometry {
    /// Wavelength of the lower (5S-5P) transition [m].
    pub lambda_sp: f64,
    /// Wavelength of the upper (5P-5D) transition [m].
    pub lambda_pd: f64,
    /// Cell length [m].
    pub cell_length: f64,
    /// Pump detuning from the lower resonance [rad/s], sign-carrying.
    pub pump_detuning: f64,
    /// Signal angle from the optical axis [rad].
    pub signal_angle: f64,
}

impl Default for OpticalGeometry {
    fn default() -> Self {
        OpticalGeometry {
            lambda_sp: 780e-9,
            lambda_pd: 776e-9,
            cell_length: 25e-3,
            pump_detuning: 0.0,
            signal_angle: 0.0,
        }
    }
}

impl OpticalGeometry {
    /// Builds a validated geometry.
    pub fn new(
        lambda_sp: f64,
        lambda_pd: f64,
        cell_length: f64,
        pump_detuning: f64,
        signal_angle: f64,
    ) -> Result<Self> {
        let geom = OpticalGeometry {
            lambda_sp,
            lambda_pd,
            cell_length,
            pump_detuning,
            signal_angle,
        };
        geom.validate()?;
        Ok(geom)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_pd > 0.0 && self.lambda_sp > self.lambda_pd) {
            return Err(Error::invalid(format!(
                "wavelengths must satisfy lambda_sp > lambda_pd > 0 (got {} m, {} m)",
                self.lambda_sp, self.lambda_pd
            )));
        }
        if !(self.cell_length > 0.0 && self.cell_length.is_finite()) {
            return Err(Error::invalid(format!(
                "cell length must be positive (got {} m)",
                self.cell_length
            )));
        }
        if !(0.0..PI / 2.0).contains(&self.signal_angle) {
            return Err(Error::invalid(format!(
                "signal angle must lie in [0, pi/2) (got {} rad)",
                self.signal_angle
            )));
        }
        if !self.pump_detuning.is_finite() {
            return Err(Error::invalid("pump detuning must be finite"));
        }
        Ok(())
    }

    pub fn with_detuning_ghz(mut self, ghz: f64) -> Self {
        self.pump_detuning = ghz_to_angular(ghz);
        self
    }

    pub fn with_angle_deg(mut self, deg: f64) -> Self {
        self.signal_angle = deg.to_radians();
        self
    }

    pub fn with_angle(mut self, rad: f64) -> Self {
        self.signal_angle = rad;
        self
    }

    pub fn detuning_ghz(&self) -> f64 {
        angular_to_ghz(self.pump_detuning)
    }

    /// Angular frequency of the lower transition.
    pub fn omega_sp(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.lambda_sp
    }

    /// Angular frequency of the upper transition.
    pub fn omega_pd(&self) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / self.lambda_pd
    }

    /// `omega_sp / omega_pd`, i.e. `k_s / k_i` for resonant emission.
    pub fn frequency_ratio(&self) -> f64 {
        self.lambda_pd / self.lambda_sp
    }
}

/// Phase-matching figures for one geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseMatchResult {
    /// Wavevector mismatch [rad/m].
    pub delta_k: f64,
    /// `sinc^2(delta_k * L / 2)`.
    pub factor: f64,
    /// Signal angle that produced the result, set by [`optimal_signal_angle`].
    pub optimal_angle: Option<f64>,
}

/// Exact axial wavevector mismatch including the cosine projections.
pub fn delta_k_exact(geom: &OpticalGeometry) -> f64 {
    let w_sp = geom.omega_sp();
    let w_pd = geom.omega_pd();
    let dp = geom.pump_detuning;
    let theta = geom.signal_angle;
    let theta_i = theta * geom.frequency_ratio();
    // (w_sp + dp) - (w_pd - dp) - w_sp cos(theta) + w_pd cos(theta_i), grouped
    // so the resonant terms cancel exactly; 1 - cos(x) = 2 sin^2(x/2).
    let geometric =
        2.0 * w_sp * (theta / 2.0).sin().powi(2) - 2.0 * w_pd * (theta_i / 2.0).sin().powi(2);
    (2.0 * dp + geometric) / SPEED_OF_LIGHT
}

/// Quadratic small-angle approximation of [`delta_k_exact`].
pub fn delta_k_small_angle(geom: &OpticalGeometry) -> f64 {
    let w_sp = geom.omega_sp();
    let ratio = geom.frequency_ratio();
    let theta = geom.signal_angle;
    (2.0 * geom.pump_detuning + 0.5 * theta * theta * w_sp * (1.0 - ratio)) / SPEED_OF_LIGHT
}

/// `sin(x) / x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < SINC_SERIES_CUTOFF {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Phase-matching function `sinc^2(delta_k * L / 2)`.
pub fn phase_match_factor(delta_k: f64, cell_length: f64) -> f64 {
    let s = sinc(0.5 * delta_k * cell_length);
    (s * s).min(1.0)
}

/// Evaluates the exact mismatch and factor for `geom`.
pub fn evaluate(geom: &OpticalGeometry) -> PhaseMatchResult {
    let delta_k = delta_k_exact(geom);
    PhaseMatchResult {
        delta_k,
        factor: phase_match_factor(delta_k, geom.cell_length),
        optimal_angle: None,
    }
}

/// Idler angle implied by transverse momentum conservation, `theta_s * k_s / k_i`.
pub fn idler_angle(signal_angle: f64, geom: &OpticalGeometry) -> f64 {
    signal_angle * geom.frequency_ratio()
}

/// Small-angle estimate of the perfectly phase-matched signal angle, or
/// `None` when the pump detuning is non-negative.
pub fn small_angle_optimum(geom: &OpticalGeometry) -> Option<f64> {
    if geom.pump_detuning >= 0.0 {
        return None;
    }
    let curvature = geom.omega_sp() * (1.0 - geom.frequency_ratio());
    Some((-4.0 * geom.pump_detuning / curvature).sqrt())
}

/// Signal angle maximizing the phase-matching factor; the angle field of
/// `geom` is ignored.
///
/// `delta_k` grows monotonically with the angle on `[0, MAX_SEARCH_ANGLE]`, so
/// for a negative detuning the optimum is the bracketed root found by
/// bisection. For a non-negative detuning `delta_k(0) >= 0` is already the
/// smallest mismatch and the optimum is on axis. A detuning too negative to
/// be compensated inside the search interval yields the interval end.
pub fn optimal_signal_angle(geom: &OpticalGeometry) -> PhaseMatchResult {
    let at = |theta: f64| delta_k_exact(&geom.with_angle(theta));
    let done = |theta: f64| {
        let delta_k = at(theta);
        PhaseMatchResult {
            delta_k,
            factor: phase_match_factor(delta_k, geom.cell_length),
            optimal_angle: Some(theta),
        }
    };

    if geom.pump_detuning >= 0.0 {
        return done(0.0);
    }
    if at(MAX_SEARCH_ANGLE) < 0.0 {
        return done(MAX_SEARCH_ANGLE);
    }

    let (mut lo, mut hi) = (0.0, MAX_SEARCH_ANGLE);
    if let Some(guess) = small_angle_optimum(geom) {
        let (a, b) = (0.9 * guess, (1.1 * guess).min(MAX_SEARCH_ANGLE));
        if a < b && at(a) < 0.0 && at(b) >= 0.0 {
            lo = a;
            hi = b;
        }
    }
    while hi - lo > ANGLE_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if at(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Report whichever end is closer to the root.
    let theta = if at(lo).abs() <= at(hi).abs() { lo } else { hi };
    done(theta)
}

/// One grid point of a phase-matching scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub theta: f64,
    pub detuning_ghz: f64,
    pub factor: f64,
}

/// Evaluates the exact phase-matching factor on a detuning x angle grid.
///
/// Rows are ordered detuning-major, angle-minor. Each row depends only on its
/// own grid point.
pub fn scan_phase_matching(
    angles: &[f64],
    detunings_ghz: &[f64],
    geom: &OpticalGeometry,
) -> Result<Vec<ScanRow>> {
    if angles.is_empty() || detunings_ghz.is_empty() {
        return Err(Error::invalid("phase-matching scan needs a non-empty angle and detuning grid"));
    }
    let mut rows = Vec::with_capacity(angles.len() * detunings_ghz.len());
    for &ghz in detunings_ghz {
        for &theta in angles {
            let g = geom.with_detuning_ghz(ghz).with_angle(theta);
            g.validate()?;
            rows.push(ScanRow {
                theta,
                detuning_ghz: ghz,
                factor: evaluate(&g).factor,
            });
        }
    }
    Ok(rows)
}

/// Writes scan rows as `theta_deg,detuning_ghz,factor` with 9 significant digits.
pub fn write_scan_csv<W: Write>(rows: &[ScanRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "theta_deg,detuning_ghz,factor")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{}",
            sig(row.theta.to_degrees(), 9),
            sig(row.detuning_ghz, 9),
            sig(row.factor, 9)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(ghz: f64, deg: f64) -> OpticalGeometry {
        OpticalGeometry::default().with_detuning_ghz(ghz).with_angle_deg(deg)
    }

    #[test]
    fn collinear_resonant_case_is_matched() {
        assert_eq!(delta_k_exact(&geom(0.0, 0.0)), 0.0);
        assert_eq!(phase_match_factor(0.0, 0.025), 1.0);
    }

    // Frozen from an mpmath evaluation at 40 digits.
    #[test]
    fn mismatch_at_collection_angle() {
        let neg = delta_k_exact(&geom(-1.1, 1.4));
        let pos = delta_k_exact(&geom(1.0, 1.4));
        assert!((neg - (-33.778_479_931_515_42)).abs() < 1e-9, "{neg}");
        assert!((pos - 54.247_010_990_455_22).abs() < 1e-9, "{pos}");
    }

    #[test]
    fn small_angle_expansion() {
        let g0 = geom(-1.1, 0.0);
        assert!((delta_k_small_angle(&g0) - 2.0 * g0.pump_detuning / SPEED_OF_LIGHT).abs() < 1e-12);
        assert!(delta_k_small_angle(&geom(0.0, 0.7)) > 0.0);

        let g = geom(-1.1, 1.4);
        let (exact, approx) = (delta_k_exact(&g), delta_k_small_angle(&g));
        assert!(((approx - exact) / exact).abs() < 0.01);
        assert!((approx - (-33.776_648_718_384_02)).abs() < 1e-9);
    }

    #[test]
    fn sinc_zero_and_series_branch() {
        assert_eq!(sinc(0.0), 1.0);
        let l = 0.025;
        let first_zero = 2.0 * PI / l;
        assert!(phase_match_factor(first_zero, l) < 1e-30);
        for &x in &[0.5e-4, 0.99e-4, 1.01e-4, 2e-4] {
            assert!((sinc(x) - x.sin() / x).abs() < 1e-15);
        }
    }

    #[test]
    fn detuning_ratios() {
        let f = |ghz| evaluate(&geom(ghz, 1.4)).factor;
        let r11 = f(-1.1) / f(1.0);
        let r14 = f(-1.1) / f(1.1);
        assert!((r11 - 1.100_653_623_862_684_6).abs() < 1e-9, "{r11}");
        assert!((r14 - 1.129_032_087_109_943).abs() < 1e-9, "{r14}");
    }

    #[test]
    fn optimum_for_negative_detuning() {
        let res = optimal_signal_angle(&geom(-1.1, 0.0));
        let theta = res.optimal_angle.unwrap();
        assert!((theta - 0.047_260_819_268_835_4).abs() < 1e-11, "{theta}");
        assert!(res.factor > 1.0 - 1e-12);
        let guess = small_angle_optimum(&geom(-1.1, 0.0)).unwrap();
        assert!((guess.to_degrees() - 2.707_093_313_852_388).abs() < 1e-9);
    }

    #[test]
    fn optimum_for_non_negative_detuning_is_on_axis() {
        assert_eq!(optimal_signal_angle(&geom(0.0, 1.0)).optimal_angle, Some(0.0));
        let res = optimal_signal_angle(&geom(1.0, 0.0));
        assert_eq!(res.optimal_angle, Some(0.0));
        assert!(res.factor < 1.0);
    }

    #[test]
    fn idler_angle_ratio() {
        let g = OpticalGeometry::default();
        assert_eq!(idler_angle(0.0, &g), 0.0);
        let th = 1.4_f64.to_radians();
        let ratio = idler_angle(th, &g) / th;
        assert!((ratio - 776.0 / 780.0).abs() < 1e-15);
        assert!((idler_angle(2.0 * th, &g) - 2.0 * idler_angle(th, &g)).abs() < 1e-18);
    }

    #[test]
    fn scan_rejects_empty_grids() {
        let g = OpticalGeometry::default();
        assert!(matches!(scan_phase_matching(&[], &[1.0], &g), Err(Error::InvalidInput(_))));
        assert!(matches!(scan_phase_matching(&[0.0], &[], &g), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn scan_single_point_matches_factor() {
        let g = OpticalGeometry::default();
        let th = 1.4_f64.to_radians();
        let rows = scan_phase_matching(&[th], &[-1.1], &g).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].factor, evaluate(&geom(-1.1, 1.4)).factor);
    }

    #[test]
    fn geometry_validation() {
        assert!(OpticalGeometry::new(776e-9, 780e-9, 0.025, 0.0, 0.0).is_err());
        assert!(OpticalGeometry::new(780e-9, 776e-9, 0.0, 0.0, 0.0).is_err());
        assert!(OpticalGeometry::new(780e-9, 776e-9, 0.025, 0.0, -0.1).is_err());
        assert!(OpticalGeometry::new(780e-9, 776e-9, 0.025, 0.0, PI / 2.0).is_err());
        assert!(OpticalGeometry::new(780e-9, 776e-9, 0.025, -1e9, 0.02).is_ok());
    }

    #[test]
    fn csv_layout() {
        let rows = [ScanRow { theta: 1.4_f64.to_radians(), detuning_ghz: -1.1, factor: 0.941_968_410_484_611 }];
        let mut buf = Vec::new();
        write_scan_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "theta_deg,detuning_ghz,factor\n1.4,-1.1,0.94196841\n");
    }
}
