//! Run configuration: TOML or JSON files overlaid by command-line flags.
//!
//! Every section is a struct of optional, unit-suffixed fields that doubles as
//! a clap argument group, so a key `jitter_ps` in `[source]` and the flag
//! `--jitter-ps` set the same value. Resolved sections are written back into
//! the JSON outputs with every field filled in, which makes them valid config
//! files themselves.

use std::path::{Path, PathBuf};

use biphoton_core::sim::{HomOptions, Preset, SourceConfig};
use biphoton_core::{
    ChannelMap, HeraldWindow, HistogramParams, HomParams, OpticalGeometry, TemporalMode,
};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// Base directory for relative output paths.
    pub output_dir: Option<PathBuf>,
    pub geometry: GeometrySpec,
    pub phasematch: PhasematchSpec,
    pub simulate: SimulateSpec,
    pub source: SourceSpec,
    pub source_b: SourceSpec,
    pub analysis: AnalysisSpec,
    pub channels: ChannelSpec,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
    }

    /// Places a relative output path under `output_dir`.
    pub fn output_path(&self, path: &Path) -> PathBuf {
        match &self.output_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        }
    }
}

/// Field-wise `top.or(base)` through the serialized form.
pub fn overlay<T: Serialize + DeserializeOwned>(base: &T, top: &T) -> T {
    let mut merged = serde_json::to_value(base).expect("config serializes");
    if let (Value::Object(dst), Value::Object(src)) = (&mut merged, serde_json::to_value(top).expect("config serializes")) {
        for (k, v) in src {
            if !v.is_null() {
                dst.insert(k, v);
            }
        }
    }
    serde_json::from_value(merged).expect("overlay keeps the schema")
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Usage(msg()))
    }
}

fn ns_to_ps(name: &str, ns: f64) -> CliResult<i64> {
    check(ns.is_finite() && ns.abs() < 1e9, || format!("{name} must be finite (got {ns})"))?;
    Ok((ns * 1e3).round() as i64)
}

fn positive_ps(name: &str, ps: f64) -> CliResult<u64> {
    check(ps.is_finite() && (0.5..1e15).contains(&ps), || format!("{name} must be positive (got {ps} ps)"))?;
    Ok(ps.round() as u64)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySpec {
    /// Signal wavelength [nm].
    #[arg(long)]
    pub lambda_sp_nm: Option<f64>,
    /// Idler wavelength [nm].
    #[arg(long)]
    pub lambda_pd_nm: Option<f64>,
    /// Vapor cell length [mm].
    #[arg(long)]
    pub cell_length_mm: Option<f64>,
}

impl GeometrySpec {
    pub fn filled(&self) -> Self {
        let d = GeometrySpec { lambda_sp_nm: Some(780.0), lambda_pd_nm: Some(776.0), cell_length_mm: Some(25.0) };
        overlay(&d, self)
    }

    pub fn build(&self) -> CliResult<OpticalGeometry> {
        let f = self.filled();
        let geom = OpticalGeometry::new(
            f.lambda_sp_nm.unwrap() * 1e-9,
            f.lambda_pd_nm.unwrap() * 1e-9,
            f.cell_length_mm.unwrap() * 1e-3,
            0.0,
            0.0,
        )?;
        Ok(geom)
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct PhasematchSpec {
    /// Pump detunings [GHz], comma separated.
    #[arg(long = "detuning", value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub detunings_ghz: Option<Vec<f64>>,
    /// Signal-angle grid `start:stop:step` [deg].
    #[arg(long = "theta")]
    pub theta_grid_deg: Option<String>,
    /// Collection angle at which the detuning ratios are reported [deg].
    #[arg(long)]
    pub ratio_angle_deg: Option<f64>,
}

impl PhasematchSpec {
    pub fn filled(&self) -> Self {
        let d = PhasematchSpec {
            detunings_ghz: Some(vec![-1.1, 1.0]),
            theta_grid_deg: Some("0:3:0.01".into()),
            ratio_angle_deg: Some(1.4),
        };
        overlay(&d, self)
    }
}

/// Parses `start:stop:step` (or a single value) into grid points.
pub fn parse_grid(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::usage(format!("invalid grid {spec:?}; expected start:stop:step with step > 0"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let (start, stop, step) = match parts[..] {
        [x] => (x, x, 1.0),
        [a, b, s] => (a, b, s),
        _ => return Err(bad()),
    };
    if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0 && stop >= start) {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() + 1.0;
    if n > 1e7 {
        return Err(CliError::usage(format!("grid {spec:?} has {n} points, more than 1e7")));
    }
    Ok((0..n as usize).map(|k| start + k as f64 * step).collect())
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSpec {
    /// pairs, autocorr or hom.
    #[arg(long)]
    pub experiment: Option<String>,
    /// Indistinguishability factor of the HOM photons, 0..1.
    #[arg(long)]
    pub indistinguishability: Option<f64>,
    /// Give source B the pair-creation times of source A.
    #[arg(long)]
    pub synchronized: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Pairs,
    Autocorr,
    Hom,
}

impl SimulateSpec {
    pub fn filled(&self) -> Self {
        let d = SimulateSpec {
            experiment: Some("pairs".into()),
            indistinguishability: Some(1.0),
            synchronized: Some(false),
        };
        overlay(&d, self)
    }

    pub fn experiment(&self) -> CliResult<Experiment> {
        match self.filled().experiment.unwrap().as_str() {
            "pairs" => Ok(Experiment::Pairs),
            "autocorr" => Ok(Experiment::Autocorr),
            "hom" => Ok(Experiment::Hom),
            other => Err(CliError::usage(format!("unknown experiment {other:?} (pairs, autocorr, hom)"))),
        }
    }

    pub fn hom_options(&self) -> HomOptions {
        let f = self.filled();
        HomOptions { indistinguishability: f.indistinguishability.unwrap(), synchronized: f.synchronized.unwrap() }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct SourceSpec {
    /// paper-2023, paper-2021 or ideal.
    #[arg(long)]
    pub preset: Option<String>,
    /// True detected coincidence rate [kcps]; sets the pair rate.
    #[arg(long, visible_alias = "rate-kcps")]
    pub detected_pair_rate_kcps: Option<f64>,
    /// Generated pair rate [1/s]; overrides the detected rate.
    #[arg(long)]
    pub pair_rate_hz: Option<f64>,
    #[arg(long)]
    pub signal_transmission: Option<f64>,
    #[arg(long)]
    pub idler_transmission: Option<f64>,
    #[arg(long)]
    pub signal_noise_hz: Option<f64>,
    #[arg(long)]
    pub idler_noise_hz: Option<f64>,
    /// Detector jitter FWHM [ps].
    #[arg(long)]
    pub jitter_ps: Option<f64>,
    #[arg(long)]
    pub dead_time_ns: Option<f64>,
    #[arg(long)]
    pub rise_time_ns: Option<f64>,
    #[arg(long)]
    pub decay_time_ns: Option<f64>,
    #[arg(long)]
    pub duration_s: Option<f64>,
}

impl SourceSpec {
    /// Builds the source. The preset supplies every value not set explicitly.
    pub fn build(&self, seed: u64) -> CliResult<SourceConfig> {
        let preset: Preset = self.preset.as_deref().unwrap_or("paper-2023").parse()?;
        let rate = self.detected_pair_rate_kcps.unwrap_or(200.0) * 1e3;
        let duration = self.duration_s.unwrap_or(1.0);
        let mut cfg = preset.source(rate, duration, seed);
        let set = |slot: &mut f64, v: Option<f64>, scale: f64| {
            if let Some(v) = v {
                *slot = v * scale;
            }
        };
        set(&mut cfg.signal_transmission, self.signal_transmission, 1.0);
        set(&mut cfg.idler_transmission, self.idler_transmission, 1.0);
        set(&mut cfg.signal_noise_rate, self.signal_noise_hz, 1.0);
        set(&mut cfg.idler_noise_rate, self.idler_noise_hz, 1.0);
        set(&mut cfg.jitter_fwhm, self.jitter_ps, 1e-12);
        set(&mut cfg.dead_time, self.dead_time_ns, 1e-9);
        if self.rise_time_ns.is_some() || self.decay_time_ns.is_some() {
            let rise = self.rise_time_ns.map_or(cfg.mode.rise_time(), |v| v * 1e-9);
            let decay = self.decay_time_ns.map_or(cfg.mode.decay_time(), |v| v * 1e-9);
            cfg.mode = TemporalMode::new(rise, decay)?;
        }
        match self.pair_rate_hz {
            Some(r) => cfg.pair_rate = r,
            None => cfg.set_detected_pair_rate(rate),
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The resolved source written back in config form.
    pub fn describe(&self, cfg: &SourceConfig) -> Self {
        SourceSpec {
            preset: Some(self.preset.clone().unwrap_or_else(|| "paper-2023".into())),
            detected_pair_rate_kcps: Some(cfg.detected_pair_rate() / 1e3),
            pair_rate_hz: Some(cfg.pair_rate),
            signal_transmission: Some(cfg.signal_transmission),
            idler_transmission: Some(cfg.idler_transmission),
            signal_noise_hz: Some(cfg.signal_noise_rate),
            idler_noise_hz: Some(cfg.idler_noise_rate),
            jitter_ps: Some(cfg.jitter_fwhm * 1e12),
            dead_time_ns: Some(cfg.dead_time * 1e9),
            rise_time_ns: Some(cfg.mode.rise_time() * 1e9),
            decay_time_ns: Some(cfg.mode.decay_time() * 1e9),
            duration_s: Some(cfg.duration),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSpec {
    /// Histogram bin width [ps].
    #[arg(long)]
    pub bin_ps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tau_min_ns: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub tau_max_ns: Option<f64>,
    /// Herald coincidence window width [ns].
    #[arg(long)]
    pub window_ns: Option<f64>,
    /// Herald window start relative to the idler [ns].
    #[arg(long, allow_negative_numbers = true)]
    pub window_offset_ns: Option<f64>,
    /// Acquisition time used for normalization [s]; defaults to the stream span.
    #[arg(long = "acquisition-s")]
    pub acquisition_s: Option<f64>,
    #[arg(long)]
    pub hom_bin_ps: Option<f64>,
    #[arg(long)]
    pub hom_max_delay_ns: Option<f64>,
    /// |delay| beyond which HOM bins form the baseline [ns].
    #[arg(long)]
    pub hom_baseline_ns: Option<f64>,
}

impl AnalysisSpec {
    pub fn filled(&self) -> Self {
        let d = AnalysisSpec {
            bin_ps: Some(100.0),
            tau_min_ns: Some(-5.0),
            tau_max_ns: Some(15.0),
            window_ns: Some(3.5),
            window_offset_ns: Some(0.0),
            acquisition_s: None,
            hom_bin_ps: Some(100.0),
            hom_max_delay_ns: Some(20.0),
            hom_baseline_ns: Some(5.0),
        };
        overlay(&d, self)
    }

    pub fn acquisition_ps(&self) -> CliResult<Option<u64>> {
        self.acquisition_s
            .map(|s| {
                check(s.is_finite() && s > 0.0, || format!("acquisition time must be positive (got {s} s)"))?;
                Ok((s * 1e12).round() as u64)
            })
            .transpose()
    }

    pub fn histogram(&self) -> CliResult<HistogramParams> {
        let f = self.filled();
        Ok(HistogramParams {
            bin_width_ps: positive_ps("bin width", f.bin_ps.unwrap())?,
            tau_min_ps: ns_to_ps("tau_min", f.tau_min_ns.unwrap())?,
            tau_max_ps: ns_to_ps("tau_max", f.tau_max_ns.unwrap())?,
            duration_ps: self.acquisition_ps()?,
        })
    }

    pub fn window(&self) -> CliResult<HeraldWindow> {
        let f = self.filled();
        let width = positive_ps("herald window", f.window_ns.unwrap() * 1e3)?;
        Ok(HeraldWindow::new(ns_to_ps("window offset", f.window_offset_ns.unwrap())?, width)?)
    }

    pub fn hom(&self) -> CliResult<HomParams> {
        let f = self.filled();
        let max = f.hom_max_delay_ns.unwrap();
        let base = f.hom_baseline_ns.unwrap();
        check(max > 0.0 && base >= 0.0, || "HOM delay range and baseline must be positive".into())?;
        Ok(HomParams {
            bin_width_ps: positive_ps("HOM bin width", f.hom_bin_ps.unwrap())?,
            max_delay_ps: ns_to_ps("HOM max delay", max)? as u64,
            baseline_min_abs_ps: ns_to_ps("HOM baseline", base)? as u64,
        })
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSpec {
    #[arg(long)]
    pub idler: Option<u8>,
    #[arg(long)]
    pub signal: Option<u8>,
    #[arg(long)]
    pub split_t: Option<u8>,
    #[arg(long)]
    pub split_r: Option<u8>,
    #[arg(long)]
    pub idler_b: Option<u8>,
    #[arg(long)]
    pub hom_out_1: Option<u8>,
    #[arg(long)]
    pub hom_out_2: Option<u8>,
}

impl ChannelSpec {
    pub fn filled(&self) -> Self {
        let m = ChannelMap::STANDARD;
        let d = ChannelSpec {
            idler: Some(m.idler_a),
            signal: Some(m.signal_a),
            split_t: Some(m.split_t),
            split_r: Some(m.split_r),
            idler_b: Some(m.idler_b),
            hom_out_1: Some(m.hom_out_1()),
            hom_out_2: Some(m.hom_out_2()),
        };
        overlay(&d, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0").unwrap(), vec![0.0]);
        let g = parse_grid("0:3:0.01").unwrap();
        assert_eq!(g.len(), 301);
        assert!((g[140] - 1.4).abs() < 1e-12);
        assert!(parse_grid("0:3:0").is_err());
        assert!(parse_grid("3:0:1").is_err());
        assert!(parse_grid("a:b:c").is_err());
        assert!(parse_grid("0:1").is_err());
    }

    #[test]
    fn overlay_prefers_set_fields() {
        let base = AnalysisSpec { bin_ps: Some(100.0), window_ns: Some(3.5), ..Default::default() };
        let top = AnalysisSpec { bin_ps: Some(50.0), ..Default::default() };
        let m = overlay(&base, &top);
        assert_eq!(m.bin_ps, Some(50.0));
        assert_eq!(m.window_ns, Some(3.5));
    }

    #[test]
    fn toml_and_json_are_equivalent() {
        let toml_text = "seed = 7\n[source]\npreset = \"ideal\"\njitter_ps = 55\n[analysis]\nwindow_ns = 2.0\n";
        let json_text = r#"{"seed": 7, "source": {"preset": "ideal", "jitter_ps": 55}, "analysis": {"window_ns": 2.0}}"#;
        let a: FileConfig = toml::from_str(toml_text).unwrap();
        let b: FileConfig = serde_json::from_str(json_text).unwrap();
        assert_eq!(serde_json::to_value(&a).unwrap(), serde_json::to_value(&b).unwrap());
        assert!(toml::from_str::<FileConfig>("[source]\njitter = 5\n").is_err());
    }

    #[test]
    fn source_overrides_apply_after_preset() {
        let spec = SourceSpec {
            preset: Some("ideal".into()),
            detected_pair_rate_kcps: Some(10.0),
            signal_transmission: Some(0.5),
            jitter_ps: Some(55.0),
            ..Default::default()
        };
        let cfg = spec.build(1).unwrap();
        assert_eq!(cfg.signal_transmission, 0.5);
        assert!((cfg.detected_pair_rate() - 10e3).abs() < 1e-6);
        assert!((cfg.jitter_fwhm - 55e-12).abs() < 1e-20);
        let described = spec.describe(&cfg);
        assert_eq!(described.build(1).unwrap(), cfg);
        assert!(SourceSpec { preset: Some("nope".into()), ..Default::default() }.build(1).is_err());
    }

    #[test]
    fn analysis_units() {
        let a = AnalysisSpec { window_ns: Some(3.5), window_offset_ns: Some(-0.5), ..Default::default() };
        assert_eq!(a.window().unwrap(), HeraldWindow { offset_ps: -500, width_ps: 3500 });
        assert_eq!(a.histogram().unwrap(), HistogramParams::default());
        assert_eq!(a.hom().unwrap(), HomParams::default());
        assert!(AnalysisSpec { window_ns: Some(0.0), ..Default::default() }.window().is_err());
        assert!(AnalysisSpec { bin_ps: Some(-1.0), ..Default::default() }.histogram().is_err());
    }
}
