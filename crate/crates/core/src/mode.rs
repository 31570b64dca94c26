//! Cascade bi-photon temporal mode.
//!
//! The heralded signal amplitude, conditioned on an idler at `t = 0`, is
//! modelled as a rise-and-decay double exponential
//!
//! ```text
//! psi(t) = N (exp(-t/tau_d) - exp(-t/tau_r)),  t >= 0
//! ```
//!
//! normalised so that `int |psi|^2 dt = 1`. It vanishes at `t = 0` and for
//! `t -> inf`, giving the asymmetric cross-correlation peak of a cascade.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative rise/decay gap below which the closed forms lose too many digits
/// and numerical quadrature is used instead.
const NEAR_DEGENERATE: f64 = 1e-3;

/// Number of cells in the inverse-CDF table used for sampling.
pub const SAMPLER_CELLS: usize = 10_000;

/// Sampling support in units of the decay time.
pub const SAMPLER_SPAN_DECAYS: f64 = 12.0;

/// Double-exponential temporal amplitude. Times are in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TemporalMode {
    rise_time: f64,
    decay_time: f64,
    #[serde(skip)]
    norm: f64,
}

impl Default for TemporalMode {
    /// 0.15 ns rise, 1.0 ns decay. The decay time is a calibration choice: it
    /// places more than 95% of the photon energy inside a 3.5 ns herald window.
    fn default() -> Self {
        TemporalMode::new(0.15e-9, 1.0e-9).expect("default mode is valid")
    }
}

impl TemporalMode {
    pub fn new(rise_time: f64, decay_time: f64) -> Result<Self> {
        if !(rise_time > 0.0 && decay_time > rise_time && decay_time.is_finite()) {
            return Err(Error::invalid(format!(
                "temporal mode needs 0 < rise < decay (got rise {rise_time:e} s, decay {decay_time:e} s)"
            )));
        }
        let norm = (2.0 * (decay_time + rise_time)).sqrt() / (decay_time - rise_time);
        Ok(TemporalMode { rise_time, decay_time, norm })
    }

    pub fn rise_time(&self) -> f64 {
        self.rise_time
    }

    pub fn decay_time(&self) -> f64 {
        self.decay_time
    }

    /// Normalisation constant `N` [s^-1/2].
    pub fn norm(&self) -> f64 {
        self.norm
    }

    fn gap(&self) -> f64 {
        1.0 / self.rise_time - 1.0 / self.decay_time
    }

    fn near_degenerate(&self) -> bool {
        (self.decay_time - self.rise_time) / self.decay_time < NEAR_DEGENERATE
    }

    /// Amplitude `psi(t)`.
    pub fn amplitude(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        // exp(-t/td) - exp(-t/tr) = -exp(-t/td) * expm1(-gap * t)
        -self.norm * (-t / self.decay_time).exp() * (-self.gap() * t).exp_m1()
    }

    /// Probability density `|psi(t)|^2` [1/s].
    pub fn intensity(&self, t: f64) -> f64 {
        let a = self.amplitude(t);
        a * a
    }

    /// Fraction of the photon energy arriving within `window` after the herald.
    pub fn energy_fraction(&self, window: f64) -> f64 {
        if window <= 0.0 {
            return 0.0;
        }
        if !window.is_finite() {
            return 1.0;
        }
        let value = if self.near_degenerate() {
            integrate(|t| self.intensity(t), 0.0, window.min(60.0 * self.decay_time))
        } else {
            // int_0^W e^{-kt} dt = (1 - e^{-kW}) / k = -expm1(-kW) / k
            let g = |k: f64| -(-k * window).exp_m1() / k;
            let (a, b) = (1.0 / self.decay_time, 1.0 / self.rise_time);
            self.norm * self.norm * (g(2.0 * a) - 2.0 * g(a + b) + g(2.0 * b))
        };
        value.clamp(0.0, 1.0)
    }

    /// Mean herald-to-signal delay `int t |psi|^2 dt`.
    pub fn mean_delay(&self) -> f64 {
        if self.near_degenerate() {
            return integrate(|t| t * self.intensity(t), 0.0, 60.0 * self.decay_time);
        }
        let (a, b) = (1.0 / self.decay_time, 1.0 / self.rise_time);
        let m = |k: f64| 1.0 / (k * k);
        self.norm * self.norm * (m(2.0 * a) - 2.0 * m(a + b) + m(2.0 * b))
    }

    /// Builds the inverse-CDF table for [`DelaySampler`].
    pub fn sampler(&self) -> DelaySampler {
        DelaySampler::new(self)
    }
}

/// `|int psi_a(t) psi_b(t - dt) dt|`, the temporal overlap of two heralded
/// photons whose heralds are `dt` apart (photon `b` later for `dt > 0`).
pub fn mode_overlap(a: &TemporalMode, b: &TemporalMode, dt: f64) -> f64 {
    if dt < 0.0 {
        return mode_overlap(b, a, -dt);
    }
    if a.near_degenerate() || b.near_degenerate() {
        let end = dt + 60.0 * a.decay_time.max(b.decay_time);
        return integrate(|t| a.amplitude(t) * b.amplitude(t - dt), dt, end)
            .abs()
            .min(1.0);
    }
    // psi(t) = N sum_j s_j exp(-r_j t) with (s, r) = (+1, 1/td), (-1, 1/tr);
    // int_dt^inf exp(-p t) exp(-q (t - dt)) dt = exp(-p dt) / (p + q).
    let terms = |m: &TemporalMode| [(1.0, 1.0 / m.decay_time), (-1.0, 1.0 / m.rise_time)];
    let mut sum = 0.0;
    for (sa, p) in terms(a) {
        for (sb, q) in terms(b) {
            sum += sa * sb * (-p * dt).exp() / (p + q);
        }
    }
    (a.norm * b.norm * sum).abs().min(1.0)
}

/// Cross-output coincidence probability for two single photons meeting on a
/// balanced beam splitter: `(1 - |overlap|^2) / 2`.
pub fn hom_coincidence_probability(a: &TemporalMode, b: &TemporalMode, dt: f64) -> f64 {
    let o = mode_overlap(a, b, dt);
    (0.5 * (1.0 - o * o)).clamp(0.0, 0.5)
}

/// Composite 8-point Gauss-Legendre quadrature on 2048 panels.
fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    const NODES: [(f64, f64); 4] = [
        (0.183_434_642_495_649_8, 0.362_683_783_378_362),
        (0.525_532_409_916_329, 0.313_706_645_877_887_3),
        (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
        (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    ];
    const PANELS: usize = 2048;
    if hi <= lo {
        return 0.0;
    }
    let h = (hi - lo) / PANELS as f64;
    let mut total = 0.0;
    for p in 0..PANELS {
        let mid = lo + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for &(x, w) in &NODES {
            s += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += s * half;
    }
    total
}

/// Inverse-CDF sampler of the herald-to-signal delay.
///
/// The cumulative distribution is tabulated on a uniform grid over
/// `[0, 12 tau_d]` and inverted with linear interpolation.
#[derive(Debug, Clone)]
pub struct DelaySampler {
    cdf: Vec<f64>,
    step: f64,
}

impl DelaySampler {
    pub fn new(mode: &TemporalMode) -> Self {
        let span = SAMPLER_SPAN_DECAYS * mode.decay_time;
        let step = span / SAMPLER_CELLS as f64;
        let mut cdf = Vec::with_capacity(SAMPLER_CELLS + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        let mut prev = mode.intensity(0.0);
        for k in 0..SAMPLER_CELLS {
            let t0 = k as f64 * step;
            let mid = mode.intensity(t0 + 0.5 * step);
            let next = mode.intensity(t0 + step);
            // Simpson on each cell; robust for any rise/decay ratio.
            acc += step / 6.0 * (prev + 4.0 * mid + next);
            cdf.push(acc);
            prev = next;
        }
        let total = acc;
        for c in &mut cdf {
            *c /= total;
        }
        DelaySampler { cdf, step }
    }

    /// Upper end of the sampled support [s].
    pub fn span(&self) -> f64 {
        self.step * SAMPLER_CELLS as f64
    }

    /// Maps a uniform variate in `[0, 1)` to a delay.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        // First index with cdf > u, so cdf[k-1] <= u < cdf[k].
        let k = self.cdf.partition_point(|&c| c <= u).clamp(1, SAMPLER_CELLS);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        ((k - 1) as f64 + frac.clamp(0.0, 1.0)) * self.step
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}
