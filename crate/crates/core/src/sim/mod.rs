//! Monte Carlo generation of detector time-tag streams.
//!
//! Pair-creation times form a homogeneous Poisson process. The idler is
//! detected at the creation time and the signal after a delay drawn from
//! `|psi|^2`. Each photon survives with its arm's end-to-end transmission,
//! then picks up Gaussian timing jitter. Background counts are independent
//! Poisson processes at their detected rates. Optional non-paralyzable dead
//! time is applied per channel after sorting.
//!
//! The run is cut into fixed 1 ms slices, each with its own counter-keyed
//! random streams (see [`rng`]), so output depends only on the configuration
//! and never on the worker count.

pub mod presets;
mod rng;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mode::{hom_coincidence_probability, DelaySampler, TemporalMode};
use crate::tagstream::{TagStream, TimeTag};
use crate::PS_PER_S;
use rng::{keyed_rng, Domain};

pub use presets::Preset;

/// Largest number of expected tags a single run may produce.
pub const MAX_EXPECTED_TAGS: f64 = 1e9;

/// Duration of one generation slice [s].
pub const SLICE_SECONDS: f64 = 1e-3;

/// FWHM of a Gaussian in units of its standard deviation, `2 sqrt(2 ln 2)`.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// Parameters of one spatial channel of the photon source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceConfig {
    /// Generated pair rate before any loss [1/s].
    pub pair_rate: f64,
    pub mode: TemporalMode,
    /// End-to-end signal transmission including detector efficiency.
    pub signal_transmission: f64,
    /// End-to-end idler transmission including detector efficiency.
    pub idler_transmission: f64,
    /// Detected uncorrelated signal-arm background [1/s].
    pub signal_noise_rate: f64,
    /// Detected uncorrelated idler-arm background [1/s].
    pub idler_noise_rate: f64,
    /// Detector timing jitter, full width at half maximum [s].
    pub jitter_fwhm: f64,
    /// Non-paralyzable dead time per detector [s]; 0 disables it.
    pub dead_time: f64,
    /// Acquisition time [s].
    pub duration: f64,
    pub seed: u64,
}

impl SourceConfig {
    /// Lossless, noiseless, jitter-free source with the default temporal mode.
    pub fn ideal(pair_rate: f64, duration: f64, seed: u64) -> Self {
        SourceConfig {
            pair_rate,
            mode: TemporalMode::default(),
            signal_transmission: 1.0,
            idler_transmission: 1.0,
            signal_noise_rate: 0.0,
            idler_noise_rate: 0.0,
            jitter_fwhm: 0.0,
            dead_time: 0.0,
            duration,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("pair_rate", self.pair_rate),
            ("signal_noise_rate", self.signal_noise_rate),
            ("idler_noise_rate", self.idler_noise_rate),
            ("jitter_fwhm", self.jitter_fwhm),
            ("dead_time", self.dead_time),
        ];
        for (name, v) in rates {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and >= 0 (got {v})")));
            }
        }
        for (name, v) in [
            ("signal_transmission", self.signal_transmission),
            ("idler_transmission", self.idler_transmission),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1] (got {v})")));
            }
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::invalid(format!("duration must be positive (got {})", self.duration)));
        }
        Ok(())
    }

    /// Sets the pair rate so that `pair_rate * eta_s * eta_i` equals `rate`.
    pub fn set_detected_pair_rate(&mut self, rate: f64) {
        let eta = self.signal_transmission * self.idler_transmission;
        self.pair_rate = if eta > 0.0 { rate / eta } else { 0.0 };
    }

    /// True signal-idler coincidence rate at the detectors [1/s].
    pub fn detected_pair_rate(&self) -> f64 {
        self.pair_rate * self.signal_transmission * self.idler_transmission
    }

    pub fn signal_singles_rate(&self) -> f64 {
        self.pair_rate * self.signal_transmission + self.signal_noise_rate
    }

    pub fn idler_singles_rate(&self) -> f64 {
        self.pair_rate * self.idler_transmission + self.idler_noise_rate
    }

    /// Upper bound on the number of tags a run can emit: every generated
    /// photon plus the background.
    pub fn expected_tags(&self) -> f64 {
        self.duration * (2.0 * self.pair_rate + self.signal_noise_rate + self.idler_noise_rate)
    }

    fn jitter_sigma(&self) -> f64 {
        self.jitter_fwhm / FWHM_PER_SIGMA
    }

    fn slices(&self) -> u64 {
        (self.duration / SLICE_SECONDS).ceil().max(1.0) as u64
    }

    fn slice_bounds(&self, k: u64) -> (f64, f64) {
        let start = k as f64 * SLICE_SECONDS;
        (start, ((k + 1) as f64 * SLICE_SECONDS).min(self.duration))
    }
}

/// Logical channel assignment shared by the simulator and the analyzers.
///
/// Source A uses idler 0 / signal 1, source B idler 2 / signal 3. In the HOM
/// setup the two beam-splitter outputs are detected on the signal channels 1
/// and 3. The 50/50 split of the heralded auto-correlation setup uses 4 and 5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChannelMap {
    pub idler_a: u8,
    pub signal_a: u8,
    pub idler_b: u8,
    pub signal_b: u8,
    pub split_t: u8,
    pub split_r: u8,
}

impl Default for ChannelMap {
    fn default() -> Self {
        ChannelMap { idler_a: 0, signal_a: 1, idler_b: 2, signal_b: 3, split_t: 4, split_r: 5 }
    }
}

impl ChannelMap {
    pub const STANDARD: ChannelMap =
        ChannelMap { idler_a: 0, signal_a: 1, idler_b: 2, signal_b: 3, split_t: 4, split_r: 5 };

    /// First beam-splitter output of the HOM setup.
    pub fn hom_out_1(&self) -> u8 {
        self.signal_a
    }

    /// Second beam-splitter output of the HOM setup.
    pub fn hom_out_2(&self) -> u8 {
        self.signal_b
    }

    pub fn by_name(&self, name: &str) -> Option<u8> {
        Some(match name {
            "idler" | "idler_a" => self.idler_a,
            "signal" | "signal_a" | "out1" => self.signal_a,
            "idler_b" => self.idler_b,
            "signal_b" | "out2" => self.signal_b,
            "split_t" | "t" => self.split_t,
            "split_r" | "r" => self.split_r,
            _ => return None,
        })
    }
}

/// Settings of the two-source interference experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomOptions {
    /// Factor in [0, 1] scaling `|overlap|^2` for degrees of freedom other than
    /// time (1: otherwise identical photons, 0: fully distinguishable).
    pub indistinguishability: f64,
    /// Reuse source A's pair-creation times for source B, so every photon
    /// meets a partner with zero herald delay.
    pub synchronized: bool,
}

impl Default for HomOptions {
    fn default() -> Self {
        HomOptions { indistinguishability: 1.0, synchronized: false }
    }
}

fn to_ps(t: f64) -> u64 {
    (t * PS_PER_S).round().max(0.0) as u64
}

fn check_budget(configs: &[&SourceConfig]) -> Result<()> {
    for c in configs {
        c.validate()?;
    }
    let expected: f64 = configs.iter().map(|c| c.expected_tags()).sum();
    if expected > MAX_EXPECTED_TAGS {
        return Err(Error::ResourceLimit { expected, limit: MAX_EXPECTED_TAGS });
    }
    Ok(())
}

/// Poisson arrival times on `[start, end)`.
fn poisson_times(rng: &mut ChaCha8Rng, rate: f64, start: f64, end: f64, out: &mut Vec<f64>) {
    if rate <= 0.0 {
        return;
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut t = start;
    loop {
        t += exp.sample(rng);
        if t >= end {
            break;
        }
        out.push(t);
    }
}

/// One detector click candidate: survives with `kept`, displaced by `jitter`.
#[derive(Debug, Clone, Copy)]
struct Click {
    kept: bool,
    jitter: f64,
}

impl Click {
    fn draw(rng: &mut ChaCha8Rng, transmission: f64, sigma: f64) -> Self {
        let u: f64 = rng.random();
        let z: f64 = StandardNormal.sample(rng);
        Click { kept: u < transmission, jitter: sigma * z }
    }

    fn tag(self, channel: u8, t: f64) -> Option<TimeTag> {
        self.kept.then(|| TimeTag::new(channel, to_ps(t + self.jitter)))
    }
}

#[derive(Debug, Clone, Copy)]
struct Pair {
    created: f64,
    delay: f64,
    idler: Click,
    signal: Click,
}

/// Pairs created during slice `k`. Creation times come from `time_key`, all
/// other randomness from the configuration's own seed.
fn pair_slice(
    cfg: &SourceConfig,
    source: u8,
    time_key: (u64, u8),
    sampler: &DelaySampler,
    k: u64,
) -> Vec<Pair> {
    let (start, end) = cfg.slice_bounds(k);
    let mut times = Vec::new();
    let mut trng = keyed_rng(time_key.0, time_key.1, Domain::PairTimes, k);
    poisson_times(&mut trng, cfg.pair_rate, start, end, &mut times);

    let sigma = cfg.jitter_sigma();
    let mut arng = keyed_rng(cfg.seed, source, Domain::PairAttributes, k);
    times
        .into_iter()
        .map(|created| {
            let delay = sampler.sample(&mut arng);
            let idler = Click::draw(&mut arng, cfg.idler_transmission, sigma);
            let signal = Click::draw(&mut arng, cfg.signal_transmission, sigma);
            Pair { created, delay, idler, signal }
        })
        .collect()
}

fn noise_slice(cfg: &SourceConfig, source: u8, domain: Domain, rate: f64, k: u64) -> Vec<f64> {
    let (start, end) = cfg.slice_bounds(k);
    let mut out = Vec::new();
    let mut rng = keyed_rng(cfg.seed, source, domain, k);
    poisson_times(&mut rng, rate, start, end, &mut out);
    out
}

/// Sorts by `(timestamp, channel)` keeping generation order for ties, then
/// applies per-channel dead time.
fn finish(mut tags: Vec<TimeTag>, dead_time: &[(u8, f64)]) -> TagStream {
    tags.par_sort_by_key(|t| (t.timestamp, t.channel));
    if dead_time.iter().all(|&(_, d)| d <= 0.0) {
        return TagStream::new(tags);
    }
    let mut dead_ps = [0u64; 256];
    for &(ch, d) in dead_time {
        dead_ps[ch as usize] = to_ps(d);
    }
    let mut last: [Option<u64>; 256] = [None; 256];
    tags.retain(|t| {
        let ch = t.channel as usize;
        let keep = last[ch].is_none_or(|prev| t.timestamp - prev >= dead_ps[ch]);
        if keep {
            last[ch] = Some(t.timestamp);
        }
        keep
    });
    TagStream::new(tags)
}

/// Simulates one source; idler on channel 0, signal on channel 1.
pub fn simulate_pairs(cfg: &SourceConfig) -> Result<TagStream> {
    check_budget(&[cfg])?;
    let map = ChannelMap::STANDARD;
    let sampler = cfg.mode.sampler();
    let slices: Vec<Vec<TimeTag>> = (0..cfg.slices())
        .into_par_iter()
        .map(|k| {
            let mut tags = Vec::new();
            for p in pair_slice(cfg, 0, (cfg.seed, 0), &sampler, k) {
                tags.extend(p.idler.tag(map.idler_a, p.created));
                tags.extend(p.signal.tag(map.signal_a, p.created + p.delay));
            }
            for t in noise_slice(cfg, 0, Domain::IdlerNoise, cfg.idler_noise_rate, k) {
                tags.push(TimeTag::new(map.idler_a, to_ps(t)));
            }
            for t in noise_slice(cfg, 0, Domain::SignalNoise, cfg.signal_noise_rate, k) {
                tags.push(TimeTag::new(map.signal_a, to_ps(t)));
            }
            tags
        })
        .collect();
    let tags = slices.concat();
    Ok(finish(tags, &[(map.idler_a, cfg.dead_time), (map.signal_a, cfg.dead_time)]))
}

/// Simulates the heralded auto-correlation setup: the signal arm is split
/// 50/50 before detection. Idler on channel 0, split outputs on 4 and 5.
pub fn simulate_heralded_autocorr(cfg: &SourceConfig, splitter_seed: u64) -> Result<TagStream> {
    check_budget(&[cfg])?;
    let map = ChannelMap::STANDARD;
    let sampler = cfg.mode.sampler();
    let slices: Vec<Vec<TimeTag>> = (0..cfg.slices())
        .into_par_iter()
        .map(|k| {
            let mut tags = Vec::new();
            let mut split = keyed_rng(splitter_seed, 0, Domain::Splitter, k);
            let port = |rng: &mut ChaCha8Rng| {
                if rng.random::<f64>() < 0.5 {
                    map.split_t
                } else {
                    map.split_r
                }
            };
            for p in pair_slice(cfg, 0, (cfg.seed, 0), &sampler, k) {
                let ch = port(&mut split);
                tags.extend(p.idler.tag(map.idler_a, p.created));
                tags.extend(p.signal.tag(ch, p.created + p.delay));
            }
            for t in noise_slice(cfg, 0, Domain::IdlerNoise, cfg.idler_noise_rate, k) {
                tags.push(TimeTag::new(map.idler_a, to_ps(t)));
            }
            let mut split_noise = keyed_rng(splitter_seed, 1, Domain::Splitter, k);
            for t in noise_slice(cfg, 0, Domain::SignalNoise, cfg.signal_noise_rate, k) {
                tags.push(TimeTag::new(port(&mut split_noise), to_ps(t)));
            }
            tags
        })
        .collect();
    let d = cfg.dead_time;
    Ok(finish(slices.concat(), &[(map.idler_a, d), (map.split_t, d), (map.split_r, d)]))
}

/// Two-source interference with default [`HomOptions`].
pub fn simulate_hom_experiment(
    a: &SourceConfig,
    b: &SourceConfig,
    beamsplitter_seed: u64,
) -> Result<TagStream> {
    simulate_hom_experiment_with(a, b, beamsplitter_seed, &HomOptions::default())
}

#[derive(Debug, Clone, Copy)]
struct Photon {
    created: f64,
    arrival: f64,
    click: Click,
}

/// Simulates two sources whose signals meet on a balanced beam splitter.
///
/// Signals interfere in pairs. Walking all photons in creation order, a photon
/// pairs with the next one when that comes from the other source, lies within
/// twelve decay times, and is not closer still to its own successor. A matched pair leaves through different
/// ports with probability `(1 - I |overlap(dt)|^2) / 2` and bunches into a
/// random common port otherwise. Unmatched photons and background counts
/// pick a port at random. Each photon keeps the transmission and jitter of its
/// own source. Channels: idler A 0, idler B 2, outputs 1 and 3.
pub fn simulate_hom_experiment_with(
    a: &SourceConfig,
    b: &SourceConfig,
    beamsplitter_seed: u64,
    options: &HomOptions,
) -> Result<TagStream> {
    check_budget(&[a, b])?;
    if a.duration != b.duration {
        return Err(Error::invalid("both sources of a HOM run must share one duration"));
    }
    if !(0.0..=1.0).contains(&options.indistinguishability) {
        return Err(Error::invalid("indistinguishability must lie in [0, 1]"));
    }
    let map = ChannelMap::STANDARD;
    let outputs = [map.hom_out_1(), map.hom_out_2()];
    let samplers = [a.mode.sampler(), b.mode.sampler()];
    let b_time_key = if options.synchronized { (a.seed, 0) } else { (b.seed, 1) };
    let time_keys = [(a.seed, 0u8), b_time_key];
    let configs = [a, b];
    let idlers = [map.idler_a, map.idler_b];

    struct SliceOut {
        photons: [Vec<Photon>; 2],
        tags: Vec<TimeTag>,
    }

    let slices: Vec<SliceOut> = (0..a.slices())
        .into_par_iter()
        .map(|k| {
            let mut tags = Vec::new();
            let mut photons: [Vec<Photon>; 2] = [Vec::new(), Vec::new()];
            for s in 0..2 {
                let cfg = configs[s];
                for p in pair_slice(cfg, s as u8, time_keys[s], &samplers[s], k) {
                    tags.extend(p.idler.tag(idlers[s], p.created));
                    photons[s].push(Photon {
                        created: p.created,
                        arrival: p.created + p.delay,
                        click: p.signal,
                    });
                }
                for t in noise_slice(cfg, s as u8, Domain::IdlerNoise, cfg.idler_noise_rate, k) {
                    tags.push(TimeTag::new(idlers[s], to_ps(t)));
                }
                let mut port = keyed_rng(beamsplitter_seed, s as u8 + 1, Domain::BeamSplitter, k);
                for t in noise_slice(cfg, s as u8, Domain::SignalNoise, cfg.signal_noise_rate, k) {
                    let out = outputs[(port.random::<f64>() < 0.5) as usize];
                    tags.push(TimeTag::new(out, to_ps(t)));
                }
            }
            SliceOut { photons, tags }
        })
        .collect();

    let mut tags = Vec::new();
    let mut photons: [Vec<Photon>; 2] = [Vec::new(), Vec::new()];
    for s in slices {
        tags.extend(s.tags);
        let [pa, pb] = s.photons;
        photons[0].extend(pa);
        photons[1].extend(pb);
    }

    // Beam-splitter pass, sequential in creation order.
    let cutoff = 12.0 * a.mode.decay_time().max(b.mode.decay_time());
    let mut rng = keyed_rng(beamsplitter_seed, 0, Domain::BeamSplitter, 0);
    let emit = |tags: &mut Vec<TimeTag>, ph: &Photon, port: usize| {
        tags.extend(ph.click.tag(outputs[port], ph.arrival));
    };
    // Merge both sources in creation order; ties go to source A.
    let mut merged: Vec<(usize, Photon)> = Vec::with_capacity(photons[0].len() + photons[1].len());
    let (mut i, mut j) = (0usize, 0usize);
    while i < photons[0].len() || j < photons[1].len() {
        let take_a = match (photons[0].get(i), photons[1].get(j)) {
            (Some(pa), Some(pb)) => pa.created <= pb.created,
            (Some(_), None) => true,
            _ => false,
        };
        if take_a {
            merged.push((0, photons[0][i]));
            i += 1;
        } else {
            merged.push((1, photons[1][j]));
            j += 1;
        }
    }
    // Gap to the next photon if it comes from the other source.
    let gap = |k: usize| -> Option<f64> {
        let (s0, p0) = merged.get(k)?;
        let (s1, p1) = merged.get(k + 1)?;
        (s0 != s1).then_some(p1.created - p0.created)
    };
    let mut k = 0;
    while k < merged.len() {
        let pairs_next = match gap(k) {
            Some(g) if g <= cutoff => gap(k + 1).is_none_or(|g1| g <= g1),
            _ => false,
        };
        if !pairs_next {
            let port = (rng.random::<f64>() < 0.5) as usize;
            emit(&mut tags, &merged[k].1, port);
            k += 1;
            continue;
        }
        let (pa, pb) = if merged[k].0 == 0 {
            (merged[k].1, merged[k + 1].1)
        } else {
            (merged[k + 1].1, merged[k].1)
        };
        let dt = pb.created - pa.created;
        let p_split =
            0.5 - options.indistinguishability * (0.5 - hom_coincidence_probability(&a.mode, &b.mode, dt));
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let first = (u2 < 0.5) as usize;
        emit(&mut tags, &pa, first);
        emit(&mut tags, &pb, if u1 < p_split { 1 - first } else { first });
        k += 2;
    }

    let dead = [
        (map.idler_a, a.dead_time),
        (map.idler_b, b.dead_time),
        (outputs[0], a.dead_time.max(b.dead_time)),
        (outputs[1], a.dead_time.max(b.dead_time)),
    ];
    Ok(finish(tags, &dead))
}

#[cfg(test)]
mod tests {
    use super::*;

    const NS: f64 = 1e-9;

    #[test]
    fn lossless_pairing() {
        let cfg = SourceConfig::ideal(1e3, 10.0, 11);
        let s = simulate_pairs(&cfg).unwrap();
        let idler = s.channel_times(0);
        let signal = s.channel_times(1);
        assert_eq!(idler.len(), signal.len());
        assert!(idler.len() > 9_500 && idler.len() < 10_500);
        let span = to_ps(12.0 * NS);
        for (ti, ts) in idler.iter().zip(&signal) {
            assert!(ts >= ti && ts - ti <= span);
        }
    }

    #[test]
    fn output_is_sorted_with_standard_channels() {
        let mut cfg = Preset::Paper2023.source(50e3, 0.01, 3);
        cfg.dead_time = 20.0 * NS;
        let s = simulate_pairs(&cfg).unwrap();
        assert!(s.is_time_sorted());
        assert_eq!(s.channels().into_iter().collect::<Vec<_>>(), vec![0, 1]);
        for ch in [0, 1] {
            let t = s.channel_times(ch);
            assert!(t.windows(2).all(|w| w[1] - w[0] >= 20_000));
        }
    }

    #[test]
    fn rejects_invalid_and_oversized_runs() {
        let mut cfg = SourceConfig::ideal(1e3, 1.0, 0);
        cfg.signal_transmission = 1.5;
        assert!(matches!(simulate_pairs(&cfg), Err(Error::InvalidInput(_))));
        let cfg = SourceConfig::ideal(1e3, 0.0, 0);
        assert!(matches!(simulate_pairs(&cfg), Err(Error::InvalidInput(_))));
        let cfg = SourceConfig::ideal(1e12, 10.0, 0);
        assert!(matches!(simulate_pairs(&cfg), Err(Error::ResourceLimit { .. })));
        let a = SourceConfig::ideal(1e3, 1.0, 0);
        let b = SourceConfig::ideal(1e3, 2.0, 0);
        assert!(simulate_hom_experiment(&a, &b, 0).is_err());
    }

    #[test]
    fn same_seed_same_stream() {
        let cfg = Preset::Paper2023.source(100e3, 0.02, 99);
        let x = simulate_pairs(&cfg).unwrap();
        let y = simulate_pairs(&cfg).unwrap();
        assert_eq!(x, y);
        let mut other = cfg;
        other.seed = 100;
        assert_ne!(x, simulate_pairs(&other).unwrap());
    }

    #[test]
    fn autocorr_single_pair_regime_has_no_double_clicks() {
        let cfg = SourceConfig::ideal(1e3, 2.0, 5);
        let s = simulate_heralded_autocorr(&cfg, 8).unwrap();
        let (t, r) = (s.count(4), s.count(5));
        assert_eq!(t + r, s.count(0));
        let n = (t + r) as f64;
        assert!(((t as f64) - n / 2.0).abs() < 3.0 * (n / 4.0).sqrt());
    }

    #[test]
    fn synchronized_identical_sources_never_split() {
        let a = SourceConfig::ideal(1e4, 0.5, 1);
        let b = SourceConfig::ideal(1e4, 0.5, 2);
        let opts = HomOptions { indistinguishability: 1.0, synchronized: true };
        let s = simulate_hom_experiment_with(&a, &b, 3, &opts).unwrap();
        assert_eq!(s.channel_times(0), s.channel_times(2));
        // Every pair bunches: the two outputs never both fire for one herald.
        let out1 = s.channel_times(1);
        let out2 = s.channel_times(3);
        let idler = s.channel_times(0);
        let window = to_ps(20.0 * NS);
        let in_window = |v: &[u64], t0: u64| {
            let k = v.partition_point(|&x| x < t0);
            v.get(k).is_some_and(|&x| x < t0 + window)
        };
        let split = idler.iter().filter(|&&t| in_window(&out1, t) && in_window(&out2, t)).count();
        assert_eq!(split, 0);
        assert_eq!(out1.len() + out2.len(), 2 * idler.len());
    }
}
