//! Second-order correlation analysis of time-tag streams.
//!
//! All analyses are single passes of two-pointer sliding windows over the
//! per-channel timestamp lists. Work is split into fixed-size blocks of herald
//! (idler) tags whose integer partial results are summed, so the output does
//! not depend on the rayon pool size.

mod herald;
mod hom;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmt::sig;
use crate::tagstream::TagStream;
use crate::PS_PER_S;

pub use herald::{heralded_g2c, heralding_efficiency, AutocorrResult, HeraldingResult};
pub use hom::{hom_profile, HomParams, HomProfile};

/// Number of herald tags per work block.
pub(crate) const BLOCK: usize = 1 << 15;

/// Coincidence window relative to a herald: `[t + offset, t + offset + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HeraldWindow {
    pub offset_ps: i64,
    pub width_ps: u64,
}

impl Default for HeraldWindow {
    fn default() -> Self {
        HeraldWindow { offset_ps: 0, width_ps: 3500 }
    }
}

impl HeraldWindow {
    pub fn new(offset_ps: i64, width_ps: u64) -> Result<Self> {
        if width_ps == 0 {
            return Err(Error::invalid("herald window width must be positive"));
        }
        Ok(HeraldWindow { offset_ps, width_ps })
    }

    /// Window bounds for a herald at `t`, clamped at zero.
    pub(crate) fn bounds(&self, t: u64) -> (u64, u64) {
        let start = t.saturating_add_signed(self.offset_ps);
        let end = if self.offset_ps < 0 && self.offset_ps.unsigned_abs() > t {
            // Window starts before time zero; keep its far edge fixed.
            (t + self.width_ps).saturating_sub(self.offset_ps.unsigned_abs())
        } else {
            start.saturating_add(self.width_ps)
        };
        (start, end)
    }
}

/// Binning of a cross-correlation histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HistogramParams {
    pub bin_width_ps: u64,
    /// Lower edge of the first bin; `tau = t_signal - t_idler`.
    pub tau_min_ps: i64,
    /// Requested upper edge; rounded up to a whole number of bins.
    pub tau_max_ps: i64,
    /// Normalisation time. Defaults to the span of the stream.
    pub duration_ps: Option<u64>,
}

impl Default for HistogramParams {
    fn default() -> Self {
        HistogramParams { bin_width_ps: 100, tau_min_ps: -5_000, tau_max_ps: 15_000, duration_ps: None }
    }
}

impl HistogramParams {
    fn bins(&self) -> Result<usize> {
        if self.bin_width_ps == 0 {
            return Err(Error::invalid("bin width must be positive"));
        }
        if self.tau_max_ps <= self.tau_min_ps {
            return Err(Error::invalid("tau range must satisfy tau_min < tau_max"));
        }
        let span = (self.tau_max_ps - self.tau_min_ps) as u64;
        Ok(span.div_ceil(self.bin_width_ps) as usize)
    }
}

/// Binned signal-idler delays with the data needed to normalise them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationHistogram {
    pub bin_width_ps: u64,
    pub tau_min_ps: i64,
    pub tau_max_ps: i64,
    pub counts: Vec<u64>,
    pub duration_ps: u64,
    pub signal_singles: u64,
    pub idler_singles: u64,
}

impl CorrelationHistogram {
    /// Accidental counts expected per bin for uncorrelated streams.
    pub fn accidentals_per_bin(&self) -> f64 {
        self.signal_singles as f64 * self.idler_singles as f64 * self.bin_width_ps as f64
            / self.duration_ps as f64
    }

    /// Normalised `g2` per bin, `counts * T / (N_s N_i w)`.
    pub fn g2(&self) -> Vec<f64> {
        let acc = self.accidentals_per_bin();
        self.counts.iter().map(|&c| c as f64 / acc).collect()
    }

    pub fn bin_start(&self, k: usize) -> i64 {
        self.tau_min_ps + (k as u64 * self.bin_width_ps) as i64
    }

    pub fn bin_center(&self, k: usize) -> f64 {
        self.bin_start(k) as f64 + 0.5 * self.bin_width_ps as f64
    }

    /// Writes `tau_ps,counts,g2`, one row per bin, `tau_ps` at the bin centre.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "tau_ps,counts,g2")?;
        for (k, (c, g)) in self.counts.iter().zip(self.g2()).enumerate() {
            writeln!(out, "{},{},{}", sig(self.bin_center(k), 12), c, sig(g, 9))?;
        }
        Ok(())
    }
}

/// Timestamps of `channel`, which must be nondecreasing.
pub(crate) fn sorted_channel(stream: &TagStream, channel: u8) -> Result<Vec<u64>> {
    let times = stream.channel_times(channel);
    if !times.is_sorted() {
        return Err(Error::invalid(format!("channel {channel} is not time-sorted")));
    }
    Ok(times)
}

pub(crate) fn resolve_duration(stream: &TagStream, duration_ps: Option<u64>) -> Result<u64> {
    let d = duration_ps.unwrap_or_else(|| stream.span_ps());
    if d == 0 {
        return Err(Error::UndefinedNormalization("zero acquisition time".into()));
    }
    Ok(d)
}

pub(crate) fn ps_to_s(ps: u64) -> f64 {
    ps as f64 / PS_PER_S
}

/// For every herald, whether at least one target tag falls in its window.
pub(crate) fn window_hits(heralds: &[u64], targets: &[u64], window: &HeraldWindow) -> Vec<bool> {
    heralds
        .par_chunks(BLOCK)
        .flat_map_iter(|block| {
            let mut lo = block
                .first()
                .map_or(0, |&t| targets.partition_point(|&x| x < window.bounds(t).0));
            block.iter().map(move |&t| {
                let (start, end) = window.bounds(t);
                while lo < targets.len() && targets[lo] < start {
                    lo += 1;
                }
                lo < targets.len() && targets[lo] < end
            })
        })
        .collect()
}

/// Signal-idler cross-correlation histogram.
pub fn g2_cross(
    stream: &TagStream,
    idler_ch: u8,
    signal_ch: u8,
    params: &HistogramParams,
) -> Result<CorrelationHistogram> {
    let bins = params.bins()?;
    let idler = sorted_channel(stream, idler_ch)?;
    let signal = sorted_channel(stream, signal_ch)?;
    if idler.is_empty() || signal.is_empty() {
        return Err(Error::UndefinedNormalization(format!(
            "no singles on channel {}",
            if idler.is_empty() { idler_ch } else { signal_ch }
        )));
    }
    let duration_ps = resolve_duration(stream, params.duration_ps)?;
    let counts = coincidence_counts(&idler, &signal, params.tau_min_ps, params.bin_width_ps, bins);
    Ok(CorrelationHistogram {
        bin_width_ps: params.bin_width_ps,
        tau_min_ps: params.tau_min_ps,
        tau_max_ps: params.tau_min_ps + (bins as u64 * params.bin_width_ps) as i64,
        counts,
        duration_ps,
        signal_singles: signal.len() as u64,
        idler_singles: idler.len() as u64,
    })
}

/// Histogram of `signal - idler` over `[tau_min, tau_min + bins * width)`.
pub fn coincidence_counts(
    idler: &[u64],
    signal: &[u64],
    tau_min: i64,
    width: u64,
    bins: usize,
) -> Vec<u64> {
    let span = bins as u64 * width;
    let lower = |t: u64| t.saturating_add_signed(tau_min);
    idler
        .par_chunks(BLOCK)
        .map(|block| {
            let mut hist = vec![0u64; bins];
            let mut lo = signal.partition_point(|&s| s < lower(block[0]));
            for &t in block {
                let start = lower(t);
                while lo < signal.len() && signal[lo] < start {
                    lo += 1;
                }
                // Bin relative to the true lower edge, which may be below zero.
                let edge = t as i128 + tau_min as i128;
                for &s in &signal[lo..] {
                    let off = (s as i128 - edge) as u64;
                    if off >= span {
                        break;
                    }
                    hist[(off / width) as usize] += 1;
                }
            }
            hist
        })
        .reduce(
            || vec![0u64; bins],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Location and height of the highest bin; ties resolve to the smaller delay.
pub fn g2_peak(hist: &CorrelationHistogram) -> Result<(f64, f64)> {
    if hist.counts.is_empty() {
        return Err(Error::invalid("empty histogram"));
    }
    let mut best = 0;
    for (k, &c) in hist.counts.iter().enumerate() {
        if c > hist.counts[best] {
            best = k;
        }
    }
    Ok((hist.bin_center(best), hist.counts[best] as f64 / hist.accidentals_per_bin()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagstream::TimeTag;

    fn stream(idler: &[u64], signal: &[u64]) -> TagStream {
        let mut tags: Vec<TimeTag> = idler
            .iter()
            .map(|&t| TimeTag::new(0, t))
            .chain(signal.iter().map(|&t| TimeTag::new(1, t)))
            .collect();
        tags.sort_by_key(|t| (t.timestamp, t.channel));
        TagStream::new(tags)
    }

    #[test]
    fn deterministic_pairs_fill_one_bin() {
        // N pairs with a fixed 2 ns delay over T.
        let n = 1000u64;
        let idler: Vec<u64> = (0..n).map(|k| k * 1_000_000).collect();
        let signal: Vec<u64> = idler.iter().map(|t| t + 2_000).collect();
        let s = stream(&idler, &signal);
        let duration = n * 1_000_000;
        let params = HistogramParams { duration_ps: Some(duration), ..Default::default() };
        let h = g2_cross(&s, 0, 1, &params).unwrap();
        let occupied: Vec<usize> = (0..h.counts.len()).filter(|&k| h.counts[k] > 0).collect();
        assert_eq!(occupied.len(), 1);
        assert_eq!(h.bin_start(occupied[0]), 2_000);
        let expected = duration as f64 / (n as f64 * 100.0);
        let (tau, g) = g2_peak(&h).unwrap();
        assert_eq!(tau, 2_050.0);
        assert!((g - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn negative_delays_near_time_zero() {
        let s = stream(&[100, 10_000], &[50, 9_000, 10_100]);
        let params = HistogramParams {
            bin_width_ps: 100,
            tau_min_ps: -2_000,
            tau_max_ps: 2_000,
            duration_ps: Some(20_000),
        };
        let h = g2_cross(&s, 0, 1, &params).unwrap();
        let total: u64 = h.counts.iter().sum();
        // (100, 50): -50; (10_000, 9_000): -1000; (10_000, 10_100): +100
        assert_eq!(total, 3);
        assert_eq!(h.counts[((-50 + 2000) / 100) as usize], 1);
        assert_eq!(h.counts[((-1000 + 2000) / 100) as usize], 1);
        assert_eq!(h.counts[((100 + 2000) / 100) as usize], 1);
    }

    #[test]
    fn range_rounds_up_to_whole_bins() {
        let s = stream(&[0], &[10]);
        let params = HistogramParams { bin_width_ps: 30, tau_min_ps: 0, tau_max_ps: 100, duration_ps: Some(1000) };
        let h = g2_cross(&s, 0, 1, &params).unwrap();
        assert_eq!(h.counts.len(), 4);
        assert_eq!(h.tau_max_ps, 120);
    }

    #[test]
    fn errors() {
        let s = stream(&[0, 10], &[]);
        assert!(matches!(g2_cross(&s, 0, 1, &HistogramParams::default()), Err(Error::UndefinedNormalization(_))));
        let s = stream(&[0], &[5]);
        let zero = HistogramParams { duration_ps: None, ..Default::default() };
        // span 5 ps is valid; an explicit zero duration is not
        assert!(g2_cross(&s, 0, 1, &zero).is_ok());
        let bad = HistogramParams { duration_ps: Some(0), ..Default::default() };
        assert!(matches!(g2_cross(&s, 0, 1, &bad), Err(Error::UndefinedNormalization(_))));
        let bad = HistogramParams { bin_width_ps: 0, ..Default::default() };
        assert!(matches!(g2_cross(&s, 0, 1, &bad), Err(Error::InvalidInput(_))));
        let bad = HistogramParams { tau_min_ps: 10, tau_max_ps: 10, ..Default::default() };
        assert!(matches!(g2_cross(&s, 0, 1, &bad), Err(Error::InvalidInput(_))));
        let unsorted = TagStream::new(vec![TimeTag::new(0, 10), TimeTag::new(0, 5), TimeTag::new(1, 7)]);
        assert!(matches!(g2_cross(&unsorted, 0, 1, &HistogramParams::default()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn peak_ties_prefer_smaller_delay() {
        let h = CorrelationHistogram {
            bin_width_ps: 10,
            tau_min_ps: 0,
            tau_max_ps: 40,
            counts: vec![1, 5, 2, 5],
            duration_ps: 100,
            signal_singles: 1,
            idler_singles: 1,
        };
        assert_eq!(g2_peak(&h).unwrap(), (15.0, 50.0));
    }

    #[test]
    fn csv_layout() {
        let h = CorrelationHistogram {
            bin_width_ps: 100,
            tau_min_ps: -100,
            tau_max_ps: 100,
            counts: vec![2, 4],
            duration_ps: 1000,
            signal_singles: 2,
            idler_singles: 5,
        };
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "tau_ps,counts,g2\n-50,2,2\n50,4,4\n");
    }

    #[test]
    fn window_bounds_clamp_at_zero() {
        let w = HeraldWindow { offset_ps: -500, width_ps: 3500 };
        assert_eq!(w.bounds(1_000), (500, 4_000));
        assert_eq!(w.bounds(100), (0, 3_100));
        assert_eq!(HeraldWindow::default().bounds(7), (7, 3_507));
        assert!(HeraldWindow::new(0, 0).is_err());
    }
}
