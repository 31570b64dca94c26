//! Two-source Hong-Ou-Mandel coincidence profile.
//!
//! A herald pair is one idler from each source. It registers a coincidence
//! when source A's window holds a click on one beam-splitter output and
//! source B's window a click on the other. Coincidences are binned by the
//! herald delay `t_B - t_A`; the visibility compares the central bin with the
//! mean of the far wings.

use rayon::prelude::*;
use serde::Serialize;

use super::{sorted_channel, window_hits, HeraldWindow, BLOCK};
use crate::error::{Error, Result};
use crate::tagstream::TagStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HomParams {
    /// Width of the herald-delay bins; bin `k` is centred on `k * width`.
    pub bin_width_ps: u64,
    /// Largest |herald delay| kept, rounded down to whole bins.
    pub max_delay_ps: u64,
    /// Bins whose centre lies beyond this |delay| form the baseline.
    pub baseline_min_abs_ps: u64,
}

impl Default for HomParams {
    fn default() -> Self {
        HomParams { bin_width_ps: 100, max_delay_ps: 20_000, baseline_min_abs_ps: 5_000 }
    }
}

impl HomParams {
    fn half_bins(&self) -> Result<i64> {
        if self.bin_width_ps == 0 {
            return Err(Error::invalid("HOM bin width must be positive"));
        }
        let k = (self.max_delay_ps / self.bin_width_ps) as i64;
        if self.baseline_min_abs_ps >= k as u64 * self.bin_width_ps {
            return Err(Error::invalid("HOM baseline region lies outside the delay range"));
        }
        Ok(k)
    }

    /// Bin index relative to the central bin, or `None` outside the range.
    pub fn bin_of(&self, delay_ps: i64) -> Option<i64> {
        let w = self.bin_width_ps as i64;
        let half = (self.max_delay_ps / self.bin_width_ps) as i64;
        let k = (2 * delay_ps + w).div_euclid(2 * w);
        (k.abs() <= half).then_some(k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomProfile {
    pub params: HomParams,
    /// Bin centres [ps].
    pub delays_ps: Vec<i64>,
    pub counts: Vec<u64>,
    /// Counts in the bin centred on zero delay.
    pub central: u64,
    /// Mean counts per baseline bin.
    pub baseline: f64,
    /// `1 - central / baseline`.
    pub visibility: f64,
}

impl HomProfile {
    fn from_counts(params: HomParams, counts: Vec<u64>) -> Result<Self> {
        let half = params.half_bins()?;
        let w = params.bin_width_ps as i64;
        let delays_ps: Vec<i64> = (-half..=half).map(|k| k * w).collect();
        let wings: Vec<u64> = delays_ps
            .iter()
            .zip(&counts)
            .filter(|(d, _)| d.unsigned_abs() > params.baseline_min_abs_ps)
            .map(|(_, &c)| c)
            .collect();
        let baseline = wings.iter().sum::<u64>() as f64 / wings.len() as f64;
        if baseline.is_nan() || baseline <= 0.0 {
            return Err(Error::UndefinedNormalization("no coincidences in the HOM baseline region".into()));
        }
        let central = counts[half as usize];
        Ok(HomProfile {
            params,
            delays_ps,
            counts,
            central,
            baseline,
            visibility: 1.0 - central as f64 / baseline,
        })
    }

    /// Adds the counts of another run with identical binning.
    pub fn merge(&self, other: &HomProfile) -> Result<HomProfile> {
        if self.params != other.params {
            return Err(Error::invalid("cannot merge HOM profiles with different binning"));
        }
        let counts = self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect();
        HomProfile::from_counts(self.params, counts)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "delay_ps,coincidences")?;
        for (d, c) in self.delays_ps.iter().zip(&self.counts) {
            writeln!(out, "{d},{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Herald {
    time: u64,
    out1: bool,
    out2: bool,
}

fn heralds(idler: &[u64], out1: &[u64], out2: &[u64], window: &HeraldWindow) -> Vec<Herald> {
    let h1 = window_hits(idler, out1, window);
    let h2 = window_hits(idler, out2, window);
    idler
        .iter()
        .zip(h1.iter().zip(&h2))
        .filter(|(_, (a, b))| **a || **b)
        .map(|(&time, (&out1, &out2))| Herald { time, out1, out2 })
        .collect()
}

/// Coincidences between the two beam-splitter outputs versus herald delay.
#[allow(clippy::too_many_arguments)]
pub fn hom_profile(
    stream: &TagStream,
    idler_a: u8,
    idler_b: u8,
    out1: u8,
    out2: u8,
    window: &HeraldWindow,
    params: &HomParams,
) -> Result<HomProfile> {
    let half = params.half_bins()?;
    let n_bins = (2 * half + 1) as usize;
    let ia = sorted_channel(stream, idler_a)?;
    let ib = sorted_channel(stream, idler_b)?;
    let o1 = sorted_channel(stream, out1)?;
    let o2 = sorted_channel(stream, out2)?;
    if ia.is_empty() || ib.is_empty() {
        return Err(Error::UndefinedNormalization("HOM analysis needs heralds from both sources".into()));
    }
    let ha = heralds(&ia, &o1, &o2, window);
    let hb = heralds(&ib, &o1, &o2, window);
    let reach = (half as u64) * params.bin_width_ps + params.bin_width_ps / 2;
    let b_times: Vec<u64> = hb.iter().map(|h| h.time).collect();

    let counts = ha
        .par_chunks(BLOCK)
        .map(|block| {
            let mut hist = vec![0u64; n_bins];
            let mut lo = b_times.partition_point(|&t| t < block[0].time.saturating_sub(reach));
            for a in block {
                let start = a.time.saturating_sub(reach);
                while lo < b_times.len() && b_times[lo] < start {
                    lo += 1;
                }
                for b in &hb[lo..] {
                    if b.time > a.time + reach {
                        break;
                    }
                    if !((a.out1 && b.out2) || (a.out2 && b.out1)) {
                        continue;
                    }
                    let delay = b.time as i64 - a.time as i64;
                    if let Some(k) = params.bin_of(delay) {
                        hist[(k + half) as usize] += 1;
                    }
                }
            }
            hist
        })
        .reduce(
            || vec![0u64; n_bins],
            |mut x, y| {
                x.iter_mut().zip(&y).for_each(|(a, b)| *a += b);
                x
            },
        );
    HomProfile::from_counts(*params, counts)
}
