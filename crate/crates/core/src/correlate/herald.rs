//! Heralding efficiency and heralded auto-correlation.

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use super::{ps_to_s, resolve_duration, sorted_channel, window_hits, HeraldWindow, BLOCK};
use crate::error::{Error, Result};
use crate::tagstream::TagStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeraldingResult {
    pub idler_singles: u64,
    pub signal_singles: u64,
    /// Idlers with at least one signal in their window.
    pub heralded: u64,
    /// Expected number of heralds explained by uncorrelated signals.
    pub accidental: f64,
    /// `heralded / idler_singles`, uncorrected.
    pub raw_efficiency: f64,
    /// Accidental-corrected efficiency, clamped to [0, 1].
    pub efficiency: f64,
    /// Accidental-corrected coincidence rate [1/s].
    pub detected_pair_rate: f64,
    pub duration_ps: u64,
}

/// Fraction of idler detections accompanied by a signal detection in the
/// herald window, corrected for accidentals `N_i * R_s * width`.
///
/// An idler heralds at most once regardless of how many signals share its
/// window.
pub fn heralding_efficiency(
    stream: &TagStream,
    idler_ch: u8,
    signal_ch: u8,
    window: &HeraldWindow,
    duration_ps: Option<u64>,
) -> Result<HeraldingResult> {
    let idler = sorted_channel(stream, idler_ch)?;
    let signal = sorted_channel(stream, signal_ch)?;
    if idler.is_empty() {
        return Err(Error::UndefinedNormalization(format!("no idler tags on channel {idler_ch}")));
    }
    let duration_ps = resolve_duration(stream, duration_ps)?;
    let heralded = window_hits(&idler, &signal, window).iter().filter(|&&h| h).count() as u64;

    let n_i = idler.len() as f64;
    let accidental = n_i * signal.len() as f64 * window.width_ps as f64 / duration_ps as f64;
    let corrected = heralded as f64 - accidental;
    if corrected < 0.0 {
        warn!(
            "accidental-corrected herald count is negative ({corrected:.1}); \
             check the herald window offset and width"
        );
    }
    Ok(HeraldingResult {
        idler_singles: idler.len() as u64,
        signal_singles: signal.len() as u64,
        heralded,
        accidental,
        raw_efficiency: heralded as f64 / n_i,
        efficiency: (corrected / n_i).clamp(0.0, 1.0),
        detected_pair_rate: corrected.max(0.0) / ps_to_s(duration_ps),
        duration_ps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutocorrResult {
    pub idlers: u64,
    /// Idlers with a transmitted-arm click in the window.
    pub idler_t: u64,
    /// Idlers with a reflected-arm click in the window.
    pub idler_r: u64,
    /// Idlers with clicks in both arms.
    pub idler_t_r: u64,
    pub g2c: f64,
}

/// Heralded auto-correlation `N_itr N_i / (N_it N_ir)`.
pub fn heralded_g2c(
    stream: &TagStream,
    idler_ch: u8,
    t_ch: u8,
    r_ch: u8,
    window: &HeraldWindow,
) -> Result<AutocorrResult> {
    let idler = sorted_channel(stream, idler_ch)?;
    let t = sorted_channel(stream, t_ch)?;
    let r = sorted_channel(stream, r_ch)?;
    if idler.is_empty() {
        return Err(Error::UndefinedNormalization(format!("no idler tags on channel {idler_ch}")));
    }
    let hits_t = window_hits(&idler, &t, window);
    let hits_r = window_hits(&idler, &r, window);
    let (n_t, n_r, n_tr) = hits_t
        .par_chunks(BLOCK)
        .zip(hits_r.par_chunks(BLOCK))
        .map(|(a, b)| {
            a.iter().zip(b).fold((0u64, 0u64, 0u64), |(x, y, z), (&ht, &hr)| {
                (x + ht as u64, y + hr as u64, z + (ht && hr) as u64)
            })
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let n_i = idler.len() as u64;
    let g2c = if n_tr == 0 {
        0.0
    } else {
        n_tr as f64 * n_i as f64 / (n_t as f64 * n_r as f64)
    };
    Ok(AutocorrResult { idlers: n_i, idler_t: n_t, idler_r: n_r, idler_t_r: n_tr, g2c })
}
