//! Brute-force reference counters and stream generators shared by the
//! integration tests. The counters loop over every tag combination and share
//! no code with the library's sliding-window implementation.

#![allow(dead_code)]

use biphoton_core::{HeraldWindow, HomParams, TagStream, TimeTag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Counts `signal - idler` into `bins` bins of `width` starting at `tau_min`.
pub fn brute_histogram(idler: &[u64], signal: &[u64], tau_min: i64, width: u64, bins: usize) -> Vec<u64> {
    let mut h = vec![0u64; bins];
    for &i in idler {
        for &s in signal {
            let d = s as i128 - i as i128 - tau_min as i128;
            if d >= 0 && d < (bins as u64 * width) as i128 {
                h[(d / width as i128) as usize] += 1;
            }
        }
    }
    h
}

/// Whether any target lies in `[h + offset, h + offset + width)`, the window
/// being cut off at time zero.
pub fn brute_hits(heralds: &[u64], targets: &[u64], w: &HeraldWindow) -> Vec<bool> {
    heralds
        .iter()
        .map(|&h| {
            let start = (h as i128 + w.offset_ps as i128).max(0);
            let end = (h as i128 + w.offset_ps as i128 + w.width_ps as i128).max(0);
            targets.iter().any(|&t| start <= t as i128 && (t as i128) < end)
        })
        .collect()
}

pub fn brute_heralded(idler: &[u64], signal: &[u64], w: &HeraldWindow) -> u64 {
    brute_hits(idler, signal, w).into_iter().filter(|&h| h).count() as u64
}

/// `(N_i, N_it, N_ir, N_itr)`.
pub fn brute_threefold(idler: &[u64], t: &[u64], r: &[u64], w: &HeraldWindow) -> (u64, u64, u64, u64) {
    let ht = brute_hits(idler, t, w);
    let hr = brute_hits(idler, r, w);
    let count = |f: &dyn Fn(usize) -> bool| (0..idler.len()).filter(|&k| f(k)).count() as u64;
    (idler.len() as u64, count(&|k| ht[k]), count(&|k| hr[k]), count(&|k| ht[k] && hr[k]))
}

/// HOM coincidences per delay bin, indices `-K..=K` mapped to `0..2K+1`.
pub fn brute_hom(
    ia: &[u64],
    ib: &[u64],
    o1: &[u64],
    o2: &[u64],
    w: &HeraldWindow,
    p: &HomParams,
) -> Vec<u64> {
    let half = (p.max_delay_ps / p.bin_width_ps) as i64;
    let mut h = vec![0u64; (2 * half + 1) as usize];
    let (a1, a2) = (brute_hits(ia, o1, w), brute_hits(ia, o2, w));
    let (b1, b2) = (brute_hits(ib, o1, w), brute_hits(ib, o2, w));
    for (x, &ta) in ia.iter().enumerate() {
        for (y, &tb) in ib.iter().enumerate() {
            if !((a1[x] && b2[y]) || (a2[x] && b1[y])) {
                continue;
            }
            let d = tb as f64 - ta as f64;
            let k = (d / p.bin_width_ps as f64 + 0.5).floor() as i64;
            if k.abs() <= half {
                h[(k + half) as usize] += 1;
            }
        }
    }
    h
}

/// Random stream over channels `0..channels` with clustered timestamps so
/// that windows of a few ns see several tags.
pub fn random_stream(rng: &mut ChaCha8Rng, max_tags: usize, channels: u8) -> TagStream {
    let n = rng.random_range(0..=max_tags);
    let span: u64 = rng.random_range(1_000..=50 * n as u64 * 1_000 + 1_000);
    let mut tags = Vec::with_capacity(n);
    while tags.len() < n {
        let t = rng.random_range(0..span);
        let ch = rng.random_range(0..channels);
        tags.push(TimeTag::new(ch, t));
        // Correlated partner a few ns later, sometimes at the same instant.
        if tags.len() < n && rng.random_bool(0.5) {
            let dt = if rng.random_bool(0.1) { 0 } else { rng.random_range(0..5_000) };
            tags.push(TimeTag::new(rng.random_range(0..channels), t + dt));
        }
    }
    tags.sort_by_key(|t| (t.timestamp, t.channel));
    TagStream::new(tags)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
        .install(f)
}
