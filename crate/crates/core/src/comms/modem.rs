use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::frame::{pilot_bits, sync_header, FrameSpec};
use super::waveform::IQWaveform;
use super::Bits;
use crate::error::{invalid, Result};

/// Pulse length in symbols (half on each side of the peak).
pub const RRC_SPAN_SYMBOLS: usize = 16;

/// Normalised header correlation below which timing is declared lost.
pub const SYNC_THRESHOLD: f64 = 0.6;

/// Timing offsets searched, in symbols.
const SYNC_SEARCH_SYMBOLS: usize = 64;

/// Gray-coded QPSK: first bit on I, second on Q, 0 → +, 1 → −.
pub fn gray_map(b0: u8, b1: u8) -> Complex64 {
    let re = if b0 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    let im = if b1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    Complex64::new(re, im)
}

pub fn gray_demap(s: Complex64) -> (u8, u8) {
    ((s.re < 0.0) as u8, (s.im < 0.0) as u8)
}

fn map_bits(bits: &[u8]) -> Vec<Complex64> {
    bits.chunks_exact(2).map(|p| gray_map(p[0], p[1])).collect()
}

/// Unit-energy root-raised-cosine taps spanning [`RRC_SPAN_SYMBOLS`].
pub fn rrc_taps(rolloff: f64, samples_per_symbol: usize) -> Vec<f64> {
    let n = RRC_SPAN_SYMBOLS * samples_per_symbol + 1;
    let mid = (n / 2) as f64;
    let b = rolloff;
    let mut taps: Vec<f64> = (0..n)
        .map(|i| {
            let t = (i as f64 - mid) / samples_per_symbol as f64;
            if t.abs() < 1e-12 {
                1.0 + b * (4.0 / PI - 1.0)
            } else if b > 0.0 && (t.abs() - 1.0 / (4.0 * b)).abs() < 1e-9 {
                b / 2f64.sqrt()
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * b)).sin()
                        + (1.0 - 2.0 / PI) * (PI / (4.0 * b)).cos())
            } else {
                ((PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos())
                    / (PI * t * (1.0 - (4.0 * b * t).powi(2)))
            }
        })
        .collect();
    let energy = taps.iter().map(|x| x * x).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|x| *x /= energy);
    taps
}

fn convolve(x: &[Complex64], h: &[f64]) -> Vec<Complex64> {
    if x.is_empty() {
        return Vec::new();
    }
    let mut y = vec![Complex64::new(0.0, 0.0); x.len() + h.len() - 1];
    for (i, &xi) in x.iter().enumerate() {
        for (j, &hj) in h.iter().enumerate() {
            y[i + j] += xi * hj;
        }
    }
    y
}

fn shape(symbols: &[Complex64], taps: &[f64], sps: usize) -> Vec<Complex64> {
    if symbols.is_empty() {
        return Vec::new();
    }
    let mut y = vec![Complex64::new(0.0, 0.0); (symbols.len() - 1) * sps + taps.len()];
    for (k, &s) in symbols.iter().enumerate() {
        for (j, &h) in taps.iter().enumerate() {
            y[k * sps + j] += s * h;
        }
    }
    y
}

/// Gray-mapped QPSK at `bitrate / 2` symbols per second, RRC shaped and
/// scaled to unit mean sample power.
pub fn qpsk_modulate(bits: &[u8], spec: &FrameSpec, samples_per_symbol: usize) -> Result<IQWaveform> {
    if bits.len() % 2 != 0 {
        return Err(invalid(format!("QPSK needs an even bit count, got {}", bits.len())));
    }
    if bits.is_empty() {
        return Err(invalid("nothing to modulate"));
    }
    if samples_per_symbol < 2 {
        return Err(invalid("samples per symbol must be at least 2"));
    }
    if !(spec.bitrate > 0.0) || !(0.0..=1.0).contains(&spec.rolloff) {
        return Err(invalid("frame spec needs a positive bitrate and rolloff in [0, 1]"));
    }
    let taps = rrc_taps(spec.rolloff, samples_per_symbol);
    let mut samples = shape(&map_bits(bits), &taps, samples_per_symbol);
    let p = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64;
    let g = 1.0 / p.sqrt();
    samples.iter_mut().for_each(|s| *s *= g);
    IQWaveform::new(spec.symbol_rate() * samples_per_symbol as f64, samples)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyncReport {
    pub locked: bool,
    /// Peak normalised header correlation in [0, 1].
    pub metric: f64,
    /// Timing offset of the frame start, in samples.
    pub offset: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Demodulated {
    pub payload: Bits,
    pub sync: SyncReport,
    pub channel_estimate: Complex64,
    /// Es/N0 estimated from pilot residuals after equalisation.
    pub snr_estimate_db: Option<f64>,
}

/// Receives one frame: matched filter, header correlation for coarse timing,
/// a fine timing search and a least-squares single-tap channel estimate over
/// header and pilots, equalisation and hard Gray decisions. `seed` regenerates the known pilot bits.
///
/// A failed sync is reported in [`SyncReport::locked`]; demodulation still
/// proceeds at the best correlation offset.
pub fn demodulate(waveform: &IQWaveform, spec: &FrameSpec, seed: u64) -> Result<Demodulated> {
    spec.check()?;
    let sps_f = waveform.sample_rate / spec.symbol_rate();
    let sps = sps_f.round() as usize;
    if sps < 2 || (sps_f - sps as f64).abs() > 1e-6 {
        return Err(invalid(format!(
            "sample rate {} is not an integer multiple (>= 2) of the symbol rate",
            waveform.sample_rate
        )));
    }
    let taps = rrc_taps(spec.rolloff, sps);
    let y = convolve(&waveform.samples, &taps);
    let lag = taps.len() - 1;

    let n_sym = spec.total_bits() / 2;
    let header = map_bits(&sync_header(spec.header_bits));
    let pilots = map_bits(&pilot_bits(spec.pilot_bits, seed));

    let span = lag + (n_sym - 1) * sps;
    if y.len() <= span {
        return Err(invalid("waveform shorter than one frame"));
    }
    let max_offset = (y.len() - 1 - span).min(SYNC_SEARCH_SYMBOLS * sps);
    let at = |offset: usize, k: usize| y[offset + lag + k * sps];

    let sync = if header.is_empty() {
        SyncReport { locked: true, metric: 1.0, offset: 0 }
    } else {
        let header_energy: f64 = header.iter().map(|h| h.norm_sqr()).sum();
        let mut best = SyncReport { locked: false, metric: -1.0, offset: 0 };
        for offset in 0..=max_offset {
            let mut corr = Complex64::new(0.0, 0.0);
            let mut energy = 0.0;
            for (k, h) in header.iter().enumerate() {
                let r = at(offset, k);
                corr += r * h.conj();
                energy += r.norm_sqr();
            }
            let metric = if energy > 0.0 {
                corr.norm() / (energy * header_energy).sqrt()
            } else {
                0.0
            };
            if metric > best.metric {
                best = SyncReport { locked: false, metric, offset };
            }
        }
        best.locked = best.metric >= SYNC_THRESHOLD;
        best
    };

    // fine timing over header and pilots together; the header alone is too
    // short to reliably separate neighbouring samples at low SNR
    let known_seq: Vec<Complex64> = header.iter().chain(&pilots).copied().collect();
    let sync = if sync.locked && !known_seq.is_empty() {
        let score = |offset: usize| {
            let mut corr = Complex64::new(0.0, 0.0);
            let mut energy = 0.0;
            for (k, p) in known_seq.iter().enumerate() {
                let r = at(offset, k);
                corr += r * p.conj();
                energy += r.norm_sqr();
            }
            if energy > 0.0 {
                corr.norm_sqr() / energy
            } else {
                0.0
            }
        };
        let lo = sync.offset.saturating_sub(sps / 2);
        let hi = (sync.offset + sps / 2).min(max_offset);
        let offset = (lo..=hi)
            .max_by(|&a, &b| score(a).partial_cmp(&score(b)).unwrap().then(b.cmp(&a)))
            .unwrap_or(sync.offset);
        SyncReport { offset, ..sync }
    } else {
        sync
    };

    let pilot_start = header.len();
    // header and pilots are both known, so both feed the estimate
    let channel_estimate = if known_seq.is_empty() {
        Complex64::new(1.0, 0.0)
    } else {
        let num: Complex64 = known_seq
            .iter()
            .enumerate()
            .map(|(k, p)| at(sync.offset, k) * p.conj())
            .sum();
        let den: f64 = known_seq.iter().map(|p| p.norm_sqr()).sum();
        num / den
    };
    let equalize = |k: usize| {
        if channel_estimate.norm_sqr() > 0.0 {
            at(sync.offset, k) / channel_estimate
        } else {
            at(sync.offset, k)
        }
    };

    let snr_estimate_db = if pilots.is_empty() {
        None
    } else {
        let err: f64 = pilots
            .iter()
            .enumerate()
            .map(|(k, p)| (equalize(pilot_start + k) - p).norm_sqr())
            .sum::<f64>()
            / pilots.len() as f64;
        Some(if err > 0.0 { -10.0 * err.log10() } else { f64::INFINITY })
    };

    let data_start = pilot_start + pilots.len();
    let mut payload = Vec::with_capacity(spec.data_bits);
    for k in data_start..data_start + spec.data_bits / 2 {
        let (b0, b1) = gray_demap(equalize(k));
        payload.push(b0);
        payload.push(b1);
    }

    Ok(Demodulated {
        payload,
        sync,
        channel_estimate,
        snr_estimate_db,
    })
}
