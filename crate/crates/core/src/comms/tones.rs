use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::waveform::IQWaveform;
use crate::error::{invalid, Result};

/// Reported SNR never exceeds this; noiseless input is flagged as capped.
pub const SNR_CEILING_DB: f64 = 150.0;

/// A tone counts as received when its SNR reaches this level.
pub const DETECTION_THRESHOLD_DB: f64 = 10.0;

/// Bins on each side of a tone that hold its Hann main lobe.
const TONE_HALF_WIDTH: usize = 2;
/// Bins on each side excluded from the noise-floor estimate.
const GUARD_HALF_WIDTH: usize = 4;

/// Equal-amplitude complex exponentials, scaled to unit mean power.
pub fn multitone(frequencies: &[f64], sample_rate: f64, duration: f64) -> Result<IQWaveform> {
    if frequencies.is_empty() {
        return Err(invalid("at least one tone frequency is required"));
    }
    if !(sample_rate > 0.0) || !(duration > 0.0) {
        return Err(invalid("sample rate and duration must be positive"));
    }
    if let Some(f) = frequencies.iter().find(|f| !(f.abs() < sample_rate / 2.0)) {
        return Err(invalid(format!(
            "tone at {f:e} Hz aliases at sample rate {sample_rate:e} Hz"
        )));
    }
    let n = (duration * sample_rate).round() as usize;
    if n == 0 {
        return Err(invalid("duration shorter than one sample"));
    }
    let mut samples: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate;
            frequencies
                .iter()
                .map(|&f| Complex64::from_polar(1.0, TAU * f * t))
                .sum()
        })
        .collect();
    let p = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
    let g = 1.0 / p.sqrt();
    samples.iter_mut().for_each(|s| *s *= g);
    IQWaveform::new(sample_rate, samples)
}

/// Hann-windowed periodogram, scaled so that white noise of power σ²
/// reads σ²/N per bin and a tone's main lobe sums to its power. Returned
/// as `(frequency, power)` pairs in ascending frequency.
pub fn periodogram(waveform: &IQWaveform) -> Result<Vec<(f64, f64)>> {
    let n = waveform.len();
    if n < 2 {
        return Err(invalid("periodogram needs at least two samples"));
    }
    let power = hann_power(waveform);
    let fs = waveform.sample_rate;
    let mut out: Vec<(f64, f64)> = power
        .iter()
        .enumerate()
        .map(|(k, &p)| (bin_frequency(k, n, fs), p))
        .collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(out)
}

fn bin_frequency(k: usize, n: usize, fs: f64) -> f64 {
    let k = k as f64;
    let n_f = n as f64;
    if k < n_f / 2.0 {
        k * fs / n_f
    } else {
        (k - n_f) * fs / n_f
    }
}

fn hann_power(waveform: &IQWaveform) -> Vec<f64> {
    let n = waveform.len();
    let w: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect();
    let w2: f64 = w.iter().map(|x| x * x).sum();
    let mut buf: Vec<Complex64> = waveform.samples.iter().zip(&w).map(|(s, &wi)| s * wi).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf.iter().map(|x| x.norm_sqr() / (n as f64 * w2)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToneSnr {
    pub frequency: f64,
    /// Tone power over total in-band noise power.
    pub snr_db: f64,
    /// Tone peak bin over the median noise bin.
    pub peak_to_floor_db: f64,
    pub capped: bool,
}

impl ToneSnr {
    pub fn detected(&self) -> bool {
        self.snr_db >= DETECTION_THRESHOLD_DB
    }
}

/// Per-tone SNR from the periodogram. The noise floor is the median of the
/// bins away from every tone, corrected by ln 2 to the mean of an
/// exponential distribution; total noise is that floor times the bin count.
pub fn tone_snr(waveform: &IQWaveform, tone_frequencies: &[f64]) -> Result<Vec<ToneSnr>> {
    let n = waveform.len();
    if n < 2 {
        return Err(invalid("waveform too short for spectral analysis"));
    }
    let fs = waveform.sample_rate;
    let power = hann_power(waveform);
    let bin_of = |f: f64| ((f / fs * n as f64).round() as i64).rem_euclid(n as i64) as usize;
    let tone_bins: Vec<usize> = tone_frequencies.iter().map(|&f| bin_of(f)).collect();

    let circ = |a: usize, b: usize| {
        let d = a.abs_diff(b);
        d.min(n - d)
    };
    let mut noise: Vec<f64> = (0..n)
        .filter(|&k| tone_bins.iter().all(|&t| circ(k, t) > GUARD_HALF_WIDTH))
        .map(|k| power[k])
        .collect();
    if noise.is_empty() {
        return Err(invalid("no noise bins left after excluding tones"));
    }
    noise.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = noise[noise.len() / 2];
    let total: f64 = power.iter().sum();
    let min_floor = total * 10f64.powf(-SNR_CEILING_DB / 10.0) / n as f64;
    let floor = (median / LN_2).max(min_floor).max(f64::MIN_POSITIVE);

    Ok(tone_frequencies
        .iter()
        .zip(&tone_bins)
        .map(|(&frequency, &k)| {
            let lobe: f64 = (0..=2 * TONE_HALF_WIDTH)
                .map(|j| power[(k + n + j - TONE_HALF_WIDTH) % n])
                .sum();
            let tone = (lobe - (2 * TONE_HALF_WIDTH + 1) as f64 * floor).max(0.0);
            let raw = if tone > 0.0 {
                10.0 * (tone / (floor * n as f64)).log10()
            } else {
                f64::NEG_INFINITY
            };
            let capped = raw >= SNR_CEILING_DB;
            ToneSnr {
                frequency,
                snr_db: raw.min(SNR_CEILING_DB),
                peak_to_floor_db: 10.0 * (power[k] / floor).log10(),
                capped,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comms::channel_apply;

    const FS: f64 = 16e9;
    const DURATION: f64 = 1e-6;

    fn five() -> Vec<f64> {
        vec![1e9, 2e9, 3e9, 4e9, 5e9]
    }

    #[test]
    fn five_lines_at_the_right_offsets() {
        let w = multitone(&five(), FS, DURATION).unwrap();
        assert_eq!(w.len(), 16_000);
        assert!((w.mean_power() - 1.0).abs() < 1e-12);
        let spec = periodogram(&w).unwrap();
        let mut peaks: Vec<(f64, f64)> = spec.clone();
        peaks.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let mut top: Vec<f64> = peaks[..5].iter().map(|p| p.0).collect();
        top.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (f, want) in top.iter().zip(five()) {
            assert!((f - want).abs() < 1.0);
        }
    }

    #[test]
    fn single_tone_constant_modulus() {
        let w = multitone(&[1e9], FS, DURATION).unwrap();
        assert!(w.samples.iter().all(|s| (s.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn guards() {
        assert!(multitone(&[], FS, DURATION).is_err());
        assert!(multitone(&[9e9], FS, DURATION).is_err());
    }

    #[test]
    fn noiseless_tone_is_capped() {
        let w = multitone(&[1e9], FS, DURATION).unwrap();
        let r = tone_snr(&w, &[1e9]).unwrap();
        assert!(r[0].capped);
        assert_eq!(r[0].snr_db, SNR_CEILING_DB);
    }

    #[test]
    fn estimator_tracks_configured_snr() {
        let w = multitone(&[1e9], FS, DURATION).unwrap();
        for (i, s) in [0.0, 10.0, 20.0, 30.0, 40.0].iter().enumerate() {
            let noisy = channel_apply(&w, 0.0, -s, i as u64).unwrap();
            let r = tone_snr(&noisy, &[1e9]).unwrap();
            assert!((r[0].snr_db - s).abs() < 0.5, "{s}: {}", r[0].snr_db);
        }
    }

    #[test]
    fn detection_depends_on_channel_gain() {
        let w = multitone(&five(), FS, DURATION).unwrap();
        let strong = channel_apply(&w, 30.0, 0.0, 1).unwrap();
        assert!(tone_snr(&strong, &five()).unwrap().iter().all(|t| t.detected()));
        let weak = channel_apply(&w, -40.0, 0.0, 1).unwrap();
        assert!(tone_snr(&weak, &five()).unwrap().iter().all(|t| !t.detected()));
    }
}
