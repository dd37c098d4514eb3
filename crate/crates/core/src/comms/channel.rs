use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::waveform::IQWaveform;
use crate::error::{invalid, Result};

/// Scales the waveform by `gain_db` (amplitude `10^(g/20)`) and adds
/// circularly-symmetric white Gaussian noise of total power `noise_power_db`
/// per complex sample. `f64::NEG_INFINITY` disables the noise.
pub fn channel_apply(
    waveform: &IQWaveform,
    gain_db: f64,
    noise_power_db: f64,
    seed: u64,
) -> Result<IQWaveform> {
    if !gain_db.is_finite() && gain_db != f64::NEG_INFINITY {
        return Err(invalid("channel gain must be finite or -inf"));
    }
    let g = 10f64.powf(gain_db / 20.0);
    let mut samples: Vec<Complex64> = waveform.samples.iter().map(|s| s * g).collect();
    if noise_power_db > f64::NEG_INFINITY {
        let sigma = (10f64.powf(noise_power_db / 10.0) / 2.0).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for s in &mut samples {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            *s += Complex64::new(sigma * re, sigma * im);
        }
    }
    IQWaveform::new(waveform.sample_rate, samples)
}

/// Noise power per complex sample (dB) that puts a waveform carrying
/// `symbols` QPSK symbols at the requested Eb/N0.
pub fn noise_power_for_ebn0(waveform: &IQWaveform, symbols: usize, ebn0_db: f64) -> Result<f64> {
    if symbols == 0 {
        return Err(invalid("symbol count must be positive"));
    }
    let es = waveform.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / symbols as f64;
    let eb = es / 2.0;
    Ok(10.0 * eb.log10() - ebn0_db)
}

/// Prepends `samples` zeros.
pub fn delay(waveform: &IQWaveform, samples: usize) -> IQWaveform {
    let mut out = vec![Complex64::new(0.0, 0.0); samples];
    out.extend_from_slice(&waveform.samples);
    IQWaveform {
        sample_rate: waveform.sample_rate,
        samples: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(n: usize) -> IQWaveform {
        let s = (0..n)
            .map(|i| Complex64::from_polar(1.0, 0.01 * i as f64))
            .collect();
        IQWaveform::new(1e9, s).unwrap()
    }

    #[test]
    fn noiseless_is_pure_scaling() {
        let w = tone(100);
        let out = channel_apply(&w, -6.0, f64::NEG_INFINITY, 0).unwrap();
        let g = 10f64.powf(-6.0 / 20.0);
        for (a, b) in w.samples.iter().zip(&out.samples) {
            assert_eq!(*b, a * g);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let w = tone(100);
        let a = channel_apply(&w, 0.0, -10.0, 9).unwrap();
        let b = channel_apply(&w, 0.0, -10.0, 9).unwrap();
        let c = channel_apply(&w, 0.0, -10.0, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn measured_snr_matches_configuration() {
        let n = 1_000_000;
        let w = tone(n);
        let out = channel_apply(&w, 0.0, -20.0, 1).unwrap();
        let noise: f64 = out
            .samples
            .iter()
            .zip(&w.samples)
            .map(|(y, x)| (y - x).norm_sqr())
            .sum::<f64>()
            / n as f64;
        let snr = -10.0 * noise.log10();
        assert!((snr - 20.0).abs() < 0.1, "{snr}");
    }

    #[test]
    fn ebn0_noise_level() {
        // 10 symbols of unit energy: Eb = 0.5, so Eb/N0 = 0 dB needs N0 = 0.5
        let w = IQWaveform::new(1e9, vec![Complex64::new(1.0, 0.0); 10]).unwrap();
        let n = noise_power_for_ebn0(&w, 10, 0.0).unwrap();
        assert!((n - 10.0 * 0.5f64.log10()).abs() < 1e-12);
    }
}
