use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ber::{ber_report, BerReport};
use super::channel::{channel_apply, delay, noise_power_for_ebn0};
use super::frame::{build_frame, FrameSpec};
use super::modem::{demodulate, qpsk_modulate};
use super::tones::{multitone, tone_snr, ToneSnr};
use crate::error::{invalid, Result};

/// Largest random timing offset applied per frame, in symbols.
const MAX_DELAY_SYMBOLS: usize = 16;

/// A QPSK frame exchange over AWGN.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpskRun {
    /// Eb/N0 of the reference (unit gain) link.
    pub ebn0_db: f64,
    /// Extra channel gain relative to the reference link.
    pub gain_db: f64,
    pub frames: usize,
    pub samples_per_symbol: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpskOutcome {
    pub report: BerReport,
    pub frames: usize,
    pub sync_failures: usize,
    /// Eb/N0 after the relative gain.
    pub received_ebn0_db: f64,
}

impl QpskOutcome {
    pub fn sync_failed(&self) -> bool {
        self.sync_failures > 0
    }
}

/// Sends `run.frames` independent frames with random payloads and random
/// timing offsets. Pilots are derived from `run.seed`; each frame draws its
/// own payload, delay and noise seeds from a generator seeded by `run.seed`.
pub fn simulate_qpsk(spec: &FrameSpec, run: &QpskRun) -> Result<QpskOutcome> {
    spec.check()?;
    if run.frames == 0 {
        return Err(invalid("at least one frame is required"));
    }
    let sps = run.samples_per_symbol;
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let mut total: Option<BerReport> = None;
    let mut sync_failures = 0;
    for _ in 0..run.frames {
        let payload: Vec<u8> = (0..spec.data_bits).map(|_| rng.random_range(0..=1u8)).collect();
        let lag = rng.random_range(0..MAX_DELAY_SYMBOLS * sps);
        let noise_seed: u64 = rng.random();

        let bits = build_frame(spec, &payload, run.seed)?;
        let tx = qpsk_modulate(&bits, spec, sps)?;
        let noise_db = noise_power_for_ebn0(&tx, bits.len() / 2, run.ebn0_db)?;
        let rx = channel_apply(&delay(&tx, lag), run.gain_db, noise_db, noise_seed)?;
        let d = demodulate(&rx, spec, run.seed)?;
        if !d.sync.locked {
            sync_failures += 1;
        }
        let mut r = ber_report(&payload, &d.payload, spec)?;
        r.snr_estimate_db = d.snr_estimate_db.filter(|s| s.is_finite());
        total = Some(match total {
            Some(t) => t.merge(&r),
            None => r,
        });
    }
    Ok(QpskOutcome {
        report: total.expect("at least one frame"),
        frames: run.frames,
        sync_failures,
        received_ebn0_db: run.ebn0_db + run.gain_db,
    })
}

/// A multi-tone probe over AWGN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultitoneRun {
    pub tones: Vec<f64>,
    pub sample_rate: f64,
    pub duration: f64,
    /// SNR a single full-power tone would see on the reference link.
    pub reference_snr_db: f64,
    pub gain_db: f64,
    pub seed: u64,
}

/// The composite is normalised to unit power, so each of `K` tones sits
/// `10 log10 K` below the single-tone reference.
pub fn simulate_multitone(run: &MultitoneRun) -> Result<Vec<ToneSnr>> {
    let tx = multitone(&run.tones, run.sample_rate, run.duration)?;
    let rx = channel_apply(&tx, run.gain_db, -run.reference_snr_db, run.seed)?;
    tone_snr(&rx, &run.tones)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noiseless_any_gain_is_error_free() {
        let spec = FrameSpec::default();
        for (seed, gain) in [(1u64, 0.0), (2, -20.0), (3, 15.0)] {
            let run = QpskRun {
                ebn0_db: 300.0,
                gain_db: gain,
                frames: 2,
                samples_per_symbol: 4,
                seed,
            };
            let out = simulate_qpsk(&spec, &run).unwrap();
            assert_eq!(out.report.bit_errors, 0);
            assert_eq!(out.sync_failures, 0);
        }
    }

    #[test]
    fn deterministic() {
        let spec = FrameSpec::default();
        let run = QpskRun {
            ebn0_db: 4.0,
            gain_db: 0.0,
            frames: 3,
            samples_per_symbol: 4,
            seed: 77,
        };
        assert_eq!(simulate_qpsk(&spec, &run).unwrap(), simulate_qpsk(&spec, &run).unwrap());
    }

    #[test]
    fn buried_signal_loses_sync() {
        let spec = FrameSpec::default();
        let run = QpskRun {
            ebn0_db: 2.25,
            gain_db: -40.0,
            frames: 5,
            samples_per_symbol: 4,
            seed: 5,
        };
        let out = simulate_qpsk(&spec, &run).unwrap();
        assert_eq!(out.sync_failures, 5);
        assert!((out.report.ber - 0.5).abs() < 0.05);
    }
}
