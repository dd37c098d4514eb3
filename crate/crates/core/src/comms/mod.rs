//! Baseband simulation of the link experiments: frame construction, QPSK
//! with root-raised-cosine shaping, multi-tone probes, an AWGN channel and
//! BER accounting.
//!
//! Every random draw comes from a ChaCha8 generator seeded explicitly by the
//! caller, so results are reproducible bit for bit.

mod ber;
mod channel;
mod frame;
mod modem;
mod sim;
mod tones;
mod waveform;

pub use ber::{ber_report, theoretical_qpsk_ber, BerReport};
pub use channel::{channel_apply, delay, noise_power_for_ebn0};
pub use frame::{build_frame, pilot_bits, sync_header, FrameSpec, OverheadAccounting, BARKER_13};
pub use modem::{
    demodulate, gray_demap, gray_map, qpsk_modulate, rrc_taps, Demodulated, SyncReport,
    RRC_SPAN_SYMBOLS, SYNC_THRESHOLD,
};
pub use sim::{simulate_multitone, simulate_qpsk, MultitoneRun, QpskOutcome, QpskRun};
pub use tones::{
    multitone, periodogram, tone_snr, ToneSnr, DETECTION_THRESHOLD_DB, SNR_CEILING_DB,
};
pub use waveform::{IQWaveform, WaveformSidecar};

/// Bits are carried as `u8` values that are either 0 or 1.
pub type Bits = Vec<u8>;
