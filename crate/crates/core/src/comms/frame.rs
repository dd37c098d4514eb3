use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Bits;
use crate::error::{invalid, Result};

pub const BARKER_13: [u8; 13] = [1, 1, 1, 1, 1, 0, 0, 1, 1, 0, 1, 0, 1];

/// Which frame bits count as overhead when computing the effective rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverheadAccounting {
    /// A fixed number of overhead bits per frame.
    Bits(usize),
    /// The pilot block only.
    Pilots,
    /// Header, pilots and padding.
    Full,
}

impl Default for OverheadAccounting {
    /// 20 bits per 2000-bit payload, which gives 495.05 Mb/s at 500 Mb/s.
    fn default() -> Self {
        OverheadAccounting::Bits(20)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameSpec {
    pub header_bits: usize,
    pub pilot_bits: usize,
    pub data_bits: usize,
    pub padding_bits: usize,
    pub bitrate: f64,
    pub passband_bandwidth: f64,
    pub rolloff: f64,
    pub overhead: OverheadAccounting,
}

impl Default for FrameSpec {
    fn default() -> Self {
        FrameSpec {
            header_bits: 64,
            pilot_bits: 200,
            data_bits: 2000,
            padding_bits: 0,
            bitrate: 500e6,
            passband_bandwidth: 500e6,
            rolloff: 0.25,
            overhead: OverheadAccounting::default(),
        }
    }
}

impl FrameSpec {
    pub fn total_bits(&self) -> usize {
        self.header_bits + self.pilot_bits + self.data_bits + self.padding_bits
    }

    pub fn symbol_rate(&self) -> f64 {
        self.bitrate / 2.0
    }

    pub fn overhead_bits(&self) -> usize {
        match self.overhead {
            OverheadAccounting::Bits(n) => n,
            OverheadAccounting::Pilots => self.pilot_bits,
            OverheadAccounting::Full => self.header_bits + self.pilot_bits + self.padding_bits,
        }
    }

    pub fn effective_rate(&self) -> f64 {
        self.bitrate * self.data_bits as f64 / (self.data_bits + self.overhead_bits()) as f64
    }

    pub fn check(&self) -> Result<()> {
        if self.data_bits == 0 {
            return Err(invalid("frame needs at least one data bit"));
        }
        for (name, n) in [
            ("header_bits", self.header_bits),
            ("pilot_bits", self.pilot_bits),
            ("data_bits", self.data_bits),
            ("padding_bits", self.padding_bits),
        ] {
            if n % 2 != 0 {
                return Err(invalid(format!("{name} = {n} is odd; QPSK carries bit pairs")));
            }
        }
        if !(self.bitrate > 0.0) {
            return Err(invalid("bitrate must be positive"));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(invalid(format!("rolloff must lie in [0, 1], got {}", self.rolloff)));
        }
        Ok(())
    }
}

/// Barker-13 repeated (and truncated) to `n` bits.
pub fn sync_header(n: usize) -> Bits {
    BARKER_13.iter().copied().cycle().take(n).collect()
}

pub fn pilot_bits(n: usize, seed: u64) -> Bits {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(0..=1u8)).collect()
}

/// header | pilots | payload | zero padding.
pub fn build_frame(spec: &FrameSpec, payload: &[u8], seed: u64) -> Result<Bits> {
    if payload.len() != spec.data_bits {
        return Err(invalid(format!(
            "payload has {} bits, frame expects {}",
            payload.len(),
            spec.data_bits
        )));
    }
    if payload.iter().any(|&b| b > 1) {
        return Err(invalid("payload bits must be 0 or 1"));
    }
    let mut bits = Vec::with_capacity(spec.total_bits());
    bits.extend(sync_header(spec.header_bits));
    bits.extend(pilot_bits(spec.pilot_bits, seed));
    bits.extend_from_slice(payload);
    bits.resize(spec.total_bits(), 0);
    Ok(bits)
}
