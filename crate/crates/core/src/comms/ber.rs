use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::frame::FrameSpec;
use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerReport {
    pub bit_errors: usize,
    pub total_data_bits: usize,
    pub ber: f64,
    pub effective_rate: f64,
    pub snr_estimate_db: Option<f64>,
}

impl BerReport {
    /// Pools two reports; SNR estimates are averaged in the linear domain.
    pub fn merge(&self, other: &BerReport) -> BerReport {
        let bit_errors = self.bit_errors + other.bit_errors;
        let total_data_bits = self.total_data_bits + other.total_data_bits;
        let snr_estimate_db = match (self.snr_estimate_db, other.snr_estimate_db) {
            (Some(a), Some(b)) => {
                let wa = self.total_data_bits as f64;
                let wb = other.total_data_bits as f64;
                let lin = (wa * 10f64.powf(a / 10.0) + wb * 10f64.powf(b / 10.0)) / (wa + wb);
                Some(10.0 * lin.log10())
            }
            (a, b) => a.or(b),
        };
        BerReport {
            bit_errors,
            total_data_bits,
            ber: if total_data_bits > 0 {
                bit_errors as f64 / total_data_bits as f64
            } else {
                0.0
            },
            effective_rate: self.effective_rate,
            snr_estimate_db,
        }
    }
}

pub fn ber_report(tx_payload: &[u8], rx_payload: &[u8], spec: &FrameSpec) -> Result<BerReport> {
    if tx_payload.len() != rx_payload.len() {
        return Err(invalid(format!(
            "payload lengths differ: {} sent, {} received",
            tx_payload.len(),
            rx_payload.len()
        )));
    }
    if tx_payload.is_empty() {
        return Err(invalid("empty payload"));
    }
    let bit_errors = tx_payload.iter().zip(rx_payload).filter(|(a, b)| a != b).count();
    Ok(BerReport {
        bit_errors,
        total_data_bits: tx_payload.len(),
        ber: bit_errors as f64 / tx_payload.len() as f64,
        effective_rate: spec.effective_rate(),
        snr_estimate_db: None,
    })
}

/// Gray-coded QPSK over AWGN: `Q(sqrt(2 Eb/N0)) = erfc(sqrt(Eb/N0)) / 2`.
pub fn theoretical_qpsk_ber(ebn0_db: f64) -> f64 {
    let ebn0 = 10f64.powf(ebn0_db / 10.0);
    0.5 * erfc(ebn0.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counting() {
        let spec = FrameSpec::default();
        let tx = vec![0u8; 2000];
        assert_eq!(ber_report(&tx, &tx, &spec).unwrap().ber, 0.0);

        let mut rx = tx.clone();
        for b in rx.iter_mut().take(67) {
            *b = 1;
        }
        let r = ber_report(&tx, &rx, &spec).unwrap();
        assert_eq!(r.bit_errors, 67);
        assert_eq!(r.ber, 0.0335);
        assert!((r.effective_rate / 1e6 - 495.05).abs() < 0.005);

        let flipped = vec![1u8; 2000];
        assert_eq!(ber_report(&tx, &flipped, &spec).unwrap().ber, 1.0);
        assert!(ber_report(&tx, &flipped[..10], &spec).is_err());
    }

    #[test]
    fn theory_limits() {
        assert_eq!(theoretical_qpsk_ber(f64::NEG_INFINITY), 0.5);
        assert!(theoretical_qpsk_ber(-200.0) > 0.49);
    }

    #[test]
    fn merge_pools_counts() {
        let a = BerReport { bit_errors: 1, total_data_bits: 10, ber: 0.1, effective_rate: 1.0, snr_estimate_db: Some(10.0) };
        let b = BerReport { bit_errors: 3, total_data_bits: 10, ber: 0.3, effective_rate: 1.0, snr_estimate_db: Some(10.0) };
        let m = a.merge(&b);
        assert_eq!(m.bit_errors, 4);
        assert_eq!(m.total_data_bits, 20);
        assert!((m.ber - 0.2).abs() < 1e-15);
        assert!((m.snr_estimate_db.unwrap() - 10.0).abs() < 1e-12);
    }
}
