use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Complex baseband samples at a fixed rate.
#[derive(Clone, Debug, PartialEq)]
pub struct IQWaveform {
    pub sample_rate: f64,
    pub samples: Vec<Complex64>,
}

/// JSON companion of a binary I/Q file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformSidecar {
    pub sample_rate: f64,
    pub length: usize,
}

impl IQWaveform {
    pub fn new(sample_rate: f64, samples: Vec<Complex64>) -> Result<Self> {
        if !(sample_rate > 0.0) {
            return Err(invalid("sample rate must be positive"));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(invalid("waveform contains non-finite samples"));
        }
        Ok(IQWaveform { sample_rate, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn sidecar(&self) -> WaveformSidecar {
        WaveformSidecar {
            sample_rate: self.sample_rate,
            length: self.samples.len(),
        }
    }

    /// Interleaved little-endian `f32` I/Q pairs.
    pub fn write_iq<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = Vec::with_capacity(8 * self.samples.len());
        for s in &self.samples {
            buf.extend_from_slice(&(s.re as f32).to_le_bytes());
            buf.extend_from_slice(&(s.im as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_iq<R: Read>(mut r: R, sidecar: &WaveformSidecar) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        if buf.len() != 8 * sidecar.length {
            return Err(invalid(format!(
                "I/Q payload has {} bytes, sidecar declares {} samples",
                buf.len(),
                sidecar.length
            )));
        }
        let samples = buf
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                Complex64::new(re as f64, im as f64)
            })
            .collect();
        IQWaveform::new(sidecar.sample_rate, samples)
    }

    /// Writes `<path>` (binary) and `<path>.json` (sidecar).
    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_iq(fs::File::create(path)?)?;
        fs::write(sidecar_path(path), serde_json::to_vec_pretty(&self.sidecar())?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let sidecar: WaveformSidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
        IQWaveform::read_iq(fs::File::open(path)?, &sidecar)
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}
