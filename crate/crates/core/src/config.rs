//! Project configuration shared by every CLI command.
//!
//! All quantities are SI: meters, hertz, radians, dBm/dB. Every section is
//! optional and falls back to the 1 THz SU-8 design and testbed defaults, but
//! a section that is present must be complete and may not contain unknown
//! keys.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::comms::FrameSpec;
use crate::error::{invalid, Result};
use crate::layout::StubWaveNumber;
use crate::link::{LinkGeometry, RadioChainSpec};
use crate::patch::SubstrateSpec;
use crate::wavefront::{DEFAULT_ANGLE_STEP_DEG, DEFAULT_PEAK_COUPLING, DEFAULT_QUALITY_FACTOR};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProjectConfig {
    pub substrate: SubstrateSpec,
    pub design_frequency: f64,
    pub rows: usize,
    pub cols: usize,
    pub phase_step: f64,
    pub stub_wave_number: StubWaveNumber,
    pub element: ElementConfig,
    pub pattern: PatternConfig,
    pub spectrum: SpectrumConfig,
    pub chain: RadioChainSpec,
    pub geometry: LinkGeometry,
    pub frame: FrameSpec,
    pub simulation: SimulationConfig,
    pub sweep: SweepConfig,
    pub seeds: Seeds,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            substrate: SubstrateSpec::su8(),
            design_frequency: 1e12,
            // 85 x 150 µm = 12.75 mm panel
            rows: 85,
            cols: 85,
            phase_step: PI / 2.0,
            stub_wave_number: StubWaveNumber::Intrinsic,
            element: ElementConfig::default(),
            pattern: PatternConfig::default(),
            spectrum: SpectrumConfig::default(),
            chain: RadioChainSpec::default(),
            geometry: LinkGeometry::default(),
            frame: FrameSpec::default(),
            simulation: SimulationConfig::default(),
            sweep: SweepConfig::default(),
            seeds: Seeds::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElementConfig {
    pub quality_factor: f64,
    pub peak_coupling: f64,
    /// Angle between the incident polarisation and the patch axis.
    pub polarization_angle: f64,
}

impl Default for ElementConfig {
    fn default() -> Self {
        ElementConfig {
            quality_factor: DEFAULT_QUALITY_FACTOR,
            peak_coupling: DEFAULT_PEAK_COUPLING,
            polarization_angle: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatternConfig {
    pub angle_step_deg: f64,
    pub incidence: f64,
}

impl Default for PatternConfig {
    fn default() -> Self {
        PatternConfig {
            angle_step_deg: DEFAULT_ANGLE_STEP_DEG,
            incidence: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points: usize,
    pub detector_angle: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            start_hz: 0.6e12,
            stop_hz: 1.4e12,
            points: 500,
            detector_angle: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    /// Eb/N0 of the QPSK run over the reflectarray. The default is the value
    /// at which theory gives a BER of 0.0335.
    pub ebn0_db: f64,
    /// Single-tone SNR the link is calibrated to before comparing surfaces.
    pub calibration_snr_db: f64,
    pub frames: usize,
    pub samples_per_symbol: usize,
    pub tones_hz: Vec<f64>,
    pub tone_sample_rate: f64,
    pub tone_duration: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            ebn0_db: 2.25,
            calibration_snr_db: 32.92,
            frames: 60,
            samples_per_symbol: 4,
            tones_hz: vec![1e9, 2e9, 3e9, 4e9, 5e9],
            tone_sample_rate: 16e9,
            tone_duration: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Monte Carlo trials for the tolerance sweep.
    pub trials: usize,
    pub relative_tolerance: f64,
    /// Eb/N0 points for the BER sweep.
    pub ebn0_db: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            trials: 32,
            relative_tolerance: 0.10,
            ebn0_db: vec![0.0, 2.0, 4.0, 6.0, 8.0],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    pub layout: u64,
    pub simulation: u64,
}

impl ProjectConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: ProjectConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parses `text` (or the defaults when `None`), applies `key=value`
    /// overrides with dotted keys, then validates.
    pub fn load(text: Option<&str>, overrides: &[String]) -> Result<Self> {
        // strict parse first so missing or unknown keys in the file are reported
        let base: ProjectConfig = match text {
            Some(t) => serde_json::from_str(t)?,
            None => ProjectConfig::default(),
        };
        let mut value = serde_json::to_value(&base)?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: ProjectConfig = serde_json::from_value(value)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load_file(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = path.map(std::fs::read_to_string).transpose()?;
        Self::load(text.as_deref(), overrides)
    }

    pub fn validate(&self) -> Result<()> {
        self.substrate.check()?;
        if !(self.design_frequency > 0.0) {
            return Err(invalid("design_frequency must be positive"));
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(invalid("rows and cols must be at least 1"));
        }
        self.chain.check()?;
        self.geometry.check()?;
        self.frame.check()?;
        if self.simulation.frames == 0 || self.simulation.samples_per_symbol < 2 {
            return Err(invalid("simulation needs frames >= 1 and samples_per_symbol >= 2"));
        }
        if self.spectrum.points == 0 || !(self.spectrum.stop_hz >= self.spectrum.start_hz) {
            return Err(invalid("spectrum needs points >= 1 and stop_hz >= start_hz"));
        }
        Ok(())
    }
}

/// Sets `a.b.c=value` inside a JSON tree. The value is parsed as JSON when
/// possible and kept as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| invalid(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(invalid(format!("override `{assignment}` has an empty key")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| invalid(format!("override path `{key}` crosses a non-object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split always yields at least one part")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Error;

    #[test]
    fn empty_object_gives_defaults() {
        assert_eq!(ProjectConfig::from_json_str("{}").unwrap(), ProjectConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = ProjectConfig::from_json_str(r#"{"substrat": {}}"#).unwrap_err();
        assert!(e.to_string().contains("substrat"), "{e}");
        let e = ProjectConfig::from_json_str(
            r#"{"substrate": {"relative_permittivity": 2.75, "thickness": 2.3e-6, "colour": 1}}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains("colour"));
    }

    #[test]
    fn missing_field_is_named() {
        let e = ProjectConfig::from_json_str(r#"{"substrate": {"relative_permittivity": 2.75}}"#)
            .unwrap_err();
        assert!(matches!(e, Error::Json(_)));
        assert!(e.to_string().contains("thickness"), "{e}");
        assert!(e.to_string().contains("line"), "{e}");
    }

    #[test]
    fn overrides() {
        let cfg = ProjectConfig::load(
            None,
            &["substrate.relative_permittivity=1".into(), "cols=4".into(), "rows=1".into()],
        )
        .unwrap();
        assert_eq!(cfg.substrate.relative_permittivity, 1.0);
        assert_eq!(cfg.cols, 4);
        assert!(ProjectConfig::load(None, &["nonsense".into()]).is_err());
        assert!(ProjectConfig::load(None, &["rows.x=1".into()]).is_err());
    }

    #[test]
    fn serialised_defaults_parse_back() {
        let s = serde_json::to_string(&ProjectConfig::default()).unwrap();
        assert_eq!(ProjectConfig::from_json_str(&s).unwrap(), ProjectConfig::default());
    }
}
