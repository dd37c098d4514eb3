//! Cavity-model sizing of the fundamental rectangular patch.
//!
//! Width, effective permittivity and resonant length follow the usual
//! transmission-line/cavity closed forms for a microstrip patch on a grounded
//! dielectric slab. All lengths are in meters and frequencies in hertz.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::SPEED_OF_LIGHT;

/// Fringing-model singularity: the length correction blows up at this value
/// of the effective permittivity.
const FRINGE_POLE: f64 = 0.258;

/// Thickness window for a well-behaved patch, as fractions of the free-space
/// wavelength.
pub const THICKNESS_MIN_WAVELENGTHS: f64 = 0.003;
pub const THICKNESS_MAX_WAVELENGTHS: f64 = 0.05;

/// Root bracket for [`resonant_frequency`].
pub const RESONANCE_SEARCH_LO_HZ: f64 = 0.01e12;
pub const RESONANCE_SEARCH_HI_HZ: f64 = 20e12;
const RESONANCE_REL_TOL: f64 = 1e-9;

/// Dielectric layer the patch sits on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstrateSpec {
    /// Relative permittivity εr.
    pub relative_permittivity: f64,
    /// Layer thickness h in meters.
    pub thickness: f64,
    /// Optional attenuation per meter of the dielectric. Carried through the
    /// design for reporting; the reflection model treats the stack as lossless.
    #[serde(default)]
    pub loss_per_meter: f64,
}

impl SubstrateSpec {
    pub fn new(relative_permittivity: f64, thickness: f64) -> Result<Self> {
        let s = SubstrateSpec {
            relative_permittivity,
            thickness,
            loss_per_meter: 0.0,
        };
        s.check()?;
        Ok(s)
    }

    /// 2.3 µm SU-8 with εr = 2.75.
    pub fn su8() -> Self {
        SubstrateSpec {
            relative_permittivity: 2.75,
            thickness: 2.3e-6,
            loss_per_meter: 0.0,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.relative_permittivity >= 1.0) {
            return Err(invalid(format!(
                "relative permittivity must be >= 1, got {}",
                self.relative_permittivity
            )));
        }
        if !(self.thickness > 0.0) || !self.thickness.is_finite() {
            return Err(invalid(format!(
                "substrate thickness must be positive, got {}",
                self.thickness
            )));
        }
        if !(self.loss_per_meter >= 0.0) {
            return Err(invalid("substrate loss must be non-negative"));
        }
        Ok(())
    }
}

impl Default for SubstrateSpec {
    fn default() -> Self {
        SubstrateSpec::su8()
    }
}

/// Synthesized element dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatchGeometry {
    pub width: f64,
    pub length: f64,
    pub effective_permittivity: f64,
    pub design_frequency: f64,
    pub resonant_frequency: f64,
}

impl PatchGeometry {
    /// Sizes a patch for `f0` on `substrate` and solves back for the
    /// frequency at which the synthesized length resonates.
    pub fn synthesize(f0: f64, substrate: &SubstrateSpec) -> Result<Self> {
        let width = patch_width(f0, substrate)?;
        let effective_permittivity = effective_permittivity(substrate, width)?;
        let length = patch_length(f0, substrate)?;
        let resonant_frequency = resonant_frequency(length, substrate)?;
        Ok(PatchGeometry {
            width,
            length,
            effective_permittivity,
            design_frequency: f0,
            resonant_frequency,
        })
    }

    /// Multiplies both planar dimensions by `factor` and re-solves the
    /// resonance. The design frequency is left untouched.
    pub fn scaled(&self, factor: f64, substrate: &SubstrateSpec) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(invalid(format!("scale factor must be positive, got {factor}")));
        }
        let width = self.width * factor;
        let length = self.length * factor;
        Ok(PatchGeometry {
            width,
            length,
            effective_permittivity: effective_permittivity(substrate, width)?,
            design_frequency: self.design_frequency,
            resonant_frequency: resonant_frequency(length, substrate)?,
        })
    }
}

fn check_frequency(f0: f64) -> Result<()> {
    if !(f0 > 0.0) || !f0.is_finite() {
        return Err(invalid(format!("frequency must be positive, got {f0}")));
    }
    Ok(())
}

/// Effective permittivity seen by the fringing fields of a patch of the given
/// width. Always lies in `[1, εr]`.
pub fn effective_permittivity(substrate: &SubstrateSpec, width: f64) -> Result<f64> {
    if !(width > 0.0) {
        return Err(invalid(format!("patch width must be positive, got {width}")));
    }
    let er = substrate.relative_permittivity;
    let h = substrate.thickness;
    Ok((er + 1.0) / 2.0 + (er - 1.0) / 2.0 / (1.0 + 12.0 * h / width).sqrt())
}

/// Patch width for efficient radiation at `f0`.
pub fn patch_width(f0: f64, substrate: &SubstrateSpec) -> Result<f64> {
    check_frequency(f0)?;
    let er = substrate.relative_permittivity;
    Ok(SPEED_OF_LIGHT / (2.0 * f0 * ((er + 1.0) / 2.0).sqrt()))
}

/// Resonant length: half a guided wavelength minus the fringing extension on
/// both radiating edges.
pub fn patch_length(f0: f64, substrate: &SubstrateSpec) -> Result<f64> {
    check_frequency(f0)?;
    substrate.check()?;
    let h = substrate.thickness;
    let w = patch_width(f0, substrate)?;
    let eeff = effective_permittivity(substrate, w)?;
    if eeff <= FRINGE_POLE {
        return Err(Error::NumericDomain(format!(
            "effective permittivity {eeff} at or below fringing pole {FRINGE_POLE}"
        )));
    }
    let half_guided = SPEED_OF_LIGHT / (2.0 * f0 * eeff.sqrt());
    let extension = 0.824 * h * ((eeff + 0.3) * (w / h + 0.264))
        / ((eeff - FRINGE_POLE) * (w / h + 0.8));
    Ok(half_guided - extension)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThicknessWarning {
    BelowLowerBound,
    AboveUpperBound,
}

/// Advisory check of the substrate thickness against the usual patch window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubstrateReport {
    pub thickness: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub warnings: Vec<ThicknessWarning>,
}

impl SubstrateReport {
    pub fn passed(&self) -> bool {
        self.warnings.is_empty()
    }
}

pub fn validate_substrate(substrate: &SubstrateSpec, f0: f64) -> Result<SubstrateReport> {
    check_frequency(f0)?;
    let lambda0 = SPEED_OF_LIGHT / f0;
    let lower_bound = THICKNESS_MIN_WAVELENGTHS * lambda0;
    let upper_bound = THICKNESS_MAX_WAVELENGTHS * lambda0;
    let mut warnings = Vec::new();
    if substrate.thickness < lower_bound {
        log::warn!(
            "substrate thickness {:.3} um is below {:.3} um",
            substrate.thickness * 1e6,
            lower_bound * 1e6
        );
        warnings.push(ThicknessWarning::BelowLowerBound);
    } else if substrate.thickness > upper_bound {
        log::warn!(
            "substrate thickness {:.3} um is above {:.3} um",
            substrate.thickness * 1e6,
            upper_bound * 1e6
        );
        warnings.push(ThicknessWarning::AboveUpperBound);
    }
    Ok(SubstrateReport {
        thickness: substrate.thickness,
        lower_bound,
        upper_bound,
        warnings,
    })
}

/// Frequency at which a patch of physical `length` resonates, found by
/// bisection on the length formula (which is monotone decreasing in f).
pub fn resonant_frequency(length: f64, substrate: &SubstrateSpec) -> Result<f64> {
    if !(length > 0.0) {
        return Err(invalid(format!("patch length must be positive, got {length}")));
    }
    substrate.check()?;
    let residual = |f: f64| patch_length(f, substrate).map(|l| l - length);

    let mut lo = RESONANCE_SEARCH_LO_HZ;
    let mut hi = RESONANCE_SEARCH_HI_HZ;
    let r_lo = residual(lo)?;
    let r_hi = residual(hi)?;
    if r_lo.signum() == r_hi.signum() {
        return Err(Error::NoConvergence {
            lo_hz: lo,
            hi_hz: hi,
            target_m: length,
        });
    }
    // residual is positive at lo, negative at hi
    while (hi - lo) > RESONANCE_REL_TOL * lo {
        let mid = 0.5 * (lo + hi);
        if residual(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
