//! Element grid, progressive phase assignment and delay stubs.
//!
//! Stored phases are positive delays in `[0, 2π)`. The array-theory phase
//! `k0 (R_i - d sinθ)` carries the opposite sign; only phase differences are
//! physical, so the delay of column `c` is simply `c * phase_step` wrapped,
//! and column 0 carries no stub.
//!
//! A stub of length `L` is traversed twice by the reflected wave (into the
//! stub and back to the radiating edge), so it adds a delay of
//! `2 k_sub L` with `k_sub = k0 sqrt(ε)`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::patch::{PatchGeometry, SubstrateSpec};
use crate::{wavenumber, SPEED_OF_LIGHT};

/// Which permittivity sets the guided wave number inside a stub.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StubWaveNumber {
    /// `k0 sqrt(εr)`, the bulk dielectric.
    #[default]
    Intrinsic,
    /// `k0 sqrt(εeff)` of the synthesized patch.
    Effective,
}

impl StubWaveNumber {
    pub fn permittivity(self, substrate: &SubstrateSpec, patch: &PatchGeometry) -> f64 {
        match self {
            StubWaveNumber::Intrinsic => substrate.relative_permittivity,
            StubWaveNumber::Effective => patch.effective_permittivity,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub row: usize,
    pub col: usize,
    /// Element centre from the array corner, meters.
    pub x: f64,
    pub y: f64,
    /// Designed delay in `[0, 2π)`.
    pub phase: f64,
    pub stub_length: f64,
    /// Dimensional deviation of this element relative to the layout patch
    /// (1 for an ideal element).
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayLayout {
    pub rows: usize,
    pub cols: usize,
    pub pitch: f64,
    pub design_frequency: f64,
    pub phase_step: f64,
    pub steering_angle: f64,
    pub substrate: SubstrateSpec,
    pub patch: PatchGeometry,
    /// Permittivity used to convert stub length to delay.
    pub stub_permittivity: f64,
    /// Row-major.
    pub elements: Vec<ElementSpec>,
}

impl ArrayLayout {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Panel extent `(width, height)` in meters.
    pub fn extent(&self) -> (f64, f64) {
        (self.cols as f64 * self.pitch, self.rows as f64 * self.pitch)
    }

    /// Round-trip delay of element `index` at frequency `f`. Stub phase grows
    /// linearly with frequency since the physical length is fixed.
    pub fn element_delay(&self, index: usize, frequency: f64) -> f64 {
        stub_delay(self.elements[index].stub_length, frequency, self.stub_permittivity)
    }
}

/// Reduces a phase to `[0, 2π)`. Results within rounding of a whole turn
/// are snapped to zero.
pub fn wrap_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    let eps = 1e-12 * phase.abs().max(1.0);
    if r >= TAU - eps || r < eps {
        0.0
    } else {
        r
    }
}

/// Maps a phase to `(-π, π]`.
pub fn signed_phase(phase: f64) -> f64 {
    let r = wrap_phase(phase);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Array-theory progressive phase `k0 (R_i - d sinθ)` reduced to `[0, 2π)`.
///
/// `incidence_path` is the extra path length `R_i` (meters) contributed by an
/// oblique incident wave between neighbouring elements; it is zero for
/// broadside illumination.
pub fn progressive_phase(k0: f64, d: f64, theta: f64, incidence_path: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(invalid(format!("element spacing must be positive, got {d}")));
    }
    if !(theta.abs() <= PI / 2.0) {
        return Err(invalid(format!("steering angle {theta} rad outside [-pi/2, pi/2]")));
    }
    Ok(wrap_phase(k0 * (incidence_path - d * theta.sin())))
}

/// Beam direction produced by a per-element delay step.
pub fn steering_angle(phase_step: f64, k0: f64, d: f64) -> Result<f64> {
    let limit = k0 * d;
    let ratio = phase_step / limit;
    if !(ratio.abs() <= 1.0 + 1e-12) {
        return Err(Error::UnreachableAngle { phase_step, limit });
    }
    Ok(ratio.clamp(-1.0, 1.0).asin())
}

/// Stub length realising a delay of `phase` at `f0` in the bulk dielectric.
pub fn stub_length(phase: f64, f0: f64, substrate: &SubstrateSpec) -> Result<f64> {
    stub_length_in(phase, f0, substrate.relative_permittivity)
}

/// Stub length for an arbitrary guiding permittivity.
pub fn stub_length_in(phase: f64, f0: f64, permittivity: f64) -> Result<f64> {
    if !(phase >= 0.0) {
        return Err(invalid(format!("stub phase must be non-negative, got {phase}")));
    }
    if !(f0 > 0.0) {
        return Err(invalid(format!("frequency must be positive, got {f0}")));
    }
    Ok(phase / (2.0 * wavenumber(f0) * permittivity.sqrt()))
}

/// Delay added by a stub of physical length `length` at frequency `f`.
pub fn stub_delay(length: f64, frequency: f64, permittivity: f64) -> f64 {
    2.0 * wavenumber(frequency) * permittivity.sqrt() * length
}

pub fn generate_layout(
    rows: usize,
    cols: usize,
    f0: f64,
    substrate: &SubstrateSpec,
    phase_step: f64,
) -> Result<ArrayLayout> {
    generate_layout_with(rows, cols, f0, substrate, phase_step, StubWaveNumber::Intrinsic)
}

/// Builds a `rows x cols` layout at half-wavelength pitch with the delay
/// increasing by `phase_step` per column.
pub fn generate_layout_with(
    rows: usize,
    cols: usize,
    f0: f64,
    substrate: &SubstrateSpec,
    phase_step: f64,
    wave_number: StubWaveNumber,
) -> Result<ArrayLayout> {
    if rows == 0 || cols == 0 {
        return Err(invalid(format!("layout must be at least 1x1, got {rows}x{cols}")));
    }
    if !phase_step.is_finite() {
        return Err(invalid("phase step must be finite"));
    }
    substrate.check()?;
    let patch = PatchGeometry::synthesize(f0, substrate)?;
    let pitch = 0.5 * SPEED_OF_LIGHT / f0;
    let steering = steering_angle(phase_step, wavenumber(f0), pitch)?;

    if phase_step != 0.0 {
        let period = TAU / phase_step.abs();
        if (period - period.round()).abs() > 1e-9 {
            log::warn!("phase step {phase_step} rad does not divide 2*pi; the delay pattern will not repeat exactly");
        }
    }

    let permittivity = wave_number.permittivity(substrate, &patch);
    let mut elements = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        for col in 0..cols {
            let phase = wrap_phase(col as f64 * phase_step);
            elements.push(ElementSpec {
                row,
                col,
                x: (col as f64 + 0.5) * pitch,
                y: (row as f64 + 0.5) * pitch,
                phase,
                stub_length: stub_length_in(phase, f0, permittivity)?,
                scale: 1.0,
            });
        }
    }

    Ok(ArrayLayout {
        rows,
        cols,
        pitch,
        design_frequency: f0,
        phase_step,
        steering_angle: steering,
        substrate: *substrate,
        patch,
        stub_permittivity: permittivity,
        elements,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbMode {
    /// Every feature grows by the same factor `1 + t`.
    UniformScale,
    /// Each element draws its own factor uniformly from `[1 - t, 1 + t]`.
    Random,
}

/// Applies a fabrication tolerance to the stubs and patch dimensions.
/// Element positions are set by the mask grid and are not perturbed.
pub fn perturb_layout(
    layout: &ArrayLayout,
    relative_tolerance: f64,
    mode: PerturbMode,
    seed: u64,
) -> Result<ArrayLayout> {
    if !(0.0..1.0).contains(&relative_tolerance) {
        return Err(invalid(format!(
            "relative tolerance must lie in [0, 1), got {relative_tolerance}"
        )));
    }
    if relative_tolerance == 0.0 {
        return Ok(layout.clone());
    }
    let mut out = layout.clone();
    match mode {
        PerturbMode::UniformScale => {
            let factor = 1.0 + relative_tolerance;
            out.patch = layout.patch.scaled(factor, &layout.substrate)?;
            for e in &mut out.elements {
                e.stub_length *= factor;
            }
        }
        PerturbMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for e in &mut out.elements {
                let factor =
                    rng.random_range(1.0 - relative_tolerance..=1.0 + relative_tolerance);
                e.stub_length *= factor;
                e.scale *= factor;
            }
        }
    }
    Ok(out)
}
