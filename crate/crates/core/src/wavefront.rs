//! Far-field and reflectance model of a layout.
//!
//! The reflected field in the steering plane is the array factor
//!
//! ```text
//! AF(θ, f) = Σ_n a_n exp(i [k0(f) x_n (sinθ - sinθ_i) - Φ_n(f)])
//! ```
//!
//! where `θ_i` is the incidence angle (so a uniform surface reflects
//! specularly at `θ = θ_i`) and `Φ_n(f)` is the stub delay of element `n`,
//! which scales linearly with frequency. Patterns are normalised to the
//! uniform-phase sum `Σ |a_n|` of the same aperture, i.e. a flat metal plate.
//! Mutual coupling between elements is ignored.
//!
//! Each element re-radiates a fraction `η L(f)` of the incident field, with
//! `L` a single-pole Lorentzian around the patch resonance; the remainder is
//! reflected specularly by the ground plane.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::layout::ArrayLayout;
use crate::patch::resonant_frequency;
use crate::wavenumber;

pub const DEFAULT_QUALITY_FACTOR: f64 = 6.0;
pub const DEFAULT_PEAK_COUPLING: f64 = 0.9;
pub const DEFAULT_ANGLE_STEP_DEG: f64 = 0.1;

/// Lower clamp for dB ratios.
pub const DB_FLOOR: f64 = -300.0;

/// Resonant behaviour of a single element.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementResponse {
    pub resonant_frequency: f64,
    pub quality_factor: f64,
    pub peak_coupling: f64,
}

impl ElementResponse {
    pub fn new(resonant_frequency: f64, quality_factor: f64, peak_coupling: f64) -> Result<Self> {
        if !(resonant_frequency > 0.0) {
            return Err(invalid("resonant frequency must be positive"));
        }
        if !(quality_factor > 0.0) {
            return Err(invalid(format!("quality factor must be positive, got {quality_factor}")));
        }
        if !(0.0..=1.0).contains(&peak_coupling) {
            return Err(invalid(format!("peak coupling must lie in [0, 1], got {peak_coupling}")));
        }
        Ok(ElementResponse {
            resonant_frequency,
            quality_factor,
            peak_coupling,
        })
    }

    /// Response centred on the layout's patch resonance. Randomly perturbed
    /// layouts use the mean element scale.
    pub fn for_layout(layout: &ArrayLayout, quality_factor: f64, peak_coupling: f64) -> Result<Self> {
        if layout.is_empty() {
            return Err(invalid("empty layout"));
        }
        let mean_scale =
            layout.elements.iter().map(|e| e.scale).sum::<f64>() / layout.len() as f64;
        let f_res = if mean_scale == 1.0 {
            layout.patch.resonant_frequency
        } else {
            resonant_frequency(layout.patch.length * mean_scale, &layout.substrate)?
        };
        ElementResponse::new(f_res, quality_factor, peak_coupling)
    }

    /// Scales the coupling for a linearly polarised wave at `angle` to the
    /// patch's resonant axis.
    pub fn with_polarization(mut self, angle: f64) -> Self {
        self.peak_coupling *= polarization_coupling(angle);
        self
    }

    pub fn lorentzian(&self, frequency: f64) -> f64 {
        let detune = frequency / self.resonant_frequency - 1.0;
        1.0 / (1.0 + 4.0 * self.quality_factor * self.quality_factor * detune * detune)
    }

    /// Fraction of the incident field re-radiated by the elements.
    pub fn coupling(&self, frequency: f64) -> f64 {
        self.peak_coupling * self.lorentzian(frequency)
    }
}

/// cos² projection of a linear polarisation onto the patch axis.
pub fn polarization_coupling(angle: f64) -> f64 {
    let c = angle.cos();
    c * c
}

/// Complex far field over a frequency × angle grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiationPattern {
    pub frequencies: Vec<f64>,
    pub angles: Vec<f64>,
    pub incidence: f64,
    /// Frequency-major: `amplitude[fi * angles.len() + ai]`.
    pub amplitude: Vec<Complex64>,
    /// Uniform-phase reference `Σ |a_n|` per frequency.
    pub reference: Vec<f64>,
}

/// One frequency row of a [`RadiationPattern`].
#[derive(Clone, Copy, Debug)]
pub struct PatternSlice<'a> {
    pub frequency: f64,
    pub angles: &'a [f64],
    pub amplitude: &'a [Complex64],
    pub reference: f64,
}

impl<'a> PatternSlice<'a> {
    pub fn normalized(&self, ai: usize) -> Complex64 {
        self.amplitude[ai] / self.reference
    }

    pub fn power_db(&self, ai: usize) -> f64 {
        power_db(self.normalized(ai).norm_sqr())
    }
}

impl RadiationPattern {
    pub fn slice(&self, fi: usize) -> PatternSlice<'_> {
        let n = self.angles.len();
        PatternSlice {
            frequency: self.frequencies[fi],
            angles: &self.angles,
            amplitude: &self.amplitude[fi * n..(fi + 1) * n],
            reference: self.reference[fi],
        }
    }

    pub fn normalized(&self, fi: usize, ai: usize) -> Complex64 {
        self.slice(fi).normalized(ai)
    }

    pub fn power_db(&self, fi: usize, ai: usize) -> f64 {
        self.slice(fi).power_db(ai)
    }

    pub fn main_lobe(&self, fi: usize) -> Result<MainLobe> {
        main_lobe(&self.slice(fi))
    }

    /// Normalised gain in dB at `(frequency, angle)`. The frequency must be on
    /// the grid (to 1e-9 relative); the angle is linearly interpolated in
    /// magnitude between grid points.
    pub fn gain_db_at(&self, frequency: f64, angle: f64) -> Result<f64> {
        let fi = self
            .frequencies
            .iter()
            .position(|&f| ((f - frequency) / frequency).abs() < 1e-9)
            .ok_or_else(|| invalid(format!("frequency {frequency:e} Hz not in pattern grid")))?;
        let s = self.slice(fi);
        let (lo, hi) = match (s.angles.first(), s.angles.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Err(invalid("pattern has no angles")),
        };
        let tol = 1e-12;
        if angle < lo - tol || angle > hi + tol {
            return Err(invalid(format!(
                "angle {:.3} deg outside pattern grid [{:.3}, {:.3}] deg",
                angle.to_degrees(),
                lo.to_degrees(),
                hi.to_degrees()
            )));
        }
        let j = s.angles.partition_point(|&a| a < angle);
        let mag = if j == 0 {
            s.normalized(0).norm()
        } else if j >= s.angles.len() {
            s.normalized(s.angles.len() - 1).norm()
        } else if (s.angles[j] - angle).abs() <= tol {
            s.normalized(j).norm()
        } else {
            let (a0, a1) = (s.angles[j - 1], s.angles[j]);
            let t = (angle - a0) / (a1 - a0);
            (1.0 - t) * s.normalized(j - 1).norm() + t * s.normalized(j).norm()
        };
        Ok(power_db(mag * mag))
    }
}

fn power_db(p: f64) -> f64 {
    if p > 0.0 {
        (10.0 * p.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Uniform angle grid over `[-90°, 90°]`, returned in radians.
pub fn angle_grid(step_deg: f64) -> Result<Vec<f64>> {
    if !(step_deg > 0.0) || step_deg > 180.0 {
        return Err(invalid(format!("angle step must lie in (0, 180] deg, got {step_deg}")));
    }
    let n = (180.0 / step_deg).round() as usize;
    Ok((0..=n)
        .map(|i| (-90.0 + 180.0 * i as f64 / n as f64).to_radians())
        .collect())
}

pub fn default_angle_grid() -> Vec<f64> {
    angle_grid(DEFAULT_ANGLE_STEP_DEG).expect("valid default step")
}

/// `n` evenly spaced frequencies over `[start, stop]`.
pub fn frequency_grid(start: f64, stop: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(start > 0.0) || !(stop >= start) {
        return Err(invalid("frequency grid needs n >= 1 and 0 < start <= stop"));
    }
    if n == 1 {
        return Ok(vec![start]);
    }
    Ok((0..n)
        .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
        .collect())
}

/// Sums `Σ w_n exp(i k0 x_n (sinθ - sinθ_i))` for each angle. Element
/// delays and amplitudes are folded into the complex weights `w_n`.
pub fn array_factor_weighted(
    positions: &[f64],
    weights: &[Complex64],
    k0: f64,
    angles: &[f64],
    incidence: f64,
) -> Vec<Complex64> {
    debug_assert_eq!(positions.len(), weights.len());
    let s_inc = incidence.sin();
    angles
        .iter()
        .map(|&theta| {
            let u = k0 * (theta.sin() - s_inc);
            positions
                .iter()
                .zip(weights)
                .map(|(&x, &w)| w * Complex64::from_polar(1.0, u * x))
                .sum()
        })
        .collect()
}

/// Column-aggregated weights of a layout at one frequency. All elements of a
/// column share the same x, so their phasors add before the angular sum.
fn column_weights(layout: &ArrayLayout, frequency: f64) -> (Vec<f64>, Vec<Complex64>) {
    let mut x = vec![0.0; layout.cols];
    let mut w = vec![Complex64::new(0.0, 0.0); layout.cols];
    for (i, e) in layout.elements.iter().enumerate() {
        x[e.col] = e.x;
        w[e.col] += Complex64::from_polar(1.0, -layout.element_delay(i, frequency));
    }
    (x, w)
}

fn check_pattern_inputs(layout: &ArrayLayout, incidence: f64) -> Result<()> {
    if layout.is_empty() {
        return Err(invalid("array factor of an empty layout"));
    }
    if !(incidence.abs() <= PI / 2.0) {
        return Err(invalid(format!("incidence {incidence} rad outside [-pi/2, pi/2]")));
    }
    if layout.elements.iter().any(|e| e.col >= layout.cols) {
        return Err(invalid("element column index outside layout"));
    }
    Ok(())
}

/// Far field of `layout` at one frequency. Identical element amplitudes
/// cancel in the normalisation, so elements are weighted equally.
pub fn array_factor(
    layout: &ArrayLayout,
    frequency: f64,
    angles: &[f64],
    incidence: f64,
) -> Result<RadiationPattern> {
    radiation_pattern(layout, &[frequency], angles, incidence)
}

pub fn radiation_pattern(
    layout: &ArrayLayout,
    frequencies: &[f64],
    angles: &[f64],
    incidence: f64,
) -> Result<RadiationPattern> {
    check_pattern_inputs(layout, incidence)?;
    if frequencies.iter().any(|&f| !(f > 0.0)) {
        return Err(invalid("frequencies must be positive"));
    }
    let mut amplitude = Vec::with_capacity(frequencies.len() * angles.len());
    for &f in frequencies {
        let (x, w) = column_weights(layout, f);
        amplitude.extend(array_factor_weighted(&x, &w, wavenumber(f), angles, incidence));
    }
    Ok(RadiationPattern {
        frequencies: frequencies.to_vec(),
        angles: angles.to_vec(),
        incidence,
        amplitude,
        reference: vec![layout.len() as f64; frequencies.len()],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainLobe {
    pub angle: f64,
    pub gain_db: f64,
}

/// Direction of maximum power with three-point parabolic refinement. Values
/// within 1e-12 relative of the maximum count as ties and resolve to the
/// smallest |θ|.
pub fn main_lobe(slice: &PatternSlice<'_>) -> Result<MainLobe> {
    let n = slice.angles.len();
    if n == 0 || slice.amplitude.len() != n {
        return Err(invalid("empty pattern"));
    }
    let power: Vec<f64> = (0..n).map(|i| slice.normalized(i).norm_sqr()).collect();
    let peak = power.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let best = (0..n)
        .filter(|&i| power[i] >= peak * (1.0 - 1e-12))
        .min_by(|&a, &b| {
            slice.angles[a]
                .abs()
                .partial_cmp(&slice.angles[b].abs())
                .unwrap()
                .then(a.cmp(&b))
        })
        .unwrap();

    let mut angle = slice.angles[best];
    let mut p = power[best];
    if best > 0 && best + 1 < n {
        let (pm, p0, pp) = (power[best - 1], power[best], power[best + 1]);
        let denom = pm - 2.0 * p0 + pp;
        if denom < -1e-12 * p0.max(f64::MIN_POSITIVE) {
            let delta = (0.5 * (pm - pp) / denom).clamp(-0.5, 0.5);
            let step = 0.5 * (slice.angles[best + 1] - slice.angles[best - 1]);
            angle += delta * step;
            p = p0 - 0.25 * (pm - pp) * delta;
        }
    }
    Ok(MainLobe {
        angle,
        gain_db: power_db(p),
    })
}

/// Steered-to-specular power ratio in dB at normal incidence.
pub fn specular_suppression(layout: &ArrayLayout, f0: f64) -> Result<f64> {
    let angles = [layout.steering_angle, 0.0];
    let pattern = array_factor(layout, f0, &angles, 0.0)?;
    let floor = 1e-30;
    let steered = pattern.normalized(0, 0).norm_sqr().max(floor);
    let specular = pattern.normalized(0, 1).norm_sqr().max(floor);
    Ok((10.0 * (steered / specular).log10()).clamp(DB_FLOOR, -DB_FLOOR))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReflectanceSpectrum {
    pub frequencies: Vec<f64>,
    pub reflectance: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dip {
    pub frequency: f64,
    pub reflectance: f64,
}

impl ReflectanceSpectrum {
    /// Minimum of the spectrum, refined by a parabola through the lowest
    /// sample and its neighbours.
    pub fn dip(&self) -> Option<Dip> {
        let n = self.reflectance.len();
        let i = (0..n).min_by(|&a, &b| {
            self.reflectance[a].partial_cmp(&self.reflectance[b]).unwrap()
        })?;
        let mut dip = Dip {
            frequency: self.frequencies[i],
            reflectance: self.reflectance[i],
        };
        if i > 0 && i + 1 < n {
            let (rm, r0, rp) = (self.reflectance[i - 1], self.reflectance[i], self.reflectance[i + 1]);
            let denom = rm - 2.0 * r0 + rp;
            if denom > 0.0 {
                let delta = (0.5 * (rm - rp) / denom).clamp(-0.5, 0.5);
                let step = 0.5 * (self.frequencies[i + 1] - self.frequencies[i - 1]);
                dip.frequency += delta * step;
                dip.reflectance = r0 - 0.25 * (rm - rp) * delta;
            }
        }
        Some(dip)
    }

    /// Full width of the dip at half its depth below unit reflectance, or
    /// `None` when either edge lies outside the grid.
    pub fn width_at_half_depth(&self) -> Option<f64> {
        let n = self.reflectance.len();
        let i = (0..n).min_by(|&a, &b| {
            self.reflectance[a].partial_cmp(&self.reflectance[b]).unwrap()
        })?;
        let level = 1.0 - 0.5 * (1.0 - self.reflectance[i]);
        let r = &self.reflectance;
        let f = &self.frequencies;
        let cross = |a: usize, b: usize| {
            let t = (level - r[a]) / (r[b] - r[a]);
            f[a] + t * (f[b] - f[a])
        };
        let left = (1..=i).rev().find(|&k| r[k - 1] >= level).map(|k| cross(k, k - 1))?;
        let right = (i..n - 1).find(|&k| r[k + 1] >= level).map(|k| cross(k, k + 1))?;
        Some(right - left)
    }
}

/// Reflectance seen by a detector at `detector_angle` when the surface is
/// illuminated from the mirror direction, i.e. the detector sits in the
/// specular beam:
///
/// `R(f) = |(1 - η L(f)) + η L(f) AF_norm(θ_det, f)|²`.
pub fn reflectance_spectrum(
    layout: &ArrayLayout,
    response: &ElementResponse,
    frequencies: &[f64],
    detector_angle: f64,
) -> Result<ReflectanceSpectrum> {
    check_pattern_inputs(layout, detector_angle)?;
    let mut reflectance = Vec::with_capacity(frequencies.len());
    for &f in frequencies {
        if !(f > 0.0) {
            return Err(invalid("frequencies must be positive"));
        }
        let eta = response.coupling(f);
        let af = if eta == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            let (x, w) = column_weights(layout, f);
            array_factor_weighted(&x, &w, wavenumber(f), &[detector_angle], detector_angle)[0]
                / layout.len() as f64
        };
        let field = Complex64::new(1.0 - eta, 0.0) + eta * af;
        reflectance.push(field.norm_sqr());
    }
    Ok(ReflectanceSpectrum {
        frequencies: frequencies.to_vec(),
        reflectance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{generate_layout, perturb_layout, PerturbMode};
    use crate::patch::SubstrateSpec;
    use approx::assert_relative_eq;

    const THZ: f64 = 1e12;

    fn designed(cols: usize) -> ArrayLayout {
        generate_layout(1, cols, THZ, &SubstrateSpec::su8(), PI / 2.0).unwrap()
    }

    fn uniform(cols: usize) -> ArrayLayout {
        generate_layout(1, cols, THZ, &SubstrateSpec::su8(), 0.0).unwrap()
    }

    #[test]
    fn uniform_layout_reflects_specularly() {
        let p = array_factor(&uniform(16), THZ, &default_angle_grid(), 0.0).unwrap();
        let lobe = p.main_lobe(0).unwrap();
        assert!(lobe.angle.abs() < 1e-9);
        assert!(lobe.gain_db.abs() < 1e-9);
    }

    #[test]
    fn designed_layout_steers_to_thirty_degrees() {
        let p = array_factor(&designed(85), THZ, &default_angle_grid(), 0.0).unwrap();
        let lobe = p.main_lobe(0).unwrap();
        assert!((lobe.angle.to_degrees() - 30.0).abs() < 0.5, "{}", lobe.angle.to_degrees());
    }

    #[test]
    fn single_element_is_flat_and_picks_broadside() {
        let p = array_factor(&designed(1), THZ, &default_angle_grid(), 0.0).unwrap();
        let lobe = p.main_lobe(0).unwrap();
        assert_eq!(lobe.angle, 0.0);
        assert!(lobe.gain_db.abs() < 1e-9);
    }

    #[test]
    fn oblique_incidence_moves_specular_lobe() {
        let inc = 20f64.to_radians();
        let p = array_factor(&uniform(32), THZ, &default_angle_grid(), inc).unwrap();
        assert!((p.main_lobe(0).unwrap().angle - inc).abs() < 1e-3);
    }

    #[test]
    fn suppression_cases() {
        assert!(specular_suppression(&uniform(16), THZ).unwrap() <= 0.0);
        assert!(specular_suppression(&designed(16), THZ).unwrap() >= 20.0);
        assert!(specular_suppression(&designed(17), THZ).unwrap() >= 20.0);
        let two = specular_suppression(&designed(2), THZ).unwrap();
        assert!(two.is_finite() && two >= DB_FLOOR);
    }

    #[test]
    fn polarization_law() {
        assert_eq!(polarization_coupling(0.0), 1.0);
        assert!(polarization_coupling(PI / 2.0) < 1e-30);
        assert_relative_eq!(polarization_coupling(PI / 4.0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn cross_polarised_spectrum_is_flat() {
        let l = designed(16);
        let r = ElementResponse::for_layout(&l, 6.0, 0.9).unwrap().with_polarization(PI / 2.0);
        let f = frequency_grid(0.5 * THZ, 1.5 * THZ, 101).unwrap();
        let s = reflectance_spectrum(&l, &r, &f, 0.0).unwrap();
        assert!(s.reflectance.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        let off = ElementResponse::new(THZ, 6.0, 0.0).unwrap();
        let s = reflectance_spectrum(&l, &off, &f, 0.0).unwrap();
        assert!(s.reflectance.iter().all(|&x| x == 1.0));
    }

    #[test]
    fn nominal_dip_sits_at_design_frequency() {
        let l = designed(85);
        let r = ElementResponse::for_layout(&l, DEFAULT_QUALITY_FACTOR, DEFAULT_PEAK_COUPLING).unwrap();
        let f = frequency_grid(0.6 * THZ, 1.4 * THZ, 401).unwrap();
        let dip = reflectance_spectrum(&l, &r, &f, 0.0).unwrap().dip().unwrap();
        assert!((dip.frequency - THZ).abs() < 0.02 * THZ, "{}", dip.frequency);
    }

    #[test]
    fn scaled_layout_dip_moves_down() {
        let l = perturb_layout(&designed(85), 0.10, PerturbMode::UniformScale, 0).unwrap();
        let r = ElementResponse::for_layout(&l, DEFAULT_QUALITY_FACTOR, DEFAULT_PEAK_COUPLING).unwrap();
        let f = frequency_grid(0.6 * THZ, 1.4 * THZ, 401).unwrap();
        let dip = reflectance_spectrum(&l, &r, &f, 0.0).unwrap().dip().unwrap();
        assert!((dip.frequency - 0.9 * THZ).abs() < 0.05 * THZ, "{}", dip.frequency);
    }

    #[test]
    fn gain_lookup() {
        let l = designed(85);
        let p = array_factor(&l, THZ, &default_angle_grid(), 0.0).unwrap();
        let g = p.gain_db_at(THZ, 30f64.to_radians()).unwrap();
        assert!(g > -0.5);
        assert!(p.gain_db_at(1.01 * THZ, 0.0).is_err());
        let narrow = array_factor(&l, THZ, &[0.0, 0.1], 0.0).unwrap();
        assert!(narrow.gain_db_at(THZ, 0.5).is_err());
        assert!(narrow.gain_db_at(THZ, 0.05).is_ok());
    }

    #[test]
    fn empty_layout_rejected() {
        let mut l = designed(4);
        l.elements.clear();
        assert!(array_factor(&l, THZ, &[0.0], 0.0).is_err());
    }

    #[test]
    fn response_validation() {
        assert!(ElementResponse::new(THZ, 0.0, 0.5).is_err());
        assert!(ElementResponse::new(THZ, 5.0, 1.5).is_err());
        let r = ElementResponse::new(THZ, 5.0, 0.5).unwrap();
        assert_eq!(r.lorentzian(THZ), 1.0);
        assert_relative_eq!(r.lorentzian(1.1 * THZ), 0.5, epsilon = 1e-12);
    }
}
