//! Radio-chain budget for the transmitter → surface → receiver path.
//!
//! The path is modelled as a single Friis hop over the total distance, with
//! the surface contributing a relative pattern gain taken from its
//! [`RadiationPattern`] at the receiver direction. Absolute surface
//! scattering gain is not modelled; only differences between surfaces or
//! receiver angles are meaningful.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::wavefront::RadiationPattern;
use crate::SPEED_OF_LIGHT;

/// Thermal noise density at 290 K.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

pub const BAND_LO_HZ: f64 = 1.0e12;
pub const BAND_HI_HZ: f64 = 1.05e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadioChainSpec {
    pub tx_power_dbm: f64,
    pub tx_antenna_gain_dbi: f64,
    pub rx_antenna_gain_dbi: f64,
    pub mixer_conversion_loss_db: f64,
    pub if_lna_gain_tx_db: f64,
    pub if_lna_gain_rx_db: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
    pub carrier_frequency_hz: f64,
}

impl Default for RadioChainSpec {
    /// The 1–1.05 THz testbed: −12 dBm at the horn, 26 dBi horns, 14 dB DSB
    /// mixers, 1 dB / 12 dB IF amplifiers. Noise figure is not published and
    /// defaults to 10 dB.
    fn default() -> Self {
        RadioChainSpec {
            tx_power_dbm: -12.0,
            tx_antenna_gain_dbi: 26.0,
            rx_antenna_gain_dbi: 26.0,
            mixer_conversion_loss_db: 14.0,
            if_lna_gain_tx_db: 1.0,
            if_lna_gain_rx_db: 12.0,
            noise_figure_db: 10.0,
            bandwidth_hz: 500e6,
            carrier_frequency_hz: 1.0e12,
        }
    }
}

impl RadioChainSpec {
    pub fn check(&self) -> Result<()> {
        if !(self.bandwidth_hz > 0.0) {
            return Err(invalid("chain bandwidth must be positive"));
        }
        if !(self.carrier_frequency_hz > 0.0) {
            return Err(invalid("carrier frequency must be positive"));
        }
        if !(BAND_LO_HZ..=BAND_HI_HZ).contains(&self.carrier_frequency_hz) {
            log::warn!(
                "carrier {:.4} THz outside the 1-1.05 THz window",
                self.carrier_frequency_hz / 1e12
            );
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkGeometry {
    pub d_tx_ris_m: f64,
    pub d_ris_rx_m: f64,
    /// Receiver direction seen from the surface, radians from the normal.
    pub rx_angle: f64,
    pub incidence_angle: f64,
    /// Medium attenuation coefficient in 1/m (field-power e-folding).
    #[serde(default)]
    pub medium_loss_coefficient: f64,
}

impl Default for LinkGeometry {
    fn default() -> Self {
        LinkGeometry {
            d_tx_ris_m: 0.25,
            d_ris_rx_m: 0.25,
            rx_angle: 30f64.to_radians(),
            incidence_angle: 0.0,
            medium_loss_coefficient: 0.0,
        }
    }
}

impl LinkGeometry {
    pub fn total_distance(&self) -> f64 {
        self.d_tx_ris_m + self.d_ris_rx_m
    }

    pub fn check(&self) -> Result<()> {
        if !(self.d_tx_ris_m > 0.0 && self.d_ris_rx_m > 0.0) {
            return Err(invalid("link distances must be positive"));
        }
        if !(self.medium_loss_coefficient >= 0.0) {
            return Err(invalid("medium loss coefficient must be non-negative"));
        }
        Ok(())
    }

    /// Copy with the total distance set to `total`, keeping the leg ratio.
    pub fn with_total_distance(&self, total: f64) -> Self {
        let r = self.d_tx_ris_m / self.total_distance();
        LinkGeometry {
            d_tx_ris_m: total * r,
            d_ris_rx_m: total * (1.0 - r),
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub received_power_dbm: f64,
    pub noise_power_dbm: f64,
    pub snr_db: f64,
    pub surface_gain_db: f64,
    pub path_loss_db: f64,
    pub medium_loss_db: f64,
    /// Received power referred to the IF output (after the downconverter).
    pub if_power_dbm: f64,
}

impl fmt::Display for LinkReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<22}{:>12.3} dB", "path loss", self.path_loss_db)?;
        writeln!(f, "{:<22}{:>12.3} dB", "medium loss", self.medium_loss_db)?;
        writeln!(f, "{:<22}{:>12.3} dB", "surface gain", self.surface_gain_db)?;
        writeln!(f, "{:<22}{:>12.3} dBm", "received power", self.received_power_dbm)?;
        writeln!(f, "{:<22}{:>12.3} dBm", "IF power", self.if_power_dbm)?;
        writeln!(f, "{:<22}{:>12.3} dBm", "noise power", self.noise_power_dbm)?;
        write!(f, "{:<22}{:>12.3} dB", "SNR", self.snr_db)
    }
}

pub fn free_space_path_loss(distance: f64, frequency: f64) -> Result<f64> {
    if !(distance > 0.0) || !(frequency > 0.0) {
        return Err(invalid("path loss needs positive distance and frequency"));
    }
    Ok(20.0 * (4.0 * PI * distance * frequency / SPEED_OF_LIGHT).log10())
}

pub fn medium_loss(distance: f64, coefficient: f64) -> Result<f64> {
    if !(distance >= 0.0) || !(coefficient >= 0.0) {
        return Err(invalid("medium loss needs non-negative distance and coefficient"));
    }
    Ok(10.0 * std::f64::consts::E.log10() * coefficient * distance)
}

pub fn noise_power_dbm(chain: &RadioChainSpec) -> f64 {
    THERMAL_NOISE_DBM_PER_HZ + 10.0 * chain.bandwidth_hz.log10() + chain.noise_figure_db
}

pub fn link_report(
    chain: &RadioChainSpec,
    geometry: &LinkGeometry,
    pattern: &RadiationPattern,
) -> Result<LinkReport> {
    chain.check()?;
    geometry.check()?;
    let d = geometry.total_distance();
    let surface_gain_db = pattern.gain_db_at(chain.carrier_frequency_hz, geometry.rx_angle)?;
    let path_loss_db = free_space_path_loss(d, chain.carrier_frequency_hz)?;
    let medium_loss_db = medium_loss(d, geometry.medium_loss_coefficient)?;
    let received_power_dbm = chain.tx_power_dbm + chain.tx_antenna_gain_dbi
        + chain.rx_antenna_gain_dbi
        - path_loss_db
        - medium_loss_db
        + surface_gain_db;
    let noise_power_dbm = noise_power_dbm(chain);
    Ok(LinkReport {
        received_power_dbm,
        noise_power_dbm,
        snr_db: received_power_dbm - noise_power_dbm,
        surface_gain_db,
        path_loss_db,
        medium_loss_db,
        if_power_dbm: received_power_dbm - chain.mixer_conversion_loss_db
            + chain.if_lna_gain_rx_db,
    })
}

/// Solves for the total distance at which `link_report` yields `target_snr_db`,
/// by bisection on the (monotone) SNR-versus-distance curve between 1 µm
/// and 100 km.
pub fn calibrate_distance(
    chain: &RadioChainSpec,
    geometry: &LinkGeometry,
    pattern: &RadiationPattern,
    target_snr_db: f64,
) -> Result<LinkGeometry> {
    let snr_at = |d: f64| link_report(chain, &geometry.with_total_distance(d), pattern).map(|r| r.snr_db);
    let (mut lo, mut hi) = (1e-6_f64, 1e5_f64);
    if snr_at(lo)? < target_snr_db || snr_at(hi)? > target_snr_db {
        return Err(invalid(format!(
            "target SNR {target_snr_db} dB is not reachable between {lo} m and {hi} m"
        )));
    }
    // geometric bisection; SNR falls with distance
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if snr_at(mid)? > target_snr_db {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    Ok(geometry.with_total_distance((lo * hi).sqrt()))
}
