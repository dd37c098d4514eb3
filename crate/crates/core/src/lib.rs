//! Design automation and link simulation for fixed metallic reflectarrays in
//! the low-terahertz band.
//!
//! The crate is organised along the design flow:
//!
//! * [`patch`] sizes the resonant patch from the substrate and design frequency.
//! * [`layout`] places elements on a half-wavelength grid, assigns progressive
//!   phase delays and realises them as delay stubs; [`mask`] exports the result.
//! * [`wavefront`] predicts the reflected far field and the specular
//!   reflectance spectrum of a layout.
//! * [`link`] runs the radio-chain budget over the reflected path.
//! * [`comms`] simulates multi-tone probes and QPSK frames over that link.
//! * [`config`] holds the JSON project configuration shared by the CLI.

pub mod comms;
pub mod config;
pub mod error;
pub mod layout;
pub mod link;
pub mod mask;
pub mod patch;
pub mod wavefront;

pub use error::{Error, Result};

/// Propagation speed used throughout the design flow, in m/s.
///
/// This is the rounded 3e8 m/s value: with it the half-wavelength pitch at
/// 1 THz is exactly 150 µm. The exact value would shift every synthesized
/// dimension by about 0.07 %.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Free-space wave number 2πf/c in rad/m.
pub fn wavenumber(frequency: f64) -> f64 {
    2.0 * std::f64::consts::PI * frequency / SPEED_OF_LIGHT
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/patch.md")]
    pub struct Patch;
    #[doc = include_str!("../../../book/src/layout.md")]
    pub struct Layout;
    #[doc = include_str!("../../../book/src/wavefront.md")]
    pub struct Wavefront;
    #[doc = include_str!("../../../book/src/link.md")]
    pub struct Link;
    #[doc = include_str!("../../../book/src/comms.md")]
    pub struct Comms;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
