//! Best-case comparison against a memory-free dual downlink from
//! geostationary orbit: diffraction-footprint channel capture, asymptotic
//! entanglement-QKD rate, and the annual throughput ratio.
//!
//! The channel is an aperture-over-footprint square law with a flat
//! atmospheric factor; pointing, tracking and turbulence are deliberately
//! excluded, so every number here is an upper bound on the GEO side.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keyrate::binary_entropy;
use crate::link::real_click_fraction;
use crate::params::SystemParams;

pub const SECONDS_PER_YEAR: f64 = 3.156e7;

/// Geostationary dual-downlink scenario parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeoParams {
    /// Satellite-ground range (m).
    pub altitude: f64,
    /// Full transmit beam divergence (rad).
    pub divergence: f64,
    /// Sender telescope aperture (m).
    pub d_tx: f64,
    /// Receiver telescope aperture (m).
    pub d_rx: f64,
    /// Pair source rate (pairs/s).
    pub source_rate: f64,
    /// Incoherent click probability per window.
    pub p_d: f64,
    /// Zenith atmospheric transmittance at the signal wavelength.
    pub atm_transmittance: f64,
}

impl Default for GeoParams {
    fn default() -> Self {
        Self {
            altitude: 3.6e7,
            divergence: 5.0e-6,
            d_tx: 0.3,
            d_rx: 2.5,
            source_rate: 1.0e9,
            p_d: 1.0e-6,
            atm_transmittance: 0.8,
        }
    }
}

impl GeoParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("altitude", self.altitude),
            ("divergence", self.divergence),
            ("d_tx", self.d_tx),
            ("d_rx", self.d_rx),
            ("source_rate", self.source_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParam { name, reason: format!("must be > 0, got {v}") });
            }
        }
        if !(self.atm_transmittance > 0.0 && self.atm_transmittance <= 1.0) {
            return Err(Error::InvalidParam {
                name: "atm_transmittance",
                reason: "must be in (0, 1]".into(),
            });
        }
        if !(0.0..=1.0).contains(&self.p_d) {
            return Err(Error::InvalidParam { name: "p_d", reason: "must be in [0, 1]".into() });
        }
        Ok(())
    }
}

/// Annual key throughput comparison between the stored-qubit satellite
/// scheme and the continuously operating GEO downlink.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnualComparison {
    pub flyover_pairs_per_year: f64,
    pub key_per_pass: f64,
    pub annual_key_2qm: f64,
    pub annual_key_geo: f64,
    /// annual_key_2qm / annual_key_geo; infinite when the GEO side is 0.
    pub gain_ratio: f64,
}

/// Single-channel transmittance: receiver aperture over diffraction
/// footprint, squared and capped, times the atmospheric factor.
pub fn geo_channel_transmittance(g: &GeoParams) -> f64 {
    let footprint = g.divergence * g.altitude;
    let capture: f64 = (g.d_rx / footprint).powi(2).min(1.0);
    capture * g.atm_transmittance
}

/// Asymptotic secret bits per second of the memory-free dual downlink.
///
/// Both links see the same channel; the coincidence rate is
/// `source_rate * eta_1 * eta_2` with a 1/2 sifting factor, and the QBER
/// follows the incoherent-click structure with no memory or swap errors.
pub fn geo_asymptotic_key_rate(g: &GeoParams, p: &SystemParams) -> f64 {
    let eta_link = geo_channel_transmittance(g) * p.eta_det;
    let coincidence = g.source_rate * eta_link * eta_link;
    let alpha = real_click_fraction(eta_link, g.p_d);
    let aa = alpha * alpha;
    let qber = aa * p.eps_m + 0.5 * (1.0 - aa);
    if qber >= 0.5 {
        return 0.0;
    }
    let rate = 1.0 - binary_entropy(qber) - p.f_e * binary_entropy(qber);
    0.5 * coincidence * rate.max(0.0)
}

/// Annual totals and the throughput gain ratio.
pub fn annual_comparison(
    key_per_pass: f64,
    geo_rate: f64,
    flyovers: f64,
    seconds_per_year: f64,
) -> Result<AnnualComparison> {
    if key_per_pass < 0.0 || geo_rate < 0.0 || flyovers < 0.0 || seconds_per_year < 0.0 {
        return Err(Error::InvalidInput("annual comparison inputs must be >= 0".into()));
    }
    let annual_key_2qm = key_per_pass * flyovers;
    let annual_key_geo = geo_rate * seconds_per_year;
    let gain_ratio =
        if annual_key_geo > 0.0 { annual_key_2qm / annual_key_geo } else { f64::INFINITY };
    Ok(AnnualComparison {
        flyover_pairs_per_year: flyovers,
        key_per_pass,
        annual_key_2qm,
        annual_key_geo,
        gain_ratio,
    })
}
