//! Channel and detection link budget: dB conversions, incoherent click
//! probability, total detection probability and real-click fraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Tolerated floating-point drift before clamping emits a warning.
const CLAMP_WARN: f64 = 1e-9;

/// Whether the memory read-out efficiency applies to a downlink arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arm {
    /// The photon passes through a quantum memory before detection.
    WithMemory,
    /// Direct downlink, no memory in the optical path.
    Direct,
}

/// One channel point of the optical link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Channel loss (dB).
    pub loss_db: f64,
    /// Linear channel transmittance.
    pub eta_ch: f64,
    /// Total detection probability.
    pub eta: f64,
    /// Incoherent click probability per detection window.
    pub p_d: f64,
    /// Real-click fraction.
    pub alpha: f64,
    /// Which efficiency chain applies.
    pub arm: Arm,
    /// Set when eta = 0 and p_d = 0: no click of any kind can occur and
    /// the real-click fraction is undefined (reported as 0).
    pub no_clicks: bool,
}

/// Clamp a probability to [0, 1], warning if the excursion exceeds
/// floating-point drift.
pub(crate) fn clamp_prob(label: &str, x: f64) -> f64 {
    if x < -CLAMP_WARN || x > 1.0 + CLAMP_WARN {
        log::warn!("{label} = {x} clamped to [0, 1] beyond fp drift");
    }
    x.clamp(0.0, 1.0)
}

/// Convert a channel loss in dB to a linear transmittance.
pub fn db_to_linear(loss_db: f64) -> Result<f64> {
    if !loss_db.is_finite() || loss_db < 0.0 {
        return Err(Error::InvalidInput(format!(
            "loss_db must be finite and >= 0 (negative loss signals gain), got {loss_db}"
        )));
    }
    Ok(10f64.powf(-loss_db / 10.0))
}

/// Inverse of [`db_to_linear`].
pub fn linear_to_db(eta_ch: f64) -> Result<f64> {
    if !(eta_ch > 0.0 && eta_ch <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "transmittance must be in (0, 1], got {eta_ch}"
        )));
    }
    Ok(-10.0 * eta_ch.log10())
}

/// Probability of any incoherent click per detection window:
/// the channel-attenuated memory noise plus background and dark counts.
pub fn incoherent_click_prob(p: &SystemParams, eta_ch: f64) -> f64 {
    clamp_prob("p_d", eta_ch * p.p_n + p.p_bg + p.p_dc)
}

/// Fraction of registered clicks caused by a real signal photon:
/// alpha = eta (1 - p_d) / (1 - (1 - eta)(1 - p_d)^2).
///
/// Returns 0 when no click of any kind is possible (eta = p_d = 0).
pub fn real_click_fraction(eta: f64, p_d: f64) -> f64 {
    if eta == 0.0 && p_d == 0.0 {
        return 0.0;
    }
    let denom = 1.0 - (1.0 - eta) * (1.0 - p_d) * (1.0 - p_d);
    clamp_prob("alpha", eta * (1.0 - p_d) / denom)
}

/// Assemble the full link budget for one downlink arm at a given loss.
pub fn link_budget(p: &SystemParams, loss_db: f64, arm: Arm) -> Result<LinkBudget> {
    let eta_ch = db_to_linear(loss_db)?;
    let eta = match arm {
        Arm::WithMemory => eta_ch * p.eta_det * p.eta_mem,
        Arm::Direct => eta_ch * p.eta_det,
    };
    let p_d = incoherent_click_prob(p, eta_ch);
    let no_clicks = eta == 0.0 && p_d == 0.0;
    Ok(LinkBudget {
        loss_db,
        eta_ch,
        eta,
        p_d,
        alpha: real_click_fraction(eta, p_d),
        arm,
        no_clicks,
    })
}

impl LinkBudget {
    /// Same budget with the composed incoherent click probability replaced
    /// (noise-sweep support; eta is held fixed).
    pub fn with_p_d_override(&self, p_d: f64) -> LinkBudget {
        LinkBudget {
            p_d,
            alpha: real_click_fraction(self.eta, p_d),
            no_clicks: self.eta == 0.0 && p_d == 0.0,
            ..*self
        }
    }

    /// Probability that at least one detector clicks in a window.
    pub fn click_prob(&self) -> f64 {
        clamp_prob(
            "click_prob",
            1.0 - (1.0 - self.eta) * (1.0 - self.p_d) * (1.0 - self.p_d),
        )
    }
}
