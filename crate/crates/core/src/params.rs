use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Base of the logarithm used in the statistical-deviation term of the
/// finite-key bound. The constant (bit-counting) term is always base 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    /// Natural logarithm (Serfling-style tail bound provenance).
    #[default]
    Natural,
    /// Base-2 logarithm.
    Two,
}

impl LogBase {
    pub fn log_inv(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => -x.ln(),
            LogBase::Two => -x.log2(),
        }
    }
}

/// Full system parameter record. Defaults reproduce the reference
/// parameter set used throughout the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Entangled pair emission rate (Hz).
    pub s: f64,
    /// Transmission period per ground station (s).
    pub t_pass: f64,
    /// Detector efficiency.
    pub eta_det: f64,
    /// Combined memory write-in + read-out efficiency.
    pub eta_mem: f64,
    /// Per-memory dephasing probability.
    pub e_m: f64,
    /// Misalignment error probability (includes source infidelity).
    pub eps_m: f64,
    /// Detector-imbalance factor.
    pub delta: f64,
    /// Bell-state measurement ideality, in [0, 1].
    pub lambda_bsm: f64,
    /// Error-correction inefficiency factor, >= 1.
    pub f_e: f64,
    /// Detection time window (s). Carried for converting externally
    /// supplied noise rates (Hz) into per-window probabilities.
    pub tau_win: f64,
    /// Memory noise probability per storage trial.
    pub p_n: f64,
    /// Background click probability per window.
    pub p_bg: f64,
    /// Detector dark-count probability per window.
    pub p_dc: f64,
    /// Secrecy parameter.
    pub eps_sec: f64,
    /// Correctness parameter.
    pub eps_corr: f64,
    /// Include the incoherent-noise term in the single-memory X-basis
    /// QBER. Off by default: the single-memory X expression is used
    /// literally as printed; the switch exists for sensitivity studies.
    pub one_memory_ex_noise_term: bool,
    /// Logarithm base of the deviation term in the finite-key bound.
    pub deviation_log_base: LogBase,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            s: 5.0e6,
            t_pass: 240.0,
            eta_det: 0.8,
            eta_mem: 0.6,
            e_m: 0.05,
            eps_m: 0.02,
            delta: 0.02,
            lambda_bsm: 0.98,
            f_e: 1.1,
            tau_win: 200.0e-9,
            p_n: 1.0e-3,
            p_bg: 6.4e-7,
            p_dc: 1.0e-7,
            eps_sec: 5.0e-12,
            eps_corr: 5.0e-12,
            one_memory_ex_noise_term: false,
            deviation_log_base: LogBase::Natural,
        }
    }
}

fn check_prob(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
        return Err(Error::InvalidParam {
            name,
            reason: format!("must be a probability in [0, 1], got {v}"),
        });
    }
    Ok(())
}

impl SystemParams {
    /// Validate all field invariants.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_det", self.eta_det),
            ("eta_mem", self.eta_mem),
            ("e_m", self.e_m),
            ("eps_m", self.eps_m),
            ("lambda_bsm", self.lambda_bsm),
            ("p_n", self.p_n),
            ("p_bg", self.p_bg),
            ("p_dc", self.p_dc),
        ] {
            check_prob(name, v)?;
        }
        for (name, v) in [("eps_sec", self.eps_sec), ("eps_corr", self.eps_corr)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParam {
                    name,
                    reason: format!("must be in (0, 1), got {v}"),
                });
            }
        }
        if !(self.s > 0.0) {
            return Err(Error::InvalidParam { name: "s", reason: "must be > 0".into() });
        }
        if !(self.t_pass > 0.0) {
            return Err(Error::InvalidParam { name: "t_pass", reason: "must be > 0".into() });
        }
        if !(self.f_e >= 1.0) {
            return Err(Error::InvalidParam { name: "f_e", reason: "must be >= 1".into() });
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(Error::InvalidParam { name: "delta", reason: "must be in [0, 1)".into() });
        }
        if !(self.tau_win > 0.0) {
            return Err(Error::InvalidParam { name: "tau_win", reason: "must be > 0".into() });
        }
        Ok(())
    }

    /// Convert an externally supplied noise rate (Hz) into a per-window
    /// click probability.
    pub fn window_probability(&self, rate_hz: f64) -> f64 {
        (rate_hz * self.tau_win).clamp(0.0, 1.0)
    }

    /// Load parameters from a flat TOML key-value file. Keys mirror the
    /// field names; missing keys keep their defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let p: SystemParams = toml::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn from_toml_file(path: &std::path::Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}
