//! Quantum bit error rates for the one- and two-memory protocol variants,
//! memory dephasing combination, and the Bell-state-measurement fidelity.

use serde::{Deserialize, Serialize};

use crate::link::clamp_prob;
use crate::params::SystemParams;

/// Which protocol variant a quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    OneMemory,
    TwoMemory,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::OneMemory => "1qm",
            Scheme::TwoMemory => "2qm",
        }
    }
}

/// Basis error rates for a given scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QberPair {
    pub e_x: f64,
    pub e_z: f64,
    pub scheme: Scheme,
}

/// Combined dephasing of two memories:
/// eps_dp = e1 (1 - e2) + (1 - e1) e2.
///
/// Reduces to `e1` when `e2 = 0` (single-memory case).
pub fn combined_dephasing(e_m1: f64, e_m2: f64) -> f64 {
    clamp_prob("eps_dp", e_m1 * (1.0 - e_m2) + (1.0 - e_m1) * e_m2)
}

/// QBERs for the two-memory scheme with a non-ideal swap.
///
/// The coherent (real-real, good-swap) fraction lambda * alpha_a * alpha_b
/// carries the misalignment/dephasing error mix; everything else is a
/// uniformly random outcome contributing 1/2.
pub fn qber_two_memory(alpha_a: f64, alpha_b: f64, p: &SystemParams) -> QberPair {
    let eps_dp = combined_dephasing(p.e_m, p.e_m);
    let coherent = p.lambda_bsm * alpha_a * alpha_b;
    let e_x_coh = p.eps_m * (1.0 - eps_dp) + (1.0 - p.eps_m) * eps_dp;
    QberPair {
        e_x: clamp_prob("e_x", coherent * e_x_coh + 0.5 * (1.0 - coherent)),
        e_z: clamp_prob("e_z", coherent * p.eps_m + 0.5 * (1.0 - coherent)),
        scheme: Scheme::TwoMemory,
    }
}

/// Error probability of a coherent X-basis outcome, per scheme.
pub fn coherent_x_error(p: &SystemParams, scheme: Scheme) -> f64 {
    let eps_dp = match scheme {
        Scheme::TwoMemory => combined_dephasing(p.e_m, p.e_m),
        Scheme::OneMemory => p.e_m,
    };
    p.eps_m * (1.0 - eps_dp) + (1.0 - p.eps_m) * eps_dp
}

/// QBERs for the single-memory scheme (no swap; arm A direct, arm B
/// through the memory).
///
/// The X-basis expression is used literally as printed for this scheme:
/// incoherent coincidences contribute no X error unless
/// `one_memory_ex_noise_term` is set, which adds the same (1 - aa)/2
/// term the Z basis carries.
pub fn qber_one_memory(alpha_a: f64, alpha_b: f64, p: &SystemParams) -> QberPair {
    let aa = alpha_a * alpha_b;
    let mut e_x = aa * (p.eps_m * (1.0 - p.e_m) + p.e_m * (1.0 - p.eps_m));
    if p.one_memory_ex_noise_term {
        e_x += 0.5 * (1.0 - aa);
    }
    QberPair {
        e_x: clamp_prob("e_x", e_x),
        e_z: clamp_prob("e_z", aa * p.eps_m + 0.5 * (1.0 - aa)),
        scheme: Scheme::OneMemory,
    }
}

/// Fidelity of the Bell-state measurement: F = sqrt((3 lambda + 1) / 4).
pub fn bsm_fidelity(lambda_bsm: f64) -> f64 {
    ((3.0 * lambda_bsm + 1.0) / 4.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dephasing_combination() {
        assert_eq!(combined_dephasing(0.0, 0.0), 0.0);
        assert_relative_eq!(combined_dephasing(0.05, 0.05), 0.095, max_relative = 1e-12);
        for e in [0.0, 0.01, 0.3, 0.5] {
            assert_relative_eq!(combined_dephasing(e, 0.0), e, max_relative = 1e-12);
            // symmetry
            assert_eq!(combined_dephasing(e, 0.17), combined_dephasing(0.17, e));
        }
    }

    #[test]
    fn two_memory_examples() {
        let mut p = SystemParams::default();
        p.e_m = 0.0;
        p.eps_m = 0.0;
        p.lambda_bsm = 1.0;
        let q = qber_two_memory(1.0, 1.0, &p);
        assert_eq!((q.e_x, q.e_z), (0.0, 0.0));

        let p = SystemParams::default();
        let q = qber_two_memory(0.0, 0.7, &p);
        assert_eq!((q.e_x, q.e_z), (0.5, 0.5));

        let q = qber_two_memory(0.99281, 0.99281, &p);
        assert_relative_eq!(q.e_z, 0.03634, max_relative = 1e-3);
        assert_relative_eq!(q.e_x, 0.12444, max_relative = 1e-3);
    }

    #[test]
    fn one_memory_examples() {
        let mut p = SystemParams::default();
        p.e_m = 0.0;
        p.eps_m = 0.0;
        let q = qber_one_memory(1.0, 1.0, &p);
        assert_eq!((q.e_x, q.e_z), (0.0, 0.0));

        let p = SystemParams::default();
        let q = qber_one_memory(0.0, 1.0, &p);
        assert_eq!((q.e_x, q.e_z), (0.0, 0.5));

        let q = qber_one_memory(0.99393, 0.99393, &p);
        assert_relative_eq!(q.e_x, 0.06718, max_relative = 1e-3);
        assert_relative_eq!(q.e_z, 0.02581, max_relative = 1e-3);
    }

    #[test]
    fn one_memory_noise_term_switch() {
        let mut p = SystemParams::default();
        p.one_memory_ex_noise_term = true;
        let with = qber_one_memory(0.9, 0.9, &p);
        p.one_memory_ex_noise_term = false;
        let without = qber_one_memory(0.9, 0.9, &p);
        assert_relative_eq!(with.e_x - without.e_x, 0.5 * (1.0 - 0.81), max_relative = 1e-12);
        assert_eq!(with.e_z, without.e_z);
    }

    #[test]
    fn bsm_fidelity_values() {
        assert_eq!(bsm_fidelity(1.0), 1.0);
        assert_eq!(bsm_fidelity(0.0), 0.5);
        assert_relative_eq!(bsm_fidelity(0.98), 0.99247, max_relative = 2e-5);
        // monotone increasing
        let mut prev = 0.0;
        for i in 0..=100 {
            let f = bsm_fidelity(i as f64 / 100.0);
            assert!(f >= prev);
            prev = f;
        }
    }
}
