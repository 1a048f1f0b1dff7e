//! Expected event counts for both protocol variants and on-board memory
//! capacity requirements (long-lived store, feedback buffer, comb
//! multiplexing arithmetic).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keyrate::BasisCounts;
use crate::link::{link_budget, Arm, LinkBudget};
use crate::params::SystemParams;
use crate::qber::Scheme;

pub const LIGHT_SPEED: f64 = 299_792_458.0;

/// Expected heralded, swapped and sifted counts for one set of passes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldEstimate {
    /// Expected photons stored-and-heralded during pass A.
    pub n_heralded_a: f64,
    /// Same for pass B (two-memory scheme only; coincidences for 1-QM).
    pub n_heralded_b: f64,
    /// Expected successful swap outcomes (coincident pairs for 1-QM).
    pub n_swapped: f64,
    pub counts: BasisCounts,
    pub scheme: Scheme,
}

/// Required memory mode counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AfcModes {
    pub n_t: u64,
    pub n_f: u64,
    pub n_s: u64,
    pub n_total: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryBudget {
    pub n_qm1: u64,
    pub n_qm2: u64,
    pub afc: AfcModes,
}

/// Satellite-ground geometry for the feedback buffer sizing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassGeometry {
    /// Satellite-ground slant range (m).
    pub slant_range: f64,
    /// Speed of light (m/s).
    pub light_speed: f64,
}

impl PassGeometry {
    pub fn new(slant_range: f64) -> Self {
        Self { slant_range, light_speed: LIGHT_SPEED }
    }
}

/// Per-emission probability that at least one ground detector clicks.
fn click_prob(budget: &LinkBudget, p_d_override: Option<f64>) -> f64 {
    match p_d_override {
        Some(p_d) => budget.with_p_d_override(p_d).click_prob(),
        None => budget.click_prob(),
    }
}

pub(crate) fn expected_counts_two_memory_with_pd(
    p: &SystemParams,
    loss_db: f64,
    p_d_override: Option<f64>,
) -> Result<YieldEstimate> {
    let budget = link_budget(p, loss_db, Arm::WithMemory)?;
    let click = click_prob(&budget, p_d_override);
    // identical passes over both ground stations
    let n_heralded = p.s * p.t_pass * click;
    let n_swapped = 0.5 * n_heralded;
    let per_basis = n_swapped / 4.0;
    Ok(YieldEstimate {
        n_heralded_a: n_heralded,
        n_heralded_b: n_heralded,
        n_swapped,
        counts: BasisCounts { n_z: per_basis, n_x: per_basis },
        scheme: Scheme::TwoMemory,
    })
}

/// Expected counts for the two-memory protocol: per-pass heralding on
/// each downlink, a 50% swap success on paired heralds, 50% basis match
/// and an even Z/X split. Counts scale with the single channel
/// transmittance to first order.
pub fn expected_counts_two_memory(p: &SystemParams, loss_db: f64) -> Result<YieldEstimate> {
    expected_counts_two_memory_with_pd(p, loss_db, None)
}

pub(crate) fn expected_counts_one_memory_with_pd(
    p: &SystemParams,
    loss_db: f64,
    p_d_override: Option<f64>,
) -> Result<YieldEstimate> {
    let direct = link_budget(p, loss_db, Arm::Direct)?;
    let stored = link_budget(p, loss_db, Arm::WithMemory)?;
    let click_a = click_prob(&direct, p_d_override);
    let click_b = click_prob(&stored, p_d_override);
    let emissions = p.s * p.t_pass;
    let n_coincident = emissions * click_a * click_b;
    let per_basis = n_coincident / 4.0;
    Ok(YieldEstimate {
        n_heralded_a: emissions * click_a,
        n_heralded_b: n_coincident,
        n_swapped: n_coincident,
        counts: BasisCounts { n_z: per_basis, n_x: per_basis },
        scheme: Scheme::OneMemory,
    })
}

/// Expected counts for the single-memory protocol: a coincidence needs
/// both the direct arm A click and the memory arm B click for the same
/// emission, so counts scale with the square of the channel transmittance.
pub fn expected_counts_one_memory(p: &SystemParams, loss_db: f64) -> Result<YieldEstimate> {
    expected_counts_one_memory_with_pd(p, loss_db, None)
}

/// Required long-lived memory capacity for the two-memory scheme:
/// N = 4 (n_Z + n_X), the factor of 4 covering 50% basis mismatch and
/// the 50% swap success limit. Equals the pass-A heralded count by
/// construction.
pub fn qm1_capacity(est: &YieldEstimate) -> Result<u64> {
    if est.scheme != Scheme::TwoMemory {
        return Err(Error::SchemeMismatch { expected: "2qm", got: est.scheme.label() });
    }
    Ok((4.0 * est.counts.total()).ceil() as u64)
}

/// Buffer modes needed to cover the ground-feedback round trip:
/// ceil(s * 2 * slant_range / c).
pub fn qm2_buffer(p: &SystemParams, g: &PassGeometry) -> u64 {
    (p.s * 2.0 * g.slant_range / g.light_speed).ceil() as u64
}

/// Multiplexed mode arithmetic: n_t = floor(n_afc / 6) temporal modes,
/// times spectral and spatial multiplicities.
pub fn afc_capacity(n_afc: u64, n_f: u64, n_s: u64) -> AfcModes {
    let n_t = n_afc / 6;
    AfcModes { n_t, n_f, n_s, n_total: n_t * n_f * n_s }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lossless_limits() {
        let mut p = SystemParams::default();
        p.eta_det = 1.0;
        p.eta_mem = 1.0;
        p.p_n = 0.0;
        p.p_bg = 0.0;
        p.p_dc = 0.0;
        let est = expected_counts_two_memory(&p, 0.0).unwrap();
        assert_relative_eq!(est.counts.n_z, p.s * p.t_pass / 8.0, max_relative = 1e-12);
        let est = expected_counts_one_memory(&p, 0.0).unwrap();
        assert_relative_eq!(est.counts.n_z, p.s * p.t_pass / 4.0, max_relative = 1e-12);
    }

    #[test]
    fn reference_counts() {
        let p = SystemParams::default();
        let est = expected_counts_two_memory(&p, 30.0).unwrap();
        assert_relative_eq!(est.n_heralded_a, 5.80e5, max_relative = 1e-3);
        assert_relative_eq!(est.counts.n_z, 7.25e4, max_relative = 2e-3);
        assert_eq!(est.counts.n_z, est.counts.n_x);

        let est = expected_counts_one_memory(&p, 28.0).unwrap();
        assert_relative_eq!(est.counts.n_z, 2.92e2, max_relative = 2e-3);
    }

    #[test]
    fn decade_scaling() {
        let p = SystemParams::default();
        for db in [15.0, 20.0, 25.0] {
            let a = expected_counts_two_memory(&p, db).unwrap().counts.n_z;
            let b = expected_counts_two_memory(&p, db + 10.0).unwrap().counts.n_z;
            let ratio = a / b;
            assert!((ratio - 10.0).abs() / 10.0 < 0.02, "2qm decade ratio {ratio} at {db} dB");
        }
        // 2-QM advantage over 1-QM grows like the inverse transmittance
        let r15 = expected_counts_two_memory(&p, 15.0).unwrap().counts.n_z
            / expected_counts_one_memory(&p, 15.0).unwrap().counts.n_z;
        let r25 = expected_counts_two_memory(&p, 25.0).unwrap().counts.n_z
            / expected_counts_one_memory(&p, 25.0).unwrap().counts.n_z;
        assert!((r25 / r15 - 10.0).abs() / 10.0 < 0.05);
    }

    fn slope(points: &[(f64, f64)]) -> f64 {
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let num: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let den: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        num / den
    }

    #[test]
    fn count_scaling_slopes() {
        let p = SystemParams::default();
        let grid: Vec<f64> = (0..=40).map(|i| 15.0 + 0.5 * i as f64).collect();
        let two: Vec<(f64, f64)> = grid
            .iter()
            .map(|&db| (db, expected_counts_two_memory(&p, db).unwrap().counts.n_z.log10()))
            .collect();
        let one: Vec<(f64, f64)> = grid
            .iter()
            .map(|&db| (db, expected_counts_one_memory(&p, db).unwrap().counts.n_z.log10()))
            .collect();
        let s2 = slope(&two);
        let s1 = slope(&one);
        assert!((s2 + 0.100).abs() < 0.005, "2qm slope {s2}");
        assert!((s1 + 0.200).abs() < 0.005, "1qm slope {s1}");
    }

    #[test]
    fn counts_nonincreasing_in_loss() {
        let p = SystemParams::default();
        let mut prev2 = f64::INFINITY;
        let mut prev1 = f64::INFINITY;
        for i in 0..=100 {
            let db = 0.5 * i as f64;
            let c2 = expected_counts_two_memory(&p, db).unwrap().counts.n_z;
            let c1 = expected_counts_one_memory(&p, db).unwrap().counts.n_z;
            assert!(c2 <= prev2 && c1 <= prev1);
            prev2 = c2;
            prev1 = c1;
        }
    }

    #[test]
    fn qm1_capacity_examples() {
        let p = SystemParams::default();
        let mut est = expected_counts_two_memory(&p, 30.0).unwrap();
        est.counts = BasisCounts { n_z: 72_500.0, n_x: 72_500.0 };
        assert_eq!(qm1_capacity(&est).unwrap(), 580_000);
        est.counts = BasisCounts { n_z: 0.0, n_x: 0.0 };
        assert_eq!(qm1_capacity(&est).unwrap(), 0);

        // equals the heralded count rounded up, by construction
        for db in [10.0, 20.0, 30.0, 40.0] {
            let est = expected_counts_two_memory(&p, db).unwrap();
            assert_eq!(qm1_capacity(&est).unwrap(), est.n_heralded_a.ceil() as u64);
        }

        let one = expected_counts_one_memory(&p, 30.0).unwrap();
        assert!(qm1_capacity(&one).is_err());
    }

    #[test]
    fn qm2_buffer_examples() {
        let p = SystemParams::default();
        let n_ref = qm2_buffer(&p, &PassGeometry::new(2.0e6));
        assert_eq!(n_ref, 66_713);
        assert!((1e4..=1e5).contains(&(n_ref as f64)));
        assert_eq!(qm2_buffer(&p, &PassGeometry::new(0.0)), 0);
        // linear in slant range up to the ceiling
        for km in [500.0, 1000.0, 3000.0] {
            let n = qm2_buffer(&p, &PassGeometry::new(km * 1e3));
            let expected = n_ref as f64 * km / 2000.0;
            assert!((n as f64 - expected).abs() <= 1.0, "{n} modes at {km} km");
        }
    }

    #[test]
    fn afc_arithmetic() {
        assert_eq!(afc_capacity(600, 1, 1).n_t, 100);
        assert_eq!(afc_capacity(600, 1_000, 10_000).n_total, 1_000_000_000);
        assert_eq!(afc_capacity(5, 1_000, 10_000).n_total, 0);
    }
}
