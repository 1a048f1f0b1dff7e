//! Finite-size secure key length per basis, total key and per-pair rate,
//! and the asymptotic (infinite block size) limit.

use serde::{Deserialize, Serialize};

use crate::params::SystemParams;
use crate::qber::QberPair;

/// Matched, coincident detection counts per measurement basis. Carried as
/// nonnegative reals: expectations on the analytic path, integers (cast)
/// on the simulated path; the key formula is evaluated identically on both.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisCounts {
    pub n_z: f64,
    pub n_x: f64,
}

impl BasisCounts {
    pub fn total(&self) -> f64 {
        self.n_z + self.n_x
    }
}

/// Evaluation mode of a key length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyMode {
    Finite,
    Asymptotic,
}

impl KeyMode {
    pub fn label(self) -> &'static str {
        match self {
            KeyMode::Finite => "finite",
            KeyMode::Asymptotic => "asymptotic",
        }
    }
}

/// Why a per-basis key length was zeroed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZeroReason {
    /// No raw key material in this basis.
    NoRawKey,
    /// No events in the other basis: the statistical deviation term
    /// diverges, so no bound can be given.
    NoStatistics,
    /// Deviation-adjusted phase error reached 1/2; privacy amplification
    /// consumes everything.
    PhaseErrorSaturated,
    /// The bound evaluated negative and was clamped to zero.
    NegativeLength,
}

/// Key length extracted from one basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisKeyLength {
    pub bits: f64,
    pub zeroed_by: Option<ZeroReason>,
}

/// Secure key lengths for both bases plus the per-pair rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyResult {
    pub l_z: f64,
    pub l_x: f64,
    pub l_total: f64,
    /// Key bits per received (sifted, matched) pair: l_total / (n_z + n_x).
    pub r_per_pair: f64,
    pub mode: KeyMode,
}

/// Binary entropy in bits. Panics outside [0, 1].
pub fn binary_entropy(x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "binary_entropy argument {x} outside [0, 1]");
    if x == 0.0 || x == 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Finite key length extracted from one basis.
///
/// `n_main` is the count in the key basis, `n_other` the count used for
/// phase-error estimation; `e_phase` is the error rate of the *other*
/// basis and `e_bit` the error rate of the key basis. For the Z key these
/// are (n_Z, n_X, e_X, e_Z); the X key swaps all roles.
///
/// The bound is
/// `n - n h[(e_phase + dev)/(1 - delta)] - f_e n h(e_bit) - n delta - log2(2/(eps_corr eps_sec^2))`
/// with `dev = sqrt((n + 1) log(1/eps_sec) / (2 n_other (n_other + n)))`.
/// The deviation logarithm base is configurable (natural by default); the
/// constant term counts bits and is always base 2.
pub fn finite_key_basis(
    n_main: f64,
    n_other: f64,
    e_phase: f64,
    e_bit: f64,
    p: &SystemParams,
) -> BasisKeyLength {
    if n_main <= 0.0 {
        return BasisKeyLength { bits: 0.0, zeroed_by: Some(ZeroReason::NoRawKey) };
    }
    if n_other <= 0.0 {
        return BasisKeyLength { bits: 0.0, zeroed_by: Some(ZeroReason::NoStatistics) };
    }
    let deviation = ((n_main + 1.0) * p.deviation_log_base.log_inv(p.eps_sec)
        / (2.0 * n_other * (n_other + n_main)))
        .sqrt();
    let adjusted_phase = (e_phase + deviation) / (1.0 - p.delta);
    if adjusted_phase >= 0.5 {
        return BasisKeyLength { bits: 0.0, zeroed_by: Some(ZeroReason::PhaseErrorSaturated) };
    }
    let correction_term = (2.0 / (p.eps_corr * p.eps_sec * p.eps_sec)).log2();
    let bits = n_main
        - n_main * binary_entropy(adjusted_phase)
        - p.f_e * n_main * binary_entropy(e_bit)
        - n_main * p.delta
        - correction_term;
    if bits < 0.0 {
        BasisKeyLength { bits: 0.0, zeroed_by: Some(ZeroReason::NegativeLength) }
    } else {
        BasisKeyLength { bits, zeroed_by: None }
    }
}

/// Infinite-block-size limit of the per-basis bound:
/// `n * max(0, 1 - h(e_phase/(1 - delta)) - f_e h(e_bit) - delta)`.
pub fn asymptotic_key_basis(n_main: f64, e_phase: f64, e_bit: f64, p: &SystemParams) -> f64 {
    if n_main <= 0.0 {
        return 0.0;
    }
    let adjusted_phase = e_phase / (1.0 - p.delta);
    if adjusted_phase >= 0.5 {
        return 0.0;
    }
    let rate =
        1.0 - binary_entropy(adjusted_phase) - p.f_e * binary_entropy(e_bit) - p.delta;
    n_main * rate.max(0.0)
}

fn assemble(l_z: f64, l_x: f64, counts: &BasisCounts, mode: KeyMode) -> KeyResult {
    let total = l_z + l_x;
    let pairs = counts.total();
    KeyResult {
        l_z,
        l_x,
        l_total: total,
        r_per_pair: if pairs > 0.0 { total / pairs } else { 0.0 },
        mode,
    }
}

/// Total finite key: L = L_Z + L_X.
pub fn total_key(counts: &BasisCounts, q: &QberPair, p: &SystemParams) -> KeyResult {
    let l_z = finite_key_basis(counts.n_z, counts.n_x, q.e_x, q.e_z, p).bits;
    let l_x = finite_key_basis(counts.n_x, counts.n_z, q.e_z, q.e_x, p).bits;
    assemble(l_z, l_x, counts, KeyMode::Finite)
}

/// Total asymptotic key, used for the dashed comparison curves.
pub fn asymptotic_key(counts: &BasisCounts, q: &QberPair, p: &SystemParams) -> KeyResult {
    let l_z = asymptotic_key_basis(counts.n_z, q.e_x, q.e_z, p);
    let l_x = asymptotic_key_basis(counts.n_x, q.e_z, q.e_x, p);
    assemble(l_z, l_x, counts, KeyMode::Asymptotic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qber::Scheme;
    use approx::assert_relative_eq;

    fn qp(e_x: f64, e_z: f64) -> QberPair {
        QberPair { e_x, e_z, scheme: Scheme::TwoMemory }
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_relative_eq!(binary_entropy(0.11), 0.49991, max_relative = 1e-4);
        assert_relative_eq!(binary_entropy(0.2), binary_entropy(0.8), max_relative = 1e-12);
    }

    #[test]
    #[should_panic]
    fn entropy_rejects_out_of_range() {
        binary_entropy(1.2);
    }

    #[test]
    fn finite_key_example() {
        // frozen from an independent brute-force evaluation of the bound
        let p = SystemParams::default();
        let k = finite_key_basis(72000.0, 72000.0, 0.12444, 0.03634, &p);
        assert!(k.zeroed_by.is_none());
        assert_relative_eq!(k.bits, 1.117e4, max_relative = 2e-3);
    }

    #[test]
    fn finite_key_edge_cases() {
        let p = SystemParams::default();
        assert_eq!(
            finite_key_basis(0.0, 100.0, 0.1, 0.1, &p).zeroed_by,
            Some(ZeroReason::NoRawKey)
        );
        assert_eq!(
            finite_key_basis(100.0, 0.0, 0.1, 0.1, &p).zeroed_by,
            Some(ZeroReason::NoStatistics)
        );
        assert_eq!(
            finite_key_basis(1e6, 1e6, 0.49, 0.0, &p).zeroed_by,
            Some(ZeroReason::PhaseErrorSaturated)
        );
        // tiny block: bound is negative, clamped
        let k = finite_key_basis(50.0, 50.0, 0.0, 0.0, &p);
        assert_eq!(k.bits, 0.0);
        assert!(k.zeroed_by.is_some());
    }

    #[test]
    fn total_key_zero_counts() {
        let p = SystemParams::default();
        let r = total_key(&BasisCounts { n_z: 0.0, n_x: 0.0 }, &qp(0.1, 0.1), &p);
        assert_eq!((r.l_z, r.l_x, r.l_total, r.r_per_pair), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn basis_symmetry() {
        let p = SystemParams::default();
        let counts = BasisCounts { n_z: 5e4, n_x: 5e4 };
        let r = total_key(&counts, &qp(0.05, 0.05), &p);
        assert_eq!(r.l_z, r.l_x);
    }

    #[test]
    fn asymptotic_dominates_finite() {
        let p = SystemParams::default();
        for (nz, ex, ez) in [(1e4, 0.1, 0.03), (1e6, 0.12, 0.04), (1e3, 0.02, 0.01)] {
            let counts = BasisCounts { n_z: nz, n_x: nz };
            let q = qp(ex, ez);
            let fin = total_key(&counts, &q, &p);
            let asy = asymptotic_key(&counts, &q, &p);
            assert!(asy.l_total >= fin.l_total);
        }
    }

    #[test]
    fn asymptotic_perfect_and_clamped() {
        let mut p = SystemParams::default();
        p.delta = 0.0;
        assert_eq!(asymptotic_key_basis(1234.0, 0.0, 0.0, &p), 1234.0);
        let p = SystemParams::default();
        assert_eq!(asymptotic_key_basis(1e6, 0.3, 0.3, &p), 0.0);
    }

    #[test]
    fn finite_converges_to_asymptotic() {
        let p = SystemParams::default();
        let q = qp(0.12444, 0.03634);
        let big = BasisCounts { n_z: 2e8, n_x: 2e8 };
        let fin = total_key(&big, &q, &p);
        let asy = asymptotic_key(&big, &q, &p);
        let gap = (asy.r_per_pair - fin.r_per_pair) / asy.r_per_pair;
        assert!(gap > 0.0 && gap < 0.01, "relative gap {gap}");
    }

    #[test]
    fn shrinking_eps_sec_never_gains_key() {
        let mut p = SystemParams::default();
        let counts = BasisCounts { n_z: 1e5, n_x: 1e5 };
        let q = qp(0.1, 0.03);
        let base = total_key(&counts, &q, &p).l_total;
        p.eps_sec = 1e-15;
        assert!(total_key(&counts, &q, &p).l_total <= base);
    }
}
