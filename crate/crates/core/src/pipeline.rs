//! End-to-end analytic evaluation: channel point -> counts -> QBERs ->
//! key lengths, plus sweeps, threshold and crossover searches, and the
//! memory-budget report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keyrate::{asymptotic_key, total_key, KeyMode, KeyResult};
use crate::link::{link_budget, real_click_fraction, Arm};
use crate::params::SystemParams;
use crate::qber::{qber_one_memory, qber_two_memory, QberPair, Scheme};
use crate::yields::{
    afc_capacity, expected_counts_one_memory_with_pd, expected_counts_two_memory_with_pd,
    qm1_capacity, qm2_buffer, AfcModes, PassGeometry, YieldEstimate,
};

/// Bisection resolution of the loss-axis searches (dB).
pub const LOSS_RESOLUTION_DB: f64 = 0.01;

/// Commonly quoted long-lived-memory capacity estimate at 30 dB average
/// downlink loss, reported alongside the model's own number because the
/// two disagree by roughly a factor of 3-4.
pub const REFERENCE_QM1_AT_30DB: f64 = 2.0e6;

/// Sweep variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    LossDb,
    PDTotal,
    EM,
}

/// A parameter sweep request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    pub schemes: Vec<Scheme>,
    pub modes: Vec<KeyMode>,
    /// Channel loss held fixed when the sweep variable is not the loss.
    pub fixed_loss_db: Option<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.start <= self.stop) || !(self.step > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bad sweep grid: start {} stop {} step {}",
                self.start, self.stop, self.step
            )));
        }
        if self.schemes.is_empty() || self.modes.is_empty() {
            return Err(Error::InvalidInput("need at least one scheme and one mode".into()));
        }
        if self.variable != SweepVariable::LossDb && self.fixed_loss_db.is_none() {
            return Err(Error::InvalidInput(
                "non-loss sweeps need a fixed channel loss".into(),
            ));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let mut v = Vec::new();
        let mut i = 0u64;
        loop {
            let x = self.start + self.step * i as f64;
            if x > self.stop + 1e-9 * self.step {
                break;
            }
            v.push(x);
            i += 1;
        }
        v
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub variable: f64,
    pub scheme: Scheme,
    pub mode: KeyMode,
    pub n_z: f64,
    pub n_x: f64,
    pub e_z: f64,
    pub e_x: f64,
    pub l_z: f64,
    pub l_x: f64,
    pub l_total: f64,
    pub r_per_pair: f64,
}

/// Analytic counts and QBERs for one channel point.
pub fn analytic_point(
    p: &SystemParams,
    loss_db: f64,
    scheme: Scheme,
    p_d_override: Option<f64>,
) -> Result<(YieldEstimate, QberPair)> {
    match scheme {
        Scheme::TwoMemory => {
            let budget = link_budget(p, loss_db, Arm::WithMemory)?;
            let p_d = p_d_override.unwrap_or(budget.p_d);
            let alpha = real_click_fraction(budget.eta, p_d);
            let est = expected_counts_two_memory_with_pd(p, loss_db, p_d_override)?;
            Ok((est, qber_two_memory(alpha, alpha, p)))
        }
        Scheme::OneMemory => {
            let direct = link_budget(p, loss_db, Arm::Direct)?;
            let stored = link_budget(p, loss_db, Arm::WithMemory)?;
            let p_d = p_d_override.unwrap_or(direct.p_d);
            let alpha_a = real_click_fraction(direct.eta, p_d);
            let alpha_b = real_click_fraction(stored.eta, p_d);
            let est = expected_counts_one_memory_with_pd(p, loss_db, p_d_override)?;
            Ok((est, qber_one_memory(alpha_a, alpha_b, p)))
        }
    }
}

/// Key result for one channel point in the requested mode.
pub fn evaluate_key(
    p: &SystemParams,
    loss_db: f64,
    scheme: Scheme,
    mode: KeyMode,
    p_d_override: Option<f64>,
) -> Result<KeyResult> {
    let (est, q) = analytic_point(p, loss_db, scheme, p_d_override)?;
    Ok(match mode {
        KeyMode::Finite => total_key(&est.counts, &q, p),
        KeyMode::Asymptotic => asymptotic_key(&est.counts, &q, p),
    })
}

fn row(
    variable: f64,
    p: &SystemParams,
    loss_db: f64,
    scheme: Scheme,
    mode: KeyMode,
    p_d_override: Option<f64>,
) -> Result<PointRow> {
    let (est, q) = analytic_point(p, loss_db, scheme, p_d_override)?;
    let key = match mode {
        KeyMode::Finite => total_key(&est.counts, &q, p),
        KeyMode::Asymptotic => asymptotic_key(&est.counts, &q, p),
    };
    Ok(PointRow {
        variable,
        scheme,
        mode,
        n_z: est.counts.n_z,
        n_x: est.counts.n_x,
        e_z: q.e_z,
        e_x: q.e_x,
        l_z: key.l_z,
        l_x: key.l_x,
        l_total: key.l_total,
        r_per_pair: key.r_per_pair,
    })
}

/// Evaluate a full sweep. Grid points run in parallel; output rows are
/// ordered by grid index, then scheme, then mode.
pub fn run_sweep(spec: &SweepSpec, p: &SystemParams) -> Result<Vec<PointRow>> {
    spec.validate()?;
    p.validate()?;
    let grid = spec.grid();
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty sweep grid".into()));
    }
    let rows: Result<Vec<Vec<PointRow>>> = grid
        .par_iter()
        .map(|&x| {
            let mut out = Vec::new();
            for &scheme in &spec.schemes {
                for &mode in &spec.modes {
                    let r = match spec.variable {
                        SweepVariable::LossDb => row(x, p, x, scheme, mode, None)?,
                        SweepVariable::PDTotal => {
                            row(x, p, spec.fixed_loss_db.unwrap(), scheme, mode, Some(x))?
                        }
                        SweepVariable::EM => {
                            let mut q = p.clone();
                            q.e_m = x;
                            row(x, &q, spec.fixed_loss_db.unwrap(), scheme, mode, None)?
                        }
                    };
                    out.push(r);
                }
            }
            Ok(out)
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

/// Noise sweep at fixed loss: the composed incoherent click probability
/// is overridden directly while the detection efficiency chain is held.
pub fn noise_sweep(
    p: &SystemParams,
    loss_db: f64,
    p_d_start: f64,
    p_d_stop: f64,
    p_d_step: f64,
    schemes: Vec<Scheme>,
    modes: Vec<KeyMode>,
) -> Result<Vec<PointRow>> {
    run_sweep(
        &SweepSpec {
            variable: SweepVariable::PDTotal,
            start: p_d_start,
            stop: p_d_stop,
            step: p_d_step,
            schemes,
            modes,
            fixed_loss_db: Some(loss_db),
        },
        p,
    )
}

/// Largest channel loss with a positive key, located by bisection, or
/// `None` when no key exists anywhere on the interval.
pub fn threshold_loss(
    p: &SystemParams,
    scheme: Scheme,
    mode: KeyMode,
    mut lo: f64,
    mut hi: f64,
) -> Result<Option<f64>> {
    let positive =
        |db: f64| -> Result<bool> { Ok(evaluate_key(p, db, scheme, mode, None)?.l_total > 0.0) };
    if !positive(lo)? {
        return Ok(None);
    }
    if positive(hi)? {
        return Ok(Some(hi));
    }
    while hi - lo > LOSS_RESOLUTION_DB {
        let mid = 0.5 * (lo + hi);
        if positive(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Loss at which the finite key rate per received pair of the two-memory
/// scheme overtakes the single-memory scheme, found by bisection on the
/// sign change of the rate difference.
///
/// The comparison is on `r_per_pair`: the total key length of the
/// two-memory scheme dominates at every loss (it has vastly more received
/// pairs), so only the per-pair rate exhibits a crossover.
pub fn find_crossover(p: &SystemParams, mut lo: f64, mut hi: f64) -> Result<f64> {
    let diff = |db: f64| -> Result<f64> {
        let two = evaluate_key(p, db, Scheme::TwoMemory, KeyMode::Finite, None)?;
        let one = evaluate_key(p, db, Scheme::OneMemory, KeyMode::Finite, None)?;
        Ok(two.r_per_pair - one.r_per_pair)
    };
    let f_lo = diff(lo)?;
    let f_hi = diff(hi)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoCrossover { lo, hi });
    }
    while hi - lo > LOSS_RESOLUTION_DB {
        let mid = 0.5 * (lo + hi);
        if diff(mid)?.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest overridden incoherent click probability that still yields a
/// positive finite key at the given loss; 0 when no key exists even
/// noise-free.
pub fn max_tolerable_p_d(p: &SystemParams, loss_db: f64, scheme: Scheme) -> Result<f64> {
    let key = |p_d: f64| -> Result<f64> {
        Ok(evaluate_key(p, loss_db, scheme, KeyMode::Finite, Some(p_d))?.l_total)
    };
    if key(0.0)? <= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 0.5;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if key(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// On-board memory budget summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemoryReport {
    pub loss_db: f64,
    pub slant_range_m: f64,
    pub n_qm1: u64,
    pub n_qm2: u64,
    pub afc: AfcModes,
    /// Commonly quoted capacity estimate at 30 dB, for comparison.
    pub reference_qm1_at_30db: f64,
    pub note: String,
}

/// Memory capacity requirements at one operating point, with the default
/// comb multiplexing breakdown.
pub fn memory_report(p: &SystemParams, loss_db: f64, slant_range: f64) -> Result<MemoryReport> {
    let est = expected_counts_two_memory_with_pd(p, loss_db, None)?;
    let n_qm1 = qm1_capacity(&est)?;
    let n_qm2 = qm2_buffer(p, &PassGeometry::new(slant_range));
    let afc = afc_capacity(600, 1_000, 10_000);
    let ratio = if n_qm1 > 0 { REFERENCE_QM1_AT_30DB / n_qm1 as f64 } else { f64::INFINITY };
    let note = format!(
        "counting model requires {n_qm1} long-lived modes here; the commonly quoted \
         estimate of ~2e6 modes at 30 dB is larger by a factor of {ratio:.2} and its \
         derivation is not reproducible from the 4*(n_Z+n_X) bookkeeping"
    );
    Ok(MemoryReport {
        loss_db,
        slant_range_m: slant_range,
        n_qm1,
        n_qm2,
        afc,
        reference_qm1_at_30db: REFERENCE_QM1_AT_30DB,
        note,
    })
}
