//! Event-level stochastic simulator of the protocol: per-emission downlink
//! click sampling, memory-mode allocation with capacity caps and a
//! feedback-delay buffer, probabilistic entanglement swapping, sifting and
//! error tallies. Serves as the independent oracle for the analytic model.
//!
//! Sampling is keyed by emission index through per-event generator
//! substreams, so parallel and serial runs agree bit for bit. Clicks and
//! error flags are sampled directly; the sampling law is constructed so
//! that expectations reproduce the closed-form click probabilities, QBER
//! expressions and count model.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keyrate::BasisCounts;
use crate::link::{link_budget, Arm, LinkBudget};
use crate::params::SystemParams;
use crate::qber::{coherent_x_error, QberPair, Scheme};
use crate::yields::YieldEstimate;

const CHUNK: u64 = 1 << 15;
/// High bit marks the pair-classification stream space.
const PAIR_STREAM: u64 = 1 << 63;

/// One simulation run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub n_emissions_per_pass: u64,
    pub loss_db: f64,
    pub params: SystemParams,
    pub seed: u64,
    /// Long-lived memory mode cap; `None` = unconstrained.
    pub qm1_cap: Option<u64>,
    /// Buffer memory mode cap; `None` = unconstrained.
    pub qm2_cap: Option<u64>,
    /// Ground-feedback round trip expressed in emission slots. Each
    /// emission occupies a memory mode until its click/no-click feedback
    /// arrives this many emissions later. 0 = instantaneous feedback.
    pub feedback_delay_emissions: u64,
    pub scheme: Scheme,
    /// Optional direct override of the composed incoherent click
    /// probability (noise sweeps).
    pub p_d_override: Option<f64>,
}

impl TrialConfig {
    pub fn new(scheme: Scheme, loss_db: f64, n_emissions_per_pass: u64, seed: u64) -> Self {
        Self {
            n_emissions_per_pass,
            loss_db,
            params: SystemParams::default(),
            seed,
            qm1_cap: None,
            qm2_cap: None,
            feedback_delay_emissions: 0,
            scheme,
            p_d_override: None,
        }
    }
}

/// Sampled counterpart of the analytic yield and QBER quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub n_z: u64,
    pub n_x: u64,
    pub errors_z: u64,
    pub errors_x: u64,
    pub heralded_a: u64,
    pub heralded_b: u64,
    pub swapped: u64,
    pub peak_qm1_occupancy: u64,
    pub peak_qm2_occupancy: u64,
    /// Emissions lost because a memory had no free mode.
    pub dropped_capacity: u64,
    pub n_emissions_per_pass: u64,
    pub scheme: Scheme,
}

impl SimOutcome {
    pub fn counts(&self) -> BasisCounts {
        BasisCounts { n_z: self.n_z as f64, n_x: self.n_x as f64 }
    }

    pub fn empirical_e_z(&self) -> f64 {
        if self.n_z > 0 { self.errors_z as f64 / self.n_z as f64 } else { 0.0 }
    }

    pub fn empirical_e_x(&self) -> f64 {
        if self.n_x > 0 { self.errors_x as f64 / self.n_x as f64 } else { 0.0 }
    }
}

/// One downlink detection attempt.
#[derive(Debug, Clone, Copy)]
struct Detection {
    clicked: bool,
    /// Real photon detected with no incoherent click on the partner
    /// detector; anything else that clicked is squashed to a random bit.
    clean: bool,
}

fn substream(base: &ChaCha8Rng, stream: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(stream);
    rng.set_word_pos(0u128);
    rng
}

/// Sample one two-detector measurement: the signal photon arrives with
/// probability `eta` at one detector, each detector sees an incoherent
/// click with probability `p_d`.
fn sample_detection(rng: &mut ChaCha8Rng, eta: f64, p_d: f64) -> Detection {
    let real = rng.random::<f64>() < eta;
    let noise_same = rng.random::<f64>() < p_d;
    let noise_other = rng.random::<f64>() < p_d;
    Detection { clicked: real || noise_same || noise_other, clean: real && !noise_other }
}

/// Click outcomes for one pass, sampled in parallel. Returns the sparse
/// list of (emission index, clean flag) for emissions that clicked.
fn sample_pass(
    base: &ChaCha8Rng,
    n_emissions: u64,
    budget: &LinkBudget,
    stream_of: impl Fn(u64) -> u64 + Sync,
) -> Vec<(u64, bool)> {
    let (eta, p_d) = (budget.eta, budget.p_d);
    let n_chunks = n_emissions.div_ceil(CHUNK);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n_emissions);
            let mut hits = Vec::new();
            for i in lo..hi {
                let mut rng = substream(base, stream_of(i));
                let d = sample_detection(&mut rng, eta, p_d);
                if d.clicked {
                    hits.push((i, d.clean));
                }
            }
            hits
        })
        .flatten()
        .collect()
}

/// Result of pushing one pass through a capacity-limited memory.
struct BufferedPass {
    /// Heralds that found a free mode, in emission order.
    kept: Vec<(u64, bool)>,
    peak_occupancy: u64,
    dropped: u64,
}

/// Apply the feedback-delay and mode-cap constraints to one pass.
///
/// Every attempted emission occupies a mode from emission until feedback
/// `delay` emissions later; heralded emissions additionally keep their
/// mode afterwards if `retain` is set (long-lived store) or release it to
/// the swap (buffer). Emissions that find no free mode are dropped.
fn buffer_pass(
    clicks: &[(u64, bool)],
    n_emissions: u64,
    cap: Option<u64>,
    delay: u64,
    retain: bool,
) -> BufferedPass {
    let cap_val = cap.unwrap_or(u64::MAX);

    // Fast path: with instantaneous feedback only heralded photons ever
    // occupy a mode.
    if delay == 0 {
        let mut kept = Vec::with_capacity(clicks.len());
        let mut stored: u64 = 0;
        let mut peak: u64 = 0;
        let mut dropped: u64 = 0;
        for &(i, clean) in clicks {
            let occupancy = if retain { stored } else { 0 };
            if occupancy + 1 > cap_val {
                dropped += 1;
                continue;
            }
            peak = peak.max(occupancy + 1);
            if retain {
                stored += 1;
            }
            kept.push((i, clean));
        }
        return BufferedPass { kept, peak_occupancy: peak, dropped };
    }

    // a mode is held from emission until feedback at i + delay; heralded
    // emissions then either keep it (long-lived store) or release it to
    // the swap stage (buffer)
    let mut click_iter = clicks.iter().peekable();
    let mut in_flight: std::collections::VecDeque<(u64, bool)> = std::collections::VecDeque::new();
    let mut kept = Vec::new();
    let mut stored: u64 = 0;
    let mut peak: u64 = 0;
    let mut dropped: u64 = 0;
    for i in 0..n_emissions {
        while let Some(&(j, was_click)) = in_flight.front() {
            if j + delay <= i {
                in_flight.pop_front();
                if was_click && retain {
                    stored += 1;
                }
            } else {
                break;
            }
        }
        let is_click = matches!(click_iter.peek(), Some(&&(j, _)) if j == i);
        let clean = if is_click { click_iter.next().unwrap().1 } else { false };
        let occupancy = in_flight.len() as u64 + stored;
        if occupancy + 1 > cap_val {
            dropped += 1;
            continue;
        }
        peak = peak.max(occupancy + 1);
        in_flight.push_back((i, is_click));
        if is_click {
            kept.push((i, clean));
        }
    }
    BufferedPass { kept, peak_occupancy: peak, dropped }
}

/// Tally of sifted pairs.
#[derive(Default, Clone, Copy)]
struct Tally {
    n_z: u64,
    n_x: u64,
    errors_z: u64,
    errors_x: u64,
    swapped: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.n_z += other.n_z;
        self.n_x += other.n_x;
        self.errors_z += other.errors_z;
        self.errors_x += other.errors_x;
        self.swapped += other.swapped;
        self
    }
}

/// Classify and sift one formed pair.
#[allow(clippy::too_many_arguments)]
fn classify_pair(
    rng: &mut ChaCha8Rng,
    clean_a: bool,
    clean_b: bool,
    p: &SystemParams,
    scheme: Scheme,
    e_x_coherent: f64,
) -> Tally {
    let mut t = Tally::default();
    if scheme == Scheme::TwoMemory {
        // passive linear-optics swap succeeds half the time
        if !rng.random_bool(0.5) {
            return t;
        }
    }
    t.swapped = 1;
    let coherent = match scheme {
        Scheme::TwoMemory => clean_a && clean_b && rng.random_bool(p.lambda_bsm),
        Scheme::OneMemory => clean_a && clean_b,
    };
    // independent fair basis choices on both sides
    if !rng.random_bool(0.5) {
        return t;
    }
    let z_basis = rng.random_bool(0.5);
    let error = if coherent {
        let prob = if z_basis { p.eps_m } else { e_x_coherent };
        rng.random_bool(prob)
    } else if z_basis {
        rng.random_bool(0.5)
    } else {
        // incoherent X outcomes follow the same literal model as the
        // analytic single-memory expression
        match scheme {
            Scheme::TwoMemory => rng.random_bool(0.5),
            Scheme::OneMemory => p.one_memory_ex_noise_term && rng.random_bool(0.5),
        }
    };
    if z_basis {
        t.n_z = 1;
        t.errors_z = error as u64;
    } else {
        t.n_x = 1;
        t.errors_x = error as u64;
    }
    t
}

/// Run the event-level protocol simulation. Deterministic for a fixed
/// configuration (seed included) regardless of parallel execution.
pub fn simulate_protocol(cfg: &TrialConfig) -> Result<SimOutcome> {
    if cfg.n_emissions_per_pass == 0 {
        return Err(Error::InvalidInput("n_emissions_per_pass must be > 0".into()));
    }
    if cfg.n_emissions_per_pass >= PAIR_STREAM / 2 {
        return Err(Error::InvalidInput("emission count exhausts the stream space".into()));
    }
    cfg.params.validate()?;
    let p = &cfg.params;
    let base = ChaCha8Rng::seed_from_u64(cfg.seed);
    let apply = |b: LinkBudget| match cfg.p_d_override {
        Some(p_d) => b.with_p_d_override(p_d),
        None => b,
    };
    let with_mem = apply(link_budget(p, cfg.loss_db, Arm::WithMemory)?);
    let direct = apply(link_budget(p, cfg.loss_db, Arm::Direct)?);
    let e_x_coherent = coherent_x_error(p, cfg.scheme);
    let n = cfg.n_emissions_per_pass;
    let delay = cfg.feedback_delay_emissions;

    match cfg.scheme {
        Scheme::TwoMemory => {
            let clicks_a = sample_pass(&base, n, &with_mem, |i| 2 * i);
            let clicks_b = sample_pass(&base, n, &with_mem, |i| 2 * i + 1);
            let pass_a = buffer_pass(&clicks_a, n, cfg.qm1_cap, delay, true);
            let pass_b = buffer_pass(&clicks_b, n, cfg.qm2_cap, delay, false);

            let n_pairs = pass_a.kept.len().min(pass_b.kept.len());
            let tally = (0..n_pairs)
                .into_par_iter()
                .map(|k| {
                    let mut rng = substream(&base, PAIR_STREAM | k as u64);
                    classify_pair(
                        &mut rng,
                        pass_a.kept[k].1,
                        pass_b.kept[k].1,
                        p,
                        Scheme::TwoMemory,
                        e_x_coherent,
                    )
                })
                .reduce(Tally::default, Tally::merge);

            Ok(SimOutcome {
                n_z: tally.n_z,
                n_x: tally.n_x,
                errors_z: tally.errors_z,
                errors_x: tally.errors_x,
                heralded_a: pass_a.kept.len() as u64,
                heralded_b: pass_b.kept.len() as u64,
                swapped: tally.swapped,
                peak_qm1_occupancy: pass_a.peak_occupancy,
                peak_qm2_occupancy: pass_b.peak_occupancy,
                dropped_capacity: pass_a.dropped + pass_b.dropped,
                n_emissions_per_pass: n,
                scheme: Scheme::TwoMemory,
            })
        }
        Scheme::OneMemory => {
            // pass A: direct downlink while the partner is stored
            let clicks_a = sample_pass(&base, n, &direct, |i| 2 * i);
            let pass_a = buffer_pass(&clicks_a, n, cfg.qm1_cap, delay, true);

            // pass B: each stored herald is retrieved and sent down the
            // memory arm; a coincidence needs both clicks
            let tally_and_b = pass_a
                .kept
                .par_iter()
                .map(|&(i, clean_a)| {
                    let mut arm = substream(&base, 2 * i + 1);
                    let d = sample_detection(&mut arm, with_mem.eta, with_mem.p_d);
                    if !d.clicked {
                        return (Tally::default(), 0u64);
                    }
                    let mut rng = substream(&base, PAIR_STREAM | i);
                    (
                        classify_pair(&mut rng, clean_a, d.clean, p, Scheme::OneMemory, e_x_coherent),
                        1u64,
                    )
                })
                .reduce(
                    || (Tally::default(), 0),
                    |(t1, c1), (t2, c2)| (t1.merge(t2), c1 + c2),
                );
            let (tally, coincidences) = tally_and_b;

            Ok(SimOutcome {
                n_z: tally.n_z,
                n_x: tally.n_x,
                errors_z: tally.errors_z,
                errors_x: tally.errors_x,
                heralded_a: pass_a.kept.len() as u64,
                heralded_b: coincidences,
                swapped: tally.swapped,
                peak_qm1_occupancy: pass_a.peak_occupancy,
                peak_qm2_occupancy: 0,
                dropped_capacity: pass_a.dropped,
                n_emissions_per_pass: n,
                scheme: Scheme::OneMemory,
            })
        }
    }
}

/// Agreement report between a simulated outcome and the analytic model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub z_n_z: f64,
    pub z_n_x: f64,
    pub z_e_z: f64,
    pub z_e_x: f64,
    /// Any |z| above 4.
    pub flagged: bool,
}

impl ValidationReport {
    pub fn max_abs_z(&self) -> f64 {
        [self.z_n_z, self.z_n_x, self.z_e_z, self.z_e_x]
            .into_iter()
            .fold(0.0_f64, |m, z| m.max(z.abs()))
    }
}

/// Compare sampled counts and error rates against the analytic
/// expectations, as z-scores under binomial error bars.
pub fn validate_against_analytic(
    outcome: &SimOutcome,
    est: &YieldEstimate,
    q: &QberPair,
    p: &SystemParams,
) -> Result<ValidationReport> {
    if outcome.scheme != est.scheme || outcome.scheme != q.scheme {
        return Err(Error::SchemeMismatch {
            expected: outcome.scheme.label(),
            got: est.scheme.label(),
        });
    }
    let n_em = outcome.n_emissions_per_pass as f64;
    let scale = n_em / (p.s * p.t_pass);
    let count_z = |obs: u64, expected: f64| -> f64 {
        let p_hit = (expected / n_em).clamp(0.0, 1.0);
        let sigma = (n_em * p_hit * (1.0 - p_hit)).sqrt();
        if sigma > 0.0 { (obs as f64 - expected) / sigma } else { 0.0 }
    };
    let rate_z = |obs: f64, expected: f64, trials: u64| -> f64 {
        if trials == 0 {
            return 0.0;
        }
        let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
        if sigma > 0.0 { (obs - expected) / sigma } else { 0.0 }
    };
    let report = ValidationReport {
        z_n_z: count_z(outcome.n_z, est.counts.n_z * scale),
        z_n_x: count_z(outcome.n_x, est.counts.n_x * scale),
        z_e_z: rate_z(outcome.empirical_e_z(), q.e_z, outcome.n_z),
        z_e_x: rate_z(outcome.empirical_e_x(), q.e_x, outcome.n_x),
        flagged: false,
    };
    Ok(ValidationReport { flagged: report.max_abs_z() > 4.0, ..report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_efficiency_zero_tallies() {
        let mut cfg = TrialConfig::new(Scheme::TwoMemory, 30.0, 10_000, 1);
        cfg.params.eta_det = 0.0;
        cfg.params.p_n = 0.0;
        cfg.params.p_bg = 0.0;
        cfg.params.p_dc = 0.0;
        let out = simulate_protocol(&cfg).unwrap();
        assert_eq!(
            (out.heralded_a, out.heralded_b, out.swapped, out.n_z, out.n_x),
            (0, 0, 0, 0, 0)
        );
    }

    #[test]
    fn zero_emissions_rejected() {
        let cfg = TrialConfig::new(Scheme::TwoMemory, 30.0, 0, 1);
        assert!(simulate_protocol(&cfg).is_err());
    }

    #[test]
    fn qm1_cap_limits_heralds() {
        let mut cfg = TrialConfig::new(Scheme::TwoMemory, 0.0, 50_000, 7);
        cfg.qm1_cap = Some(10);
        let out = simulate_protocol(&cfg).unwrap();
        assert!(out.heralded_a <= 10);
        assert!(out.peak_qm1_occupancy <= 10);
        assert!(out.dropped_capacity > 0);
    }

    #[test]
    fn capacity_monotonicity() {
        let mut prev = 0;
        for cap in [5, 50, 500] {
            let mut cfg = TrialConfig::new(Scheme::TwoMemory, 10.0, 20_000, 3);
            cfg.qm1_cap = Some(cap);
            let out = simulate_protocol(&cfg).unwrap();
            assert!(out.heralded_a >= prev);
            prev = out.heralded_a;
        }
    }

    #[test]
    fn determinism_same_seed() {
        let cfg = TrialConfig::new(Scheme::TwoMemory, 15.0, 100_000, 42);
        let a = simulate_protocol(&cfg).unwrap();
        let b = simulate_protocol(&cfg).unwrap();
        assert_eq!(a, b);
        let mut cfg2 = cfg.clone();
        cfg2.seed = 43;
        assert_ne!(simulate_protocol(&cfg2).unwrap(), a);
    }

    #[test]
    fn buffer_delay_respects_qm2_cap() {
        // with a feedback delay equal to the cap, the buffer exactly fills
        let mut cfg = TrialConfig::new(Scheme::TwoMemory, 20.0, 50_000, 11);
        cfg.feedback_delay_emissions = 1000;
        cfg.qm2_cap = Some(1000);
        let full = simulate_protocol(&cfg).unwrap();
        assert_eq!(full.peak_qm2_occupancy, 1000);

        cfg.qm2_cap = Some(400);
        let constrained = simulate_protocol(&cfg).unwrap();
        assert_eq!(constrained.peak_qm2_occupancy, 400);
        assert!(constrained.dropped_capacity > full.dropped_capacity);
        assert!(constrained.heralded_b <= full.heralded_b);
    }

    #[test]
    fn scheme_mismatch_rejected() {
        let cfg = TrialConfig::new(Scheme::OneMemory, 10.0, 10_000, 1);
        let out = simulate_protocol(&cfg).unwrap();
        let p = SystemParams::default();
        let est = crate::yields::expected_counts_two_memory(&p, 10.0).unwrap();
        let q = crate::qber::qber_two_memory(0.9, 0.9, &p);
        assert!(validate_against_analytic(&out, &est, &q, &p).is_err());
    }
}
