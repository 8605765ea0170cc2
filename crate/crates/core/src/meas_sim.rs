//! Repeated single-qubit X measurements with majority voting: closed-form
//! failure bounds, exact binomial tails and Monte-Carlo checks.

use rand::Rng;
use rayon::prelude::*;

use crate::core_model::{binom_weight_prob, qx_from_physical, rng_stream};
use crate::error::{Error, Result};

/// Repetition count, per-shot error and number of independently voted
/// qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoteConfig {
    pub r: u32,
    pub q_x: f64,
    pub n: usize,
}

impl VoteConfig {
    pub fn new(r: u32, q_x: f64, n: usize) -> Result<Self> {
        if r == 0 || r % 2 == 0 {
            return Err(Error::InvalidParameter(format!("r = {r} must be odd and positive")));
        }
        if !(0.0..0.5).contains(&q_x) {
            return Err(Error::InvalidParameter(format!("q_x = {q_x} must lie in [0, 1/2)")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        Ok(VoteConfig { r, q_x, n })
    }
}

/// min(1, 2^r q^(r/2 + 1)).
pub fn majority_vote_failure_bound(r: u32, q_x: f64) -> f64 {
    (2f64.powi(r as i32) * q_x.powf(r as f64 / 2.0 + 1.0)).min(1.0)
}

/// 2^r q^ceil(r/2), the intermediate bound which always dominates the
/// exact tail.
pub fn majority_vote_union_bound(r: u32, q_x: f64) -> f64 {
    (2f64.powi(r as i32) * q_x.powi(r.div_ceil(2) as i32)).min(1.0)
}

/// Probability that at least ceil(r/2) of r readouts are wrong.
pub fn majority_vote_exact_tail(r: u32, q_x: f64) -> f64 {
    (r.div_ceil(2)..=r).map(|k| binom_weight_prob(r as u64, k as u64, q_x).unwrap()).sum()
}

/// Smallest odd r with 2^r q^(r/2+1) <= 1/n^2, i.e.
/// r = -ln(q^2 n^4) / ln(4q) rounded up to odd, at least 1.
pub fn required_repetitions(q_x: f64, n: usize) -> Result<u32> {
    if !(0.0..0.25).contains(&q_x) {
        return Err(Error::ThresholdViolated(format!("q_x = {q_x} is not below 1/4")));
    }
    if q_x == 0.0 {
        return Ok(1);
    }
    let nf = n as f64;
    let raw = -(q_x * q_x * nf.powi(4)).ln() / (4.0 * q_x).ln();
    if raw <= 1.0 {
        return Ok(1);
    }
    let r = raw.ceil() as u32;
    Ok(if r % 2 == 0 { r + 1 } else { r })
}

/// 1 - (1 - b)^n with the per-qubit closed-form bound b.
pub fn logical_meas_failure_bound(n: usize, r: u32, q_x: f64) -> f64 {
    let b = majority_vote_failure_bound(r, q_x);
    (1.0 - (1.0 - b).powi(n as i32)).clamp(0.0, 1.0)
}

/// Probability that an odd number of the n voted outcomes is wrong, using
/// the exact per-qubit tail. This is the flip probability of a parity
/// assembled from the votes.
pub fn parity_flip_exact(n: usize, r: u32, q_x: f64) -> f64 {
    let t = majority_vote_exact_tail(r, q_x);
    (1.0 - (1.0 - 2.0 * t).powi(n as i32)) / 2.0
}

/// Failure bound of probe initialization by voted X measurements, with
/// q_x composed from preparation and readout flips.
pub fn probe_init_failure(p_prep: f64, q: f64, n: usize, r: u32) -> Result<f64> {
    let q_x = qx_from_physical(p_prep, q);
    if q_x >= 0.25 {
        return Err(Error::ThresholdViolated(format!("q_x = {q_x} is not below 1/4")));
    }
    Ok(logical_meas_failure_bound(n, r, q_x))
}

/// Monte-Carlo outcome of repeated voting.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteStats {
    pub shots: u64,
    pub qubit_failures: u64,
    pub logical_failures: u64,
    pub per_qubit_rate: f64,
    pub logical_rate: f64,
    /// Binomial standard error of the per-qubit rate.
    pub per_qubit_stderr: f64,
}

/// Samples r Bernoulli(q_x) readouts per qubit, votes, and counts wrong
/// qubits and shots with any wrong qubit.
pub fn simulate_majority_vote(cfg: &VoteConfig, shots: u64, seed: u64) -> Result<VoteStats> {
    let cfg = VoteConfig::new(cfg.r, cfg.q_x, cfg.n)?;
    let need = cfg.r.div_ceil(2);
    let (qf, lf) = (0..shots)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_stream(seed, i);
            let mut wrong = 0u64;
            for _ in 0..cfg.n {
                let flips = (0..cfg.r).filter(|_| cfg.q_x > 0.0 && rng.random::<f64>() < cfg.q_x).count() as u32;
                if flips >= need {
                    wrong += 1;
                }
            }
            (wrong, (wrong > 0) as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let trials = shots * cfg.n as u64;
    let rate = qf as f64 / trials as f64;
    Ok(VoteStats {
        shots,
        qubit_failures: qf,
        logical_failures: lf,
        per_qubit_rate: rate,
        logical_rate: lf as f64 / shots as f64,
        per_qubit_stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
    })
}

/// Fault sites of the ancilla-assisted X measurement of one probe qubit.
///
/// The ancilla is prepared in |+>, controls a CNOT onto the probe qubit and
/// is read out in the X basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum XMeasFault {
    /// Ancilla prepared in |-> instead of |+>.
    AncillaPrep,
    /// Bit flip on the ancilla after the CNOT.
    AncillaAfterCnot,
    /// Bit flip on the probe qubit after the CNOT.
    ProbeAfterCnot,
    /// Bit flip on the probe qubit before the CNOT.
    ProbeBeforeCnot,
    /// Readout flip of the ancilla.
    Readout,
}

pub const X_MEAS_FAULTS: [XMeasFault; 5] = [
    XMeasFault::AncillaPrep,
    XMeasFault::AncillaAfterCnot,
    XMeasFault::ProbeAfterCnot,
    XMeasFault::ProbeBeforeCnot,
    XMeasFault::Readout,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct Pauli {
    x: bool,
    z: bool,
}

/// Frame of the probe qubit and the reported outcome after one X
/// measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct XMeasOutcome {
    /// The reported X eigenvalue differs from the probe's true one.
    pub outcome_flipped: bool,
    /// Z component left on the probe qubit (would flip its X value).
    pub probe_z: bool,
    /// X component left on the probe qubit (harmless for X readout).
    pub probe_x: bool,
}

/// Propagates the listed faults through the measurement circuit.
pub fn run_x_measurement(faults: &[XMeasFault]) -> XMeasOutcome {
    let has = |f| faults.contains(&f);
    let mut anc = Pauli::default();
    let mut probe = Pauli::default();
    if has(XMeasFault::AncillaPrep) {
        anc.z ^= true;
    }
    if has(XMeasFault::ProbeBeforeCnot) {
        probe.x ^= true;
    }
    // CNOT, ancilla control: X spreads control to target, Z target to control.
    probe.x ^= anc.x;
    anc.z ^= probe.z;
    if has(XMeasFault::AncillaAfterCnot) {
        anc.x ^= true;
    }
    if has(XMeasFault::ProbeAfterCnot) {
        probe.x ^= true;
    }
    let readout = has(XMeasFault::Readout);
    XMeasOutcome { outcome_flipped: anc.z ^ readout, probe_z: probe.z, probe_x: probe.x }
}

/// One X measurement with random faults: preparation p_prep, bit flips p,
/// readout q.
pub fn sample_x_measurement<R: Rng + ?Sized>(p_prep: f64, p: f64, q: f64, rng: &mut R) -> XMeasOutcome {
    let mut faults = Vec::new();
    for (f, rate) in [
        (XMeasFault::AncillaPrep, p_prep),
        (XMeasFault::ProbeBeforeCnot, p),
        (XMeasFault::AncillaAfterCnot, p),
        (XMeasFault::ProbeAfterCnot, p),
        (XMeasFault::Readout, q),
    ] {
        if rate > 0.0 && rng.random::<f64>() < rate {
            faults.push(f);
        }
    }
    run_x_measurement(&faults)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_examples() {
        assert_eq!(majority_vote_exact_tail(5, 0.0), 0.0);
        assert!((majority_vote_exact_tail(1, 0.1) - 0.1).abs() < 1e-15);
        assert!((majority_vote_exact_tail(3, 0.1) - 0.028).abs() < 1e-15);
        assert!((majority_vote_failure_bound(3, 0.1) - 8.0 * 0.1f64.powf(2.5)).abs() < 1e-15);
        assert!(majority_vote_failure_bound(3, 0.1) < majority_vote_exact_tail(3, 0.1));
    }

    #[test]
    fn repetition_examples() {
        assert_eq!(required_repetitions(0.1, 10).unwrap(), 7);
        assert_eq!(required_repetitions(0.001, 5).unwrap(), 1);
        assert_eq!(required_repetitions(0.0, 100).unwrap(), 1);
        let r = required_repetitions(0.2, 100).unwrap();
        assert_eq!(r % 2, 1);
        assert!(majority_vote_failure_bound(r, 0.2) <= 1e-4);
        assert!(matches!(required_repetitions(0.25, 10), Err(Error::ThresholdViolated(_))));
    }

    #[test]
    fn logical_bound_examples() {
        assert_eq!(logical_meas_failure_bound(100, 5, 0.0), 0.0);
        let r = required_repetitions(0.05, 100).unwrap();
        assert!(logical_meas_failure_bound(100, r, 0.05) <= 1.0 - (1.0 - 1e-4f64).powi(100) + 1e-15);
        let n = 10_000;
        let v = 1.0 - (1.0 - 1.0 / (n as f64).powi(2)).powi(n as i32);
        assert!((v * n as f64 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn probe_init_examples() {
        assert_eq!(probe_init_failure(0.0, 0.0, 50, 3).unwrap(), 0.0);
        let a = probe_init_failure(0.01, 0.03, 50, 5).unwrap();
        let b = probe_init_failure(0.03, 0.01, 50, 5).unwrap();
        assert_eq!(a, b);
        let direct = logical_meas_failure_bound(50, 5, 0.0198);
        assert!((probe_init_failure(0.01, 0.01, 50, 5).unwrap() - direct).abs() < 1e-15);
        assert!(probe_init_failure(0.2, 0.2, 5, 3).is_err());
    }

    #[test]
    fn vote_config_validation() {
        assert!(VoteConfig::new(2, 0.1, 1).is_err());
        assert!(VoteConfig::new(3, 0.5, 1).is_err());
        assert!(VoteConfig::new(3, 0.1, 1).is_ok());
    }

    #[test]
    fn noiseless_votes_never_fail() {
        let s = simulate_majority_vote(&VoteConfig::new(3, 0.0, 4).unwrap(), 1000, 1).unwrap();
        assert_eq!((s.qubit_failures, s.logical_failures), (0, 0));
    }

    #[test]
    fn simulated_rate_matches_tail() {
        let s = simulate_majority_vote(&VoteConfig::new(3, 0.1, 1).unwrap(), 200_000, 5).unwrap();
        assert!((s.per_qubit_rate - 0.028).abs() < 3.0 * s.per_qubit_stderr + 1e-12);
    }

    #[test]
    fn ancilla_faults_never_touch_probe_phase() {
        for mask in 0u32..(1 << X_MEAS_FAULTS.len()) {
            let faults: Vec<_> = X_MEAS_FAULTS.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|x| *x.1).collect();
            let out = run_x_measurement(&faults);
            assert!(!out.probe_z);
            let expect = faults.contains(&XMeasFault::AncillaPrep) ^ faults.contains(&XMeasFault::Readout);
            assert_eq!(out.outcome_flipped, expect);
        }
    }
}
