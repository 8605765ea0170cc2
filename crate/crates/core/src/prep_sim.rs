//! End-to-end GHZ preparation by repeated syndrome extraction and matching,
//! with residual-magnetization statistics and the analytic companions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bits::{BitVector, SyndromeBits};
use crate::core_model::{derive_effective_noise, rng_stream, EffectiveNoise, NoiseModel, NoiseParams};
use crate::decoder::{build_matching_graph, decode, physical_residual, GraphNoise, MatchingGraph};
use crate::error::{Error, Result};
use crate::rep_code::{
    detectors_from_reported, phenomenological_history_with, simulate_round_circuit, simulate_round_phenomenological,
    PhenomFault,
};

/// Default multiplier in rounds = ceil(factor * ln n).
pub const DEFAULT_ROUNDS_FACTOR: f64 = 5.0;

/// Resamples used for the bootstrap standard error.
pub const BOOTSTRAP_RESAMPLES: usize = 1000;

/// ceil(factor * ln n), floored at 2.
pub fn default_rounds(n: usize, factor: f64) -> usize {
    ((factor * (n as f64).ln()).ceil() as usize).max(2)
}

/// Noise driving the preparation rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrepNoise {
    /// Phenomenological per-round rates.
    Effective(EffectiveNoise),
    /// Physical rates for the circuit-level schedule.
    Physical(NoiseParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepConfig {
    pub n: usize,
    pub rounds: usize,
    pub model: NoiseModel,
    pub noise: PrepNoise,
    pub shots: usize,
    pub master_seed: u64,
}

impl PrepConfig {
    /// Phenomenological configuration with the default round count.
    pub fn phenomenological(n: usize, p_eff: f64, q_eff: f64, shots: usize, master_seed: u64) -> Result<Self> {
        Ok(PrepConfig {
            n,
            rounds: default_rounds(n, DEFAULT_ROUNDS_FACTOR),
            model: NoiseModel::Phenomenological,
            noise: PrepNoise::Effective(EffectiveNoise::phenomenological(p_eff, q_eff)?),
            shots,
            master_seed,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("n = {} must be at least 2", self.n)));
        }
        if self.rounds < 2 {
            return Err(Error::InvalidParameter(format!("rounds = {} must be at least 2", self.rounds)));
        }
        if self.shots < 1 {
            return Err(Error::InvalidParameter("shots must be positive".into()));
        }
        match (self.model, &self.noise) {
            (NoiseModel::Phenomenological, PrepNoise::Effective(_)) => Ok(()),
            (NoiseModel::Circuit | NoiseModel::CircuitCorrelated, PrepNoise::Physical(np)) => {
                derive_effective_noise(np).map(|_| ())
            }
            (m, _) => Err(Error::InvalidParameter(format!("noise description does not fit the {m} model"))),
        }
    }

    /// Phenomenological rates, derived for circuit models.
    pub fn effective(&self) -> Result<EffectiveNoise> {
        match self.noise {
            PrepNoise::Effective(e) => Ok(e),
            PrepNoise::Physical(np) => derive_effective_noise(&np),
        }
    }

    fn graph_noise(&self) -> GraphNoise {
        match self.noise {
            PrepNoise::Effective(e) => GraphNoise::Effective(e),
            PrepNoise::Physical(np) => GraphNoise::Physical(np),
        }
    }
}

/// Residual weight statistics of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PrepStats {
    pub n: usize,
    pub rounds: usize,
    pub shots: usize,
    pub mean_w: f64,
    pub mean_w2: f64,
    /// Sample mean of (n - 2w)^2.
    pub m2bar: f64,
    pub m_rms_over_n: f64,
    pub stderr: f64,
    /// Counts of each residual weight 0..=n/2.
    pub w_histogram: Vec<u64>,
}

impl PrepStats {
    /// Fraction of shots with residual weight strictly above `w`.
    pub fn fraction_above(&self, w: f64) -> f64 {
        let count: u64 = self.w_histogram.iter().enumerate().filter(|(k, _)| *k as f64 > w).map(|(_, c)| c).sum();
        count as f64 / self.shots as f64
    }
}

/// Graph plus configuration, reused across shots.
pub struct PrepRunner {
    cfg: PrepConfig,
    graph: MatchingGraph,
}

impl PrepRunner {
    pub fn new(cfg: PrepConfig) -> Result<Self> {
        cfg.validate()?;
        let graph = build_matching_graph(cfg.n, cfg.rounds, cfg.graph_noise(), cfg.model)?;
        Ok(PrepRunner { cfg, graph })
    }

    pub fn config(&self) -> &PrepConfig {
        &self.cfg
    }

    pub fn graph(&self) -> &MatchingGraph {
        &self.graph
    }

    /// Residual weight and squared magnetization of one shot.
    pub fn run_shot(&self, shot_index: u64) -> Result<(usize, u64)> {
        let mut rng = rng_stream(self.cfg.master_seed, shot_index);
        let (frame, reported) = self.simulate_history(&mut rng);
        let w = self.correct(&frame, &reported)?;
        let m = self.cfg.n as i64 - 2 * w as i64;
        Ok((w, (m * m) as u64))
    }

    fn simulate_history<R: Rng + ?Sized>(&self, rng: &mut R) -> (BitVector, Vec<SyndromeBits>) {
        let mut frame = BitVector::zeros(self.cfg.n);
        let mut reported = Vec::with_capacity(self.cfg.rounds);
        for t in 0..self.cfg.rounds {
            let rec = match (self.cfg.model, &self.cfg.noise) {
                (_, PrepNoise::Effective(e)) => simulate_round_phenomenological(&frame, e, t == 0, rng),
                (model, PrepNoise::Physical(np)) => {
                    simulate_round_circuit(&frame, np, model == NoiseModel::CircuitCorrelated, t == 0, rng)
                }
            };
            frame = rec.frame;
            reported.push(rec.reported);
        }
        (frame, reported)
    }

    fn correct(&self, frame: &BitVector, reported: &[SyndromeBits]) -> Result<usize> {
        let refs: Vec<&SyndromeBits> = reported.iter().collect();
        let det = detectors_from_reported(&refs, self.cfg.model)?;
        let c = decode(&self.graph, &det.fired)?;
        Ok(physical_residual(frame, reported.last().unwrap(), &c).1)
    }

    /// Residual weight when the history is noiseless except for `faults`.
    pub fn injected_residual(&self, faults: &[PhenomFault]) -> Result<usize> {
        let recs = phenomenological_history_with(self.cfg.n, self.cfg.rounds, faults);
        let reported: Vec<SyndromeBits> = recs.iter().map(|r| r.reported.clone()).collect();
        self.correct(&recs.last().unwrap().frame, &reported)
    }

    /// Runs every shot and aggregates.
    pub fn estimate(&self) -> Result<PrepStats> {
        let weights: Vec<usize> = (0..self.cfg.shots as u64)
            .into_par_iter()
            .map(|i| self.run_shot(i).map(|(w, _)| w))
            .collect::<Result<_>>()?;
        Ok(aggregate(self.cfg.n, self.cfg.rounds, &weights, self.cfg.master_seed))
    }
}

/// One shot with a freshly built graph. Use [`PrepRunner`] for many shots.
pub fn run_prep_shot(cfg: &PrepConfig, shot_index: u64) -> Result<(usize, u64)> {
    PrepRunner::new(cfg.clone())?.run_shot(shot_index)
}

/// Monte-Carlo estimate of m_rms/n over `cfg.shots` shots.
pub fn estimate_mrms(cfg: &PrepConfig) -> Result<PrepStats> {
    if cfg.shots < 100 {
        return Err(Error::InvalidParameter(format!("shots = {} below the minimum of 100", cfg.shots)));
    }
    PrepRunner::new(cfg.clone())?.estimate()
}

/// Moments, histogram and bootstrap error from per-shot residual weights.
pub fn aggregate(n: usize, rounds: usize, weights: &[usize], seed: u64) -> PrepStats {
    let shots = weights.len();
    let mut hist = vec![0u64; n / 2 + 1];
    let (mut s1, mut s2) = (0u128, 0u128);
    for &w in weights {
        hist[w] += 1;
        s1 += w as u128;
        s2 += (w * w) as u128;
    }
    let mean_w = s1 as f64 / shots as f64;
    let mean_w2 = s2 as f64 / shots as f64;
    let nf = n as f64;
    let m2bar = nf * nf - 4.0 * nf * mean_w + 4.0 * mean_w2;
    let m_rms_over_n = m2bar.max(0.0).sqrt() / nf;
    PrepStats {
        n,
        rounds,
        shots,
        mean_w,
        mean_w2,
        m2bar,
        m_rms_over_n,
        stderr: bootstrap_stderr(n, &hist, shots, seed),
        w_histogram: hist,
    }
}

/// Bootstrap standard error of m_rms/n, resampling shot-level weights.
fn bootstrap_stderr(n: usize, hist: &[u64], shots: usize, seed: u64) -> f64 {
    if shots < 2 {
        return 0.0;
    }
    // Cumulative table for inverse-CDF draws of w.
    let mut cum = Vec::with_capacity(hist.len());
    let mut acc = 0u64;
    for &c in hist {
        acc += c;
        cum.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_b007_57a7_0000);
    let nf = n as f64;
    let mut vals = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut sum_m2 = 0.0;
        for _ in 0..shots {
            let u = rng.random_range(0..shots as u64);
            let w = cum.partition_point(|&c| c <= u);
            let m = nf - 2.0 * w as f64;
            sum_m2 += m * m;
        }
        vals.push((sum_m2 / shots as f64).sqrt() / nf);
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
    var.sqrt()
}

/// Bound on the probability of a residual error with weight beyond n/4
/// after `a` rounds: (144 p)^(a/2) / (3 (1 - 6 sqrt p)).
pub fn nonlocal_bound(a: u32, p_eff: f64) -> Result<f64> {
    if !(0.0..1.0 / 36.0).contains(&p_eff) {
        return Err(Error::Domain(format!("p_eff = {p_eff} outside [0, 1/36); the series diverges")));
    }
    Ok((144.0 * p_eff).powf(a as f64 / 2.0) / (3.0 * (1.0 - 6.0 * p_eff.sqrt())))
}

/// Functional form used to predict m_rms/n from the residual constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmsForm {
    Asymptotic,
    Binomial,
}

/// Predicted m_rms/n when residual errors hit each qubit independently
/// with probability alpha * p_eff^2.
pub fn rms_approximation(p_eff: f64, alpha: f64, n: usize, form: RmsForm) -> Result<f64> {
    if alpha < 0.0 {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must be nonnegative")));
    }
    let r = alpha * p_eff * p_eff;
    Ok(match form {
        RmsForm::Asymptotic => 1.0 - 2.0 * r,
        RmsForm::Binomial => {
            let nf = n as f64;
            ((1.0 - 2.0 * r).powi(2) + 4.0 * r * (1.0 - r) / nf).sqrt()
        }
    })
}

/// Residual weights of every single phenomenological fault.
pub fn single_fault_residuals(runner: &PrepRunner) -> Result<Vec<(PhenomFault, usize)>> {
    let cfg = runner.config();
    crate::rep_code::all_phenomenological_faults(cfg.n, cfg.rounds)
        .into_iter()
        .map(|f| runner.injected_residual(&[f]).map(|w| (f, w)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, p: f64, q: f64, shots: usize) -> PrepConfig {
        PrepConfig::phenomenological(n, p, q, shots, 7).unwrap()
    }

    #[test]
    fn round_counts() {
        assert_eq!(default_rounds(17, 5.0), 15);
        assert_eq!(default_rounds(33, 5.0), 18);
        assert_eq!(default_rounds(65, 5.0), 21);
        assert_eq!(default_rounds(129, 5.0), 25);
        assert_eq!(default_rounds(257, 5.0), 28);
    }

    #[test]
    fn noiseless_shots_are_perfect() {
        let c = cfg(9, 0.0, 0.0, 100);
        assert_eq!(run_prep_shot(&c, 3).unwrap(), (0, 81));
        let s = estimate_mrms(&c).unwrap();
        assert_eq!(s.m_rms_over_n, 1.0);
        assert_eq!(s.stderr, 0.0);
    }

    #[test]
    fn single_interior_data_error_is_corrected() {
        let runner = PrepRunner::new(cfg(9, 0.02, 0.0, 100)).unwrap();
        for q in 0..9 {
            assert_eq!(runner.injected_residual(&[PhenomFault::Data { round: 2, qubit: q }]).unwrap(), 0);
        }
    }

    #[test]
    fn estimates_are_deterministic() {
        let c = cfg(9, 0.05, 0.05, 300);
        let a = estimate_mrms(&c).unwrap();
        let b = estimate_mrms(&c).unwrap();
        assert_eq!(a, b);
        assert!(a.m_rms_over_n < 1.0 && a.m_rms_over_n > 0.0);
        assert!(a.mean_w2 >= a.mean_w * a.mean_w);
    }

    #[test]
    fn circuit_models_run() {
        for model in [NoiseModel::Circuit, NoiseModel::CircuitCorrelated] {
            let np = NoiseParams::new(0.01, 0.01, 0.01, 0.002).unwrap();
            let c = PrepConfig { n: 9, rounds: 6, model, noise: PrepNoise::Physical(np), shots: 200, master_seed: 1 };
            let s = estimate_mrms(&c).unwrap();
            assert!(s.m_rms_over_n > 0.5);
        }
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(estimate_mrms(&cfg(9, 0.01, 0.01, 50)).is_err());
        let mut c = cfg(9, 0.01, 0.01, 100);
        c.model = NoiseModel::Circuit;
        assert!(estimate_mrms(&c).is_err());
        c.model = NoiseModel::Phenomenological;
        c.rounds = 1;
        assert!(estimate_mrms(&c).is_err());
    }

    #[test]
    fn moment_identity_on_samples() {
        let weights = [0usize, 1, 3, 2, 0, 4, 1];
        let s = aggregate(9, 5, &weights, 1);
        let direct: f64 = weights.iter().map(|&w| (9.0 - 2.0 * w as f64).powi(2)).sum::<f64>() / 7.0;
        assert!((s.m2bar - direct).abs() < 1e-12);
        assert_eq!(s.w_histogram.iter().sum::<u64>(), 7);
    }

    #[test]
    fn nonlocal_bound_examples() {
        for a in [1, 4, 10] {
            assert!((nonlocal_bound(a, 1.0 / 144.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        }
        assert!((nonlocal_bound(10, 0.005).unwrap() - 0.72f64.powi(5) / (3.0 * (1.0 - 6.0 * 0.005f64.sqrt()))).abs() < 1e-15);
        assert!((nonlocal_bound(10, 0.005).unwrap() - 0.112026).abs() < 1e-6);
        assert!(nonlocal_bound(10, 1e-12).unwrap() < 1e-20);
        assert!(matches!(nonlocal_bound(3, 1.0 / 36.0), Err(Error::Domain(_))));
    }

    #[test]
    fn rms_approximation_examples() {
        assert_eq!(rms_approximation(0.0, 3.0, 10, RmsForm::Asymptotic).unwrap(), 1.0);
        assert_eq!(rms_approximation(0.1, 0.0, 10, RmsForm::Binomial).unwrap(), 1.0);
        let v = rms_approximation(0.1, 1.0, 100, RmsForm::Binomial).unwrap();
        assert!((v - 0.98020).abs() < 1e-5);
        assert!((rms_approximation(0.1, 1.0, 100, RmsForm::Asymptotic).unwrap() - 0.98).abs() < 1e-15);
    }

    #[test]
    fn complement_leaves_m2_unchanged() {
        let n = 11i64;
        for w in 0..=n {
            assert_eq!((n - 2 * w).pow(2), (n - 2 * (n - w)).pow(2));
        }
    }
}
