//! Parity-outcome distributions and classical Fisher information of the
//! protected and unprotected phase-estimation protocols.

use std::fmt;

use crate::core_model::{binom_weight_prob, qx_from_physical};
use crate::meas_sim::{logical_meas_failure_bound, parity_flip_exact, required_repetitions};
use crate::prep_sim::PrepStats;
use crate::error::{Error, Result};

/// Largest n accepted by [`exact_small_n_fi`].
pub const EXACT_FI_LIMIT: usize = 12;

/// Two-outcome distribution with the derivative of P(+1) in theta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryOutcomeDist {
    pub p_plus: f64,
    pub p_minus: f64,
    pub dp_plus: f64,
}

/// Whether the signal enters through cos(m theta) or sin(m theta).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityVariant {
    Cos,
    Sin,
}

/// (1 + x f(m theta)) / 2 for outcome +1, where x is the contrast.
pub fn parity_distribution(m: i64, theta: f64, contrast: f64, variant: ParityVariant) -> BinaryOutcomeDist {
    let mt = m as f64 * theta;
    let (f, df) = match variant {
        ParityVariant::Cos => (mt.cos(), -(m as f64) * mt.sin()),
        ParityVariant::Sin => (mt.sin(), m as f64 * mt.cos()),
    };
    let p_plus = (1.0 + contrast * f) / 2.0;
    BinaryOutcomeDist { p_plus, p_minus: 1.0 - p_plus, dp_plus: contrast * df / 2.0 }
}

/// Probability-weighted mixture of parity distributions over magnetizations.
pub fn mixture_distribution(weights: &[(i64, f64)], theta: f64, contrast: f64, variant: ParityVariant) -> BinaryOutcomeDist {
    let mut out = BinaryOutcomeDist { p_plus: 0.0, p_minus: 0.0, dp_plus: 0.0 };
    for &(m, w) in weights {
        let d = parity_distribution(m, theta, contrast, variant);
        out.p_plus += w * d.p_plus;
        out.p_minus += w * d.p_minus;
        out.dp_plus += w * d.dp_plus;
    }
    out
}

/// (dP/dtheta)^2 (1/P(+1) + 1/P(-1)).
pub fn binary_fi(d: &BinaryOutcomeDist) -> Result<f64> {
    const EPS: f64 = 1e-300;
    if d.p_plus <= EPS || d.p_minus <= EPS {
        if d.dp_plus == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::InfiniteFisher(format!(
            "outcome probability vanishes with nonzero derivative {}",
            d.dp_plus
        )));
    }
    Ok(d.dp_plus * d.dp_plus * (1.0 / d.p_plus + 1.0 / d.p_minus))
}

/// Bit-flip noise of rate p on every qubit, no correction.
pub fn fi_bitflip_no_qec(n: usize, p: f64, perfect_syndrome: bool) -> f64 {
    let nf = n as f64;
    let base = (1.0 - 2.0 * p).powi(2) * nf * nf;
    if perfect_syndrome {
        base + 4.0 * p * (1.0 - p) * nf
    } else {
        base
    }
}

/// Noiseless GHZ read out qubit by qubit with flip rate q: eta^2 n^2 with
/// eta = (1 - 2q)^n.
pub fn fi_measurement_noise_only(n: usize, q: f64) -> f64 {
    let eta = (1.0 - 2.0 * q).powi(n as i32);
    let nf = n as f64;
    eta * eta * nf * nf
}

/// Probability that an odd number of the three independent flips occurs.
pub fn effective_flip_probability(wp_prep: f64, p_s: f64, wp_meas: f64) -> f64 {
    (1.0 - (1.0 - 2.0 * wp_prep) * (1.0 - 2.0 * p_s) * (1.0 - 2.0 * wp_meas)) / 2.0
}

/// Inputs of the protected protocol and the comparison protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub n: usize,
    /// Bit-flip rate before and after the phase gate.
    pub p: f64,
    pub wp_meas: f64,
    pub wp_prep: f64,
    /// E[(n - 2 w0)^2] after preparation.
    pub m2bar: f64,
    /// Readout error of the comparison protocols.
    pub q: f64,
    /// Block size of the GHZ-block protocol.
    pub k: usize,
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p", self.p), ("wp_meas", self.wp_meas), ("wp_prep", self.wp_prep), ("q", self.q)] {
            if !(0.0..=0.5).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must lie in [0, 1/2]")));
            }
        }
        let nf = self.n as f64;
        if !(0.0..=nf * nf * (1.0 + 1e-12)).contains(&self.m2bar) {
            return Err(Error::InvalidParameter(format!("m2bar = {} outside [0, n^2]", self.m2bar)));
        }
        Ok(())
    }
}

/// [(1-2wm)(1-2wp)(1-2p) {(1-2p)^2 m2bar/n + 4p(1-p)}]^2.
pub fn fi_qec(params: &ProtocolParams) -> f64 {
    let p = params.p;
    let nf = params.n as f64;
    let a = (1.0 - 2.0 * params.wp_meas) * (1.0 - 2.0 * params.wp_prep) * (1.0 - 2.0 * p);
    let inner = (1.0 - 2.0 * p).powi(2) * params.m2bar / nf + 4.0 * p * (1.0 - p);
    (a * inner).powi(2)
}

/// [(1-2wm)(1-2wp)(1-2p)^3 (1-2 alpha p_eff^2)^2]^2 n^2.
pub fn fi_qec_subthreshold(n: usize, p: f64, p_eff: f64, alpha: f64, wp_meas: f64, wp_prep: f64) -> f64 {
    let f = (1.0 - 2.0 * wp_meas)
        * (1.0 - 2.0 * wp_prep)
        * (1.0 - 2.0 * p).powi(3)
        * (1.0 - 2.0 * alpha * p_eff * p_eff).powi(2);
    let nf = n as f64;
    f * f * nf * nf
}

/// n/k independent GHZ blocks of size k, each read with flip rate q:
/// (n/k) (1-2q)^(2k) k^2.
pub fn fi_ghz_blocks(n: usize, k: usize, q: f64) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("block size {k} outside [1, {n}]")));
    }
    let kf = k as f64;
    Ok(n as f64 / kf * (1.0 - 2.0 * q).powf(2.0 * kf) * kf * kf)
}

/// Best integer block size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalBlock {
    /// -1 / ln((1-2q)^2); infinite for q = 0.
    pub k_continuous: f64,
    pub k: usize,
    pub fi: f64,
    /// -n / (e ln((1-2q)^2)), the optimum with k treated as real.
    pub fi_continuum: f64,
}

pub fn optimal_block(q: f64, n: usize) -> Result<OptimalBlock> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let ln = (1.0 - 2.0 * q).powi(2).ln();
    let k_continuous = if ln == 0.0 { f64::INFINITY } else { -1.0 / ln };
    let lo = (k_continuous.floor().max(1.0) as usize).min(n);
    let hi = (k_continuous.ceil().max(1.0).min(n as f64)) as usize;
    let (f_lo, f_hi) = (fi_ghz_blocks(n, lo, q)?, fi_ghz_blocks(n, hi, q)?);
    let (k, fi) = if f_hi > f_lo { (hi, f_hi) } else { (lo, f_lo) };
    let fi_continuum = if ln == 0.0 { f64::INFINITY } else { -(n as f64) / (std::f64::consts::E * ln) };
    Ok(OptimalBlock { k_continuous, k, fi, fi_continuum })
}

/// Which closed form to use for n independent |+> probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProductForm {
    /// n (1-2q)^2, from the two-outcome Fisher information per qubit.
    #[default]
    Squared,
    /// (1-2q) n.
    Linear,
}

pub fn fi_product_state(n: usize, q: f64, form: ProductForm) -> f64 {
    match form {
        ProductForm::Squared => n as f64 * (1.0 - 2.0 * q).powi(2),
        ProductForm::Linear => (1.0 - 2.0 * q) * n as f64,
    }
}

/// Per-stage rates of the protected protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageRates {
    pub p: f64,
    pub wp_meas: f64,
    pub wp_prep: f64,
}

/// Transition matrix of the weight under independent flips of rate p:
/// t[a][b] = P(w' = b | w = a).
fn flip_transition(n: usize, p: f64) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; n + 1]; n + 1];
    for (a, row) in t.iter_mut().enumerate() {
        for un in 0..=a {
            let pu = binom_weight_prob(a as u64, un as u64, p).unwrap();
            for fl in 0..=(n - a) {
                let pf = binom_weight_prob((n - a) as u64, fl as u64, p).unwrap();
                row[a - un + fl] += pu * pf;
            }
        }
    }
    t
}

/// Outcome distribution of the protected protocol at angle theta, by
/// explicit summation over (w0, w1, w2).
pub fn qec_distribution(n: usize, rates: &StageRates, w0_dist: &[f64], theta: f64) -> Result<BinaryOutcomeDist> {
    if w0_dist.len() != n + 1 {
        return Err(Error::InvalidParameter(format!("w0 distribution has {} entries, need {}", w0_dist.len(), n + 1)));
    }
    let t = flip_transition(n, rates.p);
    let mut out = BinaryOutcomeDist { p_plus: 0.0, p_minus: 0.0, dp_plus: 0.0 };
    for (w0, &p0) in w0_dist.iter().enumerate() {
        if p0 == 0.0 {
            continue;
        }
        for w1 in 0..=n {
            let p01 = p0 * t[w0][w1];
            if p01 == 0.0 {
                continue;
            }
            let p_s = w1 as f64 / n as f64;
            let p_flip = effective_flip_probability(rates.wp_prep, p_s, rates.wp_meas);
            for w2 in 0..=n {
                let pr = p01 * t[w1][w2];
                if pr == 0.0 {
                    continue;
                }
                let m = n as i64 - 2 * w2 as i64;
                let keep = parity_distribution(m, theta, 1.0, ParityVariant::Sin);
                let flip = parity_distribution(m, theta, -1.0, ParityVariant::Sin);
                out.p_plus += pr * ((1.0 - p_flip) * keep.p_plus + p_flip * flip.p_plus);
                out.p_minus += pr * ((1.0 - p_flip) * keep.p_minus + p_flip * flip.p_minus);
                out.dp_plus += pr * ((1.0 - p_flip) * keep.dp_plus + p_flip * flip.dp_plus);
            }
        }
    }
    Ok(out)
}

/// Fisher information of the protected protocol for small n by explicit
/// enumeration of the weight chain.
pub fn exact_small_n_fi(n: usize, rates: &StageRates, w0_dist: &[f64], theta: f64) -> Result<f64> {
    if n == 0 || n > EXACT_FI_LIMIT {
        return Err(Error::SizeLimit(format!("n = {n} outside [1, {EXACT_FI_LIMIT}]")));
    }
    binary_fi(&qec_distribution(n, rates, w0_dist, theta)?)
}

/// E[(n - 2w)^2] of a weight distribution.
pub fn m2bar_of(w_dist: &[f64]) -> f64 {
    let n = (w_dist.len() - 1) as f64;
    w_dist.iter().enumerate().map(|(w, p)| p * (n - 2.0 * w as f64).powi(2)).sum()
}

/// Protocol labels in emitted rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Noiseless,
    Qec,
    QecSubthreshold,
    ProductState,
    GhzBlocks,
    BitflipNoQec,
    MeasurementNoiseOnly,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::Noiseless => "noiseless",
            Protocol::Qec => "qec",
            Protocol::QecSubthreshold => "qec-subthreshold",
            Protocol::ProductState => "product-state",
            Protocol::GhzBlocks => "ghz-blocks",
            Protocol::BitflipNoQec => "bitflip-no-qec",
            Protocol::MeasurementNoiseOnly => "measurement-noise-only",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One evaluated protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherPoint {
    pub protocol: Protocol,
    pub n: usize,
    pub fi: f64,
    /// Parameter snapshot as key/value pairs.
    pub params: Vec<(String, f64)>,
}

/// Least-squares slope of ln FI against ln n.
pub fn log_log_slope(points: &[(usize, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(_, f)| *f > 0.0).map(|&(n, f)| ((n as f64).ln(), f.ln())).collect();
    if pts.len() < 2 {
        return Err(Error::InvalidParameter("need at least two positive points".into()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("all n equal".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

/// Noise of one protected-protocol regime: simulated preparation rates plus
/// the physical rates that set the gate flips and the readout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QecRegime {
    pub p_eff: f64,
    pub q_eff: f64,
    pub p: f64,
    pub q: f64,
    pub p_prep: f64,
    pub readout: ReadoutModel,
}

/// How the readout and probe-initialization flip enters the protected FI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadoutModel {
    /// Exact parity flip of n majority votes at the certified r.
    #[default]
    Exact,
    /// 1 - (1 - 2^r q_x^(r/2+1))^n at the same r.
    Bound,
}

impl QecRegime {
    pub fn q_x(&self) -> f64 {
        qx_from_physical(self.p_prep, self.q)
    }

    /// Repetition count at size n and the resulting flip probability.
    pub fn readout_flip(&self, n: usize) -> Result<(u32, f64)> {
        let qx = self.q_x();
        let r = required_repetitions(qx, n)?;
        let wp = match self.readout {
            ReadoutModel::Exact => parity_flip_exact(n, r, qx),
            ReadoutModel::Bound => logical_meas_failure_bound(n, r, qx).min(0.5),
        };
        Ok((r, wp))
    }
}

/// Protected-protocol FI at size n from simulated preparation statistics.
pub fn qec_fisher_point(regime: &QecRegime, stats: &PrepStats) -> Result<FisherPoint> {
    let n = stats.n;
    let (r, wp) = regime.readout_flip(n)?;
    let params = ProtocolParams { n, p: regime.p, wp_meas: wp, wp_prep: wp, m2bar: stats.m2bar, q: regime.q_x(), k: 1 };
    params.validate()?;
    Ok(FisherPoint {
        protocol: Protocol::Qec,
        n,
        fi: fi_qec(&params),
        params: vec![
            ("p_eff".into(), regime.p_eff),
            ("q_eff".into(), regime.q_eff),
            ("p".into(), regime.p),
            ("q".into(), regime.q),
            ("p_prep".into(), regime.p_prep),
            ("r".into(), r as f64),
            ("wp".into(), wp),
            ("m2bar".into(), stats.m2bar),
            ("shots".into(), stats.shots as f64),
        ],
    })
}

/// Unprotected comparison protocols at size n with readout flip q.
pub fn comparison_points(n: usize, q: f64, form: ProductForm) -> Result<Vec<FisherPoint>> {
    let block = optimal_block(q, n)?;
    Ok(vec![
        FisherPoint { protocol: Protocol::Noiseless, n, fi: (n * n) as f64, params: vec![] },
        FisherPoint {
            protocol: Protocol::GhzBlocks,
            n,
            fi: block.fi,
            params: vec![("q".into(), q), ("k".into(), block.k as f64)],
        },
        FisherPoint { protocol: Protocol::ProductState, n, fi: fi_product_state(n, q, form), params: vec![("q".into(), q)] },
        FisherPoint {
            protocol: Protocol::MeasurementNoiseOnly,
            n,
            fi: fi_measurement_noise_only(n, q),
            params: vec![("q".into(), q)],
        },
    ])
}
