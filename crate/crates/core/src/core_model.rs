//! Noise parameters, the effective-parameter map, binomial helpers and the
//! per-shot random stream contract.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Physical per-location error rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Pauli-X after each gate or idle location.
    pub p: f64,
    /// Single-qubit readout flip.
    pub q: f64,
    /// Single-qubit initialization flip.
    pub p_prep: f64,
    /// Total probability of a correlated fault after each CNOT.
    pub p_cnot: f64,
}

impl NoiseParams {
    pub fn new(p: f64, q: f64, p_prep: f64, p_cnot: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q), ("p_prep", p_prep), ("p_cnot", p_cnot)] {
            check_probability(name, v)?;
        }
        Ok(NoiseParams { p, q, p_prep, p_cnot })
    }

    pub fn uniform(p: f64) -> Result<Self> {
        Self::new(p, p, p, 0.0)
    }

    pub fn noiseless() -> Self {
        NoiseParams { p: 0.0, q: 0.0, p_prep: 0.0, p_cnot: 0.0 }
    }
}

/// Per-round phenomenological rates plus the single X-measurement error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveNoise {
    pub p_eff: f64,
    pub q_eff: f64,
    pub q_x: f64,
}

impl EffectiveNoise {
    pub fn new(p_eff: f64, q_eff: f64, q_x: f64) -> Result<Self> {
        for (name, v) in [("p_eff", p_eff), ("q_eff", q_eff), ("q_x", q_x)] {
            check_probability(name, v)?;
        }
        Ok(EffectiveNoise { p_eff, q_eff, q_x })
    }

    /// Phenomenological rates with no X-measurement error attached.
    pub fn phenomenological(p_eff: f64, q_eff: f64) -> Result<Self> {
        Self::new(p_eff, q_eff, 0.0)
    }
}

fn check_probability(name: &str, v: f64) -> Result<()> {
    if !(0.0..0.5).contains(&v) {
        return Err(Error::InvalidParameter(format!("{name} = {v} must lie in [0, 1/2)")));
    }
    Ok(())
}

/// Syndrome-extraction noise model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseModel {
    Phenomenological,
    Circuit,
    CircuitCorrelated,
}

impl NoiseModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseModel::Phenomenological => "phenomenological",
            NoiseModel::Circuit => "circuit",
            NoiseModel::CircuitCorrelated => "circuit-correlated",
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phenomenological" => Ok(NoiseModel::Phenomenological),
            "circuit" => Ok(NoiseModel::Circuit),
            "circuit-correlated" => Ok(NoiseModel::CircuitCorrelated),
            other => Err(Error::InvalidParameter(format!("unknown noise model {other:?}"))),
        }
    }
}

/// Linear-order effective rates of one syndrome round, plus the exact
/// two-term X-measurement error.
pub fn derive_effective_noise(np: &NoiseParams) -> Result<EffectiveNoise> {
    let q_eff = np.p_prep + 3.0 * np.p + np.q;
    let p_eff = 3.0 * np.p;
    let q_x = qx_from_physical(np.p_prep, np.q);
    for (name, v) in [("p_eff", p_eff), ("q_eff", q_eff), ("q_x", q_x)] {
        if v >= 0.5 {
            return Err(Error::ModelBreakdown(format!("{name} = {v} reaches 1/2")));
        }
    }
    Ok(EffectiveNoise { p_eff, q_eff, q_x })
}

/// Probability that exactly one of preparation and readout flips.
pub fn qx_from_physical(p_prep: f64, q: f64) -> f64 {
    p_prep * (1.0 - q) + (1.0 - p_prep) * q
}

/// Natural log of the binomial coefficient.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    assert!(k <= n);
    let k = k.min(n - k);
    (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum()
}

fn choose_f64(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 1..=k {
        c = c * (n - k + i) as f64 / i as f64;
    }
    c
}

/// C(n,w) r^w (1-r)^(n-w).
pub fn binom_weight_prob(n: u64, w: u64, r: f64) -> Result<f64> {
    if w > n {
        return Err(Error::Domain(format!("weight {w} exceeds size {n}")));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Domain(format!("probability {r} outside [0, 1]")));
    }
    if r == 0.0 {
        return Ok(if w == 0 { 1.0 } else { 0.0 });
    }
    if r == 1.0 {
        return Ok(if w == n { 1.0 } else { 0.0 });
    }
    if n <= 50 {
        Ok(choose_f64(n, w) * r.powi(w as i32) * (1.0 - r).powi((n - w) as i32))
    } else {
        let ln = ln_choose(n, w) + w as f64 * r.ln() + (n - w) as f64 * (-r).ln_1p();
        Ok(ln.exp())
    }
}

/// Generator type used for every shot.
pub type ShotRng = ChaCha8Rng;

/// Counter-based stream: the key is derived from the master seed and the
/// shot index selects a disjoint ChaCha stream.
pub fn rng_stream(master_seed: u64, shot_index: u64) -> ShotRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(shot_index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn effective_noise_examples() {
        let e = derive_effective_noise(&NoiseParams::new(0.01, 0.01, 0.01, 0.0).unwrap()).unwrap();
        assert!((e.p_eff - 0.03).abs() < 1e-15);
        assert!((e.q_eff - 0.05).abs() < 1e-15);
        assert!((e.q_x - 0.0198).abs() < 1e-15);

        let z = derive_effective_noise(&NoiseParams::noiseless()).unwrap();
        assert_eq!((z.p_eff, z.q_eff, z.q_x), (0.0, 0.0, 0.0));

        let e = derive_effective_noise(&NoiseParams::new(0.02, 0.005, 0.01, 0.0).unwrap()).unwrap();
        assert!((e.p_eff - 0.06).abs() < 1e-15);
        assert!((e.q_eff - 0.075).abs() < 1e-15);
        assert!((e.q_x - 0.0149).abs() < 1e-15);
    }

    #[test]
    fn effective_noise_rejects_breakdown() {
        let np = NoiseParams::new(0.1, 0.1, 0.1, 0.0).unwrap();
        assert!(matches!(derive_effective_noise(&np), Err(Error::ModelBreakdown(_))));
    }

    #[test]
    fn noise_params_validated() {
        assert!(NoiseParams::new(0.5, 0.0, 0.0, 0.0).is_err());
        assert!(NoiseParams::new(-0.1, 0.0, 0.0, 0.0).is_err());
        assert!(EffectiveNoise::new(0.0, 0.6, 0.0).is_err());
    }

    #[test]
    fn binomial_examples() {
        assert!((binom_weight_prob(5, 0, 0.1).unwrap() - 0.59049).abs() < 1e-15);
        assert!((binom_weight_prob(2, 1, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!((binom_weight_prob(5, 2, 0.1).unwrap() - 0.0729).abs() < 1e-15);
        assert!(matches!(binom_weight_prob(5, 6, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn log_space_branch_agrees_with_direct_product() {
        for w in [0u64, 1, 7, 30, 51] {
            let direct = choose_f64(51, w) * 0.2f64.powi(w as i32) * 0.8f64.powi(51 - w as i32);
            let logged = binom_weight_prob(51, w, 0.2).unwrap();
            assert!((direct - logged).abs() <= 1e-13 * direct.max(1e-300));
        }
    }

    #[test]
    fn stream_determinism_and_separation() {
        let mut a = rng_stream(42, 7);
        let mut b = rng_stream(42, 7);
        let xs: Vec<u64> = (0..100).map(|_| a.next_u64()).collect();
        let ys: Vec<u64> = (0..100).map(|_| b.next_u64()).collect();
        assert_eq!(xs, ys);
        let mut c = rng_stream(42, 0);
        let mut d = rng_stream(42, 1);
        let cs: Vec<u64> = (0..100).map(|_| c.next_u64()).collect();
        let ds: Vec<u64> = (0..100).map(|_| d.next_u64()).collect();
        assert_ne!(cs, ds);
    }

    #[test]
    fn model_names_round_trip() {
        for m in [NoiseModel::Phenomenological, NoiseModel::Circuit, NoiseModel::CircuitCorrelated] {
            assert_eq!(m.as_str().parse::<NoiseModel>().unwrap(), m);
        }
    }
}
