//! Noise sweeps, finite-size crossings and the fit 1 - gamma - c / n^nu.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::core_model::{EffectiveNoise, NoiseModel, NoiseParams};
use crate::error::{Error, Result};
use crate::prep_sim::{default_rounds, PrepConfig, PrepNoise, PrepRunner, PrepStats};

/// Resamples used by the bootstrap helpers when no count is given.
pub const DEFAULT_BOOTSTRAP: usize = 200;

/// nu grid in thousandths: 0.100 ..= 3.000.
pub const NU_MIN_MILLI: u32 = 100;
pub const NU_MAX_MILLI: u32 = 3000;
pub const NU_STEP_MILLI: u32 = 5;

/// How q is tied to the swept p.
#[derive(Debug, Clone, PartialEq)]
pub enum QRule {
    Equal,
    /// q = rho * p.
    Ratio(f64),
    /// q values paired one-to-one with the p list.
    List(Vec<f64>),
}

impl QRule {
    fn q_at(&self, idx: usize, p: f64) -> f64 {
        match self {
            QRule::Equal => p,
            QRule::Ratio(rho) => rho * p,
            QRule::List(qs) => qs[idx],
        }
    }

    pub fn describe(&self) -> String {
        match self {
            QRule::Equal => "equal".into(),
            QRule::Ratio(r) => format!("ratio:{r}"),
            QRule::List(qs) => {
                format!("list:{}", qs.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub n_list: Vec<usize>,
    /// Effective rates for the phenomenological model, physical p otherwise.
    pub p_list: Vec<f64>,
    pub q_rule: QRule,
    pub model: NoiseModel,
    pub shots: usize,
    pub rounds_factor: f64,
    pub seed: u64,
    /// p_cnot = p / divisor in the circuit models.
    pub p_cnot_divisor: f64,
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub n: usize,
    pub rounds: usize,
    /// The swept value.
    pub p: f64,
    pub q: f64,
    pub noise: PrepNoise,
    pub effective: EffectiveNoise,
}

impl SweepSpec {
    pub fn phenomenological(n_list: Vec<usize>, p_list: Vec<f64>, q_rule: QRule, shots: usize, seed: u64) -> Self {
        SweepSpec {
            n_list,
            p_list,
            q_rule,
            model: NoiseModel::Phenomenological,
            shots,
            rounds_factor: crate::prep_sim::DEFAULT_ROUNDS_FACTOR,
            seed,
            p_cnot_divisor: 5.0,
        }
    }

    /// Checks the lists and every cell's noise before anything runs.
    pub fn validate(&self) -> Result<()> {
        self.cells().map(|_| ())
    }

    pub fn cells(&self) -> Result<Vec<SweepCell>> {
        if self.n_list.is_empty() || self.p_list.is_empty() {
            return Err(Error::InvalidParameter("n and p lists must be non-empty".into()));
        }
        if !self.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("n list must be strictly increasing".into()));
        }
        if !self.p_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("p list must be strictly increasing".into()));
        }
        if self.shots == 0 {
            return Err(Error::InvalidParameter("shots must be positive".into()));
        }
        if !(self.rounds_factor > 0.0) {
            return Err(Error::InvalidParameter(format!("rounds factor {} must be positive", self.rounds_factor)));
        }
        if !(self.p_cnot_divisor > 0.0) {
            return Err(Error::InvalidParameter(format!("p_cnot divisor {} must be positive", self.p_cnot_divisor)));
        }
        match &self.q_rule {
            QRule::Ratio(r) if !(*r >= 0.0) => {
                return Err(Error::InvalidParameter(format!("ratio {r} must be nonnegative")));
            }
            QRule::List(qs) if qs.len() != self.p_list.len() => {
                return Err(Error::InvalidParameter(format!(
                    "q list has {} entries, p list has {}",
                    qs.len(),
                    self.p_list.len()
                )));
            }
            _ => {}
        }
        let mut out = Vec::with_capacity(self.n_list.len() * self.p_list.len());
        for &n in &self.n_list {
            let rounds = default_rounds(n, self.rounds_factor);
            for (i, &p) in self.p_list.iter().enumerate() {
                let q = self.q_rule.q_at(i, p);
                let noise = match self.model {
                    NoiseModel::Phenomenological => PrepNoise::Effective(EffectiveNoise::phenomenological(p, q)?),
                    _ => PrepNoise::Physical(NoiseParams::new(p, q, p, p / self.p_cnot_divisor)?),
                };
                let cfg = PrepConfig { n, rounds, model: self.model, noise, shots: self.shots, master_seed: self.seed };
                cfg.validate()?;
                let effective = cfg.effective()?;
                out.push(SweepCell { n, rounds, p, q, noise, effective });
            }
        }
        Ok(out)
    }
}

/// One finished cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub model: NoiseModel,
    pub n: usize,
    pub rounds: usize,
    pub p: f64,
    pub q: f64,
    pub p_eff: f64,
    pub q_eff: f64,
    pub seed: u64,
    pub stats: PrepStats,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// True when at least one cell failed.
    pub partial: bool,
    /// (n, p, message) for every failed cell.
    pub failures: Vec<(usize, f64, String)>,
}

impl SweepTable {
    /// (n, swept p, m_rms/n) for every row.
    pub fn curve_points(&self) -> Vec<CurvePoint> {
        self.rows.iter().map(|r| CurvePoint { n: r.n, p: r.p, value: r.stats.m_rms_over_n }).collect()
    }

    pub fn get(&self, n: usize, p: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.n == n && r.p == p)
    }
}

/// Runs every cell. All cells share the master seed, so neighbouring cells
/// use common random numbers.
pub fn sweep(spec: &SweepSpec) -> Result<SweepTable> {
    sweep_with(spec, |_| {})
}

/// As [`sweep`], calling `on_row` as each cell finishes. Cells run in order,
/// shots within a cell in parallel.
pub fn sweep_with<F: FnMut(&SweepRow)>(spec: &SweepSpec, mut on_row: F) -> Result<SweepTable> {
    let cells = spec.cells()?;
    let mut table = SweepTable::default();
    for cell in cells {
        let cfg = PrepConfig {
            n: cell.n,
            rounds: cell.rounds,
            model: spec.model,
            noise: cell.noise,
            shots: spec.shots,
            master_seed: spec.seed,
        };
        match PrepRunner::new(cfg).and_then(|r| r.estimate()) {
            Ok(stats) => {
                let row = SweepRow {
                    model: spec.model,
                    n: cell.n,
                    rounds: cell.rounds,
                    p: cell.p,
                    q: cell.q,
                    p_eff: cell.effective.p_eff,
                    q_eff: cell.effective.q_eff,
                    seed: spec.seed,
                    stats,
                };
                on_row(&row);
                table.rows.push(row);
            }
            Err(e) => {
                table.partial = true;
                table.failures.push((cell.n, cell.p, e.to_string()));
            }
        }
    }
    Ok(table)
}

/// A sample of one observable curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub n: usize,
    pub p: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Crossover {
    pub p_th: f64,
    /// Half the spread of the pairwise crossings.
    pub half_spread: f64,
    /// (n1, n2, crossing) per consecutive pair.
    pub pairs: Vec<(usize, usize, f64)>,
}

fn distinct_sizes(points: &[CurvePoint]) -> Vec<usize> {
    let mut ns: Vec<usize> = points.iter().map(|p| p.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns
}

fn curve(points: &[CurvePoint], n: usize) -> Vec<(f64, f64)> {
    let mut c: Vec<(f64, f64)> = points.iter().filter(|p| p.n == n).map(|p| (p.p, p.value)).collect();
    c.sort_by(|a, b| a.0.total_cmp(&b.0));
    c
}

/// Crossing of two sampled curves: first p where the larger size stops lying
/// above the smaller one, by linear interpolation of the difference.
fn pair_crossing(small: &[(f64, f64)], large: &[(f64, f64)]) -> Option<f64> {
    let common: Vec<(f64, f64)> = small
        .iter()
        .filter_map(|&(p, v1)| large.iter().find(|&&(q, _)| q == p).map(|&(_, v2)| (p, v2 - v1)))
        .collect();
    for w in common.windows(2) {
        let ((p0, d0), (p1, d1)) = (w[0], w[1]);
        if d0 > 0.0 && d1 <= 0.0 {
            return Some(p0 + (p1 - p0) * d0 / (d0 - d1));
        }
    }
    None
}

/// Mean and half-spread of the crossings of consecutive sizes.
pub fn crossover_threshold(points: &[CurvePoint]) -> Result<Crossover> {
    let ns = distinct_sizes(points);
    if ns.len() < 3 {
        return Err(Error::InvalidParameter(format!("need at least 3 sizes, got {}", ns.len())));
    }
    let mut ps: Vec<f64> = points.iter().map(|p| p.p).collect();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    if ps.len() < 5 {
        return Err(Error::InvalidParameter(format!("need at least 5 noise values, got {}", ps.len())));
    }
    let mut pairs = Vec::new();
    let mut missing = Vec::new();
    for w in ns.windows(2) {
        match pair_crossing(&curve(points, w[0]), &curve(points, w[1])) {
            Some(p) => pairs.push((w[0], w[1], p)),
            None => missing.push(format!("{}/{}", w[0], w[1])),
        }
    }
    if !missing.is_empty() {
        let span = format!("[{}, {}]", ps[0], ps[ps.len() - 1]);
        return Err(Error::NoCrossing(format!("no crossing for sizes {} in p range {span}", missing.join(", "))));
    }
    let xs: Vec<f64> = pairs.iter().map(|t| t.2).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(Crossover { p_th: mean, half_spread: (hi - lo) / 2.0, pairs })
}

/// m_rms/n of a bootstrap resample of a weight histogram.
pub fn resample_mrms<R: Rng + ?Sized>(n: usize, hist: &[u64], rng: &mut R) -> f64 {
    let shots: u64 = hist.iter().sum();
    let mut cum = Vec::with_capacity(hist.len());
    let mut acc = 0u64;
    for &c in hist {
        acc += c;
        cum.push(acc);
    }
    let nf = n as f64;
    let mut s = 0.0;
    for _ in 0..shots {
        let u = rng.random_range(0..shots);
        let w = cum.partition_point(|&c| c <= u);
        let m = nf - 2.0 * w as f64;
        s += m * m;
    }
    (s / shots as f64).sqrt() / nf
}

/// Standard deviation of the crossing estimate over shot resamples.
pub fn crossover_bootstrap_spread(table: &SweepTable, resamples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vals = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let pts: Vec<CurvePoint> = table
            .rows
            .iter()
            .map(|r| CurvePoint { n: r.n, p: r.p, value: resample_mrms(r.n, &r.stats.w_histogram, &mut rng) })
            .collect();
        if let Ok(c) = crossover_threshold(&pts) {
            vals.push(c.p_th);
        }
    }
    if vals.len() < 2 {
        return Err(Error::NoCrossing("too few resamples produced a crossing".into()));
    }
    Ok(std_dev(&vals))
}

fn std_dev(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Parameters of y = 1 - gamma - c n^-nu.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub gamma: f64,
    pub c: f64,
    pub nu: f64,
    pub sse: f64,
    /// Bootstrap standard deviations, when computed.
    pub gamma_spread: Option<f64>,
    pub c_spread: Option<f64>,
    pub nu_spread: Option<f64>,
}

/// Least squares of y = a + b x. Returns (a, b, sse).
fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 || !sxx.is_finite() {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let sse = x.iter().zip(y).map(|(xi, yi)| (yi - a - b * xi).powi(2)).sum();
    Some((a, b, sse))
}

/// Grid fit with nu stepping by `step_milli` thousandths over [0.1, 3.0].
/// Ties keep the smallest nu.
pub fn fit_finite_size_with_step(points: &[(usize, f64)], step_milli: u32) -> Result<FitResult> {
    if step_milli == 0 {
        return Err(Error::InvalidParameter("nu step must be positive".into()));
    }
    let mut ns: Vec<usize> = points.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() == 1 && points.len() > 1 {
        return Err(Error::InvalidParameter("all sizes equal; design is degenerate".into()));
    }
    if points.len() < 4 {
        return Err(Error::InvalidParameter(format!("need at least 4 points, got {}", points.len())));
    }
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mut best: Option<FitResult> = None;
    let mut milli = NU_MIN_MILLI;
    while milli <= NU_MAX_MILLI {
        let nu = milli as f64 / 1000.0;
        let x: Vec<f64> = points.iter().map(|p| (p.0 as f64).powf(-nu)).collect();
        if let Some((a, b, sse)) = linear_fit(&x, &y) {
            if best.as_ref().is_none_or(|f| sse < f.sse) {
                best = Some(FitResult {
                    gamma: 1.0 - a,
                    c: -b,
                    nu,
                    sse,
                    gamma_spread: None,
                    c_spread: None,
                    nu_spread: None,
                });
            }
        }
        milli += step_milli;
    }
    best.ok_or_else(|| Error::InvalidParameter("no nu on the grid gives a solvable design".into()))
}

/// Fit on the default nu grid.
pub fn fit_finite_size(points: &[(usize, f64)]) -> Result<FitResult> {
    fit_finite_size_with_step(points, NU_STEP_MILLI)
}

/// Fit of a fixed-noise column of sweep results, with bootstrap spreads
/// from resampling each size's shots.
pub fn fit_finite_size_bootstrap(stats: &[PrepStats], resamples: usize, seed: u64) -> Result<FitResult> {
    let pts: Vec<(usize, f64)> = stats.iter().map(|s| (s.n, s.m_rms_over_n)).collect();
    let mut fit = fit_finite_size(&pts)?;
    if resamples >= 2 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut g, mut c, mut nu) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..resamples {
            let rs: Vec<(usize, f64)> =
                stats.iter().map(|s| (s.n, resample_mrms(s.n, &s.w_histogram, &mut rng))).collect();
            let f = fit_finite_size(&rs)?;
            g.push(f.gamma);
            c.push(f.c);
            nu.push(f.nu);
        }
        fit.gamma_spread = Some(std_dev(&g));
        fit.c_spread = Some(std_dev(&c));
        fit.nu_spread = Some(std_dev(&nu));
    }
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaSlope {
    pub slope: f64,
    pub intercept: f64,
    /// Points dropped for nonpositive gamma or p.
    pub excluded: Vec<(f64, f64)>,
}

/// Least-squares slope of ln gamma against ln p.
pub fn gamma_scaling_exponent(points: &[(f64, f64)]) -> Result<GammaSlope> {
    let (kept, excluded): (Vec<(f64, f64)>, Vec<(f64, f64)>) =
        points.iter().partition(|&&(p, g)| p > 0.0 && g > 0.0);
    if kept.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 positive points, got {} ({} excluded)",
            kept.len(),
            excluded.len()
        )));
    }
    let x: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let (a, b, _) =
        linear_fit(&x, &y).ok_or_else(|| Error::InvalidParameter("all p values equal".into()))?;
    Ok(GammaSlope { slope: b, intercept: a, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(ns: &[usize], ps: &[f64], f: impl Fn(usize, f64) -> f64) -> Vec<CurvePoint> {
        ns.iter().flat_map(|&n| ps.iter().map(move |&p| (n, p))).map(|(n, p)| CurvePoint { n, p, value: f(n, p) }).collect()
    }

    fn grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
        (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect()
    }

    #[test]
    fn linear_family_crosses_at_construction_point() {
        let pts = synthetic(&[17, 33, 65, 129], &grid(0.02, 0.12, 11), |n, p| 0.5 - (p - 0.067) * n as f64 / 100.0);
        let c = crossover_threshold(&pts).unwrap();
        assert!((c.p_th - 0.067).abs() < 1e-12);
        assert!(c.half_spread < 1e-12);
        assert_eq!(c.pairs.len(), 3);
    }

    #[test]
    fn crossing_needs_enough_data() {
        let pts = synthetic(&[17, 33], &grid(0.02, 0.12, 11), |n, p| 0.5 - (p - 0.067) * n as f64);
        assert!(matches!(crossover_threshold(&pts), Err(Error::InvalidParameter(_))));
        let pts = synthetic(&[17, 33, 65], &grid(0.02, 0.12, 4), |n, p| 0.5 - (p - 0.067) * n as f64);
        assert!(matches!(crossover_threshold(&pts), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn curves_without_crossing_report_the_pairs() {
        let pts = synthetic(&[17, 33, 65], &grid(0.02, 0.12, 6), |n, p| 1.0 - (p / 0.05) * (1.0 + 1.0 / n as f64));
        match crossover_threshold(&pts) {
            Err(Error::NoCrossing(msg)) => assert!(msg.contains("17/33") && msg.contains("33/65")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn denser_grid_moves_little_for_smooth_curves() {
        let f = |n: usize, p: f64| 1.0 / (1.0 + ((p - 0.07) * n as f64 / 2.0).exp());
        let coarse = crossover_threshold(&synthetic(&[17, 33, 65], &grid(0.02, 0.12, 6), f)).unwrap();
        let fine = crossover_threshold(&synthetic(&[17, 33, 65], &grid(0.02, 0.12, 51), f)).unwrap();
        assert!((coarse.p_th - 0.07).abs() < 0.02);
        assert!((fine.p_th - 0.07).abs() < 1e-3);
    }

    #[test]
    fn fit_recovers_synthetic_parameters() {
        let ns = [9usize, 17, 33, 65, 129, 257];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<(usize, f64)> = ns
            .iter()
            .map(|&n| (n, 1.0 - 0.02 - 0.5 / n as f64 + 1e-4 * (rng.random::<f64>() * 2.0 - 1.0)))
            .collect();
        let f = fit_finite_size(&pts).unwrap();
        assert!((f.gamma - 0.02).abs() < 0.002, "{f:?}");
        assert!((f.c - 0.5).abs() < 0.05, "{f:?}");
        assert!((f.nu - 1.0).abs() < 0.1, "{f:?}");
    }

    #[test]
    fn fit_of_constant_one() {
        let f = fit_finite_size(&[(5, 1.0), (9, 1.0), (17, 1.0), (33, 1.0)]).unwrap();
        assert_eq!((f.gamma, f.c), (0.0, 0.0));
        assert_eq!(f.sse, 0.0);
        assert_eq!(f.nu, 0.1);
    }

    #[test]
    fn fit_rejects_degenerate_designs() {
        assert!(fit_finite_size(&[(9, 0.9), (9, 0.8), (9, 0.85), (9, 0.9)]).is_err());
        assert!(fit_finite_size(&[(9, 0.9), (17, 0.8), (33, 0.85)]).is_err());
    }

    #[test]
    fn refinement_never_raises_the_objective() {
        let pts = [(9usize, 0.91), (17, 0.93), (33, 0.95), (65, 0.955), (129, 0.96)];
        let coarse = fit_finite_size_with_step(&pts, 10).unwrap();
        let mid = fit_finite_size(&pts).unwrap();
        let fine = fit_finite_size_with_step(&pts, 1).unwrap();
        assert!(mid.sse <= coarse.sse && fine.sse <= mid.sse);
    }

    #[test]
    fn gamma_slope_examples() {
        let ps = [0.01, 0.02, 0.03, 0.04, 0.05];
        let quad: Vec<(f64, f64)> = ps.iter().map(|&p| (p, 3.0 * p * p)).collect();
        let s = gamma_scaling_exponent(&quad).unwrap();
        assert!((s.slope - 2.0).abs() < 1e-12 && (s.intercept - 3f64.ln()).abs() < 1e-10);
        let lin: Vec<(f64, f64)> = ps.iter().map(|&p| (p, p)).collect();
        assert!((gamma_scaling_exponent(&lin).unwrap().slope - 1.0).abs() < 1e-12);
        let mut with_bad = quad.clone();
        with_bad.push((0.06, -1e-4));
        let s = gamma_scaling_exponent(&with_bad).unwrap();
        assert_eq!(s.excluded.len(), 1);
        assert!(gamma_scaling_exponent(&quad[..2]).is_err());
    }

    #[test]
    fn spec_validation() {
        let mut s = SweepSpec::phenomenological(vec![5, 9], vec![0.01, 0.02], QRule::Equal, 10, 1);
        assert!(s.validate().is_ok());
        s.n_list = vec![9, 5];
        assert!(s.validate().is_err());
        s.n_list = vec![5, 9];
        s.q_rule = QRule::List(vec![0.1]);
        assert!(s.validate().is_err());
        s.q_rule = QRule::Ratio(2.0);
        s.p_list = vec![0.1, 0.3];
        assert!(s.validate().is_err());
        s.model = NoiseModel::Circuit;
        s.q_rule = QRule::Equal;
        s.p_list = vec![0.01, 0.02];
        let cells = s.cells().unwrap();
        assert_eq!(cells.len(), 4);
        match cells[1].noise {
            PrepNoise::Physical(np) => assert_eq!((np.p, np.q, np.p_prep, np.p_cnot), (0.02, 0.02, 0.02, 0.004)),
            _ => panic!(),
        }
        assert!((cells[1].effective.q_eff - 0.1).abs() < 1e-15);
    }

    #[test]
    fn single_cell_and_zero_noise_sweeps() {
        let s = SweepSpec::phenomenological(vec![7], vec![0.05], QRule::Equal, 50, 4);
        let t = sweep(&s).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(!t.partial);
        let s = SweepSpec::phenomenological(vec![5, 9, 17], vec![0.0], QRule::Equal, 20, 4);
        let mut streamed = 0;
        let t = sweep_with(&s, |_| streamed += 1).unwrap();
        assert_eq!(streamed, 3);
        assert!(t.rows.iter().all(|r| r.stats.m_rms_over_n == 1.0));
    }

    #[test]
    fn sweeps_are_deterministic() {
        let s = SweepSpec::phenomenological(vec![5, 9, 17, 33], vec![0.03], QRule::Ratio(0.5), 200, 11);
        let a = sweep(&s).unwrap();
        let b = sweep(&s).unwrap();
        assert_eq!(a, b);
        let stats: Vec<PrepStats> = a.rows.iter().map(|r| r.stats.clone()).collect();
        let fa = fit_finite_size_bootstrap(&stats, 20, 1).unwrap();
        let fb = fit_finite_size_bootstrap(&stats, 20, 1).unwrap();
        assert_eq!(fa, fb);
        assert!(fa.gamma_spread.unwrap() >= 0.0);
    }
}
