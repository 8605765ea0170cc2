//! Python module `ftmetro`: noise models, preparation Monte Carlo, decoding,
//! readout bounds, Fisher information and threshold analysis.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ftmetro::core_model::{self, NoiseModel};
use ftmetro::decoder::{self, GraphNoise};
use ftmetro::fisher::{self, ProductForm, ProtocolParams, QecRegime, ReadoutModel, StageRates};
use ftmetro::meas_sim;
use ftmetro::prep_sim::{self, PrepConfig, PrepNoise, PrepRunner, PrepStats};
use ftmetro::rep_code::Detector;
use ftmetro::threshold::{self, CurvePoint, QRule, SweepSpec};

fn err(e: ftmetro::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn model(name: &str) -> PyResult<NoiseModel> {
    name.parse().map_err(err)
}

#[pyclass(name = "EffectiveNoise", frozen, get_all)]
struct PyEffectiveNoise {
    p_eff: f64,
    q_eff: f64,
    q_x: f64,
}

#[pymethods]
impl PyEffectiveNoise {
    fn __repr__(&self) -> String {
        format!("EffectiveNoise(p_eff={}, q_eff={}, q_x={})", self.p_eff, self.q_eff, self.q_x)
    }
}

/// Per-round effective rates from physical rates p, q, p_prep and p_cnot.
#[pyfunction]
#[pyo3(signature = (p, q, p_prep, p_cnot = 0.0))]
fn derive_effective_noise(p: f64, q: f64, p_prep: f64, p_cnot: f64) -> PyResult<PyEffectiveNoise> {
    let np = core_model::NoiseParams::new(p, q, p_prep, p_cnot).map_err(err)?;
    let e = core_model::derive_effective_noise(&np).map_err(err)?;
    Ok(PyEffectiveNoise { p_eff: e.p_eff, q_eff: e.q_eff, q_x: e.q_x })
}

#[pyfunction]
fn binom_weight_prob(n: u64, w: u64, r: f64) -> PyResult<f64> {
    core_model::binom_weight_prob(n, w, r).map_err(err)
}

/// Residual-weight statistics of one (n, rounds, noise) cell.
#[pyclass(name = "PrepStats", frozen)]
struct PyPrepStats(PrepStats);

#[pymethods]
impl PyPrepStats {
    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }
    #[getter]
    fn rounds(&self) -> usize {
        self.0.rounds
    }
    #[getter]
    fn shots(&self) -> usize {
        self.0.shots
    }
    #[getter]
    fn mean_w(&self) -> f64 {
        self.0.mean_w
    }
    #[getter]
    fn mean_w2(&self) -> f64 {
        self.0.mean_w2
    }
    #[getter]
    fn m2bar(&self) -> f64 {
        self.0.m2bar
    }
    #[getter]
    fn m_rms_over_n(&self) -> f64 {
        self.0.m_rms_over_n
    }
    #[getter]
    fn stderr(&self) -> f64 {
        self.0.stderr
    }
    #[getter]
    fn w_histogram(&self) -> Vec<u64> {
        self.0.w_histogram.clone()
    }
    fn fraction_above(&self, w: f64) -> f64 {
        self.0.fraction_above(w)
    }
    fn __repr__(&self) -> String {
        format!(
            "PrepStats(n={}, rounds={}, shots={}, m_rms_over_n={:.6})",
            self.0.n, self.0.rounds, self.0.shots, self.0.m_rms_over_n
        )
    }
}

/// Monte-Carlo estimate of the residual magnetization after preparation.
///
/// With `model="phenomenological"` the rates are p_eff and q_eff. Circuit
/// models read them as physical p = p_prep and q, with p_cnot = p / 5 for the
/// correlated model.
#[pyfunction]
#[pyo3(signature = (n, p, q, shots, seed, rounds = None, model = "phenomenological"))]
fn estimate_mrms(
    py: Python<'_>,
    n: usize,
    p: f64,
    q: f64,
    shots: usize,
    seed: u64,
    rounds: Option<usize>,
    model: &str,
) -> PyResult<PyPrepStats> {
    let m = self::model(model)?;
    let noise = match m {
        NoiseModel::Phenomenological => {
            PrepNoise::Effective(core_model::EffectiveNoise::phenomenological(p, q).map_err(err)?)
        }
        NoiseModel::Circuit => PrepNoise::Physical(core_model::NoiseParams::new(p, q, p, 0.0).map_err(err)?),
        NoiseModel::CircuitCorrelated => {
            PrepNoise::Physical(core_model::NoiseParams::new(p, q, p, p / 5.0).map_err(err)?)
        }
    };
    let cfg = PrepConfig {
        n,
        rounds: rounds.unwrap_or_else(|| prep_sim::default_rounds(n, 5.0)),
        model: m,
        noise,
        shots,
        master_seed: seed,
    };
    let stats = py.detach(|| PrepRunner::new(cfg).and_then(|r| r.estimate())).map_err(err)?;
    Ok(PyPrepStats(stats))
}

#[pyfunction]
fn nonlocal_bound(a: u32, p_eff: f64) -> PyResult<f64> {
    prep_sim::nonlocal_bound(a, p_eff).map_err(err)
}

/// Phenomenological (n, p) sweep. Returns (n, p, q, PrepStats) tuples.
#[pyfunction]
#[pyo3(signature = (n_list, p_list, shots, seed, q_ratio = 1.0))]
fn sweep(
    py: Python<'_>,
    n_list: Vec<usize>,
    p_list: Vec<f64>,
    shots: usize,
    seed: u64,
    q_ratio: f64,
) -> PyResult<Vec<(usize, f64, f64, PyPrepStats)>> {
    let rule = if q_ratio == 1.0 { QRule::Equal } else { QRule::Ratio(q_ratio) };
    let spec = SweepSpec::phenomenological(n_list, p_list, rule, shots, seed);
    let table = py.detach(|| threshold::sweep(&spec)).map_err(err)?;
    Ok(table.rows.into_iter().map(|r| (r.n, r.p, r.q, PyPrepStats(r.stats))).collect())
}

/// Minimum-weight matching on the phenomenological detector graph.
///
/// `defects` are (row, col) detector coordinates. Returns the spatial
/// correction as a list of bools and the total matched weight.
#[pyfunction]
fn decode(n: usize, rounds: usize, p_eff: f64, q_eff: f64, defects: Vec<(usize, usize)>) -> PyResult<(Vec<bool>, f64)> {
    let e = core_model::EffectiveNoise::phenomenological(p_eff, q_eff).map_err(err)?;
    let g = decoder::build_matching_graph(n, rounds, GraphNoise::Effective(e), NoiseModel::Phenomenological)
        .map_err(err)?;
    let dets: Vec<Detector> = defects.iter().map(|&(r, c)| Detector::new(r, c)).collect();
    let c = decoder::decode(&g, &dets).map_err(err)?;
    Ok((c.spatial_flips.iter().collect(), c.weight))
}

#[pyfunction]
fn majority_vote_exact_tail(r: u32, q_x: f64) -> f64 {
    meas_sim::majority_vote_exact_tail(r, q_x)
}

#[pyfunction]
fn majority_vote_failure_bound(r: u32, q_x: f64) -> f64 {
    meas_sim::majority_vote_failure_bound(r, q_x)
}

#[pyfunction]
fn required_repetitions(q_x: f64, n: usize) -> PyResult<u32> {
    meas_sim::required_repetitions(q_x, n).map_err(err)
}

#[pyfunction]
fn logical_meas_failure_bound(n: usize, r: u32, q_x: f64) -> f64 {
    meas_sim::logical_meas_failure_bound(n, r, q_x)
}

#[pyfunction]
fn parity_flip_exact(n: usize, r: u32, q_x: f64) -> f64 {
    meas_sim::parity_flip_exact(n, r, q_x)
}

/// Fisher information of the protected protocol at theta = 0.
#[pyfunction]
#[pyo3(signature = (n, p, wp_meas, wp_prep, m2bar))]
fn fi_qec(n: usize, p: f64, wp_meas: f64, wp_prep: f64, m2bar: f64) -> PyResult<f64> {
    let params = ProtocolParams { n, p, wp_meas, wp_prep, m2bar, q: 0.0, k: 1 };
    params.validate().map_err(err)?;
    Ok(fisher::fi_qec(&params))
}

/// Same quantity by enumeration over weight histories, for n <= 12.
#[pyfunction]
#[pyo3(signature = (n, p, wp_meas, wp_prep, w0_dist, theta = 0.0))]
fn exact_small_n_fi(n: usize, p: f64, wp_meas: f64, wp_prep: f64, w0_dist: Vec<f64>, theta: f64) -> PyResult<f64> {
    fisher::exact_small_n_fi(n, &StageRates { p, wp_meas, wp_prep }, &w0_dist, theta).map_err(err)
}

#[pyfunction]
fn fi_ghz_blocks(n: usize, k: usize, q: f64) -> PyResult<f64> {
    fisher::fi_ghz_blocks(n, k, q).map_err(err)
}

/// Best block size for readout error q: (k, FI).
#[pyfunction]
fn optimal_block(q: f64, n: usize) -> PyResult<(usize, f64)> {
    let b = fisher::optimal_block(q, n).map_err(err)?;
    Ok((b.k, b.fi))
}

#[pyfunction]
#[pyo3(signature = (n, q, linear = false))]
fn fi_product_state(n: usize, q: f64, linear: bool) -> f64 {
    let form = if linear { ProductForm::Linear } else { ProductForm::Squared };
    fisher::fi_product_state(n, q, form)
}

/// Protected-protocol FI from a preparation estimate and the stage rates.
#[pyfunction]
#[pyo3(signature = (stats, p_eff, q_eff, p, q, p_prep, bound_readout = false))]
fn qec_fisher(
    stats: PyRef<'_, PyPrepStats>,
    p_eff: f64,
    q_eff: f64,
    p: f64,
    q: f64,
    p_prep: f64,
    bound_readout: bool,
) -> PyResult<f64> {
    let readout = if bound_readout { ReadoutModel::Bound } else { ReadoutModel::Exact };
    let regime = QecRegime { p_eff, q_eff, p, q, p_prep, readout };
    Ok(fisher::qec_fisher_point(&regime, &stats.0).map_err(err)?.fi)
}

#[pyfunction]
fn log_log_slope(points: Vec<(usize, f64)>) -> PyResult<f64> {
    fisher::log_log_slope(&points).map_err(err)
}

/// Crossing of m_rms/n curves from (n, p, value) triples: (p_th, half_spread).
#[pyfunction]
fn crossover_threshold(points: Vec<(usize, f64, f64)>) -> PyResult<(f64, f64)> {
    let pts: Vec<CurvePoint> = points.into_iter().map(|(n, p, value)| CurvePoint { n, p, value }).collect();
    let c = threshold::crossover_threshold(&pts).map_err(err)?;
    Ok((c.p_th, c.half_spread))
}

/// Fit of 1 - gamma - c / n^nu to (n, value) pairs: (gamma, c, nu, sse).
#[pyfunction]
fn fit_finite_size(points: Vec<(usize, f64)>) -> PyResult<(f64, f64, f64, f64)> {
    let f = threshold::fit_finite_size(&points).map_err(err)?;
    Ok((f.gamma, f.c, f.nu, f.sse))
}

#[pyfunction]
fn gamma_scaling_exponent(points: Vec<(f64, f64)>) -> PyResult<f64> {
    Ok(threshold::gamma_scaling_exponent(&points).map_err(err)?.slope)
}

#[pymodule]
#[pyo3(name = "ftmetro")]
fn ftmetro_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEffectiveNoise>()?;
    m.add_class::<PyPrepStats>()?;
    m.add_function(wrap_pyfunction!(derive_effective_noise, m)?)?;
    m.add_function(wrap_pyfunction!(binom_weight_prob, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_mrms, m)?)?;
    m.add_function(wrap_pyfunction!(nonlocal_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(majority_vote_exact_tail, m)?)?;
    m.add_function(wrap_pyfunction!(majority_vote_failure_bound, m)?)?;
    m.add_function(wrap_pyfunction!(required_repetitions, m)?)?;
    m.add_function(wrap_pyfunction!(logical_meas_failure_bound, m)?)?;
    m.add_function(wrap_pyfunction!(parity_flip_exact, m)?)?;
    m.add_function(wrap_pyfunction!(fi_qec, m)?)?;
    m.add_function(wrap_pyfunction!(exact_small_n_fi, m)?)?;
    m.add_function(wrap_pyfunction!(fi_ghz_blocks, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_block, m)?)?;
    m.add_function(wrap_pyfunction!(fi_product_state, m)?)?;
    m.add_function(wrap_pyfunction!(qec_fisher, m)?)?;
    m.add_function(wrap_pyfunction!(log_log_slope, m)?)?;
    m.add_function(wrap_pyfunction!(crossover_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(fit_finite_size, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_scaling_exponent, m)?)?;
    Ok(())
}
