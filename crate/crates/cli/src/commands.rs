use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use ftmetro::core_model::{EffectiveNoise, NoiseModel, NoiseParams};
use ftmetro::decoder::{brute_force_decode, build_matching_graph, decode, GraphNoise, BRUTE_FORCE_LIMIT};
use ftmetro::fisher::{
    comparison_points, fi_bitflip_no_qec, fi_qec_subthreshold, log_log_slope, qec_fisher_point, FisherPoint,
    Protocol, QecRegime,
};
use ftmetro::meas_sim::{majority_vote_exact_tail, majority_vote_failure_bound, simulate_majority_vote, VoteConfig};
use ftmetro::prep_sim::{default_rounds, PrepConfig, PrepRunner, PrepStats};
use ftmetro::rep_code::Detector;
use ftmetro::threshold::{
    crossover_bootstrap_spread, crossover_threshold, fit_finite_size, fit_finite_size_bootstrap,
    gamma_scaling_exponent, sweep_with, CurvePoint, FitResult, SweepSpec, SweepTable,
};
use ftmetro::Error;

use crate::args::{
    parse_p_cnot_rule, parse_values, q_rule, CompareArgs, DecodeArgs, FisherArgs, MeasureArgs, Regime, SweepArgs,
    ThresholdArgs,
};
use crate::output::{num, Report, DECODE_HEADER, FISHER_HEADER, FIT_HEADER, MEAS_HEADER, PREP_HEADER};
use crate::CliError;

/// Report plus the exit code to use after it is written.
pub struct Outcome {
    pub report: Report,
    pub code: i32,
}

impl Outcome {
    fn ok(report: Report) -> Self {
        let code = if report.partial { 1 } else { 0 };
        Outcome { report, code }
    }
}

/// Values above this p_eff sit past the equal-rate preparation crossing.
const PREP_CROSSING_HINT: f64 = 0.067;

pub fn build_spec(args: &SweepArgs, seed: u64) -> Result<SweepSpec, CliError> {
    let spec = SweepSpec {
        n_list: args.n.clone(),
        p_list: parse_values(&args.p)?,
        q_rule: q_rule(args)?,
        model: args.model.into(),
        shots: args.shots,
        rounds_factor: args.rounds_factor,
        seed,
        p_cnot_divisor: parse_p_cnot_rule(&args.p_cnot_rule)?,
    };
    spec.validate()?;
    Ok(spec)
}

fn run_sweep(spec: &SweepSpec) -> Result<SweepTable, CliError> {
    let total = spec.n_list.len() * spec.p_list.len();
    let mut done = 0;
    Ok(sweep_with(spec, |row| {
        done += 1;
        eprintln!("[{done}/{total}] n={} p={} m_rms/n={:.5}", row.n, row.p, row.stats.m_rms_over_n);
    })?)
}

fn prep_row(model: NoiseModel, p_eff: f64, q_eff: f64, s: &PrepStats, seed: u64) -> Vec<Value> {
    vec![
        json!(model.as_str()),
        json!(s.n),
        json!(s.rounds),
        num(p_eff),
        num(q_eff),
        json!(s.shots),
        num(s.mean_w),
        num(s.mean_w2),
        num(s.m_rms_over_n),
        num(s.stderr),
        json!(seed),
    ]
}

fn note_failures(report: &mut Report, table: &SweepTable) {
    report.partial = table.partial;
    for (i, (n, p, msg)) in table.failures.iter().enumerate() {
        report.result(&format!("failure.{i}"), format!("n={n} p={p}: {msg}"));
    }
}

pub fn prep_sweep(args: &SweepArgs, seed: u64, config: Value) -> Result<Outcome, CliError> {
    let spec = build_spec(args, seed)?;
    let table = run_sweep(&spec)?;
    let mut report = Report::new("prep-sweep", config, seed, &PREP_HEADER);
    for r in &table.rows {
        report.rows.push(prep_row(r.model, r.p_eff, r.q_eff, &r.stats, r.seed));
    }
    note_failures(&mut report, &table);
    Ok(Outcome::ok(report))
}

/// One data row of a sweep CSV.
#[derive(Debug, Clone, serde::Deserialize)]
struct PrepCsvRow {
    model: String,
    n: usize,
    #[allow(dead_code)]
    rounds: usize,
    p_eff: f64,
    q_eff: f64,
    #[allow(dead_code)]
    shots: usize,
    #[allow(dead_code)]
    mean_w: f64,
    #[allow(dead_code)]
    mean_w2: f64,
    m_rms_over_n: f64,
    #[allow(dead_code)]
    stderr: f64,
    #[allow(dead_code)]
    seed: u64,
}

fn read_sweep_csv(path: &Path) -> Result<Vec<PrepCsvRow>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let rows: Vec<PrepCsvRow> = rdr
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(CliError::Config(format!("{} has no data rows", path.display())));
    }
    Ok(rows)
}

/// Swept parameter recovered from p_eff: p_eff itself, or p = p_eff / 3 in
/// the circuit models.
fn swept_p(model: &str, p_eff: f64) -> Result<f64, CliError> {
    match model.parse::<NoiseModel>()? {
        NoiseModel::Phenomenological => Ok(p_eff),
        _ => Ok(p_eff / 3.0),
    }
}

fn fit_row(p_eff: f64, q_eff: f64, f: &FitResult) -> Vec<Value> {
    vec![num(p_eff), num(q_eff), num(f.gamma), num(f.c), num(f.nu), num(f.sse)]
}

pub fn threshold(args: ThresholdArgs, seed: u64, config: Value) -> Result<Outcome, CliError> {
    let mut report = Report::new("threshold", config, seed, &FIT_HEADER);
    let mut points = Vec::new();
    // (p_eff, q_eff) bit patterns keep columns ordered and exact.
    let mut columns: BTreeMap<(u64, u64), Vec<(usize, f64, Option<PrepStats>)>> = BTreeMap::new();
    let mut table = None;
    let axis;
    match &args.input {
        Some(path) => {
            let rows = read_sweep_csv(path)?;
            axis = if rows[0].model == NoiseModel::Phenomenological.as_str() { "p_eff" } else { "p" };
            for r in &rows {
                points.push(CurvePoint { n: r.n, p: swept_p(&r.model, r.p_eff)?, value: r.m_rms_over_n });
                columns.entry((r.p_eff.to_bits(), r.q_eff.to_bits())).or_default().push((r.n, r.m_rms_over_n, None));
            }
        }
        None => {
            let spec = build_spec(&args.sweep.clone().into_sweep()?, seed)?;
            axis = if spec.model == NoiseModel::Phenomenological { "p_eff" } else { "p" };
            let t = run_sweep(&spec)?;
            points = t.curve_points();
            for r in &t.rows {
                columns
                    .entry((r.p_eff.to_bits(), r.q_eff.to_bits()))
                    .or_default()
                    .push((r.n, r.stats.m_rms_over_n, Some(r.stats.clone())));
            }
            note_failures(&mut report, &t);
            table = Some(t);
        }
    }
    report.result("p_axis", axis);

    let mut gammas = Vec::new();
    let mut col_keys: Vec<&(u64, u64)> = columns.keys().collect();
    col_keys.sort_by(|a, b| f64::from_bits(a.0).total_cmp(&f64::from_bits(b.0)));
    for key in col_keys {
        let col = &columns[key];
        let (p_eff, q_eff) = (f64::from_bits(key.0), f64::from_bits(key.1));
        if col.len() < 4 {
            eprintln!("warning: p_eff={p_eff} q_eff={q_eff} has {} sizes; fit needs 4", col.len());
            continue;
        }
        let fit = match col.iter().map(|c| c.2.clone()).collect::<Option<Vec<_>>>() {
            Some(stats) if args.bootstrap >= 2 => fit_finite_size_bootstrap(&stats, args.bootstrap, seed)?,
            _ => fit_finite_size(&col.iter().map(|c| (c.0, c.1)).collect::<Vec<_>>())?,
        };
        if let (Some(g), Some(c), Some(nu)) = (fit.gamma_spread, fit.c_spread, fit.nu_spread) {
            report.result(&format!("fit_spread[p_eff={p_eff}]"), format!("gamma={g} c={c} nu={nu}"));
        }
        gammas.push((p_eff, fit.gamma));
        report.rows.push(fit_row(p_eff, q_eff, &fit));
    }
    if gammas.len() >= 3 {
        match gamma_scaling_exponent(&gammas) {
            Ok(s) => {
                for (p, g) in &s.excluded {
                    eprintln!("warning: gamma={g} at p_eff={p} excluded from the slope");
                }
                report.result("gamma_slope", s.slope);
            }
            Err(e) => eprintln!("warning: gamma slope unavailable: {e}"),
        }
    }

    let mut code = if report.partial { 1 } else { 0 };
    match crossover_threshold(&points) {
        Ok(c) => {
            report.result("p_th", c.p_th);
            report.result("half_spread", c.half_spread);
            let pairs: Vec<String> = c.pairs.iter().map(|(a, b, p)| format!("{a}/{b}:{p}")).collect();
            report.result("pair_crossings", pairs.join(" "));
            if let Some(t) = &table {
                if args.bootstrap >= 2 {
                    match crossover_bootstrap_spread(t, args.bootstrap, seed) {
                        Ok(s) => report.result("bootstrap_spread", s),
                        Err(e) => report.result("bootstrap_spread", format!("unavailable: {e}")),
                    }
                }
            }
        }
        Err(e @ (Error::NoCrossing(_) | Error::InvalidParameter(_))) => {
            eprintln!("diagnostic: {e}");
            report.result("diagnostic", e.to_string());
            code = 3;
        }
        Err(e) => return Err(e.into()),
    }
    Ok(Outcome { report, code })
}

fn params_text(p: &FisherPoint, regime: Option<&str>) -> String {
    let mut parts: Vec<String> = regime.map(|r| format!("regime={r}")).into_iter().collect();
    parts.extend(p.params.iter().map(|(k, v)| format!("{k}={v}")));
    parts.join(";")
}

fn fisher_row(p: &FisherPoint, regime: Option<&str>) -> Vec<Value> {
    vec![json!(p.protocol.as_str()), json!(p.n), num(p.fi), json!(params_text(p, regime))]
}

fn regimes(args: &FisherArgs) -> Result<Vec<(&'static str, QecRegime)>, CliError> {
    let readout = args.readout.into();
    let top = QecRegime { p_eff: 0.04, q_eff: 0.04, p: 0.01, q: 0.01, p_prep: 0.01, readout };
    let bottom = QecRegime { p_eff: 0.1, q_eff: 0.1, p: 0.02, q: 0.02, p_prep: 0.02, readout };
    Ok(match args.regime {
        Regime::Top => vec![("top", top)],
        Regime::Bottom => vec![("bottom", bottom)],
        Regime::Both => vec![("top", top), ("bottom", bottom)],
        Regime::Custom => {
            let need = |v: Option<f64>, name: &str| {
                v.ok_or_else(|| CliError::Config(format!("--regime custom needs --{name}")))
            };
            vec![(
                "custom",
                QecRegime {
                    p_eff: need(args.p_eff, "p-eff")?,
                    q_eff: need(args.q_eff, "q-eff")?,
                    p: need(args.p_phys, "p-phys")?,
                    q: need(args.q_phys, "q-phys")?,
                    p_prep: need(args.p_prep, "p-prep")?,
                    readout,
                },
            )]
        }
    })
}

pub fn fisher(args: &FisherArgs, seed: u64, config: Value) -> Result<Outcome, CliError> {
    let regimes = regimes(args)?;
    if args.n.len() < 2 || args.n.iter().any(|&n| n < 2) {
        return Err(CliError::Config("--n needs at least two sizes, each >= 2".into()));
    }
    // Validate every regime before the first simulation.
    for (name, r) in &regimes {
        EffectiveNoise::phenomenological(r.p_eff, r.q_eff)?;
        NoiseParams::new(r.p, r.q, r.p_prep, 0.0)?;
        for &n in &args.n {
            r.readout_flip(n)?;
        }
        if r.p_eff >= PREP_CROSSING_HINT || r.q_eff >= PREP_CROSSING_HINT {
            eprintln!("warning: regime {name} lies above the preparation crossing; expect sub-Heisenberg scaling");
        }
    }
    let mut report = Report::new("fisher", config, seed, &FISHER_HEADER);
    for (name, regime) in &regimes {
        let mut qec = Vec::new();
        for &n in &args.n {
            let cfg = PrepConfig {
                rounds: default_rounds(n, args.rounds_factor),
                ..PrepConfig::phenomenological(n, regime.p_eff, regime.q_eff, args.shots, seed)?
            };
            let stats = PrepRunner::new(cfg)?.estimate()?;
            let point = qec_fisher_point(regime, &stats)?;
            eprintln!("regime={name} n={n} FI={:.4}", point.fi);
            qec.push((n, point.fi));
            let cmp = comparison_points(n, regime.q_x(), args.product_form.into())?;
            let order = [Protocol::Noiseless, Protocol::Qec, Protocol::ProductState, Protocol::GhzBlocks];
            for protocol in order {
                if protocol == Protocol::Qec {
                    report.rows.push(fisher_row(&point, Some(name)));
                } else if let Some(p) = cmp.iter().find(|p| p.protocol == protocol) {
                    report.rows.push(fisher_row(p, Some(name)));
                }
            }
        }
        report.result(&format!("qec_slope.{name}"), log_log_slope(&qec)?);
    }
    Ok(Outcome::ok(report))
}

pub fn compare(args: &CompareArgs, seed: u64, config: Value) -> Result<Outcome, CliError> {
    if !(0.0..0.5).contains(&args.q) {
        return Err(CliError::Config(format!("--q {} must lie in [0, 1/2)", args.q)));
    }
    if args.alpha.is_some() != args.p_eff.is_some() {
        return Err(CliError::Config("--alpha and --p-eff go together".into()));
    }
    let mut report = Report::new("compare", config, seed, &FISHER_HEADER);
    for &n in &args.n {
        if n == 0 {
            return Err(CliError::Config("sizes must be positive".into()));
        }
        for p in comparison_points(n, args.q, args.product_form.into())? {
            report.rows.push(fisher_row(&p, None));
        }
        if let Some(p) = args.p {
            let pt = FisherPoint {
                protocol: Protocol::BitflipNoQec,
                n,
                fi: fi_bitflip_no_qec(n, p, false),
                params: vec![("p".into(), p)],
            };
            report.rows.push(fisher_row(&pt, None));
        }
        if let (Some(alpha), Some(p_eff)) = (args.alpha, args.p_eff) {
            let p = args.p.unwrap_or(0.0);
            let pt = FisherPoint {
                protocol: Protocol::QecSubthreshold,
                n,
                fi: fi_qec_subthreshold(n, p, p_eff, alpha, 0.0, 0.0),
                params: vec![("p".into(), p), ("p_eff".into(), p_eff), ("alpha".into(), alpha)],
            };
            report.rows.push(fisher_row(&pt, None));
        }
    }
    Ok(Outcome::ok(report))
}

pub fn measure_sim(args: &MeasureArgs, seed: u64, config: Value) -> Result<Outcome, CliError> {
    let mut cells = Vec::new();
    for &r in &args.r {
        for &q in &args.q_x {
            cells.push(VoteConfig::new(r, q, args.n)?);
        }
    }
    if args.shots == 0 {
        return Err(CliError::Config("--shots must be positive".into()));
    }
    let mut report = Report::new("measure-sim", config, seed, &MEAS_HEADER);
    let mut violations = Vec::new();
    for (i, cfg) in cells.iter().enumerate() {
        let cell_seed = seed.wrapping_add(i as u64);
        let s = simulate_majority_vote(cfg, args.shots, cell_seed)?;
        let tail = majority_vote_exact_tail(cfg.r, cfg.q_x);
        let trials = args.shots as f64 * cfg.n as f64;
        let sigma = (tail * (1.0 - tail) / trials).sqrt();
        if s.per_qubit_rate > tail + 3.0 * sigma {
            violations.push(format!("r={} q_x={}", cfg.r, cfg.q_x));
        }
        report.rows.push(vec![
            json!(cfg.n),
            json!(cfg.r),
            num(cfg.q_x),
            num(majority_vote_failure_bound(cfg.r, cfg.q_x)),
            num(tail),
            num(s.per_qubit_rate),
            json!(args.shots),
            json!(cell_seed),
        ]);
    }
    report.result("violations", violations.len());
    if violations.is_empty() {
        Ok(Outcome::ok(report))
    } else {
        eprintln!("empirical rate above the exact tail by more than 3 sigma: {}", violations.join(", "));
        report.result("violating_cells", violations.join(" "));
        Ok(Outcome { report, code: 4 })
    }
}

fn graph_noise(args: &DecodeArgs) -> Result<GraphNoise, CliError> {
    Ok(match NoiseModel::from(args.model) {
        NoiseModel::Phenomenological => GraphNoise::Effective(EffectiveNoise::phenomenological(args.p, args.p)?),
        _ => {
            let d = parse_p_cnot_rule(&args.p_cnot_rule)?;
            GraphNoise::Physical(NoiseParams::new(args.p, args.p, args.p, args.p / d)?)
        }
    })
}

pub fn decode_check(args: &DecodeArgs, seed: u64, config: Value) -> Result<Outcome, CliError> {
    if args.max_defects > BRUTE_FORCE_LIMIT {
        return Err(CliError::Config(format!("--max-defects above the exhaustive limit {BRUTE_FORCE_LIMIT}")));
    }
    let noise = graph_noise(args)?;
    let model: NoiseModel = args.model.into();
    let mut graphs = Vec::new();
    for &n in &args.n {
        for &rounds in &args.rounds {
            graphs.push(build_matching_graph(n, rounds, noise, model)?);
        }
    }
    if let (Some(path), Some(g)) = (&args.dump_edges, graphs.first()) {
        let mut w = BufWriter::new(File::create(path)?);
        g.write_edge_list(&mut w)?;
        w.flush()?;
    }
    let mut report = Report::new("decode-check", config, seed, &DECODE_HEADER);
    let mut total = 0;
    for (i, g) in graphs.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let all: Vec<Detector> =
            (0..g.rows()).flat_map(|r| (0..g.cols()).map(move |c| Detector::new(r, c))).collect();
        let mut mismatches = 0usize;
        for _ in 0..args.instances {
            let mut pool = all.clone();
            let k = rng.random_range(0..=args.max_defects.min(pool.len()));
            for j in 0..k {
                let s = rng.random_range(j..pool.len());
                pool.swap(j, s);
            }
            pool.truncate(k);
            let fast = decode(g, &pool)?;
            let slow = brute_force_decode(g, &pool)?;
            mismatches += (fast.iweight != slow.iweight) as usize;
        }
        total += mismatches;
        report.rows.push(vec![
            json!(model.as_str()),
            json!(g.n),
            json!(g.rounds),
            json!(args.instances),
            json!(args.max_defects),
            json!(mismatches),
        ]);
    }
    report.result("mismatches", total);
    let code = if total > 0 { 4 } else { 0 };
    Ok(Outcome { report, code })
}
