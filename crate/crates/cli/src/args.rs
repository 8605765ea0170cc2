use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ftmetro::core_model::NoiseModel;
use ftmetro::fisher::{ProductForm, ReadoutModel};
use ftmetro::threshold::QRule;

use crate::CliError;

#[derive(Debug, Parser, Serialize)]
#[command(name = "ftmetro", version, about = "Fault-tolerant GHZ metrology simulator")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct Common {
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Master seed.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads; all available cores when absent.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Residual magnetization over an (n, p) grid.
    PrepSweep(SweepArgs),
    /// Crossing threshold and finite-size fits from a fresh sweep or a sweep CSV.
    Threshold(ThresholdArgs),
    /// Fisher information of the protected protocol and its comparisons.
    Fisher(FisherArgs),
    /// Closed-form comparison protocols only.
    Compare(CompareArgs),
    /// Majority-vote readout against its bounds.
    MeasureSim(MeasureArgs),
    /// Matching decoder against exhaustive search.
    DecodeCheck(DecodeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QRuleKind {
    Equal,
    Ratio,
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelArg {
    Phenomenological,
    Circuit,
    CircuitCorrelated,
}

impl From<ModelArg> for NoiseModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Phenomenological => NoiseModel::Phenomenological,
            ModelArg::Circuit => NoiseModel::Circuit,
            ModelArg::CircuitCorrelated => NoiseModel::CircuitCorrelated,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    /// Comma-separated sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// `start:stop:step` (inclusive) or a comma-separated list.
    #[arg(long, required = true)]
    pub p: String,
    #[arg(long, value_enum, default_value_t = QRuleKind::Equal)]
    pub q_rule: QRuleKind,
    /// rho in q = rho p, for `--q-rule ratio`.
    #[arg(long)]
    pub q_ratio: Option<f64>,
    /// q values paired with the p values, for `--q-rule list`.
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long, default_value_t = 20_000)]
    pub shots: usize,
    #[arg(long, default_value_t = 5.0)]
    pub rounds_factor: f64,
    #[arg(long, value_enum, default_value_t = ModelArg::Phenomenological)]
    pub model: ModelArg,
    /// CNOT fault rate as a function of p, written `p/<divisor>`.
    #[arg(long, default_value = "p/5")]
    pub p_cnot_rule: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ThresholdArgs {
    /// Sweep CSV written by `prep-sweep`; a fresh sweep runs when absent.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub sweep: OptionalSweep,
    /// Bootstrap resamples for the crossing and the fits (fresh sweeps only).
    #[arg(long, default_value_t = 100)]
    pub bootstrap: usize,
}

/// Sweep flags that are only required without `--in`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct OptionalSweep {
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long, value_enum, default_value_t = QRuleKind::Equal)]
    pub q_rule: QRuleKind,
    #[arg(long)]
    pub q_ratio: Option<f64>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long, default_value_t = 20_000)]
    pub shots: usize,
    #[arg(long, default_value_t = 5.0)]
    pub rounds_factor: f64,
    #[arg(long, value_enum, default_value_t = ModelArg::Phenomenological)]
    pub model: ModelArg,
    #[arg(long, default_value = "p/5")]
    pub p_cnot_rule: String,
}

impl OptionalSweep {
    pub fn into_sweep(self) -> Result<SweepArgs, CliError> {
        let p = self.p.ok_or_else(|| CliError::Config("--p is required without --in".into()))?;
        if self.n.is_empty() {
            return Err(CliError::Config("--n is required without --in".into()));
        }
        Ok(SweepArgs {
            n: self.n,
            p,
            q_rule: self.q_rule,
            q_ratio: self.q_ratio,
            q: self.q,
            shots: self.shots,
            rounds_factor: self.rounds_factor,
            model: self.model,
            p_cnot_rule: self.p_cnot_rule,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// p_eff = q_eff = 0.04, p = q = p_prep = 0.01.
    Top,
    /// p_eff = q_eff = 0.1, p = q = p_prep = 0.02.
    Bottom,
    Both,
    /// Rates from --p-eff, --q-eff, --p-phys, --q-phys, --p-prep.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductFormArg {
    Squared,
    Linear,
}

impl From<ProductFormArg> for ProductForm {
    fn from(f: ProductFormArg) -> Self {
        match f {
            ProductFormArg::Squared => ProductForm::Squared,
            ProductFormArg::Linear => ProductForm::Linear,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FisherArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![33usize, 65, 129, 257])]
    pub n: Vec<usize>,
    #[arg(long, value_enum, default_value_t = Regime::Both)]
    pub regime: Regime,
    #[arg(long)]
    pub p_eff: Option<f64>,
    #[arg(long)]
    pub q_eff: Option<f64>,
    #[arg(long)]
    pub p_phys: Option<f64>,
    #[arg(long)]
    pub q_phys: Option<f64>,
    #[arg(long)]
    pub p_prep: Option<f64>,
    #[arg(long, default_value_t = 4000)]
    pub shots: usize,
    #[arg(long, default_value_t = 5.0)]
    pub rounds_factor: f64,
    #[arg(long, value_enum, default_value_t = ProductFormArg::Squared)]
    pub product_form: ProductFormArg,
    /// Readout flip: exact parity flip, or the closed-form bound.
    #[arg(long, value_enum, default_value_t = ReadoutArg::Exact)]
    pub readout: ReadoutArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReadoutArg {
    Exact,
    Bound,
}

impl From<ReadoutArg> for ReadoutModel {
    fn from(r: ReadoutArg) -> Self {
        match r {
            ReadoutArg::Exact => ReadoutModel::Exact,
            ReadoutArg::Bound => ReadoutModel::Bound,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    /// Readout flip of the unprotected protocols.
    #[arg(long)]
    pub q: f64,
    /// Bit-flip rate for the uncorrected GHZ row.
    #[arg(long)]
    pub p: Option<f64>,
    /// alpha for the sub-threshold closed form; needs --p-eff.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub p_eff: Option<f64>,
    #[arg(long, value_enum, default_value_t = ProductFormArg::Squared)]
    pub product_form: ProductFormArg,
}

#[derive(Debug, Args, Serialize)]
pub struct MeasureArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1u32, 3, 5, 7, 9])]
    pub r: Vec<u32>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.02, 0.05, 0.1, 0.2])]
    pub q_x: Vec<f64>,
    /// Probe qubits per shot.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub shots: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct DecodeArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![3usize, 4, 5, 6, 7])]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 3, 4, 5, 6])]
    pub rounds: Vec<usize>,
    /// Random instances per (n, rounds) cell.
    #[arg(long, default_value_t = 400)]
    pub instances: usize,
    #[arg(long, default_value_t = 6)]
    pub max_defects: usize,
    /// p_eff and q_eff, or physical p in the circuit models.
    #[arg(long, default_value_t = 0.05)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = ModelArg::Phenomenological)]
    pub model: ModelArg,
    #[arg(long, default_value = "p/5")]
    pub p_cnot_rule: String,
    /// Writes the detector graph of the first (n, rounds) cell as an edge list.
    #[arg(long)]
    pub dump_edges: Option<PathBuf>,
}

/// `start:stop:step`, inclusive of stop within 1e-12, or a comma list.
pub fn parse_values(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = |what: &str| CliError::Config(format!("cannot parse {what} in {s:?}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("range"));
        }
        let v: Vec<f64> = parts.iter().map(|x| x.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad("range"))?;
        let (start, stop, step) = (v[0], v[1], v[2]);
        if !(step > 0.0) || stop < start {
            return Err(CliError::Config(format!("range {s:?} needs step > 0 and stop >= start")));
        }
        let mut out = Vec::new();
        let mut i = 0u64;
        loop {
            let x = start + i as f64 * step;
            if x > stop + 1e-12 {
                break;
            }
            // Trim accumulated floating error so grid values print cleanly.
            out.push((x * 1e12).round() / 1e12);
            i += 1;
        }
        Ok(out)
    } else {
        s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad("value"))).collect()
    }
}

/// Divisor from `p/<d>`.
pub fn parse_p_cnot_rule(s: &str) -> Result<f64, CliError> {
    let d = s
        .strip_prefix("p/")
        .and_then(|d| d.trim().parse::<f64>().ok())
        .ok_or_else(|| CliError::Config(format!("--p-cnot-rule {s:?} must look like p/5")))?;
    if !(d > 0.0) {
        return Err(CliError::Config(format!("--p-cnot-rule divisor {d} must be positive")));
    }
    Ok(d)
}

pub fn q_rule(args: &SweepArgs) -> Result<QRule, CliError> {
    match args.q_rule {
        QRuleKind::Equal => Ok(QRule::Equal),
        QRuleKind::Ratio => args
            .q_ratio
            .map(QRule::Ratio)
            .ok_or_else(|| CliError::Config("--q-rule ratio needs --q-ratio".into())),
        QRuleKind::List => {
            let q = args.q.as_deref().ok_or_else(|| CliError::Config("--q-rule list needs --q".into()))?;
            Ok(QRule::List(parse_values(q)?))
        }
    }
}
