//! Metadata block plus one table, as CSV or JSON.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::args::Format;

pub const TOOL: &str = concat!("ftmetro ", env!("CARGO_PKG_VERSION"));

pub const PREP_HEADER: [&str; 11] =
    ["model", "n", "rounds", "p_eff", "q_eff", "shots", "mean_w", "mean_w2", "m_rms_over_n", "stderr", "seed"];
pub const MEAS_HEADER: [&str; 8] = ["n", "r", "q_x", "bound", "exact_tail", "empirical_rate", "shots", "seed"];
pub const FIT_HEADER: [&str; 6] = ["p_eff", "q_eff", "gamma", "c", "nu", "sse"];
pub const FISHER_HEADER: [&str; 4] = ["protocol", "n", "FI", "params"];
pub const DECODE_HEADER: [&str; 6] = ["model", "n", "rounds", "instances", "max_defects", "mismatches"];

/// Finite floats become JSON numbers; others become strings.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(x.to_string()))
}

pub struct Report {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub partial: bool,
    /// Extra key/value lines such as thresholds and slopes.
    pub results: Vec<(String, String)>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Report {
    pub fn new(command: &str, config: Value, seed: u64, header: &[&'static str]) -> Self {
        Report {
            command: command.into(),
            config,
            seed,
            partial: false,
            results: Vec::new(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn result(&mut self, key: &str, value: impl ToString) {
        self.results.push((key.into(), value.to_string()));
    }

    fn metadata(&self, timestamp: &str) -> Vec<(String, String)> {
        let mut m = vec![
            ("tool".to_string(), TOOL.to_string()),
            ("command".into(), self.command.clone()),
            ("config".into(), self.config.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("timestamp".into(), timestamp.to_string()),
            ("partial".into(), self.partial.to_string()),
        ];
        m.extend(self.results.iter().cloned());
        m
    }

    pub fn write_to(&self, out: Option<&Path>, format: Format) -> io::Result<()> {
        let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
        match out {
            Some(path) => {
                let mut w = BufWriter::new(File::create(path)?);
                self.render(&mut w, format, &timestamp)?;
                w.flush()
            }
            None => {
                let stdout = io::stdout();
                let mut w = stdout.lock();
                self.render(&mut w, format, &timestamp)
            }
        }
    }

    pub fn render<W: Write>(&self, w: &mut W, format: Format, timestamp: &str) -> io::Result<()> {
        match format {
            Format::Csv => {
                for (k, v) in self.metadata(timestamp) {
                    writeln!(w, "# {k}={v}")?;
                }
                let mut cw = csv::Writer::from_writer(&mut *w);
                cw.write_record(&self.header)?;
                for row in &self.rows {
                    cw.write_record(row.iter().map(cell_text))?;
                }
                cw.flush()?;
                Ok(())
            }
            Format::Json => {
                let mut meta = Map::new();
                for (k, v) in self.metadata(timestamp) {
                    let value = match k.as_str() {
                        "config" => self.config.clone(),
                        "seed" => json!(self.seed),
                        "partial" => json!(self.partial),
                        _ => Value::String(v),
                    };
                    meta.insert(k, value);
                }
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.header.iter().map(|h| h.to_string()).zip(r.iter().cloned()).collect()))
                    .collect();
                let doc = json!({ "metadata": meta, "header": self.header, "rows": rows });
                serde_json::to_writer_pretty(&mut *w, &doc)?;
                writeln!(w)
            }
        }
    }
}

fn cell_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
