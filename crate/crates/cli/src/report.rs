//! Run reports and their byte-stable CSV / JSON encodings.

use std::collections::BTreeMap;

use clap::ValueEnum;
use cyclicity::criterion::Verdict;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::CommandConfig;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// `%.12g`.  Non-finite values print as `nan`, `inf`, `-inf`.
pub fn fmt_g12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..12).contains(&exp) {
        trim_zeros(format!("{:.*}", (11 - exp) as usize, x))
    } else {
        format!("{}e{}{:02}", trim_zeros(mant.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// The value `fmt_g12` prints, so that emitting and re-parsing is lossless.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let q: f64 = fmt_g12(x).parse().expect("g12 output parses");
    if q == 0.0 {
        0.0
    } else {
        q
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    /// Quantised number; non-finite values become text.
    pub fn num(x: f64) -> Cell {
        if x.is_finite() {
            Cell::Num(quantize(x))
        } else {
            Cell::Text(fmt_g12(x))
        }
    }

    pub fn text(s: impl Into<String>) -> Cell {
        Cell::Text(s.into())
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_g12(*x),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::num(n as f64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::text(s)
    }
}

pub fn verdict_tag(v: Verdict) -> &'static str {
    match v {
        Verdict::Divergent => "divergent",
        Verdict::Convergent => "convergent",
        Verdict::Inconclusive => "inconclusive",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Payload {
    /// The first table is the CSV output.
    pub tables: Vec<Table>,
    /// Printed after the CSV table as `KEY value` lines.
    pub summary: BTreeMap<String, Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerdictSummary {
    /// `None` when the verdicts differ and none is inconclusive.
    pub headline: Option<Verdict>,
    pub divergent: usize,
    pub convergent: usize,
    pub inconclusive: usize,
    /// Scan points inside the oracle's inconclusive band.
    pub in_band: usize,
    pub disagreements: usize,
}

impl VerdictSummary {
    pub fn from_verdicts(verdicts: &[Verdict], in_band: usize, disagreements: usize) -> Self {
        let count = |v: Verdict| verdicts.iter().filter(|&&x| x == v).count();
        let (divergent, convergent, inconclusive) =
            (count(Verdict::Divergent), count(Verdict::Convergent), count(Verdict::Inconclusive));
        let headline = if inconclusive + in_band > 0 {
            Some(Verdict::Inconclusive)
        } else if convergent == 0 && divergent > 0 {
            Some(Verdict::Divergent)
        } else if divergent == 0 && convergent > 0 {
            Some(Verdict::Convergent)
        } else {
            None
        };
        VerdictSummary { headline, divergent, convergent, inconclusive, in_band, disagreements }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_hash: String,
    pub config: CommandConfig,
    pub payload: Payload,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<VerdictSummary>,
}

/// Canonical JSON: sorted keys, two-space indent, scalar arrays on one line,
/// floats as `%.12g`.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::Numeric(format!("cannot serialise: {e}")))?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else {
                out.push_str(&fmt_g12(n.as_f64().expect("finite number")));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
            } else if items.iter().all(is_scalar) {
                out.push('[');
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(it, indent, out);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, it) in items.iter().enumerate() {
                    push_indent(indent + 1, out);
                    write_value(it, indent + 1, out);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                push_indent(indent, out);
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            // serde_json's default map is a BTreeMap, so keys arrive sorted.
            out.push_str("{\n");
            for (i, (k, val)) in map.iter().enumerate() {
                push_indent(indent + 1, out);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                write_value(val, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            push_indent(indent, out);
            out.push('}');
        }
    }
}

fn push_indent(n: usize, out: &mut String) {
    for _ in 0..n {
        out.push_str("  ");
    }
}

/// CSV (first table, then summary lines) or canonical JSON of the whole report.
pub fn emit_report(report: &RunReport, format: Format) -> Result<Vec<u8>, CliError> {
    match format {
        Format::Json => Ok(canonical_json(report)?.into_bytes()),
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            if let Some(t) = report.payload.tables.first() {
                w.write_record(&t.header).map_err(csv_err)?;
                for row in &t.rows {
                    w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
                }
            }
            let mut bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
            for (k, v) in &report.payload.summary {
                bytes.extend_from_slice(format!("{k} {}\n", v.render()).as_bytes());
            }
            Ok(bytes)
        }
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn parse_report(bytes: &[u8]) -> Result<RunReport, CliError> {
    serde_json::from_slice(bytes).map_err(|e| CliError::Usage(format!("not a run report: {e}")))
}
