//! Tabular artifacts in CSV or JSON.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), which is
//! lossless for f64, so CSV and JSON decode to identical values and an
//! emit → read → emit cycle reproduces the file byte for byte. Lines end in LF
//! and CSV files always carry a header.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lambdaflow::flow::{classify, regime_letter, Direction};
use lambdaflow::{
    CoefficientTrajectory, DynamicsTrajectory, EnsembleEstimate, IntervalReport, SweepResult,
};
use serde_json::Value;

use crate::config::Format;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    Text,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Field {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Field::Float(x) => Some(*x),
            Field::Int(i) => Some(*i as f64),
            Field::Text(_) => None,
        }
    }
}

pub type Schema = &'static [(&'static str, Kind)];

pub const SIMULATE_SCHEMA: Schema = &[
    ("t", Kind::Float),
    ("reF1", Kind::Float),
    ("imF1", Kind::Float),
    ("reF2", Kind::Float),
    ("imF2", Kind::Float),
    ("rho11", Kind::Float),
    ("rho22", Kind::Float),
    ("rho33", Kind::Float),
    ("J1", Kind::Float),
    ("J2", Kind::Float),
    ("regime", Kind::Text),
];

pub const INTERVAL_SCHEMA: Schema = &[
    ("t_start", Kind::Float),
    ("t_end", Kind::Float),
    ("direction", Kind::Text),
    ("peak_magnitude", Kind::Float),
];

pub const SWEEP_SCHEMA: Schema = &[
    ("gamma1", Kind::Float),
    ("gamma2", Kind::Float),
    ("duration", Kind::Float),
    ("direction", Kind::Int),
];

pub const DIODE_SCHEMA: Schema = &[
    ("geometry", Kind::Text),
    ("gamma1", Kind::Float),
    ("gamma2", Kind::Float),
    ("coupling1", Kind::Float),
    ("coupling2", Kind::Float),
    ("intervals", Kind::Int),
    ("t_start", Kind::Float),
    ("t_end", Kind::Float),
    ("direction", Kind::Int),
    ("peak_rate", Kind::Float),
    ("peak_current", Kind::Float),
    ("peak_release_current", Kind::Float),
];

pub const STOCHASTIC_SCHEMA: Schema = &[
    ("t", Kind::Float),
    ("rho11", Kind::Float),
    ("rho22", Kind::Float),
    ("rho33", Kind::Float),
    ("re_rho12", Kind::Float),
    ("im_rho12", Kind::Float),
    ("re_rho13", Kind::Float),
    ("im_rho13", Kind::Float),
    ("re_rho23", Kind::Float),
    ("im_rho23", Kind::Float),
    ("trace", Kind::Float),
    ("se_rho11", Kind::Float),
    ("se_rho22", Kind::Float),
    ("se_rho33", Kind::Float),
    ("se_rho12", Kind::Float),
    ("se_rho13", Kind::Float),
    ("se_rho23", Kind::Float),
    ("se_trace", Kind::Float),
    ("rho11_det", Kind::Float),
    ("rho22_det", Kind::Float),
    ("rho33_det", Kind::Float),
];

/// Rows of fields following a fixed schema.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: Schema,
    pub rows: Vec<Vec<Field>>,
}

impl Table {
    pub fn new(schema: Schema) -> Self {
        Table {
            schema,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.schema.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|(n, _)| *n == name)
    }

    /// Float values of column `name`.
    pub fn floats(&self, name: &str) -> Vec<f64> {
        let Some(c) = self.column(name) else {
            return Vec::new();
        };
        self.rows.iter().filter_map(|r| r[c].as_f64()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = self.schema.iter().map(|(n, _)| *n).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            for (i, f) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match f {
                    Field::Float(x) => {
                        let _ = write!(out, "{}", float_text(*x));
                    }
                    Field::Int(v) => {
                        let _ = write!(out, "{v}");
                    }
                    Field::Text(s) => out.push_str(&csv_quote(s)),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Array of objects, one per row, keys in schema order.
    pub fn to_json(&self) -> String {
        let mut out = String::from("[");
        for (r, row) in self.rows.iter().enumerate() {
            out.push_str(if r == 0 { "\n  {" } else { ",\n  {" });
            for (i, ((name, _), f)) in self.schema.iter().zip(row).enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "{}: ", json_string(name));
                match f {
                    Field::Float(x) if x.is_finite() => out.push_str(&float_text(*x)),
                    Field::Float(_) => out.push_str("null"),
                    Field::Int(v) => {
                        let _ = write!(out, "{v}");
                    }
                    Field::Text(s) => out.push_str(&json_string(s)),
                }
            }
            out.push('}');
        }
        out.push_str(if self.rows.is_empty() { "]\n" } else { "\n]\n" });
        out
    }

    pub fn encode(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn from_csv(schema: Schema, text: &str, origin: &Path) -> Result<Table> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| CliError::data(origin, e.to_string()))?
            .clone();
        let expected: Vec<&str> = schema.iter().map(|(n, _)| *n).collect();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(CliError::data(
                origin,
                format!("expected columns {}", expected.join(",")),
            ));
        }
        let mut table = Table::new(schema);
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| CliError::data(origin, e.to_string()))?;
            let row = schema
                .iter()
                .zip(record.iter())
                .map(|(&(name, kind), raw)| {
                    parse_field(kind, raw).ok_or_else(|| {
                        CliError::data(
                            origin,
                            format!("row {}: bad value {raw:?} in column {name}", line + 1),
                        )
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            table.push(row);
        }
        Ok(table)
    }

    pub fn from_json(schema: Schema, text: &str, origin: &Path) -> Result<Table> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| CliError::data(origin, e.to_string()))?;
        let rows = value
            .as_array()
            .ok_or_else(|| CliError::data(origin, "top level must be an array"))?;
        let mut table = Table::new(schema);
        for (r, obj) in rows.iter().enumerate() {
            let obj = obj
                .as_object()
                .ok_or_else(|| CliError::data(origin, format!("row {r} is not an object")))?;
            if obj.len() != schema.len() {
                return Err(CliError::data(
                    origin,
                    format!("row {r} has {} fields", obj.len()),
                ));
            }
            let row = schema
                .iter()
                .map(|&(name, kind)| {
                    let v = obj
                        .get(name)
                        .ok_or_else(|| CliError::data(origin, format!("row {r} lacks {name}")))?;
                    let field = match (kind, v) {
                        (Kind::Float, Value::Null) => Some(Field::Float(f64::NAN)),
                        (Kind::Float, Value::Number(n)) => n.as_f64().map(Field::Float),
                        (Kind::Int, Value::Number(n)) => n.as_i64().map(Field::Int),
                        (Kind::Text, Value::String(s)) => Some(Field::Text(s.clone())),
                        _ => None,
                    };
                    field.ok_or_else(|| {
                        CliError::data(origin, format!("row {r}: bad value in {name}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            table.push(row);
        }
        Ok(table)
    }

    pub fn decode(schema: Schema, text: &str, format: Format, origin: &Path) -> Result<Table> {
        match format {
            Format::Csv => Table::from_csv(schema, text, origin),
            Format::Json => Table::from_json(schema, text, origin),
        }
    }
}

fn float_text(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_field(kind: Kind, raw: &str) -> Option<Field> {
    match kind {
        Kind::Float => raw.parse().ok().map(Field::Float),
        Kind::Int => raw.parse().ok().map(Field::Int),
        Kind::Text => Some(Field::Text(raw.to_owned())),
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// Format of `path` judged by its extension, if recognizable.
pub fn format_of(path: &Path) -> Option<Format> {
    match path.extension()?.to_str()? {
        "csv" => Some(Format::Csv),
        "json" => Some(Format::Json),
        _ => None,
    }
}

/// `path` with `tag` inserted before the extension: `run.csv` → `run.tag.csv`.
pub fn sibling(path: &Path, tag: &str, ext: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.{tag}.{ext}"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

// ---- builders for each artifact ---------------------------------------

pub fn simulate_table(
    coeffs: &CoefficientTrajectory,
    dyn_: &DynamicsTrajectory,
    eps: f64,
) -> Table {
    let mut t = Table::new(SIMULATE_SCHEMA);
    for k in 0..coeffs.len() {
        let (f1, f2) = (coeffs.f1[k], coeffs.f2[k]);
        t.push(vec![
            Field::Float(coeffs.times[k]),
            Field::Float(f1.re),
            Field::Float(f1.im),
            Field::Float(f2.re),
            Field::Float(f2.im),
            Field::Float(dyn_.rho11[k]),
            Field::Float(dyn_.rho22[k]),
            Field::Float(dyn_.rho33[k]),
            Field::Float(dyn_.j1[k]),
            Field::Float(dyn_.j2[k]),
            Field::Text(regime_letter(classify(f1.re, f2.re, eps)).to_string()),
        ]);
    }
    t
}

pub fn interval_table(report: &IntervalReport) -> Table {
    let mut t = Table::new(INTERVAL_SCHEMA);
    for i in &report.intervals {
        t.push(vec![
            Field::Float(i.t_start),
            Field::Float(i.t_end),
            Field::Text(i.direction.label().to_owned()),
            Field::Float(i.peak_magnitude),
        ]);
    }
    t
}

/// Intervals read back from a sidecar table.
pub fn intervals_from_table(table: &Table) -> Vec<(f64, f64, Option<Direction>, f64)> {
    table
        .rows
        .iter()
        .map(|r| {
            let dir = match &r[2] {
                Field::Text(s) if s == "L->R" => Some(Direction::LeftToRight),
                Field::Text(s) if s == "R->L" => Some(Direction::RightToLeft),
                _ => None,
            };
            (
                r[0].as_f64().unwrap_or(f64::NAN),
                r[1].as_f64().unwrap_or(f64::NAN),
                dir,
                r[3].as_f64().unwrap_or(f64::NAN),
            )
        })
        .collect()
}

pub fn sweep_table(result: &SweepResult) -> Table {
    let mut t = Table::new(SWEEP_SCHEMA);
    for (i, j, model) in result.cells() {
        t.push(vec![
            Field::Float(model.bath_left().gamma()),
            Field::Float(model.bath_right().gamma()),
            Field::Float(result.durations[i][j]),
            Field::Int(result.directions[i][j] as i64),
        ]);
    }
    t
}

pub fn diode_table(report: &lambdaflow::DiodeReport) -> Table {
    let mut t = Table::new(DIODE_SCHEMA);
    for (name, g) in [("i", &report.forward), ("ii", &report.reverse)] {
        let first = g.intervals.first();
        let (l, r) = (g.model.bath_left(), g.model.bath_right());
        t.push(vec![
            Field::Text(name.to_owned()),
            Field::Float(l.gamma()),
            Field::Float(r.gamma()),
            Field::Float(l.coupling()),
            Field::Float(r.coupling()),
            Field::Int(g.intervals.len() as i64),
            Field::Float(first.map_or(0.0, |i| i.t_start)),
            Field::Float(first.map_or(0.0, |i| i.t_end)),
            Field::Int(first.map_or(0, |i| i.direction.code()) as i64),
            Field::Float(g.peak_rate.unwrap_or(0.0)),
            Field::Float(g.peak_current.unwrap_or(0.0)),
            Field::Float(g.peak_release_current.unwrap_or(0.0)),
        ]);
    }
    t
}

pub fn stochastic_table(est: &EnsembleEstimate, det: &DynamicsTrajectory) -> Table {
    let mut t = Table::new(STOCHASTIC_SCHEMA);
    for k in 0..est.len() {
        let (r, s) = (&est.rho[k], &est.stderr[k]);
        let det_at = |v: &[f64]| v.get(k).copied().unwrap_or(f64::NAN);
        t.push(
            [
                est.times[k],
                r[0][0].re,
                r[1][1].re,
                r[2][2].re,
                r[0][1].re,
                r[0][1].im,
                r[0][2].re,
                r[0][2].im,
                r[1][2].re,
                r[1][2].im,
                est.trace(k),
                s[0][0],
                s[1][1],
                s[2][2],
                s[0][1],
                s[0][2],
                s[1][2],
                est.trace_stderr[k],
                det_at(&det.rho11),
                det_at(&det.rho22),
                det_at(&det.rho33),
            ]
            .into_iter()
            .map(Field::Float)
            .collect(),
        );
    }
    t
}
