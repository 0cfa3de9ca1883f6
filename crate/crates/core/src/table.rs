//! Versioned tabular output: CSV with a schema comment line, and a JSON mirror.
//!
//! ```text
//! # tunnelscope transmission schema=1
//! # preset="2bwb"
//! E_eV,T,theta_rad
//! ...
//! ```
//!
//! Floats use the shortest representation that round-trips, so identical
//! inputs give byte-identical files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Bool(bool),
    Int(i64),
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Cell::Num(x) => Some(x),
            Cell::Int(i) => Some(i as f64),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Bool(b) => b.to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format_f64(*x),
            Cell::Text(s) => s.clone(),
        }
    }

    fn parse(s: &str) -> Cell {
        if let Ok(b) = s.parse::<bool>() {
            Cell::Bool(b)
        } else if let Ok(i) = s.parse::<i64>() {
            Cell::Int(i)
        } else if let Ok(x) = s.parse::<f64>() {
            Cell::Num(x)
        } else {
            Cell::Text(s.to_string())
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// Shortest round-trip form; exponent notation outside `[1e-4, 1e6)`.
/// Negative zero prints as `0`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".to_string()
    } else if !x.is_finite() || (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub kind: String,
    pub schema: u32,
    pub meta: BTreeMap<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(kind: &str, columns: &[&str]) -> Self {
        Self {
            kind: kind.to_string(),
            schema: SCHEMA_VERSION,
            meta: BTreeMap::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.meta.insert(key.to_string(), v);
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::validation(format!(
                "row of {} cells for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[j]).collect())
    }

    /// Numeric column; non-numeric cells are skipped.
    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        Some(self.column(name)?.into_iter().filter_map(Cell::as_f64).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = format!("# tunnelscope {} schema={}\n", self.kind, self.schema);
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}={v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::validation(format!("csv: {e}"));
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::validation(format!("csv: {e}")))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Inverse of [`Table::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::validation("empty table"))?;
        let head: Vec<&str> = first.split_whitespace().collect();
        let (kind, schema) = match head.as_slice() {
            ["#", "tunnelscope", kind, schema] => {
                let v = schema
                    .strip_prefix("schema=")
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::validation(format!("bad schema tag '{schema}'")))?;
                (kind.to_string(), v)
            }
            _ => return Err(Error::validation(format!("missing table header, got '{first}'"))),
        };
        let mut meta = BTreeMap::new();
        let mut body = String::new();
        for line in lines {
            match line.strip_prefix("# ") {
                Some(kv) if body.is_empty() => {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::validation(format!("bad metadata line '{line}'")))?;
                    meta.insert(k.to_string(), serde_json::from_str(v)?);
                }
                _ => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut r = csv::Reader::from_reader(body.as_bytes());
        let io = |e: csv::Error| Error::validation(format!("csv: {e}"));
        let columns = r.headers().map_err(io)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(Cell::parse).collect()).map_err(io))
            .collect::<Result<_>>()?;
        Ok(Self {
            kind,
            schema,
            meta,
            columns,
            rows,
        })
    }
}

/// Output encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::validation(format!("unknown format '{other}', expected csv or json"))),
        }
    }

    pub fn render(self, table: &Table) -> Result<String> {
        match self {
            Format::Csv => table.to_csv(),
            Format::Json => table.to_json(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("transmission", &["E_eV", "T", "kind"]);
        t.meta("preset", "2bwb").meta("points", 2);
        t.push(vec![1e-8.into(), 0.5.into(), "bound".into()]).unwrap();
        t.push(vec![0.24.into(), (1.0 - 1e-12).into(), "a,b".into()]).unwrap();
        t
    }

    #[test]
    fn csv_round_trip() {
        let t = sample();
        let s = t.to_csv().unwrap();
        assert!(s.starts_with("# tunnelscope transmission schema=1\n# points=2\n# preset=\"2bwb\"\nE_eV,T,kind\n"));
        assert_eq!(Table::from_csv(&s).unwrap(), t);
    }

    #[test]
    fn json_round_trip() {
        let t = sample();
        let back: Table = serde_json::from_str(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn floats_round_trip_exactly() {
        for x in [0.1, 1.0 / 3.0, 8.6848e-6, -1.0916616e-3, 1e300, 6.02e23, 0.0] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_f64(1e-8), "1e-8");
        assert_eq!(format_f64(0.25), "0.25");
        assert_eq!(format_f64(-0.0), "0");
    }

    #[test]
    fn row_length_checked() {
        let mut t = Table::new("x", &["a", "b"]);
        assert!(t.push(vec![1.0.into()]).is_err());
    }

    #[test]
    fn rejects_headerless_text() {
        assert!(Table::from_csv("a,b\n1,2\n").is_err());
    }
}
