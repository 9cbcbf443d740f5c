//! Tables and summaries written to the output directory.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Config, Format};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl Cell {
    /// Floats use 17 significant digits so that they read back exactly.
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
            _ => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<i64> for Cell {
    fn from(i: i64) -> Self {
        Cell::Int(i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        let mut s = serde_json::to_string_pretty(&json!({
            "columns": self.columns,
            "rows": rows,
        }))
        .expect("table serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path, format: Format) -> io::Result<()> {
        match format {
            Format::Csv => fs::write(dir.join(format!("{}.csv", self.name)), self.to_csv()),
            Format::Json => fs::write(dir.join(format!("{}.json", self.name)), self.to_json()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub sup_distance: Option<f64>,
    #[serde(rename = "empirical_C")]
    pub empirical_c: Option<f64>,
    pub energy_drift: Option<f64>,
    pub max_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub config: Config,
    pub pass: bool,
    pub metrics: Metrics,
    pub runtime_seconds: f64,
}

impl RunSummary {
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let mut s = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        s.push('\n');
        fs::write(dir.join("summary.json"), s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_floats_round_trip() {
        let mut t = Table::new("t", &["a", "b", "c"]);
        let x = 0.1 + 0.2;
        t.push(vec![x.into(), Cell::Missing, (-3i64).into()]);
        let csv = t.to_csv();
        let line = csv.lines().nth(1).unwrap();
        let first: f64 = line.split(',').next().unwrap().parse().unwrap();
        assert_eq!(first, x);
        assert_eq!(line, "3.0000000000000004e-1,,-3");
    }

    #[test]
    fn summary_has_every_field() {
        let s = RunSummary {
            command: "sg-kink".into(),
            config: Config::default(),
            pass: true,
            metrics: Metrics::default(),
            runtime_seconds: 0.0,
        };
        let v = serde_json::to_value(&s).unwrap();
        for k in [
            "sup_distance",
            "empirical_C",
            "energy_drift",
            "max_residual",
        ] {
            assert!(v["metrics"].get(k).unwrap().is_null());
        }
        assert_eq!(v["config"]["experiment"]["T"], json!(10.0));
    }
}
