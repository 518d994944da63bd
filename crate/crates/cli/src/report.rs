use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use strichartz_core::functional::ConstantsTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Num(v as f64)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub results: BTreeMap<String, f64>,
    pub residuals: BTreeMap<String, f64>,
    pub table: Option<Table>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub constants: ConstantsTable,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            params: BTreeMap::new(),
            results: BTreeMap::new(),
            residuals: BTreeMap::new(),
            table: None,
            checks: Vec::new(),
            warnings: Vec::new(),
            constants: ConstantsTable::standard(),
        }
    }

    pub fn param(&mut self, key: &str, v: impl Serialize) {
        self.params.insert(
            key.to_string(),
            serde_json::to_value(v).unwrap_or(Value::Null),
        );
    }

    pub fn result(&mut self, key: &str, v: f64) {
        self.results.insert(key.to_string(), v);
    }

    pub fn residual(&mut self, key: &str, v: f64) {
        self.residuals.insert(key.to_string(), v);
    }

    /// Records `value <= tolerance` as a named check.
    pub fn check_below(&mut self, name: &str, value: f64, tolerance: f64) {
        self.checks.push(Check {
            name: name.to_string(),
            value,
            tolerance,
            pass: value <= tolerance,
        });
    }

    /// Records a boolean condition; `value` is shown for context.
    pub fn check_that(&mut self, name: &str, value: f64, tolerance: f64, pass: bool) {
        self.checks.push(Check {
            name: name.to_string(),
            value,
            tolerance,
            pass,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("report serialises") + "\n",
            Format::Csv => self.csv(),
            Format::Table => self.text(),
        }
    }

    fn csv(&self) -> String {
        let mut out = String::new();
        match &self.table {
            Some(t) => {
                out.push_str(&t.columns.join(","));
                out.push('\n');
                for row in &t.rows {
                    let cells: Vec<String> = row.iter().map(csv_cell).collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
            }
            None => {
                out.push_str("name,value\n");
                for (k, v) in &self.results {
                    let _ = writeln!(out, "{k},{}", num(*v));
                }
            }
        }
        out
    }

    fn text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.command);
        for (k, v) in &self.params {
            let _ = writeln!(out, "  {k:<18} {v}");
        }
        if !self.results.is_empty() {
            out.push('\n');
            for (k, v) in &self.results {
                let _ = writeln!(out, "  {k:<24} {}", num(*v));
            }
        }
        if !self.residuals.is_empty() {
            out.push('\n');
            for (k, v) in &self.residuals {
                let _ = writeln!(out, "  {k:<24} {}", num(*v));
            }
        }
        if let Some(t) = &self.table {
            out.push('\n');
            let cells: Vec<Vec<String>> = t
                .rows
                .iter()
                .map(|r| r.iter().map(text_cell).collect())
                .collect();
            let widths: Vec<usize> = (0..t.columns.len())
                .map(|k| {
                    cells
                        .iter()
                        .map(|r| r[k].len())
                        .chain([t.columns[k].len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let line = |items: Vec<&str>| -> String {
                items
                    .iter()
                    .zip(&widths)
                    .map(|(s, w)| format!("{s:>w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
            };
            let _ = writeln!(
                out,
                "  {}",
                line(t.columns.iter().map(String::as_str).collect())
            );
            for r in &cells {
                let _ = writeln!(out, "  {}", line(r.iter().map(String::as_str).collect()));
            }
        }
        if !self.checks.is_empty() {
            out.push('\n');
            for c in &self.checks {
                let _ = writeln!(
                    out,
                    "  {} {:<36} {:.6e} (tol {:.1e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.tolerance
                );
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "  warning: {w}");
        }
        out
    }
}

/// 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_cell(c: &Cell) -> String {
    match c {
        Cell::Num(v) => num(*v),
        Cell::Text(s) if s.contains(',') || s.contains('"') => {
            format!("\"{}\"", s.replace('"', "\"\""))
        }
        Cell::Text(s) => s.clone(),
    }
}

fn text_cell(c: &Cell) -> String {
    match c {
        Cell::Num(v) if v.fract() == 0.0 && v.abs() < 1e9 => format!("{v}"),
        Cell::Num(v) => format!("{v:.10e}"),
        Cell::Text(s) => s.clone(),
    }
}
