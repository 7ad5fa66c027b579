use std::fmt;

use serde_json::{json, Map, Value};

/// One output value; non-finite floats render as `inf`, `-inf` or `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i128),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
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

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Text(String::new()), Into::into)
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        // Shortest text that parses back to the same value; exponents for
        // very small or large magnitudes, no trailing `.0`.
        let s = format!("{v:?}");
        s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => f.write_str(&format_float(*v)),
            Cell::Bool(v) => write!(f, "{v}"),
            Cell::Text(v) => f.write_str(v),
        }
    }
}

impl Cell {
    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(*v as i64),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(format_float(*v)),
            Cell::Bool(v) => json!(v),
            Cell::Text(v) => json!(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// Resolved configuration plus a result table.
///
/// The configuration lists every flag with its effective value, in the order
/// the replay line passes them; flags with value `true` are switches.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub config: Vec<(&'static str, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(&'static str, Cell)>,
}

impl Report {
    pub fn new(command: &'static str, columns: &[&'static str]) -> Self {
        Report { command, config: Vec::new(), columns: columns.to_vec(), rows: Vec::new(), summary: Vec::new() }
    }

    pub fn set(&mut self, flag: &'static str, value: impl fmt::Display) {
        self.config.push((flag, value.to_string()));
    }

    pub fn set_float(&mut self, flag: &'static str, value: f64) {
        self.config.push((flag, format_float(value)));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &'static str, value: impl Into<Cell>) {
        self.summary.push((key, value.into()));
    }

    /// `bucketing <command> --flag value ...`, reproducing this report.
    pub fn replay(&self) -> String {
        let mut line = format!("bucketing {}", self.command);
        for (flag, value) in &self.config {
            if value == "true" {
                line.push_str(&format!(" --{flag}"));
            } else if value != "false" {
                line.push_str(&format!(" --{flag} {value}"));
            }
        }
        line
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = format!("# bucketing {}\n", self.command);
        for (flag, value) in &self.config {
            out.push_str(&format!("# {flag}: {value}\n"));
        }
        out.push_str(&format!("# replay: {}\n", self.replay()));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 csv"));
        for (key, value) in &self.summary {
            out.push_str(&format!("# {key}: {value}\n"));
        }
        out
    }

    fn render_json(&self) -> String {
        let config: Map<String, Value> =
            self.config.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.to_json())).collect())
            })
            .collect();
        let summary: Map<String, Value> =
            self.summary.iter().map(|(k, v)| (k.to_string(), v.to_json())).collect();
        let doc = json!({
            "command": self.command,
            "config": config,
            "replay": self.replay(),
            "rows": rows,
            "summary": summary,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_and_stay_short() {
        for v in [1.0, 0.9, 1e-9, 3.6e-17, 123456.5, 1e300, -2.5] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(1.0), "1");
        assert_eq!(format_float(1e-9), "1e-9");
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn csv_has_header_table_and_summary() {
        let mut r = Report::new("info", &["mu", "value"]);
        r.set_float("p", 0.9);
        r.set("frontier", true);
        r.set("quiet", false);
        r.push(vec![f64::INFINITY.into(), 0.5.into()]);
        r.note("violations", 0usize);
        let text = r.render(Format::Csv);
        assert_eq!(
            text,
            "# bucketing info\n# p: 0.9\n# frontier: true\n# quiet: false\n\
             # replay: bucketing info --p 0.9 --frontier\nmu,value\ninf,0.5\n# violations: 0\n"
        );
        let doc: Value = serde_json::from_str(&r.render(Format::Json)).unwrap();
        assert_eq!(doc["rows"][0]["mu"], json!("inf"));
        assert_eq!(doc["summary"]["violations"], json!(0));
    }
}
