//! CSV / JSON envelopes emitted by the command-line tool.
//!
//! Floats are written with 17 significant digits so every value round-trips.
//! Both formats echo the command and its parameters, so an output file
//! carries everything needed to regenerate it.

use std::fmt::Write as _;

use serde::ser::{Serialize, SerializeMap, Serializer};
use serde_json::value::RawValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Null,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(i64::from(v))
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Null, Into::into)
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_owned()
    } else if v > 0.0 {
        "inf".to_owned()
    } else {
        "-inf".to_owned()
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => format_float(*f),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> Box<RawValue> {
        let text = match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) if f.is_finite() => format_float(*f),
            Cell::Float(_) | Cell::Null => "null".to_owned(),
            Cell::Text(s) => serde_json::to_string(s).expect("strings serialize"),
            Cell::Bool(b) => b.to_string(),
        };
        RawValue::from_string(text).expect("cell renders valid JSON")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub command: String,
    pub parameters: Vec<(String, Cell)>,
    pub note: Option<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

struct JsonMap<'a>(&'a [(String, Box<RawValue>)]);

impl Serialize for JsonMap<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(serde::Serialize)]
struct JsonEnvelope<'a> {
    command: &'a str,
    parameters: JsonMap<'a>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
    columns: &'a [String],
    rows: Vec<JsonMap<'a>>,
}

impl Envelope {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Self {
            command: command.to_owned(),
            parameters: Vec::new(),
            note: None,
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Cell>) -> Self {
        self.parameters.push((key.to_owned(), value.into()));
        self
    }

    pub fn note(mut self, note: &str) -> Self {
        self.note = Some(note.to_owned());
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# relay-tree {}", self.command);
        for (k, v) in &self.parameters {
            let _ = write!(out, " {k}={}", v.csv());
        }
        out.push('\n');
        if let Some(note) = &self.note {
            let _ = writeln!(out, "# note: {note}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let params: Vec<(String, Box<RawValue>)> = self
            .parameters
            .iter()
            .map(|(k, v)| (k.clone(), v.json()))
            .collect();
        let rows: Vec<Vec<(String, Box<RawValue>)>> = self
            .rows
            .iter()
            .map(|r| {
                self.columns
                    .iter()
                    .cloned()
                    .zip(r.iter().map(Cell::json))
                    .collect()
            })
            .collect();
        let env = JsonEnvelope {
            command: &self.command,
            parameters: JsonMap(&params),
            note: self.note.as_deref(),
            columns: &self.columns,
            rows: rows.iter().map(|r| JsonMap(r)).collect(),
        };
        let mut s = serde_json::to_string_pretty(&env).expect("envelope serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Envelope {
        let mut e = Envelope::new("demo", &["x", "label", "flag", "missing"]).param("n", 3u64);
        e.push(vec![0.1.into(), "b1".into(), true.into(), Cell::Null]);
        e.push(vec![
            f64::INFINITY.into(),
            "l_outside_r".into(),
            false.into(),
            2u64.into(),
        ]);
        e
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(0.0), "0.0000000000000000e0");
        for v in [0.1, 1.0 / 3.0, 2.0f64.powi(-1074), 1.7976931348623157e308] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# relay-tree demo n=3");
        assert_eq!(lines[1], "x,label,flag,missing");
        assert_eq!(lines[2], "1.0000000000000001e-1,b1,true,");
        assert_eq!(lines[3], "inf,l_outside_r,false,2");
    }

    #[test]
    fn json_layout() {
        let v: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v["command"], "demo");
        assert_eq!(v["parameters"]["n"], 3);
        assert_eq!(v["rows"][0]["x"], 0.1);
        assert!(v["rows"][1]["x"].is_null());
        assert!(v["rows"][0]["missing"].is_null());
        assert_eq!(v["columns"][1], "label");
        assert!(v.get("note").is_none());
    }
}
