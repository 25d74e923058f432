//! Structured experiment output.

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::scalar::ExtScalar;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(ExtScalar),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => v.to_decimal(),
            Cell::Text(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }
}

impl Serialize for Cell {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Cell::Num(v) => v.serialize(s),
            Cell::Text(t) => s.serialize_str(t),
        }
    }
}

impl From<ExtScalar> for Cell {
    fn from(v: ExtScalar) -> Self {
        Cell::Num(v)
    }
}

impl From<&ExtScalar> for Cell {
    fn from(v: &ExtScalar) -> Self {
        Cell::Num(v.clone())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Num(ExtScalar::from_u64(v as u64))
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Num(ExtScalar::from_u64(v))
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Num(ExtScalar::from_u64(v as u64))
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "pass" } else { "fail" }.to_string())
    }
}

/// One row: ordered named cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Row(pub Vec<(String, Cell)>);

impl Row {
    pub fn new() -> Self {
        Row(Vec::new())
    }

    pub fn with(mut self, name: &str, cell: impl Into<Cell>) -> Self {
        self.0.push((name.to_string(), cell.into()));
        self
    }

    pub fn get(&self, name: &str) -> Option<&Cell> {
        self.0.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn num(&self, name: &str) -> Option<&ExtScalar> {
        match self.get(name)? {
            Cell::Num(v) => Some(v),
            Cell::Text(_) => None,
        }
    }
}

impl Serialize for Row {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, v)?;
        }
        m.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub experiment: String,
    pub params: Map<String, Value>,
    pub rows: Vec<Row>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub golden_ref: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(experiment: &str) -> Self {
        Report {
            experiment: experiment.to_string(),
            params: Map::new(),
            rows: Vec::new(),
            verdict: Verdict::Pass,
            golden_ref: None,
            notes: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    /// Records an asserted outcome; any failure fails the report.
    pub fn assert(&mut self, ok: bool) {
        if !ok {
            self.verdict = Verdict::Fail;
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Rows as CSV; the header is the union of column names in first-seen
    /// order.
    pub fn to_csv(&self) -> String {
        let mut cols: Vec<&str> = Vec::new();
        for row in &self.rows {
            for (name, _) in &row.0 {
                if !cols.contains(&name.as_str()) {
                    cols.push(name);
                }
            }
        }
        let mut out = cols.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = cols
                .iter()
                .map(|c| row.get(c).map(Cell::csv).unwrap_or_default())
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_and_csv_shapes() {
        let mut r = Report::new("demo").param("p0", 2.0);
        r.push(
            Row::new()
                .with("n", 1u32)
                .with("R", ExtScalar::from_f64(0.125))
                .with("ok", true),
        );
        r.push(Row::new().with("n", 2u32).with("note", "a,b"));
        r.assert(true);
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["experiment"], "demo");
        assert_eq!(v["rows"][0]["R"]["dec"], "0.125");
        assert_eq!(v["rows"][0]["R"]["exp2"], "0x1p-3");
        assert_eq!(v["rows"][0]["ok"], "pass");
        assert_eq!(v["verdict"], "pass");
        assert!(v.get("golden_ref").is_none());
        assert_eq!(r.to_csv(), "n,R,ok,note\n1,0.125,pass,\n2,,,\"a,b\"\n");
        r.assert(false);
        assert!(!r.passed());
    }
}
