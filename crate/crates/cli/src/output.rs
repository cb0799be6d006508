//! Result tables and their CSV / JSON renderings.

use std::io::Write;

use serde_json::{Map, Number, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }
}

/// `x` with 10 significant digits: fixed notation for magnitudes in
/// `[1e-4, 1e10)`, scientific otherwise.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.9e}");
    let exp: i32 = sci[sci.find('e').expect("exponent present") + 1..]
        .parse()
        .expect("exponent is an integer");
    if (-4..10).contains(&exp) {
        let prec = (9 - exp) as usize;
        format!("{x:.prec$}")
    } else {
        sci
    }
}

fn csv_field(c: &Cell) -> String {
    match c {
        Cell::Num(x) => fmt_sig(*x),
        Cell::Int(i) => i.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

fn json_cell(c: &Cell) -> Value {
    match c {
        Cell::Num(x) => Number::from_f64(*x).map_or(Value::Null, Value::Number),
        Cell::Int(i) => Value::from(*i),
        Cell::Bool(b) => Value::Bool(*b),
        Cell::Text(s) => Value::String(s.clone()),
    }
}

pub fn render_csv(table: &Table) -> String {
    let mut out = table.columns.join(",");
    out.push('\n');
    for row in &table.rows {
        let fields: Vec<String> = row.iter().map(csv_field).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// `{"meta": meta, "rows": [{column: value}, ...]}`.
pub fn render_json(table: &Table, meta: Value) -> String {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Value> = table
                .columns
                .iter()
                .zip(row)
                .map(|(k, c)| (k.to_string(), json_cell(c)))
                .collect();
            Value::Object(obj)
        })
        .collect();
    let mut doc = Map::new();
    doc.insert("meta".into(), meta);
    doc.insert("rows".into(), Value::Array(rows));
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("JSON values serialize");
    s.push('\n');
    s
}

pub fn render(table: &Table, format: Format, meta: Value) -> String {
    match format {
        Format::Csv => render_csv(table),
        Format::Json => render_json(table, meta),
    }
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit_table(text: &str, path: Option<&std::path::Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(1.0), "1.000000000");
        assert_eq!(fmt_sig(0.123456789012), "0.1234567890");
        assert_eq!(fmt_sig(-12345.678901234), "-12345.67890");
        assert_eq!(fmt_sig(1.25e-5), "1.250000000e-5");
        assert_eq!(fmt_sig(3.0e12), "3.000000000e12");
        assert_eq!(fmt_sig(9.99999999999), "10.00000000");
        assert_eq!(fmt_sig(f64::NAN), "NaN");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["rho_db", "p_miss"]);
        assert_eq!(render_csv(&t), "rho_db,p_miss\n");
    }

    #[test]
    fn json_round_trips_exactly() {
        let mut t = Table::new(&["x", "name", "n"]);
        let values = [0.1 + 0.2, 1.0 / 3.0, 2.2250738585072014e-308, 6.02214076e23, -7.5e-17];
        for v in values {
            t.push(vec![v.into(), "a,b".into(), 3u64.into()]);
        }
        let text = render_json(&t, Value::Null);
        let back: Value = serde_json::from_str(&text).unwrap();
        for (row, v) in back["rows"].as_array().unwrap().iter().zip(values) {
            assert_eq!(row["x"].as_f64().unwrap().to_bits(), v.to_bits());
        }
        assert!(render_csv(&t).contains("\"a,b\""));
    }
}
