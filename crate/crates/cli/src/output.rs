//! CSV and JSON-lines emission with a fixed column order.

use std::io::Write;

use flinthills_core::Ball;
use serde_json::{Map, Value};

use crate::config::Format;

/// Significant digits for high-precision values.
pub const SIG_DIGITS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    /// High-precision value, already rendered.
    Decimal(String),
    Text(String),
    Bool(bool),
    Null,
    Ints(Vec<u64>),
}

impl Cell {
    pub fn ball(b: &Ball) -> Cell {
        Cell::Decimal(b.to_decimal(SIG_DIGITS))
    }

    pub fn opt_int(v: Option<impl Into<u64>>) -> Cell {
        v.map_or(Cell::Null, |x| Cell::Int(x.into()))
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => float_text(*v),
            Cell::Decimal(s) | Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Null => String::new(),
            Cell::Ints(v) => v.iter().map(u64::to_string).collect::<Vec<_>>().join(";"),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => Value::from(*v),
            Cell::Decimal(s) | Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Null => Value::Null,
            Cell::Ints(v) => Value::from(v.clone()),
        }
    }
}

/// Shortest round-trip text, the same digits serde_json writes.
pub fn float_text(v: f64) -> String {
    if v.is_finite() {
        serde_json::to_string(&v).expect("finite float")
    } else {
        v.to_string()
    }
}

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
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(&self.columns)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv))?;
                }
                w.flush()
            }
            Format::Json => {
                for row in &self.rows {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(k, c)| (k.to_string(), c.json()))
                        .collect();
                    serde_json::to_writer(&mut *out, &obj)?;
                    out.write_all(b"\n")?;
                }
                out.flush()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        let mut t = Table::new(&["n", "x", "s", "flag", "list", "none"]);
        t.push(vec![
            Cell::Int(3),
            Cell::Float(0.1),
            Cell::Text("a,b".into()),
            Cell::Bool(true),
            Cell::Ints(vec![3, 22]),
            Cell::Null,
        ]);
        t
    }

    #[test]
    fn csv_quotes_and_orders() {
        let mut buf = Vec::new();
        table().write(Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,x,s,flag,list,none\n3,0.1,\"a,b\",true,3;22,\n");
    }

    #[test]
    fn json_keeps_column_order() {
        let mut buf = Vec::new();
        table().write(Format::Json, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"n\":3,\"x\":0.1,\"s\":\"a,b\",\"flag\":true,\"list\":[3,22],\"none\":null}\n"
        );
    }

    #[test]
    fn floats_round_trip() {
        for v in [1.0, 1e-10, 0.4053, 123456.789, f64::MIN_POSITIVE] {
            assert_eq!(float_text(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(float_text(1e-10), "1e-10");
    }
}
