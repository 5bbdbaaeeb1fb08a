use std::io::{self, Write};

use serde_json::{json, Value};

use crate::args::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => sig12(*x),
            Cell::Int(n) => n.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) => json!(x),
            Cell::Int(n) => json!(n),
        }
    }
}

/// Decimal rendering with 12 significant digits, trailing zeros dropped.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&exp) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }
}

pub enum Payload {
    Table(Table),
    /// A single JSON record; CSV output flattens its top-level fields.
    Record(Value),
}

pub fn write(
    out: &mut dyn Write,
    config: &Value,
    payload: &Payload,
    format: Format,
) -> io::Result<()> {
    match (format, payload) {
        (Format::Csv, Payload::Table(t)) => {
            writeln!(out, "# {config}")?;
            writeln!(out, "{}", t.columns.join(","))?;
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        (Format::Csv, Payload::Record(v)) => {
            writeln!(out, "# {config}")?;
            let obj = v.as_object().cloned().unwrap_or_default();
            writeln!(out, "{}", obj.keys().cloned().collect::<Vec<_>>().join(","))?;
            let cells: Vec<String> = obj
                .values()
                .map(|v| match v {
                    Value::Number(n) => n.as_f64().map(sig12).unwrap_or_else(|| n.to_string()),
                    other => other.to_string(),
                })
                .collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        (Format::Json, Payload::Table(t)) => {
            let rows: Vec<Value> = t
                .rows
                .iter()
                .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                .collect();
            let doc = json!({ "config": config, "columns": t.columns, "rows": rows });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
        (Format::Json, Payload::Record(v)) => {
            let doc = json!({ "config": config, "report": v });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    out.flush()
}
