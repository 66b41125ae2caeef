//! Result tables and their CSV / JSON encodings.

use std::fmt::Write as _;

use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    pub fn flag(b: bool) -> Self {
        Cell::Text(if b { "true" } else { "false" }.into())
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Num(x as f64)
    }
}

/// `%.15g`: 15 significant digits, trailing zeros dropped, exponent form
/// outside [1e-4, 1e15).
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.14e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..15).contains(&exp) {
        let mant = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mant}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (14 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub tolerances: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Meta,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Empty means CSV.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" | "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Usage(format!("unknown output format '{other}' (expected csv or json)"))),
        }
    }
}

impl Table {
    pub fn new(meta: Meta, columns: &[&str]) -> Self {
        Self { meta, columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn encode(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => Ok(self.to_json()),
        }
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let q = |s: &str| serde_json::to_string(s).expect("string encodes");
        let num = |x: f64| if x.is_finite() { fmt_num(x) } else { q(&fmt_num(x)) };
        let mut out = String::from("{\n  \"meta\": {");
        let _ = write!(out, "\"version\": {}, \"command\": {}, \"seed\": ", q(&self.meta.version), q(&self.meta.command));
        match self.meta.seed {
            Some(s) => out.push_str(&s.to_string()),
            None => out.push_str("null"),
        }
        out.push_str(", \"tolerances\": {");
        for (i, (k, v)) in self.meta.tolerances.iter().enumerate() {
            let sep = if i == 0 { "" } else { ", " };
            let _ = write!(out, "{sep}{}: {}", q(k), num(*v));
        }
        out.push_str("}},\n  \"rows\": [");
        for (i, r) in self.rows.iter().enumerate() {
            out.push_str(if i == 0 { "\n    {" } else { ",\n    {" });
            for (j, (c, v)) in self.columns.iter().zip(r).enumerate() {
                let sep = if j == 0 { "" } else { ", " };
                let v = match v {
                    Cell::Num(x) => num(*x),
                    Cell::Text(s) => q(s),
                };
                let _ = write!(out, "{sep}{}: {v}", q(c));
            }
            out.push('}');
        }
        out.push_str(if self.rows.is_empty() { "]\n}\n" } else { "\n  ]\n}\n" });
        out
    }

    /// Reads a CSV written by [`Table::to_csv`]. CSV carries no metadata, so
    /// `meta` is supplied by the caller.
    pub fn from_csv(text: &str, meta: Meta) -> Result<Self, CliError> {
        let bad = |e: csv::Error| CliError::Usage(format!("malformed CSV: {e}"));
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let columns: Vec<String> = r.headers().map_err(bad)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(bad)?;
            rows.push(rec.iter().map(parse_cell).collect());
        }
        Ok(Self { meta, columns, rows })
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let bad = |m: &str| CliError::Usage(format!("malformed JSON output: {m}"));
        let v: Value = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("malformed JSON: {e}")))?;
        let meta = v.get("meta").ok_or_else(|| bad("no meta"))?;
        let text_field =
            |k: &str| meta.get(k).and_then(Value::as_str).map(str::to_string).ok_or_else(|| bad(&format!("meta.{k}")));
        let tolerances = meta
            .get("tolerances")
            .and_then(Value::as_object)
            .ok_or_else(|| bad("meta.tolerances"))?
            .iter()
            .map(|(k, v)| Ok((k.clone(), json_num(v).ok_or_else(|| bad("tolerance value"))?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        let meta = Meta {
            version: text_field("version")?,
            command: text_field("command")?,
            seed: meta.get("seed").and_then(Value::as_u64),
            tolerances,
        };
        let rows_v = v.get("rows").and_then(Value::as_array).ok_or_else(|| bad("rows"))?;
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        for (i, r) in rows_v.iter().enumerate() {
            let obj = r.as_object().ok_or_else(|| bad("row is not an object"))?;
            if i == 0 {
                columns = obj.keys().cloned().collect();
            } else if !obj.keys().eq(columns.iter()) {
                return Err(bad("rows have different keys"));
            }
            rows.push(
                obj.values()
                    .map(|x| match x {
                        Value::Number(_) => Ok(Cell::Num(x.as_f64().expect("finite number"))),
                        Value::String(s) => Ok(Cell::Text(s.clone())),
                        _ => Err(bad("cells must be numbers or strings")),
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        Ok(Self { meta, columns, rows })
    }
}

fn json_num(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.parse().ok(),
        _ => None,
    }
}

fn parse_cell(s: &str) -> Cell {
    match s.parse::<f64>() {
        Ok(x) => Cell::Num(x),
        Err(_) => Cell::Text(s.to_string()),
    }
}

/// Aligned plain-text rendering for the terminal.
pub fn human(table: &Table) -> String {
    let cells: Vec<Vec<String>> = table.rows.iter().map(|r| r.iter().map(Cell::render).collect()).collect();
    let mut out = String::new();
    if cells.len() == 1 {
        let w = table.columns.iter().map(|c| c.len()).max().unwrap_or(0);
        for (c, v) in table.columns.iter().zip(&cells[0]) {
            let _ = writeln!(out, "{c:<w$}  {v}");
        }
        return out;
    }
    let widths: Vec<usize> = (0..table.columns.len())
        .map(|j| cells.iter().map(|r| r[j].len()).chain([table.columns[j].len()]).max().unwrap_or(0))
        .collect();
    let line = |vals: &[String]| -> String {
        let parts: Vec<String> = vals.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
        parts.join("  ").trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(&table.columns));
    for r in &cells {
        let _ = writeln!(out, "{}", line(r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(fmt_num(0.7), "0.7");
        assert_eq!(fmt_num(std::f64::consts::PI), "3.14159265358979");
        assert_eq!(fmt_num(1e-8), "1e-08");
        assert_eq!(fmt_num(-123456.0), "-123456");
        assert_eq!(fmt_num(1.5e20), "1.5e+20");
        assert_eq!(fmt_num(0.000123), "0.000123");
        assert_eq!(fmt_num(9.999999999999999e14), "1e+15");
        assert_eq!(fmt_num(0.6 + 0.01 * 7.0), "0.67");
        assert_eq!(fmt_num(f64::NAN), "nan");
    }

    fn sample() -> Table {
        let meta = Meta { version: "0.1.0".into(), command: "demo".into(), seed: Some(3), tolerances: vec![("tol".into(), 1e-8)] };
        let mut t = Table::new(meta, &["lambda", "label", "energy"]);
        t.push(vec![0.7.into(), Cell::text("Square"), (-1.0 / 3.0).into()]);
        t.push(vec![0.71.into(), Cell::text("Rhombic2D"), f64::INFINITY.into()]);
        t
    }

    #[test]
    fn csv_round_trip() {
        let t = sample();
        let s = t.to_csv().unwrap();
        assert_eq!(s, "lambda,label,energy\n0.7,Square,-0.333333333333333\n0.71,Rhombic2D,inf\n");
        let back = Table::from_csv(&s, t.meta.clone()).unwrap();
        assert_eq!(back.to_csv().unwrap(), s);
    }

    #[test]
    fn json_round_trip() {
        let t = sample();
        let s = t.to_json();
        let back = Table::from_json(&s).unwrap();
        assert_eq!(back.to_json(), s);
        assert_eq!(back.meta, t.meta);
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["rows"][0]["label"], "Square");
    }

    #[test]
    fn empty_format_is_csv() {
        assert_eq!(Format::parse("").unwrap(), Format::Csv);
        assert_eq!(Format::parse("JSON").unwrap(), Format::Json);
        assert!(Format::parse("xml").is_err());
    }
}
