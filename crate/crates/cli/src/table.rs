//! Tabular output shared by every subcommand.

use std::fmt::Write as _;
use std::io::{self, Write};

use qamp::Gain;
use serde_json::{json, Value};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    /// `None` renders as `n/a`.
    Opt(Option<f64>),
    Bool(bool),
    Text(String),
}

impl Cell {
    pub fn gain_linear(g: Gain) -> Self {
        match g {
            Gain::Finite(v) => Cell::Num(v),
            Gain::Infinite => Cell::Num(f64::INFINITY),
        }
    }

    pub fn gain_db(g: Gain) -> Self {
        Cell::Num(g.db())
    }

    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => format_g(*x),
            Cell::Opt(Some(x)) => format_g(*x),
            Cell::Opt(None) => "n/a".into(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) | Cell::Opt(Some(x)) if x.is_finite() => {
                // Round-trip through the CSV rendering so both formats agree.
                Value::from(format_g(*x).parse::<f64>().expect("formatted float parses"))
            }
            Cell::Num(x) | Cell::Opt(Some(x)) => Value::from(format_g(*x)),
            Cell::Opt(None) => Value::Null,
            Cell::Bool(b) => Value::from(*b),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = self.columns.join(",");
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    let _ = writeln!(out, "{}", cells.join(","));
                }
                out
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
                    .collect();
                let mut out = serde_json::to_string_pretty(&json!({
                    "columns": self.columns,
                    "rows": rows,
                }))
                .expect("table serializes");
                out.push('\n');
                out
            }
        }
    }

    pub fn write(&self, format: Format, sink: &mut dyn Write) -> io::Result<()> {
        sink.write_all(self.render(format).as_bytes())
    }
}

/// `%.12g`: shortest of fixed and scientific notation at 12 significant
/// digits, trailing zeros removed. Infinities render as `inf` / `-inf`.
pub fn format_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation has an exponent");
    let exp: i32 = exp.parse().expect("exponent is an integer");
    if exp < -4 || exp >= SIGNIFICANT_DIGITS as i32 {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_format_matches_printf() {
        let cases = [
            (0.25, "0.25"),
            (1.0, "1"),
            (-0.5, "-0.5"),
            (1.0 / 3.0, "0.333333333333"),
            (123_456_789_012.0, "123456789012"),
            (1.234_567_890_123e12, "1.23456789012e+12"),
            (1e-5, "1e-05"),
            (1.5e-6, "1.5e-06"),
            (0.853_553_390_593_273_7, "0.853553390593"),
            (f64::INFINITY, "inf"),
            (f64::NEG_INFINITY, "-inf"),
            (0.0, "0"),
        ];
        for (x, s) in cases {
            assert_eq!(format_g(x), s, "{x}");
        }
    }

    #[test]
    fn rounding_carries_into_the_exponent() {
        assert_eq!(format_g(0.999_999_999_999_9), "1");
        assert_eq!(format_g(9.999_999_999_999_9e-6), "1e-05");
    }

    #[test]
    fn json_and_csv_agree() {
        let mut t = Table::new(vec!["a", "b", "c", "d"]);
        t.push(vec![Cell::Num(0.1), Cell::Opt(None), Cell::Num(f64::INFINITY), Cell::Bool(false)]);
        assert_eq!(t.render(Format::Csv), "a,b,c,d\n0.1,n/a,inf,false\n");
        let v: Value = serde_json::from_str(&t.render(Format::Json)).unwrap();
        assert_eq!(v["columns"], json!(["a", "b", "c", "d"]));
        assert_eq!(v["rows"], json!([[0.1, null, "inf", false]]));
    }
}
