use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A CSV cell: integers verbatim, reals to 6 significant digits, `NA` for
/// undefined values.
pub enum Cell {
    Int(u64),
    Real(f64),
    Na,
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Na, Cell::Real)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    // `{:.5e}` rounds to 6 significant digits; the exponent is read after
    // rounding so 9.9999995 becomes 10, not 9.99999.
    let s = format!("{x:.5e}");
    let (mantissa, exponent) = s.split_once('e').expect("exponent present");
    let exp: i32 = exponent.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let rounded: f64 = s.parse().expect("formatted float parses");
        trim_zeros(format!("{:.*}", (5 - exp) as usize, rounded))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_owned()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => sig6(*v),
            Cell::Na => "NA".into(),
            Cell::Text(s) => s.clone(),
        }
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Writes a CSV table preceded by one `#` line carrying the configuration.
pub fn write_csv(out: Option<&Path>, provenance: &str, header: &[&str], rows: Vec<Vec<Cell>>) -> Result<()> {
    let mut w = sink(out)?;
    writeln!(w, "# {provenance}")?;
    {
        let mut csv = csv::Writer::from_writer(&mut w);
        csv.write_record(header)?;
        for row in rows {
            csv.write_record(row.iter().map(Cell::render))?;
        }
        csv.flush()?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// The JSON envelope: the command, its full configuration and the results.
#[derive(Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a C,
    pub results: &'a R,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0577350), "0.057735");
        assert_eq!(sig6(207.34031234), "207.34");
        assert_eq!(sig6(11.96157), "11.9616");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(1e-8), "1e-8");
        assert_eq!(sig6(-3.14159265e-7), "-3.14159e-7");
        assert_eq!(sig6(123456789.0), "1.23457e8");
        assert_eq!(sig6(9.9999995), "10");
        assert_eq!(sig6(0.0), "0");
    }
}
