//! Numeric CSV tables with a single header row.

use std::path::Path;

use faer::c64;

use super::{read_text, write_text};
use crate::config::fmt_f64;
use crate::error::{Error, Result};
use crate::sweep::Trace;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_text(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.to_text())
    }

    pub fn parse(text: &str, ctx: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::parse(ctx, "missing header row"))?
            .split(',')
            .map(|s| s.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|_| Error::parse(ctx, format!("data row {}: not numeric: '{line}'", k + 1)))?;
            if row.len() != header.len() {
                return Err(Error::parse(
                    ctx,
                    format!("data row {} has {} fields, header has {}", k + 1, row.len(), header.len()),
                ));
            }
            rows.push(row);
        }
        Ok(Self { header, rows })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

pub fn trace_csv(t: &Trace) -> CsvTable {
    let mut table = CsvTable::new(&["f_Hz", "re", "im", "abs"]);
    for (f, z) in t.frequencies_hz.iter().zip(&t.values) {
        table.push(vec![*f, z.re, z.im, z.norm()]);
    }
    table
}

pub fn parse_trace_csv(text: &str, ctx: &str) -> Result<Trace> {
    let t = CsvTable::parse(text, ctx)?;
    let col = |name: &str| t.column(name).ok_or_else(|| Error::parse(ctx, format!("missing column '{name}'")));
    let (f, re, im) = (col("f_Hz")?, col("re")?, col("im")?);
    Trace::new(f, re.iter().zip(&im).map(|(&a, &b)| c64::new(a, b)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_round_trip() {
        let t = Trace::new(vec![16.0, 18.0], vec![c64::new(0.1, -3e-12), c64::new(-2.0, 0.0)]).unwrap();
        let text = trace_csv(&t).to_text();
        assert!(text.starts_with("f_Hz,re,im,abs\n16.0,"), "{text}");
        assert_eq!(parse_trace_csv(&text, "t").unwrap(), t);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(CsvTable::parse("a,b\n1,2\n3\n", "t").is_err());
        assert!(CsvTable::parse("a,b\n1,x\n", "t").is_err());
        assert!(CsvTable::parse("", "t").is_err());
        assert!(parse_trace_csv("f_Hz,re\n1,2\n", "t").is_err());
    }
}
