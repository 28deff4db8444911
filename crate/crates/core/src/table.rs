//! CSV output shared by the command line tools.

use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

/// One table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Real(f64),
    Index(usize),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Index(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Reals with 17 significant digits; infinities as `inf` and `-inf`.
pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(v) => format_real(*v),
            Cell::Index(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Column names, `# key = value` provenance lines and rows.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub provenance: Vec<(String, String)>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn note(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.provenance.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Validation(format!(
                "row has {} cells but the table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        for (k, v) in &self.provenance {
            writeln!(out, "# {k} = {v}")?;
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["z", "q", "cd"]);
        assert_eq!(t.to_csv_string(), "z,q,cd\r\n");
    }

    #[test]
    fn reals_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789, f64::MIN_POSITIVE] {
            assert_eq!(format_real(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_real(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_real(f64::INFINITY), "inf");
    }

    #[test]
    fn row_width_checked_and_text_quoted() {
        let mut t = Table::new(&["L", "ratio", "regime"]);
        assert!(t.push(vec![1.0.into()]).is_err());
        t.push(vec![1.5.into(), 2.0.into(), "a,b".into()]).unwrap();
        t.note("model", "hellinger");
        let s = t.to_csv_string();
        assert!(s.starts_with("# model = hellinger\n"));
        assert!(s.contains("\"a,b\""));
    }
}
