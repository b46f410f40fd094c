//! Numeric CSV tables with a single header row.

use std::io::{Read, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("table is empty")]
    Empty,
    #[error("expected at least {needed} columns, found {found}")]
    TooFewColumns { needed: usize, found: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    /// Column-major values; every column has the same length.
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: Vec<String>) -> Self {
        let columns = vec![Vec::new(); headers.len()];
        Self { headers, columns }
    }

    pub fn from_columns(headers: &[&str], columns: Vec<Vec<f64>>) -> Self {
        assert_eq!(headers.len(), columns.len(), "one header per column");
        Self {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            columns,
        }
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.columns.len(), "row width must match header");
        for (col, v) in self.columns.iter_mut().zip(row) {
            col.push(*v);
        }
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    /// First two columns as `(x, y)` pairs.
    pub fn xy(&self) -> Result<Vec<(f64, f64)>, TableError> {
        if self.columns.len() < 2 {
            return Err(TableError::TooFewColumns {
                needed: 2,
                found: self.columns.len(),
            });
        }
        Ok(self.columns[0]
            .iter()
            .copied()
            .zip(self.columns[1].iter().copied())
            .collect())
    }

    pub fn read<R: Read>(input: R) -> Result<Self, TableError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(input);
        let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(TableError::Empty);
        }
        let mut table = Table::new(headers);
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let row = record
                .iter()
                .enumerate()
                .map(|(j, s)| {
                    s.parse::<f64>().map_err(|_| TableError::Parse {
                        line,
                        message: format!("column `{}`: `{s}` is not a number", table.headers[j]),
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            table.push_row(&row);
        }
        if table.rows() == 0 {
            return Err(TableError::Empty);
        }
        Ok(table)
    }

    /// Writes with shortest round-trip float formatting, so identical
    /// tables produce identical bytes.
    pub fn write<W: Write>(&self, out: W) -> Result<(), TableError> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(&self.headers)?;
        for i in 0..self.rows() {
            writer.write_record(self.columns.iter().map(|c| format!("{:e}", c[i])))?;
        }
        writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory cannot fail");
        buf
    }
}
