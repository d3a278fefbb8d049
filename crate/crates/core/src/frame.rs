//! Named columns read from and written to comma-separated text.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("column '{0}' not found")]
    MissingColumn(String),
    #[error("column '{0}' appears twice")]
    DuplicateColumn(String),
    #[error("column '{column}' is not numeric (row {row}: '{value}')")]
    NotNumeric { column: String, row: usize, value: String },
    #[error("column '{column}' has {got} rows, frame has {expected}")]
    Length {
        column: String,
        got: usize,
        expected: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column<T> {
    Numeric(Vec<T>),
    Text(Vec<String>),
}

impl<T: Scalar> Column<T> {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn cell(&self, row: usize) -> String {
        match self {
            Column::Numeric(v) => format!("{}", v[row]),
            Column::Text(v) => v[row].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame<T> {
    nrows: usize,
    names: Vec<String>,
    columns: Vec<Column<T>>,
}

impl<T: Scalar> Frame<T> {
    pub fn new(nrows: usize) -> Self {
        Self {
            nrows,
            names: Vec::new(),
            columns: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn push(&mut self, name: impl Into<String>, column: Column<T>) -> Result<(), FrameError> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(FrameError::DuplicateColumn(name));
        }
        if column.len() != self.nrows {
            return Err(FrameError::Length {
                column: name,
                got: column.len(),
                expected: self.nrows,
            });
        }
        self.names.push(name);
        self.columns.push(column);
        Ok(())
    }

    pub fn push_numeric(&mut self, name: impl Into<String>, values: Vec<T>) -> Result<(), FrameError> {
        self.push(name, Column::Numeric(values))
    }

    pub fn column(&self, name: &str) -> Result<&Column<T>, FrameError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| FrameError::MissingColumn(name.to_string()))
    }

    pub fn numeric(&self, name: &str) -> Result<&[T], FrameError> {
        match self.column(name)? {
            Column::Numeric(v) => Ok(v),
            Column::Text(v) => Err(FrameError::NotNumeric {
                column: name.to_string(),
                row: 0,
                value: v.first().cloned().unwrap_or_default(),
            }),
        }
    }

    /// Reads a header-first CSV. A column whose every cell parses as a
    /// number (scientific notation included) becomes numeric; anything else
    /// stays text.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, FrameError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for rec in rdr.records() {
            let rec = rec?;
            for (col, cell) in raw.iter_mut().zip(rec.iter()) {
                col.push(cell.trim().to_string());
            }
        }
        let nrows = raw.first().map_or(0, Vec::len);
        let mut frame = Self::new(nrows);
        for (name, cells) in headers.into_iter().zip(raw) {
            let parsed: Option<Vec<T>> = cells
                .iter()
                .map(|c| c.parse::<f64>().ok().and_then(T::from_f64))
                .collect();
            let column = match parsed {
                Some(v) if !cells.is_empty() => Column::Numeric(v),
                _ => Column::Text(cells),
            };
            frame.push(name, column)?;
        }
        Ok(frame)
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self, FrameError> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    /// Writes the frame with numbers in shortest round-trip form, so a
    /// re-read reproduces every value bit for bit.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), FrameError> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(&self.names)?;
        for row in 0..self.nrows {
            wtr.write_record(self.columns.iter().map(|c| c.cell(row)))?;
        }
        wtr.flush()?;
        Ok(())
    }
}
