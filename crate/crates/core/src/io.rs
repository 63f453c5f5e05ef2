//! Comma-separated numeric tables.
//!
//! One dialect everywhere: ',' separator, '.' decimals, UTF-8, and an
//! optional single header row, recognised by any field that does not parse
//! as a number. Numbers are written in shortest round-trip form, so the same
//! values always produce the same bytes.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::corrmat::{CorrMatrix, SpectrumSpec};
use crate::error::{Error, Result};
use crate::gauss_sampling::Dataset;
use crate::moments::Corr4;

/// Parsed table: optional header names and the numeric rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
}

fn parse_field(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

pub fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Option<Vec<f64>> = rec.iter().map(parse_field).collect();
        match parsed {
            Some(values) => rows.push(values),
            None if line == 0 => header = Some(rec.iter().map(str::to_owned).collect()),
            None => {
                let bad = rec.iter().find(|f| parse_field(f).is_none()).unwrap_or_default();
                return Err(Error::Parse(format!("line {}: {bad:?} is not a number", line + 1)));
            }
        }
    }
    if let Some(width) = rows.first().map(Vec::len) {
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != width) {
            return Err(Error::Parse(format!(
                "row {} has {} fields, expected {width}",
                i + 1,
                r.len()
            )));
        }
        if let Some(h) = &header {
            if h.len() != width {
                return Err(Error::Parse(format!(
                    "header has {} fields but rows have {width}",
                    h.len()
                )));
            }
        }
    }
    Ok(Table { header, rows })
}

pub fn read_table_path(path: impl AsRef<Path>) -> Result<Table> {
    read_table(BufReader::new(File::open(path)?))
}

pub fn write_rows<W: Write, I>(writer: W, header: Option<&[&str]>, rows: I) -> Result<()>
where
    I: IntoIterator,
    I::Item: AsRef<[f64]>,
{
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    let csv_err = |e: csv::Error| Error::Parse(e.to_string());
    if let Some(h) = header {
        w.write_record(h).map_err(csv_err)?;
    }
    for row in rows {
        w.write_record(row.as_ref().iter().map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn table_to_matrix(t: Table) -> Result<DMatrix<f64>> {
    let n = t.rows.len();
    let p = t.rows.first().map_or(0, Vec::len);
    if n == 0 || p == 0 {
        return Err(Error::Parse("table has no numeric rows".into()));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| t.rows[i][j]))
}

fn matrix_rows(m: &DMatrix<f64>) -> impl Iterator<Item = Vec<f64>> + '_ {
    (0..m.nrows()).map(move |i| m.row(i).iter().copied().collect())
}

pub fn read_matrix<R: Read>(reader: R) -> Result<DMatrix<f64>> {
    table_to_matrix(read_table(reader)?)
}

pub fn write_matrix<W: Write>(writer: W, m: &DMatrix<f64>) -> Result<()> {
    write_rows(writer, None, matrix_rows(m))
}

pub fn read_corr<R: Read>(reader: R) -> Result<CorrMatrix> {
    CorrMatrix::new(read_matrix(reader)?)
}

pub fn read_corr4<R: Read>(reader: R) -> Result<Corr4> {
    Corr4::from_corr(read_corr(reader)?)
}

/// Spectrum as a single line of values (several lines are concatenated).
/// The values are sorted descending.
pub fn read_spectrum<R: Read>(reader: R) -> Result<SpectrumSpec> {
    let t = read_table(reader)?;
    let values: Vec<f64> = t.rows.into_iter().flatten().collect();
    if values.is_empty() {
        return Err(Error::Parse("spectrum file holds no values".into()));
    }
    Ok(SpectrumSpec::from_unsorted(values))
}

pub fn write_spectrum<W: Write>(writer: W, spec: &SpectrumSpec) -> Result<()> {
    write_rows(writer, None, [spec.as_slice()])
}

pub fn read_dataset<R: Read>(reader: R, label: impl Into<String>) -> Result<Dataset> {
    Dataset::new(table_to_matrix(read_table(reader)?)?, label)
}

pub fn read_dataset_path(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    read_dataset(BufReader::new(File::open(path)?), path.display().to_string())
}

pub fn write_dataset<W: Write>(writer: W, data: &Dataset, header: bool) -> Result<()> {
    let names: Vec<String> = (1..=data.p()).map(|j| format!("x{j}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    write_rows(writer, header.then_some(refs.as_slice()), matrix_rows(data.rows()))
}

pub fn write_dataset_path(path: impl AsRef<Path>, data: &Dataset, header: bool) -> Result<()> {
    write_dataset(BufWriter::new(File::create(path)?), data, header)
}
