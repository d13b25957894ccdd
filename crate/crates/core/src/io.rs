//! Plain comma-separated matrix files.
//!
//! Rows are samples, columns are variables. A first row that does not parse
//! as numbers is taken as a header of variable names.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{EcdmError, Result};
use crate::sample::PairedSample;

/// A numeric matrix with optional column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub names: Option<Vec<String>>,
    pub values: Array2<f64>,
}

/// Which columns form block 1.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockSpec {
    /// The first `p1` columns.
    Leading(usize),
    /// Named columns, in file order; everything else is block 2.
    Named(Vec<String>),
}

fn parse_row(fields: &csv::StringRecord) -> Option<Vec<f64>> {
    fields.iter().map(|f| f.trim().parse::<f64>().ok()).collect()
}

pub fn read_matrix<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .quoting(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut names = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| EcdmError::Parse(format!("line {}: {e}", line + 1)))?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if let Some(w) = width {
            if rec.len() != w {
                return Err(EcdmError::Parse(format!(
                    "line {}: expected {w} fields, found {}",
                    line + 1,
                    rec.len()
                )));
            }
        }
        width = Some(rec.len());
        match parse_row(&rec) {
            Some(row) => rows.push(row),
            None if line == 0 => names = Some(rec.iter().map(str::to_owned).collect()),
            None => {
                let (col, bad) = rec
                    .iter()
                    .enumerate()
                    .find(|(_, f)| f.parse::<f64>().is_err())
                    .expect("some field failed to parse");
                return Err(EcdmError::Parse(format!(
                    "line {}, column {}: '{bad}' is not a number",
                    line + 1,
                    col + 1
                )));
            }
        }
    }
    let p = width.unwrap_or(0);
    let n = rows.len();
    if n == 0 || p == 0 {
        return Err(EcdmError::Parse("no numeric rows".into()));
    }
    let values = Array2::from_shape_vec((n, p), rows.into_iter().flatten().collect())
        .map_err(|e| EcdmError::Parse(e.to_string()))?;
    Ok(Dataset { names, values })
}

pub fn read_matrix_file(path: &Path) -> Result<Dataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| EcdmError::Parse(format!("{}: {e}", path.display())))?;
    read_matrix(std::io::BufReader::new(file))
}

impl Dataset {
    pub fn column_name(&self, col: usize) -> String {
        match &self.names {
            Some(names) => names[col].clone(),
            None => format!("column {}", col + 1),
        }
    }

    /// Replace every value by its base-2 logarithm; all values must be positive.
    pub fn log2(mut self) -> Result<Self> {
        if let Some(((r, c), v)) = self.values.indexed_iter().find(|(_, v)| !(**v > 0.0)) {
            return Err(EcdmError::InvalidArgument(format!(
                "log2 needs positive values; row {}, {} is {v}",
                r + 1,
                self.column_name(c)
            )));
        }
        self.values.mapv_inplace(f64::log2);
        Ok(self)
    }

    /// Column permutation putting block 1 first, and the block 1 width.
    fn block_order(&self, spec: &BlockSpec) -> Result<(Vec<usize>, usize)> {
        let p = self.values.ncols();
        match spec {
            BlockSpec::Leading(p1) => Ok(((0..p).collect(), *p1)),
            BlockSpec::Named(wanted) => {
                let names = self.names.as_ref().ok_or_else(|| {
                    EcdmError::InvalidArgument("named blocks need a header row".into())
                })?;
                for w in wanted {
                    if !names.contains(w) {
                        return Err(EcdmError::InvalidArgument(format!("no column named '{w}'")));
                    }
                }
                let (first, rest): (Vec<usize>, Vec<usize>) =
                    (0..p).partition(|&c| wanted.contains(&names[c]));
                let p1 = first.len();
                Ok((first.into_iter().chain(rest).collect(), p1))
            }
        }
    }

    /// Split into a paired sample. Returns the column names in block order.
    pub fn paired(&self, spec: &BlockSpec) -> Result<(PairedSample, Vec<String>)> {
        let (order, p1) = self.block_order(spec)?;
        let reordered = self.values.select(ndarray::Axis(1), &order);
        let names = order.iter().map(|&c| self.column_name(c)).collect();
        Ok((PairedSample::new(reordered.view(), p1)?, names))
    }
}

/// Write a matrix with 17 significant digits, optionally with a header.
pub fn write_matrix<W: Write>(mut out: W, values: &Array2<f64>, names: Option<&[String]>) -> std::io::Result<()> {
    if let Some(names) = names {
        writeln!(out, "{}", names.join(","))?;
    }
    for row in values.rows() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}
