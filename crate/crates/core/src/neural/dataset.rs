use super::Matrix;
use crate::error::{Error, Result};

/// Paired inputs (M × d) and targets (M × k).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Matrix,
    pub targets: Matrix,
}

impl Dataset {
    pub fn new(inputs: Matrix, targets: Matrix) -> Result<Self> {
        if inputs.rows() != targets.rows() {
            return Err(Error::DimensionMismatch {
                expected: inputs.rows(),
                actual: targets.rows(),
            });
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn target_dim(&self) -> usize {
        self.targets.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            inputs: self.inputs.select_rows(idx),
            targets: self.targets.select_rows(idx),
        }
    }

    /// Append the rows of `other`.
    pub fn extend(&mut self, other: &Dataset) -> Result<()> {
        if other.input_dim() != self.input_dim() || other.target_dim() != self.target_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: other.input_dim(),
            });
        }
        let mut inputs = std::mem::replace(&mut self.inputs, Matrix::zeros(0, 0)).into_vec();
        inputs.extend_from_slice(other.inputs.as_slice());
        let mut targets = std::mem::replace(&mut self.targets, Matrix::zeros(0, 0)).into_vec();
        targets.extend_from_slice(other.targets.as_slice());
        let rows = inputs.len() / other.input_dim().max(1);
        self.inputs = Matrix::from_vec(rows, other.input_dim(), inputs)?;
        self.targets = Matrix::from_vec(rows, other.target_dim(), targets)?;
        Ok(())
    }

    /// CSV with one column per input feature, then one target column.
    pub fn to_csv(&self) -> Result<String> {
        if self.target_dim() != 1 {
            return Err(Error::InvalidArgument(
                "CSV export needs exactly one target column".into(),
            ));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = (0..self.input_dim()).map(|i| format!("x{i}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (x, y) in self.inputs.iter_rows().zip(self.targets.iter_rows()) {
            w.write_record(x.iter().chain(y).map(|v| v.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let mut cols = None;
        let mut inputs = Vec::new();
        let mut targets = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let n = *cols.get_or_insert(rec.len());
            if n < 2 || rec.len() != n {
                return Err(Error::Parse(format!(
                    "dataset row has {} columns, expected {n} (>= 2)",
                    rec.len()
                )));
            }
            for (i, field) in rec.iter().enumerate() {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad number {field:?}")))?;
                if i + 1 == n {
                    targets.push(v);
                } else {
                    inputs.push(v);
                }
            }
        }
        let n = cols.ok_or_else(|| Error::Parse("dataset has no rows".into()))?;
        let rows = targets.len();
        Self::new(
            Matrix::from_vec(rows, n - 1, inputs)?,
            Matrix::from_vec(rows, 1, targets)?,
        )
    }
}
