use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Inputs `x` (n x d) with outputs `y` (n).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Dimension {
                context: "dataset rows",
                expected: x.nrows(),
                actual: y.len(),
            });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset"));
        }
        Ok(Self { x, y })
    }

    /// One-dimensional inputs.
    pub fn from_1d(x: &[f64], y: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(x.len(), 1, x), DVector::from_column_slice(y))
    }

    /// Rows given as slices of equal length.
    pub fn from_rows(rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::Dimension {
                context: "dataset row width",
                expected: d,
                actual: bad.len(),
            });
        }
        let x = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        Self::new(x, DVector::from_column_slice(y))
    }

    pub fn empty(input_dim: usize) -> Self {
        Self {
            x: DMatrix::zeros(0, input_dim),
            y: DVector::zeros(0),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.x.ncols()
    }

    /// Rows in the given order.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows),
            y: self.y.select_rows(rows),
        }
    }

    /// Appends one observation.
    pub fn push(&mut self, input: &[f64], output: f64) {
        let n = self.len();
        let d = self.input_dim();
        let mut x = DMatrix::zeros(n + 1, d);
        x.rows_mut(0, n).copy_from(&self.x);
        for (k, v) in input.iter().enumerate() {
            x[(n, k)] = *v;
        }
        self.x = x;
        self.y = self.y.push(output);
    }
}
