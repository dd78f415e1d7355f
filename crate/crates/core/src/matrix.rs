//! Data matrices and column standardization.
//!
//! Rows are samples and columns are features throughout the crate. A
//! [`RawMatrix`] is validated user data; a [`StandardizedMatrix`] is what the
//! solvers consume: every column centered and scaled to unit variance, with
//! the per-column location and scale kept for provenance.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Divisor used for the column variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceConvention {
    /// Sample variance, divisor `n - 1`.
    #[default]
    Sample,
    /// Population variance, divisor `n`.
    Population,
}

impl VarianceConvention {
    fn divisor(self, n: usize) -> f64 {
        match self {
            VarianceConvention::Sample => (n - 1) as f64,
            VarianceConvention::Population => n as f64,
        }
    }
}

/// A finite `n x p` matrix with `n >= 2` and `p >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatrix(Array2<f64>);

impl RawMatrix {
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let (rows, cols) = data.dim();
        if rows < 2 || cols < 1 {
            return Err(Error::BadShape { rows, cols });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(RawMatrix(data))
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let arr = Array2::from_shape_vec((rows, cols), data)
            .map_err(|e| Error::DimensionMismatch(e.to_string()))?;
        Self::new(arr)
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Keeps the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        Self::new(self.0.select(Axis(0), rows))
    }

    /// Keeps the listed columns, in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> Result<Self> {
        Self::new(self.0.select(Axis(1), cols))
    }
}

/// Solver-ready data: normally every column has mean 0 and unit variance
/// (see [`Preprocessing`] for the pass-through alternative).
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedMatrix {
    data: Array2<f64>,
    column_means: Array1<f64>,
    column_scales: Array1<f64>,
    convention: VarianceConvention,
}

impl StandardizedMatrix {
    pub fn data(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn column_means(&self) -> &Array1<f64> {
        &self.column_means
    }

    pub fn column_scales(&self) -> &Array1<f64> {
        &self.column_scales
    }

    pub fn convention(&self) -> VarianceConvention {
        self.convention
    }
}

/// Standardizes columns using the sample-variance convention.
pub fn standardize_columns(m: &RawMatrix) -> Result<StandardizedMatrix> {
    standardize_columns_with(m, VarianceConvention::Sample)
}

/// Columns whose spread is below this fraction of their magnitude count as
/// constant; this catches values like `[0.1, 0.1, 0.1]` whose computed mean
/// differs from the entries by one ulp.
const CONSTANT_RTOL: f64 = 1e-12;

pub fn standardize_columns_with(
    m: &RawMatrix,
    convention: VarianceConvention,
) -> Result<StandardizedMatrix> {
    let x = &m.0;
    let n = x.nrows();
    let mut data = x.clone();
    let mut means = Array1::zeros(x.ncols());
    let mut scales = Array1::zeros(x.ncols());
    for (j, mut col) in data.axis_iter_mut(Axis(1)).enumerate() {
        let mean = col.sum() / n as f64;
        let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
        let sd = (ss / convention.divisor(n)).sqrt();
        let magnitude = col.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if !(sd > CONSTANT_RTOL * magnitude.max(f64::MIN_POSITIVE)) {
            return Err(Error::ConstantColumn(j));
        }
        col.mapv_inplace(|v| (v - mean) / sd);
        means[j] = mean;
        scales[j] = sd;
    }
    Ok(StandardizedMatrix {
        data,
        column_means: means,
        column_scales: scales,
        convention,
    })
}

/// How raw data are brought onto the solvers' common scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preprocessing {
    /// Center and scale every column (sample variance).
    #[default]
    Standardize,
    /// Use the values as given. For data whose columns are already on a
    /// common scale and whose sample structure must not be shifted by
    /// centering, such as synthetic data where the planted samples make up
    /// half of the rows: centering turns `w u^T` into `(w - 1/2) u^T`, which
    /// gives selected and unselected rows signal of equal size.
    Identity,
}

/// Applies `preprocessing`; [`Preprocessing::Identity`] records zero means
/// and unit scales.
pub fn prepare(m: &RawMatrix, preprocessing: Preprocessing) -> Result<StandardizedMatrix> {
    match preprocessing {
        Preprocessing::Standardize => standardize_columns(m),
        Preprocessing::Identity => Ok(StandardizedMatrix {
            data: m.0.clone(),
            column_means: Array1::zeros(m.ncols()),
            column_scales: Array1::ones(m.ncols()),
            convention: VarianceConvention::Sample,
        }),
    }
}

/// Indices of columns that would be rejected by [`standardize_columns`].
pub fn constant_columns(m: &RawMatrix) -> Vec<usize> {
    let n = m.nrows() as f64;
    m.0.axis_iter(Axis(1))
        .enumerate()
        .filter_map(|(j, col)| {
            let mean = col.sum() / n;
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            let magnitude = col.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            let sd = (ss / (n - 1.0)).sqrt();
            (!(sd > CONSTANT_RTOL * magnitude.max(f64::MIN_POSITIVE))).then_some(j)
        })
        .collect()
}
