//! Domain types shared by the statistic pipelines.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tensor::Tensor4;

/// A batch of samples, one row per sample.
#[derive(Debug, Clone)]
pub struct DataBatch {
    samples: DMatrix<f64>,
}

impl DataBatch {
    /// Wraps an `N × d` matrix of samples. Requires `N ≥ 1` and finite entries.
    pub fn new(samples: DMatrix<f64>) -> Result<Self> {
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(Error::InvalidSize(
                "a data batch needs at least one sample and one feature".into(),
            ));
        }
        if !samples.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "data batch contains non-finite values".into(),
            ));
        }
        Ok(DataBatch { samples })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidSize("no rows".into()));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        let mut m = DMatrix::zeros(rows.len(), d);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        Self::new(m)
    }

    #[inline]
    pub fn n_samples(&self) -> usize {
        self.samples.nrows()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.samples.ncols()
    }

    pub fn samples(&self) -> &DMatrix<f64> {
        &self.samples
    }

    pub fn sample(&self, i: usize) -> DVector<f64> {
        self.samples.row(i).transpose()
    }

    /// Copies sample `i` into `buf` without allocating.
    pub fn sample_into(&self, i: usize, buf: &mut [f64]) {
        for j in 0..self.dim() {
            buf[j] = self.samples[(i, j)];
        }
    }

    pub fn concat(&self, other: &DataBatch) -> Result<DataBatch> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("d={}", self.dim()),
                actual: format!("d={}", other.dim()),
            });
        }
        let n = self.n_samples() + other.n_samples();
        let mut m = DMatrix::zeros(n, self.dim());
        m.view_mut((0, 0), (self.n_samples(), self.dim()))
            .copy_from(&self.samples);
        m.view_mut((self.n_samples(), 0), (other.n_samples(), other.dim()))
            .copy_from(&other.samples);
        DataBatch::new(m)
    }

    /// Splits the batch into consecutive chunks of at most `size` samples.
    pub fn chunks(&self, size: usize) -> Vec<DataBatch> {
        assert!(size >= 1, "chunk size must be positive");
        let mut out = Vec::new();
        let mut start = 0;
        while start < self.n_samples() {
            let len = size.min(self.n_samples() - start);
            let m = self.samples.view((start, 0), (len, self.dim())).clone_owned();
            out.push(DataBatch { samples: m });
            start += len;
        }
        out
    }
}

/// A symmetric positive semidefinite statistic: the correlation matrix of
/// embedded data, or a second-moment matrix.
#[derive(Debug, Clone)]
pub struct StatisticMatrix {
    mat: DMatrix<f64>,
}

impl StatisticMatrix {
    /// Validates symmetry (1e-12 relative) and positive semidefiniteness up
    /// to roundoff (eigenvalues ≥ −1e-10 · trace).
    pub fn new(mat: DMatrix<f64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "statistic matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        if !mat.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(
                "statistic matrix contains non-finite values".into(),
            ));
        }
        let scale = mat.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut asym = 0.0f64;
        for i in 0..mat.nrows() {
            for j in (i + 1)..mat.ncols() {
                asym = asym.max((mat[(i, j)] - mat[(j, i)]).abs());
            }
        }
        if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidArgument(format!(
                "statistic matrix is asymmetric (max deviation {asym:.3e} at scale {scale:.3e})"
            )));
        }
        let trace = mat.trace();
        let min_eig = mat
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &v| a.min(v));
        if min_eig < -1e-10 * trace.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidArgument(format!(
                "statistic matrix is indefinite (min eigenvalue {min_eig:.3e}, trace {trace:.3e})"
            )));
        }
        Ok(StatisticMatrix { mat })
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.mat
    }

    /// Eigenpairs sorted by descending eigenvalue.
    pub fn eigen_sorted(&self) -> (Vec<f64>, DMatrix<f64>) {
        let eig = self.mat.clone().symmetric_eigen();
        let n = self.side();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .expect("finite eigenvalues")
        });
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        (values, vectors)
    }

    /// Number of eigenvalues above `rel_tol · λ_max`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let (values, _) = self.eigen_sorted();
        let lmax = values.first().copied().unwrap_or(0.0).max(0.0);
        values.iter().filter(|&&v| v > rel_tol * lmax).count()
    }
}

/// A fourth-order cumulant statistic: permutation symmetric by construction.
#[derive(Debug, Clone)]
pub struct CumulantTensor {
    tensor: Tensor4,
}

impl CumulantTensor {
    /// Validates finiteness and permutation symmetry (relative 1e-12).
    pub fn new(tensor: Tensor4) -> Result<Self> {
        if !tensor.all_finite() {
            return Err(Error::InvalidArgument(
                "cumulant tensor contains non-finite values".into(),
            ));
        }
        let scale = tensor
            .as_slice()
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let err = tensor.symmetry_error();
        if err > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidArgument(format!(
                "tensor is not permutation symmetric (max deviation {err:.3e})"
            )));
        }
        Ok(CumulantTensor { tensor })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.tensor.dim()
    }

    pub fn tensor(&self) -> &Tensor4 {
        &self.tensor
    }

    pub fn into_inner(self) -> Tensor4 {
        self.tensor
    }
}

impl std::ops::Deref for CumulantTensor {
    type Target = Tensor4;

    fn deref(&self) -> &Tensor4 {
        &self.tensor
    }
}
