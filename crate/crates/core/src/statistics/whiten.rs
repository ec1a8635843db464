//! Whitening: estimating the affine map that centers data and equalizes its
//! covariance to the identity.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::statistics::DataBatch;

/// A fitted whitening transform `x ↦ W (x − mean)`.
///
/// `W` is the symmetric inverse square root of the empirical covariance, so
/// that the whitened fitting data has identity covariance and any residual
/// mixing of whitened sources is an orthogonal matrix.
#[derive(Debug, Clone)]
pub struct Whitener {
    mean: DVector<f64>,
    transform: DMatrix<f64>,
}

impl Whitener {
    pub fn identity(dim: usize) -> Self {
        Whitener {
            mean: DVector::zeros(dim),
            transform: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_parts(mean: DVector<f64>, transform: DMatrix<f64>) -> Result<Self> {
        if transform.nrows() != transform.ncols() || transform.nrows() != mean.len() {
            return Err(Error::ShapeMismatch(format!(
                "whitener needs a square transform matching the mean: {}x{} vs {}",
                transform.nrows(),
                transform.ncols(),
                mean.len()
            )));
        }
        Ok(Whitener { mean, transform })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn transform(&self) -> &DMatrix<f64> {
        &self.transform
    }

    /// Applies the transform to every sample of a batch.
    pub fn apply(&self, data: &DataBatch) -> Result<DataBatch> {
        if data.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("d={}", self.dim()),
                actual: format!("d={}", data.dim()),
            });
        }
        let n = data.n_samples();
        let d = data.dim();
        let mut centered = data.samples().clone();
        for i in 0..n {
            for j in 0..d {
                centered[(i, j)] -= self.mean[j];
            }
        }
        // rows are samples, so x ↦ Wx becomes X Wᵀ
        let whitened = centered * self.transform.transpose();
        DataBatch::new(whitened)
    }
}

/// Empirical covariance about the empirical mean, `1/N` normalization.
pub fn empirical_covariance(data: &DataBatch) -> (DVector<f64>, DMatrix<f64>) {
    let n = data.n_samples();
    let d = data.dim();
    let mut mean = DVector::zeros(d);
    for i in 0..n {
        for j in 0..d {
            mean[j] += data.samples()[(i, j)];
        }
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    let mut centered = vec![0.0; d];
    for i in 0..n {
        for j in 0..d {
            centered[j] = data.samples()[(i, j)] - mean[j];
        }
        for a in 0..d {
            for b in a..d {
                cov[(a, b)] += centered[a] * centered[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / n as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    (mean, cov)
}

/// Fits a whitener from data: `W = Ĉ^{−1/2}` via symmetric eigendecomposition.
///
/// Fails with `SingularCovariance` when the empirical covariance is rank
/// deficient beyond tolerance; with fewer than `d + 1` samples the centered
/// covariance cannot reach full rank, so that case fails the same way.
pub fn fit_whitener(data: &DataBatch) -> Result<Whitener> {
    let d = data.dim();
    let (mean, cov) = empirical_covariance(data);
    let eig = cov.symmetric_eigen();
    let max_eig = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v));
    let min_eig = eig
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &v| a.min(v));
    if data.n_samples() < d + 1 || min_eig <= 1e-12 * max_eig.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularCovariance { min_eig, max_eig });
    }
    let mut transform = DMatrix::zeros(d, d);
    // U Λ^{-1/2} Uᵀ
    for a in 0..d {
        for b in 0..d {
            let mut acc = 0.0;
            for t in 0..d {
                acc += eig.eigenvectors[(a, t)] * eig.eigenvectors[(b, t)]
                    / eig.eigenvalues[t].sqrt();
            }
            transform[(a, b)] = acc;
        }
    }
    Whitener::from_parts(mean, transform)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::DataBatch;
    use nalgebra::dmatrix;

    #[test]
    fn identity_covariance_gives_identity_whitener() {
        let r = 2.0f64.sqrt();
        let data = DataBatch::new(dmatrix![
            r, 0.0;
            -r, 0.0;
            0.0, r;
            0.0, -r
        ])
        .unwrap();
        let w = fit_whitener(&data).unwrap();
        assert!(w.mean().norm() < 1e-14);
        let id = DMatrix::identity(2, 2);
        assert!((w.transform() - id).norm() < 1e-12);
    }

    #[test]
    fn axis_scaled_data_whitens_to_diagonal() {
        // covariance diag(2, 1/2), so W = diag(1/√2, √2)
        let data = DataBatch::new(dmatrix![
            2.0, 0.0;
            -2.0, 0.0;
            0.0, 1.0;
            0.0, -1.0
        ])
        .unwrap();
        let w = fit_whitener(&data).unwrap();
        assert!(w.mean().norm() < 1e-14);
        assert!((w.transform()[(0, 0)] - 1.0 / 2.0f64.sqrt()).abs() < 1e-12);
        assert!((w.transform()[(1, 1)] - 2.0f64.sqrt()).abs() < 1e-12);
        assert!(w.transform()[(0, 1)].abs() < 1e-12);
        assert!(w.transform()[(1, 0)].abs() < 1e-12);
    }

    #[test]
    fn too_few_samples_is_singular() {
        let data = DataBatch::new(dmatrix![
            1.0, 2.0;
            3.0, 4.0
        ])
        .unwrap();
        match fit_whitener(&data) {
            Err(crate::Error::SingularCovariance { .. }) => {}
            other => panic!("expected SingularCovariance, got {other:?}"),
        }
    }

    #[test]
    fn whitened_training_data_has_identity_covariance() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let (n, d) = (400, 3);
        let mut m = DMatrix::zeros(n, d);
        for i in 0..n {
            let base: f64 = rng.random::<f64>() * 4.0 - 2.0;
            for j in 0..d {
                m[(i, j)] = base * (j as f64 + 0.5) + rng.random::<f64>() + j as f64;
            }
        }
        let data = DataBatch::new(m).unwrap();
        let w = fit_whitener(&data).unwrap();
        let white = w.apply(&data).unwrap();
        let (mean, cov) = empirical_covariance(&white);
        assert!(mean.norm() < 1e-10);
        let id = DMatrix::identity(d, d);
        assert!((cov - id).norm() <= 1e-8);
    }
}
