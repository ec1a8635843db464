//! Decoders: recover a statistic from its sketch by exploiting structure.
//!
//! * [`decode_low_rank`]: nuclear-norm recovery of a PSD matrix from
//!   rank-one measurements (subspace clustering, PCA);
//! * [`decode_ica`]: recovery of an orthogonally diagonalizable cumulant
//!   tensor from dense Gaussian projections;
//! * [`diagonalize_cumulant`]: the non-compressive counterpart, operating
//!   on a materialized tensor, used both as a pipeline oracle and to solve
//!   decoded tensors.

mod ica;
mod low_rank;
pub mod orthogonal;

pub use ica::{contrast_off_diagonal, decode_ica, diagonalize_cumulant, IcaDecode};
pub use low_rank::{decode_low_rank, LowRankDecode};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::statistics::CumulantTensor;
use crate::tensor::Tensor4;

/// Solver knobs shared by the iterative decoders.
#[derive(Debug, Clone)]
pub struct DecodeOptions {
    /// Total iteration budget.
    pub max_iters: usize,
    /// Relative residual at which the decode counts as converged.
    pub tol: f64,
    /// Initial step size (scaled internally by the estimated curvature).
    pub step: f64,
    /// Random restarts for the nonconvex decoder.
    pub restarts: usize,
    /// Seed for initialization.
    pub seed: u64,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions {
            max_iters: 5000,
            tol: 1e-6,
            step: 1.0,
            restarts: 8,
            seed: 0,
        }
    }
}

impl DecodeOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be ≥ 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("tol must be positive".into()));
        }
        if !(self.step > 0.0) {
            return Err(Error::InvalidArgument("step must be positive".into()));
        }
        Ok(())
    }
}

/// One row of a decoder convergence log.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub residual: f64,
}

/// A fourth-order tensor represented through its orthogonal diagonalization:
/// `Σ(Q, κ) = Σ_i κ_i · q_i⊗q_i⊗q_i⊗q_i`.
#[derive(Debug, Clone)]
pub struct DiagonalizableTensor {
    q: DMatrix<f64>,
    kappa: DVector<f64>,
}

impl DiagonalizableTensor {
    /// Requires `Q` square with `‖QᵀQ − I‖_F ≤ 1e-8` and one weight per
    /// column.
    pub fn new(q: DMatrix<f64>, kappa: DVector<f64>) -> Result<Self> {
        if q.nrows() != q.ncols() || q.ncols() != kappa.len() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} basis with {} weights",
                q.nrows(),
                q.ncols(),
                kappa.len()
            )));
        }
        let err = orthogonal::orthogonality_error(&q);
        if err > 1e-8 {
            return Err(Error::InvalidArgument(format!(
                "basis is not orthogonal: ‖QᵀQ − I‖ = {err:.3e}"
            )));
        }
        Ok(DiagonalizableTensor { q, kappa })
    }

    pub fn dim(&self) -> usize {
        self.kappa.len()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn kappa(&self) -> &DVector<f64> {
        &self.kappa
    }

    /// Materializes the dense tensor.
    pub fn to_tensor(&self) -> Result<Tensor4> {
        Tensor4::from_rank_one_sum(&self.q, &self.kappa)
    }

    /// Materializes as a validated cumulant statistic.
    pub fn to_cumulant(&self) -> Result<CumulantTensor> {
        CumulantTensor::new(self.to_tensor()?)
    }
}
