//! Compressive sketched learning for semi-parametric models.
//!
//! The pipeline: compute an identifiable statistic of the data (fourth-order
//! cumulant tensor, embedded correlation matrix, or second-moment matrix),
//! compress it through a seeded random linear sketch, decode the statistic
//! back from the sketch by exploiting its structure (orthogonal
//! diagonalizability, low rank), and extract the model:
//!
//! * ICA: orthogonal unmixing from a sketched cumulant tensor;
//! * subspace clustering: vanishing polynomials from a sketched Veronese
//!   correlation;
//! * PCA: a principal subspace from a sketched second-moment matrix.
//!
//! [`analysis`] reproduces the associated compression studies: when is the
//! sketch smaller than the statistic, and when is it smaller than the data.

pub mod analysis;
pub mod decode;
pub mod error;
pub mod io;
pub mod models;
pub mod sketch;
pub mod statistics;
pub mod synth;
pub mod tensor;

pub use error::{Error, Result};
