//! Identifiable statistics computed from sample streams.
//!
//! Each learning task in this crate is solved from a single statistic of the
//! data distribution: the fourth-order kurtosis cumulant tensor for
//! independent component analysis, the correlation matrix of Veronese
//! embeddings for subspace clustering, and the second-moment matrix for PCA.
//! All of them are built through [`MomentAccumulator`], a mergeable one-pass
//! accumulator, so streams can be sharded and recombined freely.

mod accumulator;
mod types;
pub mod veronese;
mod whiten;

pub use accumulator::{AccumulatorKind, MomentAccumulator};
pub use types::{CumulantTensor, DataBatch, StatisticMatrix};
pub use veronese::{
    ambient_dim_for, veronese_dim, veronese_embed, veronese_embed_with, veronese_exponents,
};
pub use whiten::{empirical_covariance, fit_whitener, Whitener};
