//! Mergeable accumulators of raw moment sums.
//!
//! Accumulators keep uncentered sums so that merging two of them is an exact
//! elementwise addition; centering and cumulant corrections happen only at
//! finalize. Any partition of a stream, accumulated and merged in any order,
//! finalizes to the one-shot result up to floating-point reassociation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::statistics::types::{CumulantTensor, DataBatch, StatisticMatrix};
use crate::statistics::veronese::{veronese_dim, veronese_embed_with, veronese_exponents};
use crate::tensor::{index_permutations, Tensor4};

/// Which statistic the accumulator is building.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AccumulatorKind {
    /// Fourth raw moments of (already whitened) data, finalized into the
    /// kurtosis cumulant tensor.
    Cumulant4 { dim: usize },
    /// Correlation of Veronese embeddings of the given degree.
    VeroneseCorrelation { degree: usize, dim: usize },
    /// Second-moment matrix of the raw data.
    Covariance { dim: usize },
}

impl AccumulatorKind {
    pub fn dim(&self) -> usize {
        match self {
            AccumulatorKind::Cumulant4 { dim }
            | AccumulatorKind::VeroneseCorrelation { dim, .. }
            | AccumulatorKind::Covariance { dim } => *dim,
        }
    }

    fn label(&self) -> String {
        match self {
            AccumulatorKind::Cumulant4 { dim } => format!("cumulant4(d={dim})"),
            AccumulatorKind::VeroneseCorrelation { degree, dim } => {
                format!("veronese-correlation(n={degree}, d={dim})")
            }
            AccumulatorKind::Covariance { dim } => format!("covariance(d={dim})"),
        }
    }
}

/// Running raw-moment sums plus a sample count.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    kind: AccumulatorKind,
    n_seen: u64,
    sums: Vec<f64>,
    // cached monomial exponents for the veronese kind
    exponents: Vec<Vec<u32>>,
}

/// Number of sorted index quadruples `i ≤ j ≤ k ≤ l` in `0..d`.
fn canonical_quad_count(d: usize) -> usize {
    d * (d + 1) * (d + 2) * (d + 3) / 24
}

impl MomentAccumulator {
    pub fn new(kind: AccumulatorKind) -> Result<Self> {
        let dim = kind.dim();
        if dim == 0 {
            return Err(Error::InvalidSize("accumulator dimension must be ≥ 1".into()));
        }
        let (len, exponents) = match &kind {
            AccumulatorKind::Cumulant4 { dim } => (canonical_quad_count(*dim), Vec::new()),
            AccumulatorKind::VeroneseCorrelation { degree, dim } => {
                let embedded = veronese_dim(*degree, *dim)?;
                (embedded * embedded, veronese_exponents(*degree, *dim))
            }
            AccumulatorKind::Covariance { dim } => (dim * dim, Vec::new()),
        };
        Ok(MomentAccumulator {
            kind,
            n_seen: 0,
            sums: vec![0.0; len],
            exponents,
        })
    }

    pub fn kind(&self) -> &AccumulatorKind {
        &self.kind
    }

    pub fn n_seen(&self) -> u64 {
        self.n_seen
    }

    /// Side length of the finalized statistic matrix, for the matrix kinds.
    pub fn statistic_side(&self) -> Option<usize> {
        match &self.kind {
            AccumulatorKind::Cumulant4 { .. } => None,
            AccumulatorKind::VeroneseCorrelation { .. } => Some(self.exponents.len()),
            AccumulatorKind::Covariance { dim } => Some(*dim),
        }
    }

    /// Folds a batch into the running sums.
    ///
    /// For the cumulant kind the batch must already be whitened; the
    /// finalization step assumes zero mean and identity covariance.
    pub fn accumulate(&mut self, batch: &DataBatch) -> Result<()> {
        if batch.dim() != self.kind.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("d={}", self.kind.dim()),
                actual: format!("d={}", batch.dim()),
            });
        }
        match &self.kind {
            AccumulatorKind::Cumulant4 { dim } => {
                let d = *dim;
                let mut x = vec![0.0; d];
                for s in 0..batch.n_samples() {
                    batch.sample_into(s, &mut x);
                    // one product per sorted quadruple, always evaluated in
                    // sorted order so permuted entries stay bit-identical
                    let mut c = 0;
                    for i in 0..d {
                        let xi = x[i];
                        for j in i..d {
                            let xij = xi * x[j];
                            for k in j..d {
                                let xijk = xij * x[k];
                                for l in k..d {
                                    self.sums[c] += xijk * x[l];
                                    c += 1;
                                }
                            }
                        }
                    }
                }
            }
            AccumulatorKind::VeroneseCorrelation { .. } => {
                let embedded = self.exponents.len();
                let d = self.kind.dim();
                let mut x = vec![0.0; d];
                let mut v = vec![0.0; embedded];
                for s in 0..batch.n_samples() {
                    batch.sample_into(s, &mut x);
                    veronese_embed_with(&self.exponents, &x, &mut v);
                    for a in 0..embedded {
                        let va = v[a];
                        for b in a..embedded {
                            self.sums[a * embedded + b] += va * v[b];
                        }
                    }
                }
            }
            AccumulatorKind::Covariance { dim } => {
                let d = *dim;
                let mut x = vec![0.0; d];
                for s in 0..batch.n_samples() {
                    batch.sample_into(s, &mut x);
                    for a in 0..d {
                        let xa = x[a];
                        for b in a..d {
                            self.sums[a * d + b] += xa * x[b];
                        }
                    }
                }
            }
        }
        self.n_seen += batch.n_samples() as u64;
        Ok(())
    }

    /// Combines two accumulators over disjoint streams.
    pub fn merge(&self, other: &MomentAccumulator) -> Result<MomentAccumulator> {
        if std::mem::discriminant(&self.kind) != std::mem::discriminant(&other.kind) {
            return Err(Error::KindMismatch(
                self.kind.label(),
                other.kind.label(),
            ));
        }
        if self.kind != other.kind {
            return Err(Error::DimensionMismatch {
                expected: self.kind.label(),
                actual: other.kind.label(),
            });
        }
        let mut out = self.clone();
        for (s, o) in out.sums.iter_mut().zip(&other.sums) {
            *s += o;
        }
        out.n_seen += other.n_seen;
        Ok(out)
    }

    /// Finalizes the kurtosis cumulant tensor of whitened data:
    /// `cum(i,j,k,l) = M̂(i,j,k,l) − δ_ij δ_kl − δ_ik δ_jl − δ_il δ_jk`
    /// with `M̂` the empirical fourth raw moment. On the diagonal this is the
    /// familiar `E[x⁴] − 3`.
    pub fn finalize_cumulant(&self) -> Result<CumulantTensor> {
        let d = match &self.kind {
            AccumulatorKind::Cumulant4 { dim } => *dim,
            other => {
                return Err(Error::KindMismatch(
                    "cumulant4".into(),
                    other.label(),
                ))
            }
        };
        if self.n_seen == 0 {
            return Err(Error::EmptyAccumulator);
        }
        let n = self.n_seen as f64;
        let perms = index_permutations();
        let mut tensor = Tensor4::zeros(d);
        let mut c = 0;
        for i in 0..d {
            for j in i..d {
                for k in j..d {
                    for l in k..d {
                        let moment = self.sums[c] / n;
                        c += 1;
                        let gauss = delta(i, j) * delta(k, l)
                            + delta(i, k) * delta(j, l)
                            + delta(i, l) * delta(j, k);
                        let value = moment - gauss;
                        let quad = [i, j, k, l];
                        for perm in &perms {
                            tensor.set(
                                quad[perm[0]],
                                quad[perm[1]],
                                quad[perm[2]],
                                quad[perm[3]],
                                value,
                            );
                        }
                    }
                }
            }
        }
        CumulantTensor::new(tensor)
    }

    /// Finalizes the correlation (or second-moment) matrix `1/N Σ v vᵀ`.
    pub fn finalize_correlation(&self) -> Result<StatisticMatrix> {
        let side = match self.statistic_side() {
            Some(s) => s,
            None => {
                return Err(Error::KindMismatch(
                    "veronese-correlation or covariance".into(),
                    self.kind.label(),
                ))
            }
        };
        if self.n_seen == 0 {
            return Err(Error::EmptyAccumulator);
        }
        let n = self.n_seen as f64;
        let mut mat = DMatrix::zeros(side, side);
        for a in 0..side {
            for b in a..side {
                let v = self.sums[a * side + b] / n;
                mat[(a, b)] = v;
                mat[(b, a)] = v;
            }
        }
        StatisticMatrix::new(mat)
    }
}

#[inline]
fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}
