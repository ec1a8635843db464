//! Seeded random linear sketching operators on statistic spaces.
//!
//! An operator is fully determined by `(kind, seed, m, ambient)`: projection
//! vectors are drawn from a counter-based ChaCha generator with one stream
//! per projection index, so regeneration is bit-identical and independent of
//! batch order. Entries are i.i.d. Gaussian with variance `1/√m`.
//!
//! Two kinds are provided:
//! * `DenseGaussianTensor`: dense projections of the vectorized fourth-order
//!   tensor, `y_i = ⟨a_i, vec(Σ)⟩` with `a_i ∈ ℝ^{d⁴}`;
//! * `RankOneMatrix`: rank-one probes of a symmetric matrix,
//!   `y_i = a_iᵀ Σ a_i = trace(a_i a_iᵀ Σ)` with `a_i ∈ ℝ^D`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::statistics::{
    veronese_dim, veronese_embed_with, veronese_exponents, DataBatch, Whitener,
};
use crate::tensor::Tensor4;

/// The measurement family of a sketch operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    DenseGaussianTensor,
    RankOneMatrix,
}

impl OperatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OperatorKind::DenseGaussianTensor => "dense-gaussian-tensor",
            OperatorKind::RankOneMatrix => "rank-one-matrix",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "dense-gaussian-tensor" => Ok(OperatorKind::DenseGaussianTensor),
            "rank-one-matrix" => Ok(OperatorKind::RankOneMatrix),
            other => Err(Error::Format(format!("unknown operator kind `{other}`"))),
        }
    }
}

/// Everything needed to regenerate an operator, and to check that a sketch
/// and a decoder agree on which operator produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OperatorFingerprint {
    pub kind: OperatorKind,
    pub seed: u64,
    pub m: usize,
    pub ambient: usize,
}

/// A seeded random linear map from a statistic space to `ℝ^m`.
#[derive(Debug, Clone)]
pub struct SketchOperator {
    fingerprint: OperatorFingerprint,
}

/// An `m`-dimensional sketch together with the fingerprint of the operator
/// that produced it. `n_samples` is the number of samples behind an
/// empirical sketch, or 0 for the sketch of an exactly known statistic.
#[derive(Debug, Clone)]
pub struct SketchVector {
    pub values: Vec<f64>,
    pub fingerprint: OperatorFingerprint,
    pub n_samples: u64,
}

impl SketchVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl SketchOperator {
    pub fn new(kind: OperatorKind, seed: u64, m: usize, ambient: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidSize("sketch length m must be ≥ 1".into()));
        }
        if ambient == 0 {
            return Err(Error::InvalidSize("ambient dimension must be ≥ 1".into()));
        }
        if kind == OperatorKind::DenseGaussianTensor {
            // projections live in ℝ^{d⁴}; keep the dense size sane
            let len = ambient
                .checked_pow(4)
                .ok_or_else(|| Error::Overflow(format!("{ambient}^4")))?;
            if len > (1usize << 32) {
                return Err(Error::InvalidSize(format!(
                    "dense tensor projections of length {len} are beyond desk scale"
                )));
            }
        }
        Ok(SketchOperator {
            fingerprint: OperatorFingerprint {
                kind,
                seed,
                m,
                ambient,
            },
        })
    }

    pub fn from_fingerprint(fp: OperatorFingerprint) -> Result<Self> {
        Self::new(fp.kind, fp.seed, fp.m, fp.ambient)
    }

    pub fn fingerprint(&self) -> OperatorFingerprint {
        self.fingerprint
    }

    pub fn kind(&self) -> OperatorKind {
        self.fingerprint.kind
    }

    pub fn m(&self) -> usize {
        self.fingerprint.m
    }

    pub fn ambient(&self) -> usize {
        self.fingerprint.ambient
    }

    /// Length of one projection vector.
    pub fn projection_len(&self) -> usize {
        match self.fingerprint.kind {
            OperatorKind::DenseGaussianTensor => self.fingerprint.ambient.pow(4),
            OperatorKind::RankOneMatrix => self.fingerprint.ambient,
        }
    }

    /// Dimension of the statistic space the measurements can distinguish:
    /// the full tensor space for dense projections, the symmetric matrices
    /// for rank-one probes (which are blind to the antisymmetric part).
    pub fn statistic_dim(&self) -> usize {
        match self.fingerprint.kind {
            OperatorKind::DenseGaussianTensor => self.fingerprint.ambient.pow(4),
            OperatorKind::RankOneMatrix => {
                self.fingerprint.ambient * (self.fingerprint.ambient + 1) / 2
            }
        }
    }

    /// Regenerates projection vector `i`. Entries are i.i.d. `N(0, 1/√m)`.
    pub fn projection(&self, i: usize) -> Vec<f64> {
        assert!(i < self.fingerprint.m, "projection index out of range");
        let mut rng = ChaCha12Rng::seed_from_u64(self.fingerprint.seed);
        rng.set_stream(i as u64);
        let scale = (self.fingerprint.m as f64).powf(-0.25);
        let len = self.projection_len();
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let z: f64 = StandardNormal.sample(&mut rng);
            out.push(z * scale);
        }
        out
    }

    /// All projections stacked as the rows of an `m × projection_len` matrix.
    pub fn projection_matrix(&self) -> DMatrix<f64> {
        let m = self.fingerprint.m;
        let len = self.projection_len();
        let mut a = DMatrix::zeros(m, len);
        for i in 0..m {
            let row = self.projection(i);
            for (j, v) in row.iter().enumerate() {
                a[(i, j)] = *v;
            }
        }
        a
    }

    /// `y_i = ⟨a_i, vec(s)⟩` for the dense tensor kind.
    pub fn apply_tensor(&self, s: &Tensor4) -> Result<SketchVector> {
        if self.fingerprint.kind != OperatorKind::DenseGaussianTensor {
            return Err(Error::FingerprintMismatch(
                "tensor statistic into a rank-one matrix operator".into(),
            ));
        }
        if s.dim() != self.fingerprint.ambient {
            return Err(Error::ShapeMismatch(format!(
                "tensor dim {} vs operator ambient {}",
                s.dim(),
                self.fingerprint.ambient
            )));
        }
        let flat = s.as_slice();
        let mut values = Vec::with_capacity(self.fingerprint.m);
        for i in 0..self.fingerprint.m {
            let a = self.projection(i);
            values.push(dot(&a, flat));
        }
        Ok(SketchVector {
            values,
            fingerprint: self.fingerprint,
            n_samples: 0,
        })
    }

    /// `y_i = a_iᵀ Σ a_i` for the rank-one kind.
    pub fn apply_matrix(&self, sigma: &DMatrix<f64>) -> Result<SketchVector> {
        if self.fingerprint.kind != OperatorKind::RankOneMatrix {
            return Err(Error::FingerprintMismatch(
                "matrix statistic into a dense tensor operator".into(),
            ));
        }
        let dim = self.fingerprint.ambient;
        if sigma.nrows() != dim || sigma.ncols() != dim {
            return Err(Error::ShapeMismatch(format!(
                "matrix {}x{} vs operator ambient {}",
                sigma.nrows(),
                sigma.ncols(),
                dim
            )));
        }
        let mut values = Vec::with_capacity(self.fingerprint.m);
        for i in 0..self.fingerprint.m {
            let a = DVector::from_vec(self.projection(i));
            values.push((sigma * &a).dot(&a));
        }
        Ok(SketchVector {
            values,
            fingerprint: self.fingerprint,
            n_samples: 0,
        })
    }

    /// Adjoint for the tensor kind: `Σ_i y_i · reshape(a_i)`.
    pub fn adjoint_tensor(&self, y: &[f64]) -> Result<Tensor4> {
        if self.fingerprint.kind != OperatorKind::DenseGaussianTensor {
            return Err(Error::FingerprintMismatch(
                "tensor adjoint of a rank-one matrix operator".into(),
            ));
        }
        if y.len() != self.fingerprint.m {
            return Err(Error::LengthMismatch {
                expected: self.fingerprint.m,
                actual: y.len(),
            });
        }
        let d = self.fingerprint.ambient;
        let mut out = Tensor4::zeros(d);
        let flat = out.as_mut_slice();
        for (i, &w) in y.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let a = self.projection(i);
            for (dst, src) in flat.iter_mut().zip(&a) {
                *dst += w * src;
            }
        }
        Ok(out)
    }

    /// Adjoint for the rank-one kind: `Σ_i y_i · a_i a_iᵀ`.
    pub fn adjoint_matrix(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        if self.fingerprint.kind != OperatorKind::RankOneMatrix {
            return Err(Error::FingerprintMismatch(
                "matrix adjoint of a dense tensor operator".into(),
            ));
        }
        if y.len() != self.fingerprint.m {
            return Err(Error::LengthMismatch {
                expected: self.fingerprint.m,
                actual: y.len(),
            });
        }
        let dim = self.fingerprint.ambient;
        let mut out = DMatrix::zeros(dim, dim);
        for (i, &w) in y.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let a = self.projection(i);
            for r in 0..dim {
                let wr = w * a[r];
                for c in 0..dim {
                    out[(r, c)] += wr * a[c];
                }
            }
        }
        Ok(out)
    }

    /// The sketch of the Gaussian moment baseline
    /// `G_{ijkl} = δ_ij δ_kl + δ_ik δ_jl + δ_il δ_jk`, subtracted from
    /// streaming fourth-moment sketches to turn them into cumulant sketches.
    pub fn gaussian_baseline(&self) -> Result<Vec<f64>> {
        if self.fingerprint.kind != OperatorKind::DenseGaussianTensor {
            return Err(Error::FingerprintMismatch(
                "gaussian baseline of a rank-one matrix operator".into(),
            ));
        }
        let d = self.fingerprint.ambient;
        let mut baseline = Vec::with_capacity(self.fingerprint.m);
        for i in 0..self.fingerprint.m {
            let a = self.projection(i);
            let idx = |p: usize, q: usize, r: usize, s: usize| ((p * d + q) * d + r) * d + s;
            let mut acc = 0.0;
            for p in 0..d {
                for q in 0..d {
                    acc += a[idx(p, p, q, q)] + a[idx(p, q, p, q)] + a[idx(p, q, q, p)];
                }
            }
            baseline.push(acc);
        }
        Ok(baseline)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Which statistic a data stream is sketched into.
#[derive(Debug, Clone)]
pub enum StreamModel<'a> {
    /// Fourth-order cumulant of whitened data (tensor-kind operator).
    Ica(&'a Whitener),
    /// Correlation of Veronese embeddings of the given degree (rank-one kind).
    Gpca { degree: usize },
    /// Second-moment matrix of the raw data (rank-one kind).
    Pca,
}

/// Sketches a stream of batches directly, without materializing the
/// statistic. The result equals `apply(op, finalize(accumulate(stream)))` up
/// to floating-point reassociation.
pub fn sketch_stream<'a, I>(
    op: &SketchOperator,
    batches: I,
    model: &StreamModel<'_>,
) -> Result<SketchVector>
where
    I: IntoIterator<Item = &'a DataBatch>,
{
    match model {
        StreamModel::Ica(whitener) => sketch_stream_ica(op, batches, whitener),
        StreamModel::Gpca { degree } => sketch_stream_embedded(op, batches, Some(*degree)),
        StreamModel::Pca => sketch_stream_embedded(op, batches, None),
    }
}

fn sketch_stream_ica<'a, I>(
    op: &SketchOperator,
    batches: I,
    whitener: &Whitener,
) -> Result<SketchVector>
where
    I: IntoIterator<Item = &'a DataBatch>,
{
    if op.kind() != OperatorKind::DenseGaussianTensor {
        return Err(Error::FingerprintMismatch(
            "ica streams need a dense-gaussian-tensor operator".into(),
        ));
    }
    let d = op.ambient();
    if whitener.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: format!("d={d}"),
            actual: format!("whitener d={}", whitener.dim()),
        });
    }
    let proj = op.projection_matrix(); // m × d⁴
    let d2 = d * d;
    let block = 128usize;
    let mut v_block = DMatrix::zeros(d2 * d2, block);
    let mut sums = DVector::<f64>::zeros(op.m());
    let mut u = vec![0.0; d2];
    let mut n_total: u64 = 0;
    for batch in batches {
        let white = whitener.apply(batch)?;
        let n = white.n_samples();
        let mut x = vec![0.0; d];
        let mut filled = 0usize;
        for s in 0..n {
            white.sample_into(s, &mut x);
            for a in 0..d {
                for b in 0..d {
                    u[a * d + b] = x[a] * x[b];
                }
            }
            for a in 0..d2 {
                for b in 0..d2 {
                    v_block[(a * d2 + b, filled)] = u[a] * u[b];
                }
            }
            filled += 1;
            if filled == block {
                let partial = &proj * v_block.columns(0, filled);
                for c in 0..filled {
                    sums += partial.column(c);
                }
                filled = 0;
            }
        }
        if filled > 0 {
            let partial = &proj * v_block.columns(0, filled);
            for c in 0..filled {
                sums += partial.column(c);
            }
        }
        n_total += n as u64;
    }
    if n_total == 0 {
        return Err(Error::EmptyAccumulator);
    }
    let baseline = op.gaussian_baseline()?;
    let values: Vec<f64> = sums
        .iter()
        .zip(&baseline)
        .map(|(s, b)| s / n_total as f64 - b)
        .collect();
    Ok(SketchVector {
        values,
        fingerprint: op.fingerprint(),
        n_samples: n_total,
    })
}

fn sketch_stream_embedded<'a, I>(
    op: &SketchOperator,
    batches: I,
    degree: Option<usize>,
) -> Result<SketchVector>
where
    I: IntoIterator<Item = &'a DataBatch>,
{
    if op.kind() != OperatorKind::RankOneMatrix {
        return Err(Error::FingerprintMismatch(
            "gpca/pca streams need a rank-one-matrix operator".into(),
        ));
    }
    let embedded = op.ambient();
    let proj = op.projection_matrix(); // m × D
    let mut sums = DVector::<f64>::zeros(op.m());
    let mut n_total: u64 = 0;
    let mut exps: Option<Vec<Vec<u32>>> = None;
    let mut v = vec![0.0; embedded];
    for batch in batches {
        let d = batch.dim();
        match degree {
            Some(n) => {
                let want = veronese_dim(n, d)?;
                if want != embedded {
                    return Err(Error::ShapeMismatch(format!(
                        "degree-{n} embedding of d={d} has length {want}, operator ambient is {embedded}"
                    )));
                }
                if exps.is_none() {
                    exps = Some(veronese_exponents(n, d));
                }
            }
            None => {
                if d != embedded {
                    return Err(Error::ShapeMismatch(format!(
                        "data dim {d} vs operator ambient {embedded}"
                    )));
                }
            }
        }
        let mut x = vec![0.0; d];
        for s in 0..batch.n_samples() {
            batch.sample_into(s, &mut x);
            let point: &[f64] = match (&exps, degree) {
                (Some(table), Some(_)) => {
                    veronese_embed_with(table, &x, &mut v);
                    &v
                }
                _ => &x,
            };
            for i in 0..op.m() {
                let mut acc = 0.0;
                for (j, &pj) in point.iter().enumerate() {
                    acc += proj[(i, j)] * pj;
                }
                sums[i] += acc * acc;
            }
        }
        n_total += batch.n_samples() as u64;
    }
    if n_total == 0 {
        return Err(Error::EmptyAccumulator);
    }
    let values: Vec<f64> = sums.iter().map(|s| s / n_total as f64).collect();
    Ok(SketchVector {
        values,
        fingerprint: op.fingerprint(),
        n_samples: n_total,
    })
}

/// Combines empirical sketches of disjoint streams by their sample-weighted
/// average, which is exactly the sketch of the concatenated stream.
pub fn merge_sketches(a: &SketchVector, b: &SketchVector) -> Result<SketchVector> {
    if a.fingerprint != b.fingerprint {
        return Err(Error::FingerprintMismatch(format!(
            "{:?} vs {:?}",
            a.fingerprint, b.fingerprint
        )));
    }
    if a.n_samples == 0 || b.n_samples == 0 {
        return Err(Error::InvalidArgument(
            "weighted sketch merge needs empirical sketches with sample counts".into(),
        ));
    }
    let total = a.n_samples + b.n_samples;
    let wa = a.n_samples as f64 / total as f64;
    let wb = b.n_samples as f64 / total as f64;
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| wa * x + wb * y)
        .collect();
    Ok(SketchVector {
        values,
        fingerprint: a.fingerprint,
        n_samples: total,
    })
}
