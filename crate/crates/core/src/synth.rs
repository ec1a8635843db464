//! Seed-deterministic synthetic data generators for the experiments.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::decode::orthogonal::random_orthogonal;
use crate::error::{Error, Result};
use crate::statistics::DataBatch;

/// Source density of one independent channel. All are zero-mean with unit
/// variance; the diagonal fourth cumulants are −1.2 (uniform), +3 (laplace)
/// and −2 (rademacher).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Uniform,
    Laplace,
    Rademacher,
}

impl SourceKind {
    /// Fourth cumulant of the unit-variance density.
    pub fn true_kappa(&self) -> f64 {
        match self {
            // uniform on [−√3, √3]: E[x⁴] = 9/5, κ = 9/5 − 3
            SourceKind::Uniform => -1.2,
            // laplace with 2b² = 1: E[x⁴] = 24b⁴ = 6, κ = 3
            SourceKind::Laplace => 3.0,
            // ±1: E[x⁴] = 1, κ = −2
            SourceKind::Rademacher => -2.0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SourceKind::Uniform => "uniform",
            SourceKind::Laplace => "laplace",
            SourceKind::Rademacher => "rademacher",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SourceKind::Uniform),
            "laplace" => Ok(SourceKind::Laplace),
            "rademacher" => Ok(SourceKind::Rademacher),
            other => Err(Error::InvalidArgument(format!(
                "unknown source kind `{other}`"
            ))),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            SourceKind::Uniform => {
                let u: f64 = rng.random();
                (2.0 * u - 1.0) * 3.0f64.sqrt()
            }
            SourceKind::Laplace => {
                // inverse CDF; b = 1/√2 gives unit variance
                let u: f64 = rng.random::<f64>() - 0.5;
                let b = 1.0 / 2.0f64.sqrt();
                -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            SourceKind::Rademacher => {
                if rng.random::<f64>() < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }
}

/// Mixed independent-source data: `x = Q₀ s`.
#[derive(Debug, Clone)]
pub struct IcaGround {
    pub data: DataBatch,
    pub mixing: DMatrix<f64>,
    pub true_kappa: DVector<f64>,
    pub sources: Vec<SourceKind>,
}

/// Generates `n` samples of `d` mixed independent sources. `sources` may
/// name one kind per channel or a single kind for all channels; the mixing
/// matrix is a seeded Haar-ish orthogonal draw unless supplied.
pub fn gen_ica(
    seed: u64,
    d: usize,
    n: usize,
    sources: &[SourceKind],
    mixing: Option<DMatrix<f64>>,
) -> Result<IcaGround> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidSize("need d ≥ 1 and n ≥ 1".into()));
    }
    let per_channel: Vec<SourceKind> = match sources.len() {
        0 => vec![SourceKind::Uniform; d],
        1 => vec![sources[0]; d],
        len if len == d => sources.to_vec(),
        len => {
            return Err(Error::InvalidArgument(format!(
                "{len} source kinds for {d} channels"
            )))
        }
    };
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let q0 = match mixing {
        Some(q) => {
            if q.nrows() != d || q.ncols() != d {
                return Err(Error::ShapeMismatch(format!(
                    "mixing {}x{} for d={d}",
                    q.nrows(),
                    q.ncols()
                )));
            }
            let err = crate::decode::orthogonal::orthogonality_error(&q);
            if err > 1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "mixing is not orthogonal: {err:.3e}"
                )));
            }
            q
        }
        None => random_orthogonal(d, &mut rng),
    };
    let mut samples = DMatrix::zeros(n, d);
    let mut s = DVector::zeros(d);
    for i in 0..n {
        for (c, kind) in per_channel.iter().enumerate() {
            s[c] = kind.sample(&mut rng);
        }
        let x = &q0 * &s;
        for c in 0..d {
            samples[(i, c)] = x[c];
        }
    }
    let true_kappa = DVector::from_iterator(d, per_channel.iter().map(|k| k.true_kappa()));
    Ok(IcaGround {
        data: DataBatch::new(samples)?,
        mixing: q0,
        true_kappa,
        sources: per_channel,
    })
}

/// Union-of-subspaces data with ground truth.
#[derive(Debug, Clone)]
pub struct SubspaceGround {
    pub data: DataBatch,
    pub labels: Vec<usize>,
    pub bases: Vec<DMatrix<f64>>,
    pub weights: Vec<f64>,
}

/// Generates a mixture of `dims.len()` subspaces in `ℝ^d`: each point picks
/// a component with probability `weights[i]`, draws isotropic Gaussian
/// coefficients inside a seeded random `d_i`-dimensional subspace, and adds
/// `N(0, σ²I)` ambient noise.
pub fn gen_subspaces(
    seed: u64,
    d: usize,
    n: usize,
    dims: &[usize],
    weights: Option<&[f64]>,
    noise: f64,
) -> Result<SubspaceGround> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidSize("need d ≥ 1 and n ≥ 1".into()));
    }
    if dims.is_empty() {
        return Err(Error::InvalidDims("no subspace dimensions given".into()));
    }
    if dims.iter().any(|&di| di == 0 || di >= d) {
        return Err(Error::InvalidDims(format!(
            "subspace dimensions must lie in [1, {}), got {:?}",
            d, dims
        )));
    }
    if !(noise >= 0.0) {
        return Err(Error::InvalidArgument("noise must be nonnegative".into()));
    }
    let k = dims.len();
    let weights: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != k {
                return Err(Error::InvalidDims(format!(
                    "{} weights for {k} subspaces",
                    w.len()
                )));
            }
            if w.iter().any(|&a| !(a > 0.0)) {
                return Err(Error::InvalidArgument(
                    "mixture weights must be positive".into(),
                ));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "mixture weights must sum to 1, got {total}"
                )));
            }
            w.to_vec()
        }
        None => vec![1.0 / k as f64; k],
    };
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let bases: Vec<DMatrix<f64>> = dims
        .iter()
        .map(|&di| random_orthogonal(d, &mut rng).columns(0, di).clone_owned())
        .collect();
    let mut samples = DMatrix::zeros(n, d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let u: f64 = rng.random();
        let mut pick = k - 1;
        let mut acc = 0.0;
        for (c, &w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = c;
                break;
            }
        }
        labels.push(pick);
        let di = dims[pick];
        let coeff: DVector<f64> =
            DVector::from_iterator(di, (0..di).map(|_| StandardNormal.sample(&mut rng)));
        let mut x = &bases[pick] * coeff;
        if noise > 0.0 {
            for t in 0..d {
                let z: f64 = StandardNormal.sample(&mut rng);
                x[t] += noise * z;
            }
        }
        for t in 0..d {
            samples[(i, t)] = x[t];
        }
    }
    Ok(SubspaceGround {
        data: DataBatch::new(samples)?,
        labels,
        bases,
        weights,
    })
}

/// Plain standard-Gaussian data, the null model for identifiability checks.
pub fn gen_gaussian(seed: u64, d: usize, n: usize) -> Result<DataBatch> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidSize("need d ≥ 1 and n ≥ 1".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let samples = DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng));
    DataBatch::new(samples)
}
