//! Compression analyses: when is the sketch smaller than the statistic, and
//! when is it smaller than the data.
//!
//! The hidden constants in the sketch-size laws (`m ∝ d²` for the tensor
//! route, `m ∝ D·R` for the rank-one route) are not derivable analytically
//! here; [`estimate_constant`] measures them by locating the empirical
//! success/failure transition of the decoders, and every report records
//! whether its constant was assumed or estimated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use nalgebra::{DMatrix, DVector};

use crate::decode::{decode_ica, decode_low_rank, DecodeOptions};
use crate::decode::orthogonal::random_orthogonal;
use crate::error::{Error, Result};
use crate::sketch::{OperatorKind, SketchOperator};
use crate::statistics::veronese_dim;
use crate::tensor::Tensor4;

/// Where a plotted constant came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Assumed,
    Estimated,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Assumed => "assumed",
            Provenance::Estimated => "estimated",
        }
    }
}

/// Which pipeline a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalysisModel {
    Ica,
    Gpca,
}

impl AnalysisModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            AnalysisModel::Ica => "ica",
            AnalysisModel::Gpca => "gpca",
        }
    }
}

/// One grid cell of a compression report.
#[derive(Debug, Clone)]
pub struct CompressionCell {
    /// Number of subspaces (embedding degree); absent for the ICA curve.
    pub n: Option<u64>,
    pub d: u64,
    /// Dimension of the statistic space (d⁴, or the D×D side).
    pub statistic_dim: Option<u128>,
    /// Assumed rank of the matrix statistic, when applicable.
    pub rank: Option<u64>,
    /// Sketch length.
    pub m: Option<u128>,
    /// Dataset size `N·d`, when the ratio is against the data.
    pub data_size: Option<u128>,
    /// `m / d⁴` for the ICA curve, `m / (N·d)` for the phase diagram.
    pub ratio: Option<f64>,
    pub compressed: bool,
    /// True when the embedding dimension exceeded the representable range;
    /// such cells are reported as not compressible.
    pub overflow: bool,
}

/// A full compression analysis.
#[derive(Debug, Clone)]
pub struct CompressionReport {
    pub model: AnalysisModel,
    pub constant: f64,
    pub provenance: Provenance,
    /// Fixed dataset length for phase diagrams.
    pub n_data: Option<u64>,
    pub rank_fraction: Option<f64>,
    pub cells: Vec<CompressionCell>,
}

impl CompressionReport {
    /// One row per cell, suitable for external plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# model={} constant={} provenance={}",
            self.model.as_str(),
            self.constant,
            self.provenance.as_str()
        ));
        if let Some(n) = self.n_data {
            out.push_str(&format!(" data_length={n}"));
        }
        if let Some(rf) = self.rank_fraction {
            out.push_str(&format!(" rank_fraction={rf}"));
        }
        out.push('\n');
        out.push_str("n,d,statistic_dim,rank,m,data_size,ratio,compressed,overflow\n");
        for cell in &self.cells {
            let opt_u = |v: &Option<u64>| v.map(|x| x.to_string()).unwrap_or_default();
            let opt_u128 = |v: &Option<u128>| v.map(|x| x.to_string()).unwrap_or_default();
            let opt_f = |v: &Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                opt_u(&cell.n),
                cell.d,
                opt_u128(&cell.statistic_dim),
                opt_u(&cell.rank),
                opt_u128(&cell.m),
                opt_u128(&cell.data_size),
                opt_f(&cell.ratio),
                cell.compressed,
                cell.overflow
            ));
        }
        out
    }
}

/// Sketch-to-statistic compression of the tensor route: for each `d`,
/// `m = ⌈C·d²⌉` against the d⁴ statistic.
pub fn ica_compression_curve(
    d_range: impl IntoIterator<Item = usize>,
    c: f64,
    provenance: Provenance,
) -> Result<CompressionReport> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument("constant C must be positive".into()));
    }
    let mut cells = Vec::new();
    for d in d_range {
        if d == 0 {
            return Err(Error::InvalidSize("d must be ≥ 1".into()));
        }
        let statistic = (d as u128).pow(4);
        let m = (c * (d * d) as f64).ceil() as u128;
        let ratio = m as f64 / statistic as f64;
        cells.push(CompressionCell {
            n: None,
            d: d as u64,
            statistic_dim: Some(statistic),
            rank: None,
            m: Some(m),
            data_size: None,
            ratio: Some(ratio),
            compressed: ratio < 1.0,
            overflow: false,
        });
    }
    Ok(CompressionReport {
        model: AnalysisModel::Ica,
        constant: c,
        provenance,
        n_data: None,
        rank_fraction: None,
        cells,
    })
}

/// Sketch-to-data phase diagram of the rank-one route: for each `(n, d)`
/// cell, `D = dim of the degree-n embedding`, `R = max(1, ⌈ρ·D⌉)`,
/// `m = ⌈C·D·R⌉`, compressed exactly when `m < N·d`.
pub fn gpca_phase_diagram(
    n_range: impl IntoIterator<Item = usize> + Clone,
    d_range: impl IntoIterator<Item = usize> + Clone,
    n_data: u64,
    c: f64,
    rank_fraction: f64,
    provenance: Provenance,
) -> Result<CompressionReport> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument("constant C must be positive".into()));
    }
    if !(rank_fraction > 0.0 && rank_fraction <= 1.0) {
        return Err(Error::InvalidArgument(
            "rank fraction must lie in (0, 1]".into(),
        ));
    }
    if n_data == 0 {
        return Err(Error::InvalidSize("data length must be ≥ 1".into()));
    }
    let mut cells = Vec::new();
    for n in n_range {
        for d in d_range.clone() {
            if n == 0 || d == 0 {
                return Err(Error::InvalidSize("n and d must be ≥ 1".into()));
            }
            let data_size = n_data as u128 * d as u128;
            match veronese_dim(n, d) {
                Ok(dim) => {
                    let rank = ((rank_fraction * dim as f64).ceil() as u64).max(1);
                    let m_float = c * dim as f64 * rank as f64;
                    if !m_float.is_finite() || m_float >= u128::MAX as f64 {
                        cells.push(overflow_cell(n, d, data_size));
                        continue;
                    }
                    let m = m_float.ceil() as u128;
                    let ratio = m as f64 / data_size as f64;
                    cells.push(CompressionCell {
                        n: Some(n as u64),
                        d: d as u64,
                        statistic_dim: Some(dim as u128),
                        rank: Some(rank),
                        m: Some(m),
                        data_size: Some(data_size),
                        ratio: Some(ratio),
                        compressed: m < data_size,
                        overflow: false,
                    });
                }
                Err(Error::Overflow(_)) => {
                    cells.push(overflow_cell(n, d, data_size));
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(CompressionReport {
        model: AnalysisModel::Gpca,
        constant: c,
        provenance,
        n_data: Some(n_data),
        rank_fraction: Some(rank_fraction),
        cells,
    })
}

fn overflow_cell(n: usize, d: usize, data_size: u128) -> CompressionCell {
    CompressionCell {
        n: Some(n as u64),
        d: d as u64,
        statistic_dim: None,
        rank: None,
        m: None,
        data_size: Some(data_size),
        ratio: None,
        compressed: false,
        overflow: true,
    }
}

/// The decoding problems whose sketch-size constants can be measured.
#[derive(Debug, Clone)]
pub enum EstimateProblem {
    /// Tensor route at the given ambient dimensions; the size law is `d²`.
    Ica { dims: Vec<usize> },
    /// Rank-one route at the given `(D, R)` pairs; the size law is `D·R`.
    Gpca { sizes: Vec<(usize, usize)> },
}

/// Transition data for one problem size.
#[derive(Debug, Clone)]
pub struct SizeTransition {
    /// The size-law value (`d²` or `D·R`).
    pub size_param: f64,
    /// Smallest sketch length at which at least 80% of trials succeeded.
    pub m_star: usize,
    /// Upper end of the search (the full statistic dimension).
    pub full_dim: usize,
}

/// A fitted sketch-size constant.
#[derive(Debug, Clone)]
pub struct ConstantEstimate {
    pub model: AnalysisModel,
    /// Least-squares slope of `m*` against the size law, through the origin.
    pub c: f64,
    /// Coefficient of determination of that fit.
    pub r_squared: f64,
    pub transitions: Vec<SizeTransition>,
}

/// Locates the success/failure transition of the decoder at each size by
/// binary search on `m`, then fits `m* = C · size_param`.
///
/// A trial succeeds when the decoded statistic is within `target_error`
/// relative error of a seeded ground truth; a sketch length succeeds when at
/// least 80% of `trials` trials do. Fails with `NoTransition` when even the
/// full statistic dimension does not succeed, which signals a solver bug
/// rather than a compression limit.
pub fn estimate_constant(
    problem: &EstimateProblem,
    target_error: f64,
    trials: usize,
    seed: u64,
) -> Result<ConstantEstimate> {
    if !(target_error > 0.0) {
        return Err(Error::InvalidArgument("target error must be positive".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    type TrialFn = Box<dyn Fn(usize, u64) -> f64 + Sync>;
    let (model, sizes): (AnalysisModel, Vec<(f64, usize, TrialFn)>) =
        match problem {
            EstimateProblem::Ica { dims } => {
                let sizes = dims
                    .iter()
                    .map(|&d| {
                        let full = d * d * d * d;
                        let trial: TrialFn =
                            Box::new(move |m, trial_seed| ica_trial_error(d, m, trial_seed));
                        ((d * d) as f64, full, trial)
                    })
                    .collect();
                (AnalysisModel::Ica, sizes)
            }
            EstimateProblem::Gpca { sizes } => {
                let sizes = sizes
                    .iter()
                    .map(|&(dim, rank)| {
                        let full = dim * (dim + 1) / 2;
                        let trial: TrialFn =
                            Box::new(move |m, trial_seed| {
                                gpca_trial_error(dim, rank, m, trial_seed)
                            });
                        ((dim * rank) as f64, full, trial)
                    })
                    .collect();
                (AnalysisModel::Gpca, sizes)
            }
        };
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("no sizes to measure".into()));
    }

    let mut transitions = Vec::with_capacity(sizes.len());
    for (size_idx, (size_param, full_dim, trial)) in sizes.iter().enumerate() {
        let succeeds = |m: usize| -> bool {
            let hits: usize = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let trial_seed = seed
                        .wrapping_mul(0x100000001b3)
                        .wrapping_add((size_idx as u64) << 40)
                        .wrapping_add((m as u64) << 20)
                        .wrapping_add(t as u64);
                    let err = trial(m, trial_seed);
                    usize::from(err <= target_error)
                })
                .sum();
            hits * 5 >= trials * 4 // ≥ 80%
        };
        if !succeeds(*full_dim) {
            return Err(Error::NoTransition(format!(
                "size {size_param}: even m = {full_dim} (the full statistic dimension) fails"
            )));
        }
        let mut lo = 1usize;
        let mut hi = *full_dim;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if succeeds(mid) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        transitions.push(SizeTransition {
            size_param: *size_param,
            m_star: lo,
            full_dim: *full_dim,
        });
    }

    // least squares through the origin, with R² against the mean
    let sxy: f64 = transitions
        .iter()
        .map(|t| t.size_param * t.m_star as f64)
        .sum();
    let sxx: f64 = transitions
        .iter()
        .map(|t| t.size_param * t.size_param)
        .sum();
    let c = sxy / sxx;
    let mean_m: f64 =
        transitions.iter().map(|t| t.m_star as f64).sum::<f64>() / transitions.len() as f64;
    let ss_res: f64 = transitions
        .iter()
        .map(|t| {
            let r = t.m_star as f64 - c * t.size_param;
            r * r
        })
        .sum();
    let ss_tot: f64 = transitions
        .iter()
        .map(|t| {
            let r = t.m_star as f64 - mean_m;
            r * r
        })
        .sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Ok(ConstantEstimate {
        model,
        c,
        r_squared,
        transitions,
    })
}

/// Relative recovery error of one seeded rank-one-route trial.
fn gpca_trial_error(dim: usize, rank: usize, m: usize, trial_seed: u64) -> f64 {
    let mut rng = ChaCha12Rng::seed_from_u64(trial_seed);
    let b: DMatrix<f64> = DMatrix::from_fn(dim, rank, |_, _| StandardNormal.sample(&mut rng));
    let mut truth = &b * b.transpose();
    let norm = truth.norm();
    truth /= norm;
    let op_seed = rng.random::<u64>();
    let op = match SketchOperator::new(OperatorKind::RankOneMatrix, op_seed, m, dim) {
        Ok(op) => op,
        Err(_) => return f64::INFINITY,
    };
    let y = match op.apply_matrix(&truth) {
        Ok(y) => y,
        Err(_) => return f64::INFINITY,
    };
    let opts = DecodeOptions {
        max_iters: 2500,
        tol: 1e-7,
        restarts: 1,
        seed: rng.random::<u64>(),
        ..DecodeOptions::default()
    };
    match decode_low_rank(&op, &y, &opts) {
        Ok(out) => (out.matrix.matrix() - &truth).norm() / truth.norm(),
        Err(_) => f64::INFINITY,
    }
}

/// Relative recovery error of one seeded tensor-route trial.
fn ica_trial_error(d: usize, m: usize, trial_seed: u64) -> f64 {
    let palette = [-1.2, 3.0, -2.0];
    let mut rng = ChaCha12Rng::seed_from_u64(trial_seed);
    let q0 = random_orthogonal(d, &mut rng);
    let kappa = DVector::from_iterator(d, (0..d).map(|i| palette[i % palette.len()]));
    let truth = match Tensor4::from_rank_one_sum(&q0, &kappa) {
        Ok(t) => t,
        Err(_) => return f64::INFINITY,
    };
    let op_seed = rng.random::<u64>();
    let op = match SketchOperator::new(OperatorKind::DenseGaussianTensor, op_seed, m, d) {
        Ok(op) => op,
        Err(_) => return f64::INFINITY,
    };
    let y = match op.apply_tensor(&truth) {
        Ok(y) => y,
        Err(_) => return f64::INFINITY,
    };
    // the decoder gets its own derived seed so its restarts are independent
    // of the planted instance
    let opts = DecodeOptions {
        max_iters: 500,
        tol: 1e-8,
        restarts: 6,
        seed: rng.random::<u64>(),
        ..DecodeOptions::default()
    };
    match decode_ica(&op, &y, &opts) {
        Ok(out) => match out.tensor.to_tensor() {
            Ok(rebuilt) => match rebuilt.sub(&truth) {
                Ok(diff) => diff.norm() / truth.norm(),
                Err(_) => f64::INFINITY,
            },
            Err(_) => f64::INFINITY,
        },
        Err(_) => f64::INFINITY,
    }
}
