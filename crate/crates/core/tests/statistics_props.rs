//! Statistical correctness of the moment pipeline: closed-form cumulants,
//! law-of-large-numbers decay, equivariance, mergeability.

use cskl_core::statistics::{
    empirical_covariance, fit_whitener, AccumulatorKind, DataBatch, MomentAccumulator,
};
use cskl_core::synth::{gen_gaussian, gen_ica, SourceKind};
use cskl_core::tensor::Tensor4;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn cumulant_of(data: &DataBatch) -> cskl_core::statistics::CumulantTensor {
    let mut acc = MomentAccumulator::new(AccumulatorKind::Cumulant4 { dim: data.dim() }).unwrap();
    acc.accumulate(data).unwrap();
    acc.finalize_cumulant().unwrap()
}

#[test]
fn gaussian_cumulants_vanish() {
    let data = gen_gaussian(42, 3, 1_000_000).unwrap();
    let white = fit_whitener(&data).unwrap().apply(&data).unwrap();
    let cum = cumulant_of(&white);
    let worst = cum
        .tensor()
        .as_slice()
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    assert!(worst < 0.05, "largest gaussian cumulant entry {worst}");
}

#[test]
fn uniform_sources_have_negative_diagonal_kurtosis() {
    let ground = gen_ica(7, 2, 1_000_000, &[SourceKind::Uniform], None).unwrap();
    let white = fit_whitener(&ground.data)
        .unwrap()
        .apply(&ground.data)
        .unwrap();
    let cum = cumulant_of(&white);
    // unmix with the true basis: the whitened mixing is orthogonal, so the
    // cumulant in source coordinates must be diag(−1.2)
    let t = cum
        .tensor()
        .transform_all_modes(&ground.mixing)
        .unwrap();
    for i in 0..2 {
        let diag = t.get(i, i, i, i);
        assert!(
            (diag + 1.2).abs() < 0.05,
            "diagonal cumulant {diag} should be near −1.2"
        );
    }
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    if i == j && j == k && k == l {
                        continue;
                    }
                    let v = t.get(i, j, k, l);
                    assert!(v.abs() < 0.05, "cross cumulant [{i}{j}{k}{l}] = {v}");
                }
            }
        }
    }
}

#[test]
fn laplace_sources_have_positive_diagonal_kurtosis() {
    let ground = gen_ica(19, 2, 1_000_000, &[SourceKind::Laplace], None).unwrap();
    let white = fit_whitener(&ground.data)
        .unwrap()
        .apply(&ground.data)
        .unwrap();
    let cum = cumulant_of(&white);
    let t = cum.tensor().transform_all_modes(&ground.mixing).unwrap();
    for i in 0..2 {
        let diag = t.get(i, i, i, i);
        assert!((diag - 3.0).abs() < 0.2, "laplace diagonal {diag}");
    }
}

#[test]
fn rademacher_sources_have_kurtosis_minus_two() {
    let ground = gen_ica(23, 2, 400_000, &[SourceKind::Rademacher], None).unwrap();
    let white = fit_whitener(&ground.data)
        .unwrap()
        .apply(&ground.data)
        .unwrap();
    let cum = cumulant_of(&white);
    let t = cum.tensor().transform_all_modes(&ground.mixing).unwrap();
    for i in 0..2 {
        let diag = t.get(i, i, i, i);
        assert!((diag + 2.0).abs() < 0.05, "rademacher diagonal {diag}");
    }
}

#[test]
fn cumulant_of_mixed_data_transforms_multilinearly() {
    // exact sample-level identity: the raw moment tensor of x = Q s is the
    // moment tensor of s pushed through Q in every mode, and the Gaussian
    // baseline is orthogonally invariant
    let d = 3;
    let ground = gen_ica(11, d, 50_000, &[], None).unwrap();
    let mixed_cum = cumulant_of(&ground.data);

    // unmix the same samples exactly
    let qt = ground.mixing.transpose();
    let mut unmixed_rows = Vec::with_capacity(ground.data.n_samples());
    for i in 0..ground.data.n_samples() {
        let x = ground.data.sample(i);
        let s = &qt * x;
        unmixed_rows.push(s.iter().copied().collect::<Vec<f64>>());
    }
    let sources = DataBatch::from_rows(&unmixed_rows).unwrap();
    let source_cum = cumulant_of(&sources);

    let back = mixed_cum
        .tensor()
        .transform_all_modes(&ground.mixing)
        .unwrap();
    let diff = back.sub(source_cum.tensor()).unwrap();
    let rel = diff.norm() / source_cum.tensor().norm().max(1e-12);
    assert!(rel < 1e-10, "multilinearity violated: relative error {rel}");
}

#[test]
fn sampled_cumulant_approaches_the_model_tensor() {
    let d = 3;
    let n = 200_000usize;
    let ground = gen_ica(31, d, n, &[SourceKind::Uniform], None).unwrap();
    let cum = cumulant_of(&ground.data);
    let model = Tensor4::from_rank_one_sum(&ground.mixing, &ground.true_kappa).unwrap();
    let tol = 5.0 / (n as f64).sqrt();
    let mut worst = 0.0f64;
    for (a, b) in cum.tensor().as_slice().iter().zip(model.as_slice()) {
        worst = worst.max((a - b).abs());
    }
    assert!(
        worst < tol,
        "largest entry deviation {worst} vs Monte Carlo tolerance {tol}"
    );
}

#[test]
fn estimation_error_decays_as_inverse_sqrt_n() {
    // covariance statistic of standard Gaussian data: error ‖Σ̂ − I‖ should
    // shrink as N^(−1/2); fit the log-log slope over a dyadic grid
    let d = 3;
    let sizes = [1000usize, 4000, 16_000, 64_000];
    let reps = 20;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (si, &n) in sizes.iter().enumerate() {
        let mut log_sum = 0.0;
        for rep in 0..reps {
            let seed = 1000 + (si * reps + rep) as u64;
            let data = gen_gaussian(seed, d, n).unwrap();
            let mut acc =
                MomentAccumulator::new(AccumulatorKind::Covariance { dim: d }).unwrap();
            acc.accumulate(&data).unwrap();
            let stat = acc.finalize_correlation().unwrap();
            let err = (stat.matrix() - DMatrix::<f64>::identity(d, d)).norm();
            log_sum += err.ln();
        }
        xs.push((n as f64).ln());
        ys.push(log_sum / reps as f64);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let slope = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / xs.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    assert!(
        (slope + 0.5).abs() <= 0.15,
        "law-of-large-numbers slope {slope}, expected −0.5 ± 0.15"
    );
}

#[test]
fn gaussian_embedded_correlation_matches_isserlis() {
    // independent oracle: fourth moments of a standard Gaussian via the
    // pair-partition formula E[x_a x_b x_c x_d] = δab δcd + δac δbd + δad δbc
    let isserlis = |a: usize, b: usize, c: usize, e: usize| -> f64 {
        let d = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
        d(a, b) * d(c, e) + d(a, c) * d(b, e) + d(a, e) * d(b, c)
    };
    // degree-2 monomials of (x₁, x₂): x₁², x₁x₂, x₂² with index pairs
    let pairs = [(0usize, 0usize), (0, 1), (1, 1)];
    let mut expected = DMatrix::zeros(3, 3);
    for (r, &(a, b)) in pairs.iter().enumerate() {
        for (c, &(x, y)) in pairs.iter().enumerate() {
            expected[(r, c)] = isserlis(a, b, x, y);
        }
    }

    let data = gen_gaussian(5, 2, 1_000_000).unwrap();
    let mut acc = MomentAccumulator::new(AccumulatorKind::VeroneseCorrelation {
        degree: 2,
        dim: 2,
    })
    .unwrap();
    acc.accumulate(&data).unwrap();
    let stat = acc.finalize_correlation().unwrap();
    let worst = (stat.matrix() - expected).amax();
    assert!(worst < 0.05, "worst embedded-moment deviation {worst}");
}

#[test]
fn whitener_mean_is_removed() {
    let mut rows = Vec::new();
    for i in 0..500 {
        let t = i as f64 * 0.01;
        rows.push(vec![3.0 + t.sin(), -7.0 + (2.0 * t).cos(), t.sin() * t.cos()]);
    }
    let data = DataBatch::from_rows(&rows).unwrap();
    let w = fit_whitener(&data).unwrap();
    let white = w.apply(&data).unwrap();
    let (mean, cov) = empirical_covariance(&white);
    assert!(mean.norm() < 1e-10);
    assert!((cov - DMatrix::<f64>::identity(3, 3)).norm() <= 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // merge-equivalence: any split of a stream finalizes like the one-shot
    #[test]
    fn merge_equals_one_shot(
        seed in 0u64..1000,
        n in 8usize..80,
        split in 1usize..7,
    ) {
        let data = gen_gaussian(seed, 2, n).unwrap();
        let split = split.min(n - 1);
        let chunks = data.chunks(split.max(n / split));

        let mut one = MomentAccumulator::new(AccumulatorKind::Cumulant4 { dim: 2 }).unwrap();
        one.accumulate(&data).unwrap();
        let direct = one.finalize_cumulant().unwrap();

        let mut parts: Vec<MomentAccumulator> = Vec::new();
        for chunk in &chunks {
            let mut acc = MomentAccumulator::new(AccumulatorKind::Cumulant4 { dim: 2 }).unwrap();
            acc.accumulate(chunk).unwrap();
            parts.push(acc);
        }
        // fold right-to-left to exercise a different association order
        let merged_acc = parts
            .into_iter()
            .rev()
            .reduce(|a, b| b.merge(&a).unwrap())
            .unwrap();
        let merged = merged_acc.finalize_cumulant().unwrap();

        let diff = direct.tensor().sub(merged.tensor()).unwrap();
        let scale = direct.tensor().norm().max(1e-12);
        prop_assert!(diff.norm() <= 1e-12 * scale.max(1.0) * 10.0,
            "merge deviates: {} at scale {}", diff.norm(), scale);
    }

    // finalized cumulants are exactly permutation symmetric
    #[test]
    fn finalized_cumulant_is_exactly_symmetric(seed in 0u64..500, n in 4usize..40) {
        let data = gen_gaussian(seed, 3, n).unwrap();
        let cum = cumulant_of(&data);
        prop_assert_eq!(cum.tensor().symmetry_error(), 0.0);
    }

    // veronese correlations of arbitrary data are valid statistics
    #[test]
    fn embedded_correlation_is_psd(seed in 0u64..500, n in 2usize..30) {
        let data = gen_gaussian(seed, 2, n).unwrap();
        let mut acc = MomentAccumulator::new(
            AccumulatorKind::VeroneseCorrelation { degree: 3, dim: 2 },
        ).unwrap();
        acc.accumulate(&data).unwrap();
        // StatisticMatrix::new re-validates symmetry and PSD-ness
        let stat = acc.finalize_correlation().unwrap();
        prop_assert!(stat.side() == 4);
    }
}

#[test]
fn whitener_matches_hand_computed_two_by_two() {
    let data = DataBatch::from_rows(&[
        vec![2.0, 0.0],
        vec![-2.0, 0.0],
        vec![0.0, 1.0],
        vec![0.0, -1.0],
    ])
    .unwrap();
    let w = fit_whitener(&data).unwrap();
    let expect = DMatrix::from_row_slice(
        2,
        2,
        &[1.0 / 2.0f64.sqrt(), 0.0, 0.0, 2.0f64.sqrt()],
    );
    assert!((w.transform() - expect).norm() < 1e-12);
    assert!(w.mean().norm() < 1e-14);
    let _ = DVector::<f64>::zeros(2);
}
