//! End-to-end pipelines on sampled data: generate → sketch → decode →
//! extract, scored against the ground truth.

use cskl_core::decode::{decode_ica, decode_low_rank, diagonalize_cumulant, DecodeOptions};
use cskl_core::models::{
    amari_index, clustering_error, gaussian_kurtosis_floor, gpca_cluster, gpca_polynomials,
    ica_extract, pca_extract, principal_angle,
};
use cskl_core::sketch::{sketch_stream, OperatorKind, SketchOperator, StreamModel};
use cskl_core::statistics::{
    fit_whitener, veronese_dim, AccumulatorKind, MomentAccumulator,
};
use cskl_core::synth::{gen_gaussian, gen_ica, gen_subspaces, SourceKind};

#[test]
fn compressive_ica_recovers_the_mixing() {
    // d = 3, N = 1e5 uniform sources, m = 10·d² projections
    let d = 3usize;
    let n = 100_000usize;
    let m = 10 * d * d;
    let ground = gen_ica(2024, d, n, &[SourceKind::Uniform], None).unwrap();
    let whitener = fit_whitener(&ground.data).unwrap();
    let op = SketchOperator::new(OperatorKind::DenseGaussianTensor, 5, m, d).unwrap();
    let sketch = sketch_stream(&op, [&ground.data], &StreamModel::Ica(&whitener)).unwrap();
    let opts = DecodeOptions {
        tol: 1e-3,
        max_iters: 600,
        ..DecodeOptions::default()
    };
    let decoded = decode_ica(&op, &sketch, &opts).unwrap();
    let floor = gaussian_kurtosis_floor(sketch.n_samples);
    let hyp = ica_extract(&decoded.tensor, &whitener, floor).unwrap();
    assert!(hyp.identifiable, "uniform sources must be identifiable");
    let amari = amari_index(&hyp.unmixing, &ground.mixing).unwrap();
    assert!(amari <= 0.05, "amari index {amari}");

    // each unmixing row has unit variance on the fitting data:
    // uᵀ Ĉ u = 1 because the whitening composition normalizes the scale
    let (_, cov) = cskl_core::statistics::empirical_covariance(&ground.data);
    for i in 0..d {
        let u = hyp.unmixing.row(i).transpose();
        let scale = (&cov * &u).dot(&u);
        assert!(
            (scale - 1.0).abs() <= 1e-6,
            "row {i} variance after composition: {scale}"
        );
    }
}

#[test]
fn gaussian_data_is_flagged_non_identifiable() {
    let d = 3usize;
    let n = 100_000usize;
    let data = gen_gaussian(77, d, n).unwrap();
    let whitener = fit_whitener(&data).unwrap();
    let op = SketchOperator::new(OperatorKind::DenseGaussianTensor, 6, 90, d).unwrap();
    let sketch = sketch_stream(&op, [&data], &StreamModel::Ica(&whitener)).unwrap();
    let opts = DecodeOptions {
        tol: 1e-3,
        max_iters: 400,
        restarts: 4,
        ..DecodeOptions::default()
    };
    let decoded = decode_ica(&op, &sketch, &opts).unwrap();
    let floor = gaussian_kurtosis_floor(sketch.n_samples);
    let hyp = ica_extract(&decoded.tensor, &whitener, floor).unwrap();
    assert!(
        !hyp.identifiable,
        "gaussian data produced kappa {:?} above the floor {floor}",
        hyp.kappa.as_slice()
    );
}

#[test]
fn compressive_gpca_separates_two_noisy_planes() {
    // two 2-dim subspaces in ℝ³ with σ = 0.01 ambient noise
    let d = 3usize;
    let n_points = 2000usize;
    let degree = 2usize;
    let ground = gen_subspaces(42, d, n_points, &[2, 2], None, 0.01).unwrap();
    let embedded = veronese_dim(degree, d).unwrap();

    // measured rank of the direct statistic picks the sketch size
    let mut acc = MomentAccumulator::new(AccumulatorKind::VeroneseCorrelation {
        degree,
        dim: d,
    })
    .unwrap();
    acc.accumulate(&ground.data).unwrap();
    let direct = acc.finalize_correlation().unwrap();
    let measured_rank = direct.numerical_rank(0.01);
    let m = 6 * embedded * measured_rank;

    let op = SketchOperator::new(OperatorKind::RankOneMatrix, 9, m, embedded).unwrap();
    let sketch = sketch_stream(&op, [&ground.data], &StreamModel::Gpca { degree }).unwrap();
    let opts = DecodeOptions {
        tol: 1e-6,
        ..DecodeOptions::default()
    };
    let decoded = decode_low_rank(&op, &sketch, &opts).unwrap();
    let polys = gpca_polynomials(&decoded.matrix, degree, 0.05)
        .unwrap()
        .polynomials;
    assert!(!polys.is_empty());
    let hyp = gpca_cluster(&ground.data, &polys, 2, &[2, 2]).unwrap();
    let err = clustering_error(&hyp.labels, &ground.labels).unwrap();
    assert!(err <= 0.05, "clustering error {err}");
}

#[test]
fn compressive_pca_matches_direct_subspace() {
    // rank-k second moment decoded from m = 6·k·d rank-one probes
    let d = 8usize;
    let k = 2usize;
    let ground = gen_subspaces(7, d, 4000, &[k], None, 0.0).unwrap();
    let m = 6 * k * d;
    let op = SketchOperator::new(OperatorKind::RankOneMatrix, 11, m, d).unwrap();
    let sketch = sketch_stream(&op, [&ground.data], &StreamModel::Pca).unwrap();
    let decoded = decode_low_rank(&op, &sketch, &DecodeOptions::default()).unwrap();

    let mut acc = MomentAccumulator::new(AccumulatorKind::Covariance { dim: d }).unwrap();
    acc.accumulate(&ground.data).unwrap();
    let direct = acc.finalize_correlation().unwrap();

    let from_sketch = pca_extract(&decoded.matrix, k).unwrap();
    let from_direct = pca_extract(&direct, k).unwrap();
    let angle = principal_angle(&from_sketch.basis, &from_direct.basis);
    assert!(angle <= 1e-2, "principal angle {angle}");
    // and both match the planted subspace
    let planted = principal_angle(&from_direct.basis, &ground.bases[0]);
    assert!(planted <= 1e-2, "direct basis off the planted one: {planted}");
}

#[test]
fn pipeline_oracle_equivalence_for_gpca() {
    // noiseless two lines in ℝ²: with a full-dimension sketch the decoded
    // statistic and the direct one give the same polynomials
    let degree = 2usize;
    let d = 2usize;
    let ground = gen_subspaces(3, d, 400, &[1, 1], None, 0.0).unwrap();
    let embedded = veronese_dim(degree, d).unwrap();
    let m = embedded * (embedded + 1) / 2;

    let mut acc = MomentAccumulator::new(AccumulatorKind::VeroneseCorrelation {
        degree,
        dim: d,
    })
    .unwrap();
    acc.accumulate(&ground.data).unwrap();
    let direct = acc.finalize_correlation().unwrap();

    let op = SketchOperator::new(OperatorKind::RankOneMatrix, 21, m, embedded).unwrap();
    let sketch = sketch_stream(&op, [&ground.data], &StreamModel::Gpca { degree }).unwrap();
    let opts = DecodeOptions {
        tol: 1e-10,
        max_iters: 20_000,
        ..DecodeOptions::default()
    };
    let decoded = decode_low_rank(&op, &sketch, &opts).unwrap();

    let rel = (decoded.matrix.matrix() - direct.matrix()).norm() / direct.matrix().norm();
    assert!(rel <= 1e-6, "decoded statistic off by {rel}");

    let p_direct = gpca_polynomials(&direct, degree, 1e-6).unwrap().polynomials;
    let p_decoded = gpca_polynomials(&decoded.matrix, degree, 1e-6)
        .unwrap()
        .polynomials;
    assert_eq!(p_direct.len(), p_decoded.len());
    assert!(!p_direct.is_empty());
    for (a, b) in p_direct.iter().zip(&p_decoded) {
        let overlap = a.dot(b).abs();
        assert!(overlap >= 1.0 - 1e-6, "polynomial overlap {overlap}");
    }

    // on noiseless data every polynomial vanishes at every embedded point
    for poly in &p_direct {
        for i in 0..ground.data.n_samples() {
            let x = ground.data.sample(i);
            let v = cskl_core::statistics::veronese_embed(&x, degree).unwrap();
            let val = poly.dot(&v).abs();
            assert!(
                val <= 1e-8 * poly.norm() * v.norm().max(1e-12),
                "polynomial does not vanish at point {i}: {val}"
            );
        }
    }
}

#[test]
fn two_lines_correlation_has_rank_two() {
    let ground = gen_subspaces(13, 2, 300, &[1, 1], None, 0.0).unwrap();
    let mut acc = MomentAccumulator::new(AccumulatorKind::VeroneseCorrelation {
        degree: 2,
        dim: 2,
    })
    .unwrap();
    acc.accumulate(&ground.data).unwrap();
    let corr = acc.finalize_correlation().unwrap();
    assert!(corr.numerical_rank(1e-10) <= 2);
}

#[test]
fn direct_diagonalization_solves_the_classical_problem() {
    // the non-compressive route alone: materialized cumulant → unmixing
    let d = 3usize;
    let ground = gen_ica(15, d, 100_000, &[SourceKind::Rademacher], None).unwrap();
    let whitener = fit_whitener(&ground.data).unwrap();
    let white = whitener.apply(&ground.data).unwrap();
    let mut acc = MomentAccumulator::new(AccumulatorKind::Cumulant4 { dim: d }).unwrap();
    acc.accumulate(&white).unwrap();
    let cum = acc.finalize_cumulant().unwrap();
    let opts = DecodeOptions {
        tol: 1e-3,
        max_iters: 500,
        ..DecodeOptions::default()
    };
    let solved = diagonalize_cumulant(cum.tensor(), &opts).unwrap();
    let hyp = ica_extract(&solved.tensor, &whitener, 0.0).unwrap();
    let amari = amari_index(&hyp.unmixing, &ground.mixing).unwrap();
    assert!(amari <= 0.05, "direct route amari {amari}");
}
