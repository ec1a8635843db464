//! Turning decoded statistics into hypotheses, and the metrics that score
//! them.

use nalgebra::{DMatrix, DVector};

use crate::decode::DiagonalizableTensor;
use crate::error::{Error, Result};
use crate::statistics::{
    ambient_dim_for, veronese_exponents, DataBatch, StatisticMatrix, Whitener,
};

/// An ICA solution: the total unmixing map on raw data, composed from the
/// decoded orthogonal basis and the whitening transform.
#[derive(Debug, Clone)]
pub struct IcaHypothesis {
    /// `Q̂ᵀ · W`; rows applied to raw samples give independent components.
    pub unmixing: DMatrix<f64>,
    /// Diagonal fourth-order cumulants of the recovered components.
    pub kappa: DVector<f64>,
    /// False when every `κ_i` is indistinguishable from the Gaussian noise
    /// floor, in which case the directions are arbitrary.
    pub identifiable: bool,
}

/// A union-of-subspaces solution.
#[derive(Debug, Clone)]
pub struct SubspaceHypothesis {
    /// Coefficient vectors of the vanishing polynomials, in embedding
    /// coordinates.
    pub polynomials: Vec<DVector<f64>>,
    /// One orthonormal basis (`d × d_i`) per subspace.
    pub bases: Vec<DMatrix<f64>>,
    /// Cluster assignment per training point.
    pub labels: Vec<usize>,
}

/// A principal-subspace solution.
#[derive(Debug, Clone)]
pub struct PcaHypothesis {
    /// `d × k` orthonormal basis of the dominant eigenspace.
    pub basis: DMatrix<f64>,
    /// True when the spectrum is tied at the cut, so the subspace is not
    /// unique.
    pub degenerate: bool,
}

/// Standard error of the empirical diagonal kurtosis of Gaussian data,
/// `√(Var[x⁴ − 3] / n) = √(96 / n)`. Used as the identifiability floor.
pub fn gaussian_kurtosis_floor(n_samples: u64) -> f64 {
    if n_samples == 0 {
        return f64::INFINITY;
    }
    (96.0 / n_samples as f64).sqrt()
}

/// Composes a decoded diagonalizable tensor with the whitener into a full
/// unmixing hypothesis.
///
/// When `noise_floor > 0`, the hypothesis is flagged non-identifiable if
/// `‖κ‖_∞ < 10 · noise_floor`: near-Gaussian components carry no usable
/// fourth-order signal and the recovered directions are arbitrary.
pub fn ica_extract(
    tensor: &DiagonalizableTensor,
    whitener: &Whitener,
    noise_floor: f64,
) -> Result<IcaHypothesis> {
    if tensor.dim() != whitener.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("d={}", tensor.dim()),
            actual: format!("whitener d={}", whitener.dim()),
        });
    }
    let unmixing = tensor.q().transpose() * whitener.transform();
    let max_kappa = tensor.kappa().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let identifiable = noise_floor <= 0.0 || max_kappa >= 10.0 * noise_floor;
    Ok(IcaHypothesis {
        unmixing,
        kappa: tensor.kappa().clone_owned(),
        identifiable,
    })
}

/// Amari error of `P = W·A`: zero exactly when `P` is a signed scaled
/// permutation, i.e. when the unmixing inverts the mixing up to the inherent
/// ICA ambiguities. Normalized to `[0, 1]`.
pub fn amari_index(unmixing: &DMatrix<f64>, mixing: &DMatrix<f64>) -> Result<f64> {
    let d = unmixing.nrows();
    if unmixing.ncols() != d || mixing.nrows() != d || mixing.ncols() != d {
        return Err(Error::ShapeMismatch(format!(
            "amari index needs square matrices of equal size, got {}x{} and {}x{}",
            unmixing.nrows(),
            unmixing.ncols(),
            mixing.nrows(),
            mixing.ncols()
        )));
    }
    let p = unmixing * mixing;
    if p.determinant().abs() < 1e-250 {
        return Err(Error::SingularProduct);
    }
    let abs = p.map(|v| v.abs());
    let mut total = 0.0;
    for i in 0..d {
        let row_max = abs.row(i).max();
        let col_max = abs.column(i).max();
        if row_max <= 0.0 || col_max <= 0.0 {
            return Err(Error::SingularProduct);
        }
        total += abs.row(i).sum() / row_max - 1.0;
        total += abs.column(i).sum() / col_max - 1.0;
    }
    Ok(total / (2.0 * d as f64 * (d as f64 - 1.0)))
}

/// Output of the polynomial extraction step.
#[derive(Debug, Clone)]
pub struct PolynomialBasis {
    /// Null-space eigenvectors of the embedded correlation: coefficient
    /// vectors of polynomials vanishing on the union of subspaces.
    pub polynomials: Vec<DVector<f64>>,
    /// Eigenvalues sorted ascending, for inspection.
    pub eigenvalues: Vec<f64>,
    /// True when the threshold fell inside a near-tied eigenvalue pair and
    /// the null space was widened conservatively.
    pub degenerate_spectrum: bool,
}

/// Extracts the vanishing polynomials of degree `degree` from the embedded
/// correlation: eigenvectors with eigenvalue at most `rank_tol · λ_max`.
///
/// When the cut lands inside a near-tied pair (adjacent eigenvalues within a
/// factor of 10), the larger null space is chosen and the result is flagged;
/// extra polynomials only over-constrain the variety.
pub fn gpca_polynomials(
    corr: &StatisticMatrix,
    degree: usize,
    rank_tol: f64,
) -> Result<PolynomialBasis> {
    let side = corr.side();
    if ambient_dim_for(degree, side).is_none() {
        return Err(Error::ShapeMismatch(format!(
            "correlation side {side} is not a degree-{degree} embedding dimension"
        )));
    }
    if !(rank_tol >= 0.0) {
        return Err(Error::InvalidArgument("rank_tol must be nonnegative".into()));
    }
    let (desc_values, desc_vectors) = corr.eigen_sorted();
    let side_cols: Vec<usize> = (0..side).rev().collect();
    let asc: Vec<(f64, usize)> = side_cols
        .into_iter()
        .map(|col| (desc_values[col], col))
        .collect();
    let lambda_max = desc_values.first().copied().unwrap_or(0.0).max(0.0);
    let threshold = rank_tol * lambda_max;
    let mut cut = asc.iter().take_while(|(v, _)| *v <= threshold).count();
    let mut degenerate = false;
    while cut >= 1 && cut < side {
        let below = asc[cut - 1].0.max(0.0);
        let above = asc[cut].0;
        if above <= 10.0 * below.max(f64::MIN_POSITIVE) && above > threshold {
            degenerate = true;
            cut += 1;
        } else {
            break;
        }
    }
    let polynomials = asc[..cut]
        .iter()
        .map(|&(_, col)| desc_vectors.column(col).clone_owned())
        .collect();
    Ok(PolynomialBasis {
        polynomials,
        eigenvalues: asc.iter().map(|(v, _)| *v).collect(),
        degenerate_spectrum: degenerate,
    })
}

/// Gradient of a polynomial in embedding coordinates at a point.
fn polynomial_gradient(
    coeffs: &DVector<f64>,
    exponents: &[Vec<u32>],
    x: &[f64],
    out: &mut DVector<f64>,
) {
    out.fill(0.0);
    for (c, exps) in coeffs.iter().zip(exponents) {
        if *c == 0.0 {
            continue;
        }
        for t in 0..x.len() {
            let et = exps[t];
            if et == 0 {
                continue;
            }
            let mut term = *c * et as f64;
            for (s, &es) in exps.iter().enumerate() {
                let pow = if s == t { es - 1 } else { es };
                if pow > 0 {
                    term *= x[s].powi(pow as i32);
                }
            }
            out[t] += term;
        }
    }
}

/// Average-linkage agglomerative clustering on a dense distance matrix,
/// cut at `k` clusters. Nearest-neighbor-chain construction, so the
/// dendrogram is exact and the whole run is deterministic.
fn agglomerative_average_linkage(dist: &mut [f64], n: usize, k: usize) -> Vec<usize> {
    assert!(k >= 1 && k <= n);
    let idx = |a: usize, b: usize| a * n + b;
    let mut active: Vec<bool> = vec![true; n];
    let mut size: Vec<f64> = vec![1.0; n];
    let mut merges: Vec<(usize, usize, f64)> = Vec::with_capacity(n - 1);
    let mut chain: Vec<usize> = Vec::with_capacity(n);

    let nearest = |dist: &[f64], active: &[bool], of: usize| -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for c in 0..n {
            if c == of || !active[c] {
                continue;
            }
            let d = dist[idx(of, c)];
            match best {
                Some((bc, bd)) if d > bd || (d == bd && c > bc) => {}
                _ => best = Some((c, d)),
            }
        }
        best
    };

    let mut remaining = n;
    while remaining > 1 {
        if chain.is_empty() {
            let first = (0..n).find(|&i| active[i]).expect("remaining clusters");
            chain.push(first);
        }
        loop {
            let top = *chain.last().unwrap();
            let (nn, d) = nearest(dist, &active, top).expect("at least two active");
            if chain.len() >= 2 && chain[chain.len() - 2] == nn {
                // reciprocal nearest neighbors: merge them
                chain.pop();
                chain.pop();
                let a = top.min(nn);
                let b = top.max(nn);
                merges.push((a, b, d));
                // Lance-Williams update for average linkage into slot a
                let (sa, sb) = (size[a], size[b]);
                for c in 0..n {
                    if !active[c] || c == a || c == b {
                        continue;
                    }
                    let dac = dist[idx(a, c)];
                    let dbc = dist[idx(b, c)];
                    let dnew = (sa * dac + sb * dbc) / (sa + sb);
                    dist[idx(a, c)] = dnew;
                    dist[idx(c, a)] = dnew;
                }
                size[a] += size[b];
                active[b] = false;
                remaining -= 1;
                break;
            }
            chain.push(nn);
        }
    }

    // cut the dendrogram: replay merges in height order until k remain
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut order: Vec<usize> = (0..merges.len()).collect();
    order.sort_by(|&a, &b| {
        merges[a]
            .2
            .partial_cmp(&merges[b].2)
            .expect("finite linkage heights")
            .then(a.cmp(&b))
    });
    let mut components = n;
    for &mi in &order {
        if components == k {
            break;
        }
        let (a, b, _) = merges[mi];
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
            components -= 1;
        }
    }
    // compact labels in first-appearance order
    let mut labels = vec![usize::MAX; n];
    let mut next = 0usize;
    let mut map: Vec<(usize, usize)> = Vec::new();
    for (i, label) in labels.iter_mut().enumerate() {
        let r = find(&mut parent, i);
        let found = map.iter().find(|(root, _)| *root == r).map(|(_, l)| *l);
        *label = match found {
            Some(l) => l,
            None => {
                map.push((r, next));
                next += 1;
                next - 1
            }
        };
    }
    labels
}

/// Clusters points by the principal angles between the spans of the
/// polynomial gradients, then fits one basis per cluster.
///
/// Per point, the gradients of the vanishing polynomials span (noiselessly)
/// the normal space of its subspace; points are clustered agglomeratively
/// under the projection-metric distance between those spans, each cluster's
/// basis is the best rank-`d_i` approximation of its scatter, and labels are
/// finalized by nearest subspace residual. Subspace dimensions are matched
/// to clusters in decreasing cluster-size order (`dims` sorted decreasing).
pub fn gpca_cluster(
    data: &DataBatch,
    polynomials: &[DVector<f64>],
    n_subspaces: usize,
    dims: &[usize],
) -> Result<SubspaceHypothesis> {
    let d = data.dim();
    let n_points = data.n_samples();
    if n_subspaces == 0 {
        return Err(Error::InvalidArgument("need at least one subspace".into()));
    }
    if dims.len() != n_subspaces {
        return Err(Error::InvalidDims(format!(
            "{} dims for {} subspaces",
            dims.len(),
            n_subspaces
        )));
    }
    if dims.iter().any(|&di| di == 0 || di >= d) {
        return Err(Error::InvalidDims(format!(
            "subspace dimensions must lie in [1, {}), got {:?}",
            d, dims
        )));
    }
    if n_subspaces > 1 && polynomials.is_empty() {
        return Err(Error::InvalidArgument(
            "clustering multiple subspaces needs at least one vanishing polynomial".into(),
        ));
    }

    let labels = if n_subspaces == 1 {
        vec![0usize; n_points]
    } else {
        let exponents = veronese_exponents(n_subspaces, d);
        if polynomials.iter().any(|p| p.len() != exponents.len()) {
            return Err(Error::ShapeMismatch(format!(
                "polynomial coefficients must have length {}",
                exponents.len()
            )));
        }
        // orthonormal basis of each point's gradient span
        let mut x = vec![0.0; d];
        let mut grad = DVector::zeros(d);
        let mut normals: Vec<DMatrix<f64>> = Vec::with_capacity(n_points);
        for i in 0..n_points {
            data.sample_into(i, &mut x);
            let mut g = DMatrix::zeros(d, polynomials.len());
            for (j, poly) in polynomials.iter().enumerate() {
                polynomial_gradient(poly, &exponents, &x, &mut grad);
                g.set_column(j, &grad);
            }
            let svd = g.svd(true, false);
            let smax = svd.singular_values.iter().fold(0.0f64, |a, &v| a.max(v));
            let mut basis = DMatrix::zeros(d, 0);
            if smax > 0.0 {
                let u = svd.u.as_ref().expect("left singular vectors requested");
                let rank = svd
                    .singular_values
                    .iter()
                    .filter(|&&v| v > 0.1 * smax)
                    .count()
                    .min(d);
                basis = u.columns(0, rank).clone_owned();
            }
            normals.push(basis);
        }
        // A point on a d_i-dimensional subspace has a normal span of rank
        // d − d_i ≤ d − min(dims). Points with degenerate or full-rank spans
        // (near the origin or near subspace intersections) carry no
        // membership information; they are left out of the agglomerative
        // phase and labeled by the residual pass below.
        let max_normal_rank = d - dims.iter().copied().min().expect("nonempty dims");
        let informative: Vec<usize> = (0..n_points)
            .filter(|&i| {
                let r = normals[i].ncols();
                r >= 1 && r <= max_normal_rank
            })
            .collect();
        if informative.len() < n_subspaces {
            return Err(Error::InsufficientPoints {
                cluster: 0,
                points: informative.len(),
                dim: n_subspaces,
            });
        }
        // projection-metric distances between gradient spans
        let k = informative.len();
        let mut dist = vec![0.0f64; k * k];
        for a in 0..k {
            for b in (a + 1)..k {
                let (na, nb) = (&normals[informative[a]], &normals[informative[b]]);
                let overlap = (na.transpose() * nb).norm_squared();
                let ra = na.ncols() as f64;
                let rb = nb.ncols() as f64;
                let d2 = (ra.max(rb) - overlap).max(0.0);
                dist[a * k + b] = d2;
                dist[b * k + a] = d2;
            }
        }
        let sub_labels = agglomerative_average_linkage(&mut dist, k, n_subspaces);
        let mut labels = vec![usize::MAX; n_points];
        for (slot, &point) in informative.iter().enumerate() {
            labels[point] = sub_labels[slot];
        }
        labels
    };

    // match dims to clusters by size (unlabeled points excluded)
    let mut counts = vec![0usize; n_subspaces];
    for &l in &labels {
        if l != usize::MAX {
            counts[l] += 1;
        }
    }
    let mut cluster_order: Vec<usize> = (0..n_subspaces).collect();
    cluster_order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut dims_sorted = dims.to_vec();
    dims_sorted.sort_by(|a, b| b.cmp(a));
    let mut cluster_dim = vec![0usize; n_subspaces];
    for (rank, &c) in cluster_order.iter().enumerate() {
        cluster_dim[c] = dims_sorted[rank];
    }

    let fit_bases = |labels: &[usize]| -> Result<Vec<DMatrix<f64>>> {
        let mut bases = Vec::with_capacity(n_subspaces);
        let mut x = vec![0.0; d];
        for c in 0..n_subspaces {
            let members: Vec<usize> = (0..n_points).filter(|&i| labels[i] == c).collect();
            if members.len() < cluster_dim[c] {
                return Err(Error::InsufficientPoints {
                    cluster: c,
                    points: members.len(),
                    dim: cluster_dim[c],
                });
            }
            let mut scatter = DMatrix::<f64>::zeros(d, d);
            for &i in &members {
                data.sample_into(i, &mut x);
                for r in 0..d {
                    for s in 0..d {
                        scatter[(r, s)] += x[r] * x[s];
                    }
                }
            }
            let eig = scatter.symmetric_eigen();
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| {
                eig.eigenvalues[b]
                    .partial_cmp(&eig.eigenvalues[a])
                    .expect("finite eigenvalues")
            });
            let mut basis = DMatrix::zeros(d, cluster_dim[c]);
            for (dst, &src) in order.iter().take(cluster_dim[c]).enumerate() {
                basis.set_column(dst, &eig.eigenvectors.column(src));
            }
            bases.push(basis);
        }
        Ok(bases)
    };

    let bases = fit_bases(&labels)?;

    // final assignment by subspace residual, then one refit
    let mut final_labels = vec![0usize; n_points];
    let mut x = DVector::zeros(d);
    let mut xbuf = vec![0.0; d];
    for i in 0..n_points {
        data.sample_into(i, &mut xbuf);
        for t in 0..d {
            x[t] = xbuf[t];
        }
        let mut best = (0usize, f64::INFINITY);
        for (c, basis) in bases.iter().enumerate() {
            let proj = basis * (basis.transpose() * &x);
            let resid = (&x - proj).norm_squared();
            if resid < best.1 {
                best = (c, resid);
            }
        }
        final_labels[i] = best.0;
    }
    let bases = fit_bases(&final_labels)?;

    Ok(SubspaceHypothesis {
        polynomials: polynomials.to_vec(),
        bases,
        labels: final_labels,
    })
}

/// Top-`k` eigenspace of a covariance statistic.
pub fn pca_extract(cov: &StatisticMatrix, k: usize) -> Result<PcaHypothesis> {
    let d = cov.side();
    if k == 0 || k > d {
        return Err(Error::InvalidArgument(format!(
            "subspace dimension k={k} must lie in [1, {d}]"
        )));
    }
    let (values, vectors) = cov.eigen_sorted();
    let basis = vectors.columns(0, k).clone_owned();
    let degenerate = if k < d {
        let gap = values[k - 1] - values[k];
        gap <= 1e-8 * values[0].abs().max(f64::MIN_POSITIVE)
    } else {
        false
    };
    Ok(PcaHypothesis { basis, degenerate })
}

/// Minimum label mismatch rate over all permutations of the predicted
/// labels. Exact by enumeration for at most 8 clusters.
pub fn clustering_error(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: predicted.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::InvalidArgument("no labels".into()));
    }
    let k = predicted
        .iter()
        .chain(truth)
        .max()
        .map(|&m| m + 1)
        .unwrap_or(1);
    if k > 8 {
        return Err(Error::InvalidArgument(format!(
            "exact permutation matching supports at most 8 clusters, got {k}"
        )));
    }
    let mut confusion = vec![0usize; k * k];
    for (&p, &t) in predicted.iter().zip(truth) {
        confusion[p * k + t] += 1;
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best_matches = 0usize;
    permute_all(&mut perm, 0, &mut |perm| {
        let matches: usize = (0..k).map(|p| confusion[p * k + perm[p]]).sum();
        if matches > best_matches {
            best_matches = matches;
        }
    });
    Ok(1.0 - best_matches as f64 / predicted.len() as f64)
}

fn permute_all(items: &mut Vec<usize>, start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute_all(items, start + 1, visit);
        items.swap(start, i);
    }
}

/// Largest principal angle between the column spans of two orthonormal
/// bases, in radians.
pub fn principal_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let overlap = a.transpose() * b;
    let svd = overlap.svd(false, false);
    let cos_min = svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |acc, &v| acc.min(v))
        .clamp(-1.0, 1.0);
    cos_min.acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::MomentAccumulator;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn amari_zero_for_inverse() {
        let a = dmatrix![1.0, 2.0; 0.5, -1.0];
        let w = a.clone().try_inverse().unwrap();
        assert!(amari_index(&w, &a).unwrap() < 1e-12);
    }

    #[test]
    fn amari_zero_for_signed_scaled_permutation() {
        let a = dmatrix![0.3, 1.7, -0.2; 1.1, 0.0, 0.4; -0.6, 0.9, 2.0];
        let w = a.clone().try_inverse().unwrap();
        // signed scaled permutation on top of the inverse
        let p = dmatrix![0.0, -2.0, 0.0; 0.0, 0.0, 0.5; 3.0, 0.0, 0.0];
        assert!(amari_index(&(p * w), &a).unwrap() < 1e-12);
    }

    #[test]
    fn amari_hand_value() {
        // P = [[1, 0.1], [0.1, 1]]: each row and column contributes 0.1,
        // total 0.4 over 2d(d−1) = 4
        let w = dmatrix![1.0, 0.1; 0.1, 1.0];
        let a = DMatrix::identity(2, 2);
        let idx = amari_index(&w, &a).unwrap();
        assert!((idx - 0.1).abs() < 1e-14);
    }

    #[test]
    fn amari_rejects_singular() {
        let w = dmatrix![1.0, 1.0; 1.0, 1.0];
        let a = DMatrix::identity(2, 2);
        assert!(matches!(amari_index(&w, &a), Err(Error::SingularProduct)));
    }

    #[test]
    fn clustering_error_examples() {
        let t = vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1];
        assert_eq!(clustering_error(&t, &t).unwrap(), 0.0);
        let swapped: Vec<usize> = t.iter().map(|&l| 1 - l).collect();
        assert_eq!(clustering_error(&swapped, &t).unwrap(), 0.0);
        let mut one_off = t.clone();
        one_off[3] = 1;
        assert!((clustering_error(&one_off, &t).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn clustering_error_invariant_under_relabeling() {
        let truth = vec![0, 1, 2, 0, 1, 2, 2, 1];
        let pred = vec![2, 0, 1, 2, 0, 1, 1, 0];
        assert_eq!(clustering_error(&pred, &truth).unwrap(), 0.0);
    }

    #[test]
    fn pca_top_two_of_diagonal() {
        let cov = StatisticMatrix::new(dmatrix![3.0, 0.0, 0.0; 0.0, 2.0, 0.0; 0.0, 0.0, 1.0])
            .unwrap();
        let hyp = pca_extract(&cov, 2).unwrap();
        assert!(!hyp.degenerate);
        let want = dmatrix![1.0, 0.0; 0.0, 1.0; 0.0, 0.0];
        assert!(principal_angle(&hyp.basis, &want) < 1e-10);
    }

    #[test]
    fn pca_tied_spectrum_is_flagged() {
        let cov = StatisticMatrix::new(DMatrix::identity(3, 3)).unwrap();
        let hyp = pca_extract(&cov, 2).unwrap();
        assert!(hyp.degenerate);
        let orth = hyp.basis.transpose() * &hyp.basis;
        assert!((orth - DMatrix::identity(2, 2)).norm() < 1e-10);
    }

    #[test]
    fn polynomials_of_two_coordinate_lines() {
        // points on the lines x₁ = 0 and x₂ = 0 in ℝ², degree-2 embedding
        let rows: Vec<Vec<f64>> = (1..=50)
            .map(|i| {
                let t = i as f64 / 10.0;
                if i % 2 == 0 {
                    vec![0.0, t]
                } else {
                    vec![t, 0.0]
                }
            })
            .collect();
        let data = DataBatch::from_rows(&rows).unwrap();
        let mut acc = MomentAccumulator::new(
            crate::statistics::AccumulatorKind::VeroneseCorrelation { degree: 2, dim: 2 },
        )
        .unwrap();
        acc.accumulate(&data).unwrap();
        let corr = acc.finalize_correlation().unwrap();
        assert!(corr.numerical_rank(1e-9) <= 2);
        let basis = gpca_polynomials(&corr, 2, 1e-6).unwrap();
        assert_eq!(basis.polynomials.len(), 1);
        let p = &basis.polynomials[0];
        // coefficient vector proportional to (0, 1, 0): the monomial x₁x₂
        assert!(p[0].abs() < 1e-8 && p[2].abs() < 1e-8);
        assert!((p[1].abs() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn near_tied_cut_widens_the_null_space() {
        // eigenvalues 1e-7 and 3e-7 are within a factor of 10; a threshold
        // between them is ambiguous, so both join the null space and the
        // result is flagged
        let corr = StatisticMatrix::new(dmatrix![
            1.0, 0.0, 0.0;
            0.0, 1e-7, 0.0;
            0.0, 0.0, 3e-7
        ])
        .unwrap();
        let basis = gpca_polynomials(&corr, 2, 2e-7).unwrap();
        assert!(basis.degenerate_spectrum);
        assert_eq!(basis.polynomials.len(), 2);
        // a clean gap is not flagged
        let clean = gpca_polynomials(&corr, 2, 1e-5).unwrap();
        assert!(!clean.degenerate_spectrum);
        assert_eq!(clean.polynomials.len(), 2);
    }

    #[test]
    fn full_rank_correlation_has_no_polynomials() {
        let mut m = DMatrix::identity(6, 6);
        m[(0, 0)] = 2.0;
        let corr = StatisticMatrix::new(m).unwrap();
        let basis = gpca_polynomials(&corr, 2, 1e-6).unwrap();
        assert!(basis.polynomials.is_empty());
        assert!(!basis.degenerate_spectrum);
    }

    #[test]
    fn constructed_null_space_is_recovered() {
        // rank-3 PSD matrix on ℝ⁶ with a known 3-dim null space
        let cols = dmatrix![
            1.0, 0.0, 0.0;
            0.0, 1.0, 0.0;
            0.0, 0.0, 1.0;
            1.0, 1.0, 0.0;
            0.0, 1.0, 1.0;
            1.0, 0.0, 1.0
        ];
        let sigma = &cols * cols.transpose();
        let corr = StatisticMatrix::new(sigma).unwrap();
        let basis = gpca_polynomials(&corr, 2, 1e-9).unwrap();
        assert_eq!(basis.polynomials.len(), 3);
        let mut null = DMatrix::zeros(6, 3);
        for (i, p) in basis.polynomials.iter().enumerate() {
            null.set_column(i, p);
        }
        // the recovered span must be orthogonal to the range of `cols`
        let qr = cols.qr();
        let range = qr.q();
        let overlap = (range.transpose() * &null).norm();
        assert!(overlap < 1e-8, "range-null overlap {overlap}");
    }

    #[test]
    fn two_orthogonal_lines_cluster_exactly() {
        let rows: Vec<Vec<f64>> = (1..=200)
            .map(|i| {
                let t = (i as f64 / 40.0) + 0.2;
                if i % 2 == 0 {
                    vec![t, 0.0]
                } else {
                    vec![0.0, -t]
                }
            })
            .collect();
        let truth: Vec<usize> = (1..=200).map(|i| i % 2).collect();
        let data = DataBatch::from_rows(&rows).unwrap();
        let mut acc = MomentAccumulator::new(
            crate::statistics::AccumulatorKind::VeroneseCorrelation { degree: 2, dim: 2 },
        )
        .unwrap();
        acc.accumulate(&data).unwrap();
        let corr = acc.finalize_correlation().unwrap();
        let polys = gpca_polynomials(&corr, 2, 1e-6).unwrap().polynomials;
        let hyp = gpca_cluster(&data, &polys, 2, &[1, 1]).unwrap();
        assert_eq!(clustering_error(&hyp.labels, &truth).unwrap(), 0.0);
        for basis in &hyp.bases {
            // each basis is one of the coordinate axes up to sign
            let big = basis.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!((big - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn single_subspace_degenerates_to_pca() {
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let t = i as f64 / 10.0 - 3.0;
                vec![2.0 * t, t, 0.001 * (i as f64).sin()]
            })
            .collect();
        let data = DataBatch::from_rows(&rows).unwrap();
        let hyp = gpca_cluster(&data, &[], 1, &[1]).unwrap();
        assert!(hyp.labels.iter().all(|&l| l == 0));
        // basis aligns with the dominant direction (2, 1, 0)/√5
        let dir = dvector![2.0, 1.0, 0.0] / 5.0f64.sqrt();
        let overlap = (hyp.bases[0].transpose() * dir)[(0, 0)].abs();
        assert!(overlap > 0.999, "overlap {overlap}");
    }

    #[test]
    fn insufficient_points_is_reported() {
        let rows = vec![vec![1.0, 0.0, 0.0], vec![0.9, 0.1, 0.0]];
        let data = DataBatch::from_rows(&rows).unwrap();
        // 2 points cannot fill two 2-dimensional subspaces
        let err = gpca_cluster(&data, &[DVector::zeros(6)], 2, &[2, 2]);
        assert!(matches!(err, Err(Error::InsufficientPoints { .. })));
    }

    #[test]
    fn ica_extract_identity_case() {
        let t = crate::decode::DiagonalizableTensor::new(
            DMatrix::identity(2, 2),
            dvector![-1.2, -1.2],
        )
        .unwrap();
        let w = Whitener::identity(2);
        let hyp = ica_extract(&t, &w, 0.0).unwrap();
        assert!((hyp.unmixing.clone() - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!(hyp.identifiable);
    }

    #[test]
    fn near_gaussian_kappa_is_flagged_non_identifiable() {
        let t = crate::decode::DiagonalizableTensor::new(
            DMatrix::identity(2, 2),
            dvector![0.001, -0.002],
        )
        .unwrap();
        let w = Whitener::identity(2);
        let floor = gaussian_kurtosis_floor(10_000); // ≈ 0.098
        let hyp = ica_extract(&t, &w, floor).unwrap();
        assert!(!hyp.identifiable);
    }
}
