//! Shared machinery for optimization over the orthogonal group.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Haar-ish random orthogonal matrix: QR of a Gaussian matrix with the sign
/// of the R diagonal fixed so the draw is a deterministic function of the
/// generator state.
pub fn random_orthogonal<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let g = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r_diag: Vec<f64> = (0..dim).map(|i| qr.r()[(i, i)]).collect();
    let mut q = qr.q();
    for (i, rd) in r_diag.iter().enumerate() {
        if *rd < 0.0 {
            let col = -q.column(i);
            q.set_column(i, &col);
        }
    }
    q
}

/// One point on the Cayley retraction curve through `q` along the
/// skew-symmetric direction `w`:
/// `q(τ) = (I + τ/2 · w)⁻¹ (I − τ/2 · w) q`.
///
/// The curve stays on the orthogonal group exactly (up to linear-solve
/// roundoff) and descends the objective when `w = g qᵀ − q gᵀ` for the
/// Euclidean gradient `g`.
pub fn cayley_step(q: &DMatrix<f64>, w: &DMatrix<f64>, tau: f64) -> Option<DMatrix<f64>> {
    let d = q.nrows();
    let id = DMatrix::identity(d, d);
    let lhs = &id + w * (tau / 2.0);
    let rhs = (&id - w * (tau / 2.0)) * q;
    lhs.lu().solve(&rhs)
}

/// Canonical sign choice: the first entry of each column whose magnitude
/// exceeds `1e-12` is made positive. Quartic objectives are blind to column
/// signs, so this picks one representative per sign orbit.
pub fn canonicalize_column_signs(q: &mut DMatrix<f64>) {
    for c in 0..q.ncols() {
        let mut flip = false;
        for r in 0..q.nrows() {
            let v = q[(r, c)];
            if v.abs() > 1e-12 {
                flip = v < 0.0;
                break;
            }
        }
        if flip {
            let col = -q.column(c);
            q.set_column(c, &col);
        }
    }
}

/// Total order on matrices by column-major entries, used as a deterministic
/// tie-break between equally good restarts.
pub fn lexicographic_less(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    for (x, y) in a.iter().zip(b.iter()) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// `‖qᵀq − I‖_F`
pub fn orthogonality_error(q: &DMatrix<f64>) -> f64 {
    let d = q.ncols();
    (q.transpose() * q - DMatrix::identity(d, d)).norm()
}

/// Deviation from a signed permutation of the identity, minimized over
/// column matchings: `‖ |q̂ᵀ q₀| − P ‖_∞` for the best permutation `P`.
///
/// Greedy matching on the largest magnitudes is exact here because a signed
/// permutation has a single unit entry per row and column.
pub fn signed_permutation_distance(q_est: &DMatrix<f64>, q_true: &DMatrix<f64>) -> f64 {
    let p = q_est.transpose() * q_true;
    let d = p.nrows();
    let mut used_rows = vec![false; d];
    let mut used_cols = vec![false; d];
    let mut worst: f64 = 0.0;
    for _ in 0..d {
        let mut best = (0usize, 0usize, -1.0f64);
        for r in 0..d {
            if used_rows[r] {
                continue;
            }
            for c in 0..d {
                if used_cols[c] {
                    continue;
                }
                let v = p[(r, c)].abs();
                if v > best.2 {
                    best = (r, c, v);
                }
            }
        }
        used_rows[best.0] = true;
        used_cols[best.1] = true;
        worst = worst.max((best.2 - 1.0).abs());
    }
    // off-matching entries must vanish
    for r in 0..d {
        for c in 0..d {
            let v = p[(r, c)].abs();
            if (v - 1.0).abs() > 0.5 {
                worst = worst.max(v);
            }
        }
    }
    worst
}

/// Least-squares solve `argmin_x ‖a x − b‖` via SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    a.clone()
        .svd(true, true)
        .solve(b, 1e-13)
        .expect("svd solve on finite input")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn random_orthogonal_is_orthogonal_and_deterministic() {
        let mut r1 = ChaCha12Rng::seed_from_u64(4);
        let mut r2 = ChaCha12Rng::seed_from_u64(4);
        let q1 = random_orthogonal(5, &mut r1);
        let q2 = random_orthogonal(5, &mut r2);
        assert_eq!(q1, q2);
        assert!(orthogonality_error(&q1) < 1e-12);
    }

    #[test]
    fn cayley_preserves_orthogonality() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let q = random_orthogonal(4, &mut rng);
        let g = DMatrix::from_fn(4, 4, |i, j| ((i * 7 + j) as f64).sin());
        let w = &g * q.transpose() - &q * g.transpose();
        let q2 = cayley_step(&q, &w, 0.3).unwrap();
        assert!(orthogonality_error(&q2) < 1e-10);
    }

    #[test]
    fn signed_permutation_distance_detects_match() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let q = random_orthogonal(3, &mut rng);
        // same matrix with shuffled, sign-flipped columns
        let mut shuffled = DMatrix::zeros(3, 3);
        shuffled.set_column(0, &(-q.column(2)));
        shuffled.set_column(1, &q.column(0));
        shuffled.set_column(2, &(-q.column(1)));
        assert!(signed_permutation_distance(&shuffled, &q) < 1e-12);
        let other = random_orthogonal(3, &mut rng);
        assert!(signed_permutation_distance(&other, &q) > 1e-2);
    }
}
