//! Dense fourth-order tensors over `f64`.
//!
//! Entries are stored row-major with index `(i, j, k, l)` mapped to
//! `((i*d + j)*d + k)*d + l`. This is the ambient space the tensor-kind
//! sketching operators act on.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// All 24 permutations of four positions, generated once per call site.
pub fn index_permutations() -> Vec<[usize; 4]> {
    let mut perms = Vec::with_capacity(24);
    let mut items = [0usize, 1, 2, 3];
    heap_permute(&mut items, 4, &mut perms);
    perms
}

fn heap_permute(items: &mut [usize; 4], k: usize, out: &mut Vec<[usize; 4]>) {
    if k == 1 {
        out.push(*items);
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// A dense `d × d × d × d` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    dim: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(dim: usize) -> Self {
        Tensor4 {
            dim,
            data: vec![0.0; dim * dim * dim * dim],
        }
    }

    /// Builds a tensor from a row-major flat vector of length `dim⁴`.
    pub fn from_vec(dim: usize, data: Vec<f64>) -> Result<Self> {
        let want = dim * dim * dim * dim;
        if data.len() != want {
            return Err(Error::ShapeMismatch(format!(
                "tensor of dim {dim} needs {want} entries, got {}",
                data.len()
            )));
        }
        Ok(Tensor4 { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn flat_index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.dim + j) * self.dim + k) * self.dim + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[self.flat_index(i, j, k, l)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        let idx = self.flat_index(i, j, k, l);
        self.data[idx] = v;
    }

    /// Row-major vectorization (the `vec(Σ)` the sketch operators consume).
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.data {
            *v *= a;
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Tensor4) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::ShapeMismatch(format!(
                "tensor dims {} vs {}",
                self.dim, other.dim
            )));
        }
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Tensor4) -> Result<Tensor4> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Adds `weight * q⊗q⊗q⊗q` keeping exact permutation symmetry: each
    /// product is evaluated once per sorted index quadruple and the same
    /// value is written into every permuted slot.
    pub fn add_sym_rank_one(&mut self, weight: f64, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "vector of len {} into tensor of dim {}",
                q.len(),
                self.dim
            )));
        }
        let d = self.dim;
        let perms = index_permutations();
        let mut slots = [0usize; 24];
        for i in 0..d {
            for j in i..d {
                for k in j..d {
                    for l in k..d {
                        let p = weight * (((q[i] * q[j]) * q[k]) * q[l]);
                        let quad = [i, j, k, l];
                        // repeated indices make permutations alias; add once
                        // per distinct slot
                        for (slot, perm) in slots.iter_mut().zip(&perms) {
                            *slot = self.flat_index(
                                quad[perm[0]],
                                quad[perm[1]],
                                quad[perm[2]],
                                quad[perm[3]],
                            );
                        }
                        slots.sort_unstable();
                        let mut prev = usize::MAX;
                        for &idx in &slots {
                            if idx != prev {
                                self.data[idx] += p;
                                prev = idx;
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `Σ_t κ_t · q_t⊗q_t⊗q_t⊗q_t` for the columns `q_t` of `q`.
    pub fn from_rank_one_sum(q: &DMatrix<f64>, kappa: &DVector<f64>) -> Result<Tensor4> {
        if q.nrows() != q.ncols() || q.ncols() != kappa.len() {
            return Err(Error::ShapeMismatch(format!(
                "square matrix expected with one weight per column: {}x{} vs {} weights",
                q.nrows(),
                q.ncols(),
                kappa.len()
            )));
        }
        let mut t = Tensor4::zeros(q.nrows());
        for c in 0..q.ncols() {
            let col = q.column(c).clone_owned();
            t.add_sym_rank_one(kappa[c], &col)?;
        }
        Ok(t)
    }

    /// Maximum deviation from full permutation symmetry.
    pub fn symmetry_error(&self) -> f64 {
        let d = self.dim;
        let perms = index_permutations();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                for k in j..d {
                    for l in k..d {
                        let quad = [i, j, k, l];
                        let base = self.get(i, j, k, l);
                        for perm in &perms {
                            let v = self.get(
                                quad[perm[0]],
                                quad[perm[1]],
                                quad[perm[2]],
                                quad[perm[3]],
                            );
                            worst = worst.max((v - base).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    /// Symmetric part: average over all 24 index permutations.
    pub fn symmetrized(&self) -> Tensor4 {
        let d = self.dim;
        let perms = index_permutations();
        let mut out = Tensor4::zeros(d);
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let quad = [i, j, k, l];
                        let mut acc = 0.0;
                        for perm in &perms {
                            acc += self.get(
                                quad[perm[0]],
                                quad[perm[1]],
                                quad[perm[2]],
                                quad[perm[3]],
                            );
                        }
                        out.set(i, j, k, l, acc / 24.0);
                    }
                }
            }
        }
        out
    }

    /// Applies `Qᵀ` along every mode: the result `T` satisfies
    /// `T[a,b,c,e] = Σ_{ijkl} Q[i,a] Q[j,b] Q[k,c] Q[l,e] · self[i,j,k,l]`.
    ///
    /// With `Q` orthogonal this is the change of basis that maps the
    /// statistic of mixed data back to source coordinates.
    pub fn transform_all_modes(&self, q: &DMatrix<f64>) -> Result<Tensor4> {
        if q.nrows() != self.dim || q.ncols() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "transform {}x{} on tensor of dim {}",
                q.nrows(),
                q.ncols(),
                self.dim
            )));
        }
        // Contract the leading mode and rotate indices; four rounds restore
        // the original index order with every mode contracted.
        let mut cur = self.clone();
        for _ in 0..4 {
            cur = cur.contract_first_and_rotate(q);
        }
        Ok(cur)
    }

    /// `out[j,k,l,a] = Σ_i Q[i,a] self[i,j,k,l]`
    fn contract_first_and_rotate(&self, q: &DMatrix<f64>) -> Tensor4 {
        let d = self.dim;
        let mut out = Tensor4::zeros(d);
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    for a in 0..d {
                        let mut acc = 0.0;
                        for i in 0..d {
                            acc += q[(i, a)] * self.get(i, j, k, l);
                        }
                        out.set(j, k, l, a, acc);
                    }
                }
            }
        }
        out
    }

    /// Evaluates the quartic form `⟨self, q⊗q⊗q⊗q⟩` together with the
    /// once-contracted vector `g[i] = Σ_{jkl} self[i,j,k,l] q_j q_k q_l`.
    ///
    /// For a permutation-symmetric tensor the gradient of the quartic form
    /// with respect to `q` is `4 g`.
    pub fn quartic_form_with_gradient(&self, q: &DVector<f64>) -> (f64, DVector<f64>) {
        let d = self.dim;
        debug_assert_eq!(q.len(), d);
        // t2[i,j] = Σ_{kl} self[i,j,k,l] q_k q_l
        let mut t2 = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    let mut inner = 0.0;
                    for l in 0..d {
                        inner += self.get(i, j, k, l) * q[l];
                    }
                    acc += inner * q[k];
                }
                t2[i * d + j] = acc;
            }
        }
        let mut g = DVector::zeros(d);
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += t2[i * d + j] * q[j];
            }
            g[i] = acc;
        }
        let value = g.dot(q);
        (value, g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn permutations_are_all_distinct() {
        let mut perms = index_permutations();
        perms.sort();
        perms.dedup();
        assert_eq!(perms.len(), 24);
    }

    #[test]
    fn rank_one_tensor_entries() {
        let q = dvector![1.0, 2.0];
        let mut t = Tensor4::zeros(2);
        t.add_sym_rank_one(1.0, &q).unwrap();
        assert_eq!(t.get(0, 0, 0, 0), 1.0);
        assert_eq!(t.get(1, 1, 1, 1), 16.0);
        assert_eq!(t.get(0, 1, 0, 1), 4.0);
        assert_eq!(t.get(1, 1, 1, 0), 8.0);
        assert_eq!(t.symmetry_error(), 0.0);
    }

    #[test]
    fn transform_identity_is_identity() {
        let q = dvector![0.3, -1.1, 0.7];
        let mut t = Tensor4::zeros(3);
        t.add_sym_rank_one(2.0, &q).unwrap();
        let id = DMatrix::identity(3, 3);
        let u = t.transform_all_modes(&id).unwrap();
        let diff = u.sub(&t).unwrap();
        assert!(diff.norm() < 1e-14);
    }

    #[test]
    fn transform_moves_rank_one_axis() {
        // q⊗4 transformed by Qᵀ in every mode becomes (Qᵀq)⊗4.
        let d = 3;
        let mut rot = DMatrix::identity(d, d);
        let (c, s) = (0.6, 0.8);
        rot[(0, 0)] = c;
        rot[(0, 1)] = -s;
        rot[(1, 0)] = s;
        rot[(1, 1)] = c;
        let q = dvector![0.5, -0.25, 1.5];
        let mut t = Tensor4::zeros(d);
        t.add_sym_rank_one(1.0, &q).unwrap();
        let moved = t.transform_all_modes(&rot).unwrap();
        let qt = rot.transpose() * &q;
        let mut want = Tensor4::zeros(d);
        want.add_sym_rank_one(1.0, &qt).unwrap();
        let diff = moved.sub(&want).unwrap();
        assert!(diff.norm() < 1e-12, "norm {}", diff.norm());
    }

    #[test]
    fn quartic_form_matches_direct_sum() {
        let q = dvector![0.9, -0.4];
        let axis = dvector![1.0, 3.0];
        let mut t = Tensor4::zeros(2);
        t.add_sym_rank_one(0.5, &axis).unwrap();
        let (val, grad) = t.quartic_form_with_gradient(&q);
        // ⟨w·a⊗4, q⊗4⟩ = w (a·q)^4
        let dot = axis.dot(&q);
        assert!((val - 0.5 * dot.powi(4)).abs() < 1e-12);
        // gradient of the quartic form is 4 w (a·q)^3 a
        let expect = &axis * (4.0 * 0.5 * dot.powi(3));
        assert!((grad * 4.0 - expect).norm() < 1e-12);
    }
}
