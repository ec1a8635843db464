//! Veronese embeddings: the map sending a point to all monomials of a fixed
//! degree in its coordinates.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Number of degree-`degree` monomials in `dim` variables:
/// `C(degree + dim − 1, dim − 1)`. Always at most `dim^degree`.
pub fn veronese_dim(degree: usize, dim: usize) -> Result<usize> {
    if degree == 0 || dim == 0 {
        return Err(Error::InvalidSize(
            "veronese embedding needs degree ≥ 1 and dimension ≥ 1".into(),
        ));
    }
    let a = (degree + dim - 1) as u128;
    let b = ((dim - 1) as u128).min(degree as u128);
    let mut res: u128 = 1;
    for i in 1..=b {
        res = res
            .checked_mul(a - b + i)
            .ok_or_else(|| Error::Overflow(format!("binomial({a}, {b})")))?;
        res /= i; // prefix binomials are integers, division is exact
    }
    usize::try_from(res).map_err(|_| Error::Overflow(format!("binomial({a}, {b}) = {res}")))
}

/// Exponent vectors of all degree-`degree` monomials in `dim` variables, in
/// graded lexicographic order (descending on the exponent tuple). For
/// degree 2 in three variables the order is
/// `x₁², x₁x₂, x₁x₃, x₂², x₂x₃, x₃²`.
pub fn veronese_exponents(degree: usize, dim: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut current = vec![0u32; dim];
    fill_exponents(degree as u32, 0, &mut current, &mut out);
    out
}

fn fill_exponents(remaining: u32, pos: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if pos == current.len() - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        fill_exponents(remaining - e, pos + 1, current, out);
        current[pos] = 0;
    }
}

/// Embeds one point: evaluates every monomial from `exponents` at `x`.
pub fn veronese_embed_with(exponents: &[Vec<u32>], x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(exponents.len(), out.len());
    for (slot, exps) in out.iter_mut().zip(exponents) {
        let mut v = 1.0;
        for (xi, &e) in x.iter().zip(exps) {
            if e > 0 {
                v *= xi.powi(e as i32);
            }
        }
        *slot = v;
    }
}

/// Convenience wrapper around [`veronese_embed_with`] that allocates the
/// exponent table and output vector.
pub fn veronese_embed(x: &DVector<f64>, degree: usize) -> Result<DVector<f64>> {
    let dim = x.len();
    let total = veronese_dim(degree, dim)?;
    let exps = veronese_exponents(degree, dim);
    debug_assert_eq!(exps.len(), total);
    let mut out = DVector::zeros(total);
    veronese_embed_with(&exps, x.as_slice(), out.as_mut_slice());
    Ok(out)
}

/// Recovers the ambient dimension from an embedding length, if any `d`
/// satisfies `veronese_dim(degree, d) == embedded_len`.
pub fn ambient_dim_for(degree: usize, embedded_len: usize) -> Option<usize> {
    for d in 1..=embedded_len {
        match veronese_dim(degree, d) {
            Ok(v) if v == embedded_len => return Some(d),
            Ok(v) if v > embedded_len => return None,
            _ => {}
        }
    }
    None
}
