use crate::error::{Error, Result};
use crate::numerics::{dot, eig_sym, DenseMatrix};

/// Truncated singular value decomposition `A ≈ U diag(σ) Vᵀ`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

/// Leading `k` singular triplets of `a`, computed from the eigendecomposition
/// of the smaller Gram matrix.
pub fn svd_thin(a: &DenseMatrix, k: usize) -> Result<ThinSvd> {
    let (m, n) = a.shape();
    let max = m.min(n);
    if k == 0 || k > max {
        return Err(Error::BadRank { k, max });
    }
    a.ensure_finite("svd input")?;

    let tall = m >= n;
    let gram = if tall { a.gram() } else { a.transpose().gram() };
    let eig = eig_sym(&gram)?;
    let sigma: Vec<f64> = eig.eigenvalues[..k].iter().map(|&l| l.max(0.0).sqrt()).collect();

    // Right (tall) or left (wide) singular vectors come straight from the eigenvectors.
    let side = gram.rows();
    let mut small = DenseMatrix::zeros(side, k);
    for j in 0..k {
        for i in 0..side {
            small[(i, j)] = eig.eigenvectors[(i, j)];
        }
    }

    // The other side is A·v/σ (or Aᵀ·u/σ), re-orthonormalized.
    let other_dim = if tall { m } else { n };
    let sigma_max = sigma[0];
    let mut other: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let col = small.col(j);
        let mut w = if tall {
            a.mul_vec(&col)?
        } else {
            a.tr_mul_vec(&col)?
        };
        let s = sigma[j];
        if s > 1e-12 * sigma_max && s > 0.0 {
            w.iter_mut().for_each(|x| *x /= s);
        } else {
            w = vec![0.0; other_dim];
        }
        orthonormalize_against(&mut w, &other);
        other.push(w);
    }
    let other = DenseMatrix::from_cols(&other)?;

    let (u, v) = if tall { (other, small) } else { (small, other) };
    Ok(ThinSvd { u, sigma, v })
}

/// Makes `w` a unit vector orthogonal to `basis`; if `w` has (numerically)
/// no component outside the span, a coordinate axis is used instead.
fn orthonormalize_against(w: &mut Vec<f64>, basis: &[Vec<f64>]) {
    let start_norm = dot(w, w).sqrt();
    for _ in 0..2 {
        for b in basis {
            let p = dot(w, b);
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
    }
    let nrm = dot(w, w).sqrt();
    if nrm > 1e-8 * start_norm.max(f64::MIN_POSITIVE) && nrm > 0.0 {
        w.iter_mut().for_each(|x| *x /= nrm);
        return;
    }
    let dim = w.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for axis in 0..dim {
        let mut e = vec![0.0; dim];
        e[axis] = 1.0;
        for _ in 0..2 {
            for b in basis {
                let p = dot(&e, b);
                e.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let en = dot(&e, &e).sqrt();
        if best.as_ref().is_none_or(|(bn, _)| en > *bn) {
            best = Some((en, e));
        }
    }
    let (en, e) = best.expect("nonempty dimension");
    *w = e.into_iter().map(|x| x / en).collect();
}
