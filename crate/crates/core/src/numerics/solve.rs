//! Small dense solvers: LU with partial pivoting, Householder least squares,
//! and Lawson–Hanson nonnegative least squares.

use crate::error::{Error, Result};
use crate::numerics::{dot, DenseMatrix};

/// Solves `A x = b` for square `A`.
pub fn solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::NonSquare {
            rows: n,
            cols: a.cols(),
        });
    }
    if b.len() != n {
        return Err(Error::DimMismatch("right-hand side length".into()));
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| m[(i, k)].abs().total_cmp(&m[(j, k)].abs()))
            .unwrap();
        if m[(piv, k)].abs() <= 1e-14 * scale {
            return Err(Error::DegenerateInput("singular matrix".into()));
        }
        if piv != k {
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(piv, j)];
                m[(piv, j)] = t;
            }
            x.swap(k, piv);
        }
        for i in (k + 1)..n {
            let f = m[(i, k)] / m[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| m[(k, j)] * x[j]).sum();
        x[k] = (x[k] - s) / m[(k, k)];
    }
    Ok(x)
}

/// Minimizes `‖A x − b‖` for a tall full-column-rank `A` via Householder QR.
pub fn lstsq(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::BadDims(format!("lstsq needs rows >= cols, got {m}x{n}")));
    }
    if b.len() != m {
        return Err(Error::DimMismatch("right-hand side length".into()));
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for k in 0..n {
        let col_norm = (k..m).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>().sqrt();
        if col_norm <= 1e-13 * scale {
            return Err(Error::DegenerateInput("rank deficient least squares".into()));
        }
        let alpha = if r[(k, k)] > 0.0 { -col_norm } else { col_norm };
        let mut v: Vec<f64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..n {
            let s: f64 = (k..m).map(|i| v[i - k] * r[(i, j)]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..m {
                r[(i, j)] -= s * v[i - k];
            }
        }
        let s: f64 = (k..m).map(|i| v[i - k] * y[i]).sum::<f64>() * 2.0 / vnorm2;
        for i in k..m {
            y[i] -= s * v[i - k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = ((k + 1)..n).map(|j| r[(k, j)] * x[j]).sum();
        x[k] = (y[k] - s) / r[(k, k)];
    }
    Ok(x)
}

/// Nonnegative least squares `min ‖A x − b‖, x ≥ 0` (Lawson–Hanson active set).
pub fn nnls(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::DimMismatch("right-hand side length".into()));
    }
    let cols: Vec<Vec<f64>> = a.columns();
    let scale = a.max_abs().max(f64::MIN_POSITIVE) * b.iter().fold(1.0f64, |s, x| s.max(x.abs()));
    let tol = 1e-12 * scale * m as f64;
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];

    let residual = |x: &[f64]| -> Vec<f64> {
        let mut r = b.to_vec();
        for (j, c) in cols.iter().enumerate() {
            if x[j] != 0.0 {
                r.iter_mut().zip(c).for_each(|(ri, cj)| *ri -= x[j] * cj);
            }
        }
        r
    };
    let solve_passive = |passive: &[bool]| -> Result<Vec<f64>> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = DenseMatrix::from_cols(&idx.iter().map(|&j| cols[j].clone()).collect::<Vec<_>>())?;
        let z = lstsq(&sub, b)?;
        let mut full = vec![0.0; n];
        for (&j, zj) in idx.iter().zip(z) {
            full[j] = zj;
        }
        Ok(full)
    };

    for _ in 0..(3 * n + 30) {
        let r = residual(&x);
        let w: Vec<f64> = cols.iter().map(|c| dot(c, &r)).collect();
        let cand = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else {
            return Ok(x);
        };
        passive[j] = true;
        loop {
            let z = match solve_passive(&passive) {
                Ok(z) => z,
                Err(_) => {
                    // new column is dependent on the passive set; drop it
                    passive[j] = false;
                    return Ok(x);
                }
            };
            if (0..n).filter(|&i| passive[i]).all(|i| z[i] > 0.0) {
                x = z;
                break;
            }
            let mut step = 1.0f64;
            for i in 0..n {
                if passive[i] && z[i] <= 0.0 {
                    step = step.min(x[i] / (x[i] - z[i]));
                }
            }
            for i in 0..n {
                x[i] += step * (z[i] - x[i]);
                if passive[i] && x[i] <= 1e-15 * scale {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    Err(Error::ConvergenceFailure("nnls"))
}
