//! Affine set fitting: map data to `N−1` intrinsic coordinates and back.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{norm, svd_thin, DenseMatrix};

/// Residual (relative to the data spread) above which data is not consistent
/// with the noiseless model.
pub const MODEL_RESIDUAL_TOL: f64 = 1e-8;

/// Affine chart `u ↦ Φu + b` with semi-orthonormal `Φ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffineChart {
    pub phi: DenseMatrix,
    pub b: Vec<f64>,
    /// `max_i ‖(I − ΦΦᵀ)(xᵢ − b)‖ / max_i ‖xᵢ − b‖` on the fitted data.
    pub relative_residual: f64,
}

impl AffineChart {
    pub fn ambient_dim(&self) -> usize {
        self.phi.rows()
    }

    pub fn intrinsic_dim(&self) -> usize {
        self.phi.cols()
    }

    /// Whether the fitted data lies on the chart up to [`MODEL_RESIDUAL_TOL`].
    pub fn is_model_consistent(&self) -> bool {
        self.relative_residual <= MODEL_RESIDUAL_TOL
    }
}

/// Fits the `(N−1)`-dimensional affine hull of the columns of `x`.
pub fn affine_fit(x: &DenseMatrix, n: usize) -> Result<AffineChart> {
    let (m, l) = x.shape();
    if n < 2 {
        return Err(Error::BadDims(format!("model order N = {n} must be at least 2")));
    }
    if l < n || m < n - 1 {
        return Err(Error::BadDims(format!(
            "need L >= N and M >= N-1, got M={m}, L={l}, N={n}"
        )));
    }
    x.ensure_finite("data matrix")?;
    let b: Vec<f64> = (0..m).map(|i| x.row(i).iter().sum::<f64>() / l as f64).collect();
    let mut centered = x.clone();
    for i in 0..m {
        for j in 0..l {
            centered[(i, j)] -= b[i];
        }
    }
    let k = n - 1;
    let svd = svd_thin(&centered, k)?;
    let ratio = if svd.sigma[0] > 0.0 {
        svd.sigma[k - 1] / svd.sigma[0]
    } else {
        0.0
    };
    if ratio < 1e-10 {
        return Err(Error::RankDeficientData(ratio));
    }
    let phi = svd.u;

    let mut worst = 0.0f64;
    let mut spread = 0.0f64;
    for j in 0..l {
        let d = centered.col(j);
        let coords = phi.tr_mul_vec(&d)?;
        let proj = phi.mul_vec(&coords)?;
        let r: Vec<f64> = d.iter().zip(&proj).map(|(a, p)| a - p).collect();
        worst = worst.max(norm(&r));
        spread = spread.max(norm(&d));
    }
    Ok(AffineChart {
        phi,
        b,
        relative_residual: worst / spread,
    })
}

/// `x′ᵢ = Φᵀ(xᵢ − b)` for every column.
pub fn reduce_points(x: &DenseMatrix, chart: &AffineChart) -> Result<DenseMatrix> {
    if x.rows() != chart.ambient_dim() {
        return Err(Error::DimMismatch(format!(
            "data has {} rows, chart expects {}",
            x.rows(),
            chart.ambient_dim()
        )));
    }
    let d = chart.intrinsic_dim();
    let mut out = DenseMatrix::zeros(d, x.cols());
    for j in 0..x.cols() {
        let centered: Vec<f64> = x.col(j).iter().zip(&chart.b).map(|(v, b)| v - b).collect();
        out.set_col(j, &chart.phi.tr_mul_vec(&centered)?);
    }
    Ok(out)
}

/// `Φq′ + b`.
pub fn lift_point(q: &[f64], chart: &AffineChart) -> Result<Vec<f64>> {
    if q.len() != chart.intrinsic_dim() {
        return Err(Error::DimMismatch(format!(
            "point has {} coordinates, chart has {}",
            q.len(),
            chart.intrinsic_dim()
        )));
    }
    let mut p = chart.phi.mul_vec(q)?;
    p.iter_mut().zip(&chart.b).for_each(|(v, b)| *v += b);
    Ok(p)
}
