//! Maximum-volume inscribed ellipsoid of an H-polytope.
//!
//! The constrained problem `max log det F s.t. ‖F gᵢ‖ + gᵢᵀc ≤ hᵢ` is
//! replaced by the smooth penalized form
//!
//! ```text
//! min_{W ⪰ εI, y}  Σᵢ ψ(√(‖W gᵢ‖² + ε) + gᵢᵀy − hᵢ) − (1/ρ) log det W
//! ```
//!
//! with the one-sided Huber function `ψ`, and solved by an accelerated
//! proximal gradient method whose proximal step is available in closed form.

mod fpgm;
mod john;

pub use fpgm::{
    solve_mvie, solve_mvie_continuation, solve_mvie_high_accuracy, SolveDiagnostics, StageSummary,
    Termination, HIGH_ACCURACY_MAX_RHO,
};
pub use john::{check_john, JohnCertificate};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::HPolytope;
use crate::numerics::{dot, eig_sym, DenseMatrix};

/// `{F α + c : ‖α‖ ≤ 1}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub f: DenseMatrix,
    pub c: Vec<f64>,
}

impl Ellipsoid {
    /// Largest `‖F gᵢ‖ + gᵢᵀc − hᵢ` over the polytope's facets.
    pub fn max_violation(&self, poly: &HPolytope) -> f64 {
        poly.facets
            .iter()
            .map(|facet| {
                let fg = self.f.mul_vec(&facet.normal).expect("dims checked by caller");
                dot(&fg, &fg).sqrt() + dot(&facet.normal, &self.c) - facet.offset
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `det(FᵀF)`; proportional to the squared volume.
    pub fn gram_det(&self) -> Result<f64> {
        let eig = eig_sym(&self.f.gram())?;
        Ok(eig.eigenvalues.iter().product())
    }
}

/// Solver settings; defaults are the penalty weight, smoothing constant and
/// step-size factors used for the reported experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpgmConfig {
    pub rho: f64,
    pub eps: f64,
    pub alpha: f64,
    pub beta: f64,
    pub t_max: f64,
    pub max_iter: usize,
    pub tol_rel: f64,
}

impl Default for FpgmConfig {
    fn default() -> Self {
        Self {
            rho: 150.0,
            eps: 2.22e-16,
            alpha: 2.0,
            beta: 0.6,
            t_max: 1.0,
            max_iter: 20_000,
            tol_rel: 1e-9,
        }
    }
}

impl FpgmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("solver config: {what}")));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho must be positive");
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps must be positive");
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return bad("alpha must be at least 1");
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0, 1)");
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        if !(self.tol_rel >= 0.0) {
            return bad("tol_rel must be nonnegative");
        }
        Ok(())
    }
}

/// One-sided Huber function.
#[inline]
pub fn huber(z: f64) -> f64 {
    if z < 0.0 {
        0.0
    } else if z <= 1.0 {
        0.5 * z * z
    } else {
        z - 0.5
    }
}

#[inline]
pub fn huber_prime(z: f64) -> f64 {
    z.clamp(0.0, 1.0)
}

/// Smooth penalty value and its gradients.
#[derive(Debug, Clone)]
pub struct PenaltyEval {
    pub value: f64,
    /// Symmetrized gradient with respect to `W`.
    pub grad_w: DenseMatrix,
    pub grad_y: Vec<f64>,
    /// First-order bound on the rounding error in `value`.
    pub rounding: f64,
}

/// `f(W, y) = Σᵢ ψ(√(‖W gᵢ‖² + ε) + gᵢᵀy − hᵢ)` and its gradients.
pub fn objective_and_grad(
    w: &DenseMatrix,
    y: &[f64],
    poly: &HPolytope,
    cfg: &FpgmConfig,
) -> Result<PenaltyEval> {
    let n = poly.dim;
    if w.shape() != (n, n) || y.len() != n {
        return Err(Error::DimMismatch(format!(
            "W {:?} and y of length {} for a polytope in R^{n}",
            w.shape(),
            y.len()
        )));
    }
    let mut value = 0.0;
    let mut g = DenseMatrix::zeros(n, n);
    let mut grad_y = vec![0.0; n];
    let mut wg = vec![0.0; n];
    let mut scale = 0.0;
    for facet in &poly.facets {
        let gi = &facet.normal;
        mul_into(w, gi, &mut wg);
        let root = (dot(&wg, &wg) + cfg.eps).sqrt();
        let gy = dot(gi, y);
        let z = root + gy - facet.offset;
        value += huber(z);
        let dpsi = huber_prime(z);
        if dpsi == 0.0 {
            continue;
        }
        scale += dpsi * (root + gy.abs() + facet.offset.abs());
        let coef = dpsi / root;
        for a in 0..n {
            let ca = coef * wg[a];
            for b in 0..n {
                g[(a, b)] += ca * gi[b];
            }
        }
        grad_y.iter_mut().zip(gi).for_each(|(o, v)| *o += dpsi * v);
    }
    if !value.is_finite() || !g.is_finite() {
        return Err(Error::NotFinite("penalty objective"));
    }
    let terms = poly.facets.len() as f64;
    Ok(PenaltyEval {
        value,
        grad_w: g.symmetrized()?,
        grad_y,
        rounding: f64::EPSILON * ((n as f64 + 2.0) * scale + terms * value),
    })
}

#[inline]
fn mul_into(w: &DenseMatrix, v: &[f64], out: &mut [f64]) {
    let n = v.len();
    for (o, row) in out.iter_mut().zip(w.as_slice().chunks_exact(n)) {
        *o = dot(row, v);
    }
}

/// Penalty value only.
pub fn objective(w: &DenseMatrix, y: &[f64], poly: &HPolytope, cfg: &FpgmConfig) -> f64 {
    let mut wg = vec![0.0; poly.dim];
    poly.facets
        .iter()
        .map(|facet| {
            mul_into(w, &facet.normal, &mut wg);
            huber((dot(&wg, &wg) + cfg.eps).sqrt() + dot(&facet.normal, y) - facet.offset)
        })
        .sum()
}

/// Result of the log-det proximal step.
#[derive(Debug, Clone)]
pub struct ProxResult {
    pub w: DenseMatrix,
    /// Eigenvalues of `w` (all at least `eps`).
    pub eigenvalues: Vec<f64>,
}

impl ProxResult {
    pub fn log_det(&self) -> f64 {
        self.eigenvalues.iter().map(|d| d.ln()).sum()
    }
}

/// `argmin_{W ⪰ εI} ½‖V − W‖² − (t/ρ) log det W`, via the eigendecomposition
/// of `(V + Vᵀ)/2` and the scalar solution `dᵢ = max((λᵢ + √(λᵢ² + 4t/ρ))/2, ε)`.
pub fn prox_logdet(v: &DenseMatrix, t: f64, cfg: &FpgmConfig) -> Result<ProxResult> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("prox step t = {t}")));
    }
    v.ensure_finite("prox input")?;
    let sym = v.symmetrized()?;
    let eig = eig_sym(&sym)?;
    let kappa = 4.0 * t / cfg.rho;
    let scalar = |l: f64| prox_scalar(l, kappa, cfg.eps);
    // W = V + U diag(dᵢ − λᵢ) Uᵀ: rounding then scales with the step, not with ‖V‖
    let shift = eig.reconstruct_with(|l| prox_shift(l, kappa, cfg.eps));
    let w = sym.add(&shift)?;
    let eigenvalues = eig.eigenvalues.iter().map(|&l| scalar(l)).collect();
    Ok(ProxResult { w, eigenvalues })
}

#[inline]
fn prox_scalar(lambda: f64, kappa: f64, eps: f64) -> f64 {
    // stable form of (λ + √(λ² + κ))/2 for negative λ
    let d = if lambda >= 0.0 {
        0.5 * (lambda + (lambda * lambda + kappa).sqrt())
    } else {
        0.5 * kappa / ((lambda * lambda + kappa).sqrt() - lambda)
    };
    d.max(eps)
}

/// `prox_scalar(λ) − λ` without cancellation.
#[inline]
fn prox_shift(lambda: f64, kappa: f64, eps: f64) -> f64 {
    let d = prox_scalar(lambda, kappa, eps);
    if d == eps {
        return eps - lambda;
    }
    let root = (lambda * lambda + kappa).sqrt();
    if lambda >= 0.0 {
        0.5 * kappa / (root + lambda)
    } else {
        0.5 * (root - lambda)
    }
}
