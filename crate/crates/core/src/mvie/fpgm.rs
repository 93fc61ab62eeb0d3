use serde::{Deserialize, Serialize};

use super::{objective, objective_and_grad, prox_logdet, Ellipsoid, FpgmConfig};
use crate::error::{Error, Result};
use crate::hull::HPolytope;
use crate::numerics::{dot, eig_sym, DenseMatrix};

const STOP_STREAK: usize = 5;
/// Iterations over which the objective decrease is compared with its rounding.
const NOISE_WINDOW: usize = 2000;
const MAX_BACKTRACKS: usize = 200;
const CHEBYSHEV_STEPS: usize = 200;
/// Final penalty weight of [`solve_mvie_high_accuracy`].
pub const HIGH_ACCURACY_MAX_RHO: f64 = 1e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Relative objective change stayed below `tol_rel`.
    Converged,
    /// Iteration cap reached.
    MaxIter,
    /// A plain proximal step no longer decreases the objective.
    Stalled,
    /// The objective decrease over a window of iterations fell below its rounding error.
    NoiseFloor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageSummary {
    pub rho: f64,
    pub iterations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub final_objective: f64,
    /// Composite objective after every accepted step (non-increasing).
    pub objective_trace: Vec<f64>,
    /// Line-search reductions per iteration.
    pub backtracks: Vec<usize>,
    /// Local Lipschitz estimate `1/t` per iteration.
    pub lipschitz_trace: Vec<f64>,
    pub restarts: usize,
    pub termination: Termination,
    /// Penalty continuation stages (a single entry unless high-accuracy mode ran).
    pub stages: Vec<StageSummary>,
    /// The result combines the last two continuation stages to cancel the `1/ρ` bias.
    pub extrapolated: bool,
}

/// Strictly interior starting point: approximately maximizes the smallest
/// facet slack by projected subgradient ascent.
pub(crate) fn chebyshev_start(poly: &HPolytope) -> Result<(Vec<f64>, f64)> {
    let n = poly.dim;
    if poly.facets.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let mut y = if poly.vertices.is_empty() {
        vec![0.0; n]
    } else {
        let k = poly.vertices.len() as f64;
        (0..n)
            .map(|j| poly.vertices.iter().map(|v| v[j]).sum::<f64>() / k)
            .collect()
    };
    let slack_at = |y: &[f64]| -> (f64, usize) {
        poly.facets
            .iter()
            .enumerate()
            .map(|(i, f)| (f.offset - dot(&f.normal, y), i))
            .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
    };
    let width = poly
        .facets
        .iter()
        .map(|f| (f.offset - dot(&f.normal, &y)).abs())
        .fold(0.0, f64::max);
    if !(width > 0.0) {
        return Err(Error::EmptyInterior);
    }
    let (mut best_slack, _) = slack_at(&y);
    let mut best = y.clone();
    for k in 0..CHEBYSHEV_STEPS {
        let (s, i) = slack_at(&y);
        if s > best_slack {
            best_slack = s;
            best.clone_from(&y);
        }
        let step = 0.25 * width / ((k + 1) as f64).sqrt();
        y.iter_mut()
            .zip(&poly.facets[i].normal)
            .for_each(|(yj, gj)| *yj -= step * gj);
    }
    let (s, _) = slack_at(&y);
    if s > best_slack {
        best_slack = s;
        best = y;
    }
    if !(best_slack > 0.0) {
        return Err(Error::EmptyInterior);
    }
    Ok((best, best_slack))
}

/// Floors the spectrum of a symmetric matrix at `eps`.
fn project_onto_domain(w: &DenseMatrix, eps: f64) -> Result<(DenseMatrix, f64)> {
    let eig = eig_sym(&w.symmetrized()?)?;
    let projected = eig.reconstruct_with(|l| l.max(eps));
    let log_det = eig.eigenvalues.iter().map(|l| l.max(eps).ln()).sum();
    Ok((projected, log_det))
}

/// `log det B − log det A` for SPD `A`, `B`, as `Σ log1p(μᵢ)` over the eigenvalues
/// of `A^{-1/2}(B − A)A^{-1/2}`.
fn logdet_change(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    let inv_sqrt = eig_sym(a)?.reconstruct_with(|l| 1.0 / l.sqrt());
    let m = inv_sqrt.matmul(&axpy_matrix(b, -1.0, a))?.matmul(&inv_sqrt)?;
    Ok(eig_sym(&m.symmetrized()?)?.eigenvalues.iter().map(|mu| mu.ln_1p()).sum())
}

fn axpy_matrix(a: &DenseMatrix, s: f64, b: &DenseMatrix) -> DenseMatrix {
    // a + s·b, entrywise (keeps exact symmetry of symmetric inputs)
    let data = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x + s * y)
        .collect();
    DenseMatrix::new(a.rows(), a.cols(), data).expect("same shape")
}

fn axpy(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + s * y).collect()
}

/// Accelerated proximal gradient with backtracking on the penalized MVIE
/// problem. Returns `(W, y)` as the ellipsoid `(F′, c′)`.
pub fn solve_mvie(
    poly: &HPolytope,
    cfg: &FpgmConfig,
    init: Option<(DenseMatrix, Vec<f64>)>,
) -> Result<(Ellipsoid, SolveDiagnostics)> {
    cfg.validate()?;
    let n = poly.dim;
    if n == 0 || poly.facets.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let (w0, y0) = match init {
        Some((w, y)) => {
            if w.shape() != (n, n) || y.len() != n {
                return Err(Error::DimMismatch("initial point".into()));
            }
            (w, y)
        }
        None => {
            let (y, slack) = chebyshev_start(poly)?;
            (DenseMatrix::identity(n).scale(0.9 * slack), y)
        }
    };
    let (mut x_w, x_logdet) = project_onto_domain(&w0, cfg.eps)?;
    let mut x_y = y0;
    let inv_rho = 1.0 / cfg.rho;
    let mut pen_x = objective(&x_w, &x_y, poly, cfg);
    let mut f_x = pen_x - inv_rho * x_logdet;
    if !f_x.is_finite() {
        return Err(Error::Divergence(0));
    }

    let mut z_w = x_w.clone();
    let mut z_y = x_y.clone();
    let mut momentum = false;
    let mut u = 1.0f64;
    let mut t = cfg.t_max;
    let mut diag = SolveDiagnostics {
        iterations: 0,
        final_objective: f_x,
        objective_trace: vec![f_x],
        backtracks: Vec::new(),
        lipschitz_trace: Vec::new(),
        restarts: 0,
        termination: Termination::MaxIter,
        stages: Vec::new(),
        extrapolated: false,
    };
    let mut streak = 0;
    // unclamped objective (relative to the start), for the noise-floor test
    let mut exact = 0.0;
    let mut history = std::collections::VecDeque::with_capacity(NOISE_WINDOW + 1);
    history.push_back(exact);

    for iter in 1..=cfg.max_iter {
        diag.iterations = iter;
        let grad = objective_and_grad(&z_w, &z_y, poly, cfg)?;
        t *= cfg.alpha;
        let mut backtracks = 0;
        let (prox, new_y, new_f) = loop {
            let v = axpy_matrix(&z_w, -t, &grad.grad_w);
            let prox = prox_logdet(&v, t, cfg)?;
            let new_y = axpy(&z_y, -t, &grad.grad_y);
            let new_f = objective(&prox.w, &new_y, poly, cfg);
            let dw = axpy_matrix(&prox.w, -1.0, &z_w);
            let dy = axpy(&new_y, -1.0, &z_y);
            let linear = dot(grad.grad_w.as_slice(), dw.as_slice()) + dot(&grad.grad_y, &dy);
            let sq = dot(dw.as_slice(), dw.as_slice()) + dot(&dy, &dy);
            let bound = grad.value + linear + sq / (2.0 * t);
            if new_f <= bound + 2.0 * grad.rounding {
                break (prox, new_y, new_f);
            }
            t *= cfg.beta;
            backtracks += 1;
            if backtracks > MAX_BACKTRACKS || !new_f.is_finite() && t < 1e-300 {
                return Err(Error::Divergence(iter));
            }
        };
        diag.backtracks.push(backtracks);
        diag.lipschitz_trace.push(1.0 / t);

        // Differences of F are formed directly: at large ρ the step-to-step change
        // falls below the rounding of F itself.
        let delta = (new_f - pen_x) - inv_rho * logdet_change(&x_w, &prox.w)?;
        if !delta.is_finite() {
            return Err(Error::Divergence(iter));
        }
        // increases within the rounding of f are not treated as increases
        let noise = 4.0 * grad.rounding;
        if delta > noise {
            if momentum {
                // extrapolation overshot: drop momentum and retry from the iterate
                z_w.clone_from(&x_w);
                z_y.clone_from(&x_y);
                u = 1.0;
                momentum = false;
                diag.restarts += 1;
                continue;
            }
            diag.termination = Termination::Stalled;
            break;
        }

        let step_w = axpy_matrix(&prox.w, -1.0, &x_w);
        let step_y = axpy(&new_y, -1.0, &x_y);
        let u_next = 0.5 * (1.0 + (1.0 + 4.0 * u * u).sqrt());
        let coef = (u - 1.0) / u_next;
        z_w = axpy_matrix(&prox.w, coef, &step_w);
        z_y = axpy(&new_y, coef, &step_y);
        momentum = coef != 0.0;
        u = u_next;

        let change = -delta.min(0.0);
        x_w = prox.w;
        x_y = new_y;
        pen_x = new_f;
        f_x -= change;
        diag.objective_trace.push(f_x);

        exact += delta;
        history.push_back(exact);
        if history.len() > NOISE_WINDOW {
            let old = history.pop_front().unwrap_or(exact);
            if old - exact <= noise {
                diag.termination = Termination::NoiseFloor;
                break;
            }
        }

        if cfg.tol_rel > 0.0 && change <= cfg.tol_rel * f_x.abs().max(1.0) {
            streak += 1;
            if streak >= STOP_STREAK {
                diag.termination = Termination::Converged;
                break;
            }
        } else {
            streak = 0;
        }
    }
    diag.final_objective = f_x;
    diag.stages.push(StageSummary {
        rho: cfg.rho,
        iterations: diag.iterations,
        termination: diag.termination,
    });
    Ok((Ellipsoid { f: x_w, c: x_y }, diag))
}

/// Penalty continuation: solve at `cfg.rho`, then re-solve warm-started with
/// `ρ` raised tenfold per stage up to [`HIGH_ACCURACY_MAX_RHO`]. Continuation
/// stages ignore `tol_rel`, since objective changes shrink with `1/ρ`; they stop
/// when the objective decrease reaches its rounding error (or at `max_iter`).
///
/// The penalized solution deviates from the constrained one by `b/ρ + O(1/ρ²)`,
/// so the last two stages are combined by Richardson extrapolation. If that
/// leaves `λ_min(F) < ε` the last stage is returned unchanged.
pub fn solve_mvie_high_accuracy(
    poly: &HPolytope,
    cfg: &FpgmConfig,
    init: Option<(DenseMatrix, Vec<f64>)>,
) -> Result<(Ellipsoid, SolveDiagnostics)> {
    solve_mvie_continuation(poly, cfg, init, HIGH_ACCURACY_MAX_RHO)
}

/// [`solve_mvie_high_accuracy`] with a custom final penalty weight.
pub fn solve_mvie_continuation(
    poly: &HPolytope,
    cfg: &FpgmConfig,
    init: Option<(DenseMatrix, Vec<f64>)>,
    max_rho: f64,
) -> Result<(Ellipsoid, SolveDiagnostics)> {
    if !(max_rho.is_finite() && max_rho > 0.0) {
        return Err(Error::InvalidParameter(format!("max_rho must be positive, got {max_rho}")));
    }
    let (mut ell, mut diag) = solve_mvie(poly, cfg, init)?;
    let mut rho = cfg.rho;
    let mut previous = None;
    while rho < max_rho {
        let prev_rho = rho;
        rho = (rho * 10.0).min(max_rho);
        let stage_cfg = FpgmConfig {
            rho,
            tol_rel: 0.0,
            ..*cfg
        };
        let (next, stage) = solve_mvie(poly, &stage_cfg, Some((ell.f.clone(), ell.c.clone())))?;
        previous = Some((std::mem::replace(&mut ell, next), prev_rho));
        let mut stages = std::mem::take(&mut diag.stages);
        stages.extend(stage.stages.iter().cloned());
        let total = diag.iterations + stage.iterations;
        let restarts = diag.restarts + stage.restarts;
        diag = stage;
        diag.iterations = total;
        diag.restarts = restarts;
        diag.stages = stages;
    }
    if let Some((before, rho_before)) = previous {
        let combined = richardson(&before, rho_before, &ell, rho)?;
        if eig_sym(&combined.f)?.eigenvalues.iter().all(|&l| l >= cfg.eps) {
            ell = combined;
            diag.extrapolated = true;
        }
    }
    Ok((ell, diag))
}

/// Eliminates the `1/ρ` term from solutions at `ρ₁ < ρ₂`.
fn richardson(a: &Ellipsoid, rho_a: f64, b: &Ellipsoid, rho_b: f64) -> Result<Ellipsoid> {
    let wb = rho_b / (rho_b - rho_a);
    let wa = 1.0 - wb;
    let f = b.f.scale(wb).add(&a.f.scale(wa))?;
    let c = a.c.iter().zip(&b.c).map(|(x, y)| wb * y + wa * x).collect();
    Ok(Ellipsoid { f, c })
}
