//! End-to-end blind recovery: reduce, enumerate facets, solve, read off contacts.

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dimred::{affine_fit, lift_point, reduce_points};
use crate::error::Error;
use crate::hull::enumerate_facets_of_columns;
use crate::mvie::{solve_mvie, solve_mvie_continuation, FpgmConfig, HIGH_ACCURACY_MAX_RHO};
use crate::numerics::DenseMatrix;
use crate::recovery::{
    consolidate_contacts, find_contacts, reconstruct_endmembers, recover_abundances,
    RecoveryReport, StageTimings, DEFAULT_TAU,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Io,
    Config,
    Synth,
    Dimred,
    Hull,
    Solve,
    Contacts,
    Recover,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Io => "io",
            Stage::Config => "config",
            Stage::Synth => "synth",
            Stage::Dimred => "dimred",
            Stage::Hull => "hull",
            Stage::Solve => "solve",
            Stage::Contacts => "contacts",
            Stage::Recover => "recover",
        };
        f.write_str(s)
    }
}

/// A module error tagged with the pipeline stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("stage {stage}: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T> AtStage<T> for crate::Result<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

pub fn stage_error(stage: Stage, source: Error) -> PipelineError {
    PipelineError { stage, source }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub solver: FpgmConfig,
    /// Relative contact slack threshold.
    pub tau: f64,
    /// Run penalty continuation after the first solve.
    pub high_accuracy: bool,
    /// Final penalty weight of the continuation.
    pub max_rho: f64,
    /// Seed for contact consolidation.
    pub seed: u64,
    pub emit_shat: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            solver: FpgmConfig::default(),
            tau: DEFAULT_TAU,
            high_accuracy: false,
            max_rho: HIGH_ACCURACY_MAX_RHO,
            seed: 0,
            emit_shat: false,
        }
    }
}

/// Estimates `N` endmembers from the columns of `x` (M×L).
pub fn recover(x: &DenseMatrix, n: usize, cfg: &PipelineConfig) -> Result<RecoveryReport, PipelineError> {
    let start = Instant::now();
    let mut timings = StageTimings::default();
    let mut warnings = Vec::new();

    let t = Instant::now();
    let chart = affine_fit(x, n).at(Stage::Dimred)?;
    if !chart.is_model_consistent() {
        warnings.push(format!(
            "data is off the fitted affine set (relative residual {:.3e}); noiseless model assumptions do not hold",
            chart.relative_residual
        ));
    }
    let reduced = reduce_points(x, &chart).at(Stage::Dimred)?;
    timings.dimred = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let poly = enumerate_facets_of_columns(&reduced).at(Stage::Hull)?;
    timings.hull = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let (ellipsoid, diagnostics) = if cfg.high_accuracy {
        solve_mvie_continuation(&poly, &cfg.solver, None, cfg.max_rho)
    } else {
        solve_mvie(&poly, &cfg.solver, None)
    }
    .at(Stage::Solve)?;
    timings.solve = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let found = find_contacts(&ellipsoid, &poly, cfg.tau).at(Stage::Contacts)?;
    let contacts_reduced = consolidate_contacts(&found.points, n, cfg.seed).at(Stage::Contacts)?;
    let contacts_ambient = contacts_reduced
        .iter()
        .map(|q| lift_point(q, &chart))
        .collect::<crate::Result<Vec<_>>>()
        .at(Stage::Recover)?;
    let a_hat = reconstruct_endmembers(&contacts_ambient, n).at(Stage::Recover)?;
    let s_hat = if cfg.emit_shat {
        Some(recover_abundances(x, &a_hat).at(Stage::Recover)?)
    } else {
        None
    };
    let center_ambient = lift_point(&ellipsoid.c, &chart).at(Stage::Recover)?;
    timings.recover = t.elapsed().as_secs_f64();
    timings.total = start.elapsed().as_secs_f64();

    Ok(RecoveryReport {
        a_hat,
        contacts_reduced,
        contacts_ambient,
        raw_contact_count: found.points.len(),
        s_hat,
        ellipsoid,
        center_ambient,
        diagnostics,
        k_facets: poly.num_facets(),
        slack_histogram: found.slack_histogram,
        affine_residual: chart.relative_residual,
        timings,
        warnings,
    })
}
