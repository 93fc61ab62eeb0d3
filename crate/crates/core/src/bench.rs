//! Benchmark harness: synthetic trials over a parameter grid.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_f64;
use crate::metrics::rms_angle_error;
use crate::pipeline::{recover, PipelineConfig};
use crate::recovery::StageTimings;
use crate::synth::{generate, InstanceParams};

pub const RESULTS_HEADER: &str =
    "N,M,L,r,snr_db,seed,status,phi_deg,K,t_dimred,t_hull,t_solve,t_recover,t_total";
pub const AGGREGATE_HEADER: &str = "N,M,L,r,snr_db,trials,ok,phi_mean,phi_std,K_mean,t_total_mean";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub n: usize,
    pub r: f64,
    pub snr_db: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchSpec {
    pub cells: Vec<BenchCell>,
    pub trials: usize,
    pub base_seed: u64,
    pub m: usize,
    pub l: usize,
    pub pipeline: PipelineConfig,
    /// Write zeros in the timing columns so reruns are byte-identical.
    pub no_timings: bool,
}

impl BenchSpec {
    /// Cartesian product of the given parameter lists.
    pub fn grid(ns: &[usize], rs: &[f64], snrs: &[f64]) -> Vec<BenchCell> {
        let mut cells = Vec::new();
        for &n in ns {
            for &r in rs {
                for &snr_db in snrs {
                    cells.push(BenchCell { n, r, snr_db });
                }
            }
        }
        cells
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.cells.is_empty() {
            return Err(Error::InvalidParameter("empty parameter grid".into()));
        }
        for c in &self.cells {
            if c.n < 2 {
                return Err(Error::BadDims(format!("N = {} must be at least 2", c.n)));
            }
            let min = 1.0 / (c.n as f64).sqrt();
            if !(c.r > min && c.r <= 1.0) {
                return Err(Error::InfeasiblePurity { r: c.r, min });
            }
            if c.snr_db.is_nan() {
                return Err(Error::InvalidParameter("SNR is NaN".into()));
            }
        }
        self.pipeline.solver.validate()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRow {
    pub cell: BenchCell,
    pub seed: u64,
    /// `ok`, or `error:<stage>` for failed trials.
    pub status: String,
    pub phi_deg: Option<f64>,
    pub k_facets: Option<usize>,
    pub timings: StageTimings,
}

fn run_trial(spec: &BenchSpec, cell: BenchCell, seed: u64) -> BenchRow {
    let params = InstanceParams {
        n: cell.n,
        m: spec.m,
        l: spec.l,
        r: cell.r,
        snr_db: cell.snr_db,
        seed,
    };
    let mut row = BenchRow {
        cell,
        seed,
        status: String::new(),
        phi_deg: None,
        k_facets: None,
        timings: StageTimings::default(),
    };
    let truth = match generate(&params, None) {
        Ok(t) => t,
        Err(_) => {
            row.status = "error:synth".into();
            return row;
        }
    };
    let cfg = PipelineConfig {
        seed,
        ..spec.pipeline
    };
    match recover(&truth.x, cell.n, &cfg) {
        Ok(report) => match rms_angle_error(&truth.a, &report.a_hat) {
            Ok((phi, _)) => {
                row.status = "ok".into();
                row.phi_deg = Some(phi);
                row.k_facets = Some(report.k_facets);
                if !spec.no_timings {
                    row.timings = report.timings;
                }
            }
            Err(_) => row.status = "error:metrics".into(),
        },
        Err(e) => row.status = format!("error:{}", e.stage),
    }
    row
}

/// Runs every trial of every cell; rows come back in (cell, trial) order.
pub fn run_bench(spec: &BenchSpec) -> Result<Vec<BenchRow>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.cells.len() * spec.trials);
    for &cell in &spec.cells {
        let cell_rows: Vec<BenchRow> = (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(spec, cell, spec.base_seed + t as u64))
            .collect();
        rows.extend(cell_rows);
    }
    Ok(rows)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn results_csv(spec: &BenchSpec, rows: &[BenchRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        let t = &r.timings;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.cell.n,
            spec.m,
            spec.l,
            r.cell.r,
            r.cell.snr_db,
            r.seed,
            r.status,
            opt(r.phi_deg.map(fmt_f64)),
            opt(r.k_facets),
            fmt_f64(t.dimred),
            fmt_f64(t.hull),
            fmt_f64(t.solve),
            fmt_f64(t.recover),
            fmt_f64(t.total),
        );
    }
    out
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-cell mean and sample standard deviation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: BenchCell,
    pub trials: usize,
    pub ok: usize,
    pub phi_mean: f64,
    pub phi_std: f64,
    pub k_mean: f64,
    pub t_total_mean: f64,
}

pub fn summarize(spec: &BenchSpec, rows: &[BenchRow]) -> Vec<CellSummary> {
    spec.cells
        .iter()
        .map(|&cell| {
            let mine: Vec<&BenchRow> = rows.iter().filter(|r| r.cell == cell).collect();
            let phis: Vec<f64> = mine.iter().filter_map(|r| r.phi_deg).collect();
            let ks: Vec<f64> = mine.iter().filter_map(|r| r.k_facets.map(|k| k as f64)).collect();
            let ts: Vec<f64> = mine
                .iter()
                .filter(|r| r.status == "ok")
                .map(|r| r.timings.total)
                .collect();
            let (phi_mean, phi_std) = mean_std(&phis);
            CellSummary {
                cell,
                trials: mine.len(),
                ok: phis.len(),
                phi_mean,
                phi_std,
                k_mean: mean_std(&ks).0,
                t_total_mean: mean_std(&ts).0,
            }
        })
        .collect()
}

pub fn aggregate_csv(spec: &BenchSpec, summaries: &[CellSummary]) -> String {
    let mut out = String::from(AGGREGATE_HEADER);
    out.push('\n');
    for s in summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            s.cell.n,
            spec.m,
            spec.l,
            s.cell.r,
            s.cell.snr_db,
            s.trials,
            s.ok,
            fmt_f64(s.phi_mean),
            fmt_f64(s.phi_std),
            fmt_f64(s.k_mean),
            fmt_f64(s.t_total_mean),
        );
    }
    out
}

/// Runs the benchmark and writes `results.csv` and `aggregate.csv` into `dir`.
pub fn write_bench(spec: &BenchSpec, dir: &Path) -> Result<Vec<CellSummary>> {
    let rows = run_bench(spec)?;
    let summaries = summarize(spec, &rows);
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("results.csv"), results_csv(spec, &rows))?;
    std::fs::write(dir.join("aggregate.csv"), aggregate_csv(spec, &summaries))?;
    Ok(summaries)
}
