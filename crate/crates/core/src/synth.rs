//! Synthetic simplex-structured instances: endmember signatures,
//! purity-controlled Dirichlet abundances and additive Gaussian noise.

use std::io::Read;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Gamma, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, norm, svd_thin, DenseMatrix};

const MIN_PAIRWISE_ANGLE_DEG: f64 = 5.0;
const STALL_WINDOW: u64 = 1_000_000;
const STALL_RATE: f64 = 1e-4;
const MAX_REDRAWS: usize = 10_000;

/// Independent RNG stream for one component of an instance.
pub fn stream_rng(seed: u64, stream: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

const STREAM_ENDMEMBERS: u64 = 1;
const STREAM_ABUNDANCES: u64 = 2;
const STREAM_NOISE: u64 = 3;

/// A generated instance together with the factors it was built from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub a: DenseMatrix,
    pub s: DenseMatrix,
    pub x: DenseMatrix,
    pub purity_r: f64,
    #[serde(with = "crate::io::maybe_inf")]
    pub snr_db: f64,
    pub noise_variance: f64,
    pub seed: u64,
}

/// Parameters of one synthetic instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub r: f64,
    #[serde(with = "crate::io::maybe_inf")]
    pub snr_db: f64,
    pub seed: u64,
}

/// Table of reference signatures, one column per material.
#[derive(Debug, Clone)]
pub struct SignatureLibrary {
    pub bands: Vec<f64>,
    pub names: Vec<String>,
    /// bands × materials
    pub signatures: DenseMatrix,
}

impl SignatureLibrary {
    /// Reads `band,name1,...,nameK` CSV with one row per band.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
        if header.len() < 2 {
            return Err(Error::Parse("library header needs a band column and at least one signature".into()));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let mut bands = Vec::new();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("{v:?}: {e}"))))
                .collect::<Result<_>>()?;
            if vals.len() != header.len() {
                return Err(Error::Parse("ragged library row".into()));
            }
            if vals[1..].iter().any(|&v| !v.is_finite() || v < 0.0) {
                return Err(Error::Parse("library reflectances must be finite and nonnegative".into()));
            }
            bands.push(vals[0]);
            rows.push(vals[1..].to_vec());
        }
        let signatures = DenseMatrix::from_rows(&rows)?;
        Ok(Self {
            bands,
            names,
            signatures,
        })
    }
}

fn angle_deg(a: &[f64], b: &[f64]) -> f64 {
    (dot(a, b) / (norm(a) * norm(b))).clamp(-1.0, 1.0).acos().to_degrees()
}

fn well_separated(cols: &[Vec<f64>]) -> bool {
    cols.iter().enumerate().all(|(i, a)| {
        cols[..i]
            .iter()
            .all(|b| angle_deg(a, b) >= MIN_PAIRWISE_ANGLE_DEG)
    })
}

fn full_column_rank(a: &DenseMatrix) -> Result<bool> {
    let k = a.cols();
    let sv = svd_thin(a, k)?;
    Ok(sv.sigma[k - 1] > 1e-8)
}

/// A smooth positive spectrum: a sum of 5–10 Gaussian bumps rescaled to [0.05, 1].
fn synthetic_signature(m: usize, rng: &mut impl Rng) -> Option<Vec<f64>> {
    let bumps = rng.random_range(5..=10);
    let span = m.max(2) as f64;
    let params: Vec<(f64, f64, f64)> = (0..bumps)
        .map(|_| {
            (
                rng.random_range(0.0..span),
                rng.random_range(span / 40.0..span / 4.0).max(0.5),
                rng.random_range(0.1..1.0),
            )
        })
        .collect();
    let raw: Vec<f64> = (0..m)
        .map(|b| {
            params
                .iter()
                .map(|&(mu, w, h)| h * (-0.5 * ((b as f64 - mu) / w).powi(2)).exp())
                .sum()
        })
        .collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m > 1 && hi - lo < 1e-12 {
        return None;
    }
    if m == 1 {
        return Some(vec![rng.random_range(0.05..1.0)]);
    }
    Some(raw.iter().map(|v| 0.05 + 0.95 * (v - lo) / (hi - lo)).collect())
}

/// Draws an `M×N` endmember matrix, from `library` if given, otherwise synthetic.
pub fn sample_endmembers(
    m: usize,
    n: usize,
    seed: u64,
    library: Option<&DenseMatrix>,
) -> Result<DenseMatrix> {
    if n == 0 || n > m {
        return Err(Error::BadDims(format!("need 1 <= N <= M, got N={n}, M={m}")));
    }
    let mut rng = stream_rng(seed, STREAM_ENDMEMBERS);
    match library {
        Some(lib) => {
            if lib.rows() != m {
                return Err(Error::BadDims(format!(
                    "library has {} bands, M = {m}",
                    lib.rows()
                )));
            }
            let k = lib.cols();
            if k < n {
                return Err(Error::LibraryTooSmall { have: k, need: n });
            }
            for _ in 0..MAX_REDRAWS {
                let picks = rand::seq::index::sample(&mut rng, k, n);
                let cols: Vec<Vec<f64>> = picks.iter().map(|j| lib.col(j)).collect();
                let a = DenseMatrix::from_cols(&cols)?;
                if k == n || (well_separated(&cols) && full_column_rank(&a)?) {
                    return Ok(a);
                }
            }
            Err(Error::IllConditionedLibrary(n))
        }
        None => {
            for _ in 0..MAX_REDRAWS {
                let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
                let mut tries = 0;
                while cols.len() < n && tries < MAX_REDRAWS {
                    tries += 1;
                    let Some(c) = synthetic_signature(m, &mut rng) else {
                        continue;
                    };
                    if cols.iter().all(|b| angle_deg(&c, b) >= MIN_PAIRWISE_ANGLE_DEG) {
                        cols.push(c);
                    }
                }
                if cols.len() < n {
                    break;
                }
                let a = DenseMatrix::from_cols(&cols)?;
                if full_column_rank(&a)? {
                    return Ok(a);
                }
            }
            Err(Error::ConvergenceFailure("endmember sampling"))
        }
    }
}

/// Draws `L` abundance columns from a symmetric Dirichlet(1/N) and keeps those
/// whose Euclidean norm is at most `r`.
pub fn sample_abundances(n: usize, l: usize, r: f64, seed: u64) -> Result<DenseMatrix> {
    sample_abundances_with(n, l, r, &mut stream_rng(seed, STREAM_ABUNDANCES))
}

fn sample_abundances_with(
    n: usize,
    l: usize,
    r: f64,
    rng: &mut Xoshiro256PlusPlus,
) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::BadDims("N must be positive".into()));
    }
    let min = 1.0 / (n as f64).sqrt();
    if !(r > min && r <= 1.0) {
        if r > 1.0 || r.is_nan() {
            return Err(Error::InvalidParameter(format!("purity r = {r} must be at most 1")));
        }
        return Err(Error::InfeasiblePurity { r, min });
    }
    let gamma = Gamma::new(1.0 / n as f64, 1.0).expect("positive shape");
    let mut s = DenseMatrix::zeros(n, l);
    let mut accepted = 0usize;
    let (mut window_draws, mut window_hits) = (0u64, 0u64);
    let mut draw = vec![0.0; n];
    while accepted < l {
        draw.iter_mut().for_each(|d| *d = gamma.sample(rng));
        let total: f64 = draw.iter().sum();
        window_draws += 1;
        if total > 0.0 {
            draw.iter_mut().for_each(|d| *d /= total);
            if norm(&draw) <= r {
                s.set_col(accepted, &draw);
                accepted += 1;
                window_hits += 1;
            }
        }
        if window_draws == STALL_WINDOW {
            let rate = window_hits as f64 / window_draws as f64;
            if rate < STALL_RATE {
                return Err(Error::RejectionStall(rate));
            }
            window_draws = 0;
            window_hits = 0;
        }
    }
    Ok(s)
}

/// `X = A S + W` with i.i.d. Gaussian noise scaled to the requested SNR.
///
/// `purity_r` of the result is the largest abundance-column norm actually present.
pub fn assemble_dataset(
    a: &DenseMatrix,
    s: &DenseMatrix,
    snr_db: f64,
    seed: u64,
) -> Result<GroundTruth> {
    if a.cols() != s.rows() {
        return Err(Error::DimMismatch(format!(
            "A is {}x{}, S is {}x{}",
            a.rows(),
            a.cols(),
            s.rows(),
            s.cols()
        )));
    }
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter(format!("snr_db = {snr_db}")));
    }
    let clean = a.matmul(s)?;
    let (m, l) = clean.shape();
    let mut x = clean.clone();
    let mut noise_variance = 0.0;
    if snr_db.is_finite() {
        let power: f64 = clean.as_slice().iter().map(|v| v * v).sum();
        noise_variance = power / ((m * l) as f64 * 10f64.powf(snr_db / 10.0));
        let sd = noise_variance.sqrt();
        let mut rng = stream_rng(seed, STREAM_NOISE);
        for i in 0..m {
            for j in 0..l {
                let w: f64 = rng.sample(StandardNormal);
                x[(i, j)] += sd * w;
            }
        }
    }
    let purity_r = (0..s.cols())
        .map(|j| norm(&s.col(j)))
        .fold(0.0, f64::max);
    Ok(GroundTruth {
        a: a.clone(),
        s: s.clone(),
        x,
        purity_r,
        snr_db,
        noise_variance,
        seed,
    })
}

/// Generates a full instance; abundances are redrawn until `S` has full row rank.
pub fn generate(params: &InstanceParams, library: Option<&DenseMatrix>) -> Result<GroundTruth> {
    let InstanceParams { n, m, l, r, snr_db, seed } = *params;
    if l < n {
        return Err(Error::BadDims(format!("need L >= N, got L={l}, N={n}")));
    }
    let a = sample_endmembers(m, n, seed, library)?;
    let mut rng = stream_rng(seed, STREAM_ABUNDANCES);
    for _ in 0..100 {
        let s = sample_abundances_with(n, l, r, &mut rng)?;
        let st = s.transpose();
        if full_column_rank(&st)? {
            let mut truth = assemble_dataset(&a, &s, snr_db, seed)?;
            truth.purity_r = r;
            return Ok(truth);
        }
    }
    Err(Error::ConvergenceFailure("full-row-rank abundance draw"))
}
