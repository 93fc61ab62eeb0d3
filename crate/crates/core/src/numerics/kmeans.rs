use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};

const MAX_ITER: usize = 100;
const REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Sum of squared distances to the assigned centroid.
    pub objective: f64,
    /// Objective after each assignment step; non-increasing.
    pub trace: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with k-means++ seeding, deterministic in `seed`.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewPoints {
            needed: k,
            got: points.len(),
        });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimMismatch("points of differing dimension".into()));
    }
    if points.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NotFinite("kmeans points"));
    }

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(points, k, &mut rng)?;
    let mut labels = vec![0usize; points.len()];
    let mut trace = Vec::new();

    let mut objective = assign(points, &centroids, &mut labels);
    trace.push(objective);
    for _ in 0..MAX_ITER {
        // update step
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, x)| *s += x);
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        let prev_labels = labels.clone();
        let mut next = assign(points, &centroids, &mut labels);
        next = repair_empty(points, &mut centroids, &mut labels, next)?;
        let change = objective - next;
        objective = next;
        trace.push(objective);
        if labels == prev_labels || change.abs() <= REL_TOL * objective.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(KMeansResult {
        centroids,
        labels,
        objective,
        trace,
    })
}

fn seed_plus_plus(
    points: &[Vec<f64>],
    k: usize,
    rng: &mut Xoshiro256PlusPlus,
) -> Result<Vec<Vec<f64>>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateCluster(k));
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).expect("positive total");
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        let c = points[pick].clone();
        for (di, p) in d2.iter_mut().zip(points) {
            *di = di.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    Ok(centroids)
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut obj = 0.0;
    for (p, l) in points.iter().zip(labels.iter_mut()) {
        let (best, d) = centroids
            .iter()
            .enumerate()
            .map(|(c, cen)| (c, sq_dist(p, cen)))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        *l = best;
        obj += d;
    }
    obj
}

/// Moves each empty cluster onto the point currently farthest from its centroid.
fn repair_empty(
    points: &[Vec<f64>],
    centroids: &mut [Vec<f64>],
    labels: &mut [usize],
    mut objective: f64,
) -> Result<f64> {
    let k = centroids.len();
    for _ in 0..k {
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return Ok(objective);
        };
        let (far, far_d) = points
            .iter()
            .zip(labels.iter())
            .enumerate()
            .map(|(i, (p, &l))| (i, sq_dist(p, &centroids[l])))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if far_d <= 0.0 {
            return Err(Error::DegenerateCluster(k));
        }
        centroids[empty] = points[far].clone();
        objective = assign(points, centroids, labels);
    }
    Ok(objective)
}
