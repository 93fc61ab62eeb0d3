//! Recovery quality metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{dot, norm, DenseMatrix};

/// Largest N for which the matching is found by enumerating all permutations.
pub const EXHAUSTIVE_MAX_N: usize = 8;

/// One benchmark trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialResult {
    pub rms_angle_deg: f64,
    pub permutation: Vec<usize>,
    pub runtimes_sec: BTreeMap<String, f64>,
    pub k_facets: usize,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub r: f64,
    pub snr_db: f64,
}

/// Squared angle (radians²) between every true column `i` and estimate `j`.
fn squared_angles(a: &DenseMatrix, a_hat: &DenseMatrix) -> Result<Vec<Vec<f64>>> {
    if a.shape() != a_hat.shape() {
        return Err(Error::DimMismatch(format!(
            "{:?} vs {:?}",
            a.shape(),
            a_hat.shape()
        )));
    }
    let n = a.cols();
    let unit = |m: &DenseMatrix, offset: usize| -> Result<Vec<Vec<f64>>> {
        (0..n)
            .map(|j| {
                let c = m.col(j);
                let nr = norm(&c);
                if nr == 0.0 || !nr.is_finite() {
                    return Err(Error::ZeroColumn(j + offset));
                }
                Ok(c.into_iter().map(|v| v / nr).collect())
            })
            .collect()
    };
    let ua = unit(a, 0)?;
    let ub = unit(a_hat, 0)?;
    Ok(ua
        .iter()
        .map(|x| {
            ub.iter()
                .map(|y| dot(x, y).clamp(-1.0, 1.0).acos().powi(2))
                .collect()
        })
        .collect())
}

fn phi_of(cost: &[Vec<f64>], perm: &[usize]) -> f64 {
    let n = perm.len();
    let s: f64 = perm.iter().enumerate().map(|(i, &p)| cost[i][p]).sum();
    (s / n as f64).sqrt().to_degrees()
}

/// Permutation-aligned RMS angle between columns of `a` and `a_hat`, in degrees.
///
/// Returns `(φ, π)` where column `i` of `a` is matched with column `π[i]` of `a_hat`.
pub fn rms_angle_error(a: &DenseMatrix, a_hat: &DenseMatrix) -> Result<(f64, Vec<usize>)> {
    let cost = squared_angles(a, a_hat)?;
    let n = cost.len();
    if n == 0 {
        return Err(Error::BadDims("no columns".into()));
    }
    let perm = if n <= EXHAUSTIVE_MAX_N {
        best_permutation_exhaustive(&cost)
    } else {
        hungarian(&cost)
    };
    Ok((phi_of(&cost, &perm), perm))
}

/// Heap's algorithm over all `n!` assignments.
fn best_permutation_exhaustive(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let total = |p: &[usize]| -> f64 { p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum() };
    let mut best = perm.clone();
    let mut best_cost = total(&perm);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            let v = total(&perm);
            if v < best_cost {
                best_cost = v;
                best.copy_from_slice(&perm);
            }
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Minimum-cost assignment (Kuhn–Munkres with potentials), O(n³).
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[p[j] - 1] = j - 1;
    }
    perm
}

/// `10·log10(Σ‖xᵢ‖² / Σ‖wᵢ‖²)`; `+∞` for zero noise.
pub fn snr_of(x_clean: &DenseMatrix, noise: &DenseMatrix) -> Result<f64> {
    if x_clean.shape() != noise.shape() {
        return Err(Error::DimMismatch(format!(
            "{:?} vs {:?}",
            x_clean.shape(),
            noise.shape()
        )));
    }
    let signal: f64 = x_clean.as_slice().iter().map(|v| v * v).sum();
    let noise_power: f64 = noise.as_slice().iter().map(|v| v * v).sum();
    if noise_power == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise_power).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn random(m: usize, n: usize, rng: &mut impl Rng) -> DenseMatrix {
        let data = (0..m * n).map(|_| rng.random_range(0.05..1.0)).collect();
        DenseMatrix::new(m, n, data).unwrap()
    }

    #[test]
    fn permuted_copy_has_zero_error() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let a = random(10, 4, &mut rng);
        let order = [2, 0, 3, 1];
        let cols: Vec<Vec<f64>> = order.iter().map(|&j| a.col(j)).collect();
        let b = DenseMatrix::from_cols(&cols).unwrap();
        let (phi, perm) = rms_angle_error(&a, &b).unwrap();
        assert!(phi < 1e-6);
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(order[p], i);
        }
        let (self_phi, _) = rms_angle_error(&a, &a).unwrap();
        assert!(self_phi <= 1e-6);
    }

    #[test]
    fn single_rotated_column() {
        let a = DenseMatrix::identity(4);
        let mut b = a.clone();
        let t = 2f64.to_radians();
        b[(0, 0)] = t.cos();
        b[(1, 0)] = t.sin();
        let (phi, _) = rms_angle_error(&a, &b).unwrap();
        assert!((phi - 1.0).abs() < 1e-9, "{phi}");
    }

    #[test]
    fn zero_column_is_rejected() {
        let a = DenseMatrix::identity(3);
        let mut b = a.clone();
        b[(2, 2)] = 0.0;
        assert!(matches!(rms_angle_error(&a, &b), Err(Error::ZeroColumn(2))));
    }

    #[test]
    fn symmetric_and_scale_invariant() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
        for _ in 0..20 {
            let a = random(8, 5, &mut rng);
            let b = random(8, 5, &mut rng);
            let (p1, _) = rms_angle_error(&a, &b).unwrap();
            let (p2, _) = rms_angle_error(&b, &a).unwrap();
            assert!((p1 - p2).abs() < 1e-10);
            let mut scaled = a.clone();
            for j in 0..5 {
                let s = rng.random_range(0.1..10.0);
                for i in 0..8 {
                    scaled[(i, j)] *= s;
                }
            }
            let (p3, _) = rms_angle_error(&scaled, &b).unwrap();
            assert!((p1 - p3).abs() < 1e-10);
        }
    }

    #[test]
    fn hungarian_agrees_with_enumeration() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        for n in 1..=7 {
            for _ in 0..10 {
                let cost: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..n).map(|_| rng.random::<f64>()).collect())
                    .collect();
                let a = best_permutation_exhaustive(&cost);
                let b = hungarian(&cost);
                assert!((phi_of(&cost, &a) - phi_of(&cost, &b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn snr_behaviour() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
        let (m, l) = (100, 500);
        let gauss = |rng: &mut Xoshiro256PlusPlus| -> DenseMatrix {
            let d = (0..m * l).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            DenseMatrix::new(m, l, d).unwrap()
        };
        let clean = gauss(&mut rng);
        assert_eq!(snr_of(&clean, &DenseMatrix::zeros(m, l)).unwrap(), f64::INFINITY);
        let w = gauss(&mut rng);
        let s1 = snr_of(&clean, &w).unwrap();
        assert!(s1.abs() < 0.1, "{s1}");
        let s2 = snr_of(&clean, &w.scale(2.0)).unwrap();
        assert!((s1 - s2 - 6.02).abs() < 0.1);
        assert_eq!(snr_of(&clean, &clean).unwrap(), 0.0);
        assert!(snr_of(&clean, &DenseMatrix::zeros(1, 1)).is_err());
    }
}
