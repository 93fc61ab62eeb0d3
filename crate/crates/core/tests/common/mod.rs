//! Test-only oracles and generators, independent of the library's code paths.
#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Uniform points in the unit ball of `R^d` (by rejection from the cube).
pub fn random_ball_points(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let p: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        if p.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            out.push(p);
        }
    }
    out
}

pub fn random_cube_points(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..n)
        .map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect()
}

fn cross(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain; returns unit outward normals and offsets of the hull edges.
pub fn monotone_chain_facets(points: &[Vec<f64>]) -> Vec<(Vec<f64>, f64)> {
    let mut pts: Vec<&Vec<f64>> = points.iter().collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut hull: Vec<&Vec<f64>> = Vec::new();
    for p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    // counter-clockwise order: outward normal of edge a->b is (dy, -dx)
    (0..hull.len())
        .map(|i| {
            let a = hull[i];
            let b = hull[(i + 1) % hull.len()];
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let n = (dx * dx + dy * dy).sqrt();
            let g = vec![dy / n, -dx / n];
            let h = g[0] * a[0] + g[1] * a[1];
            (g, h)
        })
        .collect()
}

fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
        if m[piv][k] == 0.0 {
            return 0.0;
        }
        if piv != k {
            m.swap(piv, k);
            d = -d;
        }
        d *= m[k][k];
        for i in (k + 1)..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    d
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Vertices of `conv(points)` by brute force over all `d`-subsets: a subset
/// spans a supporting hyperplane iff every other point lies on one side of it
/// (orientation determinants share a sign). Assumes general position.
pub fn brute_force_vertices(points: &[Vec<f64>]) -> Vec<usize> {
    let d = points[0].len();
    let mut is_vertex = vec![false; points.len()];
    for subset in combinations(points.len(), d) {
        let orient = |q: &[f64]| -> f64 {
            let base = &points[subset[0]];
            let mut rows: Vec<Vec<f64>> = subset[1..]
                .iter()
                .map(|&i| points[i].iter().zip(base).map(|(a, b)| a - b).collect())
                .collect();
            rows.push(q.iter().zip(base).map(|(a, b)| a - b).collect());
            det(rows)
        };
        let (mut pos, mut neg) = (false, false);
        for (i, p) in points.iter().enumerate() {
            if subset.contains(&i) {
                continue;
            }
            let o = orient(p);
            if o > 0.0 {
                pos = true;
            } else if o < 0.0 {
                neg = true;
            }
            if pos && neg {
                break;
            }
        }
        if !(pos && neg) {
            subset.iter().for_each(|&i| is_vertex[i] = true);
        }
    }
    (0..points.len()).filter(|&i| is_vertex[i]).collect()
}

/// Minimizer of `½(λ − d)² − s·ln d` over `d ≥ eps` by a 10⁵-point grid on
/// `[eps, max(λ, 0) + 4√s + 1]`, refined by ternary search inside the best cell.
pub fn prox_scalar_by_search(lambda: f64, s: f64, eps: f64) -> f64 {
    let phi = |d: f64| 0.5 * (lambda - d) * (lambda - d) - s * d.ln();
    let hi = lambda.max(0.0) + 4.0 * s.sqrt() + 1.0;
    let n = 100_000;
    let h = (hi - eps) / n as f64;
    let mut best = 0;
    let mut best_val = f64::INFINITY;
    for k in 0..=n {
        let v = phi(eps + h * k as f64);
        if v < best_val {
            best_val = v;
            best = k;
        }
    }
    let mut a = (eps + h * (best as f64 - 1.0)).max(eps);
    let mut b = eps + h * (best as f64 + 1.0);
    for _ in 0..200 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if phi(m1) <= phi(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    0.5 * (a + b)
}

fn huber_ref(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z <= 1.0 {
        z * z / 2.0
    } else {
        z - 0.5
    }
}

/// Penalty `Σ ψ(√(‖W g‖² + ε) + gᵀy − h)` written out directly.
pub fn penalty_ref(w: &[Vec<f64>], y: &[f64], facets: &[(Vec<f64>, f64)], eps: f64) -> f64 {
    facets
        .iter()
        .map(|(g, h)| {
            let sq: f64 = w
                .iter()
                .map(|row| row.iter().zip(g).map(|(a, b)| a * b).sum::<f64>().powi(2))
                .sum();
            let gy: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
            huber_ref((sq + eps).sqrt() + gy - h)
        })
        .sum()
}

pub fn random_unit(d: usize, r: &mut Xoshiro256PlusPlus) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Random positive endmember matrix (M×N, row-major rows) with entries in [0.05, 1].
pub fn random_endmembers(m: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..m).map(|_| (0..n).map(|_| r.random_range(0.05..1.0)).collect()).collect()
}

/// Columns: the N endmembers followed by `fillers` strictly interior mixtures.
pub fn pure_pixel_columns(a_rows: &[Vec<f64>], fillers: usize, seed: u64) -> Vec<Vec<f64>> {
    let m = a_rows.len();
    let n = a_rows[0].len();
    let mut r = rng(seed ^ 0x5eed);
    let mix = |s: &[f64]| -> Vec<f64> {
        (0..m).map(|i| (0..n).map(|j| a_rows[i][j] * s[j]).sum()).collect()
    };
    let mut cols = Vec::new();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cols.push(mix(&e));
    }
    for _ in 0..fillers {
        let raw: Vec<f64> = (0..n).map(|_| r.random_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        // pull toward the barycenter so fillers stay off the boundary
        let s: Vec<f64> = raw.iter().map(|v| 0.5 * v / total + 0.5 / n as f64).collect();
        cols.push(mix(&s));
    }
    cols
}

/// `qᵢ = (1/(N−1)) Σ_{j≠i} aⱼ` for the columns of `a_rows`.
pub fn facet_centroids(a_rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a_rows[0].len();
    (0..n)
        .map(|i| {
            a_rows
                .iter()
                .map(|row| {
                    (0..n).filter(|&j| j != i).map(|j| row[j]).sum::<f64>() / (n - 1) as f64
                })
                .collect()
        })
        .collect()
}

/// RMS angle in degrees minimized over every permutation, by recursion.
pub fn brute_force_rms_deg(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let unit = |x: &[f64]| -> Vec<f64> {
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter().map(|v| v / nx).collect()
    };
    let angle2 = |x: &[f64], y: &[f64]| -> f64 {
        let dot: f64 = unit(x).iter().zip(unit(y)).map(|(p, q)| p * q).sum();
        dot.clamp(-1.0, 1.0).acos().powi(2)
    };
    fn rec(i: usize, used: &mut Vec<bool>, acc: f64, cost: &dyn Fn(usize, usize) -> f64, best: &mut f64) {
        let n = used.len();
        if i == n {
            *best = best.min(acc);
            return;
        }
        for j in 0..n {
            if !used[j] {
                used[j] = true;
                rec(i + 1, used, acc + cost(i, j), cost, best);
                used[j] = false;
            }
        }
    }
    let cost = |i: usize, j: usize| angle2(&a[i], &b[j]);
    let mut best = f64::INFINITY;
    rec(0, &mut vec![false; n], 0.0, &cost, &mut best);
    (best / n as f64).sqrt().to_degrees()
}
