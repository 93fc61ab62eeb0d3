//! Contact points, endmember reconstruction and abundance recovery.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hull::HPolytope;
use crate::mvie::{Ellipsoid, SolveDiagnostics};
use crate::numerics::{dot, eig_sym, kmeans, lstsq, norm, project_simplex, DenseMatrix};

/// Default relative slack below which a facet counts as touching the ellipsoid.
pub const DEFAULT_TAU: f64 = 1e-5;
const ABUNDANCE_MAX_ITER: usize = 5000;
const ABUNDANCE_TOL: f64 = 1e-9;

/// Count of facets whose relative slack falls in `[lower, upper)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactSearch {
    pub points: Vec<Vec<f64>>,
    /// Facet index that produced each point.
    pub facets: Vec<usize>,
    pub tau: f64,
    pub slack_histogram: Vec<SlackBin>,
}

/// Relative slack `(hᵢ − ‖Fgᵢ‖ − gᵢᵀc) / max(1, |hᵢ|)` of every facet.
pub fn relative_slacks(ell: &Ellipsoid, poly: &HPolytope) -> Result<Vec<f64>> {
    poly.facets
        .iter()
        .map(|f| {
            let fg = ell.f.mul_vec(&f.normal)?;
            Ok((f.offset - norm(&fg) - dot(&f.normal, &ell.c)) / f.offset.abs().max(1.0))
        })
        .collect()
}

/// Decade histogram of relative slacks; the first bin collects violated
/// facets, the last bin everything at or above 1.
pub fn slack_histogram(slacks: &[f64]) -> Vec<SlackBin> {
    let mut bins = vec![SlackBin {
        lower: f64::NEG_INFINITY,
        upper: 0.0,
        count: 0,
    }];
    bins.push(SlackBin {
        lower: 0.0,
        upper: 1e-12,
        count: 0,
    });
    for e in -12..0 {
        bins.push(SlackBin {
            lower: 10f64.powi(e),
            upper: 10f64.powi(e + 1),
            count: 0,
        });
    }
    bins.push(SlackBin {
        lower: 1.0,
        upper: f64::INFINITY,
        count: 0,
    });
    for &s in slacks {
        if let Some(b) = bins.iter_mut().find(|b| s >= b.lower && s < b.upper) {
            b.count += 1;
        }
    }
    bins
}

/// Tangency points `F(Fg/‖Fg‖) + c` of the facets whose relative slack is at
/// most `tau`.
pub fn find_contacts(ell: &Ellipsoid, poly: &HPolytope, tau: f64) -> Result<ContactSearch> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    if ell.c.len() != poly.dim {
        return Err(Error::DimMismatch("ellipsoid and polytope dimensions".into()));
    }
    let slacks = relative_slacks(ell, poly)?;
    let mut points = Vec::new();
    let mut facets = Vec::new();
    for (i, (f, &s)) in poly.facets.iter().zip(&slacks).enumerate() {
        if s > tau {
            continue;
        }
        let fg = ell.f.mul_vec(&f.normal)?;
        let nr = norm(&fg);
        if nr == 0.0 {
            continue;
        }
        let dir: Vec<f64> = fg.iter().map(|v| v / nr).collect();
        let mut q = ell.f.mul_vec(&dir)?;
        q.iter_mut().zip(&ell.c).for_each(|(v, c)| *v += c);
        points.push(q);
        facets.push(i);
    }
    if points.is_empty() {
        let smallest = slacks.iter().copied().fold(f64::INFINITY, f64::min);
        return Err(Error::NoContacts(smallest));
    }
    Ok(ContactSearch {
        points,
        facets,
        tau,
        slack_histogram: slack_histogram(&slacks),
    })
}

/// Reduces the candidate contacts to exactly `n` points by k-means.
pub fn consolidate_contacts(candidates: &[Vec<f64>], n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if candidates.len() < n {
        return Err(Error::TooFewContacts {
            need: n,
            found: candidates.len(),
        });
    }
    if candidates.len() == n {
        return Ok(candidates.to_vec());
    }
    Ok(kmeans(candidates, n, seed)?.centroids)
}

/// `aᵢ = Σⱼ qⱼ − (N−1)qᵢ`, column by column.
pub fn reconstruct_endmembers(contacts: &[Vec<f64>], n: usize) -> Result<DenseMatrix> {
    if contacts.len() != n || n < 2 {
        return Err(Error::WrongCount {
            expected: n,
            got: contacts.len(),
        });
    }
    let m = contacts[0].len();
    if contacts.iter().any(|q| q.len() != m) {
        return Err(Error::DimMismatch("contacts of unequal length".into()));
    }
    let total: Vec<f64> = (0..m).map(|r| contacts.iter().map(|q| q[r]).sum()).collect();
    let k = (n - 1) as f64;
    let cols: Vec<Vec<f64>> = contacts
        .iter()
        .map(|q| total.iter().zip(q).map(|(t, v)| t - k * v).collect())
        .collect();
    DenseMatrix::from_cols(&cols)
}

/// Solves `min ‖x − A s‖²` over the unit simplex for every column of `x`.
pub fn recover_abundances(x: &DenseMatrix, a_hat: &DenseMatrix) -> Result<DenseMatrix> {
    let (m, n) = a_hat.shape();
    if x.rows() != m {
        return Err(Error::DimMismatch(format!(
            "data has {} rows, A has {m}",
            x.rows()
        )));
    }
    if n == 0 {
        return Err(Error::RankDeficientA);
    }
    let gram = a_hat.gram();
    let eig = eig_sym(&gram)?;
    let l_max = eig.eigenvalues[0];
    let l_min = eig.eigenvalues[n - 1];
    if !(l_max > 0.0) || l_min <= 1e-14 * l_max {
        return Err(Error::RankDeficientA);
    }
    let step = 1.0 / l_max;
    let columns: Vec<Vec<f64>> = (0..x.cols())
        .into_par_iter()
        .map(|j| {
            let xj = x.col(j);
            let atx = a_hat.tr_mul_vec(&xj)?;
            let start = project_simplex(&lstsq(a_hat, &xj)?)?;
            simplex_least_squares(&gram, &atx, start, step)
        })
        .collect::<Result<_>>()?;
    let mut s = DenseMatrix::zeros(n, x.cols());
    for (j, c) in columns.iter().enumerate() {
        s.set_col(j, c);
    }
    Ok(s)
}

/// Accelerated projected gradient on `½sᵀGs − bᵀs` over the simplex.
fn simplex_least_squares(gram: &DenseMatrix, b: &[f64], start: Vec<f64>, step: f64) -> Result<Vec<f64>> {
    let value = |s: &[f64]| -> Result<f64> { Ok(0.5 * dot(s, &gram.mul_vec(s)?) - dot(b, s)) };
    let grad = |s: &[f64]| -> Result<Vec<f64>> {
        Ok(gram.mul_vec(s)?.iter().zip(b).map(|(g, bi)| g - bi).collect())
    };
    let mut s = start;
    let mut f_s = value(&s)?;
    let mut z = s.clone();
    let mut u = 1.0f64;
    for _ in 0..ABUNDANCE_MAX_ITER {
        let g = grad(&z)?;
        let trial: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi - step * gi).collect();
        let next = project_simplex(&trial)?;
        let f_next = value(&next)?;
        if f_next > f_s {
            // restart momentum
            z.clone_from(&s);
            u = 1.0;
            continue;
        }
        let u_next = 0.5 * (1.0 + (1.0 + 4.0 * u * u).sqrt());
        let coef = (u - 1.0) / u_next;
        z = next.iter().zip(&s).map(|(a, b)| a + coef * (a - b)).collect();
        u = u_next;
        s = next;
        f_s = f_next;

        // gradient-mapping residual at the iterate
        let gs = grad(&s)?;
        let probe: Vec<f64> = s.iter().zip(&gs).map(|(si, gi)| si - step * gi).collect();
        let mapped = project_simplex(&probe)?;
        let residual = s.iter().zip(&mapped).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual <= ABUNDANCE_TOL {
            break;
        }
    }
    Ok(s)
}

/// Per-stage wall-clock seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub dimred: f64,
    pub hull: f64,
    pub solve: f64,
    pub recover: f64,
    pub total: f64,
}

/// Everything the pipeline produces for one data matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryReport {
    #[serde(rename = "A_hat")]
    pub a_hat: DenseMatrix,
    pub contacts_reduced: Vec<Vec<f64>>,
    pub contacts_ambient: Vec<Vec<f64>>,
    pub raw_contact_count: usize,
    #[serde(rename = "S_hat", skip_serializing_if = "Option::is_none", default)]
    pub s_hat: Option<DenseMatrix>,
    /// Solved ellipsoid in reduced coordinates.
    pub ellipsoid: Ellipsoid,
    /// Ellipsoid center mapped back to the data space.
    pub center_ambient: Vec<f64>,
    pub diagnostics: SolveDiagnostics,
    #[serde(rename = "K")]
    pub k_facets: usize,
    pub slack_histogram: Vec<SlackBin>,
    pub affine_residual: f64,
    pub timings: StageTimings,
    pub warnings: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> HPolytope {
        HPolytope::from_halfspaces(
            2,
            &[
                (vec![1.0, 0.0], 1.0),
                (vec![-1.0, 0.0], 1.0),
                (vec![0.0, 1.0], 1.0),
                (vec![0.0, -1.0], 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn unit_disk_touches_square_four_times() {
        let ell = Ellipsoid {
            f: DenseMatrix::identity(2),
            c: vec![0.0, 0.0],
        };
        let found = find_contacts(&ell, &square(), 1e-6).unwrap();
        assert_eq!(found.points.len(), 4);
        for q in &found.points {
            let mut sorted: Vec<f64> = q.iter().map(|v| v.abs()).collect();
            sorted.sort_by(f64::total_cmp);
            assert!(sorted[0] < 1e-15 && (sorted[1] - 1.0).abs() < 1e-15);
        }
        assert_eq!(found.slack_histogram.iter().map(|b| b.count).sum::<usize>(), 4);
    }

    #[test]
    fn shrunken_disk_has_no_contacts() {
        let ell = Ellipsoid {
            f: DenseMatrix::identity(2).scale(0.5),
            c: vec![0.0, 0.0],
        };
        assert!(matches!(find_contacts(&ell, &square(), 1e-6), Err(Error::NoContacts(_))));
    }

    #[test]
    fn consolidation_counts() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(consolidate_contacts(&pts, 3, 0).unwrap(), pts);
        assert!(matches!(
            consolidate_contacts(&pts[..2], 3, 0),
            Err(Error::TooFewContacts { need: 3, found: 2 })
        ));
    }

    #[test]
    fn identity_from_edge_midpoints() {
        let q = vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]];
        let a = reconstruct_endmembers(&q, 3).unwrap();
        assert_eq!(a, DenseMatrix::identity(3));
        let same = vec![vec![2.0, -1.0]; 4];
        let a = reconstruct_endmembers(&same, 4).unwrap();
        for j in 0..4 {
            assert_eq!(a.col(j), vec![2.0, -1.0]);
        }
        assert!(matches!(reconstruct_endmembers(&q, 4), Err(Error::WrongCount { .. })));
    }

    #[test]
    fn vertex_datum_recovers_unit_vector() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 0.2, 0.1],
            vec![0.1, 0.9, 0.3],
            vec![0.0, 0.4, 1.1],
            vec![0.3, 0.3, 0.2],
        ])
        .unwrap();
        let x = DenseMatrix::from_cols(&[a.col(0)]).unwrap();
        let s = recover_abundances(&x, &a).unwrap();
        assert!((s[(0, 0)] - 1.0).abs() < 1e-9);
        assert!(s[(1, 0)].abs() < 1e-9 && s[(2, 0)].abs() < 1e-9);
    }

    #[test]
    fn rank_deficient_a_is_rejected() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let x = DenseMatrix::zeros(2, 1);
        assert!(matches!(recover_abundances(&x, &a), Err(Error::RankDeficientA)));
    }
}
