use crate::error::{Error, Result};

/// Euclidean projection onto the unit simplex `{s ≥ 0, 1ᵀs = 1}`.
///
/// Sort-based: find the threshold `θ` such that `Σ max(vᵢ − θ, 0) = 1`.
pub fn project_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotFinite("project_simplex input"));
    }
    if v.is_empty() {
        return Err(Error::BadDims("empty vector".into()));
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    Ok(v.iter().map(|&x| (x - theta).max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn vertex_is_fixed() {
        assert_eq!(project_simplex(&[1.0, 0.0, 0.0]).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn symmetric_input() {
        let p = project_simplex(&[0.5, 0.5, 0.5]).unwrap();
        for x in p {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn far_vertex_matches_grid_search() {
        let v = [2.0, 0.0, 0.0];
        let p = project_simplex(&v).unwrap();
        // dense grid over the 3-simplex
        let steps = 400;
        let mut best = (f64::INFINITY, [0.0; 3]);
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let s = [
                    i as f64 / steps as f64,
                    j as f64 / steps as f64,
                    (steps - i - j) as f64 / steps as f64,
                ];
                let d: f64 = s.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best.0 {
                    best = (d, s);
                }
            }
        }
        for (a, b) in p.iter().zip(best.1) {
            assert!((a - b).abs() < 1.0 / steps as f64);
        }
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_nan() {
        assert!(project_simplex(&[f64::NAN, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn lands_on_simplex_and_is_idempotent(v in prop::collection::vec(-10.0f64..10.0, 1..12)) {
            let p = project_simplex(&v).unwrap();
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let pp = project_simplex(&p).unwrap();
            for (a, b) in p.iter().zip(&pp) {
                prop_assert!((a - b).abs() <= 1e-14);
            }
        }

        #[test]
        fn is_closest_simplex_point(v in prop::collection::vec(-3.0f64..3.0, 2..6), w in prop::collection::vec(0.0f64..1.0, 6)) {
            // any other simplex point is no closer
            let p = project_simplex(&v).unwrap();
            let total: f64 = w[..v.len()].iter().sum::<f64>().max(1e-12);
            let q: Vec<f64> = w[..v.len()].iter().map(|x| x / total).collect();
            let d = |s: &[f64]| s.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            prop_assert!(d(&p) <= d(&q) + 1e-12);
        }
    }
}
