use serde::{Deserialize, Serialize};

use super::Ellipsoid;
use crate::error::{Error, Result};
use crate::numerics::{nnls, solve, DenseMatrix};

/// Residual of John's optimality conditions for an inscribed ellipsoid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JohnCertificate {
    /// `√(‖Σλᵢuᵢ‖² + ‖Σλᵢuᵢuᵢᵀ − I‖²_F)`.
    pub residual: f64,
    pub weights: Vec<f64>,
    /// `‖Σλᵢuᵢ‖`.
    pub centering_error: f64,
    /// `‖Σλᵢuᵢuᵢᵀ − I‖_F`.
    pub moment_error: f64,
}

impl JohnCertificate {
    pub fn holds(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

/// Checks John's conditions at the given contact points. Contacts are mapped
/// to ball coordinates `uᵢ = F⁻¹(qᵢ − c)`; without explicit `weights`, the
/// nonnegative weights minimizing the residual are fitted.
pub fn check_john(
    ellipsoid: &Ellipsoid,
    contacts: &[Vec<f64>],
    weights: Option<&[f64]>,
) -> Result<JohnCertificate> {
    let d = ellipsoid.c.len();
    if ellipsoid.f.shape() != (d, d) {
        return Err(Error::DimMismatch("John check needs a square shape matrix".into()));
    }
    if contacts.len() < d + 1 {
        return Err(Error::TooFewContacts {
            need: d + 1,
            found: contacts.len(),
        });
    }
    let us: Vec<Vec<f64>> = contacts
        .iter()
        .map(|q| {
            if q.len() != d {
                return Err(Error::DimMismatch("contact dimension".into()));
            }
            let diff: Vec<f64> = q.iter().zip(&ellipsoid.c).map(|(a, b)| a - b).collect();
            solve(&ellipsoid.f, &diff)
        })
        .collect::<Result<_>>()?;

    // column i stacks uᵢ and vec(uᵢuᵢᵀ); the target stacks 0 and vec(I)
    let rows = d + d * d;
    let mut b = DenseMatrix::zeros(rows, us.len());
    for (i, u) in us.iter().enumerate() {
        for a in 0..d {
            b[(a, i)] = u[a];
            for c in 0..d {
                b[(d + a * d + c, i)] = u[a] * u[c];
            }
        }
    }
    let mut target = vec![0.0; rows];
    for a in 0..d {
        target[d + a * d + a] = 1.0;
    }
    let lambda = match weights {
        Some(w) => {
            if w.len() != us.len() {
                return Err(Error::DimMismatch("one weight per contact".into()));
            }
            w.to_vec()
        }
        None => nnls(&b, &target)?,
    };
    let fitted = b.mul_vec(&lambda)?;
    let centering_error = fitted[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
    let moment_error = fitted[d..]
        .iter()
        .zip(&target[d..])
        .map(|(x, t)| (x - t) * (x - t))
        .sum::<f64>()
        .sqrt();
    Ok(JohnCertificate {
        residual: centering_error.hypot(moment_error),
        weights: lambda,
        centering_error,
        moment_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disk() -> Ellipsoid {
        Ellipsoid {
            f: DenseMatrix::identity(2),
            c: vec![0.0, 0.0],
        }
    }

    #[test]
    fn symmetric_contacts_certify() {
        let contacts = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]];
        let cert = check_john(&unit_disk(), &contacts, None).unwrap();
        assert!(cert.residual < 1e-12, "{cert:?}");
        for w in &cert.weights {
            assert!((w - 0.5).abs() < 1e-12);
        }
        // explicit unit weights over-count the moment by a factor of two
        let cert = check_john(&unit_disk(), &contacts, Some(&[1.0; 4])).unwrap();
        assert!((cert.moment_error - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn one_sided_contacts_fail() {
        let contacts: Vec<Vec<f64>> = [0.1f64, 0.5, 0.9, 1.3]
            .iter()
            .map(|a| vec![a.cos(), a.sin()])
            .collect();
        let cert = check_john(&unit_disk(), &contacts, None).unwrap();
        assert!(cert.residual > 0.1, "{cert:?}");
        assert!(!cert.holds(1e-6));
    }

    #[test]
    fn too_few_contacts() {
        let contacts = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        assert!(matches!(
            check_john(&unit_disk(), &contacts, None),
            Err(Error::TooFewContacts { .. })
        ));
    }
}
