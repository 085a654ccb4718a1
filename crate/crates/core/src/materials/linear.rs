use nalgebra::{DMatrix, DVector};

use super::{gradient_selector, DerivativeSelector, Material};
use crate::error::{NomError, Result};

/// `½ ∂uᵀ D ∂u` with a constant symmetric `D`.
#[derive(Debug, Clone)]
pub struct QuadraticMaterial {
    selector: Vec<DerivativeSelector>,
    d: DMatrix<f64>,
    n_fields: usize,
}

impl QuadraticMaterial {
    pub fn new(selector: Vec<DerivativeSelector>, d: DMatrix<f64>) -> Result<Self> {
        let n = selector.len();
        if d.shape() != (n, n) {
            return Err(NomError::DimensionMismatch {
                expected: n,
                got: d.nrows(),
            });
        }
        let asym = (&d - d.transpose()).amax();
        if asym > 1e-12 * d.amax().max(f64::MIN_POSITIVE) {
            return Err(NomError::InvalidArgument(
                "material matrix must be symmetric".into(),
            ));
        }
        let n_fields = selector.iter().map(|s| s.field + 1).max().unwrap_or(1);
        Ok(Self {
            selector,
            d,
            n_fields,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }
}

impl Material for QuadraticMaterial {
    fn n_fields(&self) -> usize {
        self.n_fields
    }

    fn selector(&self) -> &[DerivativeSelector] {
        &self.selector
    }

    fn energy(&self, du: &[f64]) -> Result<f64> {
        let v = DVector::from_column_slice(du);
        Ok(0.5 * v.dot(&(&self.d * &v)))
    }

    fn first_derivative(&self, du: &[f64]) -> Result<DVector<f64>> {
        Ok(&self.d * DVector::from_column_slice(du))
    }

    fn second_derivative(&self, _du: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.d.clone())
    }

    fn is_quadratic(&self) -> bool {
        true
    }
}

/// Dirichlet energy `½ |∇u|²` of a scalar field.
pub fn poisson(dim: usize) -> QuadraticMaterial {
    QuadraticMaterial::new(gradient_selector(dim, 1), DMatrix::identity(dim, dim))
        .expect("identity is symmetric")
}

fn check_moduli(e: f64, nu: f64, nu_max: f64) -> Result<()> {
    if !(e > 0.0) || !(nu > -1.0 && nu < nu_max) {
        return Err(NomError::InvalidArgument(format!(
            "moduli out of range: E={e}, ν={nu}"
        )));
    }
    Ok(())
}

/// Plane stress on `(u_x, u_y, v_x, v_y)`.
pub fn plane_stress_d(e: f64, nu: f64) -> Result<QuadraticMaterial> {
    check_moduli(e, nu, 0.5)?;
    let s = (1.0 - nu) / 2.0;
    let d = DMatrix::from_row_slice(
        4,
        4,
        &[
            1.0, 0.0, 0.0, nu, 0.0, s, s, 0.0, 0.0, s, s, 0.0, nu, 0.0, 0.0, 1.0,
        ],
    ) * (e / (1.0 - nu * nu));
    QuadraticMaterial::new(gradient_selector(2, 2), d)
}

/// Plane strain on `(u_x, u_y, v_x, v_y)`.
pub fn plane_strain_d(e: f64, nu: f64) -> Result<QuadraticMaterial> {
    check_moduli(e, nu, 0.5)?;
    let s = 0.5 - nu;
    let a = 1.0 - nu;
    let d = DMatrix::from_row_slice(
        4,
        4,
        &[
            a, 0.0, 0.0, nu, 0.0, s, s, 0.0, 0.0, s, s, 0.0, nu, 0.0, 0.0, a,
        ],
    ) * (e / ((1.0 - 2.0 * nu) * (1.0 + nu)));
    QuadraticMaterial::new(gradient_selector(2, 2), d)
}

/// 3D isotropic elasticity on `(u_x, u_y, u_z, v_x, ..., w_z)`.
pub fn elastic3d_d(lambda: f64, mu: f64) -> Result<QuadraticMaterial> {
    if !(mu > 0.0) || !(3.0 * lambda + 2.0 * mu > 0.0) {
        return Err(NomError::InvalidArgument(format!(
            "moduli out of range: λ={lambda}, μ={mu}"
        )));
    }
    let mut d = DMatrix::zeros(9, 9);
    for a in [0, 4, 8] {
        for b in [0, 4, 8] {
            d[(a, b)] = lambda;
        }
        d[(a, a)] += 2.0 * mu;
    }
    // shear pairs (u_y, v_x), (u_z, w_x), (v_z, w_y)
    for (a, b) in [(1, 3), (2, 6), (5, 7)] {
        d[(a, a)] = mu;
        d[(b, b)] = mu;
        d[(a, b)] = mu;
        d[(b, a)] = mu;
    }
    QuadraticMaterial::new(gradient_selector(3, 3), d)
}

/// Kirchhoff plate on `(w_yy, w_xx, w_xy)`, scaled by `D_0 = E t³ / 12(1-ν²)`.
pub fn plate_d(e: f64, nu: f64, t: f64) -> Result<QuadraticMaterial> {
    check_moduli(e, nu, 1.0)?;
    if !(t > 0.0) {
        return Err(NomError::InvalidArgument(format!(
            "thickness must be positive, got {t}"
        )));
    }
    let d0 = e * t.powi(3) / (12.0 * (1.0 - nu * nu));
    let d = DMatrix::from_row_slice(
        3,
        3,
        &[1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, 2.0 - 2.0 * nu],
    ) * d0;
    let selector = vec![
        DerivativeSelector::new(0, &[0, 2]),
        DerivativeSelector::new(0, &[2, 0]),
        DerivativeSelector::new(0, &[1, 1]),
    ];
    QuadraticMaterial::new(selector, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_stress_zero_poisson() {
        let m = plane_stress_d(2.0, 0.0).unwrap();
        let d = m.matrix();
        assert_eq!(d[(0, 0)], 2.0);
        assert_eq!(d[(1, 1)], 1.0);
        assert_eq!(d[(1, 2)], 1.0);
        assert_eq!(d[(0, 3)], 0.0);
    }

    #[test]
    fn plane_strain_entry() {
        let m = plane_strain_d(1.0, 0.25).unwrap();
        assert!((m.matrix()[(0, 0)] - 1.2).abs() < 1e-15);
        assert!(plane_strain_d(1.0, 0.5).is_err());
        assert!(plane_stress_d(-1.0, 0.2).is_err());
    }

    #[test]
    fn elastic3d_shear_only() {
        let m = elastic3d_d(0.0, 2.0).unwrap();
        let d = m.matrix();
        assert_eq!(d[(0, 0)], 4.0);
        assert_eq!(d[(1, 3)], 2.0);
        assert_eq!(d[(0, 4)], 0.0);
        // pure rotation carries no energy
        let rot = [0.0, 1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!(m.energy(&rot).unwrap().abs() < 1e-15);
    }

    #[test]
    fn plate_matrix() {
        let m = plate_d(30e9, 0.3, 0.01).unwrap();
        let d0 = 30e9 * 1e-6 / (12.0 * 0.91);
        assert!((m.matrix()[(0, 0)] - d0).abs() < 1e-9 * d0);
        assert!((d0 - 2747.252747).abs() < 1e-5);
        let free = plate_d(1.0, 0.0, 1.0).unwrap();
        let d = free.matrix() * 12.0;
        assert_eq!(d[(0, 1)], 0.0);
        assert_eq!(d[(2, 2)], 2.0);
        for nu in [-0.9, 0.0, 0.3, 0.9] {
            let m = plate_d(1.0, nu, 1.0).unwrap();
            let eig = m.matrix().clone().symmetric_eigen().eigenvalues;
            let mut e: Vec<f64> = eig.iter().map(|v| v * 12.0).collect();
            e.sort_by(f64::total_cmp);
            let mut expect = vec![1.0 / (1.0 - nu), 1.0 / (1.0 + nu), 2.0 / (1.0 + nu)];
            expect.sort_by(f64::total_cmp);
            for (a, b) in e.iter().zip(&expect) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadratic_identities() {
        let m = plane_stress_d(3.0, 0.2).unwrap();
        let du = [0.1, -0.2, 0.3, 0.05];
        let g = m.first_derivative(&du).unwrap();
        let e = m.energy(&du).unwrap();
        let dot: f64 = g.iter().zip(&du).map(|(a, b)| a * b).sum();
        assert!((2.0 * e - dot).abs() < 1e-15);
        assert!(QuadraticMaterial::new(
            gradient_selector(2, 1),
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0])
        )
        .is_err());
    }
}
