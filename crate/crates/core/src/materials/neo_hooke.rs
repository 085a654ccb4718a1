use nalgebra::{DMatrix, DVector};

use super::{gradient_selector, DerivativeSelector, Material};
use crate::error::{NomError, Result};

/// Determinant of a row-major 3×3 matrix.
pub fn det3(f: &[f64; 9]) -> f64 {
    f[0] * (f[4] * f[8] - f[5] * f[7]) - f[1] * (f[3] * f[8] - f[5] * f[6])
        + f[2] * (f[3] * f[7] - f[4] * f[6])
}

/// Cofactor matrix of a row-major 3×3 matrix, which is `∂J/∂F`.
pub fn cofactor(f: &[f64; 9]) -> [f64; 9] {
    [
        f[4] * f[8] - f[5] * f[7],
        f[5] * f[6] - f[3] * f[8],
        f[3] * f[7] - f[4] * f[6],
        f[2] * f[7] - f[1] * f[8],
        f[0] * f[8] - f[2] * f[6],
        f[1] * f[6] - f[0] * f[7],
        f[1] * f[5] - f[2] * f[4],
        f[2] * f[3] - f[0] * f[5],
        f[0] * f[4] - f[1] * f[3],
    ]
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// `∂²J / ∂F_ij ∂F_kl = ε_ikm ε_jln F_mn` in flattened form.
fn det_hessian(f: &[f64; 9]) -> DMatrix<f64> {
    DMatrix::from_fn(9, 9, |a, b| {
        let (i, j) = (a / 3, a % 3);
        let (k, l) = (b / 3, b % 3);
        let mut s = 0.0;
        for m in 0..3 {
            for n in 0..3 {
                s += levi_civita(i, k, m) * levi_civita(j, l, n) * f[3 * m + n];
            }
        }
        s
    })
}

/// Nearly incompressible Neo-Hooke, `½κ(J-1)² + ½μ(F:F-3)`.
///
/// The derivative vector is the flattened displacement gradient
/// `(u_x, u_y, u_z, v_x, ..., w_z)`, so `F = I + ∇u` row by row.
#[derive(Debug, Clone)]
pub struct NeoHooke {
    kappa: f64,
    mu: f64,
    selector: Vec<DerivativeSelector>,
}

impl NeoHooke {
    pub fn new(kappa: f64, mu: f64) -> Result<Self> {
        if !(kappa > 0.0) || !(mu > 0.0) {
            return Err(NomError::InvalidArgument(format!(
                "Neo-Hooke needs κ > 0 and μ > 0, got κ={kappa}, μ={mu}"
            )));
        }
        Ok(Self {
            kappa,
            mu,
            selector: gradient_selector(3, 3),
        })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Deformation gradient from the displacement gradient; fails when `J ≤ 0`.
    pub fn deformation_gradient(&self, du: &[f64]) -> Result<([f64; 9], f64)> {
        if du.len() != 9 {
            return Err(NomError::DimensionMismatch {
                expected: 9,
                got: du.len(),
            });
        }
        let mut f = [0.0; 9];
        for (k, v) in f.iter_mut().enumerate() {
            *v = du[k] + if k % 4 == 0 { 1.0 } else { 0.0 };
        }
        let j = det3(&f);
        if !(j > 0.0) {
            // the assembler replaces the placeholder with the point index
            return Err(NomError::InvertedElement {
                point: usize::MAX,
                jacobian: j,
            });
        }
        Ok((f, j))
    }

    /// First Piola-Kirchhoff stress `μF + (J-1)κ J_F`, flattened.
    pub fn stress(&self, f: &[f64; 9], j: f64) -> [f64; 9] {
        let c = cofactor(f);
        let mut p = [0.0; 9];
        for k in 0..9 {
            p[k] = self.mu * f[k] + (j - 1.0) * self.kappa * c[k];
        }
        p
    }
}

impl Material for NeoHooke {
    fn n_fields(&self) -> usize {
        3
    }

    fn selector(&self) -> &[DerivativeSelector] {
        &self.selector
    }

    fn energy(&self, du: &[f64]) -> Result<f64> {
        let (f, j) = self.deformation_gradient(du)?;
        let ff: f64 = f.iter().map(|v| v * v).sum();
        Ok(0.5 * self.kappa * (j - 1.0).powi(2) + 0.5 * self.mu * (ff - 3.0))
    }

    fn first_derivative(&self, du: &[f64]) -> Result<DVector<f64>> {
        let (f, j) = self.deformation_gradient(du)?;
        Ok(DVector::from_column_slice(&self.stress(&f, j)))
    }

    fn second_derivative(&self, du: &[f64]) -> Result<DMatrix<f64>> {
        let (f, j) = self.deformation_gradient(du)?;
        let c = DVector::from_column_slice(&cofactor(&f));
        let mut d = det_hessian(&f) * ((j - 1.0) * self.kappa);
        d += &c * c.transpose() * self.kappa;
        for k in 0..9 {
            d[(k, k)] += self.mu;
        }
        Ok(d)
    }
}
