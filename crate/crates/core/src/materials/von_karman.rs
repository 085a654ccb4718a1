use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::{DerivativeSelector, Material};
use crate::error::{NomError, Result};

// positions inside the derivative vector
const U1Y: usize = 0;
const U1X: usize = 1;
const U2Y: usize = 2;
const U2X: usize = 3;
const WY: usize = 4;
const WYY: usize = 5;
const WX: usize = 6;
const WXY: usize = 7;
const WXX: usize = 8;

/// Von Kármán plate energy density on the fields `(u1, u2, w)`.
///
/// Derivative vector: `(u1_y, u1_x, u2_y, u2_x, w_y, w_yy, w_x, w_xy, w_xx)`.
/// Bending is `(D0/2)((Δw)² - 2(1-ν)[w,w])` and the membrane part is
/// `(h/2) ε:σ` with the plane-stress law. The transverse load is not part of
/// the density.
#[derive(Debug, Clone)]
pub struct VonKarman {
    thickness: f64,
    c: Matrix3<f64>,
    bending: Matrix3<f64>,
    selector: Vec<DerivativeSelector>,
}

impl VonKarman {
    pub fn new(e: f64, nu: f64, thickness: f64) -> Result<Self> {
        if !(e > 0.0) || !(thickness > 0.0) || !(nu > -1.0 && nu < 1.0) {
            return Err(NomError::InvalidArgument(format!(
                "Von Kármán plate needs E > 0, h > 0, -1 < ν < 1; got E={e}, ν={nu}, h={thickness}"
            )));
        }
        let s = e / (1.0 - nu * nu);
        let c = Matrix3::new(1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, 2.0 * (1.0 - nu)) * s;
        let d0 = s * thickness.powi(3) / 12.0;
        let bending = Matrix3::new(1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, 2.0 - 2.0 * nu) * d0;
        let selector = vec![
            DerivativeSelector::new(0, &[0, 1]),
            DerivativeSelector::new(0, &[1, 0]),
            DerivativeSelector::new(1, &[0, 1]),
            DerivativeSelector::new(1, &[1, 0]),
            DerivativeSelector::new(2, &[0, 1]),
            DerivativeSelector::new(2, &[0, 2]),
            DerivativeSelector::new(2, &[1, 0]),
            DerivativeSelector::new(2, &[1, 1]),
            DerivativeSelector::new(2, &[2, 0]),
        ];
        Ok(Self {
            thickness,
            c,
            bending,
            selector,
        })
    }

    /// Bending stiffness `E h³ / 12(1-ν²)`.
    pub fn flexural_rigidity(&self) -> f64 {
        self.bending[(0, 0)]
    }

    fn check(du: &[f64]) -> Result<()> {
        if du.len() != 9 {
            return Err(NomError::DimensionMismatch {
                expected: 9,
                got: du.len(),
            });
        }
        Ok(())
    }

    /// Membrane strains `(ε11, ε22, ε12)`.
    pub fn strain(du: &[f64]) -> Vector3<f64> {
        Vector3::new(
            du[U1X] + 0.5 * du[WX] * du[WX],
            du[U2Y] + 0.5 * du[WY] * du[WY],
            0.5 * (du[U1Y] + du[U2X]) + 0.5 * du[WX] * du[WY],
        )
    }

    /// `∂ε/∂(∂u)`, 3 × 9.
    fn strain_jacobian(du: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(3, 9);
        j[(0, U1X)] = 1.0;
        j[(0, WX)] = du[WX];
        j[(1, U2Y)] = 1.0;
        j[(1, WY)] = du[WY];
        j[(2, U1Y)] = 0.5;
        j[(2, U2X)] = 0.5;
        j[(2, WX)] = 0.5 * du[WY];
        j[(2, WY)] = 0.5 * du[WX];
        j
    }

    fn curvatures(du: &[f64]) -> Vector3<f64> {
        Vector3::new(du[WYY], du[WXX], du[WXY])
    }
}

const CURVATURE_SLOTS: [usize; 3] = [WYY, WXX, WXY];

impl Material for VonKarman {
    fn n_fields(&self) -> usize {
        3
    }

    fn selector(&self) -> &[DerivativeSelector] {
        &self.selector
    }

    fn energy(&self, du: &[f64]) -> Result<f64> {
        Self::check(du)?;
        let e = Self::strain(du);
        let k = Self::curvatures(du);
        Ok(0.5 * self.thickness * e.dot(&(self.c * e)) + 0.5 * k.dot(&(self.bending * k)))
    }

    fn first_derivative(&self, du: &[f64]) -> Result<DVector<f64>> {
        Self::check(du)?;
        let ce = self.c * Self::strain(du);
        let j = Self::strain_jacobian(du);
        let mut g = j.transpose() * DVector::from_column_slice(ce.as_slice()) * self.thickness;
        let m = self.bending * Self::curvatures(du);
        for (a, &slot) in CURVATURE_SLOTS.iter().enumerate() {
            g[slot] += m[a];
        }
        Ok(g)
    }

    fn second_derivative(&self, du: &[f64]) -> Result<DMatrix<f64>> {
        Self::check(du)?;
        let ce = self.c * Self::strain(du);
        let j = Self::strain_jacobian(du);
        let c = DMatrix::from_column_slice(3, 3, self.c.as_slice());
        let mut h = j.transpose() * c * &j;
        // second derivatives of the strains only involve the slopes of w
        h[(WX, WX)] += ce[0];
        h[(WY, WY)] += ce[1];
        h[(WX, WY)] += 0.5 * ce[2];
        h[(WY, WX)] += 0.5 * ce[2];
        h *= self.thickness;
        for (a, &sa) in CURVATURE_SLOTS.iter().enumerate() {
            for (b, &sb) in CURVATURE_SLOTS.iter().enumerate() {
                h[(sa, sb)] += self.bending[(a, b)];
            }
        }
        Ok(h)
    }
}
