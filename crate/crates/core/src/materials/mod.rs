//! Energy densities expressed on flattened derivative vectors.
//!
//! A material names the derivatives it needs through a selector, a list of
//! `(field, multi-index)` pairs. The assembler gathers those derivatives from
//! the operator matrices into one vector `∂u` per point and hands it to the
//! material, which returns the energy density and its first and second
//! derivatives with respect to `∂u`.

mod linear;
mod neo_hooke;
mod von_karman;

pub use linear::{
    elastic3d_d, plane_strain_d, plane_stress_d, plate_d, poisson, QuadraticMaterial,
};
pub use neo_hooke::{cofactor, det3, NeoHooke};
pub use von_karman::VonKarman;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::multi_index::MultiIndex;

/// One entry of a derivative selector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivativeSelector {
    pub field: usize,
    pub index: MultiIndex,
}

impl DerivativeSelector {
    pub fn new(field: usize, index: &[u32]) -> Self {
        Self {
            field,
            index: index.to_vec(),
        }
    }
}

/// Energy density over a derivative vector.
pub trait Material: Sync {
    /// Number of unknown fields per point.
    fn n_fields(&self) -> usize;

    fn selector(&self) -> &[DerivativeSelector];

    fn energy(&self, du: &[f64]) -> Result<f64>;

    fn first_derivative(&self, du: &[f64]) -> Result<DVector<f64>>;

    fn second_derivative(&self, du: &[f64]) -> Result<DMatrix<f64>>;

    /// True when the energy is exactly `½ ∂uᵀ D ∂u` with constant `D`.
    fn is_quadratic(&self) -> bool {
        false
    }
}

/// Unit multi-index along `axis` in `dim` dimensions.
pub(crate) fn unit_index(dim: usize, axis: usize) -> MultiIndex {
    let mut t = vec![0; dim];
    t[axis] = 1;
    t
}

/// Gradient selector `(f_{,x1}, ..., f_{,xd})` for each field in turn.
pub fn gradient_selector(dim: usize, n_fields: usize) -> Vec<DerivativeSelector> {
    (0..n_fields)
        .flat_map(|f| {
            (0..dim).map(move |a| DerivativeSelector {
                field: f,
                index: unit_index(dim, a),
            })
        })
        .collect()
}
