//! Per-point nonlocal operators.
//!
//! For a point `i` with neighbors `j_1..j_m`, the scaled Taylor expansion
//! `u_j - u_i = p^h(r_j) · ∂^h u_i` is fitted in the weighted least-squares
//! sense with weights `w(r_j) ΔV_j`. The fit is linear in the nodal values,
//! which gives the operator matrix `B_i` mapping the stacked values
//! `(u_i, u_{j_1}, ..., u_{j_m})` to all derivatives up to order `p`.
//!
//! The fit residual defines the stabilization matrix
//! `M_i = W_i - P_wᵀ G⁻¹ P_w` (with `G` the moment matrix), which penalizes
//! nodal patterns invisible to `B_i` (hourglass modes).
//!
//! The fit is computed from a column-pivoted QR of `W^{1/2} Pᵀ` rather than by
//! inverting `G`, so the conditioning of `G` is never squared.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dense::PivotedQr;
use crate::error::{NomError, Result};
use crate::multi_index::{scaling_matrix, MultiIndexSet};
use crate::point_cloud::{PointCloud, SupportTable};

/// Supports whose moment matrix has a reciprocal condition estimate below
/// this value are rejected.
pub const DEFAULT_RCOND_MIN: f64 = 1e-12;

/// Stabilization data of one support.
#[derive(Debug, Clone)]
pub struct Stabilization {
    /// `n_i × n_i` symmetric PSD matrix acting on `Δu = u_j - u_i`.
    pub m: DMatrix<f64>,
    /// `m_i = Σ_j w |r_j|² ΔV_j`.
    pub m_norm: f64,
}

impl Stabilization {
    /// Hourglass stiffness on the stacked stencil `(i, j_1, ..., j_m)`:
    /// `(p_hg/m_i) [[Σv, -vᵀ], [-v, M]]` with `v` the row sums of `M`.
    pub fn hourglass_stiffness(&self, p_hg: f64) -> DMatrix<f64> {
        let n = self.m.nrows();
        let scale = p_hg / self.m_norm;
        let v: Vec<f64> = (0..n).map(|r| self.m.row(r).sum()).collect();
        let mut k = DMatrix::zeros(n + 1, n + 1);
        k[(0, 0)] = scale * v.iter().sum::<f64>();
        for a in 0..n {
            k[(0, a + 1)] = -scale * v[a];
            k[(a + 1, 0)] = -scale * v[a];
            for b in 0..n {
                k[(a + 1, b + 1)] = scale * self.m[(a, b)];
            }
        }
        k
    }

    /// `Δuᵀ M Δu` for stacked stencil values.
    pub fn fit_residual_energy(&self, stacked: &[f64]) -> f64 {
        let du =
            DVector::from_iterator(self.m.nrows(), stacked[1..].iter().map(|v| v - stacked[0]));
        du.dot(&(&self.m * &du))
    }
}

/// Operator data of one point.
#[derive(Debug, Clone)]
pub struct PointOperator {
    /// `[i, j_1, ..., j_m]`.
    pub stencil: Vec<usize>,
    /// `n_p × (1 + m)` operator matrix.
    pub b: DMatrix<f64>,
    /// Reciprocal condition estimate of the moment matrix.
    pub rcond: f64,
    pub stabilization: Option<Stabilization>,
}

impl PointOperator {
    /// All derivatives at the center from stacked stencil values.
    pub fn derivatives(&self, stacked: &[f64]) -> Result<Vec<f64>> {
        if stacked.len() != self.stencil.len() {
            return Err(NomError::DimensionMismatch {
                expected: self.stencil.len(),
                got: stacked.len(),
            });
        }
        let v = DVector::from_column_slice(stacked);
        Ok((&self.b * v).as_slice().to_vec())
    }

    /// Gathers the stencil values of a global scalar field.
    pub fn gather(&self, field: &[f64]) -> Vec<f64> {
        self.stencil.iter().map(|&j| field[j]).collect()
    }
}

/// Options for building operators.
#[derive(Debug, Clone, Copy)]
pub struct OperatorOptions {
    pub order: usize,
    pub rcond_min: f64,
    pub stabilization: bool,
}

impl OperatorOptions {
    pub fn new(order: usize) -> Self {
        Self {
            order,
            rcond_min: DEFAULT_RCOND_MIN,
            stabilization: false,
        }
    }

    pub fn with_stabilization(mut self, on: bool) -> Self {
        self.stabilization = on;
        self
    }
}

/// Operators of every point of a cloud for one multi-index set.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub indexes: MultiIndexSet,
    pub ops: Vec<PointOperator>,
}

impl OperatorSet {
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn get(&self, i: usize) -> &PointOperator {
        &self.ops[i]
    }

    /// All derivatives of a global scalar field at point `i`.
    pub fn derivatives_of(&self, i: usize, field: &[f64]) -> Vec<f64> {
        let op = &self.ops[i];
        op.derivatives(&op.gather(field))
            .expect("stencil gather has matching length")
    }

    pub fn min_rcond(&self) -> f64 {
        self.ops
            .iter()
            .map(|o| o.rcond)
            .fold(f64::INFINITY, f64::min)
    }
}

fn offsets(cloud: &PointCloud, i: usize, j: usize) -> Vec<f64> {
    cloud
        .point(j)
        .iter()
        .zip(cloud.point(i))
        .map(|(a, b)| a - b)
        .collect()
}

/// Moment matrix `Σ_j w(r_j) p^h_j ⊗ p^h_j ΔV_j` of point `i`.
pub fn moment_matrix(
    cloud: &PointCloud,
    supports: &SupportTable,
    set: &MultiIndexSet,
    i: usize,
) -> Result<DMatrix<f64>> {
    let np = set.len();
    let h = supports.h(i);
    let mut g = DMatrix::zeros(np, np);
    let mut p = vec![0.0; np];
    for (&j, &w) in supports.neighbors(i).iter().zip(supports.weights(i)) {
        set.monomials_into(&offsets(cloud, i, j), h, &mut p);
        let s = w * cloud.volume(j);
        for a in 0..np {
            for b in 0..np {
                g[(a, b)] += s * p[a] * p[b];
            }
        }
    }
    let m = supports.neighbors(i).len();
    if m < np {
        return Err(NomError::SingularSupport {
            point: i,
            rcond: 0.0,
            neighbors: m,
            terms: np,
        });
    }
    Ok(g)
}

/// Builds the operator matrix (and optionally the stabilization data) of point `i`.
pub fn build_point_operator(
    cloud: &PointCloud,
    supports: &SupportTable,
    set: &MultiIndexSet,
    i: usize,
    options: &OperatorOptions,
) -> Result<PointOperator> {
    let nbrs = supports.neighbors(i);
    let weights = supports.weights(i);
    let m = nbrs.len();
    let np = set.len();
    if m < np {
        return Err(NomError::SingularSupport {
            point: i,
            rcond: 0.0,
            neighbors: m,
            terms: np,
        });
    }
    let h = supports.h(i);
    let sqrt_w: Vec<f64> = nbrs
        .iter()
        .zip(weights)
        .map(|(&j, &w)| (w * cloud.volume(j)).sqrt())
        .collect();
    let mut a = DMatrix::zeros(m, np);
    let mut p = vec![0.0; np];
    let mut m_norm = 0.0;
    for (row, &j) in nbrs.iter().enumerate() {
        let r = offsets(cloud, i, j);
        set.monomials_into(&r, h, &mut p);
        for c in 0..np {
            a[(row, c)] = sqrt_w[row] * p[c];
        }
        m_norm += sqrt_w[row] * sqrt_w[row] * r.iter().map(|x| x * x).sum::<f64>();
    }
    let qr = PivotedQr::new(a);
    let rcond = qr.gram_rcond();
    if !(rcond >= options.rcond_min) {
        return Err(NomError::SingularSupport {
            point: i,
            rcond,
            neighbors: m,
            terms: np,
        });
    }
    // X = Π R⁻¹ Qᵀ W^{1/2}: scaled derivatives from neighbor differences
    let mut qt_w = qr.q.transpose();
    for c in 0..m {
        for r in 0..np {
            qt_w[(r, c)] *= sqrt_w[c];
        }
    }
    qr.solve_r_in_place(&mut qt_w);
    let scaling = scaling_matrix(set, h)?;
    let mut b = DMatrix::zeros(np, m + 1);
    for (k, &row) in qr.perm.iter().enumerate() {
        let inv_h = 1.0 / scaling.diag[row];
        let mut sum = 0.0;
        for c in 0..m {
            let v = qt_w[(k, c)] * inv_h;
            b[(row, c + 1)] = v;
            sum += v;
        }
        b[(row, 0)] = -sum;
    }
    let stabilization = if options.stabilization {
        let qqt = &qr.q * qr.q.transpose();
        let mm = DMatrix::from_fn(m, m, |r, c| {
            let delta = if r == c { 1.0 } else { 0.0 };
            sqrt_w[r] * sqrt_w[c] * (delta - qqt[(r, c)])
        });
        // symmetrize against rounding in QQᵀ
        let mm = (&mm + mm.transpose()) * 0.5;
        Some(Stabilization { m: mm, m_norm })
    } else {
        None
    };
    let mut stencil = Vec::with_capacity(m + 1);
    stencil.push(i);
    stencil.extend_from_slice(nbrs);
    Ok(PointOperator {
        stencil,
        b,
        rcond,
        stabilization,
    })
}

/// Builds operators for every point in parallel. The first failing point (lowest index) is reported.
pub fn build_operators(
    cloud: &PointCloud,
    supports: &SupportTable,
    options: &OperatorOptions,
) -> Result<OperatorSet> {
    build_operators_where(cloud, supports, options, |_| true)
}

/// Like [`build_operators`], but points with `active(i) == false` get an empty
/// operator (stencil `[i]`, zero derivatives, infinite `rcond`). Used for rows
/// that boundary data replaces anyway.
pub fn build_operators_where(
    cloud: &PointCloud,
    supports: &SupportTable,
    options: &OperatorOptions,
    active: impl Fn(usize) -> bool + Sync,
) -> Result<OperatorSet> {
    let set = MultiIndexSet::new(cloud.dim(), options.order)?;
    let ops: Vec<Result<PointOperator>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            if active(i) {
                build_point_operator(cloud, supports, &set, i, options)
            } else {
                Ok(PointOperator {
                    stencil: vec![i],
                    b: DMatrix::zeros(set.len(), 1),
                    rcond: f64::INFINITY,
                    stabilization: None,
                })
            }
        })
        .collect();
    let ops = ops.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(OperatorSet { indexes: set, ops })
}

/// Nonlocal divergence of a flux field (the strong form of a quadratic energy).
///
/// `rows` selects the derivative rows paired with the components of
/// `sigma[i]`. The result at point `i` is
///
/// `-Σ_{j∈S_i} w σ_iᵀ K'_i p_j ΔV_j + Σ_{j∈S'_i} w σ_jᵀ K'_j p_i^{(j)} ΔV_j`
///
/// plus, when `hourglass > 0`, the matching fit-residual correction with
/// coefficient `hourglass / m_i`. Multiplied by `ΔV_i` this equals the gradient
/// of `Σ_k ΔV_k (σ_k · ∂u_k) + Σ_k ΔV_k (hourglass / 2 m_k) Δu_kᵀ M_k Δu_k`
/// with respect to `u_i` when `σ = D ∂u`.
pub fn strong_form_divergence(
    cloud: &PointCloud,
    supports: &SupportTable,
    ops: &OperatorSet,
    rows: &[usize],
    sigma: &[Vec<f64>],
    field: &[f64],
    hourglass: f64,
) -> Result<Vec<f64>> {
    let n = cloud.len();
    if sigma.len() != n || field.len() != n || ops.len() != n {
        return Err(NomError::DimensionMismatch {
            expected: n,
            got: sigma.len().min(field.len()).min(ops.len()),
        });
    }
    if let Some(s) = sigma.iter().find(|s| s.len() != rows.len()) {
        return Err(NomError::DimensionMismatch {
            expected: rows.len(),
            got: s.len(),
        });
    }
    if hourglass > 0.0 && ops.ops.iter().any(|o| o.stabilization.is_none()) {
        return Err(NomError::InvalidArgument(
            "hourglass correction needs stabilization data".into(),
        ));
    }
    // per-point hourglass forces on the stacked stencil
    let hg_forces: Vec<Vec<f64>> = if hourglass > 0.0 {
        ops.ops
            .par_iter()
            .map(|op| {
                let k = op
                    .stabilization
                    .as_ref()
                    .unwrap()
                    .hourglass_stiffness(hourglass);
                let u = DVector::from_vec(op.gather(field));
                (k * u).as_slice().to_vec()
            })
            .collect()
    } else {
        Vec::new()
    };
    let column_flux = |k: usize, col: usize| -> f64 {
        let b = &ops.ops[k].b;
        rows.iter()
            .zip(&sigma[k])
            .map(|(&r, s)| s * b[(r, col)])
            .sum()
    };
    let out = (0..n)
        .into_par_iter()
        .map(|i| {
            let vi = cloud.volume(i);
            let mut acc = vi * column_flux(i, 0);
            if hourglass > 0.0 {
                acc += vi * hg_forces[i][0];
            }
            for &(j, slot) in supports.dual_entries(i) {
                let vj = cloud.volume(j);
                acc += vj * column_flux(j, slot + 1);
                if hourglass > 0.0 {
                    acc += vj * hg_forces[j][slot + 1];
                }
            }
            acc / vi
        })
        .collect();
    Ok(out)
}
