//! Global systems: strong-form collocation and weak-form energy assembly.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{NomError, Result};
use crate::materials::Material;
use crate::multi_index::MultiIndex;
use crate::operators::OperatorSet;
use crate::point_cloud::PointCloud;
use crate::sparse::CsrMatrix;

/// Interleaved numbering, `dof = point * n_fields + field`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    pub n_points: usize,
    pub n_fields: usize,
}

impl DofMap {
    pub fn new(n_points: usize, n_fields: usize) -> Self {
        Self { n_points, n_fields }
    }

    pub fn len(&self) -> usize {
        self.n_points * self.n_fields
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dof(&self, point: usize, field: usize) -> usize {
        point * self.n_fields + field
    }

    /// Values of one field at every point.
    pub fn field(&self, u: &[f64], field: usize) -> Vec<f64> {
        (0..self.n_points).map(|p| u[self.dof(p, field)]).collect()
    }
}

/// A prescribed value on one degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub dof: usize,
    pub value: f64,
}

/// A linear system together with its numbering and constraints.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
    pub constraints: Vec<Constraint>,
}

/// One term `coefficient · ∂^index u` of a scalar strong-form equation. An
/// all-zero index stands for `u` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongTerm {
    pub index: MultiIndex,
    pub coefficient: f64,
}

impl StrongTerm {
    pub fn new(index: &[u32], coefficient: f64) -> Self {
        Self {
            index: index.to_vec(),
            coefficient,
        }
    }
}

/// Laplacian `Σ_k ∂²/∂x_k²` as strong-form terms.
pub fn laplacian_terms(dim: usize, coefficient: f64) -> Vec<StrongTerm> {
    (0..dim)
        .map(|k| {
            let mut t = vec![0; dim];
            t[k] = 2;
            StrongTerm {
                index: t,
                coefficient,
            }
        })
        .collect()
}

/// Collocation matrix of `Σ c_α ∂^α u + potential(x) u` at every point, with
/// `rhs_i = rhs(x_i)`. Constrained rows are replaced by identity rows.
pub fn assemble_strong(
    cloud: &PointCloud,
    ops: &OperatorSet,
    terms: &[StrongTerm],
    potential: Option<&(dyn Fn(&[f64]) -> f64 + Sync)>,
    rhs: &(dyn Fn(&[f64]) -> f64 + Sync),
    dirichlet: &[Constraint],
) -> Result<AssembledSystem> {
    let n = cloud.len();
    if ops.len() != n {
        return Err(NomError::DimensionMismatch {
            expected: n,
            got: ops.len(),
        });
    }
    let mut rows = Vec::with_capacity(terms.len());
    for t in terms {
        if t.index.len() != cloud.dim() {
            return Err(NomError::DimensionMismatch {
                expected: cloud.dim(),
                got: t.index.len(),
            });
        }
        let row = if t.index.iter().all(|&v| v == 0) {
            None
        } else {
            Some(ops.indexes.require(&t.index)?)
        };
        rows.push((row, t.coefficient));
    }
    let mut fixed = vec![None; n];
    for c in dirichlet {
        if c.dof >= n {
            return Err(NomError::InvalidArgument(format!("unknown dof {}", c.dof)));
        }
        fixed[c.dof] = Some(c.value);
    }
    let local: Vec<(Vec<(usize, usize, f64)>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            if let Some(g) = fixed[i] {
                return (vec![(i, i, 1.0)], g);
            }
            let op = ops.get(i);
            let mut coeffs = vec![0.0; op.stencil.len()];
            for &(row, c) in &rows {
                match row {
                    Some(r) => {
                        for (k, v) in coeffs.iter_mut().enumerate() {
                            *v += c * op.b[(r, k)];
                        }
                    }
                    None => coeffs[0] += c,
                }
            }
            if let Some(pot) = potential {
                coeffs[0] += pot(cloud.point(i));
            }
            let trips = op
                .stencil
                .iter()
                .zip(coeffs)
                .map(|(&j, v)| (i, j, v))
                .collect();
            (trips, rhs(cloud.point(i)))
        })
        .collect();
    let mut trips = Vec::new();
    let mut b = Vec::with_capacity(n);
    for (t, r) in local {
        trips.extend(t);
        b.push(r);
    }
    Ok(AssembledSystem {
        matrix: CsrMatrix::from_triplets(n, n, &trips)?,
        rhs: b,
        dofs: DofMap::new(n, 1),
        constraints: dirichlet.to_vec(),
    })
}

/// Weak-form discretization of `Σ_i ΔV_i F(∂u_i)` plus optional hourglass
/// energy `Σ_i ΔV_i (c_i / 2 m_i) Σ_f Δu_fᵀ M_i Δu_f`.
pub struct WeakForm<'a> {
    cloud: &'a PointCloud,
    ops: &'a OperatorSet,
    material: &'a dyn Material,
    dofs: DofMap,
    rows: Vec<(usize, usize)>,
    hourglass: Option<Vec<f64>>,
}

impl<'a> WeakForm<'a> {
    pub fn new(
        cloud: &'a PointCloud,
        ops: &'a OperatorSet,
        material: &'a dyn Material,
    ) -> Result<Self> {
        if ops.len() != cloud.len() {
            return Err(NomError::DimensionMismatch {
                expected: cloud.len(),
                got: ops.len(),
            });
        }
        let rows = material
            .selector()
            .iter()
            .map(|s| {
                if s.field >= material.n_fields() {
                    return Err(NomError::InvalidArgument(format!(
                        "selector field {} out of range",
                        s.field
                    )));
                }
                Ok((s.field, ops.indexes.require(&s.index)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cloud,
            ops,
            material,
            dofs: DofMap::new(cloud.len(), material.n_fields()),
            rows,
            hourglass: None,
        })
    }

    /// Enables hourglass control with coefficient `c_i` at every point
    /// (usually `p_hg` times a material modulus).
    pub fn with_hourglass(mut self, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != self.cloud.len() {
            return Err(NomError::DimensionMismatch {
                expected: self.cloud.len(),
                got: coefficients.len(),
            });
        }
        if coefficients.iter().any(|c| *c != 0.0)
            && self.ops.ops.iter().any(|o| o.stabilization.is_none())
        {
            return Err(NomError::InvalidArgument(
                "hourglass control needs operators built with stabilization".into(),
            ));
        }
        self.hourglass = Some(coefficients);
        Ok(self)
    }

    pub fn dofs(&self) -> DofMap {
        self.dofs
    }

    /// Operator rows restricted to the selector, on local dofs `slot * n_fields + field`.
    fn local_b(&self, i: usize) -> DMatrix<f64> {
        let op = self.ops.get(i);
        let nf = self.dofs.n_fields;
        let mut b = DMatrix::zeros(self.rows.len(), op.stencil.len() * nf);
        for (s, &(field, row)) in self.rows.iter().enumerate() {
            for k in 0..op.stencil.len() {
                b[(s, k * nf + field)] = op.b[(row, k)];
            }
        }
        b
    }

    fn local_u(&self, i: usize, u: &[f64]) -> DVector<f64> {
        let nf = self.dofs.n_fields;
        let stencil = &self.ops.get(i).stencil;
        DVector::from_iterator(
            stencil.len() * nf,
            stencil
                .iter()
                .flat_map(|&j| (0..nf).map(move |f| u[j * nf + f])),
        )
    }

    fn local_dofs(&self, i: usize) -> Vec<usize> {
        let nf = self.dofs.n_fields;
        self.ops
            .get(i)
            .stencil
            .iter()
            .flat_map(|&j| (0..nf).map(move |f| j * nf + f))
            .collect()
    }

    fn local_hourglass(&self, i: usize) -> Option<DMatrix<f64>> {
        let c = self.hourglass.as_ref()?[i];
        if c == 0.0 {
            return None;
        }
        let k = self
            .ops
            .get(i)
            .stabilization
            .as_ref()?
            .hourglass_stiffness(c)
            * self.cloud.volume(i);
        let nf = self.dofs.n_fields;
        let n = k.nrows();
        let mut out = DMatrix::zeros(n * nf, n * nf);
        for a in 0..n {
            for b in 0..n {
                for f in 0..nf {
                    out[(a * nf + f, b * nf + f)] = k[(a, b)];
                }
            }
        }
        Some(out)
    }

    fn derivatives(&self, i: usize, u: &[f64]) -> Vec<f64> {
        (self.local_b(i) * self.local_u(i, u)).as_slice().to_vec()
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dofs.len() {
            return Err(NomError::DimensionMismatch {
                expected: self.dofs.len(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Total stored energy (material plus hourglass).
    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        self.check_len(u)?;
        let parts: Vec<Result<f64>> = (0..self.cloud.len())
            .into_par_iter()
            .map(|i| {
                let du = self.derivatives(i, u);
                let mut e = self.cloud.volume(i)
                    * self.material.energy(&du).map_err(|err| at_point(err, i))?;
                if let Some(k) = self.local_hourglass(i) {
                    let ul = self.local_u(i, u);
                    e += 0.5 * ul.dot(&(k * &ul));
                }
                Ok(e)
            })
            .collect();
        let mut total = 0.0;
        for p in parts {
            total += p?;
        }
        Ok(total)
    }

    /// Internal force, the gradient of [`WeakForm::energy`].
    pub fn internal_force(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        let parts: Vec<Result<(Vec<usize>, DVector<f64>)>> = (0..self.cloud.len())
            .into_par_iter()
            .map(|i| {
                let b = self.local_b(i);
                let ul = self.local_u(i, u);
                let du = &b * &ul;
                let g = self
                    .material
                    .first_derivative(du.as_slice())
                    .map_err(|err| at_point(err, i))?;
                let mut f = b.transpose() * g * self.cloud.volume(i);
                if let Some(k) = self.local_hourglass(i) {
                    f += k * ul;
                }
                Ok((self.local_dofs(i), f))
            })
            .collect();
        let mut out = vec![0.0; self.dofs.len()];
        for p in parts {
            let (dofs, f) = p?;
            for (d, v) in dofs.iter().zip(f.iter()) {
                out[*d] += v;
            }
        }
        Ok(out)
    }

    /// Tangent stiffness, the Jacobian of [`WeakForm::internal_force`].
    pub fn stiffness(&self, u: &[f64]) -> Result<CsrMatrix> {
        self.check_len(u)?;
        let parts: Vec<Result<Vec<(usize, usize, f64)>>> = (0..self.cloud.len())
            .into_par_iter()
            .map(|i| {
                let b = self.local_b(i);
                let du = &b * self.local_u(i, u);
                let d = self
                    .material
                    .second_derivative(du.as_slice())
                    .map_err(|err| at_point(err, i))?;
                let mut k = b.transpose() * d * &b * self.cloud.volume(i);
                if let Some(h) = self.local_hourglass(i) {
                    k += h;
                }
                let dofs = self.local_dofs(i);
                let mut trips = Vec::with_capacity(dofs.len() * dofs.len());
                for (a, &ra) in dofs.iter().enumerate() {
                    for (c, &rc) in dofs.iter().enumerate() {
                        trips.push((ra, rc, k[(a, c)]));
                    }
                }
                Ok(trips)
            })
            .collect();
        let mut trips = Vec::new();
        for p in parts {
            trips.extend(p?);
        }
        let n = self.dofs.len();
        CsrMatrix::from_triplets(n, n, &trips)
    }

    /// Derivative vectors `∂u` gathered by the material selector at each point.
    pub fn selected_derivatives(&self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_len(u)?;
        Ok((0..self.cloud.len())
            .into_par_iter()
            .map(|i| self.derivatives(i, u))
            .collect())
    }
}

fn at_point(err: NomError, i: usize) -> NomError {
    match err {
        NomError::InvertedElement { jacobian, .. } => {
            NomError::InvertedElement { point: i, jacobian }
        }
        other => other,
    }
}

/// Penalty enforcement of Dirichlet data, energy `½β Σ (u_d - λ g_d)²`.
#[derive(Debug, Clone)]
pub struct Penalty {
    pub constraints: Vec<Constraint>,
    pub beta: f64,
}

impl Penalty {
    pub fn new(constraints: Vec<Constraint>, beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(NomError::InvalidArgument(format!(
                "penalty must be positive, got {beta}"
            )));
        }
        Ok(Self { constraints, beta })
    }

    /// Default penalty factor: `scale` times the mean diagonal of `k`.
    pub fn default_beta(k: &CsrMatrix, scale: f64) -> f64 {
        let d = k.diagonal();
        let mean = d.iter().map(|v| v.abs()).sum::<f64>() / d.len().max(1) as f64;
        scale * if mean > 0.0 { mean } else { 1.0 }
    }

    pub fn add_residual(&self, u: &[f64], load_factor: f64, r: &mut [f64]) {
        for c in &self.constraints {
            r[c.dof] += self.beta * (u[c.dof] - load_factor * c.value);
        }
    }

    pub fn add_stiffness(&self, k: &mut CsrMatrix) -> Result<()> {
        let dofs: Vec<usize> = self.constraints.iter().map(|c| c.dof).collect();
        k.add_to_diagonal(&dofs, &vec![self.beta; dofs.len()])
    }
}

/// Adds the penalty terms to a linear system `K u = f`.
pub fn apply_dirichlet_penalty(
    system: &mut AssembledSystem,
    constraints: &[Constraint],
    beta: f64,
) -> Result<()> {
    let penalty = Penalty::new(constraints.to_vec(), beta)?;
    if let Some(c) = constraints.iter().find(|c| c.dof >= system.rhs.len()) {
        return Err(NomError::InvalidArgument(format!("unknown dof {}", c.dof)));
    }
    penalty.add_stiffness(&mut system.matrix)?;
    for c in constraints {
        system.rhs[c.dof] += beta * c.value;
    }
    system.constraints.extend_from_slice(constraints);
    Ok(())
}

/// Nodal load vector `-ΔV_i s(x_i)` for a scalar source in `½|∇u|² + s u`.
pub fn source_load(cloud: &PointCloud, source: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Vec<f64> {
    (0..cloud.len())
        .map(|i| -cloud.volume(i) * source(cloud.point(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{plane_stress_d, poisson};
    use crate::operators::{build_operators, OperatorOptions};
    use crate::point_cloud::{build_grid, build_supports, BoxDomain, WeightKind};
    use crate::sparse::solve_linear;

    fn setup(n: usize, order: usize, k: usize, stab: bool) -> (PointCloud, OperatorSet) {
        let cloud = build_grid(&BoxDomain::unit(2), &[n, n], 0.2, 3).unwrap();
        let s = build_supports(&cloud, k, WeightKind::Constant).unwrap();
        let ops = build_operators(
            &cloud,
            &s,
            &OperatorOptions::new(order).with_stabilization(stab),
        )
        .unwrap();
        (cloud, ops)
    }

    #[test]
    fn tridiagonal_second_difference() {
        let dx = 0.25;
        let xs: Vec<f64> = (0..5).map(|i| i as f64 * dx).collect();
        let cloud = PointCloud::new(1, xs, vec![dx; 5], vec![Default::default(); 5]).unwrap();
        let s = build_supports(&cloud, 2, WeightKind::Constant).unwrap();
        let ops = build_operators(&cloud, &s, &OperatorOptions::new(2)).unwrap();
        let bcs = [
            Constraint { dof: 0, value: 0.0 },
            Constraint { dof: 4, value: 0.0 },
        ];
        let sys = assemble_strong(
            &cloud,
            &ops,
            &[StrongTerm::new(&[2], 1.0)],
            None,
            &|_| 0.0,
            &bcs,
        )
        .unwrap();
        for i in 1..4 {
            assert!((sys.matrix.get(i, i - 1) - 16.0).abs() < 1e-10);
            assert!((sys.matrix.get(i, i) + 32.0).abs() < 1e-10);
            assert!((sys.matrix.get(i, i + 1) - 16.0).abs() < 1e-10);
        }
        assert_eq!(sys.matrix.get(0, 0), 1.0);
        let u = solve_linear(&sys.matrix, &sys.rhs).unwrap();
        assert!(u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn strong_form_reproduces_quadratics() {
        let (cloud, ops) = setup(7, 2, 12, false);
        let exact =
            |x: &[f64]| 1.0 + x[0] - 2.0 * x[1] + x[0] * x[0] + 0.5 * x[0] * x[1] - x[1] * x[1];
        let bcs: Vec<Constraint> = cloud
            .tagged("boundary")
            .into_iter()
            .map(|i| Constraint {
                dof: i,
                value: exact(cloud.point(i)),
            })
            .collect();
        let sys =
            assemble_strong(&cloud, &ops, &laplacian_terms(2, 1.0), None, &|_| 0.0, &bcs).unwrap();
        let u: Vec<f64> = (0..cloud.len()).map(|i| exact(cloud.point(i))).collect();
        let r = sys.matrix.mul_vec(&u);
        for (a, b) in r.iter().zip(&sys.rhs) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn residual_is_linear_for_quadratic_materials() {
        let (cloud, ops) = setup(6, 2, 12, true);
        let mat = plane_stress_d(1.0, 0.3).unwrap();
        let wf = WeakForm::new(&cloud, &ops, &mat)
            .unwrap()
            .with_hourglass(vec![0.5; cloud.len()])
            .unwrap();
        let u: Vec<f64> = (0..wf.dofs().len())
            .map(|k| ((k * 37) % 11) as f64 * 0.01 - 0.05)
            .collect();
        let k = wf.stiffness(&u).unwrap();
        let f = wf.internal_force(&u).unwrap();
        let ku = k.mul_vec(&u);
        let scale = ku.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in f.iter().zip(&ku) {
            assert!((a - b).abs() < 1e-12 * scale);
        }
        assert!(k.is_symmetric(1e-10));
        let e = wf.energy(&u).unwrap();
        let dot: f64 = f.iter().zip(&u).map(|(a, b)| a * b).sum();
        assert!((2.0 * e - dot).abs() < 1e-12 * dot.abs());
    }

    #[test]
    fn poisson_stiffness_is_sum_of_btb() {
        let (cloud, ops) = setup(5, 1, 8, false);
        let mat = poisson(2);
        let wf = WeakForm::new(&cloud, &ops, &mat).unwrap();
        let k = wf.stiffness(&vec![0.0; cloud.len()]).unwrap();
        let mut dense = vec![vec![0.0; cloud.len()]; cloud.len()];
        for i in 0..cloud.len() {
            let op = ops.get(i);
            for a in 0..op.stencil.len() {
                for c in 0..op.stencil.len() {
                    let v: f64 = (0..2).map(|r| op.b[(r, a)] * op.b[(r, c)]).sum();
                    dense[op.stencil[a]][op.stencil[c]] += cloud.volume(i) * v;
                }
            }
        }
        let kd = k.to_dense();
        for r in 0..cloud.len() {
            for c in 0..cloud.len() {
                assert!((kd[r][c] - dense[r][c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn penalty_pins_constrained_dofs() {
        let mut sys = AssembledSystem {
            matrix: CsrMatrix::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]]),
            rhs: vec![1.0, 0.0],
            dofs: DofMap::new(2, 1),
            constraints: Vec::new(),
        };
        let unchanged = sys.clone();
        apply_dirichlet_penalty(&mut sys, &[], 1.0).unwrap();
        assert_eq!(sys.matrix, unchanged.matrix);
        assert_eq!(sys.rhs, unchanged.rhs);
        let beta = 1e8 * 2.0;
        apply_dirichlet_penalty(&mut sys, &[Constraint { dof: 1, value: 0.7 }], beta).unwrap();
        let u = solve_linear(&sys.matrix, &sys.rhs).unwrap();
        assert!((u[1] - 0.7).abs() <= 1e-5 * 0.7 + 1e-12);
        assert!(
            apply_dirichlet_penalty(&mut sys, &[Constraint { dof: 5, value: 0.0 }], 1.0).is_err()
        );
        assert!(Penalty::new(vec![], 0.0).is_err());
    }
}
