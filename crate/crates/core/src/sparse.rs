//! Compressed sparse row matrices and the global solvers built on them.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Side;

use crate::error::{NomError, Result};

/// Square-or-rectangular CSR matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Sums duplicate entries in input order, so identical triplet lists
    /// always give bit-identical matrices.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(NomError::InvalidArgument(format!(
                    "triplet ({r}, {c}) outside {nrows}×{ncols} matrix"
                )));
            }
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        // bucket by row, stable
        let mut order = vec![0usize; triplets.len()];
        let mut next = counts.clone();
        for (t, &(r, _, _)) in triplets.iter().enumerate() {
            order[next[r]] = t;
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            scratch.clear();
            scratch.extend(
                order[counts[r]..counts[r + 1]]
                    .iter()
                    .map(|&t| (triplets[t].1, triplets[t].2)),
            );
            scratch.sort_by_key(|&(c, _)| c);
            let mut k = 0;
            while k < scratch.len() {
                let c = scratch[k].0;
                let mut v = 0.0;
                while k < scratch.len() && scratch[k].0 == c {
                    v += scratch[k].1;
                    k += 1;
                }
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::identity(d.len());
        m.vals.copy_from_slice(d);
        m
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let m = rows.first().map(Vec::len).unwrap_or(0);
        let trips: Vec<(usize, usize, f64)> = rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| {
                row.iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(move |(c, v)| (r, c, *v))
            })
            .collect();
        Self::from_triplets(n, m, &trips).expect("dense input is in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(column, value)` pairs of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[range.clone()].binary_search(&c) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        self.vals.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn transpose(&self) -> Self {
        let trips: Vec<(usize, usize, f64)> = (0..self.nrows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (c, r, v)))
            .collect();
        Self::from_triplets(self.ncols, self.nrows, &trips).expect("transpose stays in range")
    }

    /// `max |A - Aᵀ| <= tol * max |A|`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (0..self.nrows).all(|r| {
            self.row(r)
                .all(|(c, v)| (v - self.get(c, r)).abs() <= tol * scale)
        })
    }

    /// Adds `d[k]` to diagonal entry `dofs[k]`, inserting entries as needed.
    pub fn add_to_diagonal(&mut self, dofs: &[usize], d: &[f64]) -> Result<()> {
        let mut trips = self.to_triplets();
        for (&i, &v) in dofs.iter().zip(d) {
            if i >= self.nrows.min(self.ncols) {
                return Err(NomError::InvalidArgument(format!("unknown dof {i}")));
            }
            trips.push((i, i, v));
        }
        *self = Self::from_triplets(self.nrows, self.ncols, &trips)?;
        Ok(())
    }

    pub fn to_triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows)
            .flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v)))
            .collect()
    }

    /// Rows and columns listed in `keep`, in that order.
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.ncols];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k;
        }
        let mut trips = Vec::new();
        for (k, &r) in keep.iter().enumerate() {
            for (c, v) in self.row(r) {
                if map[c] != usize::MAX {
                    trips.push((k, map[c], v));
                }
            }
        }
        Self::from_triplets(keep.len(), keep.len(), &trips).expect("submatrix stays in range")
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        out
    }

    /// `self + alpha * other` (same shape).
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(NomError::DimensionMismatch {
                expected: self.nrows,
                got: other.nrows,
            });
        }
        let mut trips = self.to_triplets();
        trips.extend(
            other
                .to_triplets()
                .into_iter()
                .map(|(r, c, v)| (r, c, alpha * v)),
        );
        Self::from_triplets(self.nrows, self.ncols, &trips)
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let trips: Vec<Triplet<usize, usize, f64>> = self
            .to_triplets()
            .into_iter()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .map_err(|e| NomError::SolveFailed(format!("matrix conversion: {e:?}")))
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

enum Factor {
    Llt(faer::sparse::linalg::solvers::Llt<usize, f64>),
    Lu(faer::sparse::linalg::solvers::Lu<usize, f64>),
}

/// A reusable sparse direct factorization.
pub struct Factorization {
    factor: Factor,
    n: usize,
}

impl Factorization {
    /// Cholesky for symmetric matrices (falls back to LU if not positive
    /// definite), LU with partial pivoting otherwise.
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(NomError::SolveFailed(format!(
                "matrix is {}×{}, not square",
                a.nrows(),
                a.ncols()
            )));
        }
        // structural singularity: an empty row or column
        let mut col_seen = vec![false; n];
        for r in 0..n {
            let mut any = false;
            for (c, v) in a.row(r) {
                if v != 0.0 {
                    any = true;
                    col_seen[c] = true;
                }
            }
            if !any {
                return Err(NomError::SolveFailed(format!(
                    "structurally singular: row {r} is empty"
                )));
            }
        }
        if let Some(c) = col_seen.iter().position(|s| !s) {
            return Err(NomError::SolveFailed(format!(
                "structurally singular: column {c} is empty"
            )));
        }
        let m = a.to_faer()?;
        if a.is_symmetric(1e-12) {
            if let Ok(llt) = m.sp_cholesky(Side::Lower) {
                return Ok(Self {
                    factor: Factor::Llt(llt),
                    n,
                });
            }
        }
        let lu = m
            .sp_lu()
            .map_err(|e| NomError::SolveFailed(format!("numerical breakdown in LU: {e:?}")))?;
        Ok(Self {
            factor: Factor::Lu(lu),
            n,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = faer::Col::<f64>::from_fn(self.n, |i| b[i]);
        let x = match &self.factor {
            Factor::Llt(f) => f.solve(&rhs),
            Factor::Lu(f) => f.solve(&rhs),
        };
        (0..self.n).map(|i| x[i]).collect()
    }
}

/// Solves `A u = b` by sparse direct factorization with one step of iterative
/// refinement, then checks `‖Au - b‖ <= 1e-9 (‖A‖‖u‖ + ‖b‖)`.
pub fn solve_linear(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.nrows() {
        return Err(NomError::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    let f = Factorization::new(a)?;
    let mut u = f.solve(b);
    let check = |u: &[f64]| -> (f64, f64, bool) {
        let r: Vec<f64> = a.mul_vec(u).iter().zip(b).map(|(x, y)| x - y).collect();
        let bound = 1e-9 * (a.norm_inf() * norm_inf(u) + norm_inf(b));
        let res = norm_inf(&r);
        (res, bound, res <= bound && u.iter().all(|x| x.is_finite()))
    };
    if !check(&u).2 && u.iter().all(|x| x.is_finite()) {
        let r: Vec<f64> = b.iter().zip(a.mul_vec(&u)).map(|(x, y)| x - y).collect();
        let du = f.solve(&r);
        for (x, d) in u.iter_mut().zip(du) {
            *x += d;
        }
    }
    let (res, bound, ok) = check(&u);
    if !ok {
        return Err(NomError::SolveFailed(format!(
            "numerical breakdown: residual {res:.3e} exceeds {bound:.3e}"
        )));
    }
    Ok(u)
}

/// Settings for [`smallest_eigenpair`].
#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub shift: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            shift: 0.0,
            max_iter: 1000,
            tol: 1e-8,
        }
    }
}

/// Eigenpair of `A v = λ B v` nearest the shift (by default the smallest
/// eigenvalue of a positive spectrum), by shift-invert inverse iteration.
/// `b = None` means the identity.
pub fn smallest_eigenpair(
    a: &CsrMatrix,
    b: Option<&CsrMatrix>,
    options: &EigenOptions,
) -> Result<(f64, Vec<f64>)> {
    let n = a.nrows();
    let ident = CsrMatrix::identity(n);
    let bm = b.unwrap_or(&ident);
    let shifted = if options.shift != 0.0 {
        a.add_scaled(-options.shift, bm)?
    } else {
        a.clone()
    };
    let f = Factorization::new(&shifted)?;
    let a_norm = a.norm_inf();
    // deterministic start with components along every mode
    let mut x: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64)
        .collect();
    let mut lambda = f64::NAN;
    for _ in 0..options.max_iter {
        let bx = bm.mul_vec(&x);
        let mut y = f.solve(&bx);
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(NomError::NoConvergence(
                "inverse iteration broke down".into(),
            ));
        }
        // fix sign for reproducibility
        let pivot = y
            .iter()
            .cloned()
            .fold(0.0, |m: f64, v| if v.abs() > m.abs() { v } else { m });
        let s = pivot.signum() / norm;
        y.iter_mut().for_each(|v| *v *= s);
        let ay = a.mul_vec(&y);
        let by = bm.mul_vec(&y);
        let num: f64 = y.iter().zip(&ay).map(|(p, q)| p * q).sum();
        let den: f64 = y.iter().zip(&by).map(|(p, q)| p * q).sum();
        lambda = num / den;
        let res = ay
            .iter()
            .zip(&by)
            .map(|(p, q)| (p - lambda * q).powi(2))
            .sum::<f64>()
            .sqrt();
        x = y;
        if res <= options.tol * a_norm {
            return Ok((lambda, x));
        }
    }
    Err(NomError::NoConvergence(format!(
        "eigen iteration stopped after {} steps at λ ≈ {lambda}",
        options.max_iter
    )))
}
