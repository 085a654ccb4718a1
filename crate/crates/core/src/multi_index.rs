//! Derivative multi-indexes, scaled monomials and the diagonal scaling matrix.
//!
//! A multi-index `(n_1, ..., n_d)` names the mixed partial derivative
//! `∂^{n_1+...+n_d} u / ∂x_1^{n_1} ... ∂x_d^{n_d}`. The set used throughout the
//! crate holds every tuple with total order between 1 and `n`, in the order
//! produced by walking the `d`-subsets of `{1, ..., d+n}` lexicographically and
//! reading each subset as a sequence of gaps. For `d = 2, n = 2` that order is
//! `(0,1), (0,2), (1,0), (1,1), (2,0)`, i.e. `u_y, u_yy, u_x, u_xy, u_xx`.

use std::collections::HashMap;

use crate::error::{NomError, Result};

/// Exponent tuple of one partial derivative.
pub type MultiIndex = Vec<u32>;

/// Ordered set of derivative multi-indexes with `1 <= |α| <= n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexSet {
    dim: usize,
    max_order: usize,
    indexes: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

impl MultiIndexSet {
    /// Enumerates all multi-indexes of dimension `dim` up to total order `max_order`.
    pub fn new(dim: usize, max_order: usize) -> Result<Self> {
        if dim == 0 || max_order == 0 {
            return Err(NomError::InvalidArgument(format!(
                "multi-index set needs d >= 1 and n >= 1 (got d={dim}, n={max_order})"
            )));
        }
        let mut indexes = Vec::with_capacity(count_indexes(dim, max_order)?);
        let mut subset: Vec<usize> = (1..=dim).collect();
        let top = dim + max_order;
        loop {
            let mut tuple = Vec::with_capacity(dim);
            let mut prev = 0;
            for &c in &subset {
                tuple.push((c - prev - 1) as u32);
                prev = c;
            }
            if tuple.iter().any(|&e| e > 0) {
                indexes.push(tuple);
            }
            if !next_subset(&mut subset, top) {
                break;
            }
        }
        let lookup = indexes
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        Ok(Self {
            dim,
            max_order,
            indexes,
            lookup,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn len(&self) -> usize {
        self.indexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indexes.is_empty()
    }

    pub fn indexes(&self) -> &[MultiIndex] {
        &self.indexes
    }

    pub fn get(&self, row: usize) -> &[u32] {
        &self.indexes[row]
    }

    /// Row of `index` in the canonical order, if present.
    pub fn position(&self, index: &[u32]) -> Option<usize> {
        self.lookup.get(index).copied()
    }

    /// Like [`position`](Self::position) but reports a missing index as an error.
    pub fn require(&self, index: &[u32]) -> Result<usize> {
        self.position(index).ok_or_else(|| {
            NomError::InvalidArgument(format!(
                "derivative {index:?} is not available at operator order {} in {}D",
                self.max_order, self.dim
            ))
        })
    }

    /// Writes the scaled monomials `Π r_k^{n_k} / h^{|n|}` into `out`.
    pub fn monomials_into(&self, r: &[f64], h: f64, out: &mut [f64]) {
        debug_assert_eq!(r.len(), self.dim);
        debug_assert_eq!(out.len(), self.len());
        let s: Vec<f64> = r.iter().map(|x| x / h).collect();
        for (o, tuple) in out.iter_mut().zip(&self.indexes) {
            *o = tuple
                .iter()
                .zip(&s)
                .map(|(&e, &x)| x.powi(e as i32))
                .product();
        }
    }
}

/// Advances `subset` (sorted, 1-based, values in `1..=top`) to the next
/// subset in lexicographic order. Returns false after the last one.
fn next_subset(subset: &mut [usize], top: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < top - (k - 1 - i) {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Convenience wrapper for [`MultiIndexSet::new`].
pub fn enumerate_indexes(dim: usize, max_order: usize) -> Result<MultiIndexSet> {
    MultiIndexSet::new(dim, max_order)
}

/// Number of derivatives of total order 1..=n in d dimensions: `C(n+d, n) - 1`.
pub fn count_indexes(dim: usize, max_order: usize) -> Result<usize> {
    if dim == 0 || max_order == 0 {
        return Err(NomError::InvalidArgument(format!(
            "count needs d >= 1 and n >= 1 (got d={dim}, n={max_order})"
        )));
    }
    Ok(binomial(max_order + dim, max_order) - 1)
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

fn factorial(n: u32) -> u128 {
    (1..=n as u128).product()
}

/// Scaled monomial vector `p^h(r)` for every index in `set`.
pub fn monomial_vector(set: &MultiIndexSet, r: &[f64], h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(NomError::InvalidArgument(format!(
            "length scale must be positive, got {h}"
        )));
    }
    if r.len() != set.dim() {
        return Err(NomError::DimensionMismatch {
            expected: set.dim(),
            got: r.len(),
        });
    }
    let mut out = vec![0.0; set.len()];
    set.monomials_into(r, h, &mut out);
    Ok(out)
}

/// Diagonal of `H` with entries `h^{|n|} / Π n_k!`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingMatrix {
    pub diag: Vec<f64>,
}

impl ScalingMatrix {
    /// Converts scaled derivatives `∂^h u` back to true derivatives in place.
    pub fn unscale(&self, scaled: &mut [f64]) {
        for (v, d) in scaled.iter_mut().zip(&self.diag) {
            *v /= d;
        }
    }
}

pub fn scaling_matrix(set: &MultiIndexSet, h: f64) -> Result<ScalingMatrix> {
    if !(h > 0.0) {
        return Err(NomError::InvalidArgument(format!(
            "length scale must be positive, got {h}"
        )));
    }
    let diag = set
        .indexes()
        .iter()
        .map(|t| {
            let order: u32 = t.iter().sum();
            let denom: u128 = t.iter().map(|&e| factorial(e)).product();
            h.powi(order as i32) / denom as f64
        })
        .collect();
    Ok(ScalingMatrix { diag })
}
