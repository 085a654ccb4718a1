//! Small dense kernels used by the per-point operator construction.

use nalgebra::DMatrix;

/// Householder QR with column pivoting, `A P = Q R`, for tall matrices.
pub(crate) struct PivotedQr {
    /// Thin orthonormal factor, `m × n`.
    pub q: DMatrix<f64>,
    /// Upper triangular factor, `n × n`, with non-increasing `|R_kk|`.
    pub r: DMatrix<f64>,
    /// Column `k` of `A P` is column `perm[k]` of `A`.
    pub perm: Vec<usize>,
}

impl PivotedQr {
    pub fn new(mut a: DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        assert!(m >= n, "pivoted QR expects a tall matrix");
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n);
        for k in 0..n {
            // pivot on the largest remaining column norm
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..n {
                let s: f64 = (k..m).map(|i| a[(i, j)] * a[(i, j)]).sum();
                if s > best_norm {
                    best_norm = s;
                    best = j;
                }
            }
            if best != k {
                a.swap_columns(k, best);
                perm.swap(k, best);
            }
            let norm = best_norm.sqrt();
            let mut v: Vec<f64> = (k..m).map(|i| a[(i, k)]).collect();
            if norm == 0.0 {
                reflectors.push((v, 0.0));
                continue;
            }
            let alpha = if v[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let beta: f64 = v.iter().map(|x| x * x).sum();
            if beta > 0.0 {
                for j in k..n {
                    let dot: f64 = v.iter().enumerate().map(|(t, vt)| vt * a[(k + t, j)]).sum();
                    let f = 2.0 * dot / beta;
                    for (t, vt) in v.iter().enumerate() {
                        a[(k + t, j)] -= f * vt;
                    }
                }
            }
            reflectors.push((v, beta));
        }
        let r = DMatrix::from_fn(n, n, |i, j| if i <= j { a[(i, j)] } else { 0.0 });
        let mut q = DMatrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 });
        for (k, (v, beta)) in reflectors.iter().enumerate().rev() {
            if *beta == 0.0 {
                continue;
            }
            for j in 0..n {
                let dot: f64 = v.iter().enumerate().map(|(t, vt)| vt * q[(k + t, j)]).sum();
                let f = 2.0 * dot / beta;
                for (t, vt) in v.iter().enumerate() {
                    q[(k + t, j)] -= f * vt;
                }
            }
        }
        Self { q, r, perm }
    }

    /// `(|R_nn| / |R_11|)^2`, the reciprocal condition estimate of `AᵀA`.
    pub fn gram_rcond(&self) -> f64 {
        let n = self.r.nrows();
        if n == 0 {
            return 1.0;
        }
        let first = self.r[(0, 0)].abs();
        if first == 0.0 {
            return 0.0;
        }
        let ratio = (0..n)
            .map(|k| self.r[(k, k)].abs())
            .fold(f64::INFINITY, f64::min)
            / first;
        ratio * ratio
    }

    /// Solves `R X = rhs` in place (rhs has `n` rows).
    pub fn solve_r_in_place(&self, rhs: &mut DMatrix<f64>) {
        let n = self.r.nrows();
        for c in 0..rhs.ncols() {
            for i in (0..n).rev() {
                let mut s = rhs[(i, c)];
                for j in i + 1..n {
                    s -= self.r[(i, j)] * rhs[(j, c)];
                }
                rhs[(i, c)] = s / self.r[(i, i)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reconstructs_input() {
        let a = DMatrix::from_row_slice(
            4,
            3,
            &[1.0, 2.0, 0.5, -1.0, 0.3, 2.0, 4.0, 1.0, 1.0, 0.0, -2.0, 3.0],
        );
        let qr = PivotedQr::new(a.clone());
        let qtq = qr.q.transpose() * &qr.q;
        assert!((qtq - DMatrix::identity(3, 3)).amax() < 1e-14);
        let recon = &qr.q * &qr.r;
        for (k, &p) in qr.perm.iter().enumerate() {
            for i in 0..4 {
                assert!((recon[(i, k)] - a[(i, p)]).abs() < 1e-13);
            }
        }
        for k in 1..3 {
            assert!(qr.r[(k, k)].abs() <= qr.r[(k - 1, k - 1)].abs() + 1e-15);
        }
    }

    #[test]
    fn rank_deficient_has_zero_rcond() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(PivotedQr::new(a).gram_rcond() < 1e-28);
    }
}
