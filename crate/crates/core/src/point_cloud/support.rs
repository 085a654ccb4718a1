use rayon::prelude::*;

use super::kdtree::{squared_distance, KdTree};
use super::PointCloud;
use crate::error::{NomError, Result};
use crate::multi_index::count_indexes;

/// Weight function `w(r)` applied to each neighbor in a support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightKind {
    /// `w = 1`
    #[default]
    Constant,
    /// `w = 1 / ΔV_j`
    InverseVolume,
    /// `w = exp(-(2|r|/h_i)^2)`
    Gaussian,
}

impl WeightKind {
    pub fn evaluate(self, dist: f64, h: f64, volume: f64) -> f64 {
        match self {
            WeightKind::Constant => 1.0,
            WeightKind::InverseVolume => 1.0 / volume,
            WeightKind::Gaussian => {
                let s = 2.0 * dist / h;
                (-s * s).exp()
            }
        }
    }
}

impl std::str::FromStr for WeightKind {
    type Err = NomError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "const" | "constant" => Ok(WeightKind::Constant),
            "invvol" => Ok(WeightKind::InverseVolume),
            "gauss" | "gaussian" => Ok(WeightKind::Gaussian),
            _ => Err(NomError::Config(format!(
                "unknown weight function '{s}' (const, invvol, gauss)"
            ))),
        }
    }
}

impl std::fmt::Display for WeightKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WeightKind::Constant => "const",
            WeightKind::InverseVolume => "invvol",
            WeightKind::Gaussian => "gauss",
        })
    }
}

/// Default neighbor count `5p + n_p` for an operator of order `p`.
pub fn default_neighbor_count(dim: usize, order: usize) -> Result<usize> {
    Ok(5 * order + count_indexes(dim, order)?)
}

/// Supports, dual-supports, length scales and weights for a cloud.
#[derive(Debug, Clone)]
pub struct SupportTable {
    neighbors: Vec<Vec<usize>>,
    /// For point `i`: pairs `(j, slot)` with `neighbors[j][slot] == i`.
    dual: Vec<Vec<(usize, usize)>>,
    h: Vec<f64>,
    weights: Vec<Vec<f64>>,
    weight_kind: WeightKind,
}

impl SupportTable {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Points whose support contains `i`, ascending.
    pub fn dual_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.dual[i].iter().map(|&(j, _)| j)
    }

    /// Dual-support entries `(j, slot)` where `slot` is the position of `i` in `j`'s support.
    pub fn dual_entries(&self, i: usize) -> &[(usize, usize)] {
        &self.dual[i]
    }

    pub fn h(&self, i: usize) -> f64 {
        self.h[i]
    }

    pub fn weights(&self, i: usize) -> &[f64] {
        &self.weights[i]
    }

    pub fn weight_kind(&self) -> WeightKind {
        self.weight_kind
    }

    /// Replaces the characteristic length of point `i`, recomputing its weights.
    pub fn set_h(&mut self, cloud: &PointCloud, i: usize, h: f64) {
        self.h[i] = h;
        let xi = cloud.point(i);
        self.weights[i] = self.neighbors[i]
            .iter()
            .map(|&j| {
                let d = squared_distance(xi, cloud.point(j)).sqrt();
                self.weight_kind.evaluate(d, h, cloud.volume(j))
            })
            .collect();
    }

    /// Smallest support size in the table.
    pub fn min_neighbors(&self) -> usize {
        self.neighbors.iter().map(Vec::len).min().unwrap_or(0)
    }
}

/// `k` nearest neighbors of every point (self excluded), extended by every
/// point tied with the `k`-th distance, with `h_i` the support radius.
pub fn build_supports(cloud: &PointCloud, k: usize, weight: WeightKind) -> Result<SupportTable> {
    let n = cloud.len();
    if k == 0 || k >= n {
        return Err(NomError::InvalidArgument(format!(
            "neighbor count k={k} must satisfy 1 <= k < N={n}"
        )));
    }
    let dim = cloud.dim();
    let tree = KdTree::new(dim, cloud.positions());
    let neighbors: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = cloud.point(i);
            let mut probe = (2 * k + 8).min(n - 1);
            loop {
                let list = tree.nearest(xi, probe, Some(i));
                let cut = squared_distance(xi, cloud.point(list[k - 1])).sqrt() * (1.0 + 1e-9);
                let keep = list
                    .iter()
                    .take_while(|&&j| squared_distance(xi, cloud.point(j)).sqrt() <= cut)
                    .count();
                if keep < list.len() || probe == n - 1 {
                    return list[..keep.max(k)].to_vec();
                }
                probe = (2 * probe).min(n - 1);
            }
        })
        .collect();
    let mut dual = vec![Vec::new(); n];
    for (j, list) in neighbors.iter().enumerate() {
        for (slot, &i) in list.iter().enumerate() {
            dual[i].push((j, slot));
        }
    }
    let mut h = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (i, list) in neighbors.iter().enumerate() {
        let xi = cloud.point(i);
        let dists: Vec<f64> = list
            .iter()
            .map(|&j| squared_distance(xi, cloud.point(j)).sqrt())
            .collect();
        let hi = dists.iter().cloned().fold(0.0, f64::max);
        if !(hi > 0.0) {
            return Err(NomError::InvalidArgument(format!(
                "point {i} coincides with all its neighbors"
            )));
        }
        weights.push(
            list.iter()
                .zip(&dists)
                .map(|(&j, &d)| weight.evaluate(d, hi, cloud.volume(j)))
                .collect(),
        );
        h.push(hi);
    }
    Ok(SupportTable {
        neighbors,
        dual,
        h,
        weights,
        weight_kind: weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point_cloud::{brute_force_nearest, build_grid, BoxDomain};

    #[test]
    fn one_d_two_neighbors() {
        let cloud = build_grid(&BoxDomain::unit(1), &[6], 0.0, 0).unwrap();
        let s = build_supports(&cloud, 2, WeightKind::Constant).unwrap();
        for i in 1..5 {
            let mut got = s.neighbors(i).to_vec();
            got.sort();
            assert_eq!(got, vec![i - 1, i + 1]);
            assert!((s.h(i) - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn center_of_5x5() {
        let cloud = build_grid(&BoxDomain::unit(2), &[5, 5], 0.0, 0).unwrap();
        let s = build_supports(&cloud, 8, WeightKind::Constant).unwrap();
        let mut got = s.neighbors(12).to_vec();
        got.sort();
        assert_eq!(got, vec![6, 7, 8, 11, 13, 16, 17, 18]);
        assert_eq!(
            s.neighbors(12),
            brute_force_nearest(2, cloud.positions(), cloud.point(12), 8, Some(12)).as_slice()
        );
    }

    #[test]
    fn duality_and_lattice_symmetry() {
        let cloud = build_grid(&BoxDomain::unit(2), &[9, 7], 0.0, 0).unwrap();
        let s = build_supports(&cloud, 4, WeightKind::Gaussian).unwrap();
        for i in 0..cloud.len() {
            for &(j, slot) in s.dual_entries(i) {
                assert_eq!(s.neighbors(j)[slot], i);
            }
            for &j in s.neighbors(i) {
                assert!(s.dual_neighbors(j).any(|x| x == i));
            }
            // with a complete first shell, interior supports are mutual
            if !cloud.has_tag(i, crate::point_cloud::BOUNDARY_TAG) {
                for &j in s.neighbors(i) {
                    assert!(s.neighbors(j).contains(&i));
                }
            }
        }
        let p = build_grid(&BoxDomain::unit(2), &[9, 9], 0.4, 3).unwrap();
        let sp = build_supports(&p, 11, WeightKind::Constant).unwrap();
        for i in 0..p.len() {
            for &j in sp.neighbors(i) {
                assert!(sp.dual_neighbors(j).any(|x| x == i));
            }
        }
    }

    #[test]
    fn rejects_k_too_large() {
        let cloud = build_grid(&BoxDomain::unit(1), &[3], 0.0, 0).unwrap();
        assert!(build_supports(&cloud, 3, WeightKind::Constant).is_err());
        assert!(build_supports(&cloud, 0, WeightKind::Constant).is_err());
    }

    #[test]
    fn weights() {
        assert_eq!(WeightKind::Constant.evaluate(0.3, 1.0, 2.0), 1.0);
        assert_eq!(WeightKind::InverseVolume.evaluate(0.3, 1.0, 2.0), 0.5);
        assert!((WeightKind::Gaussian.evaluate(0.5, 1.0, 2.0) - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!("gauss".parse::<WeightKind>().unwrap(), WeightKind::Gaussian);
        assert!("cubic".parse::<WeightKind>().is_err());
    }
}
