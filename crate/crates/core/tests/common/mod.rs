//! Helpers shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;

use nonlocal::materials::Material;
use nonlocal::multi_index::{enumerate_indexes, MultiIndexSet};
use nonlocal::operators::{build_point_operator, OperatorOptions, PointOperator};
use nonlocal::point_cloud::{
    build_grid, build_supports, default_neighbor_count, BoxDomain, PointCloud, WeightKind,
};

/// Random polynomial of total degree `<= n`, as (exponents, coefficient) pairs.
pub fn polynomial(dim: usize, n: usize, coefs: &[f64]) -> Vec<(Vec<u32>, f64)> {
    let set = enumerate_indexes(dim, n).unwrap();
    let mut terms = vec![(vec![0; dim], coefs[0])];
    for (k, idx) in set.indexes().iter().enumerate() {
        terms.push((idx.clone(), coefs[(k + 1) % coefs.len()]));
    }
    terms
}

pub fn falling(e: u32, a: u32) -> f64 {
    (0..a).map(|k| (e - k) as f64).product()
}

/// `∂^alpha` of the polynomial at `x`.
pub fn poly_derivative(terms: &[(Vec<u32>, f64)], alpha: &[u32], x: &[f64]) -> f64 {
    terms
        .iter()
        .filter(|(e, _)| e.iter().zip(alpha).all(|(e, a)| e >= a))
        .map(|(e, c)| {
            let mut v = *c;
            for k in 0..x.len() {
                v *= falling(e[k], alpha[k]) * x[k].powi((e[k] - alpha[k]) as i32);
            }
            v
        })
        .sum()
}

pub fn poly_value(terms: &[(Vec<u32>, f64)], x: &[f64]) -> f64 {
    poly_derivative(terms, &vec![0; x.len()], x)
}

pub struct Support {
    pub cloud: PointCloud,
    pub set: MultiIndexSet,
    pub op: PointOperator,
    pub center: usize,
}

pub fn random_support(
    dim: usize,
    n: usize,
    perturb: f64,
    seed: u64,
    weight: WeightKind,
) -> Option<Support> {
    let k = default_neighbor_count(dim, n).unwrap();
    let side = match dim {
        1 => 2 * k + 3,
        2 => 13,
        _ => 9,
    };
    let cloud = build_grid(&BoxDomain::unit(dim), &vec![side; dim], perturb, seed).unwrap();
    let supports = build_supports(&cloud, k, weight).unwrap();
    let center = cloud.nearest_point(&vec![0.5; dim]);
    let set = MultiIndexSet::new(dim, n).unwrap();
    let options = OperatorOptions::new(n).with_stabilization(true);
    let op = build_point_operator(&cloud, &supports, &set, center, &options).ok()?;
    Some(Support {
        cloud,
        set,
        op,
        center,
    })
}

pub fn fd_gradient(m: &dyn Material, du: &[f64], step: f64) -> Vec<f64> {
    (0..du.len())
        .map(|k| {
            let (mut p, mut q) = (du.to_vec(), du.to_vec());
            p[k] += step;
            q[k] -= step;
            (m.energy(&p).unwrap() - m.energy(&q).unwrap()) / (2.0 * step)
        })
        .collect()
}

pub fn fd_hessian(m: &dyn Material, du: &[f64], step: f64) -> DMatrix<f64> {
    let n = du.len();
    let mut h = DMatrix::zeros(n, n);
    for k in 0..n {
        let (mut p, mut q) = (du.to_vec(), du.to_vec());
        p[k] += step;
        q[k] -= step;
        let d = (m.first_derivative(&p).unwrap() - m.first_derivative(&q).unwrap()) / (2.0 * step);
        h.set_column(k, &d);
    }
    h
}

pub fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    num / b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300)
}
