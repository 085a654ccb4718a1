use std::f64::consts::PI;

use super::{discretize, report, BenchConfig, BenchOutcome, Benchmark};
use crate::assembly::{Constraint, Penalty, WeakForm};
use crate::error::Result;
use crate::materials::plate_d;
use crate::newton::{newton_solve, NewtonOptions};
use crate::point_cloud::{BoxDomain, PointCloud, SupportTable, BOUNDARY_TAG};

pub(crate) const PLATE_E: f64 = 30e9;
pub(crate) const PLATE_NU: f64 = 0.3;
pub(crate) const PLATE_T: f64 = 0.01;
pub(crate) const PLATE_Q: f64 = -100.0;

/// Highest odd term kept in the series.
pub const PLATE_SERIES_TERMS: usize = 39;

/// Deflection of a simply supported square plate `(0,a)×(-a/2,a/2)` under
/// uniform load `q`, by the classical single series truncated at `m_max`.
pub fn plate_series(x: f64, y: f64, a: f64, q: f64, d0: f64, m_max: usize) -> f64 {
    let mut sum = 0.0;
    for m in (1..=m_max).step_by(2) {
        let mf = m as f64;
        let alpha = mf * PI / 2.0;
        let ch = alpha.cosh();
        let t = 2.0 * alpha * y / a;
        let bracket = 1.0 - (alpha * alpha.tanh() + 2.0) / (2.0 * ch) * t.cosh()
            + alpha / (2.0 * ch) * (2.0 * y / a) * t.sinh();
        sum += bracket / mf.powi(5) * (mf * PI * x / a).sin();
    }
    4.0 * q * a.powi(4) / (PI.powi(5) * d0) * sum
}

/// Bound on the neglected terms `m > m_max`, taking each bracket as at most one in magnitude.
pub fn plate_series_tail_bound(a: f64, q: f64, d0: f64, m_max: usize) -> f64 {
    let first = (m_max + 2 - (m_max % 2 == 0) as usize) as f64;
    // Σ_{m ≥ M, odd} m^-5 ≤ M^-5 + ∫_M^∞ x^-5 dx / 2
    let tail = first.powi(-5) + 1.0 / (8.0 * first.powi(4));
    4.0 * q.abs() * a.powi(4) / (PI.powi(5) * d0) * tail
}

/// Hourglass coefficients `p_hg D / h_i²`, matching the curvature energy scale.
pub(crate) fn curvature_hourglass(
    supports: &SupportTable,
    cloud: &PointCloud,
    phg: f64,
    modulus: f64,
) -> Vec<f64> {
    (0..cloud.len())
        .map(|i| phg * modulus / supports.h(i).powi(2))
        .collect()
}

/// Kirchhoff plate on `(0,1)×(-½,½)` with `w = 0` on the edges, uniform load
/// `q0 = -100`, `E = 30 GPa`, `ν = 0.3`, `t = 0.01`.
pub fn simply_supported_plate(config: &BenchConfig) -> Result<BenchOutcome> {
    let bench = Benchmark::Plate;
    let domain = BoxDomain::new(vec![0.0, -0.5], vec![1.0, 0.5]);
    let cloud = config.grid(&domain)?;
    let k = config.neighbor_count(&bench)?;
    let stab = config.phg > 0.0;
    let (supports, ops) = discretize(&cloud, k, config.weight, config.order, stab)?;
    let material = plate_d(PLATE_E, PLATE_NU, PLATE_T)?;
    let d0 = material.matrix()[(0, 0)];
    let mut wf = WeakForm::new(&cloud, &ops, &material)?;
    if stab {
        wf = wf.with_hourglass(curvature_hourglass(&supports, &cloud, config.phg, d0))?;
    }
    let n = cloud.len();
    let k_mat = wf.stiffness(&vec![0.0; n])?;
    let beta = config
        .penalty
        .unwrap_or_else(|| Penalty::default_beta(&k_mat, 1e6));
    let constraints: Vec<Constraint> = cloud
        .tagged(BOUNDARY_TAG)
        .into_iter()
        .map(|i| Constraint { dof: i, value: 0.0 })
        .collect();
    let penalty = Penalty::new(constraints, beta)?;
    let mut k_total = k_mat.clone();
    penalty.add_stiffness(&mut k_total)?;
    let load: Vec<f64> = (0..n).map(|i| cloud.volume(i) * PLATE_Q).collect();
    let options = NewtonOptions {
        tol: config.tol,
        max_iter: config.max_iter,
        load_factors: vec![1.0],
    };
    let mut log = Vec::new();
    let rep = newton_solve(
        |u: &[f64], lambda| {
            let mut r = k_mat.mul_vec(u);
            for (ri, f) in r.iter_mut().zip(&load) {
                *ri -= lambda * f;
            }
            penalty.add_residual(u, lambda, &mut r);
            Ok(r)
        },
        |_: &[f64], _| Ok(k_total.clone()),
        vec![0.0; n],
        &options,
        |s| log.push(*s),
    )?;
    let exact: Vec<f64> = (0..n)
        .map(|i| {
            let p = cloud.point(i);
            plate_series(p[0], p[1], 1.0, PLATE_Q, d0, PLATE_SERIES_TERMS)
        })
        .collect();
    let center = cloud.nearest_point(&[0.5, 0.0]);
    let dx = 1.0 / (config.nodes - 1) as f64;
    let report = report(&cloud, dx, config, &rep.u, Some(&exact))?;
    let error: Vec<f64> = rep.u.iter().zip(&exact).map(|(a, b)| a - b).collect();
    let quantities = vec![
        ("center_x".into(), cloud.point(center)[0]),
        ("center_y".into(), cloud.point(center)[1]),
        ("center_deflection".into(), rep.u[center]),
        ("center_series".into(), exact[center]),
        (
            "center_rel_error".into(),
            (rep.u[center] - exact[center]).abs() / exact[center].abs(),
        ),
        (
            "series_tail_bound".into(),
            plate_series_tail_bound(1.0, PLATE_Q, d0, PLATE_SERIES_TERMS),
        ),
    ];
    Ok(BenchOutcome {
        report,
        cloud,
        field_names: vec!["w".into(), "w_series".into(), "error".into()],
        fields: vec![rep.u, exact, error],
        newton_log: log,
        quantities,
        load_curve: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_center_coefficient() {
        // classical tabulated value 0.00406 q a⁴ / D at the center
        let w = plate_series(0.5, 0.0, 1.0, 1.0, 1.0, PLATE_SERIES_TERMS);
        assert!((w - 0.00406).abs() < 5e-6);
        assert!(plate_series(0.0, 0.2, 1.0, 1.0, 1.0, 39).abs() < 1e-15);
        assert!(plate_series(0.3, 0.5, 1.0, 1.0, 1.0, 39).abs() < 1e-9);
        let bound = plate_series_tail_bound(1.0, 1.0, 1.0, 39);
        let more = plate_series(0.5, 0.0, 1.0, 1.0, 1.0, 201);
        assert!((more - w).abs() <= bound);
        assert!(bound < 1e-9);
    }
}
