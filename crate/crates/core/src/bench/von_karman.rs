use super::plate::{plate_series, PLATE_SERIES_TERMS};
use super::{discretize, report, BenchConfig, BenchOutcome, Benchmark};
use crate::assembly::{Constraint, Penalty, WeakForm};
use crate::error::Result;
use crate::materials::VonKarman;
use crate::newton::{newton_solve, NewtonOptions};
use crate::point_cloud::{BoxDomain, BOUNDARY_TAG};

const VK_E: f64 = 30e6;
const VK_NU: f64 = 0.3;
const VK_H: f64 = 0.01;
const VK_Q: f64 = 1000.0;

/// Linear Kirchhoff center deflection of the unit plate at load `q`.
pub fn kirchhoff_center_deflection(q: f64, e: f64, nu: f64, h: f64) -> f64 {
    let d0 = e * h.powi(3) / (12.0 * (1.0 - nu * nu));
    plate_series(0.5, 0.0, 1.0, q, d0, PLATE_SERIES_TERMS)
}

/// Von Kármán plate on the unit square, `E = 30 MPa`, `ν = 0.3`, `h = 0.01`,
/// transverse load up to `q = 1000 Pa` in equal load steps. All edges hold
/// `u1 = u2 = w = 0` (simply supported, immovable).
pub fn von_karman_plate(config: &BenchConfig) -> Result<BenchOutcome> {
    let bench = Benchmark::VonKarman;
    let cloud = config.grid(&BoxDomain::unit(2))?;
    let k = config.neighbor_count(&bench)?;
    let stab = config.phg > 0.0;
    let (supports, ops) = discretize(&cloud, k, config.weight, config.order, stab)?;
    let material = VonKarman::new(VK_E, VK_NU, VK_H)?;
    let mut wf = WeakForm::new(&cloud, &ops, &material)?;
    if stab {
        let d0 = material.flexural_rigidity();
        wf = wf.with_hourglass(super::plate::curvature_hourglass(
            &supports, &cloud, config.phg, d0,
        ))?;
    }
    let dofs = wf.dofs();
    let n = dofs.len();
    let k0 = wf.stiffness(&vec![0.0; n])?;
    let beta = config
        .penalty
        .unwrap_or_else(|| Penalty::default_beta(&k0, 1e6));
    let mut constraints = Vec::new();
    for i in cloud.tagged(BOUNDARY_TAG) {
        for f in 0..3 {
            constraints.push(Constraint {
                dof: dofs.dof(i, f),
                value: 0.0,
            });
        }
    }
    let penalty = Penalty::new(constraints, beta)?;
    let mut load = vec![0.0; n];
    for i in 0..cloud.len() {
        load[dofs.dof(i, 2)] = cloud.volume(i) * VK_Q;
    }
    let options = NewtonOptions {
        tol: config.tol,
        max_iter: config.max_iter,
        load_factors: Vec::new(),
    }
    .with_load_steps(config.load_steps);
    let mut log = Vec::new();
    let rep = newton_solve(
        |u: &[f64], lambda| {
            let mut r = wf.internal_force(u)?;
            for (ri, f) in r.iter_mut().zip(&load) {
                *ri -= lambda * f;
            }
            penalty.add_residual(u, lambda, &mut r);
            Ok(r)
        },
        |u: &[f64], _| {
            let mut kt = wf.stiffness(u)?;
            penalty.add_stiffness(&mut kt)?;
            Ok(kt)
        },
        vec![0.0; n],
        &options,
        |s| log.push(*s),
    )?;
    let center = cloud.nearest_point(&[0.5, 0.5]);
    let load_curve: Vec<(f64, f64)> = options
        .load_factors
        .iter()
        .zip(&rep.step_solutions)
        .map(|(l, u)| (*l, u[dofs.dof(center, 2)]))
        .collect();
    let w = dofs.field(&rep.u, 2);
    let linear_first =
        kirchhoff_center_deflection(VK_Q * options.load_factors[0], VK_E, VK_NU, VK_H);
    let dx = 1.0 / (config.nodes - 1) as f64;
    let mut rep_row = report(&cloud, dx, config, &w, None)?;
    rep_row.max_ratio_error = Some(load_curve[0].1 / linear_first - 1.0);
    let quantities = vec![
        ("center_deflection".into(), w[center]),
        ("first_step_deflection".into(), load_curve[0].1),
        ("first_step_linear".into(), linear_first),
    ];
    Ok(BenchOutcome {
        report: rep_row,
        field_names: vec!["u1".into(), "u2".into(), "w".into()],
        fields: vec![dofs.field(&rep.u, 0), dofs.field(&rep.u, 1), w],
        cloud,
        newton_log: log,
        quantities,
        load_curve,
    })
}
