use std::f64::consts::PI;

use super::{l2_norm, max_ratio_error, report, BenchConfig, BenchOutcome, Benchmark};
use crate::assembly::{assemble_strong, laplacian_terms, Constraint, StrongTerm};
use crate::error::Result;
use crate::operators::{build_operators_where, OperatorOptions, OperatorSet};
use crate::point_cloud::{build_supports, BoxDomain, PointCloud, BOUNDARY_TAG};
use crate::sparse::{smallest_eigenpair, solve_linear, EigenOptions};

/// `x⁵ - 3x - cos(πx) + 1`, the solution of `u'' = 20x³ + π² cos(πx)` with `u(0) = u(1) = 0`.
pub fn ode_exact(x: f64) -> f64 {
    x.powi(5) - 3.0 * x - (PI * x).cos() + 1.0
}

/// `x(1-x) y(1-y) e^{x-y}`.
pub fn poisson_2d_strong_exact(x: &[f64]) -> f64 {
    x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]) * (x[0] - x[1]).exp()
}

fn boundary_constraints(cloud: &PointCloud, value: impl Fn(&[f64]) -> f64) -> Vec<Constraint> {
    cloud
        .tagged(BOUNDARY_TAG)
        .into_iter()
        .map(|i| Constraint {
            dof: i,
            value: value(cloud.point(i)),
        })
        .collect()
}

/// Supports and operators for collocation; boundary rows carry no operator.
fn interior_operators(cloud: &PointCloud, k: usize, config: &BenchConfig) -> Result<OperatorSet> {
    let supports = build_supports(cloud, k, config.weight)?;
    build_operators_where(cloud, &supports, &OperatorOptions::new(config.order), |i| {
        !cloud.has_tag(i, BOUNDARY_TAG)
    })
}

fn solve_collocation(
    bench: Benchmark,
    config: &BenchConfig,
    domain: BoxDomain,
    terms: Vec<StrongTerm>,
    rhs: &(dyn Fn(&[f64]) -> f64 + Sync),
    exact: &dyn Fn(&[f64]) -> f64,
) -> Result<BenchOutcome> {
    let cloud = config.grid(&domain)?;
    let k = config.neighbor_count(&bench)?;
    let ops = interior_operators(&cloud, k, config)?;
    let bcs = boundary_constraints(&cloud, exact);
    let sys = assemble_strong(&cloud, &ops, &terms, None, rhs, &bcs)?;
    let u = solve_linear(&sys.matrix, &sys.rhs)?;
    let ex: Vec<f64> = (0..cloud.len()).map(|i| exact(cloud.point(i))).collect();
    let dx = (domain.hi[0] - domain.lo[0]) / (config.nodes - 1) as f64;
    let report = report(&cloud, dx, config, &u, Some(&ex))?;
    Ok(BenchOutcome {
        report,
        cloud,
        field_names: vec!["u".into(), "u_exact".into()],
        fields: vec![u, ex],
        newton_log: Vec::new(),
        quantities: Vec::new(),
        load_curve: Vec::new(),
    })
}

/// Second-order ODE on `[0, 1]` by strong-form collocation.
pub fn ode_1d(config: &BenchConfig) -> Result<BenchOutcome> {
    solve_collocation(
        Benchmark::Ode1d,
        config,
        BoxDomain::unit(1),
        vec![StrongTerm::new(&[2], 1.0)],
        &|x| 20.0 * x[0].powi(3) + PI * PI * (PI * x[0]).cos(),
        &|x| ode_exact(x[0]),
    )
}

/// `∇²u = 2x(y-1)(y-2x+xy+2)e^{x-y}` on the unit square by strong-form collocation.
pub fn poisson_2d_strong(config: &BenchConfig) -> Result<BenchOutcome> {
    solve_collocation(
        Benchmark::Poisson2dStrong,
        config,
        BoxDomain::unit(2),
        laplacian_terms(2, 1.0),
        &|x| {
            2.0 * x[0]
                * (x[1] - 1.0)
                * (x[1] - 2.0 * x[0] + x[0] * x[1] + 2.0)
                * (x[0] - x[1]).exp()
        },
        &poisson_2d_strong_exact,
    )
}

/// Ground state of `-½u'' + ½x²u = λu` on `[-10, 10]`, endpoints eliminated.
///
/// The report compares the normalized eigenvector with the exact ground
/// state `π^{-1/4} e^{-x²/2}`; the eigenvalue is returned as `lambda0`.
pub fn schrodinger_1d(config: &BenchConfig) -> Result<BenchOutcome> {
    let domain = BoxDomain::new(vec![-10.0], vec![10.0]);
    let cloud = config.grid(&domain)?;
    let k = config.neighbor_count(&Benchmark::Schrodinger1d)?;
    let ops = interior_operators(&cloud, k, config)?;
    let sys = assemble_strong(
        &cloud,
        &ops,
        &[StrongTerm::new(&[2], -0.5)],
        Some(&|x: &[f64]| 0.5 * x[0] * x[0]),
        &|_| 0.0,
        &[],
    )?;
    let interior: Vec<usize> = (0..cloud.len())
        .filter(|&i| !cloud.has_tag(i, BOUNDARY_TAG))
        .collect();
    let a = sys.matrix.submatrix(&interior);
    let (lambda, v) = smallest_eigenpair(
        &a,
        None,
        &EigenOptions {
            tol: 1e-12,
            ..EigenOptions::default()
        },
    )?;
    let mut phi = vec![0.0; cloud.len()];
    for (&i, x) in interior.iter().zip(&v) {
        phi[i] = *x;
    }
    let exact: Vec<f64> = (0..cloud.len())
        .map(|i| PI.powf(-0.25) * (-0.5 * cloud.point(i)[0].powi(2)).exp())
        .collect();
    let vol = cloud.volumes();
    let norm = |f: &[f64]| {
        f.iter()
            .zip(vol)
            .map(|(a, w)| a * a * w)
            .sum::<f64>()
            .sqrt()
    };
    let dot: f64 = phi
        .iter()
        .zip(&exact)
        .zip(vol)
        .map(|((a, b), w)| a * b * w)
        .sum();
    let scale = dot.signum() * norm(&exact) / norm(&phi);
    phi.iter_mut().for_each(|p| *p *= scale);
    let dx = 20.0 / (config.nodes - 1) as f64;
    let mut rep = report(&cloud, dx, config, &phi, None)?;
    rep.l2 = Some(l2_norm(&phi, &exact, vol)?);
    rep.max_ratio_error = Some(max_ratio_error(&phi, &exact)?);
    Ok(BenchOutcome {
        report: rep,
        cloud,
        field_names: vec!["phi".into(), "phi_exact".into()],
        fields: vec![phi, exact],
        newton_log: Vec::new(),
        quantities: vec![
            ("lambda0".into(), lambda),
            ("lambda0_error".into(), (lambda - 0.5).abs()),
        ],
        load_curve: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_solutions_satisfy_boundary_conditions() {
        assert!(ode_exact(0.0).abs() < 1e-15);
        assert!(ode_exact(1.0).abs() < 1e-15);
        for t in [0.0, 0.3, 1.0] {
            for p in [[t, 0.0], [t, 1.0], [0.0, t], [1.0, t]] {
                assert_eq!(poisson_2d_strong_exact(&p), 0.0);
            }
        }
    }

    #[test]
    fn ode_second_order_converges() {
        let run = |n| {
            ode_1d(&BenchConfig {
                nodes: n,
                order: 2,
                ..BenchConfig::default()
            })
            .unwrap()
            .report
            .l2
            .unwrap()
        };
        let (a, b) = (run(21), run(41));
        assert!(b < a);
        assert!((a / b).log2() > 1.8);
    }

    #[test]
    fn harmonic_oscillator_ground_state() {
        let out = schrodinger_1d(&BenchConfig {
            nodes: 201,
            order: 4,
            ..BenchConfig::default()
        })
        .unwrap();
        assert!(out.quantity("lambda0_error").unwrap() < 1e-3);
        assert!(out.report.l2.unwrap() < 1e-2);
    }
}
