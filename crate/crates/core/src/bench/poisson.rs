use super::{discretize, report, BenchConfig, BenchOutcome, Benchmark};
use crate::assembly::{source_load, Constraint, Penalty, WeakForm};
use crate::error::{NomError, Result};
use crate::materials::poisson;
use crate::newton::{newton_solve, NewtonOptions};
use crate::point_cloud::{BoxDomain, BOUNDARY_TAG};

fn sign(i: usize) -> f64 {
    if i % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `exp(Σ (-1)^{i-1} x_i) Π x_i (1 - x_i)`.
pub fn poisson_exact(x: &[f64]) -> f64 {
    let s: f64 = x.iter().enumerate().map(|(i, v)| sign(i) * v).sum();
    s.exp() * x.iter().map(|v| v * (1.0 - v)).product::<f64>()
}

/// Laplacian of [`poisson_exact`], term by term.
pub fn poisson_source(x: &[f64]) -> f64 {
    let s: f64 = x.iter().enumerate().map(|(i, v)| sign(i) * v).sum();
    let g: Vec<f64> = x.iter().map(|v| v * (1.0 - v)).collect();
    let mut total = 0.0;
    for i in 0..x.len() {
        let others: f64 = g
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v)
            .product();
        // (e^{σx} g)'' = e^{σx} (g + 2σ g' + g'') with σ² = 1
        total += others * (g[i] + 2.0 * sign(i) * (1.0 - 2.0 * x[i]) - 2.0);
    }
    s.exp() * total
}

/// `∇²u = f` on `[0, 1]^dim` from the energy `½|∇u|² + f u`, penalty Dirichlet data.
pub fn poisson_weak(dim: usize, config: &BenchConfig) -> Result<BenchOutcome> {
    if !(1..=5).contains(&dim) {
        return Err(NomError::Config(format!(
            "weak Poisson supports 1 to 5 dimensions, got {dim}"
        )));
    }
    let bench = Benchmark::PoissonWeak(dim);
    let cloud = config.grid(&BoxDomain::unit(dim))?;
    let k = config.neighbor_count(&bench)?;
    let stab = config.phg > 0.0;
    let (_, ops) = discretize(&cloud, k, config.weight, config.order, stab)?;
    let material = poisson(dim);
    let mut wf = WeakForm::new(&cloud, &ops, &material)?;
    if stab {
        wf = wf.with_hourglass(vec![config.phg; cloud.len()])?;
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
    let load = source_load(&cloud, &poisson_source);
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
    let exact: Vec<f64> = (0..n).map(|i| poisson_exact(cloud.point(i))).collect();
    let dx = 1.0 / (config.nodes - 1) as f64;
    let report = report(&cloud, dx, config, &rep.u, Some(&exact))?;
    Ok(BenchOutcome {
        report,
        cloud,
        field_names: vec!["u".into(), "u_exact".into()],
        fields: vec![rep.u, exact],
        newton_log: log,
        quantities: vec![("penalty".into(), beta)],
        load_curve: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_matches_printed_two_dimensional_formula() {
        for p in [[0.3f64, 0.7], [0.1, 0.2], [0.9, 0.5]] {
            let (x, y) = (p[0], p[1]);
            let printed = 2.0 * x * (y - 1.0) * (y - 2.0 * x + x * y + 2.0) * (x - y).exp();
            assert!((poisson_source(&p) - printed).abs() < 1e-13);
        }
    }

    #[test]
    fn source_matches_finite_difference_laplacian() {
        let x = [0.31, 0.62, 0.47, 0.18, 0.83];
        for d in 2..=5 {
            let p = &x[..d];
            let h = 1e-4;
            let mut lap = 0.0;
            for k in 0..d {
                let mut a = p.to_vec();
                let mut b = p.to_vec();
                a[k] += h;
                b[k] -= h;
                lap += (poisson_exact(&a) - 2.0 * poisson_exact(p) + poisson_exact(&b)) / (h * h);
            }
            let f = poisson_source(p);
            assert!((lap - f).abs() < 1e-4 * f.abs().max(1e-3));
        }
    }

    #[test]
    fn coarse_weak_solve_is_close() {
        let out = poisson_weak(
            2,
            &BenchConfig {
                nodes: 21,
                order: 2,
                phg: 1.0,
                ..BenchConfig::default()
            },
        )
        .unwrap();
        assert!(out.report.l2.unwrap() < 0.2);
        assert!(!out.newton_log.is_empty());
    }
}
