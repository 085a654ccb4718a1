//! Nonlocal derivatives of a smooth field on a jittered cloud, and the
//! stabilization matrix of one support.

use nonlocal::operators::{build_operators, OperatorOptions};
use nonlocal::point_cloud::{
    build_grid, build_supports, default_neighbor_count, BoxDomain, WeightKind,
};

fn main() -> nonlocal::Result<()> {
    let cloud = build_grid(&BoxDomain::unit(2), &[31, 31], 0.4, 7)?;
    let f = |x: &[f64]| (2.0 * x[0]).sin() * (x[1] * x[1]).exp();
    let u: Vec<f64> = (0..cloud.len()).map(|i| f(cloud.point(i))).collect();
    let probe = cloud.nearest_point(&[0.5, 0.5]);
    let x = cloud.point(probe).to_vec();
    let (sx, cx) = ((2.0 * x[0]).sin(), (2.0 * x[0]).cos());
    let ey = (x[1] * x[1]).exp();
    for order in 1..=4 {
        let k = default_neighbor_count(2, order)?;
        let supports = build_supports(&cloud, k, WeightKind::Gaussian)?;
        let ops = build_operators(
            &cloud,
            &supports,
            &OperatorOptions::new(order).with_stabilization(true),
        )?;
        let d = ops.derivatives_of(probe, &u);
        let exact = |idx: &[u32]| match (idx[0], idx[1]) {
            (1, 0) => 2.0 * cx * ey,
            (0, 1) => sx * 2.0 * x[1] * ey,
            (2, 0) => -4.0 * sx * ey,
            (1, 1) => 2.0 * cx * 2.0 * x[1] * ey,
            (0, 2) => sx * (2.0 + 4.0 * x[1] * x[1]) * ey,
            _ => f64::NAN,
        };
        println!(
            "order {order}, {} neighbors, min rcond {:.2e}",
            supports.neighbors(probe).len(),
            ops.min_rcond()
        );
        for (idx, v) in ops.indexes.indexes().iter().zip(&d) {
            let e = exact(idx);
            if e.is_finite() {
                println!("  u_{idx:?} = {v:+.6}  error {:.2e}", (v - e).abs());
            }
        }
        let stab = ops.get(probe).stabilization.as_ref().expect("requested");
        let linear: Vec<f64> = ops
            .get(probe)
            .stencil
            .iter()
            .map(|&j| 1.0 + cloud.point(j)[0] - 2.0 * cloud.point(j)[1])
            .collect();
        println!(
            "  fit residual energy of a linear field {:.2e}",
            stab.fit_residual_energy(&linear)
        );
    }
    Ok(())
}
