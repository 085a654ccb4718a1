use super::{discretize, report, BenchConfig, BenchOutcome, Benchmark};
use crate::assembly::{Constraint, Penalty, WeakForm};
use crate::error::Result;
use crate::materials::NeoHooke;
use crate::newton::{newton_solve, NewtonOptions};
use crate::point_cloud::{BoxDomain, VolumeRule};

/// Geometry and loading of the compressed block (mm, MPa).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSetup {
    /// Height; the modeled quarter is an `h × h × h` cube.
    pub height: f64,
    pub pressure: f64,
    pub kappa: f64,
    pub mu: f64,
    /// Reference top-center displacement at 11³ nodes.
    pub reference_w: f64,
}

impl Default for BlockSetup {
    fn default() -> Self {
        Self {
            height: 50.0,
            pressure: 3.0,
            kappa: 499.92568,
            mu: 1.61148,
            reference_w: 19.14,
        }
    }
}

/// Loaded width of a node at `x` for a patch `[0, limit]` on a lattice of spacing `dx`.
/// Trapezoid widths clip the node cell to the patch; full cells count whole
/// when the node lies in the patch.
fn patch_width(x: f64, dx: f64, limit: f64, rule: VolumeRule) -> f64 {
    match rule {
        VolumeRule::Trapezoid => {
            let lo = (x - 0.5 * dx).max(0.0);
            let hi = (x + 0.5 * dx).min(limit);
            (hi - lo).max(0.0)
        }
        VolumeRule::Cell => {
            if x <= limit + 1e-9 * dx {
                dx
            } else {
                0.0
            }
        }
    }
}

/// Quarter of a nearly incompressible block under a dead pressure on the top
/// center patch. Symmetry planes `x = 0` and `y = 0` and the bottom face are
/// rollers. Reports the top-center settlement `w_max` (positive downward).
/// Nodal loads follow the volume rule of the config.
pub fn neo_hooke_block(config: &BenchConfig) -> Result<BenchOutcome> {
    let setup = BlockSetup::default();
    let bench = Benchmark::NeoHookeBlock;
    let h = setup.height;
    let domain = BoxDomain::new(vec![0.0; 3], vec![h; 3]);
    let cloud = config.grid(&domain)?;
    let k = config.neighbor_count(&bench)?;
    let stab = config.phg > 0.0;
    let (_, ops) = discretize(&cloud, k, config.weight, config.order, stab)?;
    let material = NeoHooke::new(setup.kappa, setup.mu)?;
    let mut wf = WeakForm::new(&cloud, &ops, &material)?;
    if stab {
        wf = wf.with_hourglass(vec![config.phg * setup.mu; cloud.len()])?;
    }
    let dofs = wf.dofs();
    let n = dofs.len();
    let k0 = wf.stiffness(&vec![0.0; n])?;
    let beta = config
        .penalty
        .unwrap_or_else(|| Penalty::default_beta(&k0, 1e6));
    let mut constraints = Vec::new();
    for (tag, field) in [("xmin", 0), ("ymin", 1), ("zmin", 2)] {
        for i in cloud.tagged(tag) {
            constraints.push(Constraint {
                dof: dofs.dof(i, field),
                value: 0.0,
            });
        }
    }
    let penalty = Penalty::new(constraints, beta)?;
    let dx = h / (config.nodes - 1) as f64;
    let half = 0.5 * h;
    let mut load = vec![0.0; n];
    for i in cloud.tagged("zmax") {
        let p = cloud.point(i);
        let area = patch_width(p[0], dx, half, config.volumes)
            * patch_width(p[1], dx, half, config.volumes);
        load[dofs.dof(i, 2)] = -setup.pressure * area;
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
    let top = cloud.nearest_point(&[0.0, 0.0, h]);
    let load_curve: Vec<(f64, f64)> = options
        .load_factors
        .iter()
        .zip(&rep.step_solutions)
        .map(|(l, u)| (*l, -u[dofs.dof(top, 2)]))
        .collect();
    let w_max = -rep.u[dofs.dof(top, 2)];
    let mut rep_row = report(&cloud, dx, config, &rep.u, None)?;
    rep_row.max_ratio_error = Some(w_max / setup.reference_w - 1.0);
    Ok(BenchOutcome {
        report: rep_row,
        field_names: vec!["u".into(), "v".into(), "w".into()],
        fields: vec![
            dofs.field(&rep.u, 0),
            dofs.field(&rep.u, 1),
            dofs.field(&rep.u, 2),
        ],
        cloud,
        newton_log: log,
        quantities: vec![
            ("w_max".into(), w_max),
            ("total_force".into(), -load.iter().sum::<f64>()),
        ],
        load_curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patch_areas_sum_to_patch() {
        let dx = 5.0;
        let total: f64 = (0..11)
            .flat_map(|a| (0..11).map(move |b| (a as f64 * dx, b as f64 * dx)))
            .map(|(x, y)| {
                patch_width(x, dx, 25.0, VolumeRule::Trapezoid)
                    * patch_width(y, dx, 25.0, VolumeRule::Trapezoid)
            })
            .sum();
        assert!((total - 625.0).abs() < 1e-12);
        let cells: f64 = (0..11)
            .map(|a| patch_width(a as f64 * dx, dx, 25.0, VolumeRule::Cell))
            .sum();
        assert_eq!(cells, 30.0);
    }
}
