//! A user-defined problem: `∇²u = -2` on a disk with `u = 0` on its rim,
//! read from a point file and a problem file.

use std::fmt::Write as _;

use nonlocal::bench::{BenchConfig, CustomProblem};

fn main() -> nonlocal::Result<()> {
    let dir = std::env::temp_dir().join("nonlocal-custom-example");
    std::fs::create_dir_all(&dir)?;
    let (rings, dr) = (12usize, 1.0 / 12.0);
    let mut pts = format!(
        "# dim 2\n0 0 {} interior\n",
        std::f64::consts::PI * dr * dr / 4.0
    );
    let mut count = 1;
    for r in 1..=rings {
        let radius = r as f64 * dr;
        let m = 6 * r;
        let tag = if r == rings { "rim" } else { "interior" };
        for k in 0..m {
            let t = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            let vol = if r == rings { 0.5 } else { 1.0 } * 2.0 * std::f64::consts::PI * radius * dr
                / m as f64;
            writeln!(pts, "{} {} {vol} {tag}", radius * t.cos(), radius * t.sin()).unwrap();
            count += 1;
        }
    }
    std::fs::write(dir.join("disk.pts"), pts)?;
    std::fs::write(
        dir.join("disk.problem"),
        "cloud = disk.pts\norder = 2\nterm = 2,0 1\nterm = 0,2 1\nsource = -2\ndirichlet = rim 0\nweight = gauss\n",
    )?;
    let problem = CustomProblem::from_file(&dir.join("disk.problem"))?;
    let out = problem.solve(&BenchConfig::default())?;
    // exact solution (1 - r²) / 2
    let err = (0..out.cloud.len())
        .map(|i| {
            let p = out.cloud.point(i);
            (out.fields[0][i] - 0.5 * (1.0 - p[0] * p[0] - p[1] * p[1])).abs()
        })
        .fold(0.0, f64::max);
    println!("{count} points, max nodal error {err:.2e}");
    Ok(())
}
