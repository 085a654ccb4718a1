//! Simply supported Kirchhoff plate against the series solution.

use nonlocal::bench::{BenchConfig, Benchmark};

fn main() -> nonlocal::Result<()> {
    for nodes in [20, 30, 40] {
        let config = BenchConfig {
            nodes,
            ..Benchmark::Plate.default_config()
        };
        let out = Benchmark::Plate.run(&config)?;
        println!(
            "{nodes}x{nodes}: w = {:.6e}  series = {:.6e}  relative error {:.3}%  L2 {:.3e}",
            out.quantity("center_deflection").unwrap(),
            out.quantity("center_series").unwrap(),
            100.0 * out.quantity("center_rel_error").unwrap(),
            out.report.l2.unwrap()
        );
    }
    Ok(())
}
