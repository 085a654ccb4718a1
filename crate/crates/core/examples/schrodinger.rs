//! Ground state of the harmonic oscillator on regular and jittered nodes.

use nonlocal::bench::{BenchConfig, Benchmark};

fn main() -> nonlocal::Result<()> {
    for perturb in [0.0, 0.5] {
        println!("perturbation {perturb}");
        for nodes in [101, 201, 401, 801] {
            let config = BenchConfig {
                nodes,
                perturb,
                seed: 3,
                ..Benchmark::Schrodinger1d.default_config()
            };
            let out = Benchmark::Schrodinger1d.run(&config)?;
            println!(
                "  N = {nodes:4}  lambda0 = {:.10}  |error| = {:.2e}  eigenvector L2 = {:.2e}",
                out.quantity("lambda0").unwrap(),
                out.quantity("lambda0_error").unwrap(),
                out.report.l2.unwrap()
            );
        }
    }
    Ok(())
}
