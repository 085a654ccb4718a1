//! 2D Poisson equation by collocation on regular and jittered clouds.

use nonlocal::bench::{BenchConfig, Benchmark, CSV_HEADER};

fn main() -> nonlocal::Result<()> {
    let bench = Benchmark::Poisson2dStrong;
    println!("{CSV_HEADER},perturb");
    for perturb in [0.0, 0.5] {
        for order in [2, 3, 4] {
            for nodes in [11, 21, 41] {
                let config = BenchConfig {
                    nodes,
                    order,
                    perturb,
                    seed: 11,
                    ..bench.default_config()
                };
                println!("{},{perturb}", bench.run(&config)?.report.csv_row());
            }
        }
    }
    Ok(())
}
