//! Poisson equation from its energy functional in 2 to 5 dimensions.
//!
//! `cargo run --release --example poisson_weak -- 3` runs only the 3D case.

use nonlocal::bench::{BenchConfig, Benchmark, CSV_HEADER};

fn main() -> nonlocal::Result<()> {
    let only: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let cases: &[(usize, usize, usize)] = &[
        (2, 41, 1),
        (2, 41, 2),
        (2, 41, 3),
        (2, 81, 2),
        (3, 22, 1),
        (4, 11, 1),
        (5, 6, 1),
    ];
    println!("dim,{CSV_HEADER}");
    for &(dim, nodes, order) in cases {
        if only.is_some_and(|d| d != dim) {
            continue;
        }
        let bench = Benchmark::PoissonWeak(dim);
        let config = BenchConfig {
            nodes,
            order,
            ..bench.default_config()
        };
        println!("{dim},{}", bench.run(&config)?.report.csv_row());
    }
    Ok(())
}
