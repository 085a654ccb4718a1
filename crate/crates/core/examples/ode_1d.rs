//! `u'' = 20x³ + π² cos(πx)` by collocation: convergence for several orders.

use nonlocal::bench::{fit_slope, run_convergence, BenchConfig, Benchmark, CSV_HEADER};

fn main() -> nonlocal::Result<()> {
    println!("{CSV_HEADER}");
    for order in [2, 4, 6] {
        let ladder: Vec<BenchConfig> = [21, 41, 81, 161]
            .iter()
            .map(|&nodes| BenchConfig {
                nodes,
                order,
                ..Benchmark::Ode1d.default_config()
            })
            .collect();
        let conv = run_convergence(Benchmark::Ode1d, &ladder)?;
        for r in conv.reports() {
            println!("{}", r.csv_row());
        }
        println!(
            "# order {order}: rate {:.2}",
            fit_slope(&conv.reports()).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
