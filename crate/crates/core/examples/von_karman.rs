//! Von Kármán plate under increasing pressure, compared with linear theory.

use nonlocal::bench::{kirchhoff_center_deflection, BenchConfig, Benchmark};

fn main() -> nonlocal::Result<()> {
    let nodes = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(30);
    let config = BenchConfig {
        nodes,
        ..Benchmark::VonKarman.default_config()
    };
    let out = Benchmark::VonKarman.run(&config)?;
    println!("load   w_center      linear");
    for (l, w) in &out.load_curve {
        println!(
            "{l:.1}  {w:.6e}  {:.6e}",
            kirchhoff_center_deflection(1000.0 * l, 30e6, 0.3, 0.01)
        );
    }
    println!("Newton iterations: {}", out.newton_log.len());
    Ok(())
}
