//! Nearly incompressible block pressed on its top face.

use nonlocal::bench::{BenchConfig, Benchmark};

fn main() -> nonlocal::Result<()> {
    let nodes = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(11);
    let config = BenchConfig {
        nodes,
        ..Benchmark::NeoHookeBlock.default_config()
    };
    let out = Benchmark::NeoHookeBlock.run(&config)?;
    println!("load   w_max (mm)");
    for (l, w) in &out.load_curve {
        println!("{l:.1}  {w:.4}");
    }
    println!(
        "total force {:.1} N, {} Newton iterations",
        out.quantity("total_force").unwrap(),
        out.newton_log.len()
    );
    Ok(())
}
