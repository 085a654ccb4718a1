//! Multi-index sets, their sizes and the scaled monomial basis.

use nonlocal::multi_index::{count_indexes, enumerate_indexes, monomial_vector, scaling_matrix};

fn main() -> nonlocal::Result<()> {
    let set = enumerate_indexes(2, 2)?;
    println!("order 2 in 2D: {:?}", set.indexes());

    println!("\nterms n_p by dimension (rows) and order (columns)");
    print!("{:>4}", "d");
    for n in 1..=6 {
        print!("{n:>7}");
    }
    println!();
    for d in 1..=6 {
        print!("{d:>4}");
        for n in 1..=6 {
            print!("{:>7}", count_indexes(d, n)?);
        }
        println!();
    }

    let h = 0.5;
    let r = [0.2, -0.1];
    let p = monomial_vector(&set, &r, h)?;
    let s = scaling_matrix(&set, h)?;
    println!("\nscaled monomials at r = {r:?}, h = {h}:");
    for ((idx, v), d) in set.indexes().iter().zip(&p).zip(&s.diag) {
        println!("  {idx:?}  p = {v:+.5}  H = {d:.5}");
    }
    Ok(())
}
