// Bit-packed GF(2) algebra: rank, Gauss-Jordan elimination in a chosen
// column order, and solving `H x = s`.
//
// Run with: cargo run --example gf2_solve

use bblab::code::lookup;
use bblab::error::Result;
use bblab::gf2::{row_reduce, solve_in_image, BitVec, Gf2Matrix};

pub fn run_example() -> Result<()> {
    let m = Gf2Matrix::parse_rows(&["1101", "0110", "1011"])?;
    println!("M =\n{m}rank {}", m.rank());

    let ech = row_reduce(&m, &[3, 2, 1, 0])?;
    println!("pivots when eliminating right to left: {:?}", ech.pivots);

    let gross = lookup("gross")?;
    let e = BitVec::from_indices(gross.n(), &[5, 77]);
    let s = gross.hz.matvec(&e)?;
    let x = solve_in_image(&gross.hz, &s)?.expect("a syndrome of a real error is solvable");
    println!(
        "two-qubit error -> {} defects -> solution of weight {} reproducing them: {}",
        s.count_ones(),
        x.count_ones(),
        gross.hz.matvec(&x)? == s
    );

    // One flipped check on its own is never a data-error syndrome.
    let lone = BitVec::from_indices(gross.n_checks(), &[0]);
    println!("single defect solvable: {}", solve_in_image(&gross.hz, &lone)?.is_some());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
