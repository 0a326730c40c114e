// BP+OSD-0: BP handles a data-error syndrome on its own; a syndrome with a
// measurement flip defeats BP and OSD-0 takes over.
//
// Run with: cargo run --example osd_fallback

use bblab::bp::BpConfig;
use bblab::code::lookup;
use bblab::error::Result;
use bblab::gf2::BitVec;
use bblab::osd::decode_bp_osd;

pub fn run_example() -> Result<()> {
    let code = lookup("gross")?;
    let cfg = BpConfig::new(0.01);

    let data_only = code.hz.matvec(&BitVec::from_indices(code.n(), &[12, 90]))?;
    let mut with_meas = data_only.clone();
    let extra = (0..code.n_checks()).find(|&c| !with_meas.get(c)).unwrap_or(0);
    with_meas.flip(extra);

    for (label, s) in [("two data errors", &data_only), ("plus one measurement flip", &with_meas)] {
        let out = decode_bp_osd(&code.hz, s, &cfg)?;
        println!(
            "{label:<26} defects {:>2} (mod 3 = {})  path {:<7} bp_converged {:<5} iterations {:>3}  valid {}",
            s.count_ones(),
            s.count_ones() % 3,
            out.path.name(),
            out.bp_converged,
            out.iterations,
            out.valid
        );
    }
    // The lone extra defect makes the syndrome unreachable by data errors,
    // so even OSD's estimate can only match it up to that defect.
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
