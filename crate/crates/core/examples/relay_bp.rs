// Relay-BP next to plain min-sum on matched shots: the extra legs do not
// rescue syndromes whose defect count is not a multiple of `w`.
//
// Run with: cargo run --release --example relay_bp

use bblab::bp::Schedule;
use bblab::code::lookup;
use bblab::error::Result;
use bblab::harness::{run_point, DecoderSettings, Tally};
use bblab::noise::NoiseSpec;
use bblab::record::DecoderVariant;

pub fn run_example() -> Result<()> {
    let code = lookup("gross")?;
    let grid = [
        (DecoderVariant::BpOsd, Schedule::Parallel),
        (DecoderVariant::RelayOsd, Schedule::Parallel),
    ];
    let point = run_point(
        &code,
        &NoiseSpec::phenomenological(0.01),
        &grid,
        &DecoderSettings::default(),
        400,
        21,
        false,
    )?;
    for run in &point.runs {
        let t = Tally::of(&run.records);
        println!(
            "{:<10} mod-w = 0: {:>3}/{:<3} converged   mod-w != 0: {:>3}/{:<3}",
            run.decoder.name(),
            t.mod_zero_converged,
            t.mod_zero,
            t.mod_nonzero_converged,
            t.mod_nonzero
        );
    }
    let recovered = point.runs[0]
        .records
        .iter()
        .zip(&point.runs[1].records)
        .filter(|(s, r)| !s.is_trivial() && !s.mod_w_zero() && !s.converged && r.converged)
        .count();
    println!("mod-w != 0 failures rescued by relay: {recovered}");
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
