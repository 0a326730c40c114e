// Min-sum BP under the three message-passing schedules on the same
// phenomenological syndromes.
//
// Run with: cargo run --release --example bp_schedules

use bblab::bp::{BpConfig, MinSumDecoder, Schedule};
use bblab::code::lookup;
use bblab::error::Result;
use bblab::noise::{sample_shot, NoiseSpec};

pub fn run_example() -> Result<()> {
    let code = lookup("gross")?;
    let spec = NoiseSpec::phenomenological(0.01);
    let shots = 300;
    let syndromes: Vec<_> = (0..shots)
        .map(|s| sample_shot(&code, &spec, 7, s).map(|(_, syn)| syn))
        .collect::<Result<_>>()?;

    let mut dec = MinSumDecoder::new(&code.hz);
    for schedule in Schedule::ALL {
        let cfg = BpConfig::new(0.01).with_schedule(schedule);
        let (mut converged, mut iters) = (0, 0);
        for s in &syndromes {
            let r = dec.decode(&s.bits, &cfg)?;
            converged += r.converged as usize;
            iters += r.iterations;
        }
        println!(
            "{:<16} converged {:>3}/{shots}  mean iterations {:.1}",
            schedule.name(),
            converged,
            iters as f64 / shots as f64
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
