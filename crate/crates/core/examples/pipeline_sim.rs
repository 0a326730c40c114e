// Discrete-event pipeline: mod-w pre-routing against sending every shot
// through BP first.
//
// Run with: cargo run --release --example pipeline_sim

use bblab::bp::Schedule;
use bblab::code::lookup;
use bblab::error::Result;
use bblab::harness::{run_point, simulate_labels, DecoderSettings};
use bblab::noise::NoiseSpec;
use bblab::pipeline::{PipelineConfig, ShotLabel};
use bblab::record::DecoderVariant;

pub fn run_example() -> Result<()> {
    let code = lookup("gross")?;
    let point = run_point(
        &code,
        &NoiseSpec::phenomenological(0.001),
        &[(DecoderVariant::BpOsd, Schedule::Parallel)],
        &DecoderSettings::default(),
        3000,
        3,
        false,
    )?;
    let labels: Vec<ShotLabel> = point.primary().iter().map(ShotLabel::from).collect();

    let cfg = PipelineConfig::default().with_arrival_period(30.0);
    for r in simulate_labels(&cfg, &labels, 3)? {
        println!("{:?}", r.routing);
        println!("  mean cost {:.1} us/shot, mean latency {:.1} us", r.mean_cost_us, r.mean_latency_us);
        for pool in &r.pools {
            println!(
                "  {:<4} served {:>5}  utilization {:.2}  mean queue {:.2}  max queue {}",
                pool.name,
                pool.served,
                pool.utilization.iter().sum::<f64>() / pool.workers as f64,
                pool.mean_queue_depth,
                pool.max_queue_depth
            );
        }
        if r.pool("osd").is_some() {
            println!("  OSD share of nontrivial shots {:.3}", r.osd_fraction);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
