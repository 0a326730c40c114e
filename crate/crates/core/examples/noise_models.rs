// Samples code-capacity and phenomenological shots and splits each
// defect count into data, measurement and overlap terms.
//
// Run with: cargo run --example noise_models

use bblab::code::{lookup, Basis};
use bblab::error::Result;
use bblab::noise::{defect_decomposition, sample_shot, NoiseSpec};

pub fn run_example() -> Result<()> {
    let code = lookup("gross")?;
    let specs = [
        ("code capacity p=0.02", NoiseSpec::code_capacity(0.02)),
        ("fixed weight 3", NoiseSpec::fixed_weight(3)),
        ("phenomenological p=0.01", NoiseSpec::phenomenological(0.01)),
    ];
    for (label, spec) in specs {
        println!("{label}");
        for shot in 0..4 {
            let (sample, syn) = sample_shot(&code, &spec, 42, shot)?;
            let d = defect_decomposition(&code, Basis::ZMemory, &sample);
            println!(
                "  |e| = {:>2}  |m| = {:>2}  defects = {:>2} = {} + {} - 2*{}  mod 3 = {}",
                sample.data_weight(),
                sample.meas_count(),
                syn.defect_count,
                d.data_term,
                d.meas_term,
                d.overlap,
                syn.mod_w_class()
            );
            assert_eq!(d.defect_count(), syn.defect_count);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
