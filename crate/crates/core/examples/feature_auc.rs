// Syndrome features and their AUC as predictors of BP failure.
//
// Run with: cargo run --release --example feature_auc

use bblab::bp::Schedule;
use bblab::code::lookup;
use bblab::error::Result;
use bblab::harness::{run_point, DecoderSettings};
use bblab::noise::{sample_shot, NoiseSpec};
use bblab::predictor::{extract_features, feature_aucs};
use bblab::record::DecoderVariant;

pub fn run_example() -> Result<()> {
    let code = lookup("gross")?;
    let spec = NoiseSpec::phenomenological(0.01);

    let (_, syn) = (0..)
        .map(|s| sample_shot(&code, &spec, 5, s))
        .find(|r| r.as_ref().map_or(true, |(_, s)| s.defect_count >= 5))
        .expect("infinite iterator")?;
    println!("one syndrome: {:?}", extract_features(&code.hz, code.w, &syn)?);

    let point = run_point(
        &code,
        &spec,
        &[(DecoderVariant::BpOsd, Schedule::Parallel)],
        &DecoderSettings::default(),
        1000,
        5,
        false,
    )?;
    let a = feature_aucs(point.primary())?;
    println!("AUC over {} nontrivial shots (positive class: BP fails)", a.nontrivial);
    println!("  mod-w != 0          {:.3}", a.mod_w);
    println!("  defect count        {:.3}", a.defect_count);
    println!("  max component       {:.3}", a.max_component);
    println!("  position variance   {:.3}", a.position_variance);
    println!("  mod-w + count       {:.3}", a.mod_w_plus_defect_count);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
