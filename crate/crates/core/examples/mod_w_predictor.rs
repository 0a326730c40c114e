// The one-line predictor: `defect_count mod w == 0` against actual BP
// convergence, as a confusion matrix.
//
// Run with: cargo run --release --example mod_w_predictor

use bblab::bp::Schedule;
use bblab::code::lookup;
use bblab::error::Result;
use bblab::harness::{run_point, DecoderSettings};
use bblab::noise::NoiseSpec;
use bblab::predictor::{classifier_report, PredictRule};
use bblab::record::DecoderVariant;

pub fn run_example() -> Result<()> {
    let code = lookup("gross")?;
    for p in [0.001, 0.01] {
        let point = run_point(
            &code,
            &NoiseSpec::phenomenological(p),
            &[(DecoderVariant::BpOsd, Schedule::Parallel)],
            &DecoderSettings::default(),
            1500,
            11,
            false,
        )?;
        let r = classifier_report(point.primary(), PredictRule::ModW);
        println!("p = {p}: {} nontrivial syndromes", r.total());
        println!("                 BP converged  BP failed");
        println!("  predict conv   {:>12}  {:>9}", r.true_converge, r.false_positive);
        println!("  predict fail   {:>12}  {:>9}", r.false_negative, r.true_fail);
        println!(
            "  FP {:.4}  FN {:.4}  AUC {:.4}",
            r.fp_rate.unwrap_or(f64::NAN),
            r.fn_rate.unwrap_or(f64::NAN),
            r.auc.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
