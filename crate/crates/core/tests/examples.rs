mod codes {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/codes.rs"));
}

mod gf2_solve {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/gf2_solve.rs"));
}

mod noise_models {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/noise_models.rs"));
}

mod bp_schedules {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/bp_schedules.rs"));
}

mod osd_fallback {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/osd_fallback.rs"));
}

mod mod_w_predictor {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/mod_w_predictor.rs"));
}

mod feature_auc {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/feature_auc.rs"));
}

mod relay_bp {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/relay_bp.rs"));
}

mod pipeline_sim {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/pipeline_sim.rs"));
}

mod run_table {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/run_table.rs"));
}

#[test]
fn codes_example_runs() {
    codes::run_example().expect("codes example should run");
}

#[test]
fn gf2_solve_example_runs() {
    gf2_solve::run_example().expect("gf2_solve example should run");
}

#[test]
fn noise_models_example_runs() {
    noise_models::run_example().expect("noise_models example should run");
}

#[test]
fn bp_schedules_example_runs() {
    bp_schedules::run_example().expect("bp_schedules example should run");
}

#[test]
fn osd_fallback_example_runs() {
    osd_fallback::run_example().expect("osd_fallback example should run");
}

#[test]
fn mod_w_predictor_example_runs() {
    mod_w_predictor::run_example().expect("mod_w_predictor example should run");
}

#[test]
fn feature_auc_example_runs() {
    feature_auc::run_example().expect("feature_auc example should run");
}

#[test]
fn relay_bp_example_runs() {
    relay_bp::run_example().expect("relay_bp example should run");
}

#[test]
fn pipeline_sim_example_runs() {
    pipeline_sim::run_example().expect("pipeline_sim example should run");
}

#[test]
fn run_table_example_runs() {
    run_table::run_example().expect("run_table example should run");
}
