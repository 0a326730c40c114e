// Runs a shipped experiment spec at reduced scale and writes its CSV and
// JSON. Output goes to `$BBLAB_OUT` when set, else a temporary directory.
//
// Run with: cargo run --release --example run_table -- 11

use std::path::PathBuf;

use bblab::error::Result;
use bblab::harness::{builtin_spec, run_experiment, OUT_DIR_ENV};

pub fn run_table(id: &str) -> Result<()> {
    let spec = builtin_spec(id)?.scaled(0.1);
    let out = run_experiment(&spec)?;
    for t in &out.tables {
        print!("{}", t.to_csv_string()?);
    }
    let dir = std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("bblab-example"));
    for path in out.write_to(&dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn run_example() -> Result<()> {
    run_table("11")
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let id = std::env::args().nth(1).unwrap_or_else(|| "11".into());
    run_table(&id)
}
