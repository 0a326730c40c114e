use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use bblab::code::registry;
use bblab::error::{Error, Result};
use bblab::harness::{
    builtin_spec, read_records, run_experiment, run_point, simulate_labels, Analysis,
    DecoderSettings, ExperimentOutput, ExperimentSpec, OUT_DIR_ENV,
};
use bblab::bp::Schedule;
use bblab::code::lookup;
use bblab::noise::NoiseSpec;
use bblab::pipeline::{PipelineConfig, ShotLabel};
use bblab::record::DecoderVariant;

#[derive(Parser)]
#[command(name = "bblab", version, about = "Mod-w convergence experiments on bivariate bicycle codes")]
struct Cli {
    /// Directory for CSV and JSON output; stdout when unset.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Code registry.
    Codes {
        #[command(subcommand)]
        action: CodesAction,
    },
    /// Run an experiment spec file.
    Run {
        spec: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        shots_scale: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a shipped table spec by number or name.
    Table {
        id: String,
        #[arg(long, default_value_t = 1.0)]
        shots_scale: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate the decoder pipeline described by a TOML file.
    Simulate { config: PathBuf },
    /// Feature AUCs at one error rate.
    Features {
        #[arg(long)]
        p: f64,
        #[arg(long, default_value = "gross")]
        code: String,
        #[arg(long, default_value_t = 5000)]
        shots: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum CodesAction {
    List,
}

/// `simulate` input: pipeline settings plus where the shots come from.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulationFile {
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    pipeline: PipelineConfig,
    source: ShotSource,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ShotSource {
    Trace {
        trace: PathBuf,
    },
    Noise {
        #[serde(default = "gross")]
        code: String,
        p: f64,
        shots: usize,
    },
}

fn gross() -> String {
    "gross".into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Codes { action: CodesAction::List } => list_codes(),
        Command::Run { spec, shots_scale, seed } => {
            let spec = ExperimentSpec::load(spec)?;
            run(spec, *shots_scale, *seed, out)
        }
        Command::Table { id, shots_scale, seed } => run(builtin_spec(id)?, *shots_scale, *seed, out),
        Command::Simulate { config } => simulate(config, out),
        Command::Features { p, code, shots, seed } => {
            let mut spec = ExperimentSpec::template("features", Analysis::Features, *shots, *seed);
            spec.codes = vec![code.clone()];
            spec.p = vec![*p];
            run(spec, 1.0, None, out)
        }
    }
}

fn list_codes() -> Result<()> {
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "name,l,m,n,k,w,a,b,provenance")?;
    for c in registry() {
        writeln!(
            stdout,
            "{},{},{},{},{},{},{},{},\"{}\"",
            c.name,
            c.l,
            c.m,
            c.n(),
            c.k(),
            c.w,
            c.a,
            c.b,
            c.provenance
        )?;
    }
    Ok(())
}

fn run(spec: ExperimentSpec, scale: f64, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidConfig("--shots-scale must be positive".into()));
    }
    let mut spec = spec.scaled(scale);
    if let Some(s) = seed {
        spec = spec.with_seed(s);
    }
    let output = run_experiment(&spec)?;
    emit(&output, out)
}

fn emit(output: &ExperimentOutput, out: Option<&Path>) -> Result<()> {
    match out {
        Some(dir) => {
            for path in output.write_to(dir)? {
                eprintln!("wrote {}", path.display());
            }
        }
        None => {
            let mut stdout = io::stdout().lock();
            for (i, t) in output.tables.iter().enumerate() {
                if i > 0 {
                    writeln!(stdout)?;
                }
                writeln!(stdout, "# {}", t.name)?;
                t.write_csv(&mut stdout)?;
            }
        }
    }
    eprintln!("{}: {:.1} s", output.name, output.runtime_s);
    Ok(())
}

fn simulate(config: &Path, out: Option<&Path>) -> Result<()> {
    let text = std::fs::read_to_string(config)?;
    let file: SimulationFile = toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let labels: Vec<ShotLabel> = match &file.source {
        ShotSource::Trace { trace } => {
            let path = config.parent().unwrap_or(Path::new(".")).join(trace);
            read_records(std::fs::File::open(path)?)?
                .iter()
                .map(ShotLabel::from)
                .collect()
        }
        ShotSource::Noise { code, p, shots } => {
            let code = lookup(code)?;
            let point = run_point(
                &code,
                &NoiseSpec::phenomenological(*p),
                &[(DecoderVariant::BpOsd, Schedule::Parallel)],
                &DecoderSettings::default(),
                *shots,
                file.seed,
                false,
            )?;
            point.primary().iter().map(ShotLabel::from).collect()
        }
    };
    let reports = simulate_labels(&file.pipeline, &labels, file.seed)?;
    let json = serde_json::to_string_pretty(&reports)?;
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join("simulation.json");
            std::fs::write(&path, json)?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{json}"),
    }
    Ok(())
}
