//! Declarative experiments: a TOML spec in, result tables out.
//!
//! Every shot draws from its own RNG substream and shots are collected in
//! index order, so results do not depend on how many threads ran them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bp::{BpConfig, MinSumDecoder, RelayConfig, Schedule};
use crate::code::{lookup, BBCode, Basis};
use crate::error::{Error, Result};
use crate::gf2::Gf2Matrix;
use crate::noise::{derive_seed, sample_shot, ErrorSample, NoiseKind, NoiseSpec, RateConvention, Syndrome};
use crate::osd::{decode_osd0, DecodeOutcome, DecodePath};
use crate::pipeline::{run_sim, PipelineConfig, Routing, ShotLabel, SimReport};
use crate::predictor::{
    classifier_report, cluster_analysis, feature_aucs, fit_power_law, DetectorGraph, PredictRule,
};
use crate::record::{DecodeRecord, DecoderVariant};
use crate::table::{rate_cells, ResultTable, Value};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BBLAB_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    FpPowerLaw,
    FixedWeight,
    ModClass,
    DefectCount,
    CrossCode,
    Schedules,
    Timing,
    Features,
    Relay,
    Prefilter,
    NoiseLevels,
    FailureByDefect,
    Cluster,
    Simulation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderSettings {
    pub max_iter: usize,
    pub ms_scaling: f64,
    /// Prior flip probability; defaults to the noise model's marginal rate.
    pub channel_p: Option<f64>,
    pub num_relays: usize,
    pub iters_per_relay: usize,
    pub scaling_low: f64,
    pub scaling_high: f64,
    pub carry_posteriors: bool,
}

impl Default for DecoderSettings {
    fn default() -> Self {
        Self {
            max_iter: 100,
            ms_scaling: 1.0,
            channel_p: None,
            num_relays: 10,
            iters_per_relay: 20,
            scaling_low: 0.5,
            scaling_high: 1.0,
            carry_posteriors: true,
        }
    }
}

fn default_codes() -> Vec<String> {
    vec!["gross".into()]
}

fn default_noise() -> NoiseKind {
    NoiseKind::Phenomenological
}

fn default_rounds() -> usize {
    5
}

fn default_schedules() -> Vec<Schedule> {
    vec![Schedule::Parallel]
}

fn default_decoders() -> Vec<DecoderVariant> {
    vec![DecoderVariant::BpOsd]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub analysis: Analysis,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_codes")]
    pub codes: Vec<String>,
    #[serde(default = "default_noise")]
    pub noise: NoiseKind,
    /// Physical error rates to sweep.
    #[serde(default)]
    pub p: Vec<f64>,
    /// Error weights to sweep under fixed-weight noise.
    #[serde(default)]
    pub weights: Vec<usize>,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub rate: RateConvention,
    #[serde(default)]
    pub basis: Basis,
    #[serde(default = "default_schedules")]
    pub schedules: Vec<Schedule>,
    #[serde(default = "default_decoders")]
    pub decoders: Vec<DecoderVariant>,
    #[serde(default)]
    pub decoder: DecoderSettings,
    /// Shots per sweep point at desk scale.
    pub shots: usize,
    /// Per-point shot counts, aligned with `p`; overrides `shots`.
    #[serde(default)]
    pub point_shots: Vec<usize>,
    /// Full-scale shots per point, kept for reference.
    #[serde(default)]
    pub reference_shots: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Defect-count thresholds for the pre-filter comparison.
    #[serde(default)]
    pub thresholds: Vec<usize>,
    /// Upper end of the restricted power-law fit.
    #[serde(default)]
    pub fit_max_p: Option<f64>,
    #[serde(default)]
    pub pipeline: Option<PipelineConfig>,
    /// Also emit every per-shot record.
    #[serde(default)]
    pub dump_records: bool,
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::InvalidConfig("shots must be at least 1".into()));
        }
        if self.point_shots.iter().any(|&s| s == 0) {
            return Err(Error::InvalidConfig("point_shots must be at least 1".into()));
        }
        if !self.point_shots.is_empty() && self.point_shots.len() != self.p.len() {
            return Err(Error::InvalidConfig(format!(
                "{} point_shots for {} values of p",
                self.point_shots.len(),
                self.p.len()
            )));
        }
        if self.codes.is_empty() || self.schedules.is_empty() || self.decoders.is_empty() {
            return Err(Error::InvalidConfig(
                "codes, schedules and decoders must be non-empty".into(),
            ));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("rounds must be at least 1".into()));
        }
        for code in &self.codes {
            lookup(code)?;
        }
        if let Some(cfg) = &self.pipeline {
            cfg.validate()?;
        }
        Ok(())
    }

    /// Multiplies every shot count by `factor`, keeping at least one shot.
    pub fn scaled(mut self, factor: f64) -> Self {
        let scale = |s: usize| ((s as f64 * factor).round() as usize).max(1);
        self.shots = scale(self.shots);
        self.point_shots = self.point_shots.iter().map(|&s| scale(s)).collect();
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_shots(mut self, shots: usize) -> Self {
        self.shots = shots;
        self.point_shots.clear();
        self
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).unwrap_or_default();
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn noise_at(&self, p: f64) -> NoiseSpec {
        NoiseSpec {
            kind: self.noise,
            p,
            fixed_weight: None,
            rounds: self.rounds,
            basis: self.basis,
            rate: self.rate,
        }
    }

    fn shots_at(&self, index: usize) -> usize {
        self.point_shots.get(index).copied().unwrap_or(self.shots)
    }

    fn decoder_grid(&self) -> Vec<(DecoderVariant, Schedule)> {
        self.decoders
            .iter()
            .flat_map(|&d| self.schedules.iter().map(move |&s| (d, s)))
            .collect()
    }
}

/// All records one decoder produced at one sweep point, in shot order.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoderRun {
    pub decoder: DecoderVariant,
    pub schedule: Schedule,
    pub records: Vec<DecodeRecord>,
}

/// One sweep point: a code and a noise setting, decoded by every decoder.
#[derive(Clone, Debug)]
pub struct PointData {
    pub code: String,
    pub w: usize,
    pub p: Option<f64>,
    pub weight: Option<usize>,
    pub shots: usize,
    pub runs: Vec<DecoderRun>,
    /// Ground truth of mod-w = 0 shots the first decoder's BP failed on,
    /// kept only when asked for.
    pub failures: Vec<(ErrorSample, Syndrome)>,
}

impl PointData {
    /// Records of the first decoder in the grid.
    pub fn primary(&self) -> &[DecodeRecord] {
        &self.runs[0].records
    }

    pub fn run(&self, decoder: DecoderVariant, schedule: Schedule) -> Option<&DecoderRun> {
        self.runs
            .iter()
            .find(|r| r.decoder == decoder && r.schedule == schedule)
    }
}

fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Seed of one sweep point; independent of the other points in the sweep.
pub fn point_seed(seed: u64, code: &str, p: f64, weight: usize) -> u64 {
    let s = derive_seed(seed, name_hash(code));
    derive_seed(derive_seed(s, p.to_bits()), weight as u64)
}

fn decode_one(
    dec: &mut MinSumDecoder,
    h: &Gf2Matrix,
    syndrome: &Syndrome,
    variant: DecoderVariant,
    schedule: Schedule,
    settings: &DecoderSettings,
    channel_p: f64,
    relay_seed: u64,
) -> Result<DecodeOutcome> {
    match variant {
        DecoderVariant::BpOsd => {
            let cfg = BpConfig {
                max_iter: settings.max_iter,
                schedule,
                ms_scaling: settings.ms_scaling,
                channel_p,
            };
            dec.decode_bp_osd(h, &syndrome.bits, &cfg)
        }
        DecoderVariant::RelayOsd => {
            let cfg = RelayConfig {
                num_relays: settings.num_relays,
                iters_per_relay: settings.iters_per_relay,
                scaling_low: settings.scaling_low,
                scaling_high: settings.scaling_high,
                seed: relay_seed,
                carry_posteriors: settings.carry_posteriors,
                schedule,
                channel_p,
            };
            let bp = dec.decode_relay(&syndrome.bits, &cfg)?;
            if bp.converged {
                return Ok(DecodeOutcome {
                    path: DecodePath::BpOnly,
                    bp_converged: true,
                    iterations: bp.iterations,
                    estimate: bp.estimate,
                    valid: true,
                });
            }
            let osd = decode_osd0(h, &syndrome.bits, &bp.posteriors)?;
            Ok(DecodeOutcome {
                path: DecodePath::BpOsd,
                bp_converged: false,
                iterations: bp.iterations,
                estimate: osd.estimate,
                valid: osd.valid,
            })
        }
    }
}

struct ShotOut {
    records: Vec<DecodeRecord>,
    failure: Option<(ErrorSample, Syndrome)>,
}

/// Samples `shots` shots and decodes each with every decoder in `grid`.
pub fn run_point(
    code: &BBCode,
    noise: &NoiseSpec,
    grid: &[(DecoderVariant, Schedule)],
    settings: &DecoderSettings,
    shots: usize,
    seed: u64,
    keep_failures: bool,
) -> Result<PointData> {
    noise.validate(code)?;
    if grid.is_empty() {
        return Err(Error::InvalidConfig("no decoders to run".into()));
    }
    let h = code.check_matrix(noise.basis);
    let graph = DetectorGraph::new(h, code.w);
    let channel_p = settings.channel_p.unwrap_or_else(|| match noise.kind {
        NoiseKind::CodeCapacityFixedWeight => {
            noise.fixed_weight.unwrap_or(1).max(1) as f64 / code.n() as f64
        }
        _ => noise.effective_probability(),
    });
    let relay_base = derive_seed(seed, 0x7265_6c61_79);

    let outs: Vec<Result<ShotOut>> = (0..shots as u64)
        .into_par_iter()
        .map_init(
            || MinSumDecoder::new(h),
            |dec, shot| {
                let (sample, syndrome) = sample_shot(code, noise, seed, shot)?;
                let (max_component, position_variance) = match graph.features(&syndrome) {
                    Ok(f) => (f.max_component, f.position_variance),
                    Err(_) => (0, 0.0),
                };
                let mut records = Vec::with_capacity(grid.len());
                for &(variant, schedule) in grid {
                    let outcome = if syndrome.is_trivial() {
                        None
                    } else {
                        Some(decode_one(
                            dec,
                            h,
                            &syndrome,
                            variant,
                            schedule,
                            settings,
                            channel_p,
                            derive_seed(relay_base, shot),
                        )?)
                    };
                    records.push(DecodeRecord {
                        shot,
                        decoder: variant,
                        schedule,
                        defect_count: syndrome.defect_count,
                        w: code.w,
                        mod_w_class: syndrome.mod_w_class(),
                        max_component,
                        position_variance,
                        path: outcome.as_ref().map_or(DecodePath::BpOnly, |o| o.path),
                        converged: outcome.as_ref().is_none_or(|o| o.bp_converged),
                        iterations: outcome.as_ref().map_or(0, |o| o.iterations),
                        valid: outcome.as_ref().is_none_or(|o| o.valid),
                        data_weight: sample.data_weight(),
                        meas_count: sample.meas_count(),
                    });
                }
                let first = &records[0];
                let keep = keep_failures && !first.is_trivial() && first.mod_w_zero() && !first.converged;
                Ok(ShotOut {
                    records,
                    failure: keep.then_some((sample, syndrome)),
                })
            },
        )
        .collect();

    let mut runs: Vec<DecoderRun> = grid
        .iter()
        .map(|&(decoder, schedule)| DecoderRun {
            decoder,
            schedule,
            records: Vec::with_capacity(shots),
        })
        .collect();
    let mut failures = Vec::new();
    for out in outs {
        let out = out?;
        for (run, rec) in runs.iter_mut().zip(out.records) {
            run.records.push(rec);
        }
        failures.extend(out.failure);
    }
    Ok(PointData {
        code: code.name.clone(),
        w: code.w,
        p: (noise.kind != NoiseKind::CodeCapacityFixedWeight).then_some(noise.p),
        weight: noise.fixed_weight,
        shots,
        runs,
        failures,
    })
}

/// Everything one experiment produced.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentOutput {
    pub name: String,
    pub analysis: Analysis,
    pub seed: u64,
    pub spec_hash: String,
    pub reference_shots: Option<usize>,
    pub shots: usize,
    pub runtime_s: f64,
    pub tables: Vec<ResultTable>,
    /// Analysis-specific details such as fits and simulation reports.
    pub extras: serde_json::Value,
    #[serde(skip)]
    pub records: Vec<DecodeRecord>,
}

impl ExperimentOutput {
    pub fn table(&self, name: &str) -> Option<&ResultTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        v["tables"] = self.tables.iter().map(ResultTable::to_json).collect();
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// Writes `<table>.csv` per table, `<name>.json`, and the record dump
    /// when one was kept. Returns the paths written.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            t.write_csv(fs::File::create(&path)?)?;
            written.push(path);
        }
        let path = dir.join(format!("{}.json", self.name));
        fs::write(&path, self.to_json()?)?;
        written.push(path);
        if !self.records.is_empty() {
            let path = dir.join(format!("{}_records.csv", self.name));
            write_records(fs::File::create(&path)?, &self.records)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn write_records<W: std::io::Write>(out: W, records: &[DecodeRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: std::io::Read>(input: R) -> Result<Vec<DecodeRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Runs every sweep point of `spec` and builds its tables.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let start = Instant::now();
    let codes: Vec<BBCode> = spec.codes.iter().map(|c| lookup(c)).collect::<Result<_>>()?;

    let (tables, extras, points) = match spec.analysis {
        Analysis::Timing => (timing_tables(spec, &codes)?, serde_json::Value::Null, Vec::new()),
        _ => {
            let points = collect_points(spec, &codes)?;
            let (tables, extras) = build_tables(spec, &points)?;
            (tables, extras, points)
        }
    };

    let records = if spec.dump_records {
        points
            .iter()
            .flat_map(|pt| pt.runs.iter().flat_map(|r| r.records.iter().cloned()))
            .collect()
    } else {
        Vec::new()
    };
    Ok(ExperimentOutput {
        name: spec.name.clone(),
        analysis: spec.analysis,
        seed: spec.seed,
        spec_hash: spec.hash(),
        reference_shots: spec.reference_shots,
        shots: spec.shots,
        runtime_s: start.elapsed().as_secs_f64(),
        tables,
        extras,
        records,
    })
}

fn collect_points(spec: &ExperimentSpec, codes: &[BBCode]) -> Result<Vec<PointData>> {
    let grid = spec.decoder_grid();
    let keep = spec.analysis == Analysis::Cluster;
    let mut points = Vec::new();
    for code in codes {
        if spec.noise == NoiseKind::CodeCapacityFixedWeight {
            for &k in &spec.weights {
                let noise = NoiseSpec::fixed_weight(k).with_basis(spec.basis);
                let seed = point_seed(spec.seed, &code.name, 0.0, k);
                points.push(run_point(code, &noise, &grid, &spec.decoder, spec.shots, seed, keep)?);
            }
        } else {
            for (i, &p) in spec.p.iter().enumerate() {
                let noise = spec.noise_at(p);
                let seed = point_seed(spec.seed, &code.name, p, 0);
                points.push(run_point(code, &noise, &grid, &spec.decoder, spec.shots_at(i), seed, keep)?);
            }
        }
    }
    Ok(points)
}

type Tables = (Vec<ResultTable>, serde_json::Value);

fn build_tables(spec: &ExperimentSpec, points: &[PointData]) -> Result<Tables> {
    let name = spec.name.as_str();
    let none = serde_json::Value::Null;
    Ok(match spec.analysis {
        Analysis::FpPowerLaw => fp_power_law(name, points, spec.fit_max_p),
        Analysis::FixedWeight => (vec![fixed_weight(name, points, &spec.schedules)], none),
        Analysis::ModClass => (vec![mod_class(name, points)], none),
        Analysis::DefectCount => (vec![defect_count(name, points)], none),
        Analysis::CrossCode => (vec![cross_code(name, points)], none),
        Analysis::Schedules => (vec![schedules(name, points, &spec.schedules)], none),
        Analysis::Features => (vec![features(name, points, &spec.p)?], none),
        Analysis::Relay => (vec![relay(name, points, spec.schedules[0])], none),
        Analysis::Prefilter => (vec![prefilter(name, points, &spec.thresholds)], none),
        Analysis::NoiseLevels => (vec![noise_levels(name, points)], none),
        Analysis::FailureByDefect => (vec![failure_by_defect(name, points)], none),
        Analysis::Cluster => (vec![cluster(name, points, spec)?], none),
        Analysis::Simulation => {
            let cfg = spec.pipeline.clone().unwrap_or_default();
            simulation(name, points, &cfg, spec.seed)?
        }
        Analysis::Timing => unreachable!("timing does not collect points"),
    })
}

fn p_cell(pt: &PointData) -> Value {
    pt.p.into()
}

/// Convergence counts over nontrivial records.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub nontrivial: usize,
    pub converged: usize,
    pub mod_zero: usize,
    pub mod_zero_converged: usize,
    pub mod_nonzero: usize,
    pub mod_nonzero_converged: usize,
}

impl Tally {
    pub fn of(records: &[DecodeRecord]) -> Self {
        let mut t = Tally::default();
        for r in records.iter().filter(|r| !r.is_trivial()) {
            t.nontrivial += 1;
            t.converged += r.converged as usize;
            if r.mod_w_zero() {
                t.mod_zero += 1;
                t.mod_zero_converged += r.converged as usize;
            } else {
                t.mod_nonzero += 1;
                t.mod_nonzero_converged += r.converged as usize;
            }
        }
        t
    }
}

fn fp_power_law(name: &str, points: &[PointData], fit_max_p: Option<f64>) -> Tables {
    let mut t = ResultTable::new(
        name,
        &["code", "p", "shots", "nontrivial", "mod_w_zero", "false_positives", "fp_rate", "fp_lo", "fp_hi"],
    );
    let mut pts = Vec::new();
    for pt in points {
        let r = classifier_report(pt.primary(), PredictRule::ModW);
        let n = r.true_converge + r.false_positive;
        let [rate, lo, hi] = rate_cells(r.false_positive, n);
        t.push(vec![
            pt.code.as_str().into(),
            p_cell(pt),
            pt.shots.into(),
            r.total().into(),
            n.into(),
            r.false_positive.into(),
            rate,
            lo,
            hi,
        ]);
        if let (Some(p), Some(fp)) = (pt.p, r.fp_rate) {
            pts.push((p, fp));
        }
    }

    let mut fits = ResultTable::new(
        format!("{name}_fit"),
        &["range", "points_used", "points_excluded", "exponent", "prefactor", "r_squared"],
    );
    let mut ranges = Vec::new();
    if let Some(max_p) = fit_max_p {
        ranges.push((
            format!("p_le_{max_p}"),
            pts.iter().copied().filter(|&(p, _)| p <= max_p).collect::<Vec<_>>(),
        ));
    }
    ranges.push(("all".to_string(), pts.clone()));
    let mut extras = serde_json::Map::new();
    for (label, range) in ranges {
        match fit_power_law(&range) {
            Ok(f) => {
                fits.push(vec![
                    label.as_str().into(),
                    f.used.len().into(),
                    f.excluded.len().into(),
                    f.exponent.into(),
                    f.prefactor.into(),
                    f.r_squared.into(),
                ]);
                extras.insert(label, serde_json::to_value(&f).unwrap_or_default());
            }
            Err(e) => {
                let zero = range.iter().filter(|&&(_, fp)| fp <= 0.0).count();
                fits.push(vec![
                    label.as_str().into(),
                    (range.len() - zero).into(),
                    zero.into(),
                    Value::Missing,
                    Value::Missing,
                    Value::Missing,
                ]);
                extras.insert(label, serde_json::Value::String(e.to_string()));
            }
        }
    }
    (vec![t, fits], serde_json::Value::Object(extras))
}

fn schedule_columns(lead: &[&str], schedules: &[Schedule]) -> Vec<String> {
    let mut cols: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
    for s in schedules {
        cols.push(s.name().to_string());
        cols.push(format!("{}_lo", s.name()));
        cols.push(format!("{}_hi", s.name()));
    }
    cols
}

fn fixed_weight(name: &str, points: &[PointData], schedules: &[Schedule]) -> ResultTable {
    let mut t = ResultTable::with_columns(name, schedule_columns(&["code", "weight", "shots"], schedules));
    for pt in points {
        let mut row: Vec<Value> = vec![pt.code.as_str().into(), pt.weight.into(), pt.shots.into()];
        for &s in schedules {
            let recs = &pt.run(DecoderVariant::BpOsd, s).map_or(&[][..], |r| &r.records[..]);
            let conv = recs.iter().filter(|r| r.converged).count();
            row.extend(rate_cells(conv, recs.len()));
        }
        t.push(row);
    }
    t
}

fn mod_class(name: &str, points: &[PointData]) -> ResultTable {
    let w_max = points.iter().map(|p| p.w).max().unwrap_or(3);
    let mut cols = vec!["code".to_string(), "p".into(), "nontrivial".into()];
    cols.extend((0..w_max).map(|c| format!("mod_w_{c}")));
    cols.extend(["overall".into(), "overall_lo".into(), "overall_hi".into()]);
    let mut t = ResultTable::with_columns(name, cols);
    for pt in points {
        let recs: Vec<&DecodeRecord> = pt.primary().iter().filter(|r| !r.is_trivial()).collect();
        let mut row: Vec<Value> = vec![pt.code.as_str().into(), p_cell(pt), recs.len().into()];
        for c in 0..w_max {
            let class: Vec<_> = recs.iter().filter(|r| r.mod_w_class == c).collect();
            let conv = class.iter().filter(|r| r.converged).count();
            row.push(if c < pt.w && !class.is_empty() {
                (conv as f64 / class.len() as f64).into()
            } else {
                Value::Missing
            });
        }
        let conv = recs.iter().filter(|r| r.converged).count();
        row.extend(rate_cells(conv, recs.len()));
        t.push(row);
    }
    t
}

/// `defect_count -> (count, converged)` over nontrivial records.
fn by_defects(records: &[DecodeRecord]) -> BTreeMap<usize, (usize, usize)> {
    let mut m: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.is_trivial()) {
        let e = m.entry(r.defect_count).or_default();
        e.0 += 1;
        e.1 += r.converged as usize;
    }
    m
}

fn defect_count(name: &str, points: &[PointData]) -> ResultTable {
    let mut t = ResultTable::new(
        name,
        &["code", "p", "defects", "mod_w_class", "count", "converged", "convergence", "convergence_lo", "convergence_hi"],
    );
    for pt in points {
        for (d, (n, c)) in by_defects(pt.primary()) {
            let mut row: Vec<Value> = vec![
                pt.code.as_str().into(),
                p_cell(pt),
                d.into(),
                (d % pt.w).into(),
                n.into(),
                c.into(),
            ];
            row.extend(rate_cells(c, n));
            t.push(row);
        }
    }
    t
}

fn cross_code(name: &str, points: &[PointData]) -> ResultTable {
    let mut t = ResultTable::new(
        name,
        &[
            "code",
            "w",
            "p",
            "nontrivial",
            "mod_w_zero",
            "mod_w_zero_convergence",
            "mod_w_zero_lo",
            "mod_w_zero_hi",
            "mod_w_nonzero",
            "mod_w_nonzero_convergence",
            "mod_w_nonzero_lo",
            "mod_w_nonzero_hi",
            "fp_rate",
            "fp_lo",
            "fp_hi",
            "auc",
        ],
    );
    for pt in points {
        let tally = Tally::of(pt.primary());
        let report = classifier_report(pt.primary(), PredictRule::ModW);
        let mut row: Vec<Value> = vec![
            pt.code.as_str().into(),
            pt.w.into(),
            p_cell(pt),
            tally.nontrivial.into(),
            tally.mod_zero.into(),
        ];
        row.extend(rate_cells(tally.mod_zero_converged, tally.mod_zero));
        row.push(tally.mod_nonzero.into());
        row.extend(rate_cells(tally.mod_nonzero_converged, tally.mod_nonzero));
        row.extend(rate_cells(tally.mod_zero - tally.mod_zero_converged, tally.mod_zero));
        row.push(report.auc.into());
        t.push(row);
    }
    t
}

fn schedules(name: &str, points: &[PointData], schedules: &[Schedule]) -> ResultTable {
    let mut cols = schedule_columns(&["code", "p", "nontrivial"], schedules);
    cols.push("max_pairwise_diff".into());
    let mut t = ResultTable::with_columns(name, cols);
    for pt in points {
        let mut row: Vec<Value> = vec![pt.code.as_str().into(), p_cell(pt), Value::Missing];
        let mut rates = Vec::new();
        for &s in schedules {
            let tally = pt
                .run(DecoderVariant::BpOsd, s)
                .map(|r| Tally::of(&r.records))
                .unwrap_or_default();
            row[2] = tally.nontrivial.into();
            row.extend(rate_cells(tally.converged, tally.nontrivial));
            if tally.nontrivial > 0 {
                rates.push(tally.converged as f64 / tally.nontrivial as f64);
            }
        }
        let spread = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - rates.iter().copied().fold(f64::INFINITY, f64::min);
        row.push(if rates.is_empty() { Value::Missing } else { spread.into() });
        t.push(row);
    }
    t
}

fn p_label(p: f64) -> String {
    format!("auc_p{p}").replace('.', "_")
}

fn features(name: &str, points: &[PointData], ps: &[f64]) -> Result<ResultTable> {
    let mut cols = vec!["code".to_string(), "feature".into()];
    cols.extend(ps.iter().map(|&p| p_label(p)));
    let mut t = ResultTable::with_columns(name, cols);
    let feature_names = [
        "mod_w",
        "defect_count",
        "max_component",
        "position_variance",
        "mod_w_plus_defect_count",
    ];
    let mut codes: Vec<&str> = points.iter().map(|p| p.code.as_str()).collect();
    codes.dedup();
    for code in codes {
        let mut cells: Vec<Vec<Value>> = vec![Vec::new(); feature_names.len()];
        for &p in ps {
            let pt = points.iter().find(|pt| pt.code == code && pt.p == Some(p));
            let aucs = pt.and_then(|pt| feature_aucs(pt.primary()).ok());
            let vals = aucs.map(|a| {
                [a.mod_w, a.defect_count, a.max_component, a.position_variance, a.mod_w_plus_defect_count]
            });
            for (i, col) in cells.iter_mut().enumerate() {
                col.push(vals.map(|v| v[i]).into());
            }
        }
        for (f, vals) in feature_names.iter().zip(cells) {
            let mut row: Vec<Value> = vec![code.into(), (*f).into()];
            row.extend(vals);
            t.push(row);
        }
    }
    Ok(t)
}

fn relay(name: &str, points: &[PointData], schedule: Schedule) -> ResultTable {
    let mut t = ResultTable::new(
        name,
        &[
            "code",
            "p",
            "decoder",
            "nontrivial",
            "mod_w_zero_convergence",
            "mod_w_nonzero_convergence",
            "auc",
            "standard_failures_mod_w_nonzero",
            "recovered",
        ],
    );
    for pt in points {
        let standard = pt.run(DecoderVariant::BpOsd, schedule);
        for run in pt.runs.iter().filter(|r| r.schedule == schedule) {
            let tally = Tally::of(&run.records);
            let report = classifier_report(&run.records, PredictRule::ModW);
            let ratio = |k: usize, n: usize| (n > 0).then(|| k as f64 / n as f64);
            let (failures, recovered) = match (run.decoder, standard) {
                (DecoderVariant::RelayOsd, Some(std)) => {
                    let mut failures = 0;
                    let mut recovered = 0;
                    for (s, r) in std.records.iter().zip(&run.records) {
                        if !s.is_trivial() && !s.mod_w_zero() && !s.converged {
                            failures += 1;
                            recovered += r.converged as usize;
                        }
                    }
                    (Value::from(failures), Value::from(recovered))
                }
                _ => (Value::Missing, Value::Missing),
            };
            t.push(vec![
                pt.code.as_str().into(),
                p_cell(pt),
                run.decoder.name().into(),
                tally.nontrivial.into(),
                ratio(tally.mod_zero_converged, tally.mod_zero).into(),
                ratio(tally.mod_nonzero_converged, tally.mod_nonzero).into(),
                report.auc.into(),
                failures,
                recovered,
            ]);
        }
    }
    t
}

fn prefilter(name: &str, points: &[PointData], thresholds: &[usize]) -> ResultTable {
    let mut t = ResultTable::new(
        name,
        &[
            "code",
            "p",
            "method",
            "predicted_converge",
            "predicted_fail",
            "fp_rate",
            "fp_lo",
            "fp_hi",
            "fn_rate",
            "fn_lo",
            "fn_hi",
        ],
    );
    for pt in points {
        let rules = thresholds
            .iter()
            .map(|&k| PredictRule::Threshold(k))
            .chain([PredictRule::ModW]);
        for rule in rules {
            let r = classifier_report(pt.primary(), rule);
            let pc = r.true_converge + r.false_positive;
            let pf = r.false_negative + r.true_fail;
            let mut row: Vec<Value> =
                vec![pt.code.as_str().into(), p_cell(pt), r.rule.as_str().into(), pc.into(), pf.into()];
            row.extend(rate_cells(r.false_positive, pc));
            row.extend(rate_cells(r.false_negative, pf));
            t.push(row);
        }
    }
    t
}

fn noise_levels(name: &str, points: &[PointData]) -> ResultTable {
    let mut t = ResultTable::new(
        name,
        &[
            "code",
            "p",
            "shots",
            "nontrivial",
            "bp_convergence",
            "bp_convergence_lo",
            "bp_convergence_hi",
            "mod_w_zero_fraction",
            "mod_w_zero_convergence",
            "osd_rate",
        ],
    );
    for pt in points {
        let tally = Tally::of(pt.primary());
        let ratio = |k: usize, n: usize| Value::from((n > 0).then(|| k as f64 / n as f64));
        let mut row: Vec<Value> = vec![
            pt.code.as_str().into(),
            p_cell(pt),
            pt.shots.into(),
            tally.nontrivial.into(),
        ];
        row.extend(rate_cells(tally.converged, tally.nontrivial));
        row.push(ratio(tally.mod_zero, tally.nontrivial));
        row.push(ratio(tally.mod_zero_converged, tally.mod_zero));
        row.push(ratio(tally.nontrivial - tally.converged, tally.nontrivial));
        t.push(row);
    }
    t
}

fn failure_by_defect(name: &str, points: &[PointData]) -> ResultTable {
    let mut t = ResultTable::new(
        name,
        &["code", "p", "defects", "converged", "failed", "failure_rate", "failure_lo", "failure_hi"],
    );
    for pt in points {
        for (d, (n, c)) in by_defects(pt.primary()) {
            if d % pt.w != 0 {
                continue;
            }
            let mut row: Vec<Value> = vec![
                pt.code.as_str().into(),
                p_cell(pt),
                d.into(),
                c.into(),
                (n - c).into(),
            ];
            row.extend(rate_cells(n - c, n));
            t.push(row);
        }
    }
    t
}

fn cluster(name: &str, points: &[PointData], spec: &ExperimentSpec) -> Result<ResultTable> {
    let mut t = ResultTable::new(
        name,
        &["code", "p", "weight", "failures", "with_cluster", "cluster_fraction", "cluster_lo", "cluster_hi"],
    );
    for pt in points {
        let code = lookup(&pt.code)?;
        let report = cluster_analysis(code.check_matrix(spec.basis), &pt.failures);
        for (&weight, &(n, c)) in &report.by_weight {
            let mut row: Vec<Value> = vec![
                pt.code.as_str().into(),
                p_cell(pt),
                weight.to_string().into(),
                n.into(),
                c.into(),
            ];
            row.extend(rate_cells(c, n));
            t.push(row);
        }
        let mut row: Vec<Value> = vec![
            pt.code.as_str().into(),
            p_cell(pt),
            "all".into(),
            report.failures.into(),
            report.with_cluster.into(),
        ];
        row.extend(rate_cells(report.with_cluster, report.failures));
        t.push(row);
    }
    Ok(t)
}

/// Runs both routing policies over the same labelled stream.
pub fn simulate_labels(cfg: &PipelineConfig, labels: &[ShotLabel], seed: u64) -> Result<[SimReport; 2]> {
    let routed = run_sim(&cfg.clone().with_routing(Routing::ModWPrerouting), labels, seed)?;
    let baseline = run_sim(&cfg.clone().with_routing(Routing::BaselineAllThroughBp), labels, seed)?;
    Ok([routed, baseline])
}

fn simulation(name: &str, points: &[PointData], cfg: &PipelineConfig, seed: u64) -> Result<Tables> {
    let mut t = ResultTable::new(
        name,
        &[
            "code",
            "p",
            "routing",
            "shots",
            "nontrivial",
            "osd_fraction",
            "osd_mean_queue_depth",
            "osd_max_queue_depth",
            "bp_utilization",
            "osd_utilization",
            "mean_cost_us",
            "mean_latency_us",
        ],
    );
    let mut reports = Vec::new();
    for pt in points {
        let labels: Vec<ShotLabel> = pt.primary().iter().map(ShotLabel::from).collect();
        for report in simulate_labels(cfg, &labels, seed)? {
            let routing = match report.routing {
                Routing::ModWPrerouting => "mod_w_prerouting",
                Routing::BaselineAllThroughBp => "baseline_all_through_bp",
            };
            let mean_util = |pool: &str| {
                report
                    .pool(pool)
                    .map(|p| p.utilization.iter().sum::<f64>() / p.utilization.len().max(1) as f64)
            };
            let osd = report.pool("osd");
            t.push(vec![
                pt.code.as_str().into(),
                p_cell(pt),
                routing.into(),
                report.shots.into(),
                report.nontrivial.into(),
                match report.routing {
                    Routing::ModWPrerouting => report.osd_fraction.into(),
                    Routing::BaselineAllThroughBp => Value::Missing,
                },
                osd.map(|p| p.mean_queue_depth).into(),
                osd.map(|p| p.max_queue_depth).into(),
                mean_util("bp").into(),
                mean_util("osd").into(),
                report.mean_cost_us.into(),
                report.mean_latency_us.into(),
            ]);
            reports.push(report);
        }
    }
    Ok((vec![t], serde_json::to_value(&reports)?))
}

/// Mean BP-only decode time per shot for each schedule, in microseconds,
/// over the same syndromes. Runs on the calling thread.
pub fn time_schedules(
    code: &BBCode,
    noise: &NoiseSpec,
    schedules: &[Schedule],
    settings: &DecoderSettings,
    shots: usize,
    seed: u64,
) -> Result<Vec<(Schedule, f64)>> {
    let h = code.check_matrix(noise.basis);
    let syndromes: Vec<Syndrome> = (0..shots as u64)
        .map(|s| sample_shot(code, noise, seed, s).map(|(_, syn)| syn))
        .collect::<Result<_>>()?;
    let mut dec = MinSumDecoder::new(h);
    let mut out = Vec::new();
    for &schedule in schedules {
        let cfg = BpConfig {
            max_iter: settings.max_iter,
            schedule,
            ms_scaling: settings.ms_scaling,
            channel_p: settings.channel_p.unwrap_or_else(|| noise.effective_probability()),
        };
        let start = Instant::now();
        for s in &syndromes {
            std::hint::black_box(dec.decode(&s.bits, &cfg)?);
        }
        out.push((schedule, start.elapsed().as_secs_f64() * 1e6 / shots.max(1) as f64));
    }
    Ok(out)
}

fn timing_tables(spec: &ExperimentSpec, codes: &[BBCode]) -> Result<Vec<ResultTable>> {
    let mut t = ResultTable::new(
        &spec.name,
        &["code", "p", "schedule", "shots", "mean_us", "relative_to_parallel"],
    );
    for code in codes {
        for (i, &p) in spec.p.iter().enumerate() {
            let seed = point_seed(spec.seed, &code.name, p, 0);
            let shots = spec.shots_at(i);
            let times = time_schedules(code, &spec.noise_at(p), &spec.schedules, &spec.decoder, shots, seed)?;
            let base = times
                .iter()
                .find(|(s, _)| *s == Schedule::Parallel)
                .map(|&(_, t)| t);
            for (s, us) in times {
                t.push(vec![
                    code.name.as_str().into(),
                    p.into(),
                    s.name().into(),
                    shots.into(),
                    us.into(),
                    base.map(|b| us / b).into(),
                ]);
            }
        }
    }
    Ok(vec![t])
}

/// Mod-w convergence, FP and AUC for each code at each `p`.
pub fn cross_code_sweep(codes: &[&str], ps: &[f64], shots: usize, seed: u64) -> Result<ResultTable> {
    let spec = ExperimentSpec {
        codes: codes.iter().map(|c| c.to_string()).collect(),
        p: ps.to_vec(),
        ..ExperimentSpec::template("cross_code", Analysis::CrossCode, shots, seed)
    };
    let mut out = run_experiment(&spec)?;
    Ok(out.tables.remove(0))
}

impl ExperimentSpec {
    /// A Gross-code phenomenological spec with every optional field at its default.
    pub fn template(name: &str, analysis: Analysis, shots: usize, seed: u64) -> Self {
        Self {
            name: name.to_string(),
            analysis,
            description: String::new(),
            codes: default_codes(),
            noise: default_noise(),
            p: Vec::new(),
            weights: Vec::new(),
            rounds: default_rounds(),
            rate: RateConvention::default(),
            basis: Basis::default(),
            schedules: default_schedules(),
            decoders: default_decoders(),
            decoder: DecoderSettings::default(),
            shots,
            point_shots: Vec::new(),
            reference_shots: None,
            seed,
            thresholds: Vec::new(),
            fit_max_p: None,
            pipeline: None,
            dump_records: false,
        }
    }
}

/// Specs shipped with the crate: `(id, file name, contents)`.
pub const BUILTIN_SPECS: &[(&str, &str, &str)] = &[
    ("2", "table2", include_str!("../../../experiments/table2.toml")),
    ("3", "table3", include_str!("../../../experiments/table3.toml")),
    ("4", "table4", include_str!("../../../experiments/table4.toml")),
    ("5", "table5", include_str!("../../../experiments/table5.toml")),
    ("6", "table6", include_str!("../../../experiments/table6.toml")),
    ("7", "table7", include_str!("../../../experiments/table7.toml")),
    ("8", "table8", include_str!("../../../experiments/table8.toml")),
    ("9", "table9", include_str!("../../../experiments/table9.toml")),
    ("10", "table10", include_str!("../../../experiments/table10.toml")),
    ("11", "table11", include_str!("../../../experiments/table11.toml")),
    ("12", "table12", include_str!("../../../experiments/table12.toml")),
    ("13", "table13", include_str!("../../../experiments/table13.toml")),
    ("mod_class", "mod_class", include_str!("../../../experiments/mod_class.toml")),
    ("cluster", "cluster", include_str!("../../../experiments/cluster.toml")),
    ("simulation", "simulation", include_str!("../../../experiments/simulation.toml")),
];

/// Looks up a shipped spec by number (`"5"`) or name (`"table5"`, `"cluster"`).
pub fn builtin_spec(id: &str) -> Result<ExperimentSpec> {
    BUILTIN_SPECS
        .iter()
        .find(|(key, file, _)| *key == id || *file == id)
        .ok_or_else(|| Error::UnknownTable(id.to_string()))
        .and_then(|(_, _, text)| ExperimentSpec::parse(text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_spec_parses() {
        for (id, file, _) in BUILTIN_SPECS {
            let spec = builtin_spec(id).unwrap();
            assert_eq!(spec.name, *file);
            assert!(spec.reference_shots.is_some(), "{file} records a reference shot count");
        }
        assert!(matches!(builtin_spec("14"), Err(Error::UnknownTable(_))));
    }

    #[test]
    fn validation() {
        let ok = ExperimentSpec::template("t", Analysis::CrossCode, 10, 1);
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.codes = vec!["nope".into()];
        assert!(matches!(bad.validate(), Err(Error::UnknownCode(_))));
        let mut bad = ok.clone();
        bad.shots = 0;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.p = vec![0.01];
        bad.point_shots = vec![1, 2];
        assert!(bad.validate().is_err());
        assert!(ExperimentSpec::parse("name = 'x'\nanalysis = 'bogus'\nshots = 3").is_err());
        assert!(ExperimentSpec::parse("name = 'x'\nanalysis = 'features'\nshots = 3\ntypo = 1").is_err());
    }

    #[test]
    fn scaling_and_hash() {
        let mut s = ExperimentSpec::template("t", Analysis::FpPowerLaw, 1000, 1);
        s.p = vec![0.001, 0.002];
        s.point_shots = vec![4000, 10];
        let scaled = s.clone().scaled(0.01);
        assert_eq!(scaled.shots, 10);
        assert_eq!(scaled.point_shots, vec![40, 1]);
        assert_eq!(s.hash(), s.clone().hash());
        assert_ne!(s.hash(), scaled.hash());
        assert_eq!(s.hash().len(), 64);
    }

    #[test]
    fn empty_sweep_gives_empty_table() {
        let spec = ExperimentSpec::template("empty", Analysis::CrossCode, 5, 1);
        let out = run_experiment(&spec).unwrap();
        assert_eq!(out.tables.len(), 1);
        assert!(out.tables[0].rows.is_empty());
        assert!(out.tables[0].to_csv_string().unwrap().starts_with("code,w,p,"));
    }

    #[test]
    fn point_seeds_are_independent_of_sweep_order() {
        assert_eq!(point_seed(7, "gross", 0.01, 0), point_seed(7, "gross", 0.01, 0));
        assert_ne!(point_seed(7, "gross", 0.01, 0), point_seed(7, "bb72", 0.01, 0));
        assert_ne!(point_seed(7, "gross", 0.01, 0), point_seed(7, "gross", 0.02, 0));
    }

    #[test]
    fn records_round_trip_through_csv() {
        let code = lookup("bb72").unwrap();
        let pt = run_point(
            &code,
            &NoiseSpec::phenomenological(0.01),
            &[(DecoderVariant::BpOsd, Schedule::Parallel)],
            &DecoderSettings::default(),
            50,
            3,
            false,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_records(&mut buf, pt.primary()).unwrap();
        let back = read_records(&buf[..]).unwrap();
        assert_eq!(back, pt.primary());
    }

    #[test]
    fn trivial_shots_skip_decoding() {
        let code = lookup("gross").unwrap();
        let pt = run_point(
            &code,
            &NoiseSpec::phenomenological(0.0),
            &[(DecoderVariant::RelayOsd, Schedule::Serial)],
            &DecoderSettings::default(),
            20,
            1,
            false,
        )
        .unwrap();
        assert!(pt.primary().iter().all(|r| r.is_trivial() && r.converged && r.iterations == 0));
    }
}
