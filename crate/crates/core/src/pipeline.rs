//! Discrete-event model of a decoder pipeline with mod-w pre-routing.
//!
//! Syndromes arrive on a fixed cadence (or as a Poisson stream). Under
//! pre-routing a trivial syndrome needs no decoding, a syndrome whose
//! defect count is a multiple of `w` goes to the BP-only pool and the rest go
//! to the BP+OSD pool. The baseline sends everything through one pool and
//! pays the OSD latency whenever BP fails.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::DecodeRecord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    CodeCapacity,
    Phenomenological,
}

impl Regime {
    /// `(bp_latency_converge, bp_osd_latency)` in microseconds.
    pub fn latencies(self) -> (f64, f64) {
        match self {
            Regime::CodeCapacity => (46.0, 108.0),
            Regime::Phenomenological => (100.0, 300.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Routing {
    ModWPrerouting,
    BaselineAllThroughBp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Microseconds between syndrome arrivals (the mean gap when Poisson).
    pub arrival_period: f64,
    pub poisson_arrivals: bool,
    pub regime: Regime,
    /// Overrides the regime's converge latency.
    pub bp_latency_converge: Option<f64>,
    /// Overrides the regime's BP+OSD latency.
    pub bp_osd_latency: Option<f64>,
    pub num_bp_workers: usize,
    pub num_osd_workers: usize,
    pub routing: Routing,
    /// Width of the latency histogram bins in microseconds.
    pub histogram_bin: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            arrival_period: 150.0,
            poisson_arrivals: false,
            regime: Regime::Phenomenological,
            bp_latency_converge: None,
            bp_osd_latency: None,
            num_bp_workers: 1,
            num_osd_workers: 1,
            routing: Routing::ModWPrerouting,
            histogram_bin: 100.0,
        }
    }
}

impl PipelineConfig {
    pub fn converge_latency(&self) -> f64 {
        self.bp_latency_converge.unwrap_or(self.regime.latencies().0)
    }

    pub fn osd_latency(&self) -> f64 {
        self.bp_osd_latency.unwrap_or(self.regime.latencies().1)
    }

    pub fn with_routing(mut self, routing: Routing) -> Self {
        self.routing = routing;
        self
    }

    pub fn with_arrival_period(mut self, period: f64) -> Self {
        self.arrival_period = period;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.arrival_period)
            || !positive(self.converge_latency())
            || !positive(self.osd_latency())
            || !positive(self.histogram_bin)
        {
            return Err(Error::InvalidConfig("times must be positive".into()));
        }
        if self.num_bp_workers == 0 || self.num_osd_workers == 0 {
            return Err(Error::InvalidConfig("worker counts must be positive".into()));
        }
        Ok(())
    }
}

/// The part of a decoded shot the router and the workers care about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotLabel {
    pub defect_count: usize,
    pub w: usize,
    /// Whether BP converged on this shot.
    pub converged: bool,
}

impl ShotLabel {
    pub fn is_trivial(&self) -> bool {
        self.defect_count == 0
    }

    pub fn mod_w_zero(&self) -> bool {
        self.defect_count % self.w == 0
    }
}

impl From<&DecodeRecord> for ShotLabel {
    fn from(r: &DecodeRecord) -> Self {
        Self {
            defect_count: r.defect_count,
            w: r.w,
            converged: r.converged,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolReport {
    pub name: String,
    pub workers: usize,
    pub served: usize,
    /// Busy time over makespan, per worker.
    pub utilization: Vec<f64>,
    /// Time-averaged number of shots waiting (not in service).
    pub mean_queue_depth: f64,
    pub max_queue_depth: usize,
    /// Time-averaged number of shots waiting or in service.
    pub mean_in_system: f64,
    /// Shots in this pool whose defect count is a multiple of `w`.
    pub mod_w_zero_served: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub routing: Routing,
    pub shots: usize,
    pub completed: usize,
    pub trivial: usize,
    pub nontrivial: usize,
    /// Nontrivial shots routed to the BP+OSD pool.
    pub osd_routed: usize,
    pub osd_fraction: f64,
    /// Shots whose decode ran OSD anywhere, including false positives.
    pub osd_invoked: usize,
    pub false_positives: usize,
    pub pools: Vec<PoolReport>,
    /// Mean service time per shot, trivial shots included.
    pub mean_cost_us: f64,
    pub mean_latency_us: f64,
    pub max_latency_us: f64,
    pub makespan_us: f64,
    pub latency_histogram: Vec<HistogramBin>,
}

impl SimReport {
    pub fn pool(&self, name: &str) -> Option<&PoolReport> {
        self.pools.iter().find(|p| p.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum EventKind {
    Arrival(usize),
    Done { pool: usize, worker: usize },
}

#[derive(Debug)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest (time, seq) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.seq.cmp(&self.seq))
    }
}

struct Job {
    shot: usize,
    arrived: f64,
    service: f64,
}

struct Pool {
    name: &'static str,
    queue: VecDeque<Job>,
    busy: Vec<Option<Job>>,
    busy_time: Vec<f64>,
    served: usize,
    mod_w_zero_served: usize,
    depth_area: f64,
    system_area: f64,
    last_change: f64,
    max_depth: usize,
}

impl Pool {
    fn new(name: &'static str, workers: usize) -> Self {
        Self {
            name,
            queue: VecDeque::new(),
            busy: (0..workers).map(|_| None).collect(),
            busy_time: vec![0.0; workers],
            served: 0,
            mod_w_zero_served: 0,
            depth_area: 0.0,
            system_area: 0.0,
            last_change: 0.0,
            max_depth: 0,
        }
    }

    fn in_service(&self) -> usize {
        self.busy.iter().filter(|b| b.is_some()).count()
    }

    /// Accumulates the depth integrals up to `now`.
    fn advance(&mut self, now: f64) {
        let dt = now - self.last_change;
        self.depth_area += dt * self.queue.len() as f64;
        self.system_area += dt * (self.queue.len() + self.in_service()) as f64;
        self.last_change = now;
    }

    fn report(&self, makespan: f64) -> PoolReport {
        let per = |area: f64| if makespan > 0.0 { area / makespan } else { 0.0 };
        PoolReport {
            name: self.name.to_string(),
            workers: self.busy.len(),
            served: self.served,
            utilization: self.busy_time.iter().map(|&b| per(b).min(1.0)).collect(),
            mean_queue_depth: per(self.depth_area),
            max_queue_depth: self.max_depth,
            mean_in_system: per(self.system_area),
            mod_w_zero_served: self.mod_w_zero_served,
        }
    }
}

struct Sim<'a> {
    cfg: &'a PipelineConfig,
    labels: &'a [ShotLabel],
    events: BinaryHeap<Event>,
    seq: u64,
    pools: Vec<Pool>,
    latencies: Vec<f64>,
    completed: usize,
}

impl<'a> Sim<'a> {
    fn push(&mut self, time: f64, kind: EventKind) {
        self.events.push(Event {
            time,
            seq: self.seq,
            kind,
        });
        self.seq += 1;
    }

    fn start_if_idle(&mut self, pool: usize, now: f64) {
        while let Some(worker) = self.pools[pool].busy.iter().position(|b| b.is_none()) {
            let Some(job) = self.pools[pool].queue.pop_front() else {
                return;
            };
            let p = &mut self.pools[pool];
            p.advance(now);
            p.busy_time[worker] += job.service;
            let done = now + job.service;
            p.busy[worker] = Some(job);
            self.push(done, EventKind::Done { pool, worker });
        }
    }

    fn enqueue(&mut self, pool: usize, job: Job, now: f64) {
        let p = &mut self.pools[pool];
        p.advance(now);
        p.queue.push_back(job);
        self.start_if_idle(pool, now);
        let p = &mut self.pools[pool];
        p.max_depth = p.max_depth.max(p.queue.len());
    }

    fn arrive(&mut self, shot: usize, now: f64) {
        let label = self.labels[shot];
        let fast = self.cfg.converge_latency();
        let slow = self.cfg.osd_latency();
        let service = if label.converged { fast } else { slow };
        let pool = match self.cfg.routing {
            Routing::BaselineAllThroughBp => 0,
            Routing::ModWPrerouting if label.is_trivial() => {
                self.latencies.push(0.0);
                self.completed += 1;
                return;
            }
            Routing::ModWPrerouting if label.mod_w_zero() => 0,
            Routing::ModWPrerouting => 1,
        };
        // A shot routed to the OSD pool always pays for BP and OSD.
        let service = if pool == 1 { slow } else { service };
        self.enqueue(
            pool,
            Job {
                shot,
                arrived: now,
                service,
            },
            now,
        );
    }

    fn finish(&mut self, pool: usize, worker: usize, now: f64) {
        let p = &mut self.pools[pool];
        p.advance(now);
        let job = p.busy[worker].take().expect("completion for an idle worker");
        p.served += 1;
        if self.labels[job.shot].mod_w_zero() {
            p.mod_w_zero_served += 1;
        }
        self.latencies.push(now - job.arrived);
        self.completed += 1;
        self.start_if_idle(pool, now);
    }
}

/// Runs the pipeline over `labels` in order. `seed` drives Poisson arrivals.
pub fn run_sim(cfg: &PipelineConfig, labels: &[ShotLabel], seed: u64) -> Result<SimReport> {
    cfg.validate()?;
    let pools = match cfg.routing {
        Routing::ModWPrerouting => vec![
            Pool::new("bp", cfg.num_bp_workers),
            Pool::new("osd", cfg.num_osd_workers),
        ],
        Routing::BaselineAllThroughBp => {
            vec![Pool::new("bp", cfg.num_bp_workers + cfg.num_osd_workers)]
        }
    };
    let mut sim = Sim {
        cfg,
        labels,
        events: BinaryHeap::new(),
        seq: 0,
        pools,
        latencies: Vec::with_capacity(labels.len()),
        completed: 0,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    for shot in 0..labels.len() {
        sim.push(t, EventKind::Arrival(shot));
        t += if cfg.poisson_arrivals {
            let u: f64 = rng.random();
            -(1.0 - u).ln() * cfg.arrival_period
        } else {
            cfg.arrival_period
        };
    }

    let mut now = 0.0;
    while let Some(ev) = sim.events.pop() {
        now = ev.time;
        match ev.kind {
            EventKind::Arrival(shot) => sim.arrive(shot, now),
            EventKind::Done { pool, worker } => sim.finish(pool, worker, now),
        }
    }
    // Measure up to the last arrival slot so an idle tail is not ignored.
    let makespan = now.max(t);
    for p in &mut sim.pools {
        p.advance(makespan);
    }

    let trivial = labels.iter().filter(|l| l.is_trivial()).count();
    let nontrivial = labels.len() - trivial;
    let (osd_routed, false_positives, osd_invoked) = match cfg.routing {
        Routing::ModWPrerouting => {
            let routed = labels
                .iter()
                .filter(|l| !l.is_trivial() && !l.mod_w_zero())
                .count();
            let fp = labels
                .iter()
                .filter(|l| !l.is_trivial() && l.mod_w_zero() && !l.converged)
                .count();
            (routed, fp, routed + fp)
        }
        Routing::BaselineAllThroughBp => {
            let failed = labels.iter().filter(|l| !l.converged).count();
            (0, 0, failed)
        }
    };
    let total_service: f64 = sim.pools.iter().flat_map(|p| &p.busy_time).sum();
    let n = labels.len().max(1) as f64;
    let mean_latency = sim.latencies.iter().sum::<f64>() / n;
    let max_latency = sim.latencies.iter().copied().fold(0.0, f64::max);

    Ok(SimReport {
        routing: cfg.routing,
        shots: labels.len(),
        completed: sim.completed,
        trivial,
        nontrivial,
        osd_routed,
        osd_fraction: if nontrivial > 0 {
            osd_routed as f64 / nontrivial as f64
        } else {
            0.0
        },
        osd_invoked,
        false_positives,
        pools: sim.pools.iter().map(|p| p.report(makespan)).collect(),
        mean_cost_us: total_service / n,
        mean_latency_us: mean_latency,
        max_latency_us: max_latency,
        makespan_us: makespan,
        latency_histogram: histogram(&sim.latencies, cfg.histogram_bin),
    })
}

fn histogram(values: &[f64], width: f64) -> Vec<HistogramBin> {
    let mut counts: Vec<usize> = Vec::new();
    for &v in values {
        let bin = (v / width).floor() as usize;
        if bin >= counts.len() {
            counts.resize(bin + 1, 0);
        }
        counts[bin] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lo: i as f64 * width,
            hi: (i + 1) as f64 * width,
            count,
        })
        .collect()
}
