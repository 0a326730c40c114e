//! Min-sum belief propagation on a Tanner graph.
//!
//! Messages are log-likelihood ratios, positive meaning "bit is 0". A check
//! with syndrome bit `s` pushes its neighbours toward parity `s`:
//!
//! ```text
//! r(c -> v) = (-1)^s · α · Π sign(q(v' -> c)) · min |q(v' -> c)|     (v' ≠ v)
//! ```
//!
//! Three schedules are available:
//!
//! * `Parallel` (flooding): every check message of a sweep is computed from
//!   the previous sweep's bit messages.
//! * `Serial`: bits are visited in index order; each visited bit first
//!   refreshes its incoming check messages from the current bit messages of
//!   the other bits on those checks, then publishes its own. Later bits in
//!   the sweep see the fresh values.
//! * `SerialRelative`: as `Serial`, with the visit order re-sorted before
//!   every sweep by ascending posterior magnitude (least reliable first).
//!
//! After every sweep the hard decision is tested against the syndrome and
//! decoding stops at the first match.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{BitVec, Gf2Matrix};

/// Messages are clipped to this magnitude.
pub const LLR_CLIP: f64 = 50.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    #[default]
    Parallel,
    Serial,
    SerialRelative,
}

impl Schedule {
    pub const ALL: [Schedule; 3] = [Schedule::Parallel, Schedule::Serial, Schedule::SerialRelative];

    pub fn name(self) -> &'static str {
        match self {
            Schedule::Parallel => "parallel",
            Schedule::Serial => "serial",
            Schedule::SerialRelative => "serial_relative",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpConfig {
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default = "default_scaling")]
    pub ms_scaling: f64,
    /// Prior flip probability used to initialise the bit LLRs.
    pub channel_p: f64,
}

fn default_max_iter() -> usize {
    100
}

fn default_scaling() -> f64 {
    1.0
}

impl BpConfig {
    pub fn new(channel_p: f64) -> Self {
        Self {
            max_iter: default_max_iter(),
            schedule: Schedule::Parallel,
            ms_scaling: default_scaling(),
            channel_p,
        }
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_scaling(mut self, ms_scaling: f64) -> Self {
        self.ms_scaling = ms_scaling;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.ms_scaling > 0.0 && self.ms_scaling <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "ms_scaling = {} outside (0, 1]",
                self.ms_scaling
            )));
        }
        if !(self.channel_p > 0.0 && self.channel_p < 0.5) {
            return Err(Error::InvalidConfig(format!(
                "channel_p = {} outside (0, 0.5)",
                self.channel_p
            )));
        }
        Ok(())
    }

    pub fn prior_llr(&self) -> f64 {
        ((1.0 - self.channel_p) / self.channel_p).ln()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BpResult {
    /// The hard decision reproduces the syndrome.
    pub converged: bool,
    pub iterations: usize,
    pub estimate: BitVec,
    /// Posterior LLR of every bit at exit.
    pub posteriors: Vec<f64>,
}

/// Edge-indexed view of a check matrix.
#[derive(Clone, Debug)]
pub struct TannerGraph {
    n_bits: usize,
    n_checks: usize,
    /// Edges of check `c` are `check_start[c]..check_start[c + 1]`.
    check_start: Vec<usize>,
    edge_bit: Vec<usize>,
    edge_check: Vec<usize>,
    bit_edges: Vec<Vec<usize>>,
}

impl TannerGraph {
    pub fn new(h: &Gf2Matrix) -> Self {
        let mut check_start = Vec::with_capacity(h.rows() + 1);
        let mut edge_bit = Vec::new();
        let mut edge_check = Vec::new();
        let mut bit_edges = vec![Vec::new(); h.cols()];
        check_start.push(0);
        for c in 0..h.rows() {
            for v in h.row_support(c) {
                bit_edges[v].push(edge_bit.len());
                edge_bit.push(v);
                edge_check.push(c);
            }
            check_start.push(edge_bit.len());
        }
        Self {
            n_bits: h.cols(),
            n_checks: h.rows(),
            check_start,
            edge_bit,
            edge_check,
            bit_edges,
        }
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn n_checks(&self) -> usize {
        self.n_checks
    }

    pub fn n_edges(&self) -> usize {
        self.edge_bit.len()
    }

    fn check_edges(&self, c: usize) -> std::ops::Range<usize> {
        self.check_start[c]..self.check_start[c + 1]
    }

    fn satisfies(&self, estimate: &[bool], syndrome: &[bool]) -> bool {
        (0..self.n_checks).all(|c| {
            let parity = self
                .check_edges(c)
                .fold(false, |acc, e| acc ^ estimate[self.edge_bit[e]]);
            parity == syndrome[c]
        })
    }
}

#[inline]
fn clip(x: f64) -> f64 {
    x.clamp(-LLR_CLIP, LLR_CLIP)
}

/// Reusable min-sum decoder for one check matrix.
#[derive(Clone, Debug)]
pub struct MinSumDecoder {
    graph: TannerGraph,
    bit_to_check: Vec<f64>,
    check_to_bit: Vec<f64>,
    posterior: Vec<f64>,
    hard: Vec<bool>,
    order: Vec<usize>,
}

impl MinSumDecoder {
    pub fn new(h: &Gf2Matrix) -> Self {
        let graph = TannerGraph::new(h);
        let e = graph.n_edges();
        let n = graph.n_bits();
        Self {
            graph,
            bit_to_check: vec![0.0; e],
            check_to_bit: vec![0.0; e],
            posterior: vec![0.0; n],
            hard: vec![false; n],
            order: (0..n).collect(),
        }
    }

    pub fn graph(&self) -> &TannerGraph {
        &self.graph
    }

    /// Decodes with the uniform prior from `cfg.channel_p`.
    pub fn decode(&mut self, syndrome: &BitVec, cfg: &BpConfig) -> Result<BpResult> {
        cfg.validate()?;
        let priors = vec![cfg.prior_llr(); self.graph.n_bits()];
        self.decode_with_priors(syndrome, &priors, cfg.ms_scaling, cfg.max_iter, cfg.schedule)
    }

    /// Decodes from explicit per-bit prior LLRs.
    pub fn decode_with_priors(
        &mut self,
        syndrome: &BitVec,
        priors: &[f64],
        ms_scaling: f64,
        max_iter: usize,
        schedule: Schedule,
    ) -> Result<BpResult> {
        if syndrome.len() != self.graph.n_checks() {
            return Err(Error::DimensionMismatch {
                expected: self.graph.n_checks(),
                found: syndrome.len(),
            });
        }
        if priors.len() != self.graph.n_bits() {
            return Err(Error::DimensionMismatch {
                expected: self.graph.n_bits(),
                found: priors.len(),
            });
        }
        let syn = syndrome.to_bools();
        let priors: Vec<f64> = priors.iter().map(|&p| clip(p)).collect();

        for (e, &v) in self.graph.edge_bit.iter().enumerate() {
            self.bit_to_check[e] = priors[v];
            self.check_to_bit[e] = 0.0;
        }
        self.posterior.copy_from_slice(&priors);
        self.harden();

        let mut iterations = 0;
        let mut converged = self.graph.satisfies(&self.hard, &syn);
        while !converged && iterations < max_iter {
            match schedule {
                Schedule::Parallel => self.sweep_parallel(&syn, &priors, ms_scaling),
                Schedule::Serial => {
                    self.order.sort_unstable();
                    self.sweep_serial(&syn, &priors, ms_scaling);
                }
                Schedule::SerialRelative => {
                    let post = &self.posterior;
                    self.order.sort_by(|&a, &b| {
                        post[a]
                            .abs()
                            .total_cmp(&post[b].abs())
                            .then(a.cmp(&b))
                    });
                    self.sweep_serial(&syn, &priors, ms_scaling);
                }
            }
            iterations += 1;
            self.harden();
            converged = self.graph.satisfies(&self.hard, &syn);
        }

        Ok(BpResult {
            converged,
            iterations,
            estimate: BitVec::from_bools(&self.hard),
            posteriors: self.posterior.clone(),
        })
    }

    fn harden(&mut self) {
        // An LLR of exactly zero decides 0.
        for (h, &l) in self.hard.iter_mut().zip(&self.posterior) {
            *h = l < 0.0;
        }
    }

    fn sweep_parallel(&mut self, syn: &[bool], priors: &[f64], alpha: f64) {
        let g = &self.graph;
        for c in 0..g.n_checks {
            let edges = g.check_edges(c);
            let mut negative = syn[c];
            let mut min1 = f64::INFINITY;
            let mut min2 = f64::INFINITY;
            let mut arg = usize::MAX;
            for e in edges.clone() {
                let q = self.bit_to_check[e];
                negative ^= q < 0.0;
                let mag = q.abs();
                if mag < min1 {
                    min2 = min1;
                    min1 = mag;
                    arg = e;
                } else if mag < min2 {
                    min2 = mag;
                }
            }
            for e in edges {
                let q = self.bit_to_check[e];
                let mag = if e == arg { min2 } else { min1 };
                let neg = negative ^ (q < 0.0);
                let r = alpha * mag;
                self.check_to_bit[e] = clip(if neg { -r } else { r });
            }
        }
        for v in 0..g.n_bits {
            let total: f64 = priors[v]
                + g.bit_edges[v]
                    .iter()
                    .map(|&e| self.check_to_bit[e])
                    .sum::<f64>();
            self.posterior[v] = total;
            for &e in &g.bit_edges[v] {
                self.bit_to_check[e] = clip(total - self.check_to_bit[e]);
            }
        }
    }

    fn sweep_serial(&mut self, syn: &[bool], priors: &[f64], alpha: f64) {
        let g = &self.graph;
        for &v in &self.order {
            let mut total = priors[v];
            for &e in &g.bit_edges[v] {
                let c = g.edge_check[e];
                let mut negative = syn[c];
                let mut min = f64::INFINITY;
                for other in g.check_edges(c) {
                    if other == e {
                        continue;
                    }
                    let q = self.bit_to_check[other];
                    negative ^= q < 0.0;
                    min = min.min(q.abs());
                }
                let r = alpha * min;
                let r = clip(if negative { -r } else { r });
                self.check_to_bit[e] = r;
                total += r;
            }
            self.posterior[v] = total;
            for &e in &g.bit_edges[v] {
                self.bit_to_check[e] = clip(total - self.check_to_bit[e]);
            }
        }
    }
}

/// One-shot BP decode of `syndrome` against `h`.
pub fn decode_bp(h: &Gf2Matrix, syndrome: &BitVec, cfg: &BpConfig) -> Result<BpResult> {
    MinSumDecoder::new(h).decode(syndrome, cfg)
}

/// Relay-BP: a chain of short BP legs with randomised min-sum scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelayConfig {
    #[serde(default = "default_relays")]
    pub num_relays: usize,
    #[serde(default = "default_iters_per_relay")]
    pub iters_per_relay: usize,
    #[serde(default = "default_scaling_low")]
    pub scaling_low: f64,
    #[serde(default = "default_scaling")]
    pub scaling_high: f64,
    #[serde(default)]
    pub seed: u64,
    /// Feed each leg's posteriors to the next leg as priors. When false,
    /// every leg restarts from the channel prior.
    #[serde(default = "default_true")]
    pub carry_posteriors: bool,
    #[serde(default)]
    pub schedule: Schedule,
    pub channel_p: f64,
}

fn default_relays() -> usize {
    10
}

fn default_iters_per_relay() -> usize {
    20
}

fn default_scaling_low() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

impl RelayConfig {
    pub fn new(channel_p: f64, seed: u64) -> Self {
        Self {
            num_relays: default_relays(),
            iters_per_relay: default_iters_per_relay(),
            scaling_low: default_scaling_low(),
            scaling_high: default_scaling(),
            seed,
            carry_posteriors: true,
            schedule: Schedule::Parallel,
            channel_p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_relays == 0 || self.iters_per_relay == 0 {
            return Err(Error::InvalidConfig("relay counts must be at least 1".into()));
        }
        if !(self.scaling_low > 0.0 && self.scaling_low <= self.scaling_high && self.scaling_high <= 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "relay scaling range [{}, {}] must lie in (0, 1] and be ordered",
                self.scaling_low, self.scaling_high
            )));
        }
        BpConfig::new(self.channel_p).validate()
    }
}

impl MinSumDecoder {
    pub fn decode_relay(&mut self, syndrome: &BitVec, cfg: &RelayConfig) -> Result<BpResult> {
        cfg.validate()?;
        let base = vec![BpConfig::new(cfg.channel_p).prior_llr(); self.graph.n_bits()];
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut priors = base.clone();
        let mut total_iters = 0;
        let mut last = None;
        for _ in 0..cfg.num_relays {
            let alpha = if cfg.scaling_low == cfg.scaling_high {
                cfg.scaling_low
            } else {
                rng.random_range(cfg.scaling_low..=cfg.scaling_high)
            };
            let mut leg = self.decode_with_priors(
                syndrome,
                &priors,
                alpha,
                cfg.iters_per_relay,
                cfg.schedule,
            )?;
            total_iters += leg.iterations;
            leg.iterations = total_iters;
            if leg.converged {
                return Ok(leg);
            }
            if cfg.carry_posteriors {
                priors.clone_from(&leg.posteriors);
            }
            last = Some(leg);
        }
        Ok(last.expect("at least one relay leg"))
    }
}

pub fn decode_relay(h: &Gf2Matrix, syndrome: &BitVec, cfg: &RelayConfig) -> Result<BpResult> {
    MinSumDecoder::new(h).decode_relay(syndrome, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::lookup;

    #[test]
    fn trivial_syndrome_converges_immediately() {
        let g = lookup("gross").unwrap();
        for schedule in Schedule::ALL {
            let cfg = BpConfig::new(0.01).with_schedule(schedule);
            let r = decode_bp(&g.hz, &BitVec::zeros(72), &cfg).unwrap();
            assert!(r.converged);
            assert_eq!(r.iterations, 0);
            assert!(r.estimate.is_zero());
        }
        let r = decode_relay(&g.hz, &BitVec::zeros(72), &RelayConfig::new(0.01, 1)).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn single_error_is_decoded() {
        let g = lookup("gross").unwrap();
        for q in [0, 17, 71, 72, 143] {
            let e = BitVec::from_indices(144, &[q]);
            let s = g.hz.matvec(&e).unwrap();
            for schedule in Schedule::ALL {
                let r = decode_bp(&g.hz, &s, &BpConfig::new(0.01).with_schedule(schedule)).unwrap();
                assert!(r.converged, "qubit {q} {schedule:?}");
                assert_eq!(g.hz.matvec(&r.estimate).unwrap(), s);
            }
        }
    }

    #[test]
    fn lone_defect_does_not_converge() {
        let g = lookup("gross").unwrap();
        let s = BitVec::from_indices(72, &[5]);
        let r = decode_bp(&g.hz, &s, &BpConfig::new(0.01)).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 100);
    }

    #[test]
    fn dimension_and_config_errors() {
        let g = lookup("gross").unwrap();
        assert!(decode_bp(&g.hz, &BitVec::zeros(71), &BpConfig::new(0.01)).is_err());
        assert!(decode_bp(&g.hz, &BitVec::zeros(72), &BpConfig::new(0.0)).is_err());
        assert!(decode_bp(&g.hz, &BitVec::zeros(72), &BpConfig::new(0.5)).is_err());
        assert!(decode_bp(&g.hz, &BitVec::zeros(72), &BpConfig::new(0.01).with_scaling(0.0)).is_err());
        assert!(decode_bp(&g.hz, &BitVec::zeros(72), &BpConfig::new(0.01).with_max_iter(0)).is_err());
        let mut rc = RelayConfig::new(0.01, 0);
        rc.scaling_low = 0.9;
        rc.scaling_high = 0.5;
        assert!(decode_relay(&g.hz, &BitVec::zeros(72), &rc).is_err());
    }

    #[test]
    fn decoding_is_deterministic() {
        let g = lookup("gross").unwrap();
        let s = BitVec::from_indices(72, &[1, 9, 30, 44]);
        for schedule in Schedule::ALL {
            let cfg = BpConfig::new(0.02).with_schedule(schedule);
            assert_eq!(decode_bp(&g.hz, &s, &cfg).unwrap(), decode_bp(&g.hz, &s, &cfg).unwrap());
        }
        let rc = RelayConfig::new(0.02, 42);
        assert_eq!(decode_relay(&g.hz, &s, &rc).unwrap(), decode_relay(&g.hz, &s, &rc).unwrap());
    }

    #[test]
    fn relay_counts_all_leg_iterations() {
        let g = lookup("gross").unwrap();
        let s = BitVec::from_indices(72, &[3]);
        let r = decode_relay(&g.hz, &s, &RelayConfig::new(0.01, 3)).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 200);
    }

    #[test]
    fn tanner_graph_shape() {
        let g = lookup("gross").unwrap();
        let t = TannerGraph::new(&g.hz);
        assert_eq!(t.n_bits(), 144);
        assert_eq!(t.n_checks(), 72);
        assert_eq!(t.n_edges(), 144 * 3);
    }
}
