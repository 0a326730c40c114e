//! Error sampling under code-capacity and phenomenological noise.
//!
//! Every experiment samples one error type only: X errors seen by the Z
//! checks in a Z-memory run, Z errors seen by the X checks otherwise.
//!
//! Phenomenological shots are collapsed into a single syndrome. Data flips
//! XOR-accumulate over the `rounds`, each check outcome can be flipped
//! independently in every round, and the decoded syndrome is
//! `H · e  XOR  m_syn` with `m_syn` the per-check parity of the measurement
//! flips. A measurement error therefore contributes exactly one defect.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::code::{BBCode, Basis};
use crate::error::{Error, Result};
use crate::gf2::BitVec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    CodeCapacityIid,
    CodeCapacityFixedWeight,
    Phenomenological,
}

/// How `p` relates to the rounds of a shot.
///
/// `PerShot`: `p` is the marginal probability that a data qubit ends the shot
/// flipped, and that a check's accumulated measurement parity is flipped.
/// Each round uses `q = (1 - (1 - 2p)^(1/T)) / 2`, so `T` independent
/// `q`-flips XOR to a `p`-flip. `PerRound`: every round flips with `p`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateConvention {
    #[default]
    PerShot,
    PerRound,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub p: f64,
    #[serde(default)]
    pub fixed_weight: Option<usize>,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default)]
    pub basis: Basis,
    #[serde(default)]
    pub rate: RateConvention,
}

fn default_rounds() -> usize {
    5
}

impl NoiseSpec {
    pub fn code_capacity(p: f64) -> Self {
        Self {
            kind: NoiseKind::CodeCapacityIid,
            p,
            fixed_weight: None,
            rounds: 1,
            basis: Basis::ZMemory,
            rate: RateConvention::PerShot,
        }
    }

    pub fn fixed_weight(weight: usize) -> Self {
        Self {
            kind: NoiseKind::CodeCapacityFixedWeight,
            p: 0.0,
            fixed_weight: Some(weight),
            rounds: 1,
            basis: Basis::ZMemory,
            rate: RateConvention::PerShot,
        }
    }

    /// Phenomenological noise over 5 rounds.
    pub fn phenomenological(p: f64) -> Self {
        Self {
            kind: NoiseKind::Phenomenological,
            p,
            fixed_weight: None,
            rounds: default_rounds(),
            basis: Basis::ZMemory,
            rate: RateConvention::PerShot,
        }
    }

    pub fn with_basis(mut self, basis: Basis) -> Self {
        self.basis = basis;
        self
    }

    pub fn with_rounds(mut self, rounds: usize) -> Self {
        self.rounds = rounds;
        self
    }

    pub fn with_rate(mut self, rate: RateConvention) -> Self {
        self.rate = rate;
        self
    }

    pub fn validate(&self, code: &BBCode) -> Result<()> {
        if !(0.0..0.5).contains(&self.p) {
            return Err(Error::InvalidNoise(format!("p = {} outside [0, 0.5)", self.p)));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidNoise("rounds must be at least 1".into()));
        }
        match (self.kind, self.fixed_weight) {
            (NoiseKind::CodeCapacityFixedWeight, None) => Err(Error::InvalidNoise(
                "fixed-weight noise needs `fixed_weight`".into(),
            )),
            (NoiseKind::CodeCapacityFixedWeight, Some(k)) if k > code.n() => Err(
                Error::InvalidNoise(format!("weight {k} exceeds n = {}", code.n())),
            ),
            (NoiseKind::CodeCapacityFixedWeight, Some(_)) => Ok(()),
            (_, Some(_)) => Err(Error::InvalidNoise(
                "`fixed_weight` only applies to fixed-weight noise".into(),
            )),
            (_, None) => Ok(()),
        }
    }

    /// Flip probability applied in each round.
    pub fn per_round_probability(&self) -> f64 {
        match self.rate {
            RateConvention::PerRound => self.p,
            RateConvention::PerShot => {
                let t = self.rounds.max(1) as f64;
                0.5 * (1.0 - (1.0 - 2.0 * self.p).powf(1.0 / t))
            }
        }
    }

    /// Marginal probability that a bit is flipped at the end of the shot.
    /// This is the prior a matched decoder uses.
    pub fn effective_probability(&self) -> f64 {
        match self.kind {
            NoiseKind::CodeCapacityFixedWeight => 0.0,
            _ => {
                let q = self.per_round_probability();
                0.5 * (1.0 - (1.0 - 2.0 * q).powi(self.rounds as i32))
            }
        }
    }
}

/// Ground truth for one shot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorSample {
    /// Accumulated data flips, length `n`.
    pub data: BitVec,
    /// Measurement flips, one vector of length `n_checks` per round.
    pub meas: Vec<BitVec>,
    /// Per-check parity of `meas`.
    pub meas_syndrome: BitVec,
}

impl ErrorSample {
    pub fn data_weight(&self) -> usize {
        self.data.count_ones()
    }

    /// Total measurement flips over all rounds and checks.
    pub fn meas_count(&self) -> usize {
        self.meas.iter().map(BitVec::count_ones).sum()
    }
}

/// A syndrome with its cached defect count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Syndrome {
    pub bits: BitVec,
    pub defect_count: usize,
    w: usize,
}

impl Syndrome {
    pub fn new(bits: BitVec, w: usize) -> Self {
        assert!(w >= 1);
        let defect_count = bits.count_ones();
        Self {
            bits,
            defect_count,
            w,
        }
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn mod_w_class(&self) -> usize {
        self.defect_count % self.w
    }

    pub fn is_trivial(&self) -> bool {
        self.defect_count == 0
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a stream index into a new seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ splitmix64(stream.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Independent generator for shot `shot` of a run seeded with `seed`.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, shot))
}

fn bernoulli_vec<R: Rng + ?Sized>(rng: &mut R, len: usize, q: f64) -> BitVec {
    let mut v = BitVec::zeros(len);
    if q <= 0.0 {
        return v;
    }
    if q >= 0.1 {
        for i in 0..len {
            if rng.random::<f64>() < q {
                v.set(i, true);
            }
        }
        return v;
    }
    // Jump straight to the next flip: the gap is geometric with P(gap >= k) = (1-q)^k.
    let ln_keep = (1.0 - q).ln();
    let mut i = 0usize;
    while i < len {
        let u: f64 = rng.random();
        let gap = ((1.0 - u).ln() / ln_keep).floor();
        if gap >= (len - i) as f64 {
            break;
        }
        i += gap as usize;
        v.set(i, true);
        i += 1;
    }
    v
}

/// Draws one shot from the given generator.
pub fn sample_with<R: Rng + ?Sized>(
    code: &BBCode,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<(ErrorSample, Syndrome)> {
    spec.validate(code)?;
    let n = code.n();
    let nc = code.n_checks();
    let q = spec.per_round_probability();

    let (data, meas) = match spec.kind {
        NoiseKind::CodeCapacityFixedWeight => {
            let k = spec.fixed_weight.unwrap_or(0);
            let picks = index::sample(rng, n, k).into_vec();
            (BitVec::from_indices(n, &picks), Vec::new())
        }
        NoiseKind::CodeCapacityIid => {
            let mut data = BitVec::zeros(n);
            for _ in 0..spec.rounds {
                data.xor_assign(&bernoulli_vec(rng, n, q));
            }
            (data, Vec::new())
        }
        NoiseKind::Phenomenological => {
            let mut data = BitVec::zeros(n);
            let mut meas = Vec::with_capacity(spec.rounds);
            for _ in 0..spec.rounds {
                data.xor_assign(&bernoulli_vec(rng, n, q));
                meas.push(bernoulli_vec(rng, nc, q));
            }
            (data, meas)
        }
    };

    let mut meas_syndrome = BitVec::zeros(nc);
    for round in &meas {
        meas_syndrome.xor_assign(round);
    }
    let mut bits = code.syndrome_of(spec.basis, &data)?;
    bits.xor_assign(&meas_syndrome);

    Ok((
        ErrorSample {
            data,
            meas,
            meas_syndrome,
        },
        Syndrome::new(bits, code.w),
    ))
}

/// Draws one shot deterministically from `seed`.
pub fn sample(code: &BBCode, spec: &NoiseSpec, seed: u64) -> Result<(ErrorSample, Syndrome)> {
    sample_with(code, spec, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Draws shot number `shot` of the run seeded with `seed`.
pub fn sample_shot(
    code: &BBCode,
    spec: &NoiseSpec,
    seed: u64,
    shot: u64,
) -> Result<(ErrorSample, Syndrome)> {
    sample_with(code, spec, &mut shot_rng(seed, shot))
}

/// Terms of `defect_count = w·|e| + |m_syn| − 2·overlap`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DefectDecomposition {
    /// `w · |e|`.
    pub data_term: usize,
    /// `|m_syn|`.
    pub meas_term: usize,
    /// Pairs of activations that cancelled on a shared check.
    pub overlap: usize,
}

impl DefectDecomposition {
    pub fn defect_count(&self) -> usize {
        self.data_term + self.meas_term - 2 * self.overlap
    }
}

/// Counts check activations from every data error and measurement flip and
/// reports how many pairs cancelled.
pub fn defect_decomposition(
    code: &BBCode,
    basis: Basis,
    sample: &ErrorSample,
) -> DefectDecomposition {
    let h = code.check_matrix(basis);
    let mut hits = vec![0usize; code.n_checks()];
    let mut data_term = 0;
    for q in sample.data.iter_ones() {
        for c in h.col_support(q) {
            hits[c] += 1;
            data_term += 1;
        }
    }
    for c in sample.meas_syndrome.iter_ones() {
        hits[c] += 1;
    }
    DefectDecomposition {
        data_term,
        meas_term: sample.meas_syndrome.count_ones(),
        overlap: hits.iter().map(|h| h / 2).sum(),
    }
}
