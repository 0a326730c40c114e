//! Order-0 ordered statistics decoding and the BP+OSD pipeline.
//!
//! Columns are ranked least reliable first (ascending `|LLR|`, ties by
//! index) and eliminated in that order, so the pivots land on the least
//! reliable bits. Every non-pivot bit keeps its hard decision and the pivot
//! bits are solved to match the syndrome.

use serde::{Deserialize, Serialize};

use crate::bp::{BpConfig, BpResult, MinSumDecoder};
use crate::error::{Error, Result};
use crate::gf2::{row_reduce, BitVec, Gf2Matrix};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OsdResult {
    pub estimate: BitVec,
    /// `H · estimate == s`.
    pub valid: bool,
    pub pivots: Vec<usize>,
}

/// Column order used by OSD-0: ascending reliability, ties by index.
pub fn reliability_order(reliabilities: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..reliabilities.len()).collect();
    order.sort_by(|&a, &b| {
        reliabilities[a]
            .abs()
            .total_cmp(&reliabilities[b].abs())
            .then(a.cmp(&b))
    });
    order
}

/// OSD-0 on `H x = s` given per-bit LLRs.
///
/// When `s` lies outside the column span of `H` the estimate satisfies the
/// pivot rows only and `valid` is false.
pub fn decode_osd0(h: &Gf2Matrix, syndrome: &BitVec, reliabilities: &[f64]) -> Result<OsdResult> {
    if syndrome.len() != h.rows() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            found: syndrome.len(),
        });
    }
    if reliabilities.len() != h.cols() {
        return Err(Error::DimensionMismatch {
            expected: h.cols(),
            found: reliabilities.len(),
        });
    }

    let ech = row_reduce(h, &reliability_order(reliabilities))?;
    let mut is_pivot = vec![false; h.cols()];
    for &p in &ech.pivots {
        is_pivot[p] = true;
    }

    let mut estimate = BitVec::zeros(h.cols());
    for (j, &llr) in reliabilities.iter().enumerate() {
        if !is_pivot[j] && llr < 0.0 {
            estimate.set(j, true);
        }
    }
    let mut residual = h.matvec(&estimate)?;
    residual.xor_assign(syndrome);
    let rhs = ech.transform_rhs(&residual)?;
    for (r, &c) in ech.pivots.iter().enumerate() {
        if rhs.get(r) {
            estimate.set(c, true);
        }
    }

    let valid = h.matvec(&estimate)? == *syndrome;
    Ok(OsdResult {
        estimate,
        valid,
        pivots: ech.pivots,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DecodePath {
    BpOnly,
    BpOsd,
}

impl DecodePath {
    pub fn name(self) -> &'static str {
        match self {
            DecodePath::BpOnly => "BP_ONLY",
            DecodePath::BpOsd => "BP_OSD",
        }
    }
}

/// What BP+OSD produced for one syndrome.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOutcome {
    pub path: DecodePath,
    /// BP's own convergence flag.
    pub bp_converged: bool,
    pub iterations: usize,
    pub estimate: BitVec,
    /// The final estimate reproduces the syndrome.
    pub valid: bool,
}

impl DecodeOutcome {
    fn from_bp(bp: BpResult) -> Self {
        Self {
            path: DecodePath::BpOnly,
            bp_converged: true,
            iterations: bp.iterations,
            estimate: bp.estimate,
            valid: true,
        }
    }
}

impl MinSumDecoder {
    /// BP first; OSD-0 on BP's final posteriors when BP does not converge.
    pub fn decode_bp_osd(
        &mut self,
        h: &Gf2Matrix,
        syndrome: &BitVec,
        cfg: &BpConfig,
    ) -> Result<DecodeOutcome> {
        let bp = self.decode(syndrome, cfg)?;
        if bp.converged {
            return Ok(DecodeOutcome::from_bp(bp));
        }
        let osd = decode_osd0(h, syndrome, &bp.posteriors)?;
        Ok(DecodeOutcome {
            path: DecodePath::BpOsd,
            bp_converged: false,
            iterations: bp.iterations,
            estimate: osd.estimate,
            valid: osd.valid,
        })
    }
}

pub fn decode_bp_osd(h: &Gf2Matrix, syndrome: &BitVec, cfg: &BpConfig) -> Result<DecodeOutcome> {
    MinSumDecoder::new(h).decode_bp_osd(h, syndrome, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::lookup;
    use crate::gf2::solve_in_image;
    use crate::noise::{sample_shot, NoiseSpec};

    #[test]
    fn zero_syndrome_confident_priors() {
        let g = lookup("gross").unwrap();
        let r = decode_osd0(&g.hz, &BitVec::zeros(72), &vec![4.0; 144]).unwrap();
        assert!(r.valid);
        assert!(r.estimate.is_zero());
        assert_eq!(r.pivots.len(), g.hz.rank());
    }

    #[test]
    fn code_capacity_syndromes_are_solved() {
        let g = lookup("gross").unwrap();
        let spec = NoiseSpec::code_capacity(0.05);
        for shot in 0..100 {
            let (_, s) = sample_shot(&g, &spec, 1, shot).unwrap();
            let bp = crate::bp::decode_bp(&g.hz, &s.bits, &BpConfig::new(0.05).with_max_iter(5)).unwrap();
            let r = decode_osd0(&g.hz, &s.bits, &bp.posteriors).unwrap();
            assert!(r.valid);
            assert_eq!(g.hz.matvec(&r.estimate).unwrap(), s.bits);
        }
    }

    #[test]
    fn out_of_image_syndrome_is_flagged() {
        let g = lookup("gross").unwrap();
        let e = BitVec::from_indices(144, &[10]);
        let mut s = g.hz.matvec(&e).unwrap();
        // A measurement flip on a check the data error does not touch.
        let extra = (0..72).find(|&c| !s.get(c)).unwrap();
        s.flip(extra);
        assert!(solve_in_image(&g.hz, &s).unwrap().is_none());
        let r = decode_osd0(&g.hz, &s, &vec![2.0; 144]).unwrap();
        assert!(!r.valid);
    }

    #[test]
    fn non_pivot_bits_follow_hard_decision() {
        let g = lookup("gross").unwrap();
        let llrs: Vec<f64> = (0..144).map(|i| ((i * 37 % 101) as f64 - 30.0) / 7.0).collect();
        let s = g.hz.matvec(&BitVec::from_indices(144, &[3, 80])).unwrap();
        let r = decode_osd0(&g.hz, &s, &llrs).unwrap();
        assert!(r.valid);
        for j in 0..144 {
            if !r.pivots.contains(&j) {
                assert_eq!(r.estimate.get(j), llrs[j] < 0.0, "bit {j}");
            }
        }
    }

    #[test]
    fn ties_break_by_index() {
        assert_eq!(reliability_order(&[1.0, -1.0, 0.5, 1.0]), vec![2, 0, 1, 3]);
    }

    #[test]
    fn converged_bp_skips_osd() {
        let g = lookup("gross").unwrap();
        let s = g.hz.matvec(&BitVec::from_indices(144, &[7])).unwrap();
        let out = decode_bp_osd(&g.hz, &s, &BpConfig::new(0.01)).unwrap();
        assert_eq!(out.path, DecodePath::BpOnly);
        assert!(out.bp_converged && out.valid);
    }

    #[test]
    fn failed_bp_falls_back() {
        let g = lookup("gross").unwrap();
        let s = BitVec::from_indices(72, &[0]);
        let out = decode_bp_osd(&g.hz, &s, &BpConfig::new(0.01)).unwrap();
        assert_eq!(out.path, DecodePath::BpOsd);
        assert!(!out.bp_converged);
        assert!(!out.valid);
    }

    #[test]
    fn dimension_errors() {
        let g = lookup("gross").unwrap();
        assert!(decode_osd0(&g.hz, &BitVec::zeros(70), &vec![1.0; 144]).is_err());
        assert!(decode_osd0(&g.hz, &BitVec::zeros(72), &vec![1.0; 143]).is_err());
    }
}
