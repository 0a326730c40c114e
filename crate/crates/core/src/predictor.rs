//! The mod-w convergence predictor and the statistics used to judge it.
//!
//! Each data error flips exactly `w` checks and each measurement error flips
//! one, so a defect count that is not a multiple of `w` needs measurement
//! errors that BP's data-only model cannot explain. The predictor is one
//! modulo operation; the rest of this module measures how well it works.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::Gf2Matrix;
use crate::noise::{ErrorSample, Syndrome};
use crate::record::DecodeRecord;

/// Predicts BP convergence: `defect_count mod w == 0`.
pub fn predict_convergence(syndrome: &Syndrome, w: usize) -> bool {
    syndrome.defect_count % w == 0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub defect_count: usize,
    pub mod_w_zero: bool,
    pub max_component: usize,
    pub position_variance: f64,
}

/// Check-to-check adjacency: two checks are adjacent when some column of
/// `H` touches both.
#[derive(Clone, Debug)]
pub struct DetectorGraph {
    w: usize,
    neighbours: Vec<Vec<usize>>,
}

impl DetectorGraph {
    pub fn new(h: &Gf2Matrix, w: usize) -> Self {
        let mut neighbours = vec![Vec::new(); h.rows()];
        for q in 0..h.cols() {
            let checks = h.col_support(q);
            for &a in &checks {
                for &b in &checks {
                    if a != b && !neighbours[a].contains(&b) {
                        neighbours[a].push(b);
                    }
                }
            }
        }
        for n in &mut neighbours {
            n.sort_unstable();
        }
        Self { w, neighbours }
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.neighbours[a].binary_search(&b).is_ok()
    }

    /// Size of the largest connected set of defects.
    pub fn max_component(&self, syndrome: &Syndrome) -> usize {
        let defects = syndrome.bits.ones();
        let mut is_defect = vec![false; self.neighbours.len()];
        for &d in &defects {
            is_defect[d] = true;
        }
        let mut seen = vec![false; self.neighbours.len()];
        let mut best = 0;
        let mut stack = Vec::new();
        for &start in &defects {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            stack.push(start);
            let mut size = 0;
            while let Some(c) = stack.pop() {
                size += 1;
                for &nb in &self.neighbours[c] {
                    if is_defect[nb] && !seen[nb] {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                }
            }
            best = best.max(size);
        }
        best
    }

    pub fn features(&self, syndrome: &Syndrome) -> Result<FeatureVector> {
        if syndrome.is_trivial() {
            return Err(Error::TrivialSyndrome);
        }
        Ok(FeatureVector {
            defect_count: syndrome.defect_count,
            mod_w_zero: syndrome.defect_count % self.w == 0,
            max_component: self.max_component(syndrome),
            position_variance: position_variance(&syndrome.bits.ones()),
        })
    }
}

/// Population variance of the defect indices.
pub fn position_variance(indices: &[usize]) -> f64 {
    if indices.is_empty() {
        return 0.0;
    }
    let n = indices.len() as f64;
    let mean = indices.iter().map(|&i| i as f64).sum::<f64>() / n;
    indices
        .iter()
        .map(|&i| (i as f64 - mean).powi(2))
        .sum::<f64>()
        / n
}

/// Features of a nontrivial syndrome.
pub fn extract_features(h: &Gf2Matrix, w: usize, syndrome: &Syndrome) -> Result<FeatureVector> {
    DetectorGraph::new(h, w).features(syndrome)
}

/// Area under the ROC curve via the Mann-Whitney statistic with midranks.
///
/// Equals `P(score of a positive > score of a negative) + ½ P(tie)`.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: scores.len(),
            found: labels.len(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        // Ranks are 1-based; ties share the mean of their ranks.
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            if labels[k] {
                rank_sum_pos += midrank;
            }
        }
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// A rule that predicts convergence from the syndrome alone.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictRule {
    /// Converges iff `defect_count mod w == 0`.
    ModW,
    /// Converges iff `defect_count <= k`.
    Threshold(usize),
}

impl PredictRule {
    pub fn predicts_convergence(self, defect_count: usize, w: usize) -> bool {
        match self {
            PredictRule::ModW => defect_count % w == 0,
            PredictRule::Threshold(k) => defect_count <= k,
        }
    }

    pub fn label(self) -> String {
        match self {
            PredictRule::ModW => "mod_w".into(),
            PredictRule::Threshold(k) => format!("threshold_k{k}"),
        }
    }
}

/// Confusion matrix of a rule against observed BP convergence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub rule: String,
    /// Predicted converge, BP converged.
    pub true_converge: usize,
    /// Predicted converge, BP failed.
    pub false_positive: usize,
    /// Predicted fail, BP converged.
    pub false_negative: usize,
    /// Predicted fail, BP failed.
    pub true_fail: usize,
    /// `P(BP fails | predicted converge)`; `None` when nothing was predicted to converge.
    pub fp_rate: Option<f64>,
    /// `P(BP converges | predicted fail)`; `None` when nothing was predicted to fail.
    pub fn_rate: Option<f64>,
    /// AUC of the binary prediction as a convergence score.
    pub auc: Option<f64>,
}

impl ClassifierReport {
    pub fn total(&self) -> usize {
        self.true_converge + self.false_positive + self.false_negative + self.true_fail
    }

    /// `(TPR + TNR) / 2`, which equals the AUC of a binary score.
    pub fn balanced_accuracy(&self) -> Option<f64> {
        let pos = self.true_converge + self.false_negative;
        let neg = self.false_positive + self.true_fail;
        if pos == 0 || neg == 0 {
            return None;
        }
        let tpr = self.true_converge as f64 / pos as f64;
        let tnr = self.true_fail as f64 / neg as f64;
        Some((tpr + tnr) / 2.0)
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Scores `rule` on the nontrivial records.
pub fn classifier_report(records: &[DecodeRecord], rule: PredictRule) -> ClassifierReport {
    let mut cells = [0usize; 4];
    let mut scores = Vec::new();
    let mut labels = Vec::new();
    for r in records.iter().filter(|r| !r.is_trivial()) {
        let predicted = rule.predicts_convergence(r.defect_count, r.w);
        let cell = match (predicted, r.converged) {
            (true, true) => 0,
            (true, false) => 1,
            (false, true) => 2,
            (false, false) => 3,
        };
        cells[cell] += 1;
        scores.push(if predicted { 1.0 } else { 0.0 });
        labels.push(r.converged);
    }
    let [tc, fp, fneg, tf] = cells;
    ClassifierReport {
        rule: rule.label(),
        true_converge: tc,
        false_positive: fp,
        false_negative: fneg,
        true_fail: tf,
        fp_rate: ratio(fp, tc + fp),
        fn_rate: ratio(fneg, fneg + tf),
        auc: auc(&scores, &labels).ok(),
    }
}

/// Per-feature AUCs for predicting BP failure on nontrivial shots.
///
/// The positive class is "BP failed", and every feature is scored in the
/// direction that flags failure: the mod-w feature scores 1 when the count
/// is not a multiple of `w`, and the other features use their raw values.
/// A raw feature that goes with convergence therefore lands below 0.5.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureAucs {
    pub mod_w: f64,
    pub defect_count: f64,
    pub max_component: f64,
    pub position_variance: f64,
    /// `2·[mod-w != 0] + rank-normalised defect count`.
    pub mod_w_plus_defect_count: f64,
    pub nontrivial: usize,
}

pub fn feature_aucs(records: &[DecodeRecord]) -> Result<FeatureAucs> {
    let rs: Vec<&DecodeRecord> = records.iter().filter(|r| !r.is_trivial()).collect();
    let labels: Vec<bool> = rs.iter().map(|r| !r.converged).collect();
    let score = |f: &dyn Fn(&DecodeRecord) -> f64| -> Result<f64> {
        let s: Vec<f64> = rs.iter().map(|r| f(r)).collect();
        auc(&s, &labels)
    };
    let mod_nonzero = |r: &DecodeRecord| if r.mod_w_zero() { 0.0 } else { 1.0 };

    let counts: Vec<f64> = rs.iter().map(|r| r.defect_count as f64).collect();
    let ranks = normalised_ranks(&counts);
    let combined: Vec<f64> = rs
        .iter()
        .zip(&ranks)
        .map(|(r, &rank)| 2.0 * mod_nonzero(r) + rank)
        .collect();

    Ok(FeatureAucs {
        mod_w: score(&mod_nonzero)?,
        defect_count: score(&|r| r.defect_count as f64)?,
        max_component: score(&|r| r.max_component as f64)?,
        position_variance: score(&|r| r.position_variance)?,
        mod_w_plus_defect_count: auc(&combined, &labels)?,
        nontrivial: rs.len(),
    })
}

/// Midranks scaled into `[0, 1)`.
fn normalised_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            out[k] = mid / n as f64;
        }
        i = j + 1;
    }
    out
}

/// Least-squares fit of `fp = C · p^α` in log-log space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    /// Points that entered the fit.
    pub used: Vec<(f64, f64)>,
    /// Points dropped because a rate was zero.
    pub excluded: Vec<(f64, f64)>,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    let (used, excluded): (Vec<_>, Vec<_>) =
        points.iter().copied().partition(|&(p, fp)| p > 0.0 && fp > 0.0);
    if used.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: used.len(),
        });
    }
    let xs: Vec<f64> = used.iter().map(|&(p, _)| p.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|&(_, fp)| fp.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (intercept + slope * x)).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
        used,
        excluded,
    })
}

/// Two data errors whose columns share at least one check.
pub fn has_weight2_cluster(h: &Gf2Matrix, sample: &ErrorSample) -> bool {
    let mut hit = vec![false; h.rows()];
    for q in sample.data.iter_ones() {
        for c in h.col_support(q) {
            if std::mem::replace(&mut hit[c], true) {
                return true;
            }
        }
    }
    false
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub failures: usize,
    pub with_cluster: usize,
    /// `|e| -> (failures, failures with a cluster)`.
    pub by_weight: BTreeMap<usize, (usize, usize)>,
}

impl ClusterReport {
    pub fn fraction(&self) -> Option<f64> {
        ratio(self.with_cluster, self.failures)
    }

    pub fn fraction_at(&self, weight: usize) -> Option<f64> {
        self.by_weight
            .get(&weight)
            .and_then(|&(n, c)| ratio(c, n))
    }
}

/// Weight-2 cluster census over BP failures.
pub fn cluster_analysis(h: &Gf2Matrix, failures: &[(ErrorSample, Syndrome)]) -> ClusterReport {
    let mut report = ClusterReport::default();
    for (sample, _) in failures {
        let clustered = has_weight2_cluster(h, sample);
        let entry = report.by_weight.entry(sample.data_weight()).or_default();
        entry.0 += 1;
        report.failures += 1;
        if clustered {
            entry.1 += 1;
            report.with_cluster += 1;
        }
    }
    report
}
