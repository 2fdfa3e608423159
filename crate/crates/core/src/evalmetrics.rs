//! ROC curves, tie-aware AUC and cross-fold summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Concordant and tied signal/background pair counts.
struct PairCounts {
    /// `2·concordant + tied`, i.e. twice the Mann–Whitney U.
    twice_u: u128,
    /// `2·n_signal·n_background`.
    twice_pairs: u128,
}

fn check_inputs(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Usage(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(i) = labels.iter().position(|&l| l > 1) {
        return Err(Error::Usage(format!("label {i} is {}, expected 0 or 1", labels[i])));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::Data(format!("score {i} is NaN")));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Data("AUC needs both classes present".into()));
    }
    Ok((pos, neg))
}

/// Indices sorted by descending score, ties in input order.
fn descending_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Walks tie groups from the highest score down, yielding `(signal, background)` counts per group.
fn tie_groups(scores: &[f64], labels: &[u8]) -> Vec<(u64, u64)> {
    let order = descending_order(scores);
    let mut groups = Vec::new();
    let mut k = 0;
    while k < order.len() {
        let value = scores[order[k]];
        let (mut pos, mut neg) = (0u64, 0u64);
        while k < order.len() && scores[order[k]] == value {
            if labels[order[k]] == 1 {
                pos += 1;
            } else {
                neg += 1;
            }
            k += 1;
        }
        groups.push((pos, neg));
    }
    groups
}

fn pair_counts(scores: &[f64], labels: &[u8]) -> Result<PairCounts> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut twice_u = 0u128;
    // Background scored strictly below the current tie group.
    let mut neg_below = neg as u128;
    for (p, n) in tie_groups(scores, labels) {
        neg_below -= u128::from(n);
        twice_u += 2 * u128::from(p) * neg_below + u128::from(p) * u128::from(n);
    }
    Ok(PairCounts {
        twice_u,
        twice_pairs: 2 * pos as u128 * neg as u128,
    })
}

/// Mann–Whitney AUC: `(#concordant + ½·#tied) / (n₁·n₀)` over signal/background pairs.
///
/// The smaller of the two complementary fractions is divided out and the
/// larger obtained as `1 − smaller`, so `auc(s) + auc(−s) == 1` holds exactly
/// in floating point.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let PairCounts { twice_u, twice_pairs } = pair_counts(scores, labels)?;
    let complement = twice_pairs - twice_u;
    Ok(if twice_u <= complement {
        twice_u as f64 / twice_pairs as f64
    } else {
        1.0 - complement as f64 / twice_pairs as f64
    })
}

/// ROC points from (0, 0) to (1, 1), one per distinct score threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
}

impl RocCurve {
    /// Trapezoidal area under the curve.
    pub fn area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5)
            .sum()
    }

    /// Two-column `fpr,tpr` CSV with header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (fpr, tpr) in &self.points {
            out.push_str(&format!("{fpr},{tpr}\n"));
        }
        out
    }
}

/// Sweeps thresholds over the distinct scores in descending order.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    let (pos, neg) = check_inputs(scores, labels)?;
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    for (p, n) in tie_groups(scores, labels) {
        tp += p;
        fp += n;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocCurve { points })
}

/// Per-fold AUCs with their mean, population standard deviation and the
/// AUC of all folds concatenated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AucSummary {
    pub per_fold: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub concatenated_auc: f64,
}

pub fn auc_mean_std(folds: &[(Vec<f64>, Vec<u8>)]) -> Result<AucSummary> {
    if folds.len() < 2 {
        return Err(Error::Usage(format!("need at least 2 folds, got {}", folds.len())));
    }
    let per_fold = folds
        .iter()
        .enumerate()
        .map(|(fold, (s, l))| {
            auc(s, l).map_err(|e| Error::Fold {
                fold,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = per_fold.len() as f64;
    let mean = per_fold.iter().sum::<f64>() / k;
    let std = (per_fold.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / k).sqrt();
    let (all_scores, all_labels) = concatenate(folds);
    Ok(AucSummary {
        per_fold,
        mean,
        std,
        concatenated_auc: auc(&all_scores, &all_labels)?,
    })
}

/// Joins fold scores and labels in fold order.
pub fn concatenate(folds: &[(Vec<f64>, Vec<u8>)]) -> (Vec<f64>, Vec<u8>) {
    let scores = folds.iter().flat_map(|(s, _)| s.iter().copied()).collect();
    let labels = folds.iter().flat_map(|(_, l)| l.iter().copied()).collect();
    (scores, labels)
}
