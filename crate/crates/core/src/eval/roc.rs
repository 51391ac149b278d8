//! ROC and precision-recall curves with grouped ties.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    /// Items scoring at least this much are predicted positive.
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Curves {
    /// One point per distinct score, from the highest down. The origin
    /// `(fpr, tpr) = (0, 0)` is implied.
    pub points: Vec<CurvePoint>,
    pub auc: f64,
    pub average_precision: f64,
    pub positives: usize,
    pub negatives: usize,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CurveError {
    #[error("scores and labels differ in length")]
    LengthMismatch,
    #[error("need at least one positive and one negative label ({positives} positive, {negatives} negative)")]
    Degenerate { positives: usize, negatives: usize },
    #[error("NaN score")]
    NanScore,
}

/// Threshold sweep over `scores`; `±∞` sort to the ends. AUC is the trapezoid
/// area, average precision the recall-weighted precision at each tie group.
pub fn roc_pr(scores: &[f64], labels: &[bool]) -> Result<Curves, CurveError> {
    if scores.len() != labels.len() {
        return Err(CurveError::LengthMismatch);
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(CurveError::NanScore);
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(CurveError::Degenerate { positives, negatives });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (p, n) = (positives as f64, negatives as f64);
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut auc, mut ap) = (0.0, 0.0);
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let tpr = tp as f64 / p;
        let fpr = fp as f64 / n;
        let precision = tp as f64 / (tp + fp) as f64;
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        ap += (tpr - prev_tpr) * precision;
        points.push(CurvePoint { threshold: t, tpr, fpr, precision, recall: tpr });
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    Ok(Curves { points, auc, average_precision: ap, positives, negatives })
}
