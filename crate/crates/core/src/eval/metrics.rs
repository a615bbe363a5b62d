use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if counts.iter().any(|r| r.len() != c) {
            return Err(Error::invalid("confusion matrix must be square"));
        }
        Ok(Self { counts })
    }

    pub fn from_predictions(y_true: &[usize], y_pred: &[usize], classes: usize) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::LengthMismatch { expected: y_true.len(), actual: y_pred.len() });
        }
        let mut counts = vec![vec![0; classes]; classes];
        for (&t, &p) in y_true.iter().zip(y_pred) {
            if t >= classes || p >= classes {
                return Err(Error::invalid(format!("label out of range for {classes} classes")));
            }
            counts[t][p] += 1;
        }
        Ok(Self { counts })
    }

    /// Binary layout with class 1 as the positive class.
    pub fn binary(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { counts: vec![vec![tn, fp], vec![fn_, tp]] }
    }

    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth][pred]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes()).map(|i| self.counts[i][i]).sum()
    }

    fn row_sum(&self, k: usize) -> u64 {
        self.counts[k].iter().sum()
    }

    fn col_sum(&self, k: usize) -> u64 {
        self.counts.iter().map(|r| r[k]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Accuracy plus macro-averaged precision, recall and F1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Per-class scores; any zero denominator gives 0 for that score.
pub fn per_class_scores(cm: &ConfusionMatrix) -> Vec<ClassScores> {
    (0..cm.classes())
        .map(|k| {
            let tp = cm.get(k, k);
            let precision = ratio(tp, cm.col_sum(k));
            let recall = ratio(tp, cm.row_sum(k));
            let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            ClassScores { precision, recall, f1, support: cm.row_sum(k) }
        })
        .collect()
}

pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    if cm.classes() == 0 || cm.total() == 0 {
        return Err(Error::invalid("empty confusion matrix"));
    }
    let per = per_class_scores(cm);
    let c = per.len() as f64;
    Ok(Metrics {
        accuracy: ratio(cm.trace(), cm.total()),
        precision: per.iter().map(|s| s.precision).sum::<f64>() / c,
        recall: per.iter().map(|s| s.recall).sum::<f64>() / c,
        f1: per.iter().map(|s| s.f1).sum::<f64>() / c,
    })
}

/// Multiclass MCC, `(c s - sum p_k t_k) / sqrt((s² - sum p_k²)(s² - sum t_k²))`;
/// reduces to the binary formula for two classes. Zero denominator gives 0.
pub fn mcc(cm: &ConfusionMatrix) -> f64 {
    let s = cm.total() as f64;
    let c = cm.trace() as f64;
    let k = cm.classes();
    let p: Vec<f64> = (0..k).map(|j| cm.col_sum(j) as f64).collect();
    let t: Vec<f64> = (0..k).map(|j| cm.row_sum(j) as f64).collect();
    let pt: f64 = p.iter().zip(&t).map(|(a, b)| a * b).sum();
    let pp: f64 = p.iter().map(|v| v * v).sum();
    let tt: f64 = t.iter().map(|v| v * v).sum();
    let den = ((s * s - pp) * (s * s - tt)).sqrt();
    if den == 0.0 {
        0.0
    } else {
        (c * s - pt) / den
    }
}

/// ROC area by threshold sweep and trapezoidal integration. Tied scores form
/// one step, which is what gives ties half credit. `None` when either class is
/// absent.
pub fn binary_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let pos = positive.iter().filter(|&&p| p).count() as f64;
    let neg = positive.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0.0, 0.0);
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let mut area = 0.0;
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if positive[order[k]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            k += 1;
        }
        let (tpr, fpr) = (tp / pos, fp / neg);
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    Some(area)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AucReport {
    /// Mean over the classes that could be evaluated.
    pub macro_auc: f64,
    /// One-vs-rest area per class; `None` for skipped classes.
    pub per_class: Vec<Option<f64>>,
}

/// Macro one-vs-rest AUC. `scores[i][k]` is the score of sample `i` for class
/// `k`. Classes without both positives and negatives are skipped with a
/// warning.
pub fn auc_roc(scores: &[Vec<f64>], y_true: &[usize], classes: usize) -> Result<AucReport> {
    if scores.len() != y_true.len() {
        return Err(Error::LengthMismatch { expected: y_true.len(), actual: scores.len() });
    }
    if scores.iter().any(|r| r.len() != classes) {
        return Err(Error::invalid(format!("every score row needs {classes} entries")));
    }
    let per_class: Vec<Option<f64>> = (0..classes)
        .map(|k| {
            let s: Vec<f64> = scores.iter().map(|r| r[k]).collect();
            let pos: Vec<bool> = y_true.iter().map(|&y| y == k).collect();
            let a = binary_auc(&s, &pos);
            if a.is_none() {
                log::warn!("auc: class {k} has no positives or no negatives in this set; skipped");
            }
            a
        })
        .collect();
    let valid: Vec<f64> = per_class.iter().flatten().copied().collect();
    if valid.is_empty() {
        return Err(Error::degenerate("auc: no class has both positives and negatives"));
    }
    Ok(AucReport { macro_auc: valid.iter().sum::<f64>() / valid.len() as f64, per_class })
}
