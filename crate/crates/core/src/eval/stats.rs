//! McNemar, Friedman and the chi-square tail they both rely on.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::error::{Error, Result};

/// Upper tail `P(X >= x)` of a chi-square variable with `dof` degrees of
/// freedom, via the regularized upper incomplete gamma function.
pub fn chi_square_sf(x: f64, dof: usize) -> f64 {
    assert!(dof >= 1, "chi-square needs at least one degree of freedom");
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma_ur(dof as f64 / 2.0, x / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McnemarResult {
    /// First correct, second wrong.
    pub b: u64,
    /// First wrong, second correct.
    pub c: u64,
    pub chi2: f64,
    pub p: f64,
    /// No disagreements at all: `chi2 = 0`, `p = 1`.
    pub degenerate: bool,
}

/// Continuity-corrected McNemar test, `(|b - c| - 1)² / (b + c)`, one degree
/// of freedom.
pub fn mcnemar(correct1: &[bool], correct2: &[bool]) -> Result<McnemarResult> {
    if correct1.len() != correct2.len() {
        return Err(Error::LengthMismatch { expected: correct1.len(), actual: correct2.len() });
    }
    let b = correct1.iter().zip(correct2).filter(|(a, z)| **a && !**z).count() as u64;
    let c = correct1.iter().zip(correct2).filter(|(a, z)| !**a && **z).count() as u64;
    Ok(mcnemar_counts(b, c))
}

pub fn mcnemar_counts(b: u64, c: u64) -> McnemarResult {
    if b + c == 0 {
        return McnemarResult { b, c, chi2: 0.0, p: 1.0, degenerate: true };
    }
    let d = (b as f64 - c as f64).abs() - 1.0;
    let chi2 = d * d / (b + c) as f64;
    McnemarResult { b, c, chi2, p: chi_square_sf(chi2, 1), degenerate: false }
}

/// Ranks within one row, 1 for the highest score, ties sharing the average.
pub fn rank_row(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Mean rank per column over the rows of `performance`.
pub fn average_ranks(performance: &[Vec<f64>]) -> Vec<f64> {
    let k = performance.first().map_or(0, Vec::len);
    let mut avg = vec![0.0; k];
    for row in performance {
        for (a, r) in avg.iter_mut().zip(rank_row(row)) {
            *a += r;
        }
    }
    let n = performance.len().max(1) as f64;
    avg.iter_mut().for_each(|a| *a /= n);
    avg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub chi2: f64,
    pub p: f64,
    pub avg_ranks: Vec<f64>,
    pub n: usize,
    pub k: usize,
}

/// Friedman test over `performance[dataset][algorithm]`:
/// `12N / (k(k+1)) * (sum R_j² - k(k+1)²/4)`, p from chi-square with `k - 1`
/// degrees of freedom.
pub fn friedman(performance: &[Vec<f64>]) -> Result<FriedmanResult> {
    let n = performance.len();
    let k = performance.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(Error::invalid(format!("friedman needs N >= 2 and k >= 2, got N = {n}, k = {k}")));
    }
    if performance.iter().any(|r| r.len() != k) {
        return Err(Error::invalid("friedman rows must all have k entries"));
    }
    if performance.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("friedman input must be finite"));
    }
    let avg_ranks = average_ranks(performance);
    let (nf, kf) = (n as f64, k as f64);
    let sum_sq: f64 = avg_ranks.iter().map(|r| r * r).sum();
    let chi2 = (12.0 * nf / (kf * (kf + 1.0)) * (sum_sq - kf * (kf + 1.0) * (kf + 1.0) / 4.0)).max(0.0);
    Ok(FriedmanResult { chi2, p: chi_square_sf(chi2, k - 1), avg_ranks, n, k })
}

/// Nemenyi critical difference `q_alpha * sqrt(k(k+1) / (6N))`. The caller
/// supplies `q_alpha` (studentized range divided by sqrt 2), e.g. from the
/// table in Demšar (2006), JMLR 7: 2.343 for k = 3, 2.569 for k = 4, 2.728
/// for k = 5 and 2.850 for k = 6 at alpha = 0.05.
pub fn nemenyi_critical_difference(q_alpha: f64, k: usize, n: usize) -> f64 {
    q_alpha * ((k * (k + 1)) as f64 / (6.0 * n as f64)).sqrt()
}

/// Pairwise and omnibus significance over a set of models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceReport {
    pub models: Vec<String>,
    /// Symmetric, unit diagonal.
    pub mcnemar_p: Vec<Vec<f64>>,
    pub mcnemar_chi2: Vec<Vec<f64>>,
    pub friedman_chi2: f64,
    pub friedman_p: f64,
    pub avg_ranks: Vec<f64>,
    /// What the Friedman rows are, for the report.
    pub friedman_input: String,
}

impl SignificanceReport {
    /// `correct[m][i]` says whether model `m` got pooled sample `i` right;
    /// `performance` feeds the Friedman test.
    pub fn build(
        models: Vec<String>,
        correct: &[Vec<bool>],
        performance: &[Vec<f64>],
        friedman_input: impl Into<String>,
    ) -> Result<Self> {
        let k = models.len();
        if correct.len() != k {
            return Err(Error::LengthMismatch { expected: k, actual: correct.len() });
        }
        let mut p = vec![vec![1.0; k]; k];
        let mut chi = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in a + 1..k {
                let r = mcnemar(&correct[a], &correct[b])?;
                p[a][b] = r.p;
                p[b][a] = r.p;
                chi[a][b] = r.chi2;
                chi[b][a] = r.chi2;
            }
        }
        let f = friedman(performance)?;
        Ok(Self {
            models,
            mcnemar_p: p,
            mcnemar_chi2: chi,
            friedman_chi2: f.chi2,
            friedman_p: f.p,
            avg_ranks: f.avg_ranks,
            friedman_input: friedman_input.into(),
        })
    }
}

/// `***` below 0.001, `*` below 0.05, empty otherwise.
pub fn significance_marker(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}
