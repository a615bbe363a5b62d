//! Kernel SVM trained with simplified SMO, one-vs-one for multiclass.
//!
//! Probabilities are normalized vote shares over the pairwise classifiers.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::check_training;
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    /// `exp(-gamma |x - z|^2)`; `gamma = None` means `1 / n_features`.
    Rbf { gamma: Option<f64> },
    /// `(gamma <x, z> + coef0)^degree`.
    Poly { gamma: Option<f64>, coef0: f64, degree: u32 },
}

impl Kernel {
    fn resolve(self, n_features: usize) -> ResolvedKernel {
        let auto = |g: Option<f64>| g.unwrap_or(1.0 / n_features.max(1) as f64);
        match self {
            Kernel::Linear => ResolvedKernel::Linear,
            Kernel::Rbf { gamma } => ResolvedKernel::Rbf { gamma: auto(gamma) },
            Kernel::Poly { gamma, coef0, degree } => ResolvedKernel::Poly { gamma: auto(gamma), coef0, degree },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ResolvedKernel {
    Linear,
    Rbf { gamma: f64 },
    Poly { gamma: f64, coef0: f64, degree: u32 },
}

impl ResolvedKernel {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            ResolvedKernel::Linear => dot(a, b),
            ResolvedKernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
                (-gamma * d2).exp()
            }
            ResolvedKernel::Poly { gamma, coef0, degree } => (gamma * dot(a, b) + coef0).powi(degree as i32),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub kernel: Kernel,
    #[serde(rename = "C")]
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self { kernel: Kernel::Rbf { gamma: None }, c: 10.0, tol: 1e-3, max_passes: 10_000 }
    }
}

impl SvmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("svm: C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0) || self.max_passes == 0 {
            return Err(Error::Config("svm: tol and max_passes must be positive".into()));
        }
        match self.kernel {
            Kernel::Rbf { gamma: Some(g) } | Kernel::Poly { gamma: Some(g), .. } if !(g > 0.0) => {
                Err(Error::Config(format!("svm: gamma must be positive, got {g}")))
            }
            Kernel::Poly { degree: 0, .. } => Err(Error::Config("svm: polynomial degree must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

/// Solver record for one binary subproblem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoDiagnostics {
    pub passes: usize,
    pub converged: bool,
    /// Smallest and largest multiplier observed after any update.
    pub alpha_min_seen: f64,
    pub alpha_max_seen: f64,
    pub max_kkt_violation: f64,
    pub support_vectors: usize,
}

/// Binary machine: `f(x) = sum_i coef_i K(sv_i, x) + b`, positive means
/// `positive` class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub positive: usize,
    pub negative: usize,
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub bias: f64,
    pub diagnostics: SmoDiagnostics,
}

impl BinarySvm {
    pub fn decision(&self, kernel: ResolvedKernel, x: &[f64]) -> f64 {
        self.support.iter().zip(&self.coef).map(|(s, c)| c * kernel.eval(s, x)).sum::<f64>() + self.bias
    }
}

/// Dual solution of one binary problem over a precomputed kernel matrix.
#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub diagnostics: SmoDiagnostics,
}

/// Simplified SMO. `y` holds +1/-1. The second index is drawn at random;
/// if that pair makes no progress every other index is tried in turn.
pub fn smo(k: &[Vec<f64>], y: &[f64], c: f64, tol: f64, max_passes: usize, seed: u64) -> SmoSolution {
    let n = y.len();
    let mut rng = rng_from_seed(seed);
    let mut alpha = vec![0.0; n];
    let mut b = 0.0;
    // f_i without the bias
    let mut f = vec![0.0; n];
    let (mut amin, mut amax) = (0.0_f64, 0.0_f64);
    let mut passes = 0;
    let mut converged = false;

    let violates = |i: usize, alpha: &[f64], f: &[f64], b: f64| {
        let r = y[i] * (f[i] + b - y[i]);
        (r < -tol && alpha[i] < c) || (r > tol && alpha[i] > 0.0)
    };

    while passes < max_passes {
        passes += 1;
        let mut changed = 0;
        for i in 0..n {
            if !violates(i, &alpha, &f, b) {
                continue;
            }
            let step = |j: usize, alpha: &mut Vec<f64>, f: &mut Vec<f64>, b: &mut f64| -> bool {
                if j == i {
                    return false;
                }
                let ei = f[i] + *b - y[i];
                let ej = f[j] + *b - y[j];
                let (ai, aj) = (alpha[i], alpha[j]);
                let (lo, hi) = if y[i] != y[j] {
                    ((aj - ai).max(0.0), (c + aj - ai).min(c))
                } else {
                    ((ai + aj - c).max(0.0), (ai + aj).min(c))
                };
                if lo >= hi {
                    return false;
                }
                let eta = 2.0 * k[i][j] - k[i][i] - k[j][j];
                if eta >= 0.0 {
                    return false;
                }
                let aj_new = (aj - y[j] * (ei - ej) / eta).clamp(lo, hi);
                if (aj_new - aj).abs() < 1e-5 * (aj_new + aj + 1e-5) {
                    return false;
                }
                let ai_new = (ai + y[i] * y[j] * (aj - aj_new)).clamp(0.0, c);
                let (di, dj) = (ai_new - ai, aj_new - aj);
                let b1 = *b - ei - y[i] * di * k[i][i] - y[j] * dj * k[i][j];
                let b2 = *b - ej - y[i] * di * k[i][j] - y[j] * dj * k[j][j];
                *b = if ai_new > 0.0 && ai_new < c {
                    b1
                } else if aj_new > 0.0 && aj_new < c {
                    b2
                } else {
                    (b1 + b2) / 2.0
                };
                alpha[i] = ai_new;
                alpha[j] = aj_new;
                for (m, fm) in f.iter_mut().enumerate() {
                    *fm += y[i] * di * k[i][m] + y[j] * dj * k[j][m];
                }
                true
            };
            let j0 = if n > 1 { (i + 1 + rng.random_range(0..n - 1)) % n } else { i };
            let mut moved = step(j0, &mut alpha, &mut f, &mut b);
            if !moved {
                for off in 1..n {
                    let j = (j0 + off) % n;
                    if step(j, &mut alpha, &mut f, &mut b) {
                        moved = true;
                        break;
                    }
                }
            }
            if moved {
                changed += 1;
                for &a in &alpha {
                    amin = amin.min(a);
                    amax = amax.max(a);
                }
            }
        }
        if changed == 0 {
            converged = true;
            break;
        }
    }

    let max_kkt_violation = (0..n)
        .map(|i| {
            let r = y[i] * (f[i] + b - y[i]);
            if alpha[i] < c && r < 0.0 {
                -r
            } else if alpha[i] > 0.0 && r > 0.0 {
                r
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max);
    let support_vectors = alpha.iter().filter(|&&a| a > 0.0).count();
    SmoSolution {
        alpha,
        bias: b,
        diagnostics: SmoDiagnostics {
            passes,
            converged,
            alpha_min_seen: amin,
            alpha_max_seen: amax,
            max_kkt_violation,
            support_vectors,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: ResolvedKernel,
    pub c: f64,
    pub class_count: usize,
    pub machines: Vec<BinarySvm>,
    /// Set when only one class was present in training.
    pub constant_class: Option<usize>,
}

impl SvmModel {
    pub fn fit(p: &SvmParams, x: &FeatureMatrix, y: &[usize], class_count: usize, seed: u64) -> Result<Self> {
        p.validate()?;
        check_training(x, y, class_count)?;
        let kernel = p.kernel.resolve(x.cols());
        let present: Vec<usize> = (0..class_count).filter(|c| y.contains(c)).collect();
        let mut machines = Vec::new();
        for (a_pos, &a) in present.iter().enumerate() {
            for &b in &present[a_pos + 1..] {
                let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == a || y[i] == b).collect();
                let rows: Vec<&[f64]> = idx.iter().map(|&i| x.row(i)).collect();
                let ys: Vec<f64> = idx.iter().map(|&i| if y[i] == a { 1.0 } else { -1.0 }).collect();
                let km: Vec<Vec<f64>> =
                    rows.iter().map(|r| rows.iter().map(|s| kernel.eval(r, s)).collect()).collect();
                let pair_seed = derive_seed(seed, "svm-pair", (a * class_count + b) as u64);
                let sol = smo(&km, &ys, p.c, p.tol, p.max_passes, pair_seed);
                if !sol.diagnostics.converged {
                    log::warn!(
                        "svm: pair ({a}, {b}) stopped after {} passes, max KKT violation {:.3e}",
                        sol.diagnostics.passes,
                        sol.diagnostics.max_kkt_violation
                    );
                }
                let (mut support, mut coef) = (Vec::new(), Vec::new());
                for (m, &al) in sol.alpha.iter().enumerate() {
                    if al > 0.0 {
                        support.push(rows[m].to_vec());
                        coef.push(al * ys[m]);
                    }
                }
                machines.push(BinarySvm {
                    positive: a,
                    negative: b,
                    support,
                    coef,
                    bias: sol.bias,
                    diagnostics: sol.diagnostics,
                });
            }
        }
        let constant_class = (present.len() == 1).then(|| present[0]);
        Ok(Self { kernel, c: p.c, class_count, machines, constant_class })
    }

    pub fn diagnostics(&self) -> impl Iterator<Item = &SmoDiagnostics> {
        self.machines.iter().map(|m| &m.diagnostics)
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.class_count];
        if let Some(c) = self.constant_class {
            p[c] = 1.0;
            return p;
        }
        for m in &self.machines {
            // a zero decision value goes to the lower class index
            let winner = if m.decision(self.kernel, row) >= 0.0 { m.positive } else { m.negative };
            p[winner] += 1.0;
        }
        let total = self.machines.len() as f64;
        p.iter_mut().for_each(|v| *v /= total);
        p
    }
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::super::{argmax, fit, ModelParams, ModelSpec};
    use super::*;

    fn xor() -> (FeatureMatrix, Vec<usize>) {
        let x = FeatureMatrix::from_rows(vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]], 2).unwrap();
        (x, vec![0, 0, 1, 1])
    }

    #[test]
    fn rbf_self_similarity() {
        let k = ResolvedKernel::Rbf { gamma: 0.7 };
        assert_eq!(k.eval(&[1.0, -2.0, 3.0], &[1.0, -2.0, 3.0]), 1.0);
    }

    #[test]
    fn separable_pair_linear() {
        let x = FeatureMatrix::from_rows(vec![vec![-1.0, 0.0], vec![1.0, 0.0]], 2).unwrap();
        let p = SvmParams { kernel: Kernel::Linear, c: 1.0, ..Default::default() };
        let m = SvmModel::fit(&p, &x, &[0, 1], 2, 0).unwrap();
        assert_eq!(argmax(&m.predict_proba(&[-1.0, 0.0])), 0);
        assert_eq!(argmax(&m.predict_proba(&[1.0, 0.0])), 1);
        assert!(m.machines[0].decision(m.kernel, &[0.0, 0.0]).abs() < 1e-6);
        assert_eq!(argmax(&m.predict_proba(&[-0.1, 5.0])), 0);
    }

    #[test]
    fn xor_with_rbf() {
        let (x, y) = xor();
        let p = SvmParams { kernel: Kernel::Rbf { gamma: Some(1.0) }, c: 10.0, ..Default::default() };
        let m = SvmModel::fit(&p, &x, &y, 2, 5).unwrap();
        let mac = &m.machines[0];
        for (i, row) in x.iter_rows().enumerate() {
            let d = mac.decision(m.kernel, row);
            assert_eq!(d > 0.0, y[i] == 0, "point {i}: {d}");
        }
        assert!(mac.diagnostics.converged);
        assert!(mac.diagnostics.max_kkt_violation <= 1e-3);
    }

    #[test]
    fn dual_feasibility_throughout() {
        let (x, y) = blobs(30, 4, 5, 1.5, 9);
        let p = SvmParams { c: 0.5, ..Default::default() };
        let m = SvmModel::fit(&p, &x, &y, 4, 1).unwrap();
        assert_eq!(m.machines.len(), 6);
        for d in m.diagnostics() {
            assert!(d.alpha_min_seen >= 0.0 && d.alpha_max_seen <= 0.5, "{d:?}");
        }
    }

    #[test]
    fn blobs_are_learned() {
        let (x, y) = blobs(20, 3, 4, 0.6, 2);
        let m = fit(&ModelSpec::new(ModelParams::Svm(SvmParams::default()), 0), &x, &y, 3).unwrap();
        assert!(accuracy(&m.predict(&x).unwrap(), &y) > 0.95);
        for r in x.iter_rows() {
            assert_valid_probs(m.predict_proba(r).unwrap().probs(), 3);
        }
    }

    #[test]
    fn single_class_training() {
        let x = FeatureMatrix::from_rows(vec![vec![0.0], vec![1.0]], 1).unwrap();
        let m = SvmModel::fit(&SvmParams::default(), &x, &[2, 2], 3, 0).unwrap();
        assert_eq!(m.predict_proba(&[0.5]), vec![0.0, 0.0, 1.0]);
    }
}
