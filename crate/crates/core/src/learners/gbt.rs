//! Second-order gradient boosting with softmax loss.
//!
//! Each round fits one regression tree per class to the gradients
//! `g = p - y` and hessians `h = p (1 - p)`. Leaves take
//! `w = -G / (H + lambda)`; a split is kept when
//! `0.5 [GL²/(HL+λ) + GR²/(HR+λ) - G²/(H+λ)] > gamma`. Trees grow level by
//! level over a per-fit presorted feature order.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{check_training, softmax_in_place};
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

const MIN_HESSIAN: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Minimum split gain (the per-leaf penalty).
    pub gamma: f64,
    /// L2 penalty on leaf weights.
    pub lambda: f64,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
    /// Fraction of features offered to each tree.
    pub colsample: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            n_rounds: 50,
            learning_rate: 0.3,
            max_depth: 3,
            gamma: 0.0,
            lambda: 1.0,
            min_child_weight: 1.0,
            colsample: 1.0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_rounds == 0 {
            return Err(Error::Config("gbt: n_rounds must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Config(format!("gbt: learning_rate must lie in (0, 1], got {}", self.learning_rate)));
        }
        if self.gamma < 0.0 || self.lambda < 0.0 || self.min_child_weight < 0.0 {
            return Err(Error::Config("gbt: gamma, lambda and min_child_weight must be non-negative".into()));
        }
        if !(self.colsample > 0.0 && self.colsample <= 1.0) {
            return Err(Error::Config("gbt: colsample must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RegNode {
    /// Leaf value, already multiplied by the learning rate.
    Leaf(f64),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTree {
    pub nodes: Vec<RegNode>,
}

impl RegTree {
    pub fn eval(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                RegNode::Leaf(w) => return w,
                RegNode::Split { feature, threshold, left, right } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            RegNode::Leaf(w) => Some(*w),
            _ => None,
        })
    }

    /// `gamma T + lambda/2 sum w²` over the stored (shrunk) leaf values.
    pub fn penalty(&self, gamma: f64, lambda: f64) -> f64 {
        let (t, s2) = self.leaves().fold((0.0, 0.0), |(t, s), w| (t + 1.0, s + w * w));
        gamma * t + 0.5 * lambda * s2
    }
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Fit one regression tree to gradient statistics.
pub(crate) fn fit_tree(
    x: &FeatureMatrix,
    sorted: &[Vec<usize>],
    features: &[usize],
    g: &[f64],
    h: &[f64],
    p: &GbtParams,
) -> RegTree {
    let n = x.rows();
    let lambda = p.lambda;
    let score = |gs: f64, hs: f64| gs * gs / (hs + lambda);
    let mut nodes = vec![RegNode::Leaf(0.0)];
    // node of each sample among the currently open nodes, usize::MAX once closed
    let mut at = vec![0usize; n];
    let mut open: Vec<usize> = vec![0];
    let mut totals: Vec<(f64, f64)> = vec![(g.iter().sum(), h.iter().sum())];

    for _depth in 0..p.max_depth {
        if open.is_empty() {
            break;
        }
        // dense slot per open node
        let mut slot = vec![usize::MAX; nodes.len()];
        for (s, &id) in open.iter().enumerate() {
            slot[id] = s;
        }
        let mut best: Vec<Option<Candidate>> = vec![None; open.len()];
        for &f in features {
            let mut gl = vec![0.0; open.len()];
            let mut hl = vec![0.0; open.len()];
            let mut last: Vec<Option<f64>> = vec![None; open.len()];
            for &i in &sorted[f] {
                let node = at[i];
                if node == usize::MAX {
                    continue;
                }
                let s = slot[node];
                let v = x.get(i, f);
                if let Some(prev) = last[s] {
                    if v > prev {
                        let (gt, ht) = totals[s];
                        let (gr, hr) = (gt - gl[s], ht - hl[s]);
                        if hl[s] >= p.min_child_weight && hr >= p.min_child_weight {
                            let gain = 0.5 * (score(gl[s], hl[s]) + score(gr, hr) - score(gt, ht));
                            if best[s].is_none_or(|b| gain > b.gain) {
                                let mut thr = prev + (v - prev) / 2.0;
                                if thr >= v {
                                    thr = prev;
                                }
                                best[s] = Some(Candidate { gain, feature: f, threshold: thr });
                            }
                        }
                    }
                }
                gl[s] += g[i];
                hl[s] += h[i];
                last[s] = Some(v);
            }
        }

        let mut next_open = Vec::new();
        let mut next_totals = Vec::new();
        let mut child_of: Vec<Option<(usize, usize, usize, f64)>> = vec![None; open.len()];
        for (s, &id) in open.iter().enumerate() {
            if let Some(c) = best[s].filter(|c| c.gain > p.gamma) {
                let l = nodes.len();
                nodes.push(RegNode::Leaf(0.0));
                nodes.push(RegNode::Leaf(0.0));
                nodes[id] = RegNode::Split { feature: c.feature, threshold: c.threshold, left: l, right: l + 1 };
                child_of[s] = Some((l, l + 1, c.feature, c.threshold));
                next_open.push(l);
                next_open.push(l + 1);
            }
        }
        if next_open.is_empty() {
            break;
        }
        let mut sums = vec![(0.0, 0.0); nodes.len()];
        for i in 0..n {
            let node = at[i];
            if node == usize::MAX {
                continue;
            }
            // samples in nodes that did not split are finished
            match child_of[slot[node]] {
                Some((l, r, f, t)) => {
                    let c = if x.get(i, f) <= t { l } else { r };
                    at[i] = c;
                    sums[c].0 += g[i];
                    sums[c].1 += h[i];
                }
                None => at[i] = usize::MAX,
            }
        }
        for &id in &next_open {
            next_totals.push(sums[id]);
        }
        open = next_open;
        totals = next_totals;
    }

    // leaf values from the final membership of every sample
    let mut sums = vec![(0.0, 0.0); nodes.len()];
    let route = |i: usize| {
        let mut k = 0;
        while let RegNode::Split { feature, threshold, left, right } = nodes[k] {
            k = if x.get(i, feature) <= threshold { left } else { right };
        }
        k
    };
    let leaf_of: Vec<usize> = (0..n).map(route).collect();
    for i in 0..n {
        sums[leaf_of[i]].0 += g[i];
        sums[leaf_of[i]].1 += h[i];
    }
    for (k, node) in nodes.iter_mut().enumerate() {
        if let RegNode::Leaf(w) = node {
            let (gs, hs) = sums[k];
            *w = p.learning_rate * (-gs / (hs + lambda));
        }
    }
    RegTree { nodes }
}

pub(crate) fn presort(x: &FeatureMatrix) -> Vec<Vec<usize>> {
    (0..x.cols())
        .map(|f| {
            let mut idx: Vec<usize> = (0..x.rows()).collect();
            idx.sort_by(|&a, &b| x.get(a, f).total_cmp(&x.get(b, f)).then(a.cmp(&b)));
            idx
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub class_count: usize,
    /// `trees[round][class]`.
    pub trees: Vec<Vec<RegTree>>,
    /// Regularized objective after each round: cross-entropy sum plus the
    /// penalty of every tree built so far.
    pub loss_history: Vec<f64>,
}

impl GbtModel {
    pub fn fit(p: &GbtParams, x: &FeatureMatrix, y: &[usize], class_count: usize, seed: u64) -> Result<Self> {
        p.validate()?;
        check_training(x, y, class_count)?;
        let n = x.rows();
        let sorted = presort(x);
        let mut raw = vec![vec![0.0; class_count]; n];
        let mut trees = Vec::with_capacity(p.n_rounds);
        let mut loss_history = Vec::with_capacity(p.n_rounds);
        let mut penalty = 0.0;
        let all: Vec<usize> = (0..x.cols()).collect();
        let n_cols = ((x.cols() as f64 * p.colsample).ceil() as usize).clamp(1, x.cols());

        for round in 0..p.n_rounds {
            let probs: Vec<Vec<f64>> = raw
                .iter()
                .map(|r| {
                    let mut z = r.clone();
                    softmax_in_place(&mut z);
                    z
                })
                .collect();
            let mut round_trees = Vec::with_capacity(class_count);
            for k in 0..class_count {
                let features = if n_cols == x.cols() {
                    all.clone()
                } else {
                    let mut rng = rng_from_seed(derive_seed(seed, "gbt-cols", (round * class_count + k) as u64));
                    let mut f = sample(&mut rng, x.cols(), n_cols).into_vec();
                    f.sort_unstable();
                    f
                };
                let g: Vec<f64> = (0..n).map(|i| probs[i][k] - f64::from(u8::from(y[i] == k))).collect();
                let h: Vec<f64> = (0..n).map(|i| (probs[i][k] * (1.0 - probs[i][k])).max(MIN_HESSIAN)).collect();
                round_trees.push(fit_tree(x, &sorted, &features, &g, &h, p));
            }
            for (i, r) in raw.iter_mut().enumerate() {
                for (k, t) in round_trees.iter().enumerate() {
                    r[k] += t.eval(x.row(i));
                }
            }
            penalty += round_trees.iter().map(|t| t.penalty(p.gamma, p.lambda)).sum::<f64>();
            let ce: f64 = raw
                .iter()
                .zip(y)
                .map(|(r, &c)| {
                    let mut z = r.clone();
                    softmax_in_place(&mut z);
                    -z[c].max(f64::MIN_POSITIVE).ln()
                })
                .sum();
            loss_history.push(ce + penalty);
            trees.push(round_trees);
        }
        Ok(Self { class_count, trees, loss_history })
    }

    pub fn raw_scores(&self, row: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.class_count];
        for round in &self.trees {
            for (k, t) in round.iter().enumerate() {
                z[k] += t.eval(row);
            }
        }
        z
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut z = self.raw_scores(row);
        softmax_in_place(&mut z);
        z
    }

    pub fn split_count(&self) -> usize {
        self.trees
            .iter()
            .flatten()
            .map(|t| t.nodes.iter().filter(|n| matches!(n, RegNode::Split { .. })).count())
            .sum()
    }
}
