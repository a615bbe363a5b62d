//! Random forest of Gini CART trees on bootstrap samples.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{argmax, check_training};
use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features drawn per node; `None` means `floor(sqrt(n_features))`.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
}

impl Default for RfParams {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: None, min_samples_split: 2, max_features: None, bootstrap: true }
    }
}

impl RfParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("rf: n_trees must be at least 1".into()));
        }
        if self.max_features == Some(0) || self.max_depth == Some(0) {
            return Err(Error::Config("rf: max_features and max_depth must be at least 1".into()));
        }
        Ok(())
    }
}

/// `floor(sqrt(n))`, at least 1.
pub fn default_max_features(n_features: usize) -> usize {
    ((n_features as f64).sqrt().floor() as usize).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { class: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, row: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { class } => return class,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

fn gini(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

struct Grower<'a> {
    x: &'a FeatureMatrix,
    y: &'a [usize],
    w: &'a [f64],
    classes: usize,
    params: &'a RfParams,
    mtry: usize,
    rng: Rng,
    nodes: Vec<Node>,
    importance: Vec<f64>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Grower<'_> {
    fn class_counts(&self, idx: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.classes];
        for &i in idx {
            c[self.y[i]] += self.w[i];
        }
        c
    }

    fn best_split_on(&self, f: usize, idx: &[usize], parent: &[f64], total: f64) -> Option<(f64, f64)> {
        let mut order: Vec<(f64, usize)> = idx.iter().map(|&i| (self.x.get(i, f), i)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if order[0].0 == order[order.len() - 1].0 {
            return None;
        }
        let parent_imp = total * gini(parent, total);
        let mut left = vec![0.0; self.classes];
        let mut wl = 0.0;
        let mut best: Option<(f64, f64)> = None;
        for k in 0..order.len() - 1 {
            let (v, i) = order[k];
            left[self.y[i]] += self.w[i];
            wl += self.w[i];
            let next = order[k + 1].0;
            if next == v {
                continue;
            }
            let wr = total - wl;
            let right: Vec<f64> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
            let gain = parent_imp - wl * gini(&left, wl) - wr * gini(&right, wr);
            if best.is_none_or(|(g, _)| gain > g) {
                let mut thr = v + (next - v) / 2.0;
                if thr >= next {
                    thr = v;
                }
                best = Some((gain, thr));
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.class_counts(&idx);
        let total: f64 = counts.iter().sum();
        let class = argmax(&counts);
        self.nodes.push(Node::Leaf { class });
        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || total < self.params.min_samples_split as f64 {
            return id;
        }

        let mut features: Vec<usize> = (0..self.x.cols()).collect();
        features.shuffle(&mut self.rng);
        let mut best: Option<BestSplit> = None;
        for (tried, &f) in features.iter().enumerate() {
            if tried >= self.mtry && best.is_some() {
                break;
            }
            if let Some((gain, threshold)) = self.best_split_on(f, &idx, &counts, total) {
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(BestSplit { feature: f, threshold, gain });
                }
            }
        }
        let Some(split) = best else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| self.x.get(i, split.feature) <= split.threshold);
        self.importance[split.feature] += split.gain.max(0.0);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split { feature: split.feature, threshold: split.threshold, left, right };
        id
    }
}

fn fit_tree(
    p: &RfParams,
    x: &FeatureMatrix,
    y: &[usize],
    classes: usize,
    mtry: usize,
    seed: u64,
) -> (DecisionTree, Vec<f64>) {
    let n = x.rows();
    let mut rng = rng_from_seed(seed);
    let mut w = vec![0.0; n];
    if p.bootstrap {
        for _ in 0..n {
            w[rng.random_range(0..n)] += 1.0;
        }
    } else {
        w.iter_mut().for_each(|v| *v = 1.0);
    }
    let idx: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
    let mut g = Grower {
        x,
        y,
        w: &w,
        classes,
        params: p,
        mtry,
        rng,
        nodes: Vec::new(),
        importance: vec![0.0; x.cols()],
    };
    g.grow(idx, 0);
    (DecisionTree { nodes: g.nodes }, g.importance)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub class_count: usize,
    pub max_features: usize,
    /// Mean impurity decrease, normalized per tree then averaged over trees
    /// that split at least once. All zeros if no tree split.
    pub importances: Vec<f64>,
}

impl RandomForest {
    pub fn fit(p: &RfParams, x: &FeatureMatrix, y: &[usize], class_count: usize, seed: u64) -> Result<Self> {
        p.validate()?;
        check_training(x, y, class_count)?;
        let mtry = p.max_features.unwrap_or_else(|| default_max_features(x.cols())).min(x.cols());
        let fitted: Vec<(DecisionTree, Vec<f64>)> = (0..p.n_trees)
            .into_par_iter()
            .map(|t| fit_tree(p, x, y, class_count, mtry, derive_seed(seed, "tree", t as u64)))
            .collect();
        let mut importances = vec![0.0; x.cols()];
        let mut contributing = 0;
        for (_, imp) in &fitted {
            let s: f64 = imp.iter().sum();
            if s > 0.0 {
                contributing += 1;
                for (a, v) in importances.iter_mut().zip(imp) {
                    *a += v / s;
                }
            }
        }
        if contributing > 0 {
            importances.iter_mut().for_each(|v| *v /= contributing as f64);
        }
        Ok(Self {
            trees: fitted.into_iter().map(|(t, _)| t).collect(),
            class_count,
            max_features: mtry,
            importances,
        })
    }

    pub fn tree_votes(&self, row: &[f64]) -> Vec<usize> {
        self.trees.iter().map(|t| t.predict(row)).collect()
    }

    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.class_count];
        for c in self.tree_votes(row) {
            p[c] += 1.0;
        }
        let n = self.trees.len() as f64;
        p.iter_mut().for_each(|v| *v /= n);
        p
    }
}
