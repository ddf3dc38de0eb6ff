//! Random forest of CART trees (Gini impurity, bootstrap resampling, random
//! feature subsets per split).
//!
//! Splits send `x <= threshold` left where `threshold` is the larger of the
//! two training values bordering the cut on the left side. Because the
//! threshold is itself an observed value, predictions are unchanged by any
//! strictly increasing transform applied to a feature in both train and test.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Defaults to floor(sqrt(n_features)), at least 1.
    #[serde(default)]
    pub features_per_split: Option<usize>,
    #[serde(default = "yes")]
    pub bootstrap: bool,
    #[serde(default)]
    pub seed: u64,
}

fn yes() -> bool {
    true
}

impl ForestConfig {
    /// 20 trees of depth 15, as used for the leg exercises.
    pub fn leg() -> Self {
        ForestConfig {
            n_trees: 20,
            max_depth: 15,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }

    /// 100 trees of depth 15, as used for the gym workouts.
    pub fn gym() -> Self {
        ForestConfig {
            n_trees: 100,
            ..ForestConfig::leg()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::config("model.n_trees", "must be at least 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::config("model.max_depth", "must be at least 1"));
        }
        if self.features_per_split == Some(0) {
            return Err(Error::config("model.features_per_split", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn predict(&self, row: &[f64]) -> usize {
        let mut node = self;
        loop {
            match node {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub n_classes: usize,
    pub trees: Vec<Node>,
}

impl Forest {
    /// Fraction of trees voting for each class.
    pub fn vote_fractions(&self, row: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for t in &self.trees {
            votes[t.predict(row)] += 1.0;
        }
        let n = self.trees.len() as f64;
        votes.iter_mut().for_each(|v| *v /= n);
        votes
    }
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (c, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = c;
        }
    }
    best
}

fn gini_sum(counts: &[usize], n: usize) -> f64 {
    // n * gini impurity = n - sum(c^2) / n
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 - sq / n as f64
}

struct Builder<'a, R: Rng> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    n_features: usize,
    mtry: usize,
    max_depth: usize,
    rng: R,
}

impl<R: Rng> Builder<'_, R> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    /// Best (score, threshold) on one feature, or None if the feature is
    /// constant over `idx`. Score is the summed weighted Gini of both children.
    fn best_on_feature(&self, idx: &mut [usize], f: usize) -> Option<(f64, f64)> {
        idx.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
        let n = idx.len();
        let mut left = vec![0usize; self.n_classes];
        let mut right = self.counts(idx);
        let mut best: Option<(f64, f64)> = None;
        for i in 0..n - 1 {
            let c = self.y[idx[i]];
            left[c] += 1;
            right[c] -= 1;
            let (v, next) = (self.x[idx[i]][f], self.x[idx[i + 1]][f]);
            if v >= next {
                continue;
            }
            let score = gini_sum(&left, i + 1) + gini_sum(&right, n - i - 1);
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, v));
            }
        }
        best
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> Node {
        let counts = self.counts(idx);
        let leaf = Node::Leaf {
            class: majority(&counts),
        };
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth || idx.len() < 2 {
            return leaf;
        }

        let mut order: Vec<usize> = sample(&mut self.rng, self.n_features, self.n_features.min(self.mtry)).into_vec();
        let mut rest: Vec<usize> = (0..self.n_features).filter(|f| !order.contains(f)).collect();
        rest.shuffle(&mut self.rng);

        let mut best: Option<(f64, usize, f64)> = None;
        let mut tried = 0;
        let mut k = 0;
        // Keep drawing features past mtry only while no valid split exists.
        while k < order.len() || (best.is_none() && !rest.is_empty()) {
            if k == order.len() {
                order.push(rest.pop().expect("nonempty"));
            }
            let f = order[k];
            k += 1;
            tried += 1;
            if let Some((score, thr)) = self.best_on_feature(idx, f) {
                if best.is_none_or(|(s, _, _)| score < s) {
                    best = Some((score, f, thr));
                }
            }
        }
        debug_assert!(tried >= 1);
        let Some((_, feature, threshold)) = best else {
            return leaf;
        };

        let mut l: Vec<usize> = idx.iter().copied().filter(|&i| self.x[i][feature] <= threshold).collect();
        let mut r: Vec<usize> = idx.iter().copied().filter(|&i| self.x[i][feature] > threshold).collect();
        let left = self.grow(&mut l, depth + 1);
        let right = self.grow(&mut r, depth + 1);
        Node::Split {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

pub fn fit_forest(x: &[Vec<f64>], y: &[usize], n_classes: usize, cfg: &ForestConfig) -> Result<Forest> {
    cfg.validate()?;
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::domain("forest needs a nonempty matrix with one label per row"));
    }
    let n_features = x[0].len();
    if n_features == 0 || x.iter().any(|r| r.len() != n_features) {
        return Err(Error::domain("ragged or empty feature rows"));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::domain("feature matrix contains non-finite values"));
    }
    if y.iter().any(|&c| c >= n_classes) {
        return Err(Error::domain("label index outside class list"));
    }
    let mut present = y.to_vec();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::DegenerateModel(
            "random forest needs at least two classes in the training data".into(),
        ));
    }
    let mtry = cfg
        .features_per_split
        .unwrap_or_else(|| (n_features as f64).sqrt().floor() as usize)
        .clamp(1, n_features);

    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeds::indexed(cfg.seed, seeds::BOOTSTRAP, t as u64);
            let mut idx: Vec<usize> = if cfg.bootstrap {
                (0..x.len()).map(|_| rng.random_range(0..x.len())).collect()
            } else {
                (0..x.len()).collect()
            };
            let mut b = Builder {
                x,
                y,
                n_classes,
                n_features,
                mtry,
                max_depth: cfg.max_depth,
                rng,
            };
            b.grow(&mut idx, 0)
        })
        .collect();
    Ok(Forest { n_classes, trees })
}
