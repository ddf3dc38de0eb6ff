//! SMOTE oversampling of minority classes.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoteConfig {
    #[serde(default = "default_k")]
    pub k_neighbors: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_k() -> usize {
    5
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            seed: 0,
        }
    }
}

/// How one synthetic row was produced: `x[base] + u * (x[neighbor] - x[base])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticOrigin {
    pub base: usize,
    pub neighbor: usize,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Balanced {
    /// Original rows first, unmodified, then synthetic rows.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    /// One entry per synthetic row (row `n_original + i`). Duplicated
    /// singletons have `base == neighbor` and `u == 0`.
    pub origins: Vec<SyntheticOrigin>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices (into `members`) of the `k` nearest same-class neighbors of
/// `members[i]`, closest first, ties by position.
fn nearest(x: &[Vec<f64>], members: &[usize], i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = members
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, &row)| (sq_dist(&x[members[i]], &x[row]), j))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, j)| j).collect()
}

/// Oversamples every class up to the majority count.
///
/// `k` is clamped to `class_size - 1`. A class with a single sample cannot be
/// interpolated and is duplicated instead (logged as a warning).
pub fn smote(x: &[Vec<f64>], y: &[usize], cfg: &SmoteConfig) -> Result<Balanced> {
    if x.len() != y.len() {
        return Err(Error::domain(format!("{} rows but {} labels", x.len(), y.len())));
    }
    if cfg.k_neighbors == 0 {
        return Err(Error::domain("k_neighbors must be at least 1"));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in y.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let target = by_class.values().map(Vec::len).max().unwrap_or(0);

    let mut out = Balanced {
        x: x.to_vec(),
        y: y.to_vec(),
        origins: Vec::new(),
    };
    let mut rng = seeds::rng(cfg.seed, seeds::SMOTE);
    for (&class, members) in &by_class {
        let need = target - members.len();
        if need == 0 {
            continue;
        }
        if members.len() == 1 {
            log::warn!("class {class} has a single sample; duplicating it {need} times instead of SMOTE");
            for _ in 0..need {
                out.x.push(x[members[0]].clone());
                out.y.push(class);
                out.origins.push(SyntheticOrigin {
                    base: members[0],
                    neighbor: members[0],
                    u: 0.0,
                });
            }
            continue;
        }
        let k = cfg.k_neighbors.min(members.len() - 1);
        let neighbors: Vec<Vec<usize>> = (0..members.len()).map(|i| nearest(x, members, i, k)).collect();
        for g in 0..need {
            let bi = g % members.len();
            let ni = neighbors[bi][rng.random_range(0..k)];
            let u: f64 = rng.random();
            let (base, nb) = (&x[members[bi]], &x[members[ni]]);
            out.x.push(base.iter().zip(nb).map(|(a, b)| a + u * (b - a)).collect());
            out.y.push(class);
            out.origins.push(SyntheticOrigin {
                base: members[bi],
                neighbor: members[ni],
                u,
            });
        }
    }
    Ok(out)
}
