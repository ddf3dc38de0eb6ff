//! Classifiers, instance weighting and temporal smoothing of predictions.

pub mod forest;
pub mod logistic;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::types::Label;

pub use forest::{fit_forest, Forest, ForestConfig};
pub use logistic::{fit_logistic, Logistic, LogisticConfig};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    RandomForest(ForestConfig),
    Logistic(LogisticConfig),
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelConfig::RandomForest(c) => c.validate(),
            ModelConfig::Logistic(c) => c.validate(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelConfig::RandomForest(_) => "random_forest",
            ModelConfig::Logistic(_) => "logistic",
        }
    }

    /// Same model with its seed replaced (logistic has none).
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            ModelConfig::RandomForest(c) => ModelConfig::RandomForest(ForestConfig { seed, ..c }),
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    RandomForest(Forest),
    Logistic(Logistic),
}

/// A fitted classifier bound to its class list and feature manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub classes: Vec<String>,
    pub manifest_hash: String,
    pub params: ModelParams,
}

impl TrainedModel {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// Class distribution for a raw row; callers must have checked the layout.
    pub fn proba_row(&self, row: &[f64]) -> Vec<f64> {
        match &self.params {
            ModelParams::RandomForest(f) => f.vote_fractions(row),
            ModelParams::Logistic(l) => l.proba(row),
        }
    }

    pub fn check_manifest(&self, hash: &str) -> Result<()> {
        if hash != self.manifest_hash {
            return Err(Error::schema(format!(
                "feature manifest {hash} does not match model manifest {}",
                self.manifest_hash
            )));
        }
        Ok(())
    }

    pub fn predict_proba(&self, fv: &FeatureVector) -> Result<Vec<f64>> {
        self.check_manifest(&fv.manifest.hash)?;
        Ok(self.proba_row(&fv.values))
    }

    pub fn predict(&self, fv: &FeatureVector) -> Result<usize> {
        Ok(argmax(&self.predict_proba(fv)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::schema(format!(
                "model format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        let n = match &m.params {
            ModelParams::RandomForest(f) => f.n_classes,
            ModelParams::Logistic(l) => l.bias.len(),
        };
        if n != m.classes.len() {
            return Err(Error::schema("model class count does not match its class list"));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Index of the largest value; ties go to the lower index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

/// Fits the configured model. `y` holds indices into `classes`.
pub fn train(
    x: &[Vec<f64>],
    y: &[usize],
    sample_weight: Option<&[f64]>,
    classes: &[String],
    manifest_hash: &str,
    cfg: &ModelConfig,
) -> Result<TrainedModel> {
    let params = match cfg {
        ModelConfig::RandomForest(c) => {
            if sample_weight.is_some() {
                log::debug!("random forest ignores sample weights");
            }
            ModelParams::RandomForest(fit_forest(x, y, classes.len(), c)?)
        }
        ModelConfig::Logistic(c) => ModelParams::Logistic(fit_logistic(x, y, sample_weight, classes.len(), c)?),
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        classes: classes.to_vec(),
        manifest_hash: manifest_hash.to_string(),
        params,
    })
}

pub fn train_random_forest(
    x: &[Vec<f64>],
    y: &[usize],
    classes: &[String],
    manifest_hash: &str,
    cfg: &ForestConfig,
) -> Result<TrainedModel> {
    train(x, y, None, classes, manifest_hash, &ModelConfig::RandomForest(*cfg))
}

pub fn train_logistic(
    x: &[Vec<f64>],
    y: &[usize],
    sample_weight: Option<&[f64]>,
    classes: &[String],
    manifest_hash: &str,
    cfg: &LogisticConfig,
) -> Result<TrainedModel> {
    train(x, y, sample_weight, classes, manifest_hash, &ModelConfig::Logistic(*cfg))
}

/// Per-class timestep totals over a set of training windows. Overlapping
/// windows contribute their shared frames once per window.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassCounts {
    pub counts: BTreeMap<Label, u64>,
    pub total: u64,
}

impl ClassCounts {
    pub fn from_frame_labels<'a>(windows: impl IntoIterator<Item = &'a [Label]>) -> Self {
        let mut c = ClassCounts::default();
        for w in windows {
            for &l in w {
                *c.counts.entry(l).or_default() += 1;
                c.total += 1;
            }
        }
        c
    }
}

/// Instance weight of a window: sum over its frames of `N / count(class)`
/// where `N` is the total training timestep count.
pub fn window_weight(frame_labels: &[Label], counts: &ClassCounts) -> Result<f64> {
    let n = counts.total as f64;
    frame_labels
        .iter()
        .map(|l| match counts.counts.get(l) {
            Some(&c) if c > 0 => Ok(n / c as f64),
            _ => Err(Error::domain(format!("class {} has no training timesteps", l.0))),
        })
        .sum()
}

/// Replaces each prediction by the argmax of the class distribution averaged
/// over the `radius` neighbors on each side (clipped at sequence ends). Ties
/// go to the lower class index. Radius 0 is the plain per-window argmax.
pub fn soft_vote_smooth(probs: &[Vec<f64>], radius: usize) -> Result<Vec<usize>> {
    let Some(first) = probs.first() else {
        return Ok(Vec::new());
    };
    let k = first.len();
    if probs.iter().any(|p| p.len() != k) {
        return Err(Error::domain("probability rows differ in length"));
    }
    Ok((0..probs.len())
        .map(|i| {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(probs.len() - 1);
            let mut avg = vec![0.0; k];
            for p in &probs[lo..=hi] {
                for (a, v) in avg.iter_mut().zip(p) {
                    *a += v;
                }
            }
            let m = (hi - lo + 1) as f64;
            avg.iter_mut().for_each(|a| *a /= m);
            argmax(&avg)
        })
        .collect())
}
