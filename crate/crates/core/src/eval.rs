//! Cross-validation folds, metrics and the leakage-guarded training harness.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::balance::{smote, SmoteConfig};
use crate::error::{Error, Result};
use crate::features::{FeatureManifest, FeatureScaler};
use crate::models::{self, argmax, soft_vote_smooth, window_weight, ClassCounts, ModelConfig, TrainedModel};
use crate::seeds;
use crate::types::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldKind {
    RandomSplit,
    LeaveOneUserOut,
    LeaveOneSessionOut,
    LeaveOneGroupOut,
}

fn default_ratios() -> Vec<f64> {
    vec![0.3, 0.3, 0.3, 0.1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoldScheme {
    pub kind: FoldKind,
    /// Portions for `random_split`; every portion but the last is a test fold
    /// once, the last portion always trains.
    #[serde(default = "default_ratios")]
    pub ratios: Vec<f64>,
}

impl FoldScheme {
    pub fn new(kind: FoldKind) -> Self {
        FoldScheme {
            kind,
            ratios: default_ratios(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == FoldKind::RandomSplit {
            let sum: f64 = self.ratios.iter().sum();
            if self.ratios.len() < 3 || self.ratios.iter().any(|r| !(*r > 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::config(
                    "eval.scheme.ratios",
                    "need at least three positive portions summing to 1",
                ));
            }
        }
        Ok(())
    }

    /// Random splits mix windows of one session across train and test.
    pub fn is_optimistic(&self) -> bool {
        self.kind == FoldKind::RandomSplit
    }
}

/// Grouping keys of one instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldKeys {
    pub user_id: String,
    pub session_id: String,
    pub group_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub name: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn leave_one_out<'a>(keys: &'a [FoldKeys], key: impl Fn(&'a FoldKeys) -> Result<&'a str>, prefix: &str) -> Result<Vec<Fold>> {
    let ks: Vec<&str> = keys.iter().map(&key).collect::<Result<_>>()?;
    let units: BTreeSet<&str> = ks.iter().copied().collect();
    Ok(units
        .into_iter()
        .map(|u| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..keys.len()).partition(|&i| ks[i] == u);
            Fold {
                name: format!("{prefix}={u}"),
                train,
                test,
            }
        })
        .collect())
}

/// Builds folds over instances described by `keys`.
pub fn make_folds(keys: &[FoldKeys], scheme: &FoldScheme, seed: u64) -> Result<Vec<Fold>> {
    scheme.validate()?;
    if keys.is_empty() {
        return Err(Error::domain("no instances to split"));
    }
    let nonempty = |s: &str, what: &str| -> Result<()> {
        if s.is_empty() {
            Err(Error::schema(format!("instance has an empty {what}")))
        } else {
            Ok(())
        }
    };
    match scheme.kind {
        FoldKind::LeaveOneUserOut => leave_one_out(
            keys,
            |k| nonempty(&k.user_id, "user_id").map(|_| k.user_id.as_str()),
            "user",
        ),
        FoldKind::LeaveOneSessionOut => leave_one_out(
            keys,
            |k| nonempty(&k.session_id, "session_id").map(|_| k.session_id.as_str()),
            "session",
        ),
        FoldKind::LeaveOneGroupOut => leave_one_out(
            keys,
            |k| {
                k.group_id
                    .as_deref()
                    .filter(|g| !g.is_empty())
                    .ok_or_else(|| Error::schema(format!("session {} has no group_id", k.session_id)))
            },
            "group",
        ),
        FoldKind::RandomSplit => {
            let mut idx: Vec<usize> = (0..keys.len()).collect();
            idx.shuffle(&mut seeds::rng(seed, seeds::SPLITS));
            let n = idx.len();
            let mut bounds = vec![0usize];
            let mut acc = 0.0;
            for r in &scheme.ratios {
                acc += r;
                bounds.push(((acc * n as f64).round() as usize).min(n));
            }
            *bounds.last_mut().expect("bounds") = n;
            let portions: Vec<Vec<usize>> = bounds.windows(2).map(|w| idx[w[0]..w[1]].to_vec()).collect();
            let n_test = portions.len() - 1;
            Ok((0..n_test)
                .map(|f| {
                    let mut test = portions[f].clone();
                    let mut train: Vec<usize> = portions
                        .iter()
                        .enumerate()
                        .filter(|&(p, _)| p != f)
                        .flat_map(|(_, v)| v.iter().copied())
                        .collect();
                    test.sort_unstable();
                    train.sort_unstable();
                    Fold {
                        name: format!("random={f}"),
                        train,
                        test,
                    }
                })
                .collect())
        }
    }
}

/// `m[i][j]` counts instances of true class `i` predicted as `j`.
pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Vec<Vec<u64>>> {
    if y_true.len() != y_pred.len() {
        return Err(Error::domain(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut m = vec![vec![0u64; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::domain(format!("label {} outside {n_classes} classes", t.max(p))));
        }
        m[t][p] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

fn row_col(m: &[Vec<u64>], k: usize) -> (u64, u64) {
    (m[k].iter().sum(), m.iter().map(|r| r[k]).sum())
}

/// Precision, recall and F1 per class; each is 0 when undefined.
pub fn per_class_metrics(m: &[Vec<u64>], classes: &[String]) -> Vec<ClassMetrics> {
    (0..m.len())
        .map(|k| {
            let (row, col) = row_col(m, k);
            let tp = m[k][k] as f64;
            let precision = if col > 0 { tp / col as f64 } else { 0.0 };
            let recall = if row > 0 { tp / row as f64 } else { 0.0 };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                class: classes.get(k).cloned().unwrap_or_else(|| k.to_string()),
                precision,
                recall,
                f1,
                support: row,
            }
        })
        .collect()
}

/// Unweighted mean F1 over classes that occur as truth or prediction.
/// Classes absent from both are excluded; an all-zero matrix scores 0.
pub fn macro_f_score(m: &[Vec<u64>]) -> f64 {
    let metrics = per_class_metrics(m, &[]);
    let present: Vec<f64> = (0..m.len())
        .filter(|&k| {
            let (r, c) = row_col(m, k);
            r + c > 0
        })
        .map(|k| metrics[k].f1)
        .collect();
    if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    }
}

/// F1 averaged over the given class indices (those present only).
pub fn macro_f_subset(m: &[Vec<u64>], classes: &[usize]) -> f64 {
    let metrics = per_class_metrics(m, &[]);
    let f: Vec<f64> = classes
        .iter()
        .filter(|&&k| {
            let (r, c) = row_col(m, k);
            r + c > 0
        })
        .map(|&k| metrics[k].f1)
        .collect();
    if f.is_empty() {
        0.0
    } else {
        f.iter().sum::<f64>() / f.len() as f64
    }
}

pub fn accuracy(m: &[Vec<u64>]) -> f64 {
    let total: u64 = m.iter().flatten().sum();
    if total == 0 {
        return 0.0;
    }
    let trace: u64 = (0..m.len()).map(|k| m[k][k]).sum();
    trace as f64 / total as f64
}

pub fn hamming_loss(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::domain("label vectors differ in length"));
    }
    if y_true.is_empty() {
        return Err(Error::domain("hamming loss of an empty vector"));
    }
    let miss = y_true.iter().zip(y_pred).filter(|(a, b)| a != b).count();
    Ok(miss as f64 / y_true.len() as f64)
}

/// Instance table shared by every evaluation.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: Arc<FeatureManifest>,
    pub classes: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub keys: Vec<FoldKeys>,
    /// Start frame of each window within its session (temporal order).
    pub starts: Vec<usize>,
    /// Per-frame labels of each window, for inverse-frequency weighting.
    pub frame_labels: Vec<Vec<Label>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            manifest: self.manifest.clone(),
            classes: self.classes.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            keys: idx.iter().map(|&i| self.keys[i].clone()).collect(),
            starts: idx.iter().map(|&i| self.starts[i]).collect(),
            frame_labels: idx.iter().map(|&i| self.frame_labels[i].clone()).collect(),
        }
    }

    /// Keeps only the listed columns (e.g. one sensor modality).
    pub fn select_columns(&self, manifest: Arc<FeatureManifest>, cols: &[usize]) -> Dataset {
        Dataset {
            manifest,
            rows: self.rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect(),
            ..self.clone()
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.classes.len()];
        for &y in &self.y {
            c[y] += 1;
        }
        c
    }

    /// Volunteer recognition: keep one activity class and make the user the
    /// label.
    pub fn relabel_by_user(&self, class: usize) -> Result<Dataset> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.y[i] == class).collect();
        if idx.is_empty() {
            return Err(Error::domain(format!("no instances of class {class}")));
        }
        let mut out = self.subset(&idx);
        let users: Vec<String> = out
            .keys
            .iter()
            .map(|k| k.user_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        out.y = out
            .keys
            .iter()
            .map(|k| users.iter().position(|u| *u == k.user_id).expect("user listed"))
            .collect();
        out.frame_labels = out.y.iter().zip(&out.frame_labels).map(|(&y, f)| vec![Label(y as u16); f.len()]).collect();
        out.classes = users;
        Ok(out)
    }
}

/// Header `session_id,user_id,start_index,label,<feature names...>`.
pub fn write_dataset_csv<W: std::io::Write>(out: W, ds: &Dataset) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header: Vec<String> = ["session_id", "user_id", "start_index", "label"].map(String::from).to_vec();
    header.extend(ds.manifest.features.iter().map(|f| f.name.clone()));
    w.write_record(&header)?;
    for i in 0..ds.len() {
        let k = &ds.keys[i];
        let mut rec = vec![
            k.session_id.clone(),
            k.user_id.clone(),
            ds.starts[i].to_string(),
            ds.classes[ds.y[i]].clone(),
        ];
        rec.extend(ds.rows[i].iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOptions {
    pub model: ModelConfig,
    #[serde(default)]
    pub smote: Option<SmoteConfig>,
    /// Quantile clip for the per-feature [0, 1] scaler; `None` skips scaling.
    #[serde(default)]
    pub feature_clip: Option<(f64, f64)>,
    #[serde(default)]
    pub inverse_frequency_weights: bool,
    #[serde(default)]
    pub soft_vote_radius: Option<usize>,
}

impl TrainOptions {
    pub fn new(model: ModelConfig) -> Self {
        TrainOptions {
            model,
            smote: None,
            feature_clip: None,
            inverse_frequency_weights: false,
            soft_vote_radius: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if let Some((a, b)) = self.feature_clip {
            if !(0.0 <= a && a < b && b <= 1.0) {
                return Err(Error::config("train.feature_clip", "need 0 <= lo_q < hi_q <= 1"));
            }
        }
        if self.smote.is_some_and(|s| s.k_neighbors == 0) {
            return Err(Error::config("balance.k_neighbors", "must be at least 1"));
        }
        Ok(())
    }
}

/// Everything a fit routine touched, for the leakage check.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitAudit {
    /// Dataset rows handed to the scaler, SMOTE and the model.
    pub rows: BTreeSet<usize>,
    pub sessions: BTreeSet<String>,
    /// Dataset rows used as SMOTE base or neighbor.
    pub smote_sources: BTreeSet<usize>,
}

#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub scaler: Option<FeatureScaler>,
    pub model: TrainedModel,
    pub audit: FitAudit,
}

impl FittedPipeline {
    pub fn proba(&self, row: &[f64]) -> Vec<f64> {
        match &self.scaler {
            Some(s) => self.model.proba_row(&s.transform_row(row)),
            None => self.model.proba_row(row),
        }
    }
}

/// Fits scaler, balancing and model on `train` rows only.
pub fn fit_pipeline(ds: &Dataset, train: &[usize], opts: &TrainOptions) -> Result<FittedPipeline> {
    opts.validate()?;
    if train.is_empty() {
        return Err(Error::domain("empty training fold"));
    }
    let mut audit = FitAudit::default();
    for &i in train {
        audit.rows.insert(i);
        audit.sessions.insert(ds.keys[i].session_id.clone());
    }
    let raw: Vec<Vec<f64>> = train.iter().map(|&i| ds.rows[i].clone()).collect();
    let scaler = opts.feature_clip.map(|c| FeatureScaler::fit(&raw, c)).transpose()?;
    let mut x: Vec<Vec<f64>> = match &scaler {
        Some(s) => raw.iter().map(|r| s.transform_row(r)).collect(),
        None => raw,
    };
    let mut y: Vec<usize> = train.iter().map(|&i| ds.y[i]).collect();
    let mut w: Option<Vec<f64>> = if opts.inverse_frequency_weights {
        let counts = ClassCounts::from_frame_labels(train.iter().map(|&i| ds.frame_labels[i].as_slice()));
        Some(
            train
                .iter()
                .map(|&i| window_weight(&ds.frame_labels[i], &counts))
                .collect::<Result<_>>()?,
        )
    } else {
        None
    };
    if let Some(sc) = &opts.smote {
        let b = smote(&x, &y, sc)?;
        for o in &b.origins {
            audit.smote_sources.insert(train[o.base]);
            audit.smote_sources.insert(train[o.neighbor]);
        }
        if let Some(wv) = &mut w {
            for o in &b.origins {
                let (wb, wn) = (wv[o.base], wv[o.neighbor]);
                wv.push(wb + o.u * (wn - wb));
            }
        }
        x = b.x;
        y = b.y;
    }
    let model = models::train(&x, &y, w.as_deref(), &ds.classes, &ds.manifest.hash, &opts.model)?;
    Ok(FittedPipeline { scaler, model, audit })
}

/// Fails when any test row or (for grouped schemes) any test session reached
/// a fit routine.
pub fn check_leakage(audit: &FitAudit, ds: &Dataset, test: &[usize], session_level: bool) -> Result<()> {
    if let Some(i) = test.iter().find(|i| audit.rows.contains(i) || audit.smote_sources.contains(i)) {
        return Err(Error::Leakage(format!("test row {i} was used for fitting")));
    }
    if session_level {
        if let Some(i) = test.iter().find(|&&i| audit.sessions.contains(&ds.keys[i].session_id)) {
            return Err(Error::Leakage(format!(
                "test session {} was used for fitting",
                ds.keys[*i].session_id
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub name: String,
    pub n_train: usize,
    pub test: Vec<usize>,
    pub y_true: Vec<usize>,
    pub y_pred: Vec<usize>,
}

/// Predictions for `test`, soft-voted per session in temporal order when a
/// radius is configured.
pub fn predict_rows(p: &FittedPipeline, ds: &Dataset, test: &[usize], radius: Option<usize>) -> Result<Vec<usize>> {
    let probs: Vec<Vec<f64>> = test.iter().map(|&i| p.proba(&ds.rows[i])).collect();
    let Some(r) = radius else {
        return Ok(probs.iter().map(|v| argmax(v)).collect());
    };
    let mut by_session: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (k, &i) in test.iter().enumerate() {
        by_session.entry(ds.keys[i].session_id.as_str()).or_default().push(k);
    }
    let mut pred = vec![0; test.len()];
    for (_, mut ks) in by_session {
        ks.sort_by_key(|&k| ds.starts[test[k]]);
        let seq: Vec<Vec<f64>> = ks.iter().map(|&k| probs[k].clone()).collect();
        for (k, c) in ks.into_iter().zip(soft_vote_smooth(&seq, r)?) {
            pred[k] = c;
        }
    }
    Ok(pred)
}

/// Runs every fold (in parallel) with its own fit; the model seed is shared.
pub fn cross_validate(ds: &Dataset, folds: &[Fold], scheme: &FoldScheme, opts: &TrainOptions) -> Result<Vec<FoldOutcome>> {
    let session_level = !scheme.is_optimistic();
    folds
        .par_iter()
        .map(|f| {
            let fitted = fit_pipeline(ds, &f.train, opts)?;
            check_leakage(&fitted.audit, ds, &f.test, session_level)?;
            let y_pred = predict_rows(&fitted, ds, &f.test, opts.soft_vote_radius)?;
            Ok(FoldOutcome {
                name: f.name.clone(),
                n_train: f.train.len(),
                test: f.test.clone(),
                y_true: f.test.iter().map(|&i| ds.y[i]).collect(),
                y_pred,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub name: String,
    pub n_train: usize,
    pub n_test: usize,
    pub confusion: Vec<Vec<u64>>,
    pub macro_f: f64,
    pub accuracy: f64,
    pub hamming_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: String,
    pub classes: Vec<String>,
    pub scheme: FoldScheme,
    pub model: String,
    pub manifest_hash: String,
    pub n_features: usize,
    pub folds: Vec<FoldResult>,
    /// Summed over folds.
    pub confusion: Vec<Vec<u64>>,
    pub per_class: Vec<ClassMetrics>,
    pub macro_f: f64,
    pub accuracy: f64,
    pub hamming_loss: f64,
    pub config_hash: String,
    pub seed: u64,
    /// Random splits share sessions between train and test.
    pub optimistic: bool,
    pub notes: Vec<String>,
}

pub struct ReportContext<'a> {
    pub task: &'a str,
    pub scheme: &'a FoldScheme,
    pub opts: &'a TrainOptions,
    pub config_hash: &'a str,
    pub seed: u64,
    pub notes: Vec<String>,
}

pub fn build_report(ds: &Dataset, outcomes: &[FoldOutcome], ctx: ReportContext<'_>) -> Result<EvalReport> {
    let k = ds.classes.len();
    let mut pooled = vec![vec![0u64; k]; k];
    let mut folds = Vec::with_capacity(outcomes.len());
    let (mut all_t, mut all_p) = (Vec::new(), Vec::new());
    for o in outcomes {
        let m = confusion_matrix(&o.y_true, &o.y_pred, k)?;
        for i in 0..k {
            for j in 0..k {
                pooled[i][j] += m[i][j];
            }
        }
        folds.push(FoldResult {
            name: o.name.clone(),
            n_train: o.n_train,
            n_test: o.y_true.len(),
            macro_f: macro_f_score(&m),
            accuracy: accuracy(&m),
            hamming_loss: hamming_loss(&o.y_true, &o.y_pred)?,
            confusion: m,
        });
        all_t.extend_from_slice(&o.y_true);
        all_p.extend_from_slice(&o.y_pred);
    }
    let mut notes = ctx.notes;
    if ctx.scheme.is_optimistic() {
        notes.push("random split: windows of one session appear in both train and test, so scores are optimistic".into());
    }
    Ok(EvalReport {
        task: ctx.task.to_string(),
        classes: ds.classes.clone(),
        scheme: ctx.scheme.clone(),
        model: ctx.opts.model.kind().to_string(),
        manifest_hash: ds.manifest.hash.clone(),
        n_features: ds.manifest.len(),
        folds,
        per_class: per_class_metrics(&pooled, &ds.classes),
        macro_f: macro_f_score(&pooled),
        accuracy: accuracy(&pooled),
        hamming_loss: hamming_loss(&all_t, &all_p)?,
        confusion: pooled,
        config_hash: ctx.config_hash.to_string(),
        seed: ctx.seed,
        optimistic: ctx.scheme.is_optimistic(),
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub n_trees: usize,
    pub max_depth: usize,
    pub hamming_loss: f64,
    pub macro_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub entries: Vec<GridEntry>,
    pub best: GridEntry,
}

/// Scores every (n_trees, max_depth) pair by pooled cross-validated hamming
/// loss; the first best entry in grid order wins ties.
pub fn grid_search(
    ds: &Dataset,
    folds: &[Fold],
    scheme: &FoldScheme,
    base: &TrainOptions,
    n_trees: &[usize],
    max_depth: &[usize],
) -> Result<GridResult> {
    let ModelConfig::RandomForest(fc) = base.model else {
        return Err(Error::config("model.kind", "grid search tunes random forests only"));
    };
    if n_trees.is_empty() || max_depth.is_empty() {
        return Err(Error::config("grid", "n_trees and max_depth lists must be nonempty"));
    }
    let mut entries = Vec::new();
    for &t in n_trees {
        for &d in max_depth {
            let opts = TrainOptions {
                model: ModelConfig::RandomForest(crate::models::ForestConfig {
                    n_trees: t,
                    max_depth: d,
                    ..fc
                }),
                ..*base
            };
            let out = cross_validate(ds, folds, scheme, &opts)?;
            let yt: Vec<usize> = out.iter().flat_map(|o| o.y_true.iter().copied()).collect();
            let yp: Vec<usize> = out.iter().flat_map(|o| o.y_pred.iter().copied()).collect();
            entries.push(GridEntry {
                n_trees: t,
                max_depth: d,
                hamming_loss: hamming_loss(&yt, &yp)?,
                macro_f: macro_f_score(&confusion_matrix(&yt, &yp, ds.classes.len())?),
            });
        }
    }
    let best = entries
        .iter()
        .fold(None::<&GridEntry>, |b, e| match b {
            Some(b) if b.hamming_loss <= e.hamming_loss => Some(b),
            _ => Some(e),
        })
        .expect("nonempty grid")
        .clone();
    Ok(GridResult { entries, best })
}
