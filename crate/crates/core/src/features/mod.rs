//! Windowing, derived channels (jerk, magnitude) and feature extraction.

pub mod gym;
pub mod leg;
pub mod stats;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::types::{Channel, Label, Session, Window};

pub use gym::{extract_features_gym, gym_manifest, GYM_FEATURE_COUNT};
pub use leg::{collab_manifest, extract_features_collab, extract_features_leg, leg_manifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MajorityRule {
    /// Most frequent label; ties go to the lower class id.
    #[default]
    Plurality,
    /// Label of the center frame.
    Center,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowingConfig {
    pub window_seconds: f64,
    pub step_seconds: f64,
    #[serde(default)]
    pub majority_label_rule: MajorityRule,
}

impl Default for WindowingConfig {
    fn default() -> Self {
        WindowingConfig {
            window_seconds: 4.0,
            step_seconds: 2.0,
            majority_label_rule: MajorityRule::Plurality,
        }
    }
}

impl WindowingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_seconds > 0.0 && self.step_seconds <= self.window_seconds) {
            return Err(Error::domain("windowing requires 0 < step <= window"));
        }
        Ok(())
    }

    /// (window, step) in samples at `fs`.
    pub fn samples(&self, fs: f64) -> (usize, usize) {
        let w = (self.window_seconds * fs).round().max(1.0) as usize;
        let s = (self.step_seconds * fs).round().max(1.0) as usize;
        (w, s)
    }
}

pub fn majority_label(labels: &[Label], rule: MajorityRule) -> Label {
    match rule {
        MajorityRule::Center => labels[labels.len() / 2],
        MajorityRule::Plurality => {
            let mut counts: BTreeMap<Label, usize> = BTreeMap::new();
            for &l in labels {
                *counts.entry(l).or_default() += 1;
            }
            // BTreeMap iterates in ascending label order, so `>` keeps the lower id on ties.
            let mut best = (labels[0], 0usize);
            for (l, c) in counts {
                if c > best.1 {
                    best = (l, c);
                }
            }
            best.0
        }
    }
}

/// Cuts a session into fixed windows at a fixed stride. Windows touching any
/// DISCARD frame are dropped; a session shorter than one window yields none.
pub fn slide_windows(s: &Session, cfg: &WindowingConfig) -> Result<Vec<Window>> {
    cfg.validate()?;
    let (w, step) = cfg.samples(s.fs());
    let n = s.len();
    let mut out = Vec::new();
    if n < w {
        return Ok(out);
    }
    let mut start = 0;
    while start + w <= n {
        let labels = &s.labels[start..start + w];
        if !labels.iter().any(|l| l.is_discard()) {
            let frames = &s.frames[start..start + w];
            let channels = Channel::ALL
                .iter()
                .map(|&ch| (ch, frames.iter().map(|f| f.channel(ch)).collect()))
                .collect();
            let label = majority_label(labels, cfg.majority_label_rule);
            out.push(Window::new(
                s.meta.id.clone(),
                start,
                channels,
                labels.to_vec(),
                label,
            )?);
        }
        start += step;
    }
    Ok(out)
}

/// Number of window positions for a series of `len` samples.
pub fn window_count(len: usize, window: usize, step: usize) -> usize {
    if len < window || step == 0 {
        0
    } else {
        (len - window) / step + 1
    }
}

/// First difference scaled by the sample rate; one sample shorter than input.
pub fn jerk(series: &[f64], fs: f64) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(Error::domain("jerk needs at least two samples"));
    }
    Ok(series.windows(2).map(|p| (p[1] - p[0]) * fs).collect())
}

pub fn magnitude(x: &[f64], y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() || x.len() != z.len() {
        return Err(Error::domain(format!(
            "magnitude needs equal lengths, got {}/{}/{}",
            x.len(),
            y.len(),
            z.len()
        )));
    }
    Ok(x.iter()
        .zip(y)
        .zip(z)
        .map(|((a, b), c)| (a * a + b * b + c * c).sqrt())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorGroup {
    Hbc,
    Acc,
    Gyro,
}

/// Which sensors a feature subset may draw on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    Hbc,
    Imu,
    Acc,
    HbcAcc,
    Combined,
}

impl Modality {
    pub fn allows(self, g: SensorGroup) -> bool {
        match self {
            Modality::Hbc => g == SensorGroup::Hbc,
            Modality::Imu => g != SensorGroup::Hbc,
            Modality::Acc => g == SensorGroup::Acc,
            Modality::HbcAcc => g != SensorGroup::Gyro,
            Modality::Combined => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    /// Identifier of the formula that produced the value.
    pub formula: String,
    pub sensors: Vec<SensorGroup>,
}

/// Ordered, versioned list of feature definitions. The hash binds trained
/// models to the exact feature layout they were fit on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub pipeline: String,
    pub version: u32,
    pub hash: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub features: Vec<FeatureSpec>,
}

impl FeatureManifest {
    pub fn new(pipeline: impl Into<String>, version: u32, features: Vec<FeatureSpec>) -> Self {
        let pipeline = pipeline.into();
        let hash = manifest_hash(&pipeline, version, &features);
        FeatureManifest {
            pipeline,
            version,
            hash,
            notes: Vec::new(),
            features,
        }
    }

    pub fn with_notes(mut self, notes: Vec<String>) -> Self {
        self.notes = notes;
        self
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    /// Subset usable under `modality`, with the column indices it keeps.
    pub fn select(&self, modality: Modality) -> (FeatureManifest, Vec<usize>) {
        let idx: Vec<usize> = self
            .features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.sensors.iter().all(|&g| modality.allows(g)))
            .map(|(i, _)| i)
            .collect();
        let feats = idx.iter().map(|&i| self.features[i].clone()).collect();
        let name = format!("{}/{}", self.pipeline, modality_name(modality));
        (
            FeatureManifest::new(name, self.version, feats).with_notes(self.notes.clone()),
            idx,
        )
    }

    /// Manifest describing a pairwise fusion of two per-user vectors.
    pub fn paired(&self) -> FeatureManifest {
        let mut feats = Vec::with_capacity(self.len() * 4);
        for prefix in ["u1", "u2", "mean", "absdiff"] {
            for f in &self.features {
                feats.push(FeatureSpec {
                    name: format!("{prefix}.{}", f.name),
                    formula: format!("{prefix}({})", f.formula),
                    sensors: f.sensors.clone(),
                });
            }
        }
        FeatureManifest::new(format!("pair[{}]", self.pipeline), self.version, feats)
    }
}

fn modality_name(m: Modality) -> &'static str {
    match m {
        Modality::Hbc => "hbc",
        Modality::Imu => "imu",
        Modality::Acc => "acc",
        Modality::HbcAcc => "hbc_acc",
        Modality::Combined => "combined",
    }
}

fn manifest_hash(pipeline: &str, version: u32, features: &[FeatureSpec]) -> String {
    let mut h = Sha256::new();
    h.update(pipeline.as_bytes());
    h.update(version.to_le_bytes());
    for f in features {
        h.update(b"\n");
        h.update(f.name.as_bytes());
        h.update(b"=");
        h.update(f.formula.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub manifest: Arc<FeatureManifest>,
    pub values: Vec<f64>,
    pub label: Label,
    pub weight: f64,
}

impl FeatureVector {
    pub fn new(manifest: Arc<FeatureManifest>, values: Vec<f64>, label: Label) -> Result<Self> {
        if values.len() != manifest.len() {
            return Err(Error::schema(format!(
                "{} values for a {}-feature manifest",
                values.len(),
                manifest.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "feature `{}` is not finite",
                manifest.features[i].name
            )));
        }
        Ok(FeatureVector {
            manifest,
            values,
            label,
            weight: 1.0,
        })
    }

    pub fn names(&self) -> Vec<&str> {
        self.manifest.names()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeaturePipeline {
    Leg,
    Gym,
    Collab,
}

impl FeaturePipeline {
    pub fn manifest(self) -> Arc<FeatureManifest> {
        match self {
            FeaturePipeline::Leg => leg_manifest(),
            FeaturePipeline::Gym => gym_manifest(),
            FeaturePipeline::Collab => collab_manifest(),
        }
    }

    pub fn extract(self, w: &Window, fs: f64) -> Result<FeatureVector> {
        match self {
            FeaturePipeline::Leg => extract_features_leg(w, fs),
            FeaturePipeline::Gym => extract_features_gym(w, fs),
            FeaturePipeline::Collab => extract_features_collab(w, fs),
        }
    }
}

/// Per-feature affine map onto [0, 1] from training-set clip quantiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl FeatureScaler {
    pub fn fit(rows: &[Vec<f64>], clip: (f64, f64)) -> Result<Self> {
        let (lo_q, hi_q) = clip;
        if !(0.0 <= lo_q && lo_q < hi_q && hi_q <= 1.0) {
            return Err(Error::domain("feature clip requires 0 <= lo_q < hi_q <= 1"));
        }
        let Some(first) = rows.first() else {
            return Err(Error::domain("cannot fit a scaler on an empty matrix"));
        };
        let d = first.len();
        let mut lo = Vec::with_capacity(d);
        let mut hi = Vec::with_capacity(d);
        let mut col = Vec::with_capacity(rows.len());
        for j in 0..d {
            col.clear();
            col.extend(rows.iter().map(|r| r[j]));
            col.sort_by(f64::total_cmp);
            lo.push(stats::quantile_sorted(&col, lo_q));
            hi.push(stats::quantile_sorted(&col, hi_q));
        }
        Ok(FeatureScaler { lo, hi })
    }

    /// Maps one row; values beyond the clip saturate, constant features map
    /// to 0.5.
    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &v)| {
                let span = self.hi[j] - self.lo[j];
                if span <= 0.0 {
                    0.5
                } else {
                    ((v - self.lo[j]) / span).clamp(0.0, 1.0)
                }
            })
            .collect()
    }
}

/// Fits on `train` and applies the frozen map to both matrices.
pub fn normalize_features(
    train: &[Vec<f64>],
    test: &[Vec<f64>],
    clip: (f64, f64),
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, FeatureScaler)> {
    let scaler = FeatureScaler::fit(train, clip)?;
    let tr = train.iter().map(|r| scaler.transform_row(r)).collect();
    let te = test.iter().map(|r| scaler.transform_row(r)).collect();
    Ok((tr, te, scaler))
}

/// Minimum spacing (seconds) between neighboring peaks, using the counting
/// detector at relative threshold 0.5 and 5-sample minimum distance. Fewer
/// than two peaks yields `fallback_seconds`.
pub fn min_neighbor_peak_distance(series: &[f64], fs: f64, fallback_seconds: f64) -> f64 {
    let cfg = crate::counting::PeakConfig {
        rel_threshold: 0.5,
        min_distance: 5.0 / fs,
        smoothing_cutoff: fs / 4.0,
    };
    let peaks = crate::counting::detect_peaks(series, &cfg, fs);
    peaks
        .windows(2)
        .map(|p| (p[1] - p[0]) as f64 / fs)
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.min(d))))
        .unwrap_or(fallback_seconds)
}

/// Writes a feature matrix as CSV whose header is `label,weight,<names...>`.
pub fn write_feature_csv<W: std::io::Write>(
    out: W,
    manifest: &FeatureManifest,
    classes: &[String],
    rows: &[FeatureVector],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["label".to_string(), "weight".to_string()];
    header.extend(manifest.features.iter().map(|f| f.name.clone()));
    w.write_record(&header)?;
    for r in rows {
        if r.manifest.hash != manifest.hash {
            return Err(Error::schema("feature row does not match manifest"));
        }
        let mut rec = vec![
            classes.get(r.label.index()).cloned().unwrap_or_else(|| r.label.0.to_string()),
            r.weight.to_string(),
        ];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{AccUnit, LabelSetId, SampleFrame, SensorPosition, SessionMeta};
    use proptest::prelude::*;

    fn session(n: usize) -> Session {
        Session {
            meta: SessionMeta {
                id: "s1".into(),
                user_id: "u1".into(),
                session_index: 0,
                sensor_position: SensorPosition::Wrist,
                sample_rate_hz: 20.0,
                label_set: LabelSetId::Leg7,
                acc_unit: AccUnit::MetersPerSecondSquared,
                group_id: None,
            },
            frames: (0..n)
                .map(|i| SampleFrame {
                    t: i as f64 * 0.05,
                    acc: [i as f64, 0.0, 1.0],
                    gyro: [0.0; 3],
                    cap_uv: (i as f64).sin(),
                })
                .collect(),
            labels: vec![Label(0); n],
        }
    }

    #[test]
    fn window_counts() {
        let cfg = WindowingConfig::default();
        assert_eq!(slide_windows(&session(2000), &cfg).unwrap().len(), 49);
        assert_eq!(slide_windows(&session(80), &cfg).unwrap().len(), 1);
        assert!(slide_windows(&session(79), &cfg).unwrap().is_empty());
        let w = &slide_windows(&session(200), &cfg).unwrap()[1];
        assert_eq!(w.start_index, 40);
        assert_eq!(w.length_samples, 80);
        assert_eq!(w.channel(Channel::AccX).unwrap()[0], 40.0);
    }

    #[test]
    fn windows_skip_discard_and_vote() {
        let mut s = session(200);
        for l in &mut s.labels[0..39] {
            *l = Label(1);
        }
        s.labels[150] = Label::DISCARD;
        let ws = slide_windows(&s, &WindowingConfig::default()).unwrap();
        // positions 0, 40, 80, 120; 80 and 120 cover frame 150
        assert_eq!(ws.iter().map(|w| w.start_index).collect::<Vec<_>>(), vec![0, 40]);
        assert_eq!(ws[0].label, Label(0)); // 41 vs 39
        let tie = [Label(2), Label(2), Label(1), Label(1)];
        assert_eq!(majority_label(&tie, MajorityRule::Plurality), Label(1));
        assert_eq!(majority_label(&tie, MajorityRule::Center), Label(1));
    }

    #[test]
    fn jerk_and_magnitude() {
        assert_eq!(jerk(&[1.0, 3.0, 6.0], 20.0).unwrap(), vec![40.0, 60.0]);
        assert_eq!(jerk(&[2.0; 5], 20.0).unwrap(), vec![0.0; 4]);
        let ramp: Vec<f64> = (0..6).map(|i| 0.5 * i as f64).collect();
        assert_eq!(jerk(&ramp, 20.0).unwrap(), vec![10.0; 5]);
        assert!(jerk(&[1.0], 20.0).is_err());
        assert_eq!(magnitude(&[3.0], &[4.0], &[12.0]).unwrap(), vec![13.0]);
        assert_eq!(magnitude(&[0.0], &[0.0], &[0.0]).unwrap(), vec![0.0]);
        assert_eq!(magnitude(&[-2.5], &[0.0], &[0.0]).unwrap(), vec![2.5]);
        assert!(magnitude(&[1.0], &[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn scaler_rules() {
        let train: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64, 7.0]).collect();
        let s = FeatureScaler::fit(&train, (0.0, 1.0)).unwrap();
        assert_eq!(s.transform_row(&[5.0, 7.0]), vec![0.5, 0.5]);
        assert_eq!(s.transform_row(&[42.0, -1.0]), vec![1.0, 0.5]);
        assert_eq!(s.transform_row(&[-3.0, 7.0]), vec![0.0, 0.5]);
        assert!(FeatureScaler::fit(&train, (0.5, 0.5)).is_err());
        assert!(FeatureScaler::fit(&[], (0.0, 1.0)).is_err());
    }

    #[test]
    fn peak_distance_feature() {
        // brute-force oracle: two isolated peaks 10 samples apart
        let mut x = vec![0.0; 40];
        x[10] = 1.0;
        x[20] = 0.9;
        let oracle_peaks: Vec<usize> = (1..x.len() - 1)
            .filter(|&i| x[i] > x[i - 1] && x[i] > x[i + 1] && x[i] >= 0.5)
            .collect();
        assert_eq!(oracle_peaks, vec![10, 20]);
        let expected = (oracle_peaks[1] - oracle_peaks[0]) as f64 / 20.0;
        assert_eq!(min_neighbor_peak_distance(&x, 20.0, 4.0), expected);
        assert_eq!(min_neighbor_peak_distance(&[0.0; 40], 20.0, 4.0), 4.0);
    }

    #[test]
    fn manifest_selection_and_hash() {
        let m = leg_manifest();
        let (hbc, idx) = m.select(Modality::Hbc);
        assert_eq!(hbc.len(), 18);
        assert_eq!(idx.len(), 18);
        assert_eq!(m.select(Modality::Imu).0.len(), 108);
        assert_ne!(hbc.hash, m.hash);
        assert_eq!(m.paired().len(), 4 * m.len());
    }

    proptest! {
        #[test]
        fn window_count_formula(len in 1usize..3000, w in 1usize..200, s in 1usize..200) {
            prop_assume!(s <= w);
            let positions = (0..len).step_by(s).filter(|&st| st + w <= len).count();
            prop_assert_eq!(window_count(len, w, s), positions);
            if len >= w {
                prop_assert_eq!(window_count(len, w, s), (len - w) / s + 1);
            }
        }
    }
}
