//! Nine time-domain statistics over raw channels and their jerk variants.
//! Used for the leg-exercise pipeline (all seven channels) and, restricted to
//! HBC and accelerometer, for the collaboration pipeline.

use std::sync::{Arc, OnceLock};

use super::{jerk, min_neighbor_peak_distance, stats, FeatureManifest, FeatureSpec, FeatureVector, SensorGroup};
use crate::error::Result;
use crate::types::{Channel, Window};

const STATS: [&str; 9] = [
    "mean",
    "std",
    "max",
    "min",
    "range",
    "mad",
    "energy",
    "iqr",
    "min_peak_dist",
];

const COLLAB_CHANNELS: [Channel; 4] = [Channel::Cap, Channel::AccX, Channel::AccY, Channel::AccZ];

fn group_of(ch: Channel) -> SensorGroup {
    match ch {
        Channel::Cap => SensorGroup::Hbc,
        Channel::AccX | Channel::AccY | Channel::AccZ => SensorGroup::Acc,
        _ => SensorGroup::Gyro,
    }
}

fn jerk_name(ch: Channel) -> String {
    match ch {
        Channel::Cap => "Cap_Jerk".into(),
        other => {
            let n = other.name();
            let (sensor, axis) = n.split_once('_').expect("axis channel");
            format!("{sensor}_Jerk_{axis}")
        }
    }
}

fn build_manifest(pipeline: &str, channels: &[Channel]) -> FeatureManifest {
    let mut feats = Vec::new();
    let derived = channels
        .iter()
        .map(|&c| (c.name().to_string(), c))
        .chain(channels.iter().map(|&c| (jerk_name(c), c)));
    for (signal, ch) in derived {
        for stat in STATS {
            feats.push(FeatureSpec {
                name: format!("{signal}.{stat}"),
                formula: stat.to_string(),
                sensors: vec![group_of(ch)],
            });
        }
    }
    FeatureManifest::new(pipeline, 1, feats).with_notes(vec![
        "min_peak_dist: detector rel_threshold 0.5, min distance 5 samples; fewer than two peaks emits the window duration".into(),
        "mad: median absolute deviation from the median; std: population".into(),
    ])
}

pub fn leg_manifest() -> Arc<FeatureManifest> {
    static M: OnceLock<Arc<FeatureManifest>> = OnceLock::new();
    M.get_or_init(|| Arc::new(build_manifest("leg", &Channel::ALL))).clone()
}

pub fn collab_manifest() -> Arc<FeatureManifest> {
    static M: OnceLock<Arc<FeatureManifest>> = OnceLock::new();
    M.get_or_init(|| Arc::new(build_manifest("collab", &COLLAB_CHANNELS))).clone()
}

fn nine_stats(x: &[f64], fs: f64, duration: f64, out: &mut Vec<f64>) {
    let (mx, mn) = (stats::max(x), stats::min(x));
    out.extend_from_slice(&[
        stats::mean(x),
        stats::std(x),
        mx,
        mn,
        mx - mn,
        stats::mad(x),
        stats::energy(x),
        stats::iqr(x),
        min_neighbor_peak_distance(x, fs, duration),
    ]);
}

fn extract(w: &Window, fs: f64, channels: &[Channel], manifest: Arc<FeatureManifest>) -> Result<FeatureVector> {
    let duration = w.length_samples as f64 / fs;
    let mut values = Vec::with_capacity(manifest.len());
    let raw: Vec<&[f64]> = channels.iter().map(|&c| w.channel(c)).collect::<Result<_>>()?;
    for x in &raw {
        nine_stats(x, fs, duration, &mut values);
    }
    for x in &raw {
        let j = if x.len() >= 2 { jerk(x, fs)? } else { vec![0.0] };
        nine_stats(&j, fs, duration, &mut values);
    }
    let mut fv = FeatureVector::new(manifest, values, w.label)?;
    fv.weight = w.weight;
    Ok(fv)
}

/// 14 derived channels x 9 statistics = 126 features (18 HBC, 108 IMU).
pub fn extract_features_leg(w: &Window, fs: f64) -> Result<FeatureVector> {
    extract(w, fs, &Channel::ALL, leg_manifest())
}

/// HBC and accelerometer channels with their jerks: 8 x 9 = 72 features.
pub fn extract_features_collab(w: &Window, fs: f64) -> Result<FeatureVector> {
    extract(w, fs, &COLLAB_CHANNELS, collab_manifest())
}
