//! Time/frequency feature set for the gym pipeline.
//!
//! Eighteen derived signals (seven raw channels, their jerks, and the four
//! accelerometer/gyroscope magnitudes) are each described by 13 time-domain
//! and 20 frequency-domain statistics; 21 pairwise correlations between the
//! raw channels complete the vector: 18 * 33 + 21 = 615.

use std::sync::{Arc, OnceLock};

use super::{jerk, magnitude, stats, FeatureManifest, FeatureSpec, FeatureVector, SensorGroup};
use crate::error::{Error, Result};
use crate::types::{Channel, Window};

pub const GYM_FEATURE_COUNT: usize = 615;

/// Zero-padded transform length for band energies: 64 one-sided bins.
const BAND_FFT_LEN: usize = 128;
const BAND_BINS: usize = 64;
const BANDS: usize = 8;
const AR_ORDER: usize = 4;

const TIME_STATS: [&str; 9] = ["mean", "std", "max", "min", "mad", "sma", "energy", "iqr", "entropy"];
const FREQ_STATS: [&str; 12] = [
    "mean", "std", "max", "min", "mad", "sma", "energy", "iqr", "maxInds", "meanFreq", "skewness", "kurtosis",
];

struct Derived {
    name: String,
    sensors: Vec<SensorGroup>,
    series: Vec<f64>,
}

fn signal_layout() -> Vec<(String, SensorGroup)> {
    let mut out = Vec::new();
    for ch in Channel::ALL {
        out.push((ch.name().to_string(), group(ch)));
    }
    for ch in Channel::ALL {
        let name = match ch {
            Channel::Cap => "Cap_Jerk".to_string(),
            other => {
                let (s, a) = other.name().split_once('_').expect("axis channel");
                format!("{s}_Jerk_{a}")
            }
        };
        out.push((name, group(ch)));
    }
    out.push(("Acc_Mag".into(), SensorGroup::Acc));
    out.push(("Gyro_Mag".into(), SensorGroup::Gyro));
    out.push(("Acc_Jerk_Mag".into(), SensorGroup::Acc));
    out.push(("Gyro_Jerk_Mag".into(), SensorGroup::Gyro));
    out
}

fn group(ch: Channel) -> SensorGroup {
    match ch {
        Channel::Cap => SensorGroup::Hbc,
        Channel::AccX | Channel::AccY | Channel::AccZ => SensorGroup::Acc,
        _ => SensorGroup::Gyro,
    }
}

fn build_manifest() -> FeatureManifest {
    let mut feats = Vec::with_capacity(GYM_FEATURE_COUNT);
    let layout = signal_layout();
    for (sig, g) in &layout {
        let mut push = |name: String, formula: &str| {
            feats.push(FeatureSpec {
                name,
                formula: formula.to_string(),
                sensors: vec![*g],
            })
        };
        for st in TIME_STATS {
            push(format!("t_{sig}.{st}"), st);
        }
        for k in 1..=AR_ORDER {
            push(format!("t_{sig}.arCoeff{k}"), "ar_burg4");
        }
        for st in FREQ_STATS {
            push(format!("f_{sig}.{st}"), st);
        }
        for b in 1..=BANDS {
            push(format!("f_{sig}.bandsEnergy{b}"), "band_energy_64x8");
        }
    }
    for (i, a) in Channel::ALL.iter().enumerate() {
        for b in &Channel::ALL[i + 1..] {
            let mut sensors = vec![group(*a), group(*b)];
            sensors.dedup();
            feats.push(FeatureSpec {
                name: format!("t_corr.{}-{}", a.name(), b.name()),
                formula: "pearson".into(),
                sensors,
            });
        }
    }
    FeatureManifest::new("gym", 1, feats).with_notes(vec![
        "sma: mean absolute value per sample (normalization constant is a local choice)".into(),
        "entropy: Shannon entropy (nats) of normalized magnitudes; on f_ signals this is spectral entropy".into(),
        "f_ signals: one-sided magnitude spectrum of the mean-removed window, window-length FFT".into(),
        "meanFreq: magnitude-weighted mean frequency in Hz, 0 for a flat window".into(),
        "maxInds: bin index of the spectral maximum; skewness/kurtosis: spectral shape moments over bin index (kurtosis is excess)".into(),
        "bandsEnergy: 128-point zero-padded FFT, first 64 bins, 8 contiguous bands of 8 bins, squared magnitude sum / window length".into(),
        "arCoeff: Burg AR(4), convention x[n] + a1 x[n-1] + ... + a4 x[n-4] = e[n]".into(),
        "corr: Pearson correlation of raw time-domain channels, 0 when either is constant".into(),
    ])
}

pub fn gym_manifest() -> Arc<FeatureManifest> {
    static M: OnceLock<Arc<FeatureManifest>> = OnceLock::new();
    M.get_or_init(|| {
        let m = build_manifest();
        assert_eq!(m.len(), GYM_FEATURE_COUNT, "gym manifest must list 615 features");
        Arc::new(m)
    })
    .clone()
}

fn derived_signals(w: &Window, fs: f64) -> Result<Vec<Derived>> {
    let raw: Vec<Vec<f64>> = Channel::ALL
        .iter()
        .map(|&c| w.channel(c).map(<[f64]>::to_vec))
        .collect::<Result<_>>()?;
    if raw[0].len() < 4 {
        return Err(Error::domain("gym features need at least 4 samples per window"));
    }
    let jerks: Vec<Vec<f64>> = raw.iter().map(|x| jerk(x, fs)).collect::<Result<_>>()?;
    let layout = signal_layout();
    let mut series: Vec<Vec<f64>> = Vec::with_capacity(layout.len());
    series.extend(raw.iter().cloned());
    series.extend(jerks.iter().cloned());
    series.push(magnitude(&raw[1], &raw[2], &raw[3])?);
    series.push(magnitude(&raw[4], &raw[5], &raw[6])?);
    series.push(magnitude(&jerks[1], &jerks[2], &jerks[3])?);
    series.push(magnitude(&jerks[4], &jerks[5], &jerks[6])?);
    Ok(layout
        .into_iter()
        .zip(series)
        .map(|((name, g), series)| Derived {
            name,
            sensors: vec![g],
            series,
        })
        .collect())
}

fn time_features(x: &[f64], out: &mut Vec<f64>) {
    out.extend_from_slice(&[
        stats::mean(x),
        stats::std(x),
        stats::max(x),
        stats::min(x),
        stats::mad(x),
        stats::sma(x),
        stats::energy(x),
        stats::iqr(x),
        stats::entropy(x),
    ]);
    out.extend(stats::ar_burg(x, AR_ORDER));
}

fn mean_freq(spec: &[f64], n: usize, fs: f64) -> f64 {
    let total: f64 = spec.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    spec.iter().enumerate().map(|(k, m)| k as f64 * m).sum::<f64>() / total * fs / n as f64
}

fn freq_features(x: &[f64], fs: f64, out: &mut Vec<f64>) {
    let spec = stats::magnitude_spectrum(x, x.len());
    let (skew, kurt) = stats::spectral_shape(&spec);
    out.extend_from_slice(&[
        stats::mean(&spec),
        stats::std(&spec),
        stats::max(&spec),
        stats::min(&spec),
        stats::mad(&spec),
        stats::sma(&spec),
        stats::energy(&spec),
        stats::iqr(&spec),
        stats::max_index(&spec) as f64,
        mean_freq(&spec, x.len(), fs),
        skew,
        kurt,
    ]);
    let padded = stats::magnitude_spectrum(x, BAND_FFT_LEN.max(x.len()));
    out.extend(stats::band_energies(&padded, BAND_BINS, BANDS, x.len()));
}

/// 615 time/frequency features for one window of the seven raw channels.
pub fn extract_features_gym(w: &Window, fs: f64) -> Result<FeatureVector> {
    let manifest = gym_manifest();
    let signals = derived_signals(w, fs)?;
    let mut values = Vec::with_capacity(GYM_FEATURE_COUNT);
    for s in &signals {
        debug_assert_eq!(s.sensors.len(), 1, "{}", s.name);
        time_features(&s.series, &mut values);
        freq_features(&s.series, fs, &mut values);
    }
    for i in 0..7 {
        for j in i + 1..7 {
            values.push(stats::correlation(&signals[i].series, &signals[j].series));
        }
    }
    let mut fv = FeatureVector::new(manifest, values, w.label)?;
    fv.weight = w.weight;
    Ok(fv)
}
