//! Repetition counting: FFT low-pass smoothing, peak detection, per-source
//! counts, count fusion and the counting-accuracy metric.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::magnitude;
use crate::types::{Label, SampleFrame, Session, LEG7};

/// Classes whose repetitions are fast enough to need the wider passband.
pub const FAST_CLASSES: [&str; 4] = ["Running", "Walking", "Ropeskipping", "Riding"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeakConfig {
    /// Fraction of the series maximum a local maximum must reach.
    pub rel_threshold: f64,
    /// Minimum spacing between kept peaks, seconds.
    pub min_distance: f64,
    /// Low-pass cutoff applied before peak picking, Hz.
    pub smoothing_cutoff: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        PeakConfig {
            rel_threshold: 0.3,
            min_distance: 0.5,
            smoothing_cutoff: 2.5,
        }
    }
}

impl PeakConfig {
    /// Preset for a class: 5 Hz / 0.2 s for the fast classes, 1.0 s spacing
    /// for the leg exercises, 2.5 Hz / 0.5 s otherwise.
    pub fn for_class(name: &str) -> Self {
        if FAST_CLASSES.contains(&name) {
            PeakConfig {
                rel_threshold: 0.3,
                min_distance: 0.2,
                smoothing_cutoff: 5.0,
            }
        } else if LEG7.classes.contains(&name) {
            PeakConfig {
                min_distance: 1.0,
                ..PeakConfig::default()
            }
        } else {
            PeakConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rel_threshold) {
            return Err(Error::domain("rel_threshold must lie in [0, 1]"));
        }
        if !(self.min_distance >= 0.0) {
            return Err(Error::domain("min_distance must be nonnegative"));
        }
        if !(self.smoothing_cutoff > 0.0) {
            return Err(Error::domain("smoothing_cutoff must be positive"));
        }
        Ok(())
    }
}

/// Zeroes every FFT bin above `cutoff_hz` (and its conjugate mirror).
///
/// The mean is removed before the transform and added back afterwards, so the
/// DC component passes through untouched and constant input is returned as-is.
pub fn fft_smooth(series: &[f64], cutoff_hz: f64, fs: f64) -> Result<Vec<f64>> {
    let n = series.len();
    if n < 4 {
        return Err(Error::domain(format!("fft_smooth needs at least 4 samples, got {n}")));
    }
    if !(fs > 0.0) || !(cutoff_hz >= 0.0) {
        return Err(Error::domain("fft_smooth needs fs > 0 and cutoff >= 0"));
    }
    if cutoff_hz * 2.0 >= fs {
        return Err(Error::domain(format!(
            "cutoff {cutoff_hz} Hz is at or above Nyquist for fs {fs} Hz"
        )));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&x| Complex::new(x - mean, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    buf[0] = Complex::new(0.0, 0.0);
    for k in 1..=n / 2 {
        let freq = k as f64 * fs / n as f64;
        if freq > cutoff_hz {
            buf[k] = Complex::new(0.0, 0.0);
            buf[n - k] = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(buf.iter().map(|c| c.re * scale + mean).collect())
}

/// Indices of local maxima at or above `rel_threshold * max(series)`, thinned
/// greedily (highest first) so kept peaks are at least `min_distance` apart.
///
/// A flat top bounded by lower samples counts once, at its left-middle index.
pub fn detect_peaks(series: &[f64], cfg: &PeakConfig, fs: f64) -> Vec<usize> {
    let n = series.len();
    if n < 3 {
        return Vec::new();
    }
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = cfg.rel_threshold * max;

    let mut candidates = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if series[i] > series[i - 1] {
            let mut j = i;
            while j + 1 < n && series[j + 1] == series[i] {
                j += 1;
            }
            if j + 1 < n && series[j + 1] < series[i] {
                let idx = (i + j) / 2;
                if series[idx] >= threshold {
                    candidates.push(idx);
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }

    let min_gap = cfg.min_distance * fs;
    if min_gap <= 0.0 || candidates.len() < 2 {
        return candidates;
    }
    let mut by_height = candidates.clone();
    by_height.sort_by(|&a, &b| series[b].total_cmp(&series[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for c in by_height {
        if kept.iter().all(|&k| (c.abs_diff(k) as f64) >= min_gap) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

/// `1 - |detected - real| / real`; negative for gross overcounts.
pub fn counting_accuracy(detected: usize, real: usize) -> Result<f64> {
    if real == 0 {
        return Err(Error::domain("real repetition count must be positive"));
    }
    Ok(1.0 - (detected as f64 - real as f64).abs() / real as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountSource {
    CapRaw,
    AccAxis(usize),
    GyroAxis(usize),
    AccMag,
    GyroMag,
}

impl CountSource {
    pub fn is_cap(self) -> bool {
        matches!(self, CountSource::CapRaw)
    }

    pub fn is_acc(self) -> bool {
        matches!(self, CountSource::AccAxis(_) | CountSource::AccMag)
    }

    pub fn is_gyro(self) -> bool {
        matches!(self, CountSource::GyroAxis(_) | CountSource::GyroMag)
    }

    pub fn name(self) -> String {
        const AXES: [&str; 3] = ["x", "y", "z"];
        match self {
            CountSource::CapRaw => "cap".into(),
            CountSource::AccAxis(a) => format!("acc_{}", AXES.get(a).unwrap_or(&"?")),
            CountSource::GyroAxis(a) => format!("gyro_{}", AXES.get(a).unwrap_or(&"?")),
            CountSource::AccMag => "acc_mag".into(),
            CountSource::GyroMag => "gyro_mag".into(),
        }
    }
}

/// Leg mode counts HBC peaks on the raw signal; gym mode smooths every source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountingMode {
    Leg,
    Gym,
}

pub fn source_series(frames: &[SampleFrame], source: CountSource) -> Result<Vec<f64>> {
    let axis = |a: usize| -> Result<usize> {
        if a < 3 {
            Ok(a)
        } else {
            Err(Error::domain(format!("axis index {a} out of range")))
        }
    };
    Ok(match source {
        CountSource::CapRaw => frames.iter().map(|f| f.cap_uv).collect(),
        CountSource::AccAxis(a) => {
            let a = axis(a)?;
            frames.iter().map(|f| f.acc[a]).collect()
        }
        CountSource::GyroAxis(a) => {
            let a = axis(a)?;
            frames.iter().map(|f| f.gyro[a]).collect()
        }
        CountSource::AccMag => {
            let c = |k: usize| frames.iter().map(|f| f.acc[k]).collect::<Vec<_>>();
            magnitude(&c(0), &c(1), &c(2))?
        }
        CountSource::GyroMag => {
            let c = |k: usize| frames.iter().map(|f| f.gyro[k]).collect::<Vec<_>>();
            magnitude(&c(0), &c(1), &c(2))?
        }
    })
}

/// Counts repetitions in a single-class segment from one signal source.
pub fn count_source(
    segment: &[SampleFrame],
    source: CountSource,
    cfg: &PeakConfig,
    fs: f64,
    mode: CountingMode,
) -> Result<usize> {
    cfg.validate()?;
    if segment.is_empty() {
        return Err(Error::domain("empty segment"));
    }
    let raw = source_series(segment, source)?;
    let series = if source.is_cap() && mode == CountingMode::Leg {
        raw
    } else {
        fft_smooth(&raw, cfg.smoothing_cutoff, fs)?
    };
    Ok(detect_peaks(&series, cfg, fs).len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionStrategy {
    ImuMean,
    ClosestTwoMean,
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Combines per-source counts into one.
///
/// `closest_two_mean` needs exactly three counts and averages the pair with
/// the smallest gap. Ties go to a pair containing the HBC count; if both tied
/// pairs contain it, the earlier pair in input order wins.
pub fn fuse_counts(counts: &[(CountSource, usize)], strategy: FusionStrategy) -> Result<usize> {
    match strategy {
        FusionStrategy::ImuMean => {
            let imu: Vec<usize> = counts
                .iter()
                .filter(|(s, _)| !s.is_cap())
                .map(|&(_, c)| c)
                .collect();
            if imu.len() < 2 {
                return Err(Error::domain("imu_mean needs at least two IMU counts"));
            }
            Ok(round_half_up(
                imu.iter().sum::<usize>() as f64 / imu.len() as f64,
            ))
        }
        FusionStrategy::ClosestTwoMean => {
            if counts.len() != 3 {
                return Err(Error::domain(format!(
                    "closest_two_mean needs exactly 3 counts, got {}",
                    counts.len()
                )));
            }
            let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
            let mut best: Option<((usize, usize), usize, bool)> = None;
            for (i, j) in pairs {
                let gap = counts[i].1.abs_diff(counts[j].1);
                let has_cap = counts[i].0.is_cap() || counts[j].0.is_cap();
                let better = match best {
                    None => true,
                    Some((_, g, c)) => gap < g || (gap == g && has_cap && !c),
                };
                if better {
                    best = Some(((i, j), gap, has_cap));
                }
            }
            let ((i, j), _, _) = best.expect("three pairs considered");
            Ok(round_half_up((counts[i].1 + counts[j].1) as f64 / 2.0))
        }
    }
}

/// Ground-truth repetitions for one labeled segment, carried in the session
/// sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepetitionAnnotation {
    pub class: String,
    pub start_index: usize,
    pub end_index: usize,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountingConfig {
    pub mode: CountingMode,
    pub sources: Vec<CountSource>,
    #[serde(default)]
    pub fusions: Vec<FusionStrategy>,
    /// Per-class overrides of the preset peak parameters.
    #[serde(default)]
    pub overrides: std::collections::BTreeMap<String, PeakConfig>,
}

impl CountingConfig {
    /// HBC raw, accelerometer Z and gyroscope Y, as used for leg exercises.
    pub fn leg_default() -> Self {
        CountingConfig {
            mode: CountingMode::Leg,
            sources: vec![
                CountSource::AccAxis(2),
                CountSource::GyroAxis(1),
                CountSource::CapRaw,
            ],
            fusions: vec![FusionStrategy::ImuMean, FusionStrategy::ClosestTwoMean],
            overrides: Default::default(),
        }
    }

    /// Magnitudes of both IMU sensors plus HBC, all smoothed.
    pub fn gym_default() -> Self {
        CountingConfig {
            mode: CountingMode::Gym,
            sources: vec![CountSource::AccMag, CountSource::GyroMag, CountSource::CapRaw],
            fusions: vec![FusionStrategy::ImuMean, FusionStrategy::ClosestTwoMean],
            overrides: Default::default(),
        }
    }

    pub fn peak_config(&self, class: &str) -> PeakConfig {
        self.overrides
            .get(class)
            .copied()
            .unwrap_or_else(|| PeakConfig::for_class(class))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceResult {
    pub source: String,
    pub count: usize,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentCount {
    pub session_id: String,
    pub class: String,
    pub start_index: usize,
    pub end_index: usize,
    pub real: Option<usize>,
    pub peak_config: PeakConfig,
    pub sources: Vec<SourceResult>,
    pub fused: Vec<SourceResult>,
}

/// Counts every annotated segment of a session (or every non-null labeled run
/// when the session carries no repetition annotations).
pub fn count_session(
    session: &Session,
    annotations: &[RepetitionAnnotation],
    cfg: &CountingConfig,
) -> Result<Vec<SegmentCount>> {
    let set = session.label_set();
    let segments: Vec<(String, usize, usize, Option<usize>)> = if annotations.is_empty() {
        session
            .segments()
            .into_iter()
            .filter(|(l, _, _)| !l.is_discard() && Some(*l) != set.null_class)
            .map(|(l, s, e)| (set.name(l).to_string(), s, e, None))
            .collect()
    } else {
        annotations
            .iter()
            .map(|a| (a.class.clone(), a.start_index, a.end_index, Some(a.repetitions)))
            .collect()
    };

    let fs = session.fs();
    let mut out = Vec::with_capacity(segments.len());
    for (class, start, end, real) in segments {
        if start >= end || end > session.len() {
            return Err(Error::schema(format!(
                "segment [{start}, {end}) out of range for session {}",
                session.meta.id
            )));
        }
        let peak_cfg = cfg.peak_config(&class);
        let frames = &session.frames[start..end];
        let mut per_source = Vec::new();
        let mut sources = Vec::new();
        for &src in &cfg.sources {
            let count = count_source(frames, src, &peak_cfg, fs, cfg.mode)?;
            per_source.push((src, count));
            sources.push(SourceResult {
                source: src.name(),
                count,
                accuracy: real.map(|r| counting_accuracy(count, r)).transpose()?,
            });
        }
        let mut fused = Vec::new();
        for &strategy in &cfg.fusions {
            let count = fuse_counts(&per_source, strategy)?;
            let name = match strategy {
                FusionStrategy::ImuMean => "imu_mean",
                FusionStrategy::ClosestTwoMean => "closest_two_mean",
            };
            fused.push(SourceResult {
                source: name.into(),
                count,
                accuracy: real.map(|r| counting_accuracy(count, r)).transpose()?,
            });
        }
        out.push(SegmentCount {
            session_id: session.meta.id.clone(),
            class,
            start_index: start,
            end_index: end,
            real,
            peak_config: peak_cfg,
            sources,
            fused,
        });
    }
    Ok(out)
}

/// Runs of a single label, ignoring DISCARD.
pub fn labeled_segments(labels: &[Label]) -> Vec<(Label, usize, usize)> {
    crate::types::label_runs(labels)
        .into_iter()
        .filter(|(l, _, _)| !l.is_discard())
        .collect()
}
