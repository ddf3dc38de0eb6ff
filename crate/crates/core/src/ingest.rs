//! Session files, detrending and per-session HBC normalization.
//!
//! A session is stored as `<name>.csv` (frames, fixed column order) plus a
//! `<name>.json` sidecar holding [`SessionMeta`] and optional annotations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::counting::RepetitionAnnotation;
use crate::error::{Error, Result};
use crate::types::{validate_session, Channel, Label, SampleFrame, Session, SessionMeta};

pub const CSV_HEADER: [&str; 9] = [
    "t", "acc_x", "acc_y", "acc_z", "gyro_x", "gyro_y", "gyro_z", "cap_uV", "label",
];

/// Interval annotation; expanded to dense per-frame labels on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelInterval {
    pub start_t: f64,
    /// Inclusive.
    pub end_t: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(flatten)]
    pub meta: SessionMeta,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub repetitions: Vec<RepetitionAnnotation>,
    /// When present, the CSV label column may be empty and labels come from here.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub label_intervals: Vec<LabelInterval>,
}

/// A loaded session with the annotations carried by its sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionFile {
    pub session: Session,
    pub repetitions: Vec<RepetitionAnnotation>,
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Expands intervals into dense labels; frames not covered are DISCARD.
/// Later intervals win where intervals overlap.
pub fn expand_intervals(times: &[f64], intervals: &[LabelInterval], set: &crate::types::LabelSet) -> Result<Vec<Label>> {
    let mut labels = vec![Label::DISCARD; times.len()];
    for iv in intervals {
        let l = set.label_of(&iv.label).ok_or_else(|| {
            Error::Validation(vec![format!("interval label `{}` outside label set", iv.label)])
        })?;
        for (i, t) in times.iter().enumerate() {
            if *t >= iv.start_t && *t <= iv.end_t {
                labels[i] = l;
            }
        }
    }
    Ok(labels)
}

pub fn load_session(path: impl AsRef<Path>) -> Result<Session> {
    Ok(load_session_file(path)?.session)
}

pub fn load_session_file(path: impl AsRef<Path>) -> Result<SessionFile> {
    let path = path.as_ref();
    let sidecar: Sidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)?;
    let set = sidecar.meta.label_set.label_set();

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(fs::File::open(path)?);
    let header = rdr.headers()?.clone();
    for (i, expected) in CSV_HEADER.iter().enumerate() {
        match header.get(i) {
            Some(h) if h == *expected => {}
            Some(h) if header.iter().any(|x| x == *expected) => {
                return Err(Error::Format(format!(
                    "column `{expected}` must be at position {i}, found `{h}`"
                )))
            }
            _ => return Err(Error::Format(format!("missing column `{expected}`"))),
        }
    }
    if header.len() != CSV_HEADER.len() {
        return Err(Error::Format(format!(
            "expected {} columns, header has {}",
            CSV_HEADER.len(),
            header.len()
        )));
    }

    let mut frames = Vec::new();
    let mut labels = Vec::new();
    let mut unknown = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let line = row + 2;
        let rec = rec.map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        let num = |i: usize| -> Result<f64> {
            rec[i].trim().parse::<f64>().map_err(|e| Error::Parse {
                line,
                msg: format!("column `{}`: {e}", CSV_HEADER[i]),
            })
        };
        frames.push(SampleFrame {
            t: num(0)?,
            acc: [num(1)?, num(2)?, num(3)?],
            gyro: [num(4)?, num(5)?, num(6)?],
            cap_uv: num(7)?,
        });
        let name = rec[8].trim();
        if name.is_empty() && !sidecar.label_intervals.is_empty() {
            labels.push(Label::DISCARD);
        } else {
            match set.label_of(name) {
                Some(l) => labels.push(l),
                None => {
                    unknown.push(format!("line {line}: label `{name}` not in {}", set.id.as_str()));
                    labels.push(Label::DISCARD);
                }
            }
        }
    }
    if !unknown.is_empty() {
        return Err(Error::Validation(unknown));
    }
    if !sidecar.label_intervals.is_empty() {
        let times: Vec<f64> = frames.iter().map(|f| f.t).collect();
        let expanded = expand_intervals(&times, &sidecar.label_intervals, set)?;
        for (l, e) in labels.iter_mut().zip(expanded) {
            if l.is_discard() {
                *l = e;
            }
        }
    }

    let session = Session {
        meta: sidecar.meta,
        frames,
        labels,
    };
    let violations = validate_session(&session);
    if !violations.is_empty() {
        return Err(Error::Validation(violations.iter().map(|v| v.to_string()).collect()));
    }
    Ok(SessionFile {
        session,
        repetitions: sidecar.repetitions,
    })
}

/// Canonical CSV bytes: shortest round-trip float formatting, `\n` endings.
pub fn session_csv_bytes(s: &Session) -> Result<Vec<u8>> {
    let set = s.label_set();
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for (f, l) in s.frames.iter().zip(&s.labels) {
        w.write_record([
            f.t.to_string(),
            f.acc[0].to_string(),
            f.acc[1].to_string(),
            f.acc[2].to_string(),
            f.gyro[0].to_string(),
            f.gyro[1].to_string(),
            f.gyro[2].to_string(),
            f.cap_uv.to_string(),
            set.name(*l).to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn sidecar_json_bytes(s: &Session, repetitions: &[RepetitionAnnotation]) -> Result<Vec<u8>> {
    let sc = Sidecar {
        meta: s.meta.clone(),
        repetitions: repetitions.to_vec(),
        label_intervals: Vec::new(),
    };
    let mut v = serde_json::to_vec_pretty(&sc)?;
    v.push(b'\n');
    Ok(v)
}

/// Writes `path` via a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn save_session(path: impl AsRef<Path>, s: &Session, repetitions: &[RepetitionAnnotation]) -> Result<()> {
    let path = path.as_ref();
    write_atomic(path, &session_csv_bytes(s)?)?;
    write_atomic(&sidecar_path(path), &sidecar_json_bytes(s, repetitions)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetrendMode {
    #[default]
    None,
    Mean,
    Linear,
}

pub fn detrend(series: &[f64], mode: DetrendMode) -> Result<Vec<f64>> {
    match mode {
        DetrendMode::None => Ok(series.to_vec()),
        DetrendMode::Mean => {
            if series.is_empty() {
                return Ok(Vec::new());
            }
            let m = series.iter().sum::<f64>() / series.len() as f64;
            Ok(series.iter().map(|v| v - m).collect())
        }
        DetrendMode::Linear => {
            let n = series.len();
            if n < 2 {
                return Err(Error::domain("linear detrend needs at least two samples"));
            }
            // Least squares against a centered index keeps the normal equations diagonal.
            let c = (n - 1) as f64 / 2.0;
            let ym = series.iter().sum::<f64>() / n as f64;
            let (mut sxy, mut sxx) = (0.0, 0.0);
            for (i, y) in series.iter().enumerate() {
                let x = i as f64 - c;
                sxy += x * (y - ym);
                sxx += x * x;
            }
            let slope = sxy / sxx;
            Ok(series
                .iter()
                .enumerate()
                .map(|(i, y)| y - ym - slope * (i as f64 - c))
                .collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessConfig {
    #[serde(default)]
    pub detrend: DetrendMode,
    /// Class whose HBC range defines the normalization; `None` uses the
    /// whole session, `Some("")` is rejected.
    #[serde(default)]
    pub hbc_anchor_class: Option<String>,
    /// Skip HBC normalization entirely.
    #[serde(default)]
    pub skip_hbc_normalization: bool,
    #[serde(default = "default_norm_range")]
    pub hbc_norm_range: (f64, f64),
    #[serde(default = "default_clip")]
    pub feature_clip: (f64, f64),
}

fn default_norm_range() -> (f64, f64) {
    (-500.0, 500.0)
}

fn default_clip() -> (f64, f64) {
    (0.01, 0.99)
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            detrend: DetrendMode::None,
            hbc_anchor_class: None,
            skip_hbc_normalization: false,
            hbc_norm_range: default_norm_range(),
            feature_clip: default_clip(),
        }
    }
}

impl PreprocessConfig {
    /// Leg exercises: raw HBC anchored on leg-front-lift.
    pub fn leg_default() -> Self {
        PreprocessConfig {
            hbc_anchor_class: Some("leg-front-lift".into()),
            ..Default::default()
        }
    }

    /// Collaboration: linear detrend then whole-session HBC range.
    pub fn collab_default() -> Self {
        PreprocessConfig {
            detrend: DetrendMode::Linear,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.hbc_norm_range;
        if !(lo < hi) {
            return Err(Error::config("preprocess.hbc_norm_range", "lo must be below hi"));
        }
        let (a, b) = self.feature_clip;
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::config("preprocess.feature_clip", "need 0 <= lo_q < hi_q <= 1"));
        }
        if matches!(self.hbc_anchor_class.as_deref(), Some("")) {
            return Err(Error::config("preprocess.hbc_anchor_class", "empty class name"));
        }
        Ok(())
    }
}

/// Affine `scale * x + offset` mapping the anchor frames' HBC min/max onto
/// `cfg.hbc_norm_range`, applied to the whole session.
pub fn hbc_affine(s: &Session, cfg: &PreprocessConfig) -> Result<(f64, f64)> {
    let values: Vec<f64> = match &cfg.hbc_anchor_class {
        None => s.frames.iter().map(|f| f.cap_uv).collect(),
        Some(name) => {
            let anchor = s
                .label_set()
                .label_of(name)
                .filter(|l| !l.is_discard())
                .ok_or_else(|| Error::AnchorMissing(name.clone()))?;
            s.frames
                .iter()
                .zip(&s.labels)
                .filter(|(_, l)| **l == anchor)
                .map(|(f, _)| f.cap_uv)
                .collect()
        }
    };
    if values.is_empty() {
        return Err(Error::AnchorMissing(
            cfg.hbc_anchor_class.clone().unwrap_or_else(|| "<session>".into()),
        ));
    }
    let mn = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mx = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(mx > mn) {
        return Err(Error::DegenerateScale(format!(
            "anchor HBC segment of session {} is constant",
            s.meta.id
        )));
    }
    let (lo, hi) = cfg.hbc_norm_range;
    let scale = (hi - lo) / (mx - mn);
    Ok((scale, lo - scale * mn))
}

pub fn normalize_session_hbc(s: &Session, cfg: &PreprocessConfig) -> Result<Session> {
    let (scale, offset) = hbc_affine(s, cfg)?;
    let mut out = s.clone();
    for f in &mut out.frames {
        f.cap_uv = scale * f.cap_uv + offset;
    }
    Ok(out)
}

/// Detrends every channel, then normalizes HBC unless disabled.
pub fn preprocess_session(s: &Session, cfg: &PreprocessConfig) -> Result<Session> {
    cfg.validate()?;
    let mut out = s.clone();
    if cfg.detrend != DetrendMode::None {
        for ch in Channel::ALL {
            let d = detrend(&s.channel(ch), cfg.detrend)?;
            for (f, v) in out.frames.iter_mut().zip(d) {
                *f.channel_mut(ch) = v;
            }
        }
    }
    if cfg.skip_hbc_normalization {
        Ok(out)
    } else {
        normalize_session_hbc(&out, cfg)
    }
}
