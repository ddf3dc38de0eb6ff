//! Shared domain types: frames, sessions, label taxonomies and windows.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class index inside a [`LabelSet`]. `Label::DISCARD` marks frames that must
/// never reach a window (missing data, unannotatable intervals).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label(pub u16);

impl Label {
    pub const DISCARD: Label = Label(u16::MAX);
    pub const DISCARD_NAME: &'static str = "DISCARD";

    pub fn is_discard(self) -> bool {
        self == Label::DISCARD
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LabelSetId {
    #[serde(rename = "LEG7")]
    Leg7,
    #[serde(rename = "GYM12")]
    Gym12,
    #[serde(rename = "COLLAB")]
    Collab,
    /// Single-user collaboration targets (A2/A8 folded into Null).
    #[serde(rename = "COLLAB_SINGLE")]
    CollabSingle,
    /// Pairwise collaboration targets derived from two aligned users.
    #[serde(rename = "COLLAB_PAIR")]
    CollabPair,
}

impl LabelSetId {
    pub fn label_set(self) -> &'static LabelSet {
        match self {
            LabelSetId::Leg7 => &LEG7,
            LabelSetId::Gym12 => &GYM12,
            LabelSetId::Collab => &COLLAB,
            LabelSetId::CollabSingle => &COLLAB_SINGLE,
            LabelSetId::CollabPair => &COLLAB_PAIR,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LabelSetId::Leg7 => "LEG7",
            LabelSetId::Gym12 => "GYM12",
            LabelSetId::Collab => "COLLAB",
            LabelSetId::CollabSingle => "COLLAB_SINGLE",
            LabelSetId::CollabPair => "COLLAB_PAIR",
        }
    }
}

#[derive(Debug)]
pub struct LabelSet {
    pub id: LabelSetId,
    pub classes: &'static [&'static str],
    pub null_class: Option<Label>,
}

pub static LEG7: LabelSet = LabelSet {
    id: LabelSetId::Leg7,
    classes: &[
        "leg-front-lift",
        "leg-side-lift",
        "leg-back-lift",
        "standard-squat",
        "cross-squat",
        "jump-squat",
        "side-squat",
    ],
    null_class: None,
};

pub static GYM12: LabelSet = LabelSet {
    id: LabelSetId::Gym12,
    classes: &[
        "Adductor",
        "Armcurl",
        "Benchpress",
        "Legcurl",
        "Legpress",
        "Riding",
        "Ropeskipping",
        "Running",
        "Squat",
        "Stairsclimber",
        "Walking",
        "Null",
    ],
    null_class: Some(Label(11)),
};

/// A1 start/stop steps, A2 idle, A3 walk alone, A4 carry alone, A5 carry
/// together, A6 lift, A7 drop, A8 screwing, A9 undefined, A10 out of camera.
pub static COLLAB: LabelSet = LabelSet {
    id: LabelSetId::Collab,
    classes: &["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9", "A10"],
    null_class: None,
};

pub static COLLAB_SINGLE: LabelSet = LabelSet {
    id: LabelSetId::CollabSingle,
    classes: &["Null", "A3", "A4", "A5", "A6", "A7"],
    null_class: Some(Label(0)),
};

pub static COLLAB_PAIR: LabelSet = LabelSet {
    id: LabelSetId::CollabPair,
    classes: &["Null", "CarryTogether", "LiftTogether", "DropTogether"],
    null_class: Some(Label(0)),
};

impl LabelSet {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn contains(&self, label: Label) -> bool {
        label.index() < self.classes.len()
    }

    pub fn name(&self, label: Label) -> &'static str {
        if label.is_discard() {
            Label::DISCARD_NAME
        } else {
            self.classes.get(label.index()).copied().unwrap_or("?")
        }
    }

    /// Resolves a class name; `DISCARD` resolves to the sentinel.
    pub fn label_of(&self, name: &str) -> Option<Label> {
        if name == Label::DISCARD_NAME {
            return Some(Label::DISCARD);
        }
        self.classes
            .iter()
            .position(|c| *c == name)
            .map(|i| Label(i as u16))
    }

    pub fn require(&self, name: &str) -> Result<Label> {
        self.label_of(name).ok_or_else(|| {
            Error::schema(format!("class `{name}` is not in label set {}", self.id.as_str()))
        })
    }

    pub fn class_names(&self) -> Vec<String> {
        self.classes.iter().map(|s| s.to_string()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorPosition {
    Wrist,
    Calf,
    Pocket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccUnit {
    #[serde(rename = "m/s2")]
    MetersPerSecondSquared,
    #[serde(rename = "g")]
    StandardGravity,
}

/// One synchronized sample of the seven raw channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleFrame {
    pub t: f64,
    pub acc: [f64; 3],
    /// deg/s
    pub gyro: [f64; 3],
    /// Body-potential deviation in microvolts.
    pub cap_uv: f64,
}

impl SampleFrame {
    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.cap_uv.is_finite()
            && self.acc.iter().all(|v| v.is_finite())
            && self.gyro.iter().all(|v| v.is_finite())
    }

    pub fn channel(&self, ch: Channel) -> f64 {
        match ch {
            Channel::Cap => self.cap_uv,
            Channel::AccX => self.acc[0],
            Channel::AccY => self.acc[1],
            Channel::AccZ => self.acc[2],
            Channel::GyroX => self.gyro[0],
            Channel::GyroY => self.gyro[1],
            Channel::GyroZ => self.gyro[2],
        }
    }

    pub fn channel_mut(&mut self, ch: Channel) -> &mut f64 {
        match ch {
            Channel::Cap => &mut self.cap_uv,
            Channel::AccX => &mut self.acc[0],
            Channel::AccY => &mut self.acc[1],
            Channel::AccZ => &mut self.acc[2],
            Channel::GyroX => &mut self.gyro[0],
            Channel::GyroY => &mut self.gyro[1],
            Channel::GyroZ => &mut self.gyro[2],
        }
    }
}

/// Session metadata, stored in the JSON sidecar next to the frame CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub id: String,
    pub user_id: String,
    pub session_index: u32,
    pub sensor_position: SensorPosition,
    pub sample_rate_hz: f64,
    pub label_set: LabelSetId,
    pub acc_unit: AccUnit,
    /// Collaboration group, when the session belongs to one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub meta: SessionMeta,
    pub frames: Vec<SampleFrame>,
    /// Dense per-frame labels, same length as `frames`.
    pub labels: Vec<Label>,
}

impl Session {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn label_set(&self) -> &'static LabelSet {
        self.meta.label_set.label_set()
    }

    pub fn fs(&self) -> f64 {
        self.meta.sample_rate_hz
    }

    pub fn channel(&self, ch: Channel) -> Vec<f64> {
        self.frames.iter().map(|f| f.channel(ch)).collect()
    }

    /// Maximal runs of identical labels as `(label, start, end_exclusive)`.
    pub fn segments(&self) -> Vec<(Label, usize, usize)> {
        label_runs(&self.labels)
    }
}

pub fn label_runs(labels: &[Label]) -> Vec<(Label, usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=labels.len() {
        if i == labels.len() || labels[i] != labels[start] {
            out.push((labels[start], start, i));
            start = i;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    LengthMismatch { frames: usize, labels: usize },
    NonPositiveSampleRate,
    NonFinite { frame: usize },
    NonMonotonicTime { frame: usize },
    UnknownLabel { frame: usize, label: u16 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LengthMismatch { frames, labels } => {
                write!(f, "length mismatch: {frames} frames vs {labels} labels")
            }
            Violation::NonPositiveSampleRate => write!(f, "sample rate must be positive"),
            Violation::NonFinite { frame } => write!(f, "non-finite value at {frame}"),
            Violation::NonMonotonicTime { frame } => write!(f, "non-monotonic time at {frame}"),
            Violation::UnknownLabel { frame, label } => {
                write!(f, "label {label} outside label set at {frame}")
            }
        }
    }
}

/// Checks every session invariant. Each kind of violation is reported once,
/// at the first offending frame.
pub fn validate_session(s: &Session) -> Vec<Violation> {
    let mut out = Vec::new();
    if s.frames.len() != s.labels.len() {
        out.push(Violation::LengthMismatch {
            frames: s.frames.len(),
            labels: s.labels.len(),
        });
    }
    if !(s.meta.sample_rate_hz > 0.0 && s.meta.sample_rate_hz.is_finite()) {
        out.push(Violation::NonPositiveSampleRate);
    }
    if let Some(i) = s.frames.iter().position(|f| !f.is_finite()) {
        out.push(Violation::NonFinite { frame: i });
    }
    if let Some(i) = (1..s.frames.len()).find(|&i| s.frames[i].t <= s.frames[i - 1].t) {
        out.push(Violation::NonMonotonicTime { frame: i });
    }
    let set = s.label_set();
    if let Some(i) = s
        .labels
        .iter()
        .position(|l| !l.is_discard() && !set.contains(*l))
    {
        out.push(Violation::UnknownLabel {
            frame: i,
            label: s.labels[i].0,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    Cap,
    AccX,
    AccY,
    AccZ,
    GyroX,
    GyroY,
    GyroZ,
}

impl Channel {
    pub const ALL: [Channel; 7] = [
        Channel::Cap,
        Channel::AccX,
        Channel::AccY,
        Channel::AccZ,
        Channel::GyroX,
        Channel::GyroY,
        Channel::GyroZ,
    ];
    pub const ACC: [Channel; 3] = [Channel::AccX, Channel::AccY, Channel::AccZ];
    pub const GYRO: [Channel; 3] = [Channel::GyroX, Channel::GyroY, Channel::GyroZ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Cap => "Cap",
            Channel::AccX => "Acc_X",
            Channel::AccY => "Acc_Y",
            Channel::AccZ => "Acc_Z",
            Channel::GyroX => "Gyro_X",
            Channel::GyroY => "Gyro_Y",
            Channel::GyroZ => "Gyro_Z",
        }
    }
}

/// Fixed-length multi-channel slice of a session.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub session_id: String,
    pub start_index: usize,
    pub length_samples: usize,
    pub channels: BTreeMap<Channel, Vec<f64>>,
    /// Per-frame labels covered by the window (used for instance weighting).
    pub frame_labels: Vec<Label>,
    pub label: Label,
    pub weight: f64,
}

impl Window {
    pub fn new(
        session_id: impl Into<String>,
        start_index: usize,
        channels: BTreeMap<Channel, Vec<f64>>,
        frame_labels: Vec<Label>,
        label: Label,
    ) -> Result<Self> {
        let length_samples = frame_labels.len();
        if length_samples == 0 {
            return Err(Error::domain("window must contain at least one sample"));
        }
        if let Some((ch, s)) = channels.iter().find(|(_, s)| s.len() != length_samples) {
            return Err(Error::domain(format!(
                "channel {} has {} samples, window has {length_samples}",
                ch.name(),
                s.len()
            )));
        }
        Ok(Window {
            session_id: session_id.into(),
            start_index,
            length_samples,
            channels,
            frame_labels,
            label,
            weight: 1.0,
        })
    }

    pub fn channel(&self, ch: Channel) -> Result<&[f64]> {
        self.channels
            .get(&ch)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::schema(format!("window is missing channel {}", ch.name())))
    }
}
