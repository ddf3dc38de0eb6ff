//! Collaboration between users: time alignment of two sessions, joint labels,
//! class remapping and fusion of per-user feature vectors.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureManifest, FeatureVector};
use crate::types::{Label, LabelSetId, Session, COLLAB, COLLAB_PAIR, COLLAB_SINGLE};

/// Two sessions on the frame grid of session `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTimeline {
    pub session_a: String,
    pub session_b: String,
    pub user_a: String,
    pub user_b: String,
    /// For each frame of `a`, the matched frame of `b`.
    pub b_index: Vec<Option<usize>>,
    pub labels_a: Vec<Label>,
    /// Labels of `b` carried onto `a`'s grid; DISCARD where unmatched.
    pub labels_b: Vec<Label>,
}

impl PairTimeline {
    pub fn len(&self) -> usize {
        self.b_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b_index.is_empty()
    }
}

/// Pairs every frame of `a` with the nearest frame of `b` no more than one
/// sample period away (ties to the earlier `b` frame).
pub fn align_sessions(a: &Session, b: &Session) -> Result<PairTimeline> {
    let fs = a.fs();
    if !(fs > 0.0) || a.is_empty() || b.is_empty() {
        return Err(Error::Alignment("both sessions need frames and a positive sample rate".into()));
    }
    let period = 1.0 / fs;
    let tb: Vec<f64> = b.frames.iter().map(|f| f.t).collect();
    let mut b_index = Vec::with_capacity(a.len());
    let mut labels_b = Vec::with_capacity(a.len());
    for f in &a.frames {
        let k = tb.partition_point(|&t| t < f.t);
        let mut best: Option<(f64, usize)> = None;
        for j in [k.wrapping_sub(1), k] {
            if let Some(&t) = tb.get(j) {
                let d = (t - f.t).abs();
                if d <= period + 1e-9 * period && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, j));
                }
            }
        }
        let m = best.map(|(_, j)| j);
        labels_b.push(m.map_or(Label::DISCARD, |j| b.labels[j]));
        b_index.push(m);
    }
    if b_index.iter().all(Option::is_none) {
        return Err(Error::Alignment(format!(
            "sessions {} and {} do not overlap in time",
            a.meta.id, b.meta.id
        )));
    }
    Ok(PairTimeline {
        session_a: a.meta.id.clone(),
        session_b: b.meta.id.clone(),
        user_a: a.meta.user_id.clone(),
        user_b: b.meta.user_id.clone(),
        b_index,
        labels_a: a.labels.clone(),
        labels_b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingMode {
    SingleUser,
    Pairwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassMapping {
    pub mode: MappingMode,
    /// Keep lift and drop as their own classes instead of folding them into
    /// Null.
    #[serde(default = "yes")]
    pub hard_lift_drop: bool,
}

fn yes() -> bool {
    true
}

/// Total per-label substitution from one label set into another. DISCARD
/// always maps to itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub source: LabelSetId,
    pub target: LabelSetId,
    table: Vec<Label>,
}

impl LabelMap {
    pub fn identity(set: LabelSetId) -> Self {
        LabelMap {
            source: set,
            target: set,
            table: (0..set.label_set().len()).map(|i| Label(i as u16)).collect(),
        }
    }

    /// Builds a map from `(source name, target name)` pairs; a target of
    /// `"DISCARD"` drops the class.
    pub fn from_names(source: LabelSetId, target: LabelSetId, pairs: &[(&str, &str)]) -> Result<Self> {
        let (src, dst) = (source.label_set(), target.label_set());
        let mut table = vec![None; src.len()];
        for (a, b) in pairs {
            let from = src.require(a)?;
            table[from.index()] = Some(dst.require(b)?);
        }
        let table = table
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.ok_or_else(|| Error::schema(format!("class {} has no mapping", src.classes[i]))))
            .collect::<Result<_>>()?;
        Ok(LabelMap { source, target, table })
    }

    pub fn apply(&self, l: Label) -> Result<Label> {
        if l.is_discard() {
            return Ok(l);
        }
        self.table.get(l.index()).copied().ok_or_else(|| {
            Error::schema(format!("label {} is outside {}", l.0, self.source.as_str()))
        })
    }
}

impl ClassMapping {
    /// Per-user map from the ten activities into the single-user task.
    pub fn single_user_map(&self) -> LabelMap {
        let (lift, drop) = if self.hard_lift_drop { ("A6", "A7") } else { ("Null", "Null") };
        LabelMap::from_names(
            LabelSetId::Collab,
            LabelSetId::CollabSingle,
            &[
                ("A1", "DISCARD"),
                ("A2", "Null"),
                ("A3", "A3"),
                ("A4", "A4"),
                ("A5", "A5"),
                ("A6", lift),
                ("A7", drop),
                ("A8", "Null"),
                ("A9", "DISCARD"),
                ("A10", "DISCARD"),
            ],
        )
        .expect("static single-user mapping")
    }

    /// Map applied to derived joint labels.
    pub fn pair_map(&self) -> LabelMap {
        if self.hard_lift_drop {
            return LabelMap::identity(LabelSetId::CollabPair);
        }
        LabelMap::from_names(
            LabelSetId::CollabPair,
            LabelSetId::CollabPair,
            &[
                ("Null", "Null"),
                ("CarryTogether", "CarryTogether"),
                ("LiftTogether", "Null"),
                ("DropTogether", "Null"),
            ],
        )
        .expect("static pair mapping")
    }

    pub fn label_set(&self) -> LabelSetId {
        match self.mode {
            MappingMode::SingleUser => LabelSetId::CollabSingle,
            MappingMode::Pairwise => LabelSetId::CollabPair,
        }
    }
}

pub fn remap_labels(labels: &[Label], map: &LabelMap) -> Result<Vec<Label>> {
    labels.iter().map(|&l| map.apply(l)).collect()
}

/// Session with its labels mapped into the target set.
pub fn remap_session(s: &Session, map: &LabelMap) -> Result<Session> {
    if s.meta.label_set != map.source {
        return Err(Error::schema(format!(
            "session {} uses {}, mapping expects {}",
            s.meta.id,
            s.meta.label_set.as_str(),
            map.source.as_str()
        )));
    }
    let mut out = s.clone();
    out.labels = remap_labels(&s.labels, map)?;
    out.meta.label_set = map.target;
    Ok(out)
}

fn joint_label(a: Label, b: Label) -> Label {
    let excluded = |l: Label| l.is_discard() || matches!(COLLAB.name(l), "A1" | "A9" | "A10");
    if excluded(a) || excluded(b) {
        return Label::DISCARD;
    }
    let pair = |n: &str| COLLAB_PAIR.label_of(n).expect("pair class");
    match (COLLAB.name(a), COLLAB.name(b)) {
        ("A5", "A5") => pair("CarryTogether"),
        ("A6", "A6") => pair("LiftTogether"),
        ("A7", "A7") => pair("DropTogether"),
        _ => pair("Null"),
    }
}

/// Joint per-frame labels in the pair label set. A frame is DISCARD when
/// either user is DISCARD, unmatched, or in a start/stop, undefined or
/// out-of-view activity.
pub fn derive_pair_labels(tl: &PairTimeline, mapping: &ClassMapping) -> Result<Vec<Label>> {
    let map = mapping.pair_map();
    tl.labels_a
        .iter()
        .zip(&tl.labels_b)
        .map(|(&a, &b)| map.apply(joint_label(a, b)))
        .collect()
}

/// Fuses two users' vectors into `[first, second, mean, |first - second|]`
/// where `first` belongs to the smaller user id (then the lexicographically
/// smaller vector), so argument order never matters.
#[derive(Debug, Clone)]
pub struct PairFuser {
    base_hash: String,
    paired: Arc<FeatureManifest>,
}

impl PairFuser {
    pub fn new(base: &FeatureManifest) -> Self {
        PairFuser {
            base_hash: base.hash.clone(),
            paired: Arc::new(base.paired()),
        }
    }

    pub fn manifest(&self) -> Arc<FeatureManifest> {
        self.paired.clone()
    }

    pub fn fuse(&self, a: (&str, &FeatureVector), b: (&str, &FeatureVector)) -> Result<FeatureVector> {
        if a.1.manifest.hash != self.base_hash || b.1.manifest.hash != self.base_hash {
            return Err(Error::schema("pair members were extracted with different feature manifests"));
        }
        let cmp_vals = |x: &[f64], y: &[f64]| {
            x.iter()
                .zip(y)
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        };
        let (first, second) = match a.0.cmp(b.0).then_with(|| cmp_vals(&a.1.values, &b.1.values)) {
            std::cmp::Ordering::Greater => (b.1, a.1),
            _ => (a.1, b.1),
        };
        let d = first.values.len();
        let mut values = Vec::with_capacity(4 * d);
        values.extend_from_slice(&first.values);
        values.extend_from_slice(&second.values);
        values.extend(first.values.iter().zip(&second.values).map(|(x, y)| 0.5 * (x + y)));
        values.extend(first.values.iter().zip(&second.values).map(|(x, y)| (x - y).abs()));
        let mut fv = FeatureVector::new(self.paired.clone(), values, first.label)?;
        fv.weight = first.weight;
        Ok(fv)
    }
}

pub fn pair_features(a: (&str, &FeatureVector), b: (&str, &FeatureVector)) -> Result<FeatureVector> {
    if a.1.manifest.hash != b.1.manifest.hash {
        return Err(Error::schema("pair members were extracted with different feature manifests"));
    }
    PairFuser::new(&a.1.manifest).fuse(a, b)
}

/// One entry of a pair manifest.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairEntry {
    pub session_a: String,
    pub session_b: String,
    pub group_id: String,
}

/// All unordered pairs of sessions sharing a group id, members ordered by
/// user id.
pub fn enumerate_pairs(sessions: &[Session]) -> Result<Vec<PairEntry>> {
    let mut groups: BTreeMap<&str, Vec<&Session>> = BTreeMap::new();
    for s in sessions {
        let g = s
            .meta
            .group_id
            .as_deref()
            .ok_or_else(|| Error::schema(format!("session {} has no group_id", s.meta.id)))?;
        groups.entry(g).or_default().push(s);
    }
    let mut out = Vec::new();
    for (g, mut members) in groups {
        members.sort_by(|x, y| (&x.meta.user_id, &x.meta.id).cmp(&(&y.meta.user_id, &y.meta.id)));
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                if members[i].meta.user_id == members[j].meta.user_id {
                    continue;
                }
                out.push(PairEntry {
                    session_a: members[i].meta.id.clone(),
                    session_b: members[j].meta.id.clone(),
                    group_id: g.to_string(),
                });
            }
        }
    }
    Ok(out)
}

/// Label-set sanity for callers building single-user datasets.
pub fn single_user_classes() -> Vec<String> {
    COLLAB_SINGLE.class_names()
}
