//! Session-level plumbing: preprocessing, window datasets for each task and
//! counting reports.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{count_session, CountingConfig, SegmentCount};
use crate::error::{Error, Result};
use crate::eval::{Dataset, FoldKeys};
use crate::features::{majority_label, slide_windows, stats, FeaturePipeline, FeatureVector, Modality, WindowingConfig};
use crate::ingest::{preprocess_session, PreprocessConfig, SessionFile};
use crate::pairwise::{align_sessions, derive_pair_labels, remap_session, ClassMapping, PairEntry, PairFuser};
use crate::types::{Channel, Label, Session, Window};

pub fn preprocess_all(sessions: &[Session], cfg: &PreprocessConfig) -> Result<Vec<Session>> {
    sessions.par_iter().map(|s| preprocess_session(s, cfg)).collect()
}

fn keys_of(s: &Session) -> FoldKeys {
    FoldKeys {
        user_id: s.meta.user_id.clone(),
        session_id: s.meta.id.clone(),
        group_id: s.meta.group_id.clone(),
    }
}

/// Windows every session, extracts features and keeps the columns allowed
/// by `modality`. All sessions must share one label set.
pub fn window_dataset(
    sessions: &[Session],
    pipeline: FeaturePipeline,
    windowing: &WindowingConfig,
    modality: Modality,
) -> Result<Dataset> {
    let first = sessions.first().ok_or_else(|| Error::domain("no sessions"))?;
    let set_id = first.meta.label_set;
    if let Some(s) = sessions.iter().find(|s| s.meta.label_set != set_id) {
        return Err(Error::schema(format!(
            "session {} uses {}, expected {}",
            s.meta.id,
            s.meta.label_set.as_str(),
            set_id.as_str()
        )));
    }
    let full = pipeline.manifest();
    let (manifest, cols) = full.select(modality);
    let manifest = Arc::new(manifest);
    let per_session: Vec<Vec<(Window, FeatureVector)>> = sessions
        .par_iter()
        .map(|s| {
            let ws = slide_windows(s, windowing)?;
            ws.into_par_iter()
                .map(|w| {
                    let fv = pipeline.extract(&w, s.fs())?;
                    Ok((w, fv))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut ds = Dataset {
        manifest,
        classes: set_id.label_set().class_names(),
        rows: Vec::new(),
        y: Vec::new(),
        keys: Vec::new(),
        starts: Vec::new(),
        frame_labels: Vec::new(),
    };
    for (s, items) in sessions.iter().zip(per_session) {
        for (w, fv) in items {
            ds.rows.push(cols.iter().map(|&c| fv.values[c]).collect());
            ds.y.push(w.label.index());
            ds.keys.push(keys_of(s));
            ds.starts.push(w.start_index);
            ds.frame_labels.push(w.frame_labels);
        }
    }
    if ds.is_empty() {
        return Err(Error::domain("no complete windows in the given sessions"));
    }
    Ok(ds)
}

/// Single-user collaboration dataset: labels remapped, then windowed.
pub fn single_user_dataset(
    sessions: &[Session],
    mapping: &ClassMapping,
    windowing: &WindowingConfig,
    modality: Modality,
) -> Result<Dataset> {
    let map = mapping.single_user_map();
    let mapped: Vec<Session> = sessions.iter().map(|s| remap_session(s, &map)).collect::<Result<_>>()?;
    window_dataset(&mapped, FeaturePipeline::Collab, windowing, modality)
}

fn window_over(s: &Session, idx: &[usize], start: usize, labels: Vec<Label>, label: Label) -> Result<Window> {
    let mut channels = BTreeMap::new();
    for ch in Channel::ALL {
        channels.insert(ch, idx.iter().map(|&i| s.frames[i].channel(ch)).collect());
    }
    Window::new(s.meta.id.clone(), start, channels, labels, label)
}

/// Pairwise dataset over the listed session pairs. Windows run on the grid of
/// each pair's first session and are dropped when any frame is unmatched or
/// DISCARD.
pub fn pair_dataset(
    sessions: &[Session],
    pairs: &[PairEntry],
    mapping: &ClassMapping,
    windowing: &WindowingConfig,
    modality: Modality,
) -> Result<Dataset> {
    windowing.validate()?;
    let by_id: HashMap<&str, &Session> = sessions.iter().map(|s| (s.meta.id.as_str(), s)).collect();
    let get = |id: &str| {
        by_id
            .get(id)
            .copied()
            .ok_or_else(|| Error::schema(format!("pair references unknown session {id}")))
    };
    let (base, cols) = FeaturePipeline::Collab.manifest().select(modality);
    let base = Arc::new(base);
    let fuser = PairFuser::new(&base);
    let pair_set = mapping.label_set().label_set();

    let per_pair: Vec<Vec<(usize, Vec<Label>, FeatureVector, FoldKeys)>> = pairs
        .par_iter()
        .map(|p| {
            let (a, b) = (get(&p.session_a)?, get(&p.session_b)?);
            let tl = align_sessions(a, b)?;
            let joint = derive_pair_labels(&tl, mapping)?;
            let fs = a.fs();
            let (w, step) = windowing.samples(fs);
            let keys = FoldKeys {
                user_id: format!("{}+{}", a.meta.user_id, b.meta.user_id),
                session_id: format!("{}+{}", a.meta.id, b.meta.id),
                group_id: Some(p.group_id.clone()),
            };
            let mut out = Vec::new();
            let mut start = 0;
            while start + w <= tl.len() {
                let range = start..start + w;
                let labels = &joint[range.clone()];
                let matched: Option<Vec<usize>> = tl.b_index[range.clone()].iter().copied().collect();
                if let (Some(bidx), false) = (matched, labels.iter().any(|l| l.is_discard())) {
                    let label = majority_label(labels, windowing.majority_label_rule);
                    let aidx: Vec<usize> = range.collect();
                    let wa = window_over(a, &aidx, start, labels.to_vec(), label)?;
                    let wb = window_over(b, &bidx, start, labels.to_vec(), label)?;
                    let pick = |fv: FeatureVector| {
                        FeatureVector::new(base.clone(), cols.iter().map(|&c| fv.values[c]).collect(), label)
                    };
                    let fa = pick(FeaturePipeline::Collab.extract(&wa, fs)?)?;
                    let fb = pick(FeaturePipeline::Collab.extract(&wb, fs)?)?;
                    let mut fused = fuser.fuse((&a.meta.user_id, &fa), (&b.meta.user_id, &fb))?;
                    fused.label = label;
                    out.push((start, labels.to_vec(), fused, keys.clone()));
                }
                start += step;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut ds = Dataset {
        manifest: fuser.manifest(),
        classes: pair_set.class_names(),
        rows: Vec::new(),
        y: Vec::new(),
        keys: Vec::new(),
        starts: Vec::new(),
        frame_labels: Vec::new(),
    };
    for (start, labels, fv, keys) in per_pair.into_iter().flatten() {
        ds.y.push(fv.label.index());
        ds.rows.push(fv.values);
        ds.keys.push(keys);
        ds.starts.push(start);
        ds.frame_labels.push(labels);
    }
    if ds.is_empty() {
        return Err(Error::domain("no complete pair windows"));
    }
    Ok(ds)
}

/// Five-number summary plus mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BoxSummary {
    pub fn of(values: &[f64]) -> Option<BoxSummary> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(BoxSummary {
            n: v.len(),
            mean: stats::mean(&v),
            std: stats::std(&v),
            min: v[0],
            q1: stats::quantile_sorted(&v, 0.25),
            median: stats::quantile_sorted(&v, 0.5),
            q3: stats::quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    pub source: String,
    pub accuracy: BoxSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub task: String,
    pub segments: Vec<SegmentCount>,
    /// Per source (and fusion) over all annotated segments.
    pub summary: Vec<SourceSummary>,
    pub per_class: BTreeMap<String, Vec<SourceSummary>>,
    pub config_hash: String,
    pub seed: u64,
    pub notes: Vec<String>,
}

fn summarize<'a>(segs: impl Iterator<Item = &'a SegmentCount> + Clone) -> Vec<SourceSummary> {
    let mut order: Vec<String> = Vec::new();
    let mut acc: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for s in segs {
        for r in s.sources.iter().chain(&s.fused) {
            if let Some(a) = r.accuracy {
                if !acc.contains_key(&r.source) {
                    order.push(r.source.clone());
                }
                acc.entry(r.source.clone()).or_default().push(a);
            }
        }
    }
    order
        .into_iter()
        .filter_map(|name| {
            BoxSummary::of(&acc[&name]).map(|b| SourceSummary {
                source: name,
                accuracy: b,
            })
        })
        .collect()
}

/// Counts every annotated segment of every session.
pub fn count_report(files: &[SessionFile], cfg: &CountingConfig, task: &str, config_hash: &str, seed: u64) -> Result<CountReport> {
    let per: Vec<Vec<SegmentCount>> = files
        .par_iter()
        .map(|f| count_session(&f.session, &f.repetitions, cfg))
        .collect::<Result<_>>()?;
    let segments: Vec<SegmentCount> = per.into_iter().flatten().collect();
    let mut classes: Vec<&str> = segments.iter().map(|s| s.class.as_str()).collect();
    classes.sort_unstable();
    classes.dedup();
    let per_class = classes
        .iter()
        .map(|c| (c.to_string(), summarize(segments.iter().filter(|s| s.class == *c))))
        .collect();
    let mut notes = vec![format!(
        "peak presets: rel_threshold 0.3; {} use 5 Hz / 0.2 s, leg exercises 1.0 s, other classes 2.5 Hz / 0.5 s unless overridden",
        crate::counting::FAST_CLASSES.join(", ")
    )];
    if files.iter().all(|f| f.repetitions.is_empty()) {
        notes.push("no repetition annotations: counts reported without accuracy".into());
    }
    Ok(CountReport {
        task: task.to_string(),
        summary: summarize(segments.iter()),
        per_class,
        segments,
        config_hash: config_hash.to_string(),
        seed,
        notes,
    })
}
