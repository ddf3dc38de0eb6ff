use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hbcsense_core::eval::{
    build_report, cross_validate, fit_pipeline, grid_search, make_folds, write_dataset_csv, Dataset, EvalReport,
    FoldScheme, ReportContext,
};
use hbcsense_core::features::{FeaturePipeline, FeatureScaler, Modality};
use hbcsense_core::ingest::{load_session_file, session_csv_bytes, sidecar_json_bytes, SessionFile};
use hbcsense_core::models::TrainedModel;
use hbcsense_core::pairwise::{enumerate_pairs, MappingMode, PairEntry};
use hbcsense_core::pipeline::{count_report, pair_dataset, preprocess_all, single_user_dataset, window_dataset, CountReport};
use hbcsense_core::report::{confusion_svg, count_box_svg};
use hbcsense_core::seeds;
use hbcsense_core::simulate::generate_session;
use hbcsense_core::simulate::presets::{position_for, simulate_collab, simulate_dataset};
use hbcsense_core::types::AccUnit;
use hbcsense_core::{Error, Result, Session, SessionMeta};

use crate::config::{DataSource, RunConfig};
use crate::output::{now_secs, sha256_hex, Output, Provenance, Versions};

pub struct Ctx {
    pub cfg: RunConfig,
    pub config_path: PathBuf,
    pub config_dir: PathBuf,
    pub config_hash: String,
    pub task: String,
    pub out: Output,
}

impl Ctx {
    pub fn load(config_path: &Path) -> Result<Ctx> {
        let (cfg, _) = RunConfig::load(config_path)?;
        let canonical = serde_json::to_vec(&cfg)?;
        let config_dir = config_path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."))
            .to_path_buf();
        Ok(Ctx {
            task: cfg.task(config_path),
            out: Output::resolve(cfg.output_dir.as_deref(), &config_dir),
            config_hash: sha256_hex(&canonical),
            config_path: config_path.to_path_buf(),
            config_dir,
            cfg,
        })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.config_dir.join(p)
        }
    }

    fn finish(&mut self, command: &str, seed: u64) -> Result<()> {
        let written = self.out.written().to_vec();
        let prov = Provenance {
            command,
            config_path: self.config_path.display().to_string(),
            config_hash: &self.config_hash,
            seed,
            timestamp: now_secs(),
            versions: Versions::current(),
            outputs: &written,
        };
        self.out.write_json(&format!("provenance/{command}.json"), &prov)?;
        Ok(())
    }
}

fn simulate_files(cfg: &RunConfig, seed: u64) -> Result<Vec<SessionFile>> {
    match &cfg.data {
        DataSource::Simulate(spec) => simulate_dataset(spec, seed),
        DataSource::SimulateCollab(spec) => simulate_collab(spec, seed),
        DataSource::Scripts(list) => list
            .iter()
            .map(|s| {
                let meta = SessionMeta {
                    id: s.id.clone(),
                    user_id: s.user_id.clone(),
                    session_index: 0,
                    sensor_position: position_for(cfg.label_set),
                    sample_rate_hz: s.sample_rate_hz,
                    label_set: cfg.label_set,
                    acc_unit: AccUnit::MetersPerSecondSquared,
                    group_id: s.group_id.clone(),
                };
                let sub = seeds::substream(seed, &format!("simulate/{}", s.id));
                generate_session(&s.scripts, s.rest_gap, &s.model, meta, sub)
            })
            .collect(),
        DataSource::Dir(_) | DataSource::Files(_) => {
            Err(Error::config("data", "simulate needs a simulate, simulate_collab or scripts source"))
        }
    }
}

fn csv_paths(ctx: &Ctx) -> Result<Vec<PathBuf>> {
    match &ctx.cfg.data {
        DataSource::Dir(d) => {
            let d = ctx.resolve(d);
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&d)
                .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", d.display()))))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "csv"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(Error::schema(format!("no session CSVs in {}", d.display())));
            }
            Ok(paths)
        }
        DataSource::Files(f) => Ok(f.iter().map(|p| ctx.resolve(p)).collect()),
        _ => Ok(Vec::new()),
    }
}

/// Raw sessions with their annotations, checked against the label set.
pub fn load_files(ctx: &Ctx) -> Result<Vec<SessionFile>> {
    let files = if ctx.cfg.data.is_simulated() {
        simulate_files(&ctx.cfg, ctx.cfg.seed)?
    } else {
        csv_paths(ctx)?.iter().map(load_session_file).collect::<Result<Vec<_>>>()?
    };
    if let Some(f) = files.iter().find(|f| f.session.meta.label_set != ctx.cfg.label_set) {
        return Err(Error::schema(format!(
            "session {} uses {}, config says {}",
            f.session.meta.id,
            f.session.meta.label_set.as_str(),
            ctx.cfg.label_set.as_str()
        )));
    }
    log::info!("loaded {} sessions", files.len());
    Ok(files)
}

fn sessions(files: Vec<SessionFile>) -> Vec<Session> {
    files.into_iter().map(|f| f.session).collect()
}

/// Windowed feature table for the configured task. Collaboration data goes
/// through the single-user mapping.
pub fn build_dataset(ctx: &Ctx) -> Result<Dataset> {
    let cfg = &ctx.cfg;
    let pre = preprocess_all(&sessions(load_files(ctx)?), &cfg.preprocess())?;
    let ds = if cfg.is_collab() {
        single_user_dataset(&pre, &cfg.mapping(MappingMode::SingleUser), &cfg.windowing, cfg.modality())?
    } else {
        window_dataset(&pre, cfg.pipeline(), &cfg.windowing, cfg.modality())?
    };
    match &cfg.eval.volunteer_class {
        Some(c) => {
            let idx = ds
                .classes
                .iter()
                .position(|n| n == c)
                .ok_or_else(|| Error::config("eval.volunteer_class", format!("`{c}` is not a class of this task")))?;
            ds.relabel_by_user(idx)
        }
        None => Ok(ds),
    }
}

pub fn simulate(ctx: &mut Ctx, seed: u64) -> Result<()> {
    let files = simulate_files(&ctx.cfg, seed)?;
    for f in &files {
        let id = &f.session.meta.id;
        ctx.out.write(&format!("sessions/{id}.csv"), &session_csv_bytes(&f.session)?)?;
        ctx.out
            .write(&format!("sessions/{id}.json"), &sidecar_json_bytes(&f.session, &f.repetitions)?)?;
    }
    if ctx.cfg.is_collab() {
        let pairs = enumerate_pairs(&sessions(files))?;
        ctx.out.write_json("sessions/pairs.json", &pairs)?;
    }
    ctx.finish("simulate", seed)
}

pub fn preprocess(ctx: &mut Ctx) -> Result<()> {
    let files = load_files(ctx)?;
    let raw: Vec<Session> = files.iter().map(|f| f.session.clone()).collect();
    let pre = preprocess_all(&raw, &ctx.cfg.preprocess())?;
    for (s, f) in pre.iter().zip(&files) {
        let id = &s.meta.id;
        ctx.out.write(&format!("preprocessed/{id}.csv"), &session_csv_bytes(s)?)?;
        ctx.out
            .write(&format!("preprocessed/{id}.json"), &sidecar_json_bytes(s, &f.repetitions)?)?;
    }
    ctx.finish("preprocess", ctx.cfg.seed)
}

pub fn featurize(ctx: &mut Ctx) -> Result<()> {
    let ds = build_dataset(ctx)?;
    let mut buf = Vec::new();
    write_dataset_csv(&mut buf, &ds)?;
    ctx.out.write("features.csv", &buf)?;
    ctx.out.write_json("manifest.json", ds.manifest.as_ref())?;
    ctx.finish("featurize", ctx.cfg.seed)
}

/// Scaler plus classifier, as written by `train`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub pipeline: FeaturePipeline,
    pub modality: Modality,
    pub feature_names: Vec<String>,
    pub scaler: Option<FeatureScaler>,
    pub model: TrainedModel,
}

pub fn train(ctx: &mut Ctx) -> Result<()> {
    let ds = build_dataset(ctx)?;
    let all: Vec<usize> = (0..ds.len()).collect();
    let fitted = fit_pipeline(&ds, &all, &ctx.cfg.train_options())?;
    let art = ModelArtifact {
        pipeline: ctx.cfg.pipeline(),
        modality: ctx.cfg.modality(),
        feature_names: ds.manifest.names().iter().map(|s| s.to_string()).collect(),
        scaler: fitted.scaler,
        model: fitted.model,
    };
    ctx.out.write_json("model.json", &art)?;
    ctx.out.write_json("manifest.json", ds.manifest.as_ref())?;
    ctx.finish("train", ctx.cfg.seed)
}

fn run_eval(ctx: &Ctx, ds: &Dataset, scheme: &FoldScheme, mut notes: Vec<String>) -> Result<EvalReport> {
    let opts = ctx.cfg.train_options();
    let folds = make_folds(&ds.keys, scheme, ctx.cfg.seed)?;
    log::info!("{} folds over {} windows", folds.len(), ds.len());
    let outcomes = cross_validate(ds, &folds, scheme, &opts)?;
    if opts.smote.is_some() {
        notes.push("SMOTE applied inside each training fold only".into());
    }
    build_report(
        ds,
        &outcomes,
        ReportContext {
            task: &ctx.task,
            scheme,
            opts: &opts,
            config_hash: &ctx.config_hash,
            seed: ctx.cfg.seed,
            notes,
        },
    )
}

pub fn evaluate(ctx: &mut Ctx) -> Result<()> {
    let ds = build_dataset(ctx)?;
    let mut notes = Vec::new();
    if ctx.cfg.is_collab() {
        notes.push("single-user mapping: A1, A9, A10 discarded; A2, A8 folded into Null".into());
    }
    if let Some(c) = &ctx.cfg.eval.volunteer_class {
        notes.push(format!("volunteer recognition on class {c}"));
    }
    let report = run_eval(ctx, &ds, &ctx.cfg.scheme(), notes)?;
    ctx.out.write_json("eval_report.json", &report)?;
    ctx.finish("evaluate", ctx.cfg.seed)
}

pub fn pair_eval(ctx: &mut Ctx) -> Result<()> {
    if !ctx.cfg.is_collab() {
        return Err(Error::config("label_set", "pair-eval needs COLLAB sessions"));
    }
    let pre = preprocess_all(&sessions(load_files(ctx)?), &ctx.cfg.preprocess())?;
    let mut notes = Vec::new();
    let pairs: Vec<PairEntry> = match &ctx.cfg.pairs.manifest {
        Some(p) => {
            let p = ctx.resolve(p);
            let text = std::fs::read_to_string(&p)
                .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))?;
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", p.display())))?
        }
        None => {
            notes.push("pairs: all unordered pairs of distinct users within each group".into());
            enumerate_pairs(&pre)?
        }
    };
    if pairs.is_empty() {
        return Err(Error::schema("no session pairs to evaluate"));
    }
    let mapping = ctx.cfg.mapping(MappingMode::Pairwise);
    if !mapping.hard_lift_drop {
        notes.push("LiftTogether and DropTogether folded into Null".into());
    }
    let ds = pair_dataset(&pre, &pairs, &mapping, &ctx.cfg.windowing, ctx.cfg.modality())?;
    let report = run_eval(ctx, &ds, &ctx.cfg.pair_scheme(), notes)?;
    ctx.out.write_json("pairs.json", &pairs)?;
    ctx.out.write_json("pair_report.json", &report)?;
    ctx.finish("pair-eval", ctx.cfg.seed)
}

pub fn count(ctx: &mut Ctx) -> Result<()> {
    let files = load_files(ctx)?;
    let report = count_report(&files, &ctx.cfg.counting(), &ctx.task, &ctx.config_hash, ctx.cfg.seed)?;
    ctx.out.write_json("count_report.json", &report)?;
    ctx.finish("count", ctx.cfg.seed)
}

pub fn grid(ctx: &mut Ctx) -> Result<()> {
    let g = ctx
        .cfg
        .eval
        .grid
        .clone()
        .ok_or_else(|| Error::config("eval.grid", "grid-search needs an eval.grid section"))?;
    let ds = build_dataset(ctx)?;
    let scheme = ctx.cfg.scheme();
    let folds = make_folds(&ds.keys, &scheme, ctx.cfg.seed)?;
    let result = grid_search(&ds, &folds, &scheme, &ctx.cfg.train_options(), &g.n_trees, &g.max_depth)?;
    ctx.out.write_json("grid.json", &result)?;
    ctx.finish("grid-search", ctx.cfg.seed)
}

fn read_json<T: for<'de> Deserialize<'de>>(p: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(p).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display()))))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", p.display())))
}

/// Renders every report found among `inputs`, or among the standard report
/// names in the output directory when `inputs` is empty.
pub fn report(ctx: &mut Ctx, inputs: &[PathBuf]) -> Result<()> {
    let candidates: Vec<PathBuf> = if inputs.is_empty() {
        ["eval_report.json", "pair_report.json", "count_report.json"]
            .iter()
            .map(|n| ctx.out.path(n))
            .filter(|p| p.exists())
            .collect()
    } else {
        inputs.to_vec()
    };
    if candidates.is_empty() {
        return Err(Error::schema(format!("no reports to render in {}", ctx.out.dir.display())));
    }
    for p in &candidates {
        let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("report").to_string();
        let value: serde_json::Value = read_json(p)?;
        if value.get("confusion").is_some() {
            let r: EvalReport = read_json(p)?;
            let title = format!("{} ({}, macro-F {:.3})", r.task, r.model, r.macro_f);
            ctx.out
                .write(&format!("{stem}_confusion.svg"), confusion_svg(&title, &r.classes, &r.confusion).as_bytes())?;
        } else if value.get("segments").is_some() {
            let r: CountReport = read_json(p)?;
            ctx.out.write(
                &format!("{stem}_accuracy.svg"),
                count_box_svg(&format!("{} counting accuracy", r.task), &r.summary).as_bytes(),
            )?;
            for (class, summary) in &r.per_class {
                let safe: String = class.chars().map(|c| if c.is_alphanumeric() { c } else { '_' }).collect();
                ctx.out
                    .write(&format!("{stem}_accuracy_{safe}.svg"), count_box_svg(class, summary).as_bytes())?;
            }
        } else {
            return Err(Error::schema(format!("{} is neither an eval nor a count report", p.display())));
        }
    }
    ctx.finish("report", ctx.cfg.seed)
}
