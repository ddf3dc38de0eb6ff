//! Run configuration: one JSON file drives every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hbcsense_core::balance::SmoteConfig;
use hbcsense_core::counting::CountingConfig;
use hbcsense_core::eval::{FoldKind, FoldScheme, TrainOptions};
use hbcsense_core::features::{FeaturePipeline, Modality, WindowingConfig};
use hbcsense_core::ingest::PreprocessConfig;
use hbcsense_core::models::{ForestConfig, LogisticConfig, ModelConfig};
use hbcsense_core::pairwise::{ClassMapping, MappingMode};
use hbcsense_core::simulate::presets::{CollabSpec, DatasetSpec};
use hbcsense_core::simulate::{CircuitModel, ExerciseScript};
use hbcsense_core::{Error, LabelSetId, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Name written into reports; defaults to the config file stem.
    #[serde(default)]
    pub task: Option<String>,
    pub label_set: LabelSetId,
    pub data: DataSource,
    #[serde(default)]
    pub preprocess: Option<PreprocessConfig>,
    #[serde(default)]
    pub windowing: WindowingConfig,
    #[serde(default)]
    pub features: Option<FeatureSection>,
    #[serde(default)]
    pub balance: Option<BalanceSection>,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub counting: Option<CountingConfig>,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub pairs: PairSection,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Where sessions come from. Paths are relative to the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Every `*.csv` (with its JSON sidecar) in a directory.
    Dir(PathBuf),
    Files(Vec<PathBuf>),
    Simulate(DatasetSpec),
    SimulateCollab(CollabSpec),
    Scripts(Vec<ScriptedSession>),
}

impl DataSource {
    pub fn is_simulated(&self) -> bool {
        !matches!(self, DataSource::Dir(_) | DataSource::Files(_))
    }
}

/// One session laid out from explicit exercise scripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedSession {
    pub id: String,
    pub user_id: String,
    #[serde(default)]
    pub group_id: Option<String>,
    pub scripts: Vec<ExerciseScript>,
    #[serde(default = "default_rest_gap")]
    pub rest_gap: f64,
    #[serde(default = "default_fs")]
    pub sample_rate_hz: f64,
    #[serde(default)]
    pub model: CircuitModel,
}

fn default_rest_gap() -> f64 {
    3.0
}

fn default_fs() -> f64 {
    20.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSection {
    #[serde(default)]
    pub pipeline: Option<FeaturePipeline>,
    #[serde(default)]
    pub modality: Option<Modality>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceSection {
    #[serde(default = "default_k")]
    pub k_neighbors: usize,
}

fn default_k() -> usize {
    5
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    /// Turn off the per-feature [0, 1] scaler.
    #[serde(default)]
    pub skip_scaling: bool,
    #[serde(default)]
    pub inverse_frequency_weights: Option<bool>,
    #[serde(default)]
    pub soft_vote_radius: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    #[serde(default)]
    pub scheme: Option<FoldScheme>,
    /// Volunteer recognition: keep this class and predict the user.
    #[serde(default)]
    pub volunteer_class: Option<String>,
    #[serde(default)]
    pub grid: Option<GridSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSection {
    #[serde(default = "yes")]
    pub hard_lift_drop: bool,
    /// JSON list of `{session_a, session_b, group_id}`; all unordered pairs
    /// per group when absent.
    #[serde(default)]
    pub manifest: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

impl Default for PairSection {
    fn default() -> Self {
        PairSection {
            hard_lift_drop: true,
            manifest: None,
        }
    }
}

fn at(key: &str, e: Error) -> Error {
    match e {
        Error::Config { key: k, msg } if k.contains('.') || k == key => Error::config(k, msg),
        Error::Config { key: k, msg } => Error::config(format!("{key}.{k}"), msg),
        other => Error::config(key, other.to_string()),
    }
}

impl RunConfig {
    /// Parses and validates; every failure is a config error naming its key.
    pub fn load(path: &Path) -> Result<(RunConfig, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("<file>", format!("{}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            Error::config(if key == "." { "<root>".into() } else { key }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok((cfg, text))
    }

    pub fn validate(&self) -> Result<()> {
        let set = self.label_set;
        match &self.data {
            DataSource::Simulate(spec) => {
                spec.validate().map_err(|e| at("data.simulate", e))?;
                if spec.label_set != set {
                    return Err(Error::config("data.simulate.label_set", "must equal the top-level label_set"));
                }
            }
            DataSource::SimulateCollab(spec) => {
                spec.validate().map_err(|e| at("data.simulate_collab", e))?;
                if set != LabelSetId::Collab {
                    return Err(Error::config("label_set", "simulate_collab produces COLLAB sessions"));
                }
            }
            DataSource::Scripts(list) => {
                if list.is_empty() {
                    return Err(Error::config("data.scripts", "at least one session is required"));
                }
                for (i, s) in list.iter().enumerate() {
                    if s.scripts.is_empty() {
                        return Err(Error::config(format!("data.scripts[{i}].scripts"), "at least one script is required"));
                    }
                    for sc in &s.scripts {
                        sc.validate().map_err(|e| at(&format!("data.scripts[{i}]"), e))?;
                        if set.label_set().label_of(&sc.class).is_none() {
                            return Err(Error::config(
                                format!("data.scripts[{i}].scripts.class"),
                                format!("`{}` is not a {} class", sc.class, set.as_str()),
                            ));
                        }
                    }
                    s.model.validate().map_err(|e| at(&format!("data.scripts[{i}].model"), e))?;
                }
            }
            DataSource::Dir(_) => {}
            DataSource::Files(f) => {
                if f.is_empty() {
                    return Err(Error::config("data.files", "at least one file is required"));
                }
            }
        }
        if matches!(set, LabelSetId::CollabSingle | LabelSetId::CollabPair) {
            return Err(Error::config("label_set", "use COLLAB; single-user and pair targets are derived"));
        }
        self.preprocess().validate().map_err(|e| at("preprocess", e))?;
        self.windowing.validate().map_err(|e| at("windowing", e))?;
        if let Some(a) = self.preprocess.as_ref().and_then(|p| p.hbc_anchor_class.as_deref()) {
            if set.label_set().label_of(a).is_none() {
                return Err(Error::config("preprocess.hbc_anchor_class", format!("`{a}` is not a {} class", set.as_str())));
            }
        }
        if self.balance.is_some_and(|b| b.k_neighbors == 0) {
            return Err(Error::config("balance.k_neighbors", "must be at least 1"));
        }
        self.train_options().validate().map_err(|e| at("model", e))?;
        for (class, p) in &self.counting().overrides {
            p.validate().map_err(|e| at(&format!("counting.overrides.{class}"), e))?;
        }
        let scheme = self.scheme();
        scheme.validate().map_err(|e| at("eval.scheme", e))?;
        if let Some(c) = &self.eval.volunteer_class {
            if set.label_set().label_of(c).is_none() {
                return Err(Error::config("eval.volunteer_class", format!("`{c}` is not a {} class", set.as_str())));
            }
        }
        if let Some(g) = &self.eval.grid {
            if g.n_trees.is_empty() || g.max_depth.is_empty() || g.n_trees.contains(&0) || g.max_depth.contains(&0) {
                return Err(Error::config("eval.grid", "n_trees and max_depth need nonempty positive lists"));
            }
            if !matches!(self.model(), ModelConfig::RandomForest(_)) {
                return Err(Error::config("eval.grid", "grid search tunes random forests only"));
            }
        }
        let pipeline = self.pipeline();
        let expected = match set {
            LabelSetId::Leg7 => FeaturePipeline::Leg,
            LabelSetId::Gym12 => FeaturePipeline::Gym,
            _ => FeaturePipeline::Collab,
        };
        if pipeline != expected {
            return Err(Error::config("features.pipeline", format!("{} data uses the {expected:?} pipeline", set.as_str())));
        }
        Ok(())
    }

    pub fn task(&self, config_path: &Path) -> String {
        self.task.clone().unwrap_or_else(|| {
            config_path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("run")
                .to_string()
        })
    }

    pub fn preprocess(&self) -> PreprocessConfig {
        self.preprocess.clone().unwrap_or_else(|| match self.label_set {
            LabelSetId::Leg7 => PreprocessConfig::leg_default(),
            LabelSetId::Collab => PreprocessConfig::collab_default(),
            _ => PreprocessConfig::default(),
        })
    }

    pub fn pipeline(&self) -> FeaturePipeline {
        self.features.and_then(|f| f.pipeline).unwrap_or(match self.label_set {
            LabelSetId::Leg7 => FeaturePipeline::Leg,
            LabelSetId::Gym12 => FeaturePipeline::Gym,
            _ => FeaturePipeline::Collab,
        })
    }

    pub fn modality(&self) -> Modality {
        self.features.and_then(|f| f.modality).unwrap_or(match self.label_set {
            LabelSetId::Collab | LabelSetId::CollabSingle | LabelSetId::CollabPair => Modality::HbcAcc,
            _ => Modality::Combined,
        })
    }

    pub fn is_collab(&self) -> bool {
        self.label_set == LabelSetId::Collab
    }

    pub fn model(&self) -> ModelConfig {
        self.model
            .unwrap_or(match self.label_set {
                LabelSetId::Leg7 => ModelConfig::RandomForest(ForestConfig::leg()),
                LabelSetId::Gym12 => ModelConfig::RandomForest(ForestConfig::gym()),
                _ => ModelConfig::Logistic(LogisticConfig::default()),
            })
            .with_seed(self.seed)
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            model: self.model(),
            smote: self.balance.map(|b| SmoteConfig {
                k_neighbors: b.k_neighbors,
                seed: self.seed,
            }),
            feature_clip: (!self.train.skip_scaling).then(|| self.preprocess().feature_clip),
            inverse_frequency_weights: self.train.inverse_frequency_weights.unwrap_or(self.is_collab()),
            soft_vote_radius: self.train.soft_vote_radius.or(self.is_collab().then_some(3)),
        }
    }

    pub fn counting(&self) -> CountingConfig {
        self.counting.clone().unwrap_or_else(|| match self.label_set {
            LabelSetId::Leg7 => CountingConfig::leg_default(),
            _ => CountingConfig::gym_default(),
        })
    }

    pub fn scheme(&self) -> FoldScheme {
        self.eval.scheme.clone().unwrap_or_else(|| FoldScheme::new(FoldKind::LeaveOneUserOut))
    }

    /// Pairwise evaluation holds out whole groups unless told otherwise.
    pub fn pair_scheme(&self) -> FoldScheme {
        self.eval.scheme.clone().unwrap_or_else(|| FoldScheme::new(FoldKind::LeaveOneGroupOut))
    }

    pub fn mapping(&self, mode: MappingMode) -> ClassMapping {
        ClassMapping {
            mode,
            hard_lift_drop: self.pairs.hard_lift_drop,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig> {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, s).unwrap();
        RunConfig::load(&p).map(|(c, _)| c)
    }

    fn key_of(r: Result<RunConfig>) -> String {
        match r {
            Err(Error::Config { key, .. }) => key,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_leg_config_gets_leg_defaults() {
        let c = parse(r#"{"seed": 3, "label_set": "LEG7", "data": {"dir": "x"}}"#).unwrap();
        assert_eq!(c.pipeline(), FeaturePipeline::Leg);
        assert_eq!(c.model(), ModelConfig::RandomForest(ForestConfig { seed: 3, ..ForestConfig::leg() }));
        assert_eq!(c.preprocess().hbc_anchor_class.as_deref(), Some("leg-front-lift"));
    }

    #[test]
    fn seed_is_required() {
        assert_eq!(key_of(parse(r#"{"label_set": "LEG7", "data": {"dir": "x"}}"#)), "<root>");
    }

    #[test]
    fn unknown_nested_key_is_named() {
        let k = key_of(parse(
            r#"{"seed": 1, "label_set": "LEG7", "data": {"dir": "x"}, "model": {"kind": "random_forest", "n_trees": 5, "max_depth": 3, "depht": 2}}"#,
        ));
        assert_eq!(k, "model");
        let k = key_of(parse(r#"{"seed": 1, "label_set": "LEG7", "data": {"dir": "x"}, "windowing": {"window_seconds": "a", "step_seconds": 1}}"#));
        assert_eq!(k, "windowing.window_seconds");
    }

    #[test]
    fn semantic_errors_name_their_section() {
        let k = key_of(parse(
            r#"{"seed": 1, "label_set": "LEG7", "data": {"dir": "x"}, "model": {"kind": "random_forest", "n_trees": 0, "max_depth": 3}}"#,
        ));
        assert_eq!(k, "model.n_trees");
        let k = key_of(parse(r#"{"seed": 1, "label_set": "GYM12", "data": {"dir": "x"}, "features": {"pipeline": "leg"}}"#));
        assert_eq!(k, "features.pipeline");
        let k = key_of(parse(r#"{"seed": 1, "label_set": "LEG7", "data": {"dir": "x"}, "eval": {"volunteer_class": "Nope"}}"#));
        assert_eq!(k, "eval.volunteer_class");
    }
}
