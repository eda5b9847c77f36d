use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{Aggregation, Role, SynthSpec, TableFormat};
use crate::error::{Error, Result};
use crate::learn::{ClassifierKind, LearnParams};
use crate::rng::PRNG_NAME;
use crate::similarity::Measure;
use crate::tasks::{Locality, LocalityParams, ModelConfig, NetworkModel, NetworkSpec, Task};

/// How the event log is cut into three time segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionChoice {
    /// Generated segment boundaries for synthetic data, equal-frequency
    /// otherwise.
    #[default]
    Auto,
    EqualFrequency,
    /// Uses `boundaries`.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// `node, item, value, timestamp` table. Exactly one of `events` and
    /// `synth` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub events: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<TableFormat>,
    #[serde(default)]
    pub header: bool,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
    /// Required with `events`; synthetic data brings its own rules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_rules: Option<PathBuf>,
    /// Explicit networks by name, as `u<TAB>v` files over original node ids.
    /// Synthetic data adds `label` and `formation`.
    #[serde(default)]
    pub explicit: BTreeMap<String, PathBuf>,
    #[serde(default)]
    pub partition: PartitionChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundaries: Option<[i64; 2]>,
    #[serde(default = "default_roles")]
    pub roles: [Role; 3],
}

fn default_roles() -> [Role; 3] {
    [Role::Validation, Role::Training, Role::Testing]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub models: Vec<NetworkModel>,
    #[serde(default)]
    pub measures: Vec<Measure>,
    #[serde(default)]
    pub densities: Vec<f64>,
    /// Names of explicit networks to include.
    #[serde(default)]
    pub explicit: Vec<String>,
    /// Edge fractions for explicit networks; empty means the full network.
    #[serde(default)]
    pub explicit_fractions: Vec<f64>,
    pub localities: Vec<Locality>,
    pub tasks: Vec<Task>,
    pub classifiers: Vec<ClassifierKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskParams {
    /// Train CC classifiers on positive neighbors only.
    pub positives_only: bool,
    /// Train/validation/testing edge fractions for explicit-network LP.
    pub lp_split: [f64; 3],
    /// Partition whose attributes build the training network.
    pub network_source: Role,
}

impl Default for TaskParams {
    fn default() -> Self {
        TaskParams {
            positives_only: false,
            lp_split: [0.5, 0.25, 0.25],
            network_source: Role::Training,
        }
    }
}

/// A whole experiment, read from one TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "default_prng")]
    pub prng: String,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub locality: LocalityParams,
    #[serde(default)]
    pub learn: LearnParams,
    #[serde(default)]
    pub tasks: TaskParams,
    /// Directory relative paths resolve against; the config file's parent.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_prng() -> String {
    PRNG_NAME.to_string()
}

fn default_workers() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// `p` against the config directory unless absolute.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out_dir)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.prng != PRNG_NAME {
            return bad(format!("unsupported prng {:?}; only {PRNG_NAME:?} is available", self.prng));
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        let d = &self.dataset;
        match (&d.events, &d.synth) {
            (Some(_), None) if d.label_rules.is_none() => return bad("an events dataset needs label_rules".into()),
            (Some(_), None) | (None, Some(_)) => {}
            _ => return bad("set exactly one of dataset.events and dataset.synth".into()),
        }
        if d.synth.is_some() && (d.explicit.contains_key("label") || d.explicit.contains_key("formation")) {
            return bad("explicit names `label` and `formation` are reserved for synthetic data".into());
        }
        if d.partition == PartitionChoice::Explicit && d.boundaries.is_none() {
            return bad("partition = \"explicit\" needs boundaries".into());
        }
        for name in d.explicit.keys().chain(&self.grid.explicit) {
            if !valid_name(name) {
                return bad(format!("explicit network name {name:?} must match [A-Za-z0-9_-]+"));
            }
        }
        for name in &self.grid.explicit {
            if !self.explicit_names().contains(name) {
                return bad(format!("grid names unknown explicit network {name:?}"));
            }
        }
        if self.grid.models.contains(&NetworkModel::Explicit) {
            return bad("list explicit networks under grid.explicit, not grid.models".into());
        }
        for &x in self.grid.densities.iter().chain(&self.grid.explicit_fractions) {
            if !(x > 0.0 && x <= 1.0) {
                return bad(format!("density {x} outside (0, 1]"));
            }
        }
        if (self.tasks.lp_split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad("lp_split must sum to 1".into());
        }
        let lp = &self.locality;
        if lp.bfs_k == 0 || lp.ensemble_knn > lp.ensemble_k || lp.ensemble_knn == 0 {
            return bad("need bfs_k >= 1 and 1 <= ensemble_knn <= ensemble_k".into());
        }
        let configs = self.grid_configs()?;
        if configs.is_empty() {
            return bad("the grid is empty".into());
        }
        Ok(())
    }

    /// Explicit networks available to the grid.
    pub fn explicit_names(&self) -> BTreeSet<String> {
        let mut names: BTreeSet<String> = self.dataset.explicit.keys().cloned().collect();
        if self.dataset.synth.is_some() {
            names.insert("label".into());
            names.insert("formation".into());
        }
        names
    }

    /// Network specs of the grid, sorted by key.
    pub fn networks(&self) -> Vec<NetworkSpec> {
        let g = &self.grid;
        let mut out = Vec::new();
        for &model in &g.models {
            for &measure in &g.measures {
                for &density in &g.densities {
                    out.push(NetworkSpec::inferred(model, measure, density));
                }
            }
        }
        for name in &g.explicit {
            if g.explicit_fractions.is_empty() {
                out.push(NetworkSpec::explicit(name.clone(), None));
            }
            for &f in &g.explicit_fractions {
                out.push(NetworkSpec::explicit(name.clone(), (f < 1.0).then_some(f)));
            }
        }
        out.sort_by_key(NetworkSpec::key);
        out
    }

    /// Every grid cell in canonical (key-sorted) order.
    pub fn grid_configs(&self) -> Result<Vec<ModelConfig>> {
        let mut out = Vec::new();
        for network in self.networks() {
            for &locality in &self.grid.localities {
                for &task in &self.grid.tasks {
                    for &classifier in &self.grid.classifiers {
                        out.push(ModelConfig {
                            network: network.clone(),
                            locality,
                            task,
                            classifier,
                            seed: self.seed,
                        });
                    }
                }
            }
        }
        out.sort_by_cached_key(ModelConfig::key);
        let before = out.len();
        out.dedup_by_key(|c| c.key());
        if out.len() != before {
            return Err(Error::Config("the grid lists a value twice".into()));
        }
        Ok(out)
    }
}
