use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::AttributeMatrix;
use crate::error::{Error, Result};
use crate::graph::EdgeSet;
use crate::learn::ClassifierKind;
use crate::rng;
use crate::similarity::{knn_graph, lambda_from_density, threshold_graph, Measure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "cc")]
    Cc,
    #[serde(rename = "lp")]
    Lp,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Cc => "cc",
            Task::Lp => "lp",
        }
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Task> {
        match s {
            "cc" => Ok(Task::Cc),
            "lp" => Ok(Task::Lp),
            _ => Err(Error::Config(format!("unknown task {s:?} (expected cc or lp)"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fixed member ordering for the ensemble locality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnsembleOrder {
    Degree,
    AttrSum,
    AttrUnique,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Locality {
    Adjacency,
    Bfs,
    Community,
    Global,
    Ensemble(EnsembleOrder),
}

impl FromStr for Locality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Locality> {
        Ok(match s {
            "adjacency" => Locality::Adjacency,
            "bfs" => Locality::Bfs,
            "community" => Locality::Community,
            "global" => Locality::Global,
            "ensemble:degree" => Locality::Ensemble(EnsembleOrder::Degree),
            "ensemble:attr-sum" => Locality::Ensemble(EnsembleOrder::AttrSum),
            "ensemble:attr-unique" => Locality::Ensemble(EnsembleOrder::AttrUnique),
            "ensemble:random" => Locality::Ensemble(EnsembleOrder::Random),
            _ => return Err(Error::Config(format!("unknown locality {s:?}"))),
        })
    }
}

impl fmt::Display for Locality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Locality::Adjacency => "adjacency",
            Locality::Bfs => "bfs",
            Locality::Community => "community",
            Locality::Global => "global",
            Locality::Ensemble(EnsembleOrder::Degree) => "ensemble:degree",
            Locality::Ensemble(EnsembleOrder::AttrSum) => "ensemble:attr-sum",
            Locality::Ensemble(EnsembleOrder::AttrUnique) => "ensemble:attr-unique",
            Locality::Ensemble(EnsembleOrder::Random) => "ensemble:random",
        })
    }
}

impl TryFrom<String> for Locality {
    type Error = Error;

    fn try_from(s: String) -> Result<Locality> {
        s.parse()
    }
}

impl From<Locality> for String {
    fn from(l: Locality) -> String {
        l.to_string()
    }
}

/// Sizes and thresholds of the task localities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalityParams {
    pub bfs_k: usize,
    pub ensemble_k: usize,
    pub ensemble_knn: usize,
    /// Nodes (CC) or pairs (LP) in the global training sample.
    pub global_sample: usize,
    /// Smaller communities fall back to the global locality.
    pub community_min_size: usize,
}

impl Default for LocalityParams {
    fn default() -> Self {
        LocalityParams {
            bfs_k: 200,
            ensemble_k: 30,
            ensemble_knn: 3,
            global_sample: 500,
            community_min_size: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NetworkModel {
    #[serde(rename = "knn")]
    Knn,
    #[serde(rename = "th")]
    Th,
    #[serde(rename = "explicit")]
    Explicit,
}

/// One network model: an inferred KNN/TH model at a density, or a named
/// explicit edge list (optionally thinned to a fraction of its edges).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub model: NetworkModel,
    pub measure: Option<Measure>,
    pub density: Option<f64>,
    pub name: Option<String>,
}

impl NetworkSpec {
    pub fn inferred(model: NetworkModel, measure: Measure, density: f64) -> NetworkSpec {
        NetworkSpec {
            model,
            measure: Some(measure),
            density: Some(density),
            name: None,
        }
    }

    pub fn explicit(name: impl Into<String>, fraction: Option<f64>) -> NetworkSpec {
        NetworkSpec {
            model: NetworkModel::Explicit,
            measure: None,
            density: fraction,
            name: Some(name.into()),
        }
    }

    /// `knn:int:0.01`, `th:int-n:0.005`, `explicit:name` or
    /// `explicit:name:0.5`.
    pub fn key(&self) -> String {
        self.to_string()
    }

    /// Measure used wherever the network needs one; explicit networks use
    /// INT-N for ensemble similarity.
    pub fn similarity(&self) -> Measure {
        self.measure.unwrap_or(Measure::IntN)
    }

    /// Build an inferred model from `matrix`; `source` names the partition
    /// in the provenance.
    pub fn build(&self, matrix: &AttributeMatrix, source: &str) -> Result<EdgeSet> {
        let (Some(measure), Some(density)) = (self.measure, self.density) else {
            return Err(Error::invalid(format!("{self} is not an inferred network model")));
        };
        let n = matrix.n_nodes();
        let mut g = match self.model {
            NetworkModel::Knn => knn_graph(matrix, measure, lambda_from_density(n, density, true)?)?,
            NetworkModel::Th => threshold_graph(matrix, measure, lambda_from_density(n, density, false)?)?,
            NetworkModel::Explicit => unreachable!("checked above"),
        };
        let mut prov = g.provenance().clone();
        prov.source = source.to_string();
        g = g.with_edges(g.edges().to_vec(), prov);
        Ok(g)
    }
}

impl fmt::Display for NetworkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.model {
            NetworkModel::Explicit => {
                write!(f, "explicit:{}", self.name.as_deref().unwrap_or(""))?;
                if let Some(d) = self.density {
                    write!(f, ":{d}")?;
                }
                Ok(())
            }
            m => {
                let model = if m == NetworkModel::Knn { "knn" } else { "th" };
                write!(
                    f,
                    "{model}:{}:{}",
                    self.measure.map_or("", Measure::as_str),
                    self.density.unwrap_or(f64::NAN)
                )
            }
        }
    }
}

impl FromStr for NetworkSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<NetworkSpec> {
        let bad = || Error::Config(format!("bad network key {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        let density = |x: &str| x.parse::<f64>().ok().filter(|d| *d > 0.0 && *d <= 1.0).ok_or_else(bad);
        match parts.as_slice() {
            ["explicit", name] if !name.is_empty() => Ok(NetworkSpec::explicit(*name, None)),
            ["explicit", name, frac] if !name.is_empty() => Ok(NetworkSpec::explicit(*name, Some(density(frac)?))),
            [model, measure, d] => {
                let model = match *model {
                    "knn" => NetworkModel::Knn,
                    "th" => NetworkModel::Th,
                    _ => return Err(bad()),
                };
                let measure = Measure::parse(measure).ok_or_else(bad)?;
                Ok(NetworkSpec::inferred(model, measure, density(d)?))
            }
            _ => Err(bad()),
        }
    }
}

/// One grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub network: NetworkSpec,
    pub locality: Locality,
    pub task: Task,
    pub classifier: ClassifierKind,
    /// Experiment-level seed; per-config streams derive from it and the key.
    pub seed: u64,
}

impl ModelConfig {
    /// `network|locality|task|classifier`. The seed is experiment-wide and
    /// not part of the key.
    pub fn key(&self) -> String {
        format!("{}|{}|{}|{}", self.network, self.locality, self.task, self.classifier)
    }

    pub fn parse_key(key: &str, seed: u64) -> Result<ModelConfig> {
        let bad = || Error::Config(format!("bad config key {key:?}"));
        let parts: Vec<&str> = key.split('|').collect();
        let [network, locality, task, classifier] = parts.as_slice() else {
            return Err(bad());
        };
        Ok(ModelConfig {
            network: network.parse()?,
            locality: locality.parse()?,
            task: task.parse()?,
            classifier: ClassifierKind::parse(classifier).ok_or_else(bad)?,
            seed,
        })
    }

    /// Seed for this config's random streams.
    pub fn stream_seed(&self) -> u64 {
        rng::derive(self.seed, rng::str_hash(&self.key()))
    }
}
