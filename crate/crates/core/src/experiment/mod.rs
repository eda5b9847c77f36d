//! Config-grid experiments as a chain of cacheable stages.
//!
//! Each stage reads the previous stage's files under the output directory
//! and writes its own, so `synth → ingest → infer → evaluate → select →
//! report` run one by one ends in the same bytes as [`run_experiment`].
//! Every file is written to a temporary path and renamed into place.

mod config;

pub use config::{DatasetConfig, ExperimentConfig, GridConfig, PartitionChoice, TaskParams};

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::community::{louvain, CommunityAssignment};
use crate::data::{
    ingest_events, load_explicit_edges, load_label_rules, partition_by_time, rules_to_toml, synth_generate,
    write_events, IdMap, IngestOptions, PartitionMode, PartitionOptions, PartitionedDataset, Role, TableFormat,
};
use crate::error::{Error, Result};
use crate::graph::{split_edges_random, write_pairs, EdgeSet, Provenance};
use crate::learn::ClassifierKind;
use crate::rng;
use crate::selection::{
    cross_task, cross_task_csv, match_mismatch, match_mismatch_csv, node_difficulty, node_difficulty_csv,
    parse_results_csv, results_csv, selection_csv, selection_stats, EvaluationRecord, GroupBy,
};
use crate::tasks::{
    run_cc, run_lp, LeakageAudit, Locality, LpGraphs, ModelConfig, NetworkModel, NetworkSpec, PredictionBatch, Task,
    TaskContext,
};

/// Configs ranked into the node-difficulty union from each partition.
pub const DIFFICULTY_TOP: usize = 5;

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Let `write` fill a temporary file, then rename it over `path`.
pub fn write_atomic_with(path: &Path, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = tmp_path(path);
    if let Err(e) = write(&tmp) {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic_with(path, |tmp| fs::write(tmp, bytes).map_err(|e| Error::io(tmp, e)))
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingInput(path.to_path_buf()))
    }
}

/// File-name form of a key: `:` → `_`, `|` → `__`.
pub fn file_stem(key: &str) -> String {
    key.replace('|', "__").replace(':', "_")
}

/// Where each artifact lives under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Layout {
        Layout { root: root.into() }
    }

    pub fn synth_dir(&self) -> PathBuf {
        self.root.join("synth")
    }

    pub fn dataset(&self) -> PathBuf {
        self.root.join("dataset.json")
    }

    pub fn explicit(&self, name: &str) -> PathBuf {
        self.root.join("explicit").join(format!("{name}.tsv"))
    }

    pub fn network(&self, net: &NetworkSpec, view: View) -> PathBuf {
        self.root.join("networks").join(format!("{}.{}.tsv", file_stem(&net.key()), view.as_str()))
    }

    pub fn communities(&self, net: &NetworkSpec, view: View) -> PathBuf {
        self.root.join("communities").join(format!("{}.{}.tsv", file_stem(&net.key()), view.as_str()))
    }

    pub fn batch(&self, key: &str) -> PathBuf {
        self.root.join("batches").join(format!("{}.tsv", file_stem(key)))
    }

    pub fn results(&self) -> PathBuf {
        self.root.join("results.csv")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn selection(&self) -> PathBuf {
        self.root.join("selection.csv")
    }

    pub fn cross_task(&self) -> PathBuf {
        self.root.join("cross_task.csv")
    }

    pub fn match_mismatch(&self) -> PathBuf {
        self.root.join("match_mismatch.csv")
    }

    pub fn node_difficulty(&self) -> PathBuf {
        self.root.join("node_difficulty.csv")
    }
}

/// One stored graph of a network model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum View {
    /// Whole explicit network (CC on explicit models).
    Full,
    Training,
    Validation,
    Testing,
}

impl View {
    pub fn as_str(self) -> &'static str {
        match self {
            View::Full => "full",
            View::Training => "training",
            View::Validation => "validation",
            View::Testing => "testing",
        }
    }

    /// Graph the task's classifiers train on.
    pub fn task_graph(net: &NetworkSpec, task: Task) -> View {
        match (net.model, task) {
            (NetworkModel::Explicit, Task::Cc) => View::Full,
            _ => View::Training,
        }
    }
}

/// What `ingest` stores: the partitioned dataset plus its id map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetArtifact {
    pub ids: IdMap,
    pub parts: PartitionedDataset,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct SynthMeta {
    seed: u64,
    boundaries: (i64, i64),
}

/// Generate the synthetic dataset files (`synth/`). No-op for event data.
pub fn stage_synth(cfg: &ExperimentConfig) -> Result<()> {
    let Some(spec) = &cfg.dataset.synth else {
        return Ok(());
    };
    let layout = Layout::new(cfg.out_dir());
    let dir = layout.synth_dir();
    let data = synth_generate(cfg.seed, spec)?;
    write_atomic_with(&dir.join("events.tsv"), |p| write_events(p, &data.log, TableFormat::Tsv))?;
    write_atomic(&dir.join("label_rules.toml"), rules_to_toml(&data.rules).as_bytes())?;
    for (name, g) in [("label", &data.label_graph), ("formation", &data.formation_graph)] {
        let pairs: Vec<(u32, u32)> = g
            .edges()
            .iter()
            .map(|e| (data.log.ids.original(e.u) as u32, data.log.ids.original(e.v) as u32))
            .collect();
        write_atomic_with(&dir.join(format!("{name}.tsv")), |p| write_pairs(p, &pairs))?;
    }
    let meta = SynthMeta {
        seed: cfg.seed,
        boundaries: data.boundaries,
    };
    write_atomic(&dir.join("meta.json"), serde_json::to_string_pretty(&meta)?.as_bytes())
}

/// Read events, partition by time and derive labels (`dataset.json`); load
/// explicit networks (`explicit/*.tsv`).
pub fn stage_ingest(cfg: &ExperimentConfig, strict: bool) -> Result<DatasetArtifact> {
    let layout = Layout::new(cfg.out_dir());
    let d = &cfg.dataset;
    let synth_dir = layout.synth_dir();
    let (events, rules, mut explicit, synth_bounds) = if d.synth.is_some() {
        let meta_path = synth_dir.join("meta.json");
        require(&meta_path)?;
        let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: SynthMeta = serde_json::from_str(&text)?;
        let explicit: BTreeMap<String, PathBuf> = ["label", "formation"]
            .iter()
            .map(|n| (n.to_string(), synth_dir.join(format!("{n}.tsv"))))
            .collect();
        (synth_dir.join("events.tsv"), synth_dir.join("label_rules.toml"), explicit, Some(meta.boundaries))
    } else {
        let events = cfg.resolve(d.events.as_ref().expect("validated"));
        let rules = cfg.resolve(d.label_rules.as_ref().expect("validated"));
        (events, rules, BTreeMap::new(), None)
    };
    for (name, p) in &d.explicit {
        explicit.insert(name.clone(), cfg.resolve(p));
    }
    require(&events)?;
    require(&rules)?;

    let opts = IngestOptions {
        format: d.format.unwrap_or_else(|| TableFormat::from_path(&events)),
        header: d.header,
        strict,
    };
    let (log, report) = ingest_events(&events, opts)?;
    let rules = load_label_rules(&rules)?;
    let mode = match (d.partition, d.boundaries, synth_bounds) {
        (PartitionChoice::Explicit, Some([b1, b2]), _) => PartitionMode::Explicit(b1, b2),
        (PartitionChoice::Auto, _, Some((b1, b2))) => PartitionMode::Explicit(b1, b2),
        _ => PartitionMode::EqualFrequency,
    };
    let popts = PartitionOptions {
        mode,
        roles: d.roles,
        aggregation: d.aggregation,
    };
    let mut parts = partition_by_time(&log, &popts)?;
    parts.apply_label_rules(&rules);

    for (name, p) in &explicit {
        if !cfg.grid.explicit.contains(name) {
            continue;
        }
        require(p)?;
        let loaded = load_explicit_edges(p, log.n_nodes(), Some(&log.ids))?;
        // Name the network rather than the file so outputs do not depend on
        // where the experiment lives.
        let g = loaded.edges.with_edges(loaded.edges.edges().to_vec(), Provenance::explicit(name.as_str()));
        write_atomic_with(&layout.explicit(name), |tmp| g.write_tsv(tmp))?;
    }
    let artifact = DatasetArtifact {
        ids: log.ids.clone(),
        parts,
        accepted: report.accepted,
        rejected: report.rejected,
    };
    write_atomic(&layout.dataset(), serde_json::to_string(&artifact)?.as_bytes())?;
    Ok(artifact)
}

fn read_dataset(layout: &Layout) -> Result<DatasetArtifact> {
    let path = layout.dataset();
    require(&path)?;
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

/// Views each network needs under the grid's tasks, and whether communities
/// are needed on its task graphs.
fn needed_views(cfg: &ExperimentConfig) -> Result<BTreeMap<String, (NetworkSpec, BTreeSet<View>, BTreeSet<View>)>> {
    let mut out: BTreeMap<String, (NetworkSpec, BTreeSet<View>, BTreeSet<View>)> = BTreeMap::new();
    for c in cfg.grid_configs()? {
        let entry = out.entry(c.network.key()).or_insert_with(|| (c.network.clone(), BTreeSet::new(), BTreeSet::new()));
        let views: &[View] = match c.task {
            Task::Cc => &[View::task_graph(&c.network, Task::Cc)],
            Task::Lp => &[View::Training, View::Validation, View::Testing],
        };
        entry.1.extend(views.iter().copied());
        if c.network.model == NetworkModel::Explicit && c.task == Task::Lp {
            entry.1.insert(View::Full);
        }
        if c.locality == Locality::Community {
            entry.2.insert(View::task_graph(&c.network, c.task));
        }
    }
    Ok(out)
}

/// Keep `fraction` of the edges, chosen by a seeded shuffle.
fn thin(g: &EdgeSet, fraction: f64, seed: u64) -> EdgeSet {
    let mut edges = g.edges().to_vec();
    edges.shuffle(&mut rng::rng(seed));
    edges.truncate((fraction * edges.len() as f64).round() as usize);
    g.with_edges(edges, g.provenance().clone())
}

fn build_views(
    cfg: &ExperimentConfig,
    layout: &Layout,
    data: &DatasetArtifact,
    net: &NetworkSpec,
    views: &BTreeSet<View>,
) -> Result<BTreeMap<View, EdgeSet>> {
    let mut out = BTreeMap::new();
    if net.model == NetworkModel::Explicit {
        let name = net.name.as_deref().expect("explicit networks are named");
        let path = layout.explicit(name);
        require(&path)?;
        let mut full = EdgeSet::read_tsv(&path)?;
        if let Some(f) = net.density {
            full = thin(&full, f, rng::derive(cfg.seed, rng::str_hash(&format!("thin:{}", net.key()))));
        }
        if views.iter().any(|v| *v != View::Full) {
            let split_seed = rng::derive(cfg.seed, rng::str_hash(&format!("split:{}", net.key())));
            let [tr, va, te] = split_edges_random(&full, cfg.tasks.lp_split, split_seed)?;
            out.insert(View::Training, tr);
            out.insert(View::Validation, va);
            out.insert(View::Testing, te);
        }
        out.insert(View::Full, full);
        out.retain(|v, _| views.contains(v));
    } else {
        for &v in views {
            let role = match v {
                View::Training => cfg.tasks.network_source,
                View::Validation => Role::Validation,
                View::Testing => Role::Testing,
                View::Full => unreachable!("inferred networks have no full view"),
            };
            out.insert(v, net.build(&data.parts.get(role).matrix, role.as_str())?);
        }
    }
    Ok(out)
}

/// Build every network view the grid needs (`networks/`) and the Louvain
/// communities of task graphs (`communities/`).
pub fn stage_infer(cfg: &ExperimentConfig) -> Result<()> {
    let layout = Layout::new(cfg.out_dir());
    let data = read_dataset(&layout)?;
    let needed: Vec<_> = needed_views(cfg)?.into_values().collect();
    pool(cfg.workers)?.install(|| {
        needed.par_iter().try_for_each(|(net, views, comm_views)| -> Result<()> {
            let built = build_views(cfg, &layout, &data, net, views)
                .map_err(|e| Error::InConfig { key: net.key(), source: Box::new(e) })?;
            for (view, g) in &built {
                write_atomic_with(&layout.network(net, *view), |p| g.write_tsv(p))?;
            }
            for view in comm_views {
                let seed = rng::derive(cfg.seed, rng::str_hash(&format!("louvain:{}.{}", net.key(), view.as_str())));
                let assignment = louvain(&built[view], seed);
                write_atomic_with(&layout.communities(net, *view), |p| assignment.write_tsv(p))?;
            }
            Ok(())
        })
    })
}

/// Counters of one config in the manifest. Timings only go to the log, so
/// the manifest is identical across reruns and worker counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigRun {
    pub key: String,
    pub stream_seed: u64,
    pub records: usize,
    pub untrainable: usize,
    pub global_fallback: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub prng: String,
    pub seed: u64,
    pub n_configs: usize,
    pub audit: LeakageAudit,
    pub configs: Vec<ConfigRun>,
}

/// What [`stage_evaluate`] hands back besides its files.
#[derive(Debug, Clone)]
pub struct EvaluateSummary {
    pub records: Vec<EvaluationRecord>,
    pub audit: LeakageAudit,
    pub manifest: Manifest,
}

type Graphs = BTreeMap<(String, View), EdgeSet>;
type Communities = BTreeMap<(String, View), CommunityAssignment>;

fn load_graphs(cfg: &ExperimentConfig, layout: &Layout) -> Result<(Graphs, Communities)> {
    let mut graphs = BTreeMap::new();
    let mut comms = BTreeMap::new();
    for (key, (net, views, comm_views)) in needed_views(cfg)? {
        for v in views {
            let p = layout.network(&net, v);
            require(&p)?;
            graphs.insert((key.clone(), v), EdgeSet::read_tsv(&p)?);
        }
        for v in comm_views {
            let p = layout.communities(&net, v);
            require(&p)?;
            comms.insert((key.clone(), v), CommunityAssignment::read_tsv(&p)?);
        }
    }
    Ok((graphs, comms))
}

fn run_config(cfg: &ModelConfig, graphs: &Graphs, comms: &Communities, ctx: &TaskContext) -> Result<PredictionBatch> {
    let net = cfg.network.key();
    let graph = |v: View| &graphs[&(net.clone(), v)];
    let tv = View::task_graph(&cfg.network, cfg.task);
    let comm = comms.get(&(net.clone(), tv));
    match cfg.task {
        Task::Cc => run_cc(cfg, graph(tv), comm, ctx),
        Task::Lp => {
            let inferred_union;
            let union = if cfg.network.model == NetworkModel::Explicit {
                graph(View::Full)
            } else {
                inferred_union =
                    EdgeSet::union_undirected(&[graph(View::Training), graph(View::Validation), graph(View::Testing)]);
                &inferred_union
            };
            let lg = LpGraphs {
                train: graph(View::Training),
                validation: graph(View::Validation),
                testing: graph(View::Testing),
                union,
            };
            run_lp(cfg, lg, comm, ctx)
        }
    }
}

/// Run every grid config on both evaluation partitions (`batches/`,
/// `results.csv`, `manifest.json`).
pub fn stage_evaluate(cfg: &ExperimentConfig) -> Result<EvaluateSummary> {
    let layout = Layout::new(cfg.out_dir());
    let data = read_dataset(&layout)?;
    let (graphs, comms) = load_graphs(cfg, &layout)?;
    let configs = cfg.grid_configs()?;
    let ctx = TaskContext {
        parts: &data.parts,
        locality: &cfg.locality,
        learn: &cfg.learn,
        positives_only: cfg.tasks.positives_only,
    };
    let runs: Vec<PredictionBatch> = pool(cfg.workers)?.install(|| {
        configs
            .par_iter()
            .map(|c| {
                let start = Instant::now();
                let batch = run_config(c, &graphs, &comms, &ctx).map_err(|e| Error::InConfig {
                    key: c.key(),
                    source: Box::new(e),
                })?;
                log::info!("{} done in {:.2?}", c.key(), start.elapsed());
                Ok(batch)
            })
            .collect::<Result<_>>()
    })?;

    let mut audit = LeakageAudit::default();
    let mut records = Vec::with_capacity(runs.len());
    let mut manifest_runs = Vec::with_capacity(runs.len());
    for (batch, c) in runs.iter().zip(&configs) {
        write_atomic(&layout.batch(&batch.config_key), batch.to_tsv().as_bytes())?;
        audit.merge(batch.stats.audit);
        records.push(EvaluationRecord::from_batch(batch)?);
        manifest_runs.push(ConfigRun {
            key: batch.config_key.clone(),
            stream_seed: c.stream_seed(),
            records: batch.records.len(),
            untrainable: batch.stats.untrainable,
            global_fallback: batch.stats.global_fallback,
            skipped: batch.stats.skipped,
        });
    }
    write_atomic(&layout.results(), results_csv(&records)?.as_bytes())?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        prng: cfg.prng.clone(),
        seed: cfg.seed,
        n_configs: configs.len(),
        audit,
        configs: manifest_runs,
    };
    write_atomic(&layout.manifest(), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(EvaluateSummary {
        records,
        audit,
        manifest,
    })
}

/// Records grouped by (task, classifier), each group in input order.
pub fn group_records(records: &[EvaluationRecord]) -> Result<BTreeMap<(Task, ClassifierKind), Vec<EvaluationRecord>>> {
    let mut out: BTreeMap<(Task, ClassifierKind), Vec<EvaluationRecord>> = BTreeMap::new();
    for r in records {
        let c = ModelConfig::parse_key(&r.config_key, 0)?;
        out.entry((c.task, c.classifier)).or_default().push(r.clone());
    }
    Ok(out)
}

/// The selection tables as CSV text.
#[derive(Debug, Clone, PartialEq)]
pub struct Battery {
    pub selection: String,
    pub cross_task: String,
    pub match_mismatch: String,
}

pub fn selection_battery(records: &[EvaluationRecord]) -> Result<Battery> {
    let groups = group_records(records)?;
    let mut sel = Vec::new();
    let mut mm = Vec::new();
    for ((task, clf), recs) in &groups {
        sel.push((*task, *clf, selection_stats(recs)?));
        for g in [GroupBy::Locality, GroupBy::Model] {
            mm.push((*task, *clf, g.as_str(), match_mismatch(recs, g).map_err(|e| e.to_string())));
        }
    }
    let mut cross = Vec::new();
    let classifiers: BTreeSet<ClassifierKind> = groups.keys().map(|k| k.1).collect();
    for clf in classifiers {
        if let (Some(cc), Some(lp)) = (groups.get(&(Task::Cc, clf)), groups.get(&(Task::Lp, clf))) {
            cross.push((clf, cross_task(cc, lp)?));
        }
    }
    Ok(Battery {
        selection: selection_csv(&sel),
        cross_task: cross_task_csv(&cross),
        match_mismatch: match_mismatch_csv(&mm),
    })
}

fn write_battery(layout: &Layout, records: &[EvaluationRecord]) -> Result<()> {
    let b = selection_battery(records)?;
    write_atomic(&layout.selection(), b.selection.as_bytes())?;
    write_atomic(&layout.cross_task(), b.cross_task.as_bytes())?;
    write_atomic(&layout.match_mismatch(), b.match_mismatch.as_bytes())
}

/// Selection statistics from `results.csv` alone.
pub fn stage_select(cfg: &ExperimentConfig) -> Result<()> {
    let layout = Layout::new(cfg.out_dir());
    let path = layout.results();
    require(&path)?;
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    write_battery(&layout, &parse_results_csv(&text, &path)?)
}

/// Regenerate every table from the cached batches, adding node difficulty.
pub fn stage_report(cfg: &ExperimentConfig) -> Result<()> {
    let layout = Layout::new(cfg.out_dir());
    let mut batches = Vec::new();
    for c in cfg.grid_configs()? {
        let p = layout.batch(&c.key());
        require(&p)?;
        batches.push(PredictionBatch::read_tsv(&p)?);
    }
    let records: Vec<EvaluationRecord> = batches.iter().map(EvaluationRecord::from_batch).collect::<Result<_>>()?;
    write_atomic(&layout.results(), results_csv(&records)?.as_bytes())?;
    write_battery(&layout, &records)?;

    let mut rows = Vec::new();
    for ((task, clf), recs) in group_records(&records)? {
        let keys: BTreeSet<&str> = recs.iter().map(|r| r.config_key.as_str()).collect();
        let group_batches: Vec<PredictionBatch> =
            batches.iter().filter(|b| keys.contains(b.config_key.as_str())).cloned().collect();
        let (_, nodes) = node_difficulty(&recs, &group_batches, DIFFICULTY_TOP)?;
        rows.push((task, clf, nodes));
    }
    write_atomic(&layout.node_difficulty(), node_difficulty_csv(&rows).as_bytes())
}

/// Every stage in order.
pub fn run_experiment(cfg: &ExperimentConfig, strict: bool) -> Result<EvaluateSummary> {
    stage_synth(cfg)?;
    stage_ingest(cfg, strict)?;
    stage_infer(cfg)?;
    let summary = stage_evaluate(cfg)?;
    stage_select(cfg)?;
    stage_report(cfg)?;
    Ok(summary)
}
