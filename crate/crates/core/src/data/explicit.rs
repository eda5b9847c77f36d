use std::fs;
use std::path::Path;

use super::events::IdMap;
use crate::error::{Error, Result};
use crate::graph::{BuildStats, Edge, EdgeSet, Provenance};

#[derive(Debug, Clone)]
pub struct ExplicitLoad {
    pub edges: EdgeSet,
    pub stats: BuildStats,
}

/// Load an undirected `u<TAB>v` edge list.
///
/// When `ids` is given, columns hold original node ids and are mapped through
/// it; otherwise they are dense indices. Ids outside the node universe are
/// fatal. Extra columns are ignored.
pub fn load_explicit_edges(path: &Path, n_nodes: usize, ids: Option<&IdMap>) -> Result<ExplicitLoad> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(['\t', ',']);
        let mut next = || -> Result<u32> {
            let raw = cols.next().ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                msg: "expected two columns".into(),
            })?;
            let id: u64 = raw.trim().parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                msg: format!("bad node id {raw:?}"),
            })?;
            let dense = match ids {
                Some(map) => map.dense(id).map(u64::from),
                None => Some(id),
            };
            match dense {
                Some(d) if (d as usize) < n_nodes => Ok(d as u32),
                _ => Err(Error::NodeOutOfRange { node: id, n_nodes }),
            }
        };
        let u = next()?;
        let v = next()?;
        edges.push(Edge { u, v, weight: 1.0 });
    }
    let (edges, stats) = EdgeSet::new(n_nodes, false, edges, Provenance::explicit(path.display().to_string()))?;
    Ok(ExplicitLoad { edges, stats })
}
