use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Role;
use crate::error::{Error, Result};

/// Counts of training instances by source partition. Any instance read from
/// a partition other than training is a violation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageAudit {
    pub checks: u64,
    pub violations: u64,
}

impl LeakageAudit {
    pub fn observe(&mut self, role: Role, instances: usize) {
        self.checks += instances as u64;
        if role != Role::Training {
            debug_assert!(false, "training instances read from the {role} partition");
            self.violations += instances as u64;
        }
    }

    pub fn merge(&mut self, other: LeakageAudit) {
        self.checks += other.checks;
        self.violations += other.violations;
    }
}

/// What a record predicts: a labelset (CC) or a node pair (LP).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Label(u32),
    Pair(u32, u32),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Label(l) => write!(f, "{l}"),
            Target::Pair(u, v) => write!(f, "{u}:{v}"),
        }
    }
}

impl FromStr for Target {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Target, ()> {
        match s.split_once(':') {
            Some((u, v)) => Ok(Target::Pair(u.parse().map_err(|_| ())?, v.parse().map_err(|_| ())?)),
            None => Ok(Target::Label(s.parse().map_err(|_| ())?)),
        }
    }
}

/// Why a record did not come from the configured locality's own classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Fallback {
    #[default]
    None,
    /// No usable training data; the conservative default was predicted.
    Untrainable,
    /// The locality could not supply a neighborhood; the global sample was
    /// used instead.
    Global,
}

impl Fallback {
    pub fn as_str(self) -> &'static str {
        match self {
            Fallback::None => "-",
            Fallback::Untrainable => "untrainable",
            Fallback::Global => "global",
        }
    }

    fn parse(s: &str) -> Option<Fallback> {
        match s {
            "-" => Some(Fallback::None),
            "untrainable" => Some(Fallback::Untrainable),
            "global" => Some(Fallback::Global),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Record {
    pub partition: Role,
    pub node: u32,
    pub target: Target,
    pub predicted: u8,
    pub actual: u8,
    pub fallback: Fallback,
}

impl Record {
    fn sort_key(&self) -> (Role, u32, Target) {
        (self.partition, self.node, self.target)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchStats {
    pub audit: LeakageAudit,
    /// Classifiers that could not be trained.
    pub untrainable: usize,
    /// Neighborhoods replaced by the global sample.
    pub global_fallback: usize,
    /// Test nodes with nothing to evaluate.
    pub skipped: usize,
}

impl BatchStats {
    pub fn merge(&mut self, o: BatchStats) {
        self.audit.merge(o.audit);
        self.untrainable += o.untrainable;
        self.global_fallback += o.global_fallback;
        self.skipped += o.skipped;
    }
}

/// All predictions of one config over both evaluation partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBatch {
    pub config_key: String,
    pub records: Vec<Record>,
    pub stats: BatchStats,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config_key: String,
    #[serde(flatten)]
    stats: BatchStats,
}

const COLUMNS: &str = "config_key\tpartition\ttest_node\ttarget_id\tpredicted\tactual\tfallback_flag";

impl PredictionBatch {
    /// Build a batch with records in canonical `(partition, node, target)`
    /// order.
    pub fn new(config_key: String, mut records: Vec<Record>, stats: BatchStats) -> PredictionBatch {
        records.sort_by_key(Record::sort_key);
        PredictionBatch {
            config_key,
            records,
            stats,
        }
    }

    pub fn records_for(&self, role: Role) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(move |r| r.partition == role)
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::with_capacity(64 + self.records.len() * (self.config_key.len() + 32));
        s.push_str("# ");
        let header = Header {
            config_key: self.config_key.clone(),
            stats: self.stats,
        };
        s.push_str(&serde_json::to_string(&header).expect("header serializes"));
        s.push('\n');
        s.push_str(COLUMNS);
        s.push('\n');
        for r in &self.records {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                self.config_key,
                r.partition,
                r.node,
                r.target,
                r.predicted,
                r.actual,
                r.fallback.as_str()
            ));
        }
        s
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_tsv().as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_tsv(path: &Path) -> Result<PredictionBatch> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let bad = |line: usize, msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        };
        let mut lines = text.lines().enumerate();
        let header: Header = match lines.next() {
            Some((_, l)) if l.starts_with("# ") => serde_json::from_str(&l[2..])?,
            _ => return Err(bad(1, "missing batch header")),
        };
        match lines.next() {
            Some((_, l)) if l == COLUMNS => {}
            _ => return Err(bad(2, "missing column header")),
        }
        let mut records = Vec::new();
        for (n, line) in lines {
            let c: Vec<&str> = line.split('\t').collect();
            if c.len() != 7 {
                return Err(bad(n + 1, "expected 7 columns"));
            }
            if c[0] != header.config_key {
                return Err(bad(n + 1, "record config key differs from the header"));
            }
            let bit = |s: &str| match s {
                "0" => Ok(0),
                "1" => Ok(1),
                _ => Err(bad(n + 1, "expected 0 or 1")),
            };
            records.push(Record {
                partition: Role::parse(c[1]).ok_or_else(|| bad(n + 1, "bad partition"))?,
                node: c[2].parse().map_err(|_| bad(n + 1, "bad node"))?,
                target: c[3].parse().map_err(|_| bad(n + 1, "bad target"))?,
                predicted: bit(c[4])?,
                actual: bit(c[5])?,
                fallback: Fallback::parse(c[6]).ok_or_else(|| bad(n + 1, "bad fallback flag"))?,
            });
        }
        Ok(PredictionBatch {
            config_key: header.config_key,
            records,
            stats: header.stats,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tsv_roundtrip_and_order() {
        let r = |partition, node, target, p| Record {
            partition,
            node,
            target,
            predicted: p,
            actual: 1,
            fallback: Fallback::None,
        };
        let b = PredictionBatch::new(
            "k".into(),
            vec![
                r(Role::Testing, 1, Target::Label(0), 1),
                r(Role::Validation, 4, Target::Pair(4, 9), 0),
                r(Role::Validation, 2, Target::Label(3), 1),
            ],
            BatchStats::default(),
        );
        assert_eq!(b.records[0].node, 2);
        assert_eq!(b.records[2].partition, Role::Testing);
        let f = tempfile::NamedTempFile::new().unwrap();
        b.write_tsv(f.path()).unwrap();
        assert_eq!(PredictionBatch::read_tsv(f.path()).unwrap(), b);
    }

    #[test]
    fn audit_counts() {
        let mut a = LeakageAudit::default();
        a.observe(Role::Training, 5);
        assert_eq!(a, LeakageAudit { checks: 5, violations: 0 });
    }
}
