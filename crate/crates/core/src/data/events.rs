use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One timestamped attribute observation, with `node` already densified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub node: u32,
    pub item: u32,
    pub value: f64,
    pub timestamp: i64,
}

/// Dense node index → original node id, assigned by first appearance.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IdMap {
    original: Vec<u64>,
    #[serde(skip)]
    lookup: HashMap<u64, u32>,
}

impl PartialEq for IdMap {
    fn eq(&self, other: &Self) -> bool {
        self.original == other.original
    }
}

impl IdMap {
    pub fn identity(n: usize) -> Self {
        let mut m = IdMap::default();
        for i in 0..n as u64 {
            m.intern(i);
        }
        m
    }

    pub fn intern(&mut self, id: u64) -> u32 {
        if self.lookup.len() != self.original.len() {
            self.rebuild();
        }
        if let Some(&d) = self.lookup.get(&id) {
            return d;
        }
        let d = self.original.len() as u32;
        self.original.push(id);
        self.lookup.insert(id, d);
        d
    }

    fn rebuild(&mut self) {
        self.lookup = self
            .original
            .iter()
            .enumerate()
            .map(|(d, &o)| (o, d as u32))
            .collect();
    }

    pub fn dense(&self, id: u64) -> Option<u32> {
        if self.lookup.len() == self.original.len() {
            self.lookup.get(&id).copied()
        } else {
            self.original.iter().position(|&o| o == id).map(|p| p as u32)
        }
    }

    pub fn original(&self, dense: u32) -> u64 {
        self.original[dense as usize]
    }

    pub fn len(&self) -> usize {
        self.original.len()
    }

    pub fn is_empty(&self) -> bool {
        self.original.is_empty()
    }

    /// Sidecar file: `dense<TAB>original` per line.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = String::new();
        for (d, o) in self.original.iter().enumerate() {
            s.push_str(&format!("{d}\t{o}\n"));
        }
        fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

/// Raw attribute events for every node.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub events: Vec<Event>,
    pub ids: IdMap,
}

impl EventLog {
    pub fn n_nodes(&self) -> usize {
        self.ids.len()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn total_value(&self) -> f64 {
        self.events.iter().map(|e| e.value).sum()
    }

    /// Stable sort by timestamp.
    pub fn sort_by_time(&mut self) {
        self.events.sort_by_key(|e| e.timestamp);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    #[default]
    Tsv,
    Csv,
}

impl TableFormat {
    fn delimiter(self) -> char {
        match self {
            TableFormat::Tsv => '\t',
            TableFormat::Csv => ',',
        }
    }

    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => TableFormat::Csv,
            _ => TableFormat::Tsv,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    pub format: TableFormat,
    pub header: bool,
    /// Reject the whole file on the first malformed line.
    pub strict: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: usize,
    /// Up to the first 10 rejected lines as `(line number, reason)`.
    pub samples: Vec<(usize, String)>,
}

fn parse_line(line: &str, delim: char) -> std::result::Result<(u64, u32, f64, i64), String> {
    let cols: Vec<&str> = line.split(delim).map(str::trim).collect();
    if cols.len() != 4 {
        return Err(format!("expected 4 columns, found {}", cols.len()));
    }
    let node: u64 = cols[0].parse().map_err(|_| format!("bad node id {:?}", cols[0]))?;
    let item: u32 = cols[1].parse().map_err(|_| format!("bad item id {:?}", cols[1]))?;
    let value: f64 = cols[2].parse().map_err(|_| format!("bad value {:?}", cols[2]))?;
    if !value.is_finite() || value < 0.0 {
        return Err(format!("value must be finite and non-negative, got {value}"));
    }
    let ts: i64 = cols[3].parse().map_err(|_| format!("bad timestamp {:?}", cols[3]))?;
    Ok((node, item, value, ts))
}

/// Read `node_id, item_id, value, timestamp` rows.
///
/// Blank lines are ignored. Malformed lines are counted and skipped unless
/// `opts.strict` is set.
pub fn ingest_events(path: &Path, opts: IngestOptions) -> Result<(EventLog, IngestReport)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let delim = opts.format.delimiter();
    let mut log = EventLog::default();
    let mut report = IngestReport::default();
    for (lineno, line) in text.lines().enumerate() {
        if opts.header && lineno == 0 {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(line, delim) {
            Ok((node, item, value, timestamp)) => {
                let node = log.ids.intern(node);
                log.events.push(Event {
                    node,
                    item,
                    value,
                    timestamp,
                });
                report.accepted += 1;
            }
            Err(msg) => {
                if opts.strict {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        line: lineno + 1,
                        msg,
                    });
                }
                report.rejected += 1;
                if report.samples.len() < 10 {
                    report.samples.push((lineno + 1, msg));
                }
            }
        }
    }
    if report.rejected > 0 {
        log::warn!("{}: skipped {} malformed lines", path.display(), report.rejected);
    }
    Ok((log, report))
}

/// Write events with their original node ids, one per line, no header.
pub fn write_events(path: &Path, log: &EventLog, format: TableFormat) -> Result<()> {
    let d = format.delimiter();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for e in &log.events {
        writeln!(
            w,
            "{}{d}{}{d}{}{d}{}",
            log.ids.original(e.node),
            e.item,
            e.value,
            e.timestamp
        )
        .map_err(|err| Error::io(path, err))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), content).unwrap();
        f
    }

    #[test]
    fn three_wellformed_lines() {
        let f = write_tmp("10\t1\t2.0\t100\n11\t2\t1\t101\n10\t3\t4\t102\n");
        let (log, rep) = ingest_events(f.path(), IngestOptions::default()).unwrap();
        assert_eq!(log.len(), 3);
        assert_eq!(rep.rejected, 0);
        assert_eq!(log.n_nodes(), 2);
        assert_eq!(log.events[2].node, 0);
        assert_eq!(log.ids.original(1), 11);
    }

    #[test]
    fn empty_file() {
        let f = write_tmp("");
        let (log, rep) = ingest_events(f.path(), IngestOptions::default()).unwrap();
        assert!(log.is_empty());
        assert_eq!(rep.rejected, 0);
    }

    #[test]
    fn one_malformed_of_four() {
        let f = write_tmp("1,1,1,1\n2,2,x,2\n3,3,3,3\n4,4,4,4\n");
        let opts = IngestOptions {
            format: TableFormat::Csv,
            ..Default::default()
        };
        let (log, rep) = ingest_events(f.path(), opts).unwrap();
        assert_eq!(log.len(), 3);
        assert_eq!(rep.rejected, 1);
        assert_eq!(rep.samples[0].0, 2);
    }

    #[test]
    fn strict_mode_fails_on_malformed() {
        let f = write_tmp("1\t1\t1\t1\n1\t1\t-3\t1\n");
        let opts = IngestOptions {
            strict: true,
            ..Default::default()
        };
        assert!(matches!(ingest_events(f.path(), opts), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn header_is_skipped() {
        let f = write_tmp("node,item,value,ts\n5,1,1,1\n");
        let opts = IngestOptions {
            format: TableFormat::Csv,
            header: true,
            strict: true,
        };
        let (log, _) = ingest_events(f.path(), opts).unwrap();
        assert_eq!(log.len(), 1);
    }

    #[test]
    fn unreadable_file_is_fatal() {
        let r = ingest_events(Path::new("/nonexistent/events.tsv"), IngestOptions::default());
        assert!(matches!(r, Err(Error::Io { .. })));
    }

    #[test]
    fn write_then_ingest_preserves_records() {
        let f = write_tmp("7\t1\t2.5\t3\n9\t4\t1\t1\n");
        let (log, _) = ingest_events(f.path(), IngestOptions::default()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_events(out.path(), &log, TableFormat::Tsv).unwrap();
        let (again, _) = ingest_events(out.path(), IngestOptions::default()).unwrap();
        assert_eq!(log.events, again.events);
    }
}
