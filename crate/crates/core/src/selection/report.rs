//! CSV tables for the selection battery. Fields never contain commas
//! (config keys use `:` and `|`), so no quoting is done.

use std::fmt::Write as _;
use std::path::Path;

use super::{CrossTaskTable, EvaluationRecord, NodeDifficulty, SelectionReport, Selector};
use crate::error::{Error, Result};
use crate::learn::ClassifierKind;
use crate::tasks::{ModelConfig, Task};

const RESULTS_HEADER: &str = "config_key,network,measure,density,locality,task,classifier,\
precision_validation,precision_testing,records_validation,records_testing,\
fallback_validation,fallback_testing,empty_validation,empty_testing";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per config in the given order.
pub fn results_csv(records: &[EvaluationRecord]) -> Result<String> {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in records {
        let c = ModelConfig::parse_key(&r.config_key, 0)?;
        let network = match &c.network.name {
            Some(name) => format!("explicit:{name}"),
            None => format!("{:?}", c.network.model).to_lowercase(),
        };
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.config_key,
            network,
            opt(c.network.measure.map(|m| m.as_str())),
            opt(c.network.density),
            c.locality,
            c.task,
            c.classifier.as_str(),
            r.precision_validation,
            r.precision_testing,
            r.records_validation,
            r.records_testing,
            r.fallback_validation,
            r.fallback_testing,
            r.empty_validation,
            r.empty_testing
        )
        .expect("writing to a String");
    }
    Ok(s)
}

/// Parse `results.csv` text back into records.
pub fn parse_results_csv(text: &str, path: &Path) -> Result<Vec<EvaluationRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == RESULTS_HEADER => {}
        _ => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: "missing results header".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse {
            path: path.to_path_buf(),
            line: no + 1,
            msg: msg.to_string(),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 15 {
            return Err(err("expected 15 fields"));
        }
        let real = |x: &str| x.parse::<f64>().map_err(|_| err("bad number"));
        let int = |x: &str| x.parse::<usize>().map_err(|_| err("bad count"));
        let flag = |x: &str| x.parse::<bool>().map_err(|_| err("bad flag"));
        ModelConfig::parse_key(f[0], 0)?;
        out.push(EvaluationRecord {
            config_key: f[0].to_string(),
            precision_validation: real(f[7])?,
            precision_testing: real(f[8])?,
            records_validation: int(f[9])?,
            records_testing: int(f[10])?,
            fallback_validation: int(f[11])?,
            fallback_testing: int(f[12])?,
            empty_validation: flag(f[13])?,
            empty_testing: flag(f[14])?,
        });
    }
    Ok(out)
}

pub fn read_results_csv(path: &Path) -> Result<Vec<EvaluationRecord>> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_results_csv(&text, path)
}

/// One row per (task, classifier) cell.
pub fn selection_csv(rows: &[(Task, ClassifierKind, SelectionReport)]) -> String {
    let mut s = String::from(
        "task,classifier,n_configs,mu,mu_top10,delta_mu,p1,delta_p1,selected_key,selected_rank,\
tau,tau_p,tau10,intersection10,intersection_k,bold_delta_p1,bold_rank\n",
    );
    for (t, c, r) in rows {
        writeln!(
            s,
            "{t},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.as_str(),
            r.n_configs,
            r.mu,
            r.mu_top10,
            r.delta_mu,
            r.p1,
            r.delta_p1,
            r.selected_key,
            r.selected_rank,
            r.tau,
            r.tau_p,
            r.tau10,
            r.intersection10,
            r.intersection_k,
            r.bold_delta_p1,
            r.bold_rank
        )
        .expect("writing to a String");
    }
    s
}

/// Missing cells have empty value columns.
pub fn cross_task_csv(tables: &[(ClassifierKind, CrossTaskTable)]) -> String {
    let mut s = String::from("classifier,selector,evaluation,selected_model,evaluated_key,delta_p1,rank\n");
    for (c, table) in tables {
        for ((sel, task), cell) in &table.cells {
            let sel: &Selector = sel;
            match cell {
                Some(x) => writeln!(
                    s,
                    "{},{},{task},{},{},{},{}",
                    c.as_str(),
                    sel.as_str(),
                    x.selected_key,
                    x.evaluated_key,
                    x.delta_p1,
                    x.rank
                ),
                None => writeln!(s, "{},{},{task},,,,", c.as_str(), sel.as_str()),
            }
            .expect("writing to a String");
        }
    }
    s
}

/// `value` is empty and `note` names the reason when the statistic is
/// undefined.
pub fn match_mismatch_csv(rows: &[(Task, ClassifierKind, &str, std::result::Result<f64, String>)]) -> String {
    let mut s = String::from("task,classifier,group_by,value,note\n");
    for (t, c, g, v) in rows {
        match v {
            Ok(x) => writeln!(s, "{t},{},{g},{x},", c.as_str()),
            Err(e) => writeln!(s, "{t},{},{g},,{}", c.as_str(), e.replace(',', ";")),
        }
        .expect("writing to a String");
    }
    s
}

pub fn node_difficulty_csv(rows: &[(Task, ClassifierKind, Vec<NodeDifficulty>)]) -> String {
    let mut s = String::from("task,classifier,node,precision,records\n");
    for (t, c, nodes) in rows {
        for n in nodes {
            writeln!(s, "{t},{},{},{},{}", c.as_str(), n.node, n.precision, n.records).expect("writing to a String");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_roundtrip() {
        let mut r = EvaluationRecord::new("knn:int:0.01|adjacency|cc|svm", 0.25, 0.5);
        r.records_testing = 7;
        r.empty_validation = true;
        let r2 = EvaluationRecord::new("explicit:label|global|lp|rf", 1.0 / 3.0, 0.0);
        let text = results_csv(&[r.clone(), r2.clone()]).unwrap();
        let back = parse_results_csv(&text, Path::new("x")).unwrap();
        assert_eq!(back, vec![r, r2]);
    }
}
