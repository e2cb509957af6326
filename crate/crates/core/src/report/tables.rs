//! Result tables aggregated from evaluation reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classifier::EvaluationReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportLayout {
    Imbalanced,
    Ablation,
    CrossLingual,
}

/// Row order of the loss ablation.
pub const ABLATION_ROWS: [&str; 4] = ["NoAUG", "L_Model", "L_Model+L_VAR", "L_Total"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Unformatted values behind each numeric cell, row-major; `None` for labels.
    pub values: Vec<Vec<Option<f64>>>,
}

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("| {} |\n", self.header.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(self.header.len()));
        for r in &self.rows {
            let _ = writeln!(out, "| {} |", r.join(" | "));
        }
        out
    }
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n.max(1) as f64
}

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

fn check_classes<'a>(reports: impl IntoIterator<Item = &'a EvaluationReport>) -> Result<Vec<String>> {
    let mut it = reports.into_iter();
    let first = it.next().ok_or(Error::Empty("evaluation reports"))?;
    for r in it {
        if r.classes != first.classes {
            return Err(Error::InconsistentClasses(format!(
                "{:?} vs {:?}",
                first.classes, r.classes
            )));
        }
    }
    Ok(first.classes.clone())
}

fn system_name(r: &EvaluationReport) -> String {
    r.meta.system.clone().unwrap_or_else(|| "default".into())
}

/// Per-class recall and UAR rows, one per system, averaged over folds.
fn per_class_table(reports: &[EvaluationReport], order: &[&str]) -> Result<ResultTable> {
    let classes = check_classes(reports)?;
    let mut groups: BTreeMap<String, Vec<&EvaluationReport>> = BTreeMap::new();
    for r in reports {
        groups.entry(system_name(r)).or_default().push(r);
    }
    let mut names: Vec<String> = order.iter().filter(|n| groups.contains_key(**n)).map(|n| n.to_string()).collect();
    names.extend(groups.keys().filter(|k| !order.contains(&k.as_str())).cloned());

    let mut header = vec!["system".to_string(), "folds".to_string()];
    header.extend(classes.iter().cloned());
    header.push("UAR".into());
    let (mut rows, mut values) = (Vec::new(), Vec::new());
    for name in names {
        let g = &groups[&name];
        let mut row = vec![name.clone(), g.len().to_string()];
        let mut vals = vec![None, None];
        for c in 0..classes.len() {
            let v = mean(g.iter().map(|r| r.recall[c]));
            row.push(pct(v));
            vals.push(Some(v));
        }
        let u = mean(g.iter().map(|r| r.uar));
        row.push(pct(u));
        vals.push(Some(u));
        rows.push(row);
        values.push(vals);
    }
    Ok(ResultTable { header, rows, values })
}

/// UAR per system for every source→target pair.
fn cross_lingual_table(reports: &[EvaluationReport]) -> Result<ResultTable> {
    if reports.is_empty() {
        return Err(Error::Empty("evaluation reports"));
    }
    let mut pairs: BTreeMap<(String, String), BTreeMap<String, Vec<&EvaluationReport>>> = BTreeMap::new();
    for r in reports {
        let key = (
            r.meta.source.clone().unwrap_or_else(|| "?".into()),
            r.meta.target.clone().unwrap_or_else(|| "?".into()),
        );
        pairs.entry(key).or_default().entry(system_name(r)).or_default().push(r);
    }
    for systems in pairs.values() {
        check_classes(systems.values().flatten().copied())?;
    }
    let mut systems: Vec<String> = reports.iter().map(system_name).collect();
    systems.sort();
    systems.dedup();
    if let Some(i) = systems.iter().position(|s| s == "NoAUG") {
        let s = systems.remove(i);
        systems.insert(0, s);
    }
    let mut header = vec!["source→target".to_string()];
    header.extend(systems.iter().cloned());
    let (mut rows, mut values) = (Vec::new(), Vec::new());
    for ((src, tgt), by_system) in &pairs {
        let mut row = vec![format!("{src}→{tgt}")];
        let mut vals = vec![None];
        for s in &systems {
            match by_system.get(s) {
                Some(g) => {
                    let u = mean(g.iter().map(|r| r.uar));
                    row.push(pct(u));
                    vals.push(Some(u));
                }
                None => {
                    row.push("-".into());
                    vals.push(None);
                }
            }
        }
        rows.push(row);
        values.push(vals);
    }
    Ok(ResultTable { header, rows, values })
}

/// Aggregates fold reports into a table (values in percent, two decimals).
pub fn emit_report(reports: &[EvaluationReport], layout: ReportLayout) -> Result<ResultTable> {
    match layout {
        ReportLayout::Imbalanced => per_class_table(reports, &["NoAUG", "AUG"]),
        ReportLayout::Ablation => per_class_table(reports, &ABLATION_ROWS),
        ReportLayout::CrossLingual => cross_lingual_table(reports),
    }
}
