use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fold: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_fingerprint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Reference classes, one confusion row each.
    pub classes: Vec<String>,
    /// Column labels: the reference classes followed by any label only ever predicted.
    pub predicted_labels: Vec<String>,
    pub confusion: Vec<Vec<u64>>,
    pub support: Vec<u64>,
    pub recall: Vec<f64>,
    pub uar: f64,
    pub meta: ReportMeta,
}

impl EvaluationReport {
    pub fn recall_of(&self, class: &str) -> Option<f64> {
        self.classes.iter().position(|c| c == class).map(|i| self.recall[i])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Header plus one row: metadata, per-class recall columns, UAR.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,system");
        for c in &self.classes {
            let _ = write!(out, ",recall_{c}");
        }
        out.push_str(",uar\n");
        let m = &self.meta;
        let _ = write!(
            out,
            "{},{}",
            m.fold.as_deref().unwrap_or(""),
            m.system.as_deref().unwrap_or("")
        );
        for r in &self.recall {
            let _ = write!(out, ",{r:.6}");
        }
        let _ = writeln!(out, ",{:.6}", self.uar);
        out
    }
}

/// Unweighted average recall over the reference classes in `pairs`.
pub fn compute_uar<S: AsRef<str>>(pairs: &[(S, S)]) -> Result<EvaluationReport> {
    let classes: BTreeSet<&str> = pairs.iter().map(|(r, _)| r.as_ref()).collect();
    let classes: Vec<String> = classes.into_iter().map(str::to_string).collect();
    compute_uar_with_classes(pairs, &classes)
}

/// As [`compute_uar`] with an explicit class list; every class needs at least one reference.
pub fn compute_uar_with_classes<S: AsRef<str>>(pairs: &[(S, S)], classes: &[String]) -> Result<EvaluationReport> {
    if pairs.is_empty() {
        return Err(Error::Empty("evaluation pairs"));
    }
    let mut columns: Vec<String> = classes.to_vec();
    let mut col_index: BTreeMap<String, usize> = columns.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
    let mut extra: BTreeSet<&str> = BTreeSet::new();
    for (_, p) in pairs {
        if !col_index.contains_key(p.as_ref()) {
            extra.insert(p.as_ref());
        }
    }
    for e in extra {
        col_index.insert(e.to_string(), columns.len());
        columns.push(e.to_string());
    }
    let mut confusion = vec![vec![0u64; columns.len()]; classes.len()];
    for (r, p) in pairs {
        let row = classes
            .iter()
            .position(|c| c == r.as_ref())
            .ok_or_else(|| Error::InconsistentClasses(format!("reference label `{}` is not in the class list", r.as_ref())))?;
        confusion[row][col_index[p.as_ref()]] += 1;
    }
    let support: Vec<u64> = confusion.iter().map(|row| row.iter().sum()).collect();
    if let Some(i) = support.iter().position(|&s| s == 0) {
        return Err(Error::EmptyReferenceClass(classes[i].clone()));
    }
    let recall: Vec<f64> = (0..classes.len())
        .map(|i| confusion[i][i] as f64 / support[i] as f64)
        .collect();
    let uar = recall.iter().sum::<f64>() / recall.len() as f64;
    Ok(EvaluationReport {
        classes: classes.to_vec(),
        predicted_labels: columns,
        confusion,
        support,
        recall,
        uar,
        meta: ReportMeta::default(),
    })
}
