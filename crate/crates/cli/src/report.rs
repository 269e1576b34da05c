//! Per-N result records, sweep bundles and their tabular form.

use std::collections::{BTreeMap, BTreeSet};

use mqs_core::certifier::{Assessment, TradeoffReport};
use mqs_core::indices::{fit_exponent, ExponentFit};
use serde::Serialize;

use crate::emit::{format_float, Table};

/// Everything measured at one lattice size.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PointRecord {
    pub n: usize,
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub flags: BTreeMap<String, bool>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub tradeoffs: BTreeMap<String, Assessment<TradeoffReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl PointRecord {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            ..Default::default()
        }
    }

    pub fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.to_string(), v);
    }

    pub fn flag(&mut self, key: &str, v: bool) {
        self.flags.insert(key.to_string(), v);
    }

    pub fn label(&mut self, key: &str, v: impl Into<String>) {
        self.labels.insert(key.to_string(), v.into());
    }

    /// Stores a trade-off assessment and mirrors its main numbers into `values`.
    pub fn tradeoff(&mut self, key: &str, t: Assessment<TradeoffReport>) {
        match &t {
            Assessment::Applicable(r) => {
                self.value(&format!("{key}_lhs"), r.lhs);
                self.value(&format!("{key}_rhs"), r.rhs);
                self.value(&format!("{key}_slack"), r.slack);
                self.flag(&format!("{key}_holds"), r.holds);
            }
            Assessment::Inapplicable { .. } => self.label(&format!("{key}_status"), "inapplicable"),
            Assessment::Rejected { .. } => self.label(&format!("{key}_status"), "rejected"),
        }
        self.tradeoffs.insert(key.to_string(), t);
    }

    pub fn violations(&self) -> usize {
        self.tradeoffs
            .values()
            .filter(|t| matches!(t, Assessment::Applicable(r) if !r.holds))
            .count()
    }

    pub fn rejected(&self) -> usize {
        self.tradeoffs
            .values()
            .filter(|t| matches!(t, Assessment::Rejected { .. }))
            .count()
    }
}

/// Records over a range of lattice sizes with log-log fits of tracked values.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    /// `index-p`, `index-q` or `scenario`.
    pub kind: String,
    /// State or scenario name.
    pub name: String,
    pub spec: serde_json::Value,
    pub seed: u64,
    pub records: Vec<PointRecord>,
    pub fits: BTreeMap<String, ExponentFit>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub fit_errors: BTreeMap<String, String>,
    pub violations: usize,
    pub rejected: usize,
}

impl SweepResult {
    pub fn new(kind: &str, name: &str, spec: serde_json::Value, seed: u64, records: Vec<PointRecord>) -> Self {
        let violations = records.iter().map(PointRecord::violations).sum();
        let rejected = records.iter().map(PointRecord::rejected).sum();
        Self {
            kind: kind.into(),
            name: name.into(),
            spec,
            seed,
            records,
            fits: BTreeMap::new(),
            fit_errors: BTreeMap::new(),
            violations,
            rejected,
        }
    }

    pub fn points(&self, key: &str) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.values.get(key).map(|v| (r.n, *v)))
            .collect()
    }

    /// Fits `key` against N when at least three sizes were run.
    pub fn fit(&mut self, key: &str) {
        let pts = self.points(key);
        if pts.len() < 3 {
            return;
        }
        match fit_exponent(&pts) {
            Ok(f) => {
                self.fits.insert(key.to_string(), f);
            }
            Err(e) => {
                self.fit_errors.insert(key.to_string(), e.to_string());
            }
        }
    }

    pub fn to_table(&self) -> Table {
        let values: BTreeSet<&String> = self.records.iter().flat_map(|r| r.values.keys()).collect();
        let flags: BTreeSet<&String> = self.records.iter().flat_map(|r| r.flags.keys()).collect();
        let labels: BTreeSet<&String> = self.records.iter().flat_map(|r| r.labels.keys()).collect();
        let timed = self.records.iter().any(|r| r.timing_ms.is_some());
        let mut header = vec!["n".to_string()];
        header.extend(values.iter().map(|k| k.to_string()));
        header.extend(flags.iter().map(|k| k.to_string()));
        header.extend(labels.iter().map(|k| k.to_string()));
        if timed {
            header.push("timing_ms".into());
        }
        for k in self.fits.keys() {
            header.push(format!("fit_{k}_exponent"));
            header.push(format!("fit_{k}_stderr"));
        }
        let rows = self
            .records
            .iter()
            .map(|r| {
                let mut row = vec![r.n.to_string()];
                row.extend(values.iter().map(|k| r.values.get(*k).map(|v| format_float(*v)).unwrap_or_default()));
                row.extend(flags.iter().map(|k| r.flags.get(*k).map(|v| v.to_string()).unwrap_or_default()));
                row.extend(labels.iter().map(|k| r.labels.get(*k).cloned().unwrap_or_default()));
                if timed {
                    row.push(r.timing_ms.map(format_float).unwrap_or_default());
                }
                for f in self.fits.values() {
                    row.push(format_float(f.exponent));
                    row.push(format_float(f.stderr));
                }
                row
            })
            .collect();
        Table { header, rows }
    }
}
