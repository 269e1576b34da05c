//! Randomized verification suites.

use std::collections::BTreeMap;

use mqs_core::certifier::{run_suite, Suite, SuiteConfig, SuiteReport};
use serde::Serialize;

use crate::emit::{format_float, Table};
use crate::CliError;

/// Which suites `verify` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SuiteChoice {
    Pure,
    Mixed,
    Lemma,
    All,
}

impl SuiteChoice {
    pub fn suites(&self) -> Vec<Suite> {
        match self {
            SuiteChoice::Pure => vec![Suite::Pure],
            SuiteChoice::Mixed => vec![Suite::Mixed],
            SuiteChoice::Lemma => vec![Suite::Lemma],
            SuiteChoice::All => vec![Suite::Pure, Suite::Mixed, Suite::Lemma],
        }
    }
}

/// Largest lattice drawn by a suite unless overridden.
pub fn default_max_sites(suite: Suite) -> usize {
    match suite {
        Suite::Pure => 8,
        Suite::Mixed | Suite::Lemma => 6,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub violations: usize,
    pub rejected: usize,
    pub worst_slack: f64,
    pub suites: BTreeMap<String, SuiteReport>,
}

impl VerifySummary {
    /// One row per suite and check.
    pub fn to_table(&self) -> Table {
        let header = ["suite", "check", "checked", "violations", "worst_slack", "max_ratio"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let rows = self
            .suites
            .iter()
            .flat_map(|(name, report)| {
                report.checks.iter().map(move |(check, t)| {
                    vec![
                        name.clone(),
                        check.clone(),
                        t.checked.to_string(),
                        t.violations.to_string(),
                        format_float(t.worst_slack),
                        format_float(t.max_ratio),
                    ]
                })
            })
            .collect();
        Table { header, rows }
    }
}

pub fn run_verify(
    choice: SuiteChoice,
    trials: usize,
    seed: u64,
    max_sites: Option<usize>,
    inject_invalid: bool,
) -> Result<VerifySummary, CliError> {
    if trials == 0 {
        return Err(CliError::Invalid("trials must be at least 1".into()));
    }
    let mut suites = BTreeMap::new();
    for suite in choice.suites() {
        let config = SuiteConfig {
            trials,
            seed,
            max_sites: max_sites.unwrap_or_else(|| default_max_sites(suite)),
            inject_invalid,
        };
        suites.insert(suite.name().to_string(), run_suite(suite, &config)?);
    }
    let violations = suites.values().map(|r| r.violations).sum();
    let rejected = suites.values().map(|r| r.rejected).sum();
    let worst_slack = suites.values().map(SuiteReport::worst_slack).fold(f64::INFINITY, f64::min);
    Ok(VerifySummary {
        seed,
        trials,
        passed: violations == 0,
        violations,
        rejected,
        worst_slack,
        suites,
    })
}
