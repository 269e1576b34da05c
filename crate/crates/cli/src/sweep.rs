//! Index sweeps over a range of lattice sizes.

use std::time::Instant;

use mqs_core::indices::{double_commutator_trace_norm, fit_floored, max_variance, maximize_q, variance, QSearch};
use mqs_core::AdditiveOperator;
use rayon::prelude::*;
use serde_json::json;

use crate::report::{PointRecord, SweepResult};
use crate::spec::{BuiltState, NRange, StateSpec};
use crate::CliError;

/// Settings shared by all runners.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record wall-clock time per lattice size. Off by default so emitted
    /// files are reproducible byte for byte.
    pub timings: bool,
}

pub(crate) fn timed<F>(opts: RunOptions, f: F) -> Result<PointRecord, CliError>
where
    F: FnOnce() -> Result<PointRecord, CliError>,
{
    let start = Instant::now();
    let mut record = f()?;
    if opts.timings {
        record.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(record)
}

pub(crate) fn run_sizes<F>(sizes: &[usize], opts: RunOptions, point: F) -> Result<Vec<PointRecord>, CliError>
where
    F: Fn(usize) -> Result<PointRecord, CliError> + Sync,
{
    sizes
        .par_iter()
        .map(|&n| timed(opts, || point(n)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Maximal additive-operator variance of a pure-state family.
pub fn run_index_p(state: &StateSpec, range: NRange, opts: RunOptions) -> Result<SweepResult, CliError> {
    if !state.is_pure() {
        return Err(CliError::Invalid(format!("index p needs a pure state, got {}", state.name())));
    }
    let records = run_sizes(&range.sizes(), opts, |n| {
        let psi = match state.build(n)? {
            BuiltState::Pure(p) => p,
            BuiltState::Mixed(_) => unreachable!(),
        };
        let report = max_variance(&psi);
        let mut r = PointRecord::new(n);
        r.value("max_variance", report.max_variance);
        r.value("vcm_upper_bound", report.vcm_upper_bound);
        r.value("relative_gap", report.relative_gap());
        r.value("variance_mz", variance(&psi, &AdditiveOperator::magnetization_z(*psi.lattice()))?);
        Ok(r)
    })?;
    let spec = json!({ "state": state, "n_range": range });
    let mut result = SweepResult::new("index-p", state.name(), spec, seed_of(state), records);
    result.fit("max_variance");
    Ok(result)
}

/// `max(N, max_A ||[A,[A,rho]]||_1)` of a state family.
pub fn run_index_q(
    state: &StateSpec,
    range: NRange,
    budget: usize,
    seed: u64,
    opts: RunOptions,
) -> Result<SweepResult, CliError> {
    if budget == 0 {
        return Err(CliError::Invalid("budget must be at least 1".into()));
    }
    let search = QSearch::new(budget, seed);
    let records = run_sizes(&range.sizes(), opts, |n| {
        let rho = state.build(n)?.to_density()?;
        let report = maximize_q(&rho, &search)?;
        let mut r = PointRecord::new(n);
        r.value("q_raw", report.best_trace_norm);
        r.value("q_value", report.best_value);
        r.value("q_over_n", report.best_value / n as f64);
        r.value("q_mz", double_commutator_trace_norm(&rho, &AdditiveOperator::magnetization_z(*rho.lattice()))?);
        r.value("witness_value", report.witness.witness_value);
        r.flag("floor_applied", report.floor_applied);
        r.flag("witness_degenerate", report.witness.degenerate);
        r.label("best_source", report.best_source.clone());
        Ok(r)
    })?;
    let spec = json!({ "state": state, "n_range": range, "budget": budget });
    let mut result = SweepResult::new("index-q", state.name(), spec, seed, records);
    let raw = result.points("q_raw");
    if raw.len() >= 3 {
        match fit_floored(&raw) {
            Ok(f) => {
                result.fits.insert("q".into(), f.selected);
                result.fits.insert("q_floored".into(), f.floored);
                if let Some(u) = f.unfloored {
                    result.fits.insert("q_unfloored".into(), u);
                }
            }
            Err(e) => {
                result.fit_errors.insert("q".into(), e.to_string());
            }
        }
    }
    Ok(result)
}

fn seed_of(state: &StateSpec) -> u64 {
    match state {
        StateSpec::RandomProduct { seed }
        | StateSpec::Random { seed }
        | StateSpec::ProductMixture { seed, .. }
        | StateSpec::RandomMixed { seed, .. } => *seed,
        _ => 0,
    }
}
