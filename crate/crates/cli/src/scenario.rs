//! End-to-end scenario pipelines: input state, channel, indices before and
//! after, trade-off checks.

use mqs_core::certifier::{check_mixed_tradeoff, check_pure_tradeoff};
use mqs_core::channels::{make_cat_creator, make_local_projection, make_spin_flip_even, CatMode, KrausChannel};
use mqs_core::indices::{double_commutator_trace_norm, max_variance, maximize_q, variance, QSearch};
use mqs_core::operator::SiteOperators;
use mqs_core::state::tilt_amplitudes;
use mqs_core::{AdditiveOperator, Caps, DensityState, LatticeConfig, Mode, PureState, C64};

use crate::report::{PointRecord, SweepResult};
use crate::spec::{BuiltState, ScenarioName, ScenarioSpec, StateSpec, SupportSpec};
use crate::sweep::{run_sizes, RunOptions};
use crate::CliError;

const PURITY_TOL: f64 = 1e-10;

/// Runs a validated scenario over its lattice sizes.
pub fn run_scenario(spec: &ScenarioSpec, opts: RunOptions) -> Result<SweepResult, CliError> {
    spec.validate()?;
    let sizes = spec.sizes()?;
    let records = run_sizes(&sizes, opts, |n| run_point(spec, n))?;
    let seed = spec.parameters.seed.unwrap_or(0);
    let value = serde_json::to_value(spec).map_err(|e| CliError::Invalid(e.to_string()))?;
    let mut result = SweepResult::new("scenario", spec.name.as_str(), value, seed, records);
    let tracked: &[&str] = match spec.name {
        ScenarioName::LocalProjection => &["p_in", "p_out", "g"],
        ScenarioName::CatCreation => &["p_out", "q_out_uniform_s"],
        ScenarioName::SpinFlip => &["p_in", "p_out"],
        ScenarioName::ClassicalMixture => &["q_value", "variance_mz"],
        ScenarioName::Custom => &[],
    };
    for key in tracked {
        result.fit(key);
    }
    Ok(result)
}

fn mixed_allowed(n: usize) -> bool {
    n <= Caps::from_env().cap(Mode::Mixed)
}

/// `Tr(rho A^2) - Tr(rho A)^2`.
fn mixed_variance(rho: &DensityState, a: &AdditiveOperator) -> f64 {
    let ops = SiteOperators::new(a);
    let a_rho = ops.apply_left(rho.matrix());
    let a2_rho = ops.apply_left(&a_rho);
    let mean = a_rho.trace().re;
    a2_rho.trace().re - mean * mean
}

/// Pure state of a density matrix of unit purity.
fn as_pure(rho: &DensityState) -> Option<PureState> {
    (rho.purity() > 1.0 - PURITY_TOL).then(|| rho.dominant_eigenvector())
}

fn run_point(spec: &ScenarioSpec, n: usize) -> Result<PointRecord, CliError> {
    let p = &spec.parameters;
    let lat = LatticeConfig::qubits(n)?;
    let mut r = PointRecord::new(n);
    match spec.name {
        ScenarioName::LocalProjection => {
            let alpha = p.alpha.expect("validated");
            let (channel, psi) = make_local_projection(lat, alpha)?;
            let out = channel.apply_pure(&psi)?;
            let x = (n as f64).powf(-2.0 * alpha);
            let (a, b) = tilt_amplitudes(n, alpha);
            let v = PureState::product(LatticeConfig::qubits(1)?, &[vec![C64::new(a, 0.0), C64::new(b, 0.0)]])?;
            let expected = v.tensor(&PureState::cat(LatticeConfig::qubits(n - 1)?)?)?;
            let before = max_variance(&psi);
            let after = max_variance(&out.output);
            r.value("g", out.success_probability);
            r.value("g_expected", 2.0 * x * (1.0 - x));
            r.value("fidelity_expected", out.output.fidelity(&expected));
            r.value("p_in", before.max_variance);
            r.value("p_out", after.max_variance);
            r.value("p_out_upper", after.vcm_upper_bound);
            let mz = AdditiveOperator::magnetization_z(lat);
            r.tradeoff("pure_opt", check_pure_tradeoff(&psi, &channel, &after.optimal_operator)?);
            r.tradeoff("pure_mz", check_pure_tradeoff(&psi, &channel, &mz)?);
            if mixed_allowed(n) {
                r.tradeoff("mixed_mz", check_mixed_tradeoff(&psi.to_density()?, &channel, &mz)?);
            }
        }
        ScenarioName::CatCreation => {
            let psi = pure_input(p.state.as_ref().unwrap_or(&StateSpec::Zero), n)?;
            let support = p.support.clone().unwrap_or(SupportSpec::Named("half".into())).resolve(&lat)?;
            if !support.is_proper(&lat) {
                return Err(CliError::Invalid("cat creation needs a proper subsystem".into()));
            }
            let mode = p.mode.unwrap_or(CatMode::Completed);
            let channel = make_cat_creator(&psi, &support, mode)?;
            let validity = channel.validate();
            let s = support.volume();
            let a_s = AdditiveOperator::new(
                lat,
                (1..=n)
                    .map(|l| if support.contains(l) { vec![0.0, 0.0, 1.0] } else { vec![0.0; 3] })
                    .collect(),
            )?;
            r.value("volume_s", s as f64);
            r.value("max_kraus_norm", validity.max_kraus_norm);
            r.value("q_expected", 4.0 * (s * s) as f64);
            r.flag("channel_valid", validity.valid);
            r.label("mode", if mode == CatMode::Literal { "literal" } else { "completed" });
            r.value("p_in", max_variance(&psi).max_variance);
            let (rho2, g) = if validity.valid {
                let out = channel.apply_mixed(&psi.to_density()?)?;
                (out.output, out.success_probability)
            } else {
                // The literal operator is not a contraction; apply it as a bare map.
                let out = channel.apply_pure_unchecked(&psi)?;
                (out.output.to_density()?, out.success_probability)
            };
            r.value("g", g);
            r.value("q_out_uniform_s", double_commutator_trace_norm(&rho2, &a_s)?);
            if let Some(psi2) = as_pure(&rho2) {
                r.value("p_out", max_variance(&psi2).max_variance);
            }
            r.tradeoff("mixed_uniform_s", check_mixed_tradeoff(&psi.to_density()?, &channel, &a_s)?);
            if channel.len() == 1 {
                r.tradeoff("pure_uniform_s", check_pure_tradeoff(&psi, &channel, &a_s)?);
            }
        }
        ScenarioName::SpinFlip => {
            let psi = pure_input(p.state.as_ref().unwrap_or(&StateSpec::Cat), n)?;
            let channel = make_spin_flip_even(lat)?;
            let out = channel.apply_pure(&psi)?;
            let mz = AdditiveOperator::magnetization_z(lat);
            let stag = AdditiveOperator::staggered_z(lat);
            let after = max_variance(&out.output);
            r.value("g", out.success_probability);
            r.value("p_in", max_variance(&psi).max_variance);
            r.value("p_out", after.max_variance);
            r.value("variance_mz_in", variance(&psi, &mz)?);
            r.value("variance_mz_out", variance(&out.output, &mz)?);
            r.value("variance_staggered_out", variance(&out.output, &stag)?);
            r.tradeoff("pure_opt", check_pure_tradeoff(&psi, &channel, &after.optimal_operator)?);
            if mixed_allowed(n) {
                r.tradeoff("mixed_opt", check_mixed_tradeoff(&psi.to_density()?, &channel, &after.optimal_operator)?);
            }
        }
        ScenarioName::ClassicalMixture => {
            let rho = DensityState::classical_mixture(lat)?;
            let mz = AdditiveOperator::magnetization_z(lat);
            let search = QSearch::new(p.budget.unwrap_or(4), p.seed.unwrap_or(0));
            let q = maximize_q(&rho, &search)?;
            r.value("q_mz", double_commutator_trace_norm(&rho, &mz)?);
            r.value("q_raw", q.best_trace_norm);
            r.value("q_value", q.best_value);
            r.value("q_over_n", q.best_value / n as f64);
            r.value("variance_mz", mixed_variance(&rho, &mz));
            r.flag("floor_applied", q.floor_applied);
            r.label("best_source", q.best_source.clone());
            let channel = make_spin_flip_even(lat)?;
            let out = channel.apply_mixed(&rho)?;
            r.value("g", out.success_probability);
            r.value("q_out_mz", double_commutator_trace_norm(&out.output, &mz)?);
            r.tradeoff("mixed_mz", check_mixed_tradeoff(&rho, &channel, &mz)?);
            r.tradeoff("mixed_opt", check_mixed_tradeoff(&rho, &channel, &q.best_operator)?);
        }
        ScenarioName::Custom => {
            let state = p.state.as_ref().expect("validated").build(n)?;
            let channel = KrausChannel::from_document(p.channel.as_ref().expect("validated"))?;
            let a = match &p.operator {
                Some(c) => AdditiveOperator::from_flat(lat, c.clone())?,
                None => AdditiveOperator::magnetization_z(lat),
            };
            let validity = channel.validate();
            r.flag("channel_valid", validity.valid);
            r.value("max_completeness_eigenvalue", validity.max_eigenvalue);
            let rho = state.to_density()?;
            r.value("q_in", double_commutator_trace_norm(&rho, &a)?);
            if validity.valid {
                let out = channel.apply_mixed(&rho)?;
                r.value("g", out.success_probability);
                r.value("q_out", double_commutator_trace_norm(&out.output, &a)?);
            }
            if let BuiltState::Pure(psi) = &state {
                r.value("p_in", max_variance(psi).max_variance);
                if channel.len() == 1 {
                    r.tradeoff("pure", check_pure_tradeoff(psi, &channel, &a)?);
                }
            }
            r.tradeoff("mixed", check_mixed_tradeoff(&rho, &channel, &a)?);
            if let Some(budget) = p.budget {
                let q = maximize_q(&rho, &QSearch::new(budget, p.seed.unwrap_or(0)))?;
                r.value("q_value_in", q.best_value);
            }
        }
    }
    Ok(r)
}

fn pure_input(state: &StateSpec, n: usize) -> Result<PureState, CliError> {
    match state.build(n)? {
        BuiltState::Pure(p) => Ok(p),
        BuiltState::Mixed(_) => Err(CliError::Invalid("scenario needs a pure input state".into())),
    }
}
