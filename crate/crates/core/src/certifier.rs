//! Numerical checks of the trade-off inequalities between a local operation,
//! its success probability, and the growth of the macroscopicity indices.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    matrix_to_rows, random_channel, random_site_projector, random_unitary_channel, ChannelDocument, ChannelValidity,
    KrausChannel, NULL_OUTCOME_TOL,
};
use crate::error::{Error, Result};
use crate::indices::q::DoubleCommutator;
use crate::lattice::{
    apply_on_sites_vec, embed_on_sites, pauli_x, pauli_y, CMatrix, LatticeConfig, Mode, SplitIndex, SubsystemSupport, C64,
};
use crate::linalg;
use crate::norms::{factored_singular_values, operator_norm, trace_norm};
use crate::operator::{site_operator_norm, AdditiveOperator};
use crate::rng::task_rng;
use crate::state::{gaussian_c64, DensityState, PureState};

/// An inequality counts as violated when `rhs - lhs < -SLACK_TOL`.
pub const SLACK_TOL: f64 = 1e-9;

/// Result of a check whose precondition may fail.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Assessment<T> {
    Applicable(T),
    /// Success probability at or below the null-outcome threshold.
    Inapplicable { success_probability: f64 },
    /// The channel failed validation.
    Rejected { validity: ChannelValidity },
}

impl<T> Assessment<T> {
    pub fn applicable(&self) -> Option<&T> {
        match self {
            Assessment::Applicable(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inequality {
    Pure,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffReport {
    pub inequality: Inequality,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// Terms whose sum, divided by `G`, is `rhs`.
    pub components: BTreeMap<String, f64>,
    /// Intermediate quantities of the derivation.
    pub diagnostics: BTreeMap<String, f64>,
    pub success_probability: f64,
    pub volume_s: usize,
    pub tightness_ratio: f64,
    pub holds: bool,
    /// Every intermediate step of the derivation holds as well.
    pub chain_holds: bool,
}

impl TradeoffReport {
    fn new(
        inequality: Inequality,
        lhs: f64,
        components: BTreeMap<String, f64>,
        diagnostics: BTreeMap<String, f64>,
        g: f64,
        volume_s: usize,
        chain_holds: bool,
    ) -> Self {
        let rhs = components.values().sum::<f64>() / g;
        let slack = rhs - lhs;
        Self {
            inequality,
            lhs,
            rhs,
            slack,
            components,
            diagnostics,
            success_probability: g,
            volume_s,
            tightness_ratio: if rhs > 0.0 { lhs / rhs } else { 0.0 },
            holds: slack >= -SLACK_TOL,
            chain_holds,
        }
    }
}

fn check_lattice(a: &LatticeConfig, b: &LatticeConfig) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `A_S = sum_{l in S} a(l)` as a matrix on the support.
pub fn support_operator(a: &AdditiveOperator, support: &SubsystemSupport) -> CMatrix {
    let lattice = a.lattice();
    let local = LatticeConfig::new(support.volume(), lattice.local_dim()).expect("support is a valid lattice");
    let coeffs: Vec<f64> = support
        .sites()
        .iter()
        .flat_map(|&s| a.site_coeffs(s).iter().copied())
        .collect();
    AdditiveOperator::from_flat_unchecked(local, coeffs).realize()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportBoundReport {
    /// `||[A, E_k]||_inf` per Kraus operator.
    pub norms: Vec<f64>,
    /// `2|S|`.
    pub bound: f64,
    pub max_ratio: f64,
    pub holds: bool,
}

/// `||[A, E_k]||_inf <= 2|S|`, evaluated on the support, where `[A, E_k]`
/// reduces to `[A_S, E_k]`.
pub fn check_support_bound(a: &AdditiveOperator, channel: &KrausChannel) -> Result<SupportBoundReport> {
    check_lattice(a.lattice(), channel.lattice())?;
    let a_s = support_operator(a, channel.support());
    let norms: Vec<f64> = channel
        .kraus_ops()
        .iter()
        .map(|e| operator_norm(&(&a_s * e - e * &a_s)))
        .collect();
    let bound = 2.0 * channel.support().volume() as f64;
    let max = norms.iter().copied().fold(0.0, f64::max);
    Ok(SupportBoundReport {
        holds: max <= bound + SLACK_TOL,
        max_ratio: max / bound,
        norms,
        bound,
    })
}

/// `||[A, |u><u|]||_inf` from the rank-two factorization
/// `|Au><u| - |u><Au|`.
fn pure_commutator_norm(u: &DVector<C64>, au: &DVector<C64>) -> f64 {
    let p = CMatrix::from_columns(&[au.clone(), u.clone()]);
    let q = CMatrix::from_columns(&[u.clone(), -au.clone()]);
    factored_singular_values(&p, &q).first().copied().unwrap_or(0.0)
}

/// `||[A, rho_2]||_inf <= (4|S| + ||[A, rho_1]||_inf) / G` for
/// `rho_2 = E rho_1 E^dagger / G` with a single Kraus operator.
pub fn check_pure_tradeoff(
    psi1: &PureState,
    channel: &KrausChannel,
    a: &AdditiveOperator,
) -> Result<Assessment<TradeoffReport>> {
    check_lattice(psi1.lattice(), channel.lattice())?;
    check_lattice(psi1.lattice(), a.lattice())?;
    if channel.len() != 1 {
        return Err(Error::NotSingleKraus(channel.len()));
    }
    let validity = channel.validate();
    if !validity.valid {
        return Ok(Assessment::Rejected { validity });
    }
    let e = &channel.kraus_ops()[0];
    let split = SplitIndex::new(psi1.lattice(), channel.support().sites());
    let apply_e = |v: &DVector<C64>| DVector::from_vec(apply_on_sites_vec(e, &split, v.as_slice()));
    let psi = psi1.amplitudes();
    let e_psi = apply_e(psi);
    let g = e_psi.norm_squared();
    if !(g > NULL_OUTCOME_TOL) {
        return Ok(Assessment::Inapplicable { success_probability: g });
    }
    let a_psi = a.apply(psi);
    let a_e_psi = a.apply(&e_psi);
    let e_a_psi = apply_e(&a_psi);

    let psi2 = &e_psi / C64::new(g.sqrt(), 0.0);
    let lhs = pure_commutator_norm(&psi2, &a.apply(&psi2));
    let rho1_norm = pure_commutator_norm(psi, &a_psi);
    let volume = channel.support().volume();

    // [A, E rho E^dagger] = [A,E] rho E^dagger + E [A,rho] E^dagger + E rho [A,E^dagger]
    let comm_e_psi = &a_e_psi - &e_a_psi;
    let outer = comm_e_psi.norm() * e_psi.norm();
    let middle = pure_commutator_norm(&e_psi, &e_a_psi);
    let kraus_comm = check_support_bound(a, channel)?.norms[0];

    let mut components = BTreeMap::new();
    components.insert("4|S|".to_string(), 4.0 * volume as f64);
    components.insert("||[A,rho1]||_inf".to_string(), rho1_norm);
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("||[A,E rho1 E+]||_inf".to_string(), g * lhs);
    diagnostics.insert("||[A,E] rho1 E+||_inf".to_string(), outer);
    diagnostics.insert("||E [A,rho1] E+||_inf".to_string(), middle);
    diagnostics.insert("||[A,E]||_inf".to_string(), kraus_comm);
    let bound = 2.0 * volume as f64;
    let chain_holds = g * lhs <= 2.0 * outer + middle + SLACK_TOL
        && outer <= kraus_comm + SLACK_TOL
        && kraus_comm <= bound + SLACK_TOL
        && middle <= rho1_norm + SLACK_TOL;
    Ok(Assessment::Applicable(TradeoffReport::new(
        Inequality::Pure,
        lhs,
        components,
        diagnostics,
        g,
        volume,
        chain_holds,
    )))
}

/// `||[A,[A,rho_2]]||_1 <= (||[A,[A,rho_1]]||_1 + 16|S|N + 4|S|^2 G + 12|S|^2) / G`.
pub fn check_mixed_tradeoff(
    rho1: &DensityState,
    channel: &KrausChannel,
    a: &AdditiveOperator,
) -> Result<Assessment<TradeoffReport>> {
    check_lattice(rho1.lattice(), channel.lattice())?;
    check_lattice(rho1.lattice(), a.lattice())?;
    let validity = channel.validate();
    if !validity.valid {
        return Ok(Assessment::Rejected { validity });
    }
    let out = match channel.apply_mixed(rho1) {
        Ok(o) => o,
        Err(Error::NullOutcome(g)) => return Ok(Assessment::Inapplicable { success_probability: g }),
        Err(e) => return Err(e),
    };
    let g = out.success_probability;
    let lhs = DoubleCommutator::new(&out.output).trace_norm(a);
    let before = DoubleCommutator::new(rho1).trace_norm(a);
    let s = channel.support().volume() as f64;
    let n = rho1.lattice().n_sites() as f64;
    let mut components = BTreeMap::new();
    components.insert("||[A,[A,rho1]]||_1".to_string(), before);
    components.insert("16|S|N".to_string(), 16.0 * s * n);
    components.insert("4|S|^2 G".to_string(), 4.0 * s * s * g);
    components.insert("12|S|^2".to_string(), 12.0 * s * s);
    Ok(Assessment::Applicable(TradeoffReport::new(
        Inequality::Mixed,
        lhs,
        components,
        BTreeMap::new(),
        g,
        channel.support().volume(),
        true,
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContractionReport {
    pub input_norm: f64,
    pub output_norm: f64,
    pub slack: f64,
    pub holds: bool,
}

/// `||sum_k E_k X E_k^dagger||_1 <= ||X||_1` for Hermitian `X`.
pub fn check_contraction_lemma(x: &CMatrix, channel: &KrausChannel) -> Result<Assessment<ContractionReport>> {
    let dim = channel.lattice().dim();
    if x.nrows() != dim || x.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: x.nrows().max(x.ncols()),
        });
    }
    if linalg::hermiticity_defect(x) > 1e-10 {
        return Err(Error::InvalidArgument("contraction lemma needs a Hermitian operator".into()));
    }
    let validity = channel.validate();
    if !validity.valid {
        return Ok(Assessment::Rejected { validity });
    }
    let input_norm = trace_norm(x);
    let output_norm = trace_norm(&channel.act_on_matrix(x));
    let slack = input_norm - output_norm;
    Ok(Assessment::Applicable(ContractionReport {
        input_norm,
        output_norm,
        slack,
        holds: slack >= -SLACK_TOL,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XiReport {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    /// `||[A,[A,rho_1]]||_1`.
    pub xi1_bound: f64,
    /// `16|S|N`.
    pub xi2_bound: f64,
    /// `4|S|^2 G + 12|S|^2`.
    pub xi3_bound: f64,
    /// `G ||[A,[A,rho_2]]||_1 = ||sum_k [A,[A,E_k rho_1 E_k^dagger]]||_1`.
    pub assembly_lhs: f64,
    /// `||Xi_1||_1 + ||Xi_2||_1 + ||Xi_3||_1`.
    pub assembly_rhs: f64,
    /// Largest entry of `Xi_1 + Xi_2 + Xi_3 - sum_k [A,[A,E_k rho_1 E_k^dagger]]`.
    pub identity_residual: f64,
    pub success_probability: f64,
    pub xi1_holds: bool,
    pub xi2_holds: bool,
    pub xi3_holds: bool,
    pub assembly_holds: bool,
}

impl XiReport {
    pub fn all_hold(&self) -> bool {
        self.xi1_holds && self.xi2_holds && self.xi3_holds && self.assembly_holds
    }

    /// Smallest of the four slacks.
    pub fn worst_slack(&self) -> f64 {
        [
            self.xi1_bound - self.xi1,
            self.xi2_bound - self.xi2,
            self.xi3_bound - self.xi3,
            self.assembly_rhs - self.assembly_lhs,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

fn comm(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Dense assembly of the three terms splitting `sum_k [A,[A,E_k rho E_k^dagger]]`.
pub fn compute_xi_terms(
    rho1: &DensityState,
    channel: &KrausChannel,
    a: &AdditiveOperator,
) -> Result<Assessment<XiReport>> {
    check_lattice(rho1.lattice(), channel.lattice())?;
    check_lattice(rho1.lattice(), a.lattice())?;
    rho1.lattice().check_cap(Mode::Mixed)?;
    let validity = channel.validate();
    if !validity.valid {
        return Ok(Assessment::Rejected { validity });
    }
    let lattice = rho1.lattice();
    let dim = lattice.dim();
    let rho = rho1.matrix();
    let am = a.realize();
    let a_s = embed_on_sites(&support_operator(a, channel.support()), channel.support().sites(), lattice);
    let y = comm(&am, rho);
    let x = comm(&am, &y);

    let mut xi1 = CMatrix::zeros(dim, dim);
    let mut xi2 = CMatrix::zeros(dim, dim);
    let mut xi3 = CMatrix::zeros(dim, dim);
    let mut direct = CMatrix::zeros(dim, dim);
    let mut g = 0.0;
    for k in 0..channel.len() {
        let e = channel.embedded(k);
        let ed = e.adjoint();
        let c = comm(&a_s, &e);
        let cd = c.adjoint();
        let d = comm(&a_s, &c);
        xi1 += &e * &x * &ed;
        // [A_S, E^dagger] = -C^dagger, [A_S, [A_S, E^dagger]] = D^dagger
        xi2 += (&c * &y * &ed - &e * &y * &cd) * C64::new(2.0, 0.0);
        xi3 += &d * rho * &ed + &e * rho * d.adjoint() - (&c * rho * &cd) * C64::new(2.0, 0.0);
        let out = &e * rho * &ed;
        g += out.trace().re;
        direct += comm(&am, &comm(&am, &out));
    }
    if !(g > NULL_OUTCOME_TOL) {
        return Ok(Assessment::Inapplicable { success_probability: g });
    }
    let s = channel.support().volume() as f64;
    let n = lattice.n_sites() as f64;
    let (n1, n2, n3) = (trace_norm(&xi1), trace_norm(&xi2), trace_norm(&xi3));
    let xi1_bound = trace_norm(&x);
    let xi2_bound = 16.0 * s * n;
    let xi3_bound = 4.0 * s * s * g + 12.0 * s * s;
    let assembly_lhs = trace_norm(&direct);
    let assembly_rhs = n1 + n2 + n3;
    let identity_residual = linalg::max_abs(&(&xi1 + &xi2 + &xi3 - &direct));
    Ok(Assessment::Applicable(XiReport {
        xi1: n1,
        xi2: n2,
        xi3: n3,
        xi1_bound,
        xi2_bound,
        xi3_bound,
        assembly_lhs,
        assembly_rhs,
        identity_residual,
        success_probability: g,
        xi1_holds: n1 <= xi1_bound + SLACK_TOL,
        xi2_holds: n2 <= xi2_bound + SLACK_TOL,
        xi3_holds: n3 <= xi3_bound + SLACK_TOL,
        assembly_holds: assembly_lhs <= assembly_rhs + SLACK_TOL,
    }))
}

/// Serialized form of a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateDocument {
    Pure { amplitudes: Vec<[f64; 2]> },
    Mixed { matrix: Vec<Vec<[f64; 2]>> },
}

impl StateDocument {
    pub fn from_pure(psi: &PureState) -> Self {
        StateDocument::Pure {
            amplitudes: psi.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_density(rho: &DensityState) -> Self {
        StateDocument::Mixed {
            matrix: matrix_to_rows(rho.matrix()),
        }
    }
}

/// Everything needed to reproduce one checked instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffInstance {
    pub check: String,
    pub trial: usize,
    pub seed: u64,
    pub n_sites: usize,
    pub local_dim: usize,
    pub state: StateDocument,
    pub channel: ChannelDocument,
    pub coefficients: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

/// Which randomized suite to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Pure,
    Mixed,
    Lemma,
}

impl Suite {
    pub fn name(&self) -> &'static str {
        match self {
            Suite::Pure => "pure",
            Suite::Mixed => "mixed",
            Suite::Lemma => "lemma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub trials: usize,
    pub seed: u64,
    pub max_sites: usize,
    /// Adds one trial whose channel has norm 1.5; it must be rejected.
    pub inject_invalid: bool,
}

impl SuiteConfig {
    pub fn new(trials: usize, seed: u64, max_sites: usize) -> Self {
        Self {
            trials,
            seed,
            max_sites,
            inject_invalid: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckTally {
    pub checked: usize,
    pub violations: usize,
    pub worst_slack: f64,
    pub max_ratio: f64,
}

impl CheckTally {
    fn new() -> Self {
        Self {
            checked: 0,
            violations: 0,
            worst_slack: f64::INFINITY,
            max_ratio: 0.0,
        }
    }

    fn record(&mut self, slack: f64, ratio: f64) -> bool {
        self.checked += 1;
        self.worst_slack = self.worst_slack.min(slack);
        self.max_ratio = self.max_ratio.max(ratio);
        let violated = slack < -SLACK_TOL;
        if violated {
            self.violations += 1;
        }
        violated
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub config: SuiteConfig,
    /// Trials actually run (fewer than requested after an abort).
    pub trials_run: usize,
    pub inapplicable: usize,
    pub rejected: usize,
    pub violations: usize,
    pub checks: BTreeMap<String, CheckTally>,
    /// First violating instance; the suite stops there.
    pub counterexample: Option<TradeoffInstance>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn worst_slack(&self) -> f64 {
        self.checks.values().map(|t| t.worst_slack).fold(f64::INFINITY, f64::min)
    }
}

/// One measured quantity of a trial: `(check name, slack, ratio)`.
type Measurement = (String, f64, f64);

enum TrialResult {
    Measured {
        values: Vec<Measurement>,
        instance: Box<dyn Fn(&str) -> TradeoffInstance + Send>,
    },
    Inapplicable,
    Rejected,
}

const CHUNK: usize = 32;

fn random_support<R: Rng + ?Sized>(lattice: &LatticeConfig, max_volume: usize, rng: &mut R) -> SubsystemSupport {
    let n = lattice.n_sites();
    let k = rng.random_range(1..=max_volume.min(n));
    let sites: Vec<usize> = sample(rng, n, k).into_iter().map(|s| s + 1).collect();
    SubsystemSupport::new(sites, lattice).expect("sampled sites are in range")
}

fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    linalg::hermitian_part(&g)
}

/// Rescales every Kraus operator so the stacked column has norm 1.5.
fn inflate(channel: &KrausChannel) -> KrausChannel {
    let top = channel.validate().max_eigenvalue.sqrt();
    let ops = channel
        .kraus_ops()
        .iter()
        .map(|e| e * C64::new(1.5 / top, 0.0))
        .collect();
    KrausChannel::new(*channel.lattice(), channel.support().clone(), ops).expect("same shapes")
}

fn pure_trial(trial: usize, config: &SuiteConfig, invalid: bool) -> Result<TrialResult> {
    let mut rng = task_rng(config.seed, trial as u64);
    let n = rng.random_range(1..=config.max_sites.max(1));
    let lattice = LatticeConfig::qubits(n)?;
    let psi = PureState::random(lattice, &mut rng)?;
    let support = random_support(&lattice, 3, &mut rng);
    let mut channel = match rng.random_range(0..3) {
        0 => random_channel(lattice, support, 1, &mut rng)?,
        1 => {
            let site = support.sites()[0];
            random_site_projector(lattice, site, &mut rng)?
        }
        _ => random_unitary_channel(lattice, support, &mut rng)?,
    };
    if invalid {
        channel = inflate(&channel);
    }
    let a = AdditiveOperator::random(lattice, &mut rng);
    let report = match check_pure_tradeoff(&psi, &channel, &a)? {
        Assessment::Applicable(r) => r,
        Assessment::Inapplicable { .. } => return Ok(TrialResult::Inapplicable),
        Assessment::Rejected { .. } => return Ok(TrialResult::Rejected),
    };
    let d = &report.diagnostics;
    let outer = d["||[A,E] rho1 E+||_inf"];
    let middle = d["||E [A,rho1] E+||_inf"];
    let kraus = d["||[A,E]||_inf"];
    let rho1_norm = report.components["||[A,rho1]||_inf"];
    let chain_slack = (2.0 * outer + middle - d["||[A,E rho1 E+]||_inf"])
        .min(kraus - outer)
        .min(2.0 * report.volume_s as f64 - kraus)
        .min(rho1_norm - middle);
    let chain_ratio = if report.volume_s > 0 { kraus / (2.0 * report.volume_s as f64) } else { 0.0 };
    let values = vec![
        ("pure-tradeoff".to_string(), report.slack, report.tightness_ratio),
        ("pure-chain".to_string(), chain_slack, chain_ratio),
    ];
    let seed = config.seed;
    let state = StateDocument::from_pure(&psi);
    let doc = channel.to_document();
    let coeffs = a.coeffs().to_vec();
    let (lhs, rhs) = (report.lhs, report.rhs);
    Ok(TrialResult::Measured {
        values,
        instance: Box::new(move |check| TradeoffInstance {
            check: check.to_string(),
            trial,
            seed,
            n_sites: n,
            local_dim: 2,
            state: state.clone(),
            channel: doc.clone(),
            coefficients: coeffs.clone(),
            lhs,
            rhs,
        }),
    })
}

fn mixed_trial(trial: usize, config: &SuiteConfig, invalid: bool, suite: Suite) -> Result<TrialResult> {
    let mut rng = task_rng(config.seed, trial as u64);
    let n = rng.random_range(1..=config.max_sites.max(1));
    let lattice = LatticeConfig::qubits(n)?;
    let rank = rng.random_range(1..=lattice.dim());
    let rho = DensityState::random(lattice, rank, &mut rng)?;
    let support = random_support(&lattice, 3, &mut rng);
    let n_kraus = rng.random_range(1..=3);
    let mut channel = random_channel(lattice, support, n_kraus, &mut rng)?;
    if invalid {
        channel = inflate(&channel);
    }
    let a = AdditiveOperator::random(lattice, &mut rng);
    let x = random_hermitian(lattice.dim(), &mut rng);

    let mut values: Vec<Measurement> = Vec::new();
    let mut lhs_rhs: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    let support_report = check_support_bound(&a, &channel)?;
    match check_contraction_lemma(&x, &channel)? {
        Assessment::Applicable(r) => {
            values.push(("contraction-lemma".into(), r.slack, r.output_norm / r.input_norm));
            lhs_rhs.insert("contraction-lemma".into(), (r.output_norm, r.input_norm));
        }
        Assessment::Rejected { .. } => return Ok(TrialResult::Rejected),
        Assessment::Inapplicable { .. } => unreachable!("the lemma has no success probability"),
    }
    let max_norm = support_report.norms.iter().copied().fold(0.0, f64::max);
    values.push((
        "support-bound".into(),
        support_report.bound - max_norm,
        support_report.max_ratio,
    ));
    lhs_rhs.insert("support-bound".into(), (max_norm, support_report.bound));
    if suite == Suite::Mixed {
        let xi = match compute_xi_terms(&rho, &channel, &a)? {
            Assessment::Applicable(r) => r,
            Assessment::Inapplicable { .. } => return Ok(TrialResult::Inapplicable),
            Assessment::Rejected { .. } => return Ok(TrialResult::Rejected),
        };
        let ratio = |l: f64, r: f64| if r > 0.0 { l / r } else { 0.0 };
        for (name, l, r) in [
            ("xi1-bound", xi.xi1, xi.xi1_bound),
            ("xi2-bound", xi.xi2, xi.xi2_bound),
            ("xi3-bound", xi.xi3, xi.xi3_bound),
            ("xi-assembly", xi.assembly_lhs, xi.assembly_rhs),
        ] {
            values.push((name.into(), r - l, ratio(l, r)));
            lhs_rhs.insert(name.into(), (l, r));
        }
        let identity_slack = 1e-8 - xi.identity_residual;
        values.push(("xi-identity".into(), identity_slack, xi.identity_residual / 1e-8));
        lhs_rhs.insert("xi-identity".into(), (xi.identity_residual, 1e-8));
        let report = match check_mixed_tradeoff(&rho, &channel, &a)? {
            Assessment::Applicable(r) => r,
            Assessment::Inapplicable { .. } => return Ok(TrialResult::Inapplicable),
            Assessment::Rejected { .. } => return Ok(TrialResult::Rejected),
        };
        values.push(("mixed-tradeoff".into(), report.slack, report.tightness_ratio));
        lhs_rhs.insert("mixed-tradeoff".into(), (report.lhs, report.rhs));
    }
    let seed = config.seed;
    let state = StateDocument::from_density(&rho);
    let doc = channel.to_document();
    let coeffs = a.coeffs().to_vec();
    Ok(TrialResult::Measured {
        values,
        instance: Box::new(move |check| {
            let (lhs, rhs) = lhs_rhs.get(check).copied().unwrap_or((f64::NAN, f64::NAN));
            TradeoffInstance {
                check: check.to_string(),
                trial,
                seed,
                n_sites: n,
                local_dim: 2,
                state: state.clone(),
                channel: doc.clone(),
                coefficients: coeffs.clone(),
                lhs,
                rhs,
            }
        }),
    })
}

/// Runs a seeded randomized suite. Trials are evaluated in parallel chunks and
/// merged in trial order; the first violation stops the suite and is kept as
/// the counterexample.
pub fn run_suite(suite: Suite, config: &SuiteConfig) -> Result<SuiteReport> {
    if config.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let max_allowed = match suite {
        Suite::Pure => 14,
        _ => 10,
    };
    if config.max_sites == 0 || config.max_sites > max_allowed {
        return Err(Error::InvalidArgument(format!(
            "max_sites must lie in 1..={max_allowed} for the {} suite",
            suite.name()
        )));
    }
    let total = config.trials + usize::from(config.inject_invalid);
    let run_one = |t: usize| -> Result<TrialResult> {
        let invalid = t >= config.trials;
        match suite {
            Suite::Pure => pure_trial(t, config, invalid),
            Suite::Mixed | Suite::Lemma => mixed_trial(t, config, invalid, suite),
        }
    };
    let mut report = SuiteReport {
        suite,
        config: *config,
        trials_run: 0,
        inapplicable: 0,
        rejected: 0,
        violations: 0,
        checks: BTreeMap::new(),
        counterexample: None,
    };
    let mut start = 0;
    'outer: while start < total {
        let end = (start + CHUNK).min(total);
        let results: Vec<Result<TrialResult>> = (start..end).into_par_iter().map(run_one).collect();
        for result in results {
            report.trials_run += 1;
            match result? {
                TrialResult::Inapplicable => report.inapplicable += 1,
                TrialResult::Rejected => report.rejected += 1,
                TrialResult::Measured { values, instance } => {
                    let mut violated = None;
                    for (name, slack, ratio) in values {
                        let tally = report.checks.entry(name.clone()).or_insert_with(CheckTally::new);
                        if tally.record(slack, ratio) && violated.is_none() {
                            violated = Some(name);
                        }
                    }
                    if let Some(name) = violated {
                        report.violations += 1;
                        report.counterexample = Some(instance(&name));
                        break 'outer;
                    }
                }
            }
        }
        start = end;
    }
    Ok(report)
}

/// Which inequality an adversarial search tries to saturate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversarialTarget {
    Pure,
    Mixed,
    SupportBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelFamily {
    /// Gaussian Kraus operators on up to three sites.
    Random,
    /// Rank-one projectors on a single site.
    SiteProjector,
    /// Single-site Pauli `x` or `y` unitaries.
    Pauli,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdversarialConfig {
    pub target: AdversarialTarget,
    pub family: ChannelFamily,
    pub max_sites: usize,
    pub trials: usize,
    pub climb_steps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversarialResult {
    pub config: AdversarialConfig,
    pub max_ratio: f64,
    /// Best ratio among the random draws, before hill climbing.
    pub max_random_ratio: f64,
    pub evaluated: usize,
    pub violation: bool,
    pub instance: Option<TradeoffInstance>,
}

#[derive(Clone)]
enum SearchState {
    Pure(PureState),
    Mixed(DensityState),
}

#[derive(Clone)]
struct Candidate {
    state: SearchState,
    channel: KrausChannel,
    a: AdditiveOperator,
}

impl Candidate {
    fn ratio(&self, target: AdversarialTarget) -> Option<(f64, f64, f64)> {
        match target {
            AdversarialTarget::SupportBound => {
                let r = check_support_bound(&self.a, &self.channel).ok()?;
                let max = r.norms.iter().copied().fold(0.0, f64::max);
                Some((r.max_ratio, max, r.bound))
            }
            AdversarialTarget::Pure => {
                let SearchState::Pure(psi) = &self.state else { return None };
                let r = check_pure_tradeoff(psi, &self.channel, &self.a).ok()?;
                r.applicable().map(|r| (r.tightness_ratio, r.lhs, r.rhs))
            }
            AdversarialTarget::Mixed => {
                let rho = match &self.state {
                    SearchState::Mixed(rho) => rho.clone(),
                    SearchState::Pure(psi) => psi.to_density().ok()?,
                };
                let r = check_mixed_tradeoff(&rho, &self.channel, &self.a).ok()?;
                r.applicable().map(|r| (r.tightness_ratio, r.lhs, r.rhs))
            }
        }
    }

    fn instance(&self, seed: u64, trial: usize, lhs: f64, rhs: f64, target: AdversarialTarget) -> TradeoffInstance {
        let lattice = self.channel.lattice();
        TradeoffInstance {
            check: match target {
                AdversarialTarget::Pure => "pure-tradeoff",
                AdversarialTarget::Mixed => "mixed-tradeoff",
                AdversarialTarget::SupportBound => "support-bound",
            }
            .to_string(),
            trial,
            seed,
            n_sites: lattice.n_sites(),
            local_dim: lattice.local_dim(),
            state: match &self.state {
                SearchState::Pure(p) => StateDocument::from_pure(p),
                SearchState::Mixed(r) => StateDocument::from_density(r),
            },
            channel: self.channel.to_document(),
            coefficients: self.a.coeffs().to_vec(),
            lhs,
            rhs,
        }
    }
}

fn family_channel<R: Rng + ?Sized>(
    family: ChannelFamily,
    lattice: LatticeConfig,
    rng: &mut R,
    single: bool,
) -> Result<KrausChannel> {
    match family {
        ChannelFamily::Random => {
            let support = random_support(&lattice, 3, rng);
            let n_kraus = if single { 1 } else { rng.random_range(1..=3) };
            random_channel(lattice, support, n_kraus, rng)
        }
        ChannelFamily::SiteProjector => {
            let site = rng.random_range(1..=lattice.n_sites());
            random_site_projector(lattice, site, rng)
        }
        ChannelFamily::Pauli => {
            let site = rng.random_range(1..=lattice.n_sites());
            let op = if rng.random_bool(0.5) { pauli_x() } else { pauli_y() };
            KrausChannel::single(lattice, SubsystemSupport::new(vec![site], &lattice)?, op)
        }
    }
}

fn random_candidate(config: &AdversarialConfig, trial: usize) -> Result<Candidate> {
    let mut rng = task_rng(config.seed, trial as u64);
    let n = rng.random_range(1..=config.max_sites.max(1));
    let lattice = LatticeConfig::qubits(n)?;
    let state = match config.target {
        AdversarialTarget::Mixed => {
            let rank = rng.random_range(1..=lattice.dim());
            SearchState::Mixed(DensityState::random(lattice, rank, &mut rng)?)
        }
        _ => SearchState::Pure(PureState::random(lattice, &mut rng)?),
    };
    let channel = family_channel(config.family, lattice, &mut rng, config.target == AdversarialTarget::Pure)?;
    let a = AdditiveOperator::random(lattice, &mut rng);
    Ok(Candidate { state, channel, a })
}

fn perturb<R: Rng + ?Sized>(c: &Candidate, family: ChannelFamily, rng: &mut R) -> Result<Candidate> {
    let lattice = *c.channel.lattice();
    let m = lattice.basis_len();
    let mut coeffs: Vec<f64> = c
        .a
        .coeffs()
        .iter()
        .map(|x| x + 0.2 * rng.sample::<f64, _>(rand_distr::StandardNormal))
        .collect();
    for block in coeffs.chunks_mut(m) {
        let norm = site_operator_norm(&lattice, block);
        if norm > 1.0 {
            block.iter_mut().for_each(|x| *x /= norm);
        }
    }
    let a = AdditiveOperator::from_flat(lattice, coeffs)?;
    let state = match &c.state {
        SearchState::Pure(psi) => {
            let amps: Vec<C64> = psi.amplitudes().iter().map(|z| z + gaussian_c64(rng) * 0.1).collect();
            SearchState::Pure(PureState::normalized(lattice, amps)?)
        }
        SearchState::Mixed(rho) => {
            let v = DVector::from_fn(lattice.dim(), |_, _| gaussian_c64(rng));
            let v = &v / C64::new(v.norm(), 0.0);
            let mixed = rho.matrix() * C64::new(0.9, 0.0) + (&v * v.adjoint()) * C64::new(0.1, 0.0);
            SearchState::Mixed(DensityState::new(lattice, linalg::hermitian_part(&mixed))?)
        }
    };
    let channel = match family {
        ChannelFamily::Pauli => c.channel.clone(),
        _ => {
            let mut ops: Vec<CMatrix> = c
                .channel
                .kraus_ops()
                .iter()
                .map(|e| e.map(|z| z + gaussian_c64(rng) * 0.1))
                .collect();
            if family == ChannelFamily::SiteProjector {
                let (_, vecs) = linalg::eigh(&ops[0]);
                let v = vecs.column(vecs.ncols() - 1).into_owned();
                ops[0] = &v * v.adjoint();
            } else {
                let gram = ops.iter().fold(CMatrix::zeros(ops[0].nrows(), ops[0].ncols()), |acc, e| acc + e.adjoint() * e);
                let top = linalg::eigvalsh(&gram).last().copied().unwrap_or(0.0).sqrt();
                if top > 1.0 {
                    for e in &mut ops {
                        *e /= C64::new(top, 0.0);
                    }
                }
            }
            KrausChannel::new(lattice, c.channel.support().clone(), ops)?
        }
    };
    Ok(Candidate { state, channel, a })
}

/// Trial index, candidate and its `(ratio, lhs, rhs)`.
type Scored = (usize, Candidate, (f64, f64, f64));

/// Random draws followed by hill climbing on the best draw, maximizing
/// `lhs / rhs` of the selected inequality.
pub fn adversarial_search(config: &AdversarialConfig) -> Result<AdversarialResult> {
    if config.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut scored: Vec<Scored> = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<Option<Scored>> {
            let mut cand = random_candidate(config, t)?;
            if config.target == AdversarialTarget::SupportBound && t == 0 {
                // Commutator of sigma_x on one site with a z field there.
                let lattice = *cand.channel.lattice();
                cand.channel = KrausChannel::single(lattice, SubsystemSupport::new(vec![1], &lattice)?, pauli_x())?;
                cand.a = AdditiveOperator::magnetization_z(lattice);
            }
            Ok(cand.ratio(config.target).map(|r| (t, cand, r)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let evaluated = scored.len();
    if scored.is_empty() {
        return Ok(AdversarialResult {
            config: *config,
            max_ratio: 0.0,
            max_random_ratio: 0.0,
            evaluated,
            violation: false,
            instance: None,
        });
    }
    let best_idx = scored
        .iter()
        .enumerate()
        .fold(0, |best, (i, s)| if s.2 .0 > scored[best].2 .0 { i } else { best });
    let (trial, mut best, mut best_score) = scored.swap_remove(best_idx);
    let max_random_ratio = best_score.0;
    let mut rng = task_rng(config.seed, u64::MAX);
    for _ in 0..config.climb_steps {
        let Ok(next) = perturb(&best, config.family, &mut rng) else { continue };
        if let Some(score) = next.ratio(config.target) {
            if score.0 > best_score.0 {
                best = next;
                best_score = score;
            }
        }
    }
    Ok(AdversarialResult {
        config: *config,
        max_ratio: best_score.0,
        max_random_ratio,
        evaluated: evaluated + config.climb_steps,
        violation: best_score.0 > 1.0 + SLACK_TOL,
        instance: Some(best.instance(config.seed, trial, best_score.1, best_score.2, config.target)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::make_local_projection;
    use crate::lattice::pauli_z;

    fn qubits(n: usize) -> LatticeConfig {
        LatticeConfig::qubits(n).unwrap()
    }

    #[test]
    fn support_bound_examples() {
        let lat = qubits(3);
        let mz = AdditiveOperator::magnetization_z(lat);
        let sx = KrausChannel::single(lat, SubsystemSupport::new(vec![1], &lat).unwrap(), pauli_x()).unwrap();
        let r = check_support_bound(&mz, &sx).unwrap();
        assert!((r.max_ratio - 1.0).abs() < 1e-12);
        let sz = KrausChannel::single(lat, SubsystemSupport::new(vec![2], &lat).unwrap(), pauli_z()).unwrap();
        assert!(check_support_bound(&mz, &sz).unwrap().max_ratio < 1e-15);
    }

    #[test]
    fn pure_tradeoff_local_projection() {
        let lat = qubits(4);
        let (ch, psi) = make_local_projection(lat, 0.5).unwrap();
        let r = check_pure_tradeoff(&psi, &ch, &AdditiveOperator::magnetization_z(lat)).unwrap();
        let r = r.applicable().unwrap();
        assert!((r.lhs - 9.75f64.sqrt()).abs() < 1e-10);
        assert!((r.rhs - 8.0 / 3.0 * (4.0 + 12f64.sqrt())).abs() < 1e-10);
        assert!(r.holds && r.chain_holds);
    }

    #[test]
    fn identity_channel_slack_is_four_volume() {
        let lat = qubits(3);
        let mut rng = task_rng(1, 0);
        let psi = PureState::random(lat, &mut rng).unwrap();
        let a = AdditiveOperator::random(lat, &mut rng);
        let id = KrausChannel::identity(lat, SubsystemSupport::new(vec![2], &lat).unwrap()).unwrap();
        let r = check_pure_tradeoff(&psi, &id, &a).unwrap();
        assert!((r.applicable().unwrap().slack - 4.0).abs() < 1e-10);
    }

    #[test]
    fn null_outcome_is_inapplicable() {
        let lat = qubits(2);
        let proj = CMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let ch = KrausChannel::single(lat, SubsystemSupport::new(vec![1], &lat).unwrap(), proj).unwrap();
        let psi = PureState::basis(lat, &[1, 1]).unwrap();
        let mz = AdditiveOperator::magnetization_z(lat);
        assert!(matches!(check_pure_tradeoff(&psi, &ch, &mz).unwrap(), Assessment::Inapplicable { .. }));
        let rho = psi.to_density().unwrap();
        assert!(matches!(check_mixed_tradeoff(&rho, &ch, &mz).unwrap(), Assessment::Inapplicable { .. }));
    }

    #[test]
    fn xi_terms_commuting_and_identity() {
        let lat = qubits(3);
        let mut rng = task_rng(2, 0);
        let rho = DensityState::random(lat, 3, &mut rng).unwrap();
        let mz = AdditiveOperator::magnetization_z(lat);
        let sz = KrausChannel::single(lat, SubsystemSupport::new(vec![2], &lat).unwrap(), pauli_z()).unwrap();
        let r = compute_xi_terms(&rho, &sz, &mz).unwrap();
        let r = r.applicable().unwrap();
        assert!(r.xi2 < 1e-12 && r.xi3 < 1e-12);
        assert!(r.all_hold());
        let id = KrausChannel::identity(lat, SubsystemSupport::new(vec![1, 2], &lat).unwrap()).unwrap();
        let r = compute_xi_terms(&rho, &id, &mz).unwrap();
        let r = r.applicable().unwrap();
        assert!((r.xi1 - r.xi1_bound).abs() < 1e-10);
        assert!((r.assembly_lhs - r.assembly_rhs).abs() < 1e-10);
        assert!(r.identity_residual < 1e-10);
    }

    #[test]
    fn invalid_channel_is_rejected() {
        let lat = qubits(2);
        let ch = KrausChannel::single(
            lat,
            SubsystemSupport::new(vec![1], &lat).unwrap(),
            CMatrix::identity(2, 2) * C64::new(1.5, 0.0),
        )
        .unwrap();
        let psi = PureState::all_zero(lat).unwrap();
        let mz = AdditiveOperator::magnetization_z(lat);
        assert!(matches!(check_pure_tradeoff(&psi, &ch, &mz).unwrap(), Assessment::Rejected { .. }));
    }

    #[test]
    fn small_suites_pass_and_are_reproducible() {
        for suite in [Suite::Pure, Suite::Mixed, Suite::Lemma] {
            let mut cfg = SuiteConfig::new(40, 9, 4);
            cfg.inject_invalid = true;
            let a = run_suite(suite, &cfg).unwrap();
            assert!(a.passed(), "{suite:?}: {:?}", a.counterexample);
            assert_eq!(a.rejected, 1);
            let b = run_suite(suite, &cfg).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn adversarial_support_bound_reaches_one() {
        let cfg = AdversarialConfig {
            target: AdversarialTarget::SupportBound,
            family: ChannelFamily::Pauli,
            max_sites: 4,
            trials: 20,
            climb_steps: 20,
            seed: 3,
        };
        let r = adversarial_search(&cfg).unwrap();
        assert!(r.max_ratio >= 1.0 - 1e-9 && !r.violation);
    }
}
