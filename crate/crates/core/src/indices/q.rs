//! Index `q`: trace norm of the double commutator `[A, [A, rho]]`.
//!
//! Evaluation uses one of two exact routes. When `rho = L L^dagger` has rank
//! `r` with `3r < d^N`, the double commutator equals `K M K^dagger` with
//! `K = [L, A L, A^2 L]`, so its spectrum is that of the small Hermitian core
//! `R M R^dagger` from a thin QR of `K`. Otherwise the full matrix is built.

use std::sync::OnceLock;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{local_basis, CMatrix, LatticeConfig, C64, ONE, ZERO};
use crate::linalg;
use crate::operator::{site_operator_norm, AdditiveOperator, SiteOperators};
use crate::rng::task_rng;
use crate::state::{DensityState, PureState};

use super::p::max_variance;

const RANK_TOL: f64 = 1e-15;
const DEGENERATE_TOL: f64 = 1e-12;

/// Eigenpairs of a double commutator (zero eigenvalues may be omitted).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    fn zero(dim: usize) -> Self {
        Self {
            values: Vec::new(),
            vectors: CMatrix::zeros(dim, 0),
        }
    }

    pub fn trace_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    fn cutoff(&self) -> f64 {
        1e-10 * self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Reusable evaluator of `A -> [A, [A, rho]]` for a fixed state.
pub struct DoubleCommutator<'a> {
    rho: &'a DensityState,
    low_rank: Option<CMatrix>,
    full_factor: OnceLock<CMatrix>,
}

impl<'a> DoubleCommutator<'a> {
    pub fn new(rho: &'a DensityState) -> Self {
        let dim = rho.lattice().dim();
        let max_rank = (dim - 1) / 3;
        let low_rank = if max_rank >= 1 {
            linalg::pivoted_cholesky(rho.matrix(), RANK_TOL, max_rank)
        } else {
            None
        };
        Self {
            rho,
            low_rank,
            full_factor: OnceLock::new(),
        }
    }

    pub fn lattice(&self) -> &LatticeConfig {
        self.rho.lattice()
    }

    /// Rank used by the factored route, if it applies.
    pub fn factored_rank(&self) -> Option<usize> {
        self.low_rank.as_ref().map(|l| l.ncols())
    }

    fn factor(&self) -> &CMatrix {
        match &self.low_rank {
            Some(l) => l,
            None => self.full_factor.get_or_init(|| {
                let dim = self.rho.lattice().dim();
                linalg::pivoted_cholesky(self.rho.matrix(), RANK_TOL, dim).expect("full rank allowed")
            }),
        }
    }

    /// Dense `[A, [A, rho]]`.
    pub fn matrix(&self, ops: &SiteOperators) -> CMatrix {
        ops.commutator(&ops.commutator(self.rho.matrix()))
    }

    pub fn spectrum(&self, a: &AdditiveOperator) -> Spectrum {
        self.spectrum_with(&a.site_operators(), a)
    }

    fn spectrum_with(&self, ops: &SiteOperators, a: &AdditiveOperator) -> Spectrum {
        let dim = self.rho.lattice().dim();
        match &self.low_rank {
            Some(l) if l.ncols() == 0 => Spectrum::zero(dim),
            Some(l) => {
                let r = l.ncols();
                let al = ops.apply_left(l);
                let aal = ops.apply_left(&al);
                let mut k = CMatrix::zeros(dim, 3 * r);
                k.columns_mut(0, r).copy_from(l);
                k.columns_mut(r, r).copy_from(&al);
                k.columns_mut(2 * r, r).copy_from(&aal);
                let (qk, rk) = linalg::thin_qr(&k);
                // R M with M = [[0, 0, 1], [0, -2, 0], [1, 0, 0]] in r-blocks.
                let mut rm = CMatrix::zeros(rk.nrows(), 3 * r);
                rm.columns_mut(0, r).copy_from(&rk.columns(2 * r, r));
                rm.columns_mut(r, r).copy_from(&(rk.columns(r, r) * C64::new(-2.0, 0.0)));
                rm.columns_mut(2 * r, r).copy_from(&rk.columns(0, r));
                let core = rm * rk.adjoint();
                let (values, u) = linalg::eigh(&core);
                Spectrum {
                    values,
                    vectors: qk * u,
                }
            }
            None => {
                let x = self.matrix(ops);
                let scale: f64 = (1..=a.lattice().n_sites()).map(|s| a.site_norm(s)).sum();
                if linalg::max_abs(&x) <= 1e-14 * linalg::max_abs(self.rho.matrix()) * scale * scale {
                    return Spectrum::zero(dim);
                }
                let (values, vectors) = linalg::eigh(&x);
                Spectrum { values, vectors }
            }
        }
    }

    /// `||[A, [A, rho]]||_1`.
    pub fn trace_norm(&self, a: &AdditiveOperator) -> f64 {
        self.spectrum(a).trace_norm()
    }

    /// Trace norm and its gradient with respect to the site-major coefficients.
    pub fn value_and_gradient(&self, a: &AdditiveOperator) -> (f64, Vec<f64>) {
        let ops = a.site_operators();
        let spec = self.spectrum_with(&ops, a);
        let grad = self.gradient(&ops, &spec);
        (spec.trace_norm(), grad)
    }

    /// `d/dc ||X||_1 = Re Tr(sigma [Y, S] + sigma [rho, [S, A]])` with
    /// `S = sign(X)`, `Y = [A, rho]`, evaluated on the factors of `rho` and `S`.
    fn gradient(&self, ops: &SiteOperators, spec: &Spectrum) -> Vec<f64> {
        let lattice = *self.rho.lattice();
        let m = lattice.basis_len();
        let mut grad = vec![0.0; lattice.n_sites() * m];
        let cut = spec.cutoff();
        let keep: Vec<usize> = (0..spec.values.len())
            .filter(|&j| spec.values[j].abs() > cut && spec.values[j] != 0.0)
            .collect();
        if keep.is_empty() {
            return grad;
        }
        let q = CMatrix::from_fn(spec.vectors.nrows(), keep.len(), |i, j| spec.vectors[(i, keep[j])]);
        let signs: Vec<f64> = keep.iter().map(|&j| spec.values[j].signum()).collect();
        let mut qs = q.clone();
        for (j, s) in signs.iter().enumerate() {
            qs.column_mut(j).scale_mut(*s);
        }
        let w = self.factor();
        let aw = ops.apply_left(w);
        let aq = ops.apply_left(&q);
        let mut aqs = aq.clone();
        for (j, s) in signs.iter().enumerate() {
            aqs.column_mut(j).scale_mut(*s);
        }
        let w_qs = w.adjoint() * &qs;
        let aw_qs = aw.adjoint() * &qs;
        let q_aw = q.adjoint() * &aw;
        let q_w = q.adjoint() * w;

        let two = C64::new(2.0, 0.0);
        let p1 = &aw * &w_qs - (w * &aw_qs) * two;
        let p2 = &aqs * &q_w - (&qs * &q_aw) * two;
        let p3 = &qs * &q_w;
        let p4 = w * &w_qs;
        let basis = local_basis(lattice.local_dim());
        for (p, other) in [(&p1, &q), (&p2, w), (&p3, &aw), (&p4, &aq)] {
            accumulate_site_traces(&lattice, &basis, p, other, &mut grad);
        }
        grad
    }
}

/// `grad[(l, alpha)] += Re Tr(b_alpha(l) P Q^dagger)`.
fn accumulate_site_traces(
    lattice: &LatticeConfig,
    basis: &[CMatrix],
    p: &CMatrix,
    q: &CMatrix,
    grad: &mut [f64],
) {
    let d = lattice.local_dim();
    let m = basis.len();
    for site in 1..=lattice.n_sites() {
        let stride = lattice.stride(site);
        let block = stride * d;
        let mut red = CMatrix::zeros(d, d);
        for c in 0..p.ncols() {
            let pc = p.column(c);
            let qc = q.column(c);
            for base in (0..p.nrows()).step_by(block) {
                for off in base..base + stride {
                    for a in 0..d {
                        let pa = pc[off + a * stride];
                        if pa == ZERO {
                            continue;
                        }
                        for b in 0..d {
                            red[(a, b)] += pa * qc[off + b * stride].conj();
                        }
                    }
                }
            }
        }
        for (alpha, bm) in basis.iter().enumerate() {
            let t = linalg::trace_product(bm, &red);
            grad[(site - 1) * m + alpha] += t.re;
        }
    }
}

/// `||[A, [A, rho]]||_1`.
pub fn double_commutator_trace_norm(rho: &DensityState, a: &AdditiveOperator) -> Result<f64> {
    check_lattices(rho, a)?;
    Ok(DoubleCommutator::new(rho).trace_norm(a))
}

fn check_lattices(rho: &DensityState, a: &AdditiveOperator) -> Result<()> {
    if rho.lattice() != a.lattice() {
        return Err(Error::DimensionMismatch {
            expected: rho.lattice().dim(),
            found: a.lattice().dim(),
        });
    }
    Ok(())
}

/// Projector `eta` onto the positive eigenspace of `X = [A, [A, rho]]`, for
/// which `||X||_1 = 2 Tr(eta X)`.
#[derive(Debug, Clone, Serialize)]
pub struct QWitness {
    #[serde(skip)]
    pub projector: CMatrix,
    pub rank: usize,
    /// `2 Tr(eta X)` from the eigenvalues selected into `eta`.
    pub witness_value: f64,
    pub trace_norm: f64,
    /// Set when `X` vanishes and the projector is zero.
    pub degenerate: bool,
}

pub fn extract_witness(rho: &DensityState, a: &AdditiveOperator) -> Result<QWitness> {
    check_lattices(rho, a)?;
    Ok(witness_from_spectrum(rho.lattice().dim(), &DoubleCommutator::new(rho).spectrum(a)))
}

fn witness_from_spectrum(dim: usize, spec: &Spectrum) -> QWitness {
    let trace_norm = spec.trace_norm();
    if trace_norm <= DEGENERATE_TOL {
        return QWitness {
            projector: CMatrix::zeros(dim, dim),
            rank: 0,
            witness_value: 0.0,
            trace_norm,
            degenerate: true,
        };
    }
    let cut = spec.cutoff();
    let mut projector = CMatrix::zeros(dim, dim);
    let mut rank = 0;
    let mut positive = 0.0;
    for (j, &v) in spec.values.iter().enumerate() {
        if v > cut {
            let col = spec.vectors.column(j);
            projector.gerc(ONE, &col, &col, ONE);
            rank += 1;
            positive += v;
        }
    }
    QWitness {
        projector,
        rank,
        witness_value: 2.0 * positive,
        trace_norm,
        degenerate: false,
    }
}

/// Settings for [`maximize_q`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QSearch {
    /// Number of seeded random restarts (at least one).
    pub budget: usize,
    pub seed: u64,
    pub max_sweeps: usize,
    pub rel_tol: f64,
}

impl QSearch {
    pub fn new(budget: usize, seed: u64) -> Self {
        Self {
            budget,
            seed,
            max_sweeps: 50,
            rel_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexQReport {
    pub n_sites: usize,
    /// `max(N, best_trace_norm)`.
    pub best_value: f64,
    /// Best double-commutator trace norm found, before the floor.
    pub best_trace_norm: f64,
    pub floor_applied: bool,
    pub best_operator: AdditiveOperator,
    pub best_source: String,
    pub witness: QWitness,
    pub candidates: Vec<CandidateValue>,
    pub restarts: Vec<f64>,
}

/// Search for the additive operator maximizing `||[A, [A, rho]]||_1`.
///
/// A fixed candidate library (uniform and staggered magnetizations along every
/// basis direction, plus the variance-optimal operator of the dominant
/// eigenvector of `rho`) is evaluated first; the best candidate and `budget`
/// random unit-norm starts are then refined by projected gradient ascent.
/// Restart `k` always uses stream `k` of the master seed, so raising the budget
/// never lowers the result.
pub fn maximize_q(rho: &DensityState, search: &QSearch) -> Result<IndexQReport> {
    if search.budget == 0 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    let lattice = *rho.lattice();
    let dc = DoubleCommutator::new(rho);
    let mut candidates: Vec<(String, AdditiveOperator)> = Vec::new();
    let names = axis_names(&lattice);
    for (axis, name) in names.iter().enumerate() {
        let dir = AdditiveOperator::axis(&lattice, axis);
        candidates.push((format!("uniform-{name}"), AdditiveOperator::uniform(lattice, &dir)?));
        candidates.push((format!("staggered-{name}"), AdditiveOperator::staggered(lattice, &dir)?));
    }
    let purified = dominant_vector(rho, &dc);
    candidates.push(("vcm-purified".into(), max_variance(&purified).optimal_operator));

    let scored: Vec<CandidateValue> = candidates
        .iter()
        .map(|(name, op)| CandidateValue {
            name: name.clone(),
            value: dc.trace_norm(op),
        })
        .collect();
    let (best_idx, _) = scored
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, c)| if c.value > acc.1 { (i, c.value) } else { acc });

    let mut best_op = candidates[best_idx].1.clone();
    let mut best_val = scored[best_idx].value;
    let mut best_source = candidates[best_idx].0.clone();
    let (v, op) = refine(&dc, best_op.clone(), search);
    if v > best_val {
        best_val = v;
        best_op = op;
        best_source = format!("{best_source}+refined");
    }

    let restarts: Vec<(f64, AdditiveOperator)> = (0..search.budget)
        .into_par_iter()
        .map(|k| {
            let mut rng = task_rng(search.seed, k as u64 + 1);
            let start = AdditiveOperator::random_unit(lattice, &mut rng);
            refine(&dc, start, search)
        })
        .collect();
    for (k, (v, op)) in restarts.iter().enumerate() {
        if *v > best_val {
            best_val = *v;
            best_op = op.clone();
            best_source = format!("restart-{k}");
        }
    }

    let witness = witness_from_spectrum(lattice.dim(), &dc.spectrum(&best_op));
    let n = lattice.n_sites() as f64;
    Ok(IndexQReport {
        n_sites: lattice.n_sites(),
        best_value: best_val.max(n),
        best_trace_norm: best_val,
        floor_applied: best_val < n,
        best_operator: best_op,
        best_source,
        witness,
        candidates: scored,
        restarts: restarts.iter().map(|(v, _)| *v).collect(),
    })
}

fn axis_names(lattice: &LatticeConfig) -> Vec<String> {
    if lattice.local_dim() == 2 {
        vec!["x".into(), "y".into(), "z".into()]
    } else {
        (0..lattice.basis_len()).map(|k| format!("b{k}")).collect()
    }
}

/// Projected gradient ascent over the per-site unit balls.
fn refine(dc: &DoubleCommutator<'_>, start: AdditiveOperator, search: &QSearch) -> (f64, AdditiveOperator) {
    let lattice = *dc.lattice();
    let m = lattice.basis_len();
    let mut coeffs = start.coeffs().to_vec();
    project(&lattice, &mut coeffs);
    let mut op = AdditiveOperator::from_flat_unchecked(lattice, coeffs);
    let (mut value, mut grad) = dc.value_and_gradient(&op);
    let mut step = 0.5;
    for _ in 0..search.max_sweeps {
        let gscale = (1..=lattice.n_sites())
            .map(|s| {
                let g = &grad[(s - 1) * m..s * m];
                g.iter().map(|x| x * x).sum::<f64>().sqrt()
            })
            .fold(0.0f64, f64::max);
        if !(gscale > 0.0) {
            break;
        }
        let mut accepted = None;
        for _ in 0..20 {
            let mut trial: Vec<f64> = op
                .coeffs()
                .iter()
                .zip(&grad)
                .map(|(c, g)| c + step * g / gscale)
                .collect();
            project(&lattice, &mut trial);
            let trial_op = AdditiveOperator::from_flat_unchecked(lattice, trial);
            let ops = trial_op.site_operators();
            let spec = dc.spectrum_with(&ops, &trial_op);
            let tv = spec.trace_norm();
            if tv > value {
                accepted = Some((tv, dc.gradient(&ops, &spec), trial_op));
                break;
            }
            step *= 0.5;
        }
        let Some((tv, tg, trial_op)) = accepted else {
            break;
        };
        let gain = (tv - value) / value.abs().max(f64::MIN_POSITIVE);
        value = tv;
        grad = tg;
        op = trial_op;
        step = (step * 2.0).min(1.0);
        if gain < search.rel_tol {
            break;
        }
    }
    (value, op)
}

/// Scale every site back into `||a(l)||_inf <= 1`.
fn project(lattice: &LatticeConfig, coeffs: &mut [f64]) {
    let m = lattice.basis_len();
    for block in coeffs.chunks_mut(m) {
        let norm = site_operator_norm(lattice, block);
        if norm > 1.0 {
            block.iter_mut().for_each(|c| *c /= norm);
        }
    }
}

/// Dominant eigenvector of `rho`, through the factor when it is thin.
fn dominant_vector(rho: &DensityState, dc: &DoubleCommutator<'_>) -> PureState {
    let lattice = *rho.lattice();
    if let Some(l) = &dc.low_rank {
        if l.ncols() > 0 {
            let gram = l.adjoint() * l;
            let (_, u) = linalg::eigh(&gram);
            let top = u.column(u.ncols() - 1).into_owned();
            let mut v = l * top;
            let norm = v.norm();
            v /= C64::new(norm, 0.0);
            return PureState::from_vector_unchecked(lattice, v);
        }
    }
    if lattice.dim() <= 256 {
        return rho.dominant_eigenvector();
    }
    // Power iteration from a fixed start keeps the result deterministic.
    let dim = lattice.dim();
    let mut v = DVector::from_fn(dim, |i, _| C64::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.05));
    v /= C64::new(v.norm(), 0.0);
    for _ in 0..300 {
        let w = rho.matrix() * &v;
        let norm = w.norm();
        if norm == 0.0 {
            break;
        }
        v = w / C64::new(norm, 0.0);
    }
    PureState::from_vector_unchecked(lattice, v)
}
