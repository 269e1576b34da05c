//! Index `p`: maximal variance of an additive operator in a pure state.
//!
//! The maximization domain is every additive operator with `||a(l)||_inf <= 1`
//! on each site. It is bracketed from both sides: the variance-covariance
//! matrix (VCM) of the local basis gives the upper bound `N (d/2) e_max`, and a
//! feasible operator built from its top eigenvectors gives the lower bound that
//! is reported as `max_variance`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{local_basis, max_coeff_norm_sq, CMatrix, LatticeConfig, Mode, C64};
use crate::linalg;
use crate::norms::{spectrum_norm, SchattenOrder};
use crate::operator::{add_site_product, site_operator_norm, AdditiveOperator};
use crate::state::PureState;

const VARIANCE_FLOOR: f64 = 1e-10;
const ASCENT_MAX_ITERS: usize = 2000;

/// `<A^2> - <A>^2`, clamped at zero.
pub fn variance(state: &PureState, a: &AdditiveOperator) -> Result<f64> {
    if state.lattice() != a.lattice() {
        return Err(Error::DimensionMismatch {
            expected: state.lattice().dim(),
            found: a.lattice().dim(),
        });
    }
    Ok(raw_variance(state, a).max(0.0))
}

fn raw_variance(state: &PureState, a: &AdditiveOperator) -> f64 {
    let psi = state.amplitudes();
    let a_psi = a.apply(psi);
    let mean = psi.dotc(&a_psi).re;
    let v = a_psi.norm_squared() - mean * mean;
    if v < -VARIANCE_FLOOR {
        // Only reachable through gross rounding; keep the clamp contract anyway.
        return 0.0;
    }
    v
}

/// Symmetrized covariances `Re <da_i da_j>` of all site basis operators,
/// indexed `(l - 1) * (d^2 - 1) + alpha`.
#[derive(Debug, Clone)]
pub struct VCMatrix {
    pub entries: DMatrix<f64>,
    pub lattice: LatticeConfig,
}

impl VCMatrix {
    /// `c^T V c`, the variance of the additive operator with coefficients `c`.
    pub fn quadratic_form(&self, c: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(c);
        (v.transpose() * &self.entries * &v)[(0, 0)]
    }

    /// Eigenvalues ascending with eigenvectors as columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        linalg::eigh_real(&self.entries)
    }

    fn site_block(&self, site: usize) -> DMatrix<f64> {
        let m = self.lattice.basis_len();
        let o = (site - 1) * m;
        self.entries.view((o, o), (m, m)).into_owned()
    }
}

pub fn build_vcm(state: &PureState) -> VCMatrix {
    let lattice = *state.lattice();
    let psi = state.amplitudes().as_slice();
    let basis = local_basis(lattice.local_dim());
    let m = basis.len();
    let n = lattice.n_sites();
    let mut w = CMatrix::zeros(lattice.dim(), n * m);
    for site in 1..=n {
        for (alpha, b) in basis.iter().enumerate() {
            let mut col = w.column_mut((site - 1) * m + alpha);
            add_site_product(&lattice, site, b, psi, col.as_mut_slice());
            let mean: C64 = psi.iter().zip(col.iter()).map(|(x, y)| x.conj() * y).sum();
            let mean = mean.re;
            for (out, x) in col.iter_mut().zip(psi) {
                *out -= x * mean;
            }
        }
    }
    let gram = w.adjoint() * &w;
    let entries = DMatrix::from_fn(n * m, n * m, |i, j| 0.5 * (gram[(i, j)].re + gram[(j, i)].re));
    VCMatrix { entries, lattice }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexPReport {
    pub n_sites: usize,
    /// Variance of `optimal_operator`: a certified lower bound on the maximum.
    pub max_variance: f64,
    pub optimal_operator: AdditiveOperator,
    /// `N (d/2) e_max`, an upper bound on the maximum.
    pub vcm_upper_bound: f64,
    pub vcm_top_eigenvalue: f64,
}

impl IndexPReport {
    /// Relative width of the sandwich `[max_variance, vcm_upper_bound]`.
    pub fn relative_gap(&self) -> f64 {
        if self.vcm_upper_bound <= 0.0 {
            0.0
        } else {
            (self.vcm_upper_bound - self.max_variance) / self.vcm_upper_bound
        }
    }
}

/// Bracket the maximal additive-operator variance of `state`.
pub fn max_variance(state: &PureState) -> IndexPReport {
    let lattice = *state.lattice();
    let vcm = build_vcm(state);
    let (vals, vecs) = vcm.eigen();
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let upper = lattice.n_sites() as f64 * max_coeff_norm_sq(lattice.local_dim()) * top;

    let n_starts = vals.len().min(3);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..n_starts {
        let col = vecs.column(vals.len() - 1 - k);
        let start = feasible_from_direction(&vcm, col.as_slice());
        let (value, c) = ascend(&vcm, start);
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            best = Some((value, c));
        }
    }
    let (_, mut coeffs) = best.unwrap_or_else(|| (0.0, vec![0.0; vcm.entries.nrows()]));
    canonical_sign(&mut coeffs);
    let op = AdditiveOperator::from_flat_unchecked(lattice, coeffs);
    let max_var = raw_variance(state, &op).max(0.0);
    IndexPReport {
        n_sites: lattice.n_sites(),
        max_variance: max_var,
        optimal_operator: op,
        vcm_upper_bound: upper,
        vcm_top_eigenvalue: top,
    }
}

/// Per-site rescaling of `dir` to unit site norm. Sites where `dir` carries no
/// weight get the dominant direction of their own diagonal VCM block.
fn feasible_from_direction(vcm: &VCMatrix, dir: &[f64]) -> Vec<f64> {
    let lattice = vcm.lattice;
    let m = lattice.basis_len();
    let scale = dir.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut out = vec![0.0; dir.len()];
    for site in 1..=lattice.n_sites() {
        let block = &dir[(site - 1) * m..site * m];
        let target = &mut out[(site - 1) * m..site * m];
        let norm = site_operator_norm(&lattice, block);
        if norm > 1e-8 * scale.max(f64::MIN_POSITIVE) {
            for (t, b) in target.iter_mut().zip(block) {
                *t = b / norm;
            }
        } else {
            let (_, bv) = linalg::eigh_real(&vcm.site_block(site));
            let local: Vec<f64> = bv.column(m - 1).iter().copied().collect();
            let ln = site_operator_norm(&lattice, &local);
            for (t, b) in target.iter_mut().zip(&local) {
                *t = b / ln;
            }
        }
    }
    out
}

/// Monotone ascent `c <- normalize_per_site(V c)`. For qubits every step
/// maximizes the linearization of the convex form over the feasible set, so the
/// variance never decreases; steps that fail to improve end the loop.
fn ascend(vcm: &VCMatrix, start: Vec<f64>) -> (f64, Vec<f64>) {
    let lattice = vcm.lattice;
    let m = lattice.basis_len();
    let mut c = start;
    let mut value = vcm.quadratic_form(&c);
    for _ in 0..ASCENT_MAX_ITERS {
        let grad = &vcm.entries * nalgebra::DVector::from_column_slice(&c);
        let mut next = c.clone();
        for site in 1..=lattice.n_sites() {
            let g = &grad.as_slice()[(site - 1) * m..site * m];
            let norm = site_operator_norm(&lattice, g);
            if norm > 0.0 {
                for (t, x) in next[(site - 1) * m..site * m].iter_mut().zip(g) {
                    *t = x / norm;
                }
            }
        }
        let next_value = vcm.quadratic_form(&next);
        if !(next_value > value * (1.0 + 1e-15)) {
            break;
        }
        c = next;
        value = next_value;
    }
    (value, c)
}

fn canonical_sign(c: &mut [f64]) {
    let lead = c.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() + 1e-12 { x } else { a });
    if lead < 0.0 {
        c.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Spectrum of `i [A, |psi><psi|]` next to `sqrt(Var)`.
#[derive(Debug, Clone, Serialize)]
pub struct CommutatorSpectrum {
    /// All eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub std_dev: f64,
    /// Largest deviation of the spectrum from `{+sd, -sd, 0, ..., 0}`.
    pub identity_error: f64,
    pub trace_norm: f64,
    pub frobenius_norm: f64,
    pub operator_norm: f64,
}

/// Dense eigendecomposition of `i [A, |psi><psi|]`.
pub fn commutator_spectrum_check(state: &PureState, a: &AdditiveOperator) -> Result<CommutatorSpectrum> {
    if state.lattice() != a.lattice() {
        return Err(Error::DimensionMismatch {
            expected: state.lattice().dim(),
            found: a.lattice().dim(),
        });
    }
    state.lattice().check_cap(Mode::Mixed)?;
    let rho = state.projector();
    let dense = a.realize();
    let comm = (&dense * &rho - &rho * &dense) * C64::new(0.0, 1.0);
    let eigenvalues = linalg::eigvalsh(&comm);
    let sd = variance(state, a)?.sqrt();
    let n = eigenvalues.len();
    let mut expected = vec![0.0; n];
    if n >= 2 {
        expected[0] = -sd;
        expected[n - 1] = sd;
    }
    let identity_error = eigenvalues
        .iter()
        .zip(&expected)
        .fold(0.0f64, |acc, (e, x)| acc.max((e - x).abs()));
    Ok(CommutatorSpectrum {
        trace_norm: spectrum_norm(&eigenvalues, SchattenOrder::Trace),
        frobenius_norm: spectrum_norm(&eigenvalues, SchattenOrder::Frobenius),
        operator_norm: spectrum_norm(&eigenvalues, SchattenOrder::Operator),
        eigenvalues,
        std_dev: sd,
        identity_error,
    })
}
