//! Kraus channels supported on a subset of lattice sites.
//!
//! Kraus operators are stored as `d^|S| x d^|S|` matrices on the support and
//! only embedded into the full space on request.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    apply_on_sites_left, apply_on_sites_right, apply_on_sites_vec, embed_on_sites, pauli_x, CMatrix, LatticeConfig,
    SplitIndex, SubsystemSupport, C64, ONE, ZERO,
};
use crate::linalg;
use crate::rng::task_rng;
use crate::schmidt::schmidt;
use crate::state::{gaussian_c64, tilt_amplitudes, DensityState, PureState};

/// Tolerance on the eigenvalues of `sum E_k^dagger E_k`.
pub const CHANNEL_TOL: f64 = 1e-10;
/// Success probabilities at or below this are null outcomes.
pub const NULL_OUTCOME_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    lattice: LatticeConfig,
    support: SubsystemSupport,
    kraus_ops: Vec<CMatrix>,
    trace_preserving: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelValidity {
    pub max_eigenvalue: f64,
    pub min_eigenvalue: f64,
    /// Largest `||E_k||_inf`.
    pub max_kraus_norm: f64,
    pub valid: bool,
    pub trace_preserving: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelOutcome<S> {
    pub output: S,
    pub success_probability: f64,
}

/// How the cat-creating operation is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CatMode {
    /// The bare operator `|c><sum_i xi_i|`, whose norm is `sqrt(v)`.
    Literal,
    /// `{|c><xi_i|}` plus `|c>` paired with a basis of the complement of
    /// `span{xi_i}`; trace preserving.
    Completed,
}

impl KrausChannel {
    pub fn new(lattice: LatticeConfig, support: SubsystemSupport, kraus_ops: Vec<CMatrix>) -> Result<Self> {
        for &s in support.sites() {
            lattice.check_site(s)?;
        }
        if kraus_ops.is_empty() {
            return Err(Error::InvalidArgument("a channel needs at least one Kraus operator".into()));
        }
        let ds = support.dim(&lattice);
        for e in &kraus_ops {
            if e.nrows() != ds || e.ncols() != ds {
                return Err(Error::DimensionMismatch {
                    expected: ds,
                    found: e.nrows().max(e.ncols()),
                });
            }
            if e.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Malformed("non-finite Kraus entry".into()));
            }
        }
        let mut channel = Self {
            lattice,
            support,
            kraus_ops,
            trace_preserving: false,
        };
        channel.trace_preserving = channel.validate().trace_preserving;
        Ok(channel)
    }

    pub fn single(lattice: LatticeConfig, support: SubsystemSupport, op: CMatrix) -> Result<Self> {
        Self::new(lattice, support, vec![op])
    }

    pub fn identity(lattice: LatticeConfig, support: SubsystemSupport) -> Result<Self> {
        let ds = support.dim(&lattice);
        Self::single(lattice, support, CMatrix::identity(ds, ds))
    }

    /// `{E, sqrt(1 - E^dagger E)}` for a contraction `E`.
    pub fn completed(lattice: LatticeConfig, support: SubsystemSupport, e: CMatrix) -> Result<Self> {
        let gram = e.adjoint() * &e;
        let (vals, vecs) = linalg::eigh(&gram);
        let top = vals.last().copied().unwrap_or(0.0);
        if top > 1.0 + CHANNEL_TOL {
            return Err(Error::InvalidChannel(top));
        }
        let mut root = CMatrix::zeros(gram.nrows(), gram.ncols());
        for (j, v) in vals.iter().enumerate() {
            let w = (1.0 - v).max(0.0).sqrt();
            let col = vecs.column(j);
            root.gerc(C64::new(w, 0.0), &col, &col, ONE);
        }
        Self::new(lattice, support, vec![e, root])
    }

    pub fn lattice(&self) -> &LatticeConfig {
        &self.lattice
    }

    pub fn support(&self) -> &SubsystemSupport {
        &self.support
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.kraus_ops
    }

    pub fn len(&self) -> usize {
        self.kraus_ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kraus_ops.is_empty()
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    /// `sum_k E_k^dagger E_k` on the support.
    pub fn completeness(&self) -> CMatrix {
        let ds = self.support.dim(&self.lattice);
        self.kraus_ops
            .iter()
            .fold(CMatrix::zeros(ds, ds), |acc, e| acc + e.adjoint() * e)
    }

    pub fn validate(&self) -> ChannelValidity {
        let vals = linalg::eigvalsh(&self.completeness());
        let max_eigenvalue = *vals.last().expect("nonempty support");
        let min_eigenvalue = vals[0];
        let max_kraus_norm = self
            .kraus_ops
            .iter()
            .map(|e| linalg::singular_values(e)[0])
            .fold(0.0, f64::max);
        let valid = max_eigenvalue <= 1.0 + CHANNEL_TOL;
        ChannelValidity {
            max_eigenvalue,
            min_eigenvalue,
            max_kraus_norm,
            valid,
            trace_preserving: valid && (min_eigenvalue - 1.0).abs() <= CHANNEL_TOL,
        }
    }

    fn require_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.valid {
            Ok(())
        } else {
            Err(Error::InvalidChannel(v.max_eigenvalue))
        }
    }

    fn split(&self) -> SplitIndex {
        SplitIndex::new(&self.lattice, self.support.sites())
    }

    fn check_lattice(&self, other: &LatticeConfig) -> Result<()> {
        if &self.lattice != other {
            return Err(Error::DimensionMismatch {
                expected: self.lattice.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    /// Kraus operator `k` as a full `d^N x d^N` matrix.
    pub fn embedded(&self, k: usize) -> CMatrix {
        embed_on_sites(&self.kraus_ops[k], self.support.sites(), &self.lattice)
    }

    /// `E|psi>` for a single-Kraus channel, unnormalized.
    pub fn act_on_vector(&self, psi: &PureState) -> Result<DVector<C64>> {
        if self.kraus_ops.len() != 1 {
            return Err(Error::NotSingleKraus(self.kraus_ops.len()));
        }
        self.check_lattice(psi.lattice())?;
        let out = apply_on_sites_vec(&self.kraus_ops[0], &self.split(), psi.amplitudes().as_slice());
        Ok(DVector::from_vec(out))
    }

    /// `E|psi> / sqrt(G)` with `G = <psi|E^dagger E|psi>`.
    pub fn apply_pure(&self, psi: &PureState) -> Result<ChannelOutcome<PureState>> {
        self.require_valid()?;
        self.apply_pure_unchecked(psi)
    }

    /// As [`apply_pure`](Self::apply_pure) but without the contraction check,
    /// for operators that are deliberately not valid Kraus operators.
    pub fn apply_pure_unchecked(&self, psi: &PureState) -> Result<ChannelOutcome<PureState>> {
        let v = self.act_on_vector(psi)?;
        let g = v.norm_squared();
        if !(g > NULL_OUTCOME_TOL) {
            return Err(Error::NullOutcome(g));
        }
        let output = PureState::from_vector_unchecked(self.lattice, v / C64::new(g.sqrt(), 0.0));
        Ok(ChannelOutcome {
            output,
            success_probability: g,
        })
    }

    /// `sum_k E_k rho E_k^dagger`, unnormalized; its trace is `G`.
    pub fn act_on_matrix(&self, rho: &CMatrix) -> CMatrix {
        let split = self.split();
        let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
        for e in &self.kraus_ops {
            let left = apply_on_sites_left(e, &split, rho);
            out += apply_on_sites_right(&left, &e.adjoint(), &split);
        }
        out
    }

    pub fn apply_mixed(&self, rho: &DensityState) -> Result<ChannelOutcome<DensityState>> {
        self.require_valid()?;
        self.check_lattice(rho.lattice())?;
        let out = self.act_on_matrix(rho.matrix());
        let g = out.trace().re;
        if !(g > NULL_OUTCOME_TOL) {
            return Err(Error::NullOutcome(g));
        }
        let normalized = linalg::hermitian_part(&out).unscale(g);
        Ok(ChannelOutcome {
            output: DensityState::from_trusted(self.lattice, normalized),
            success_probability: g,
        })
    }

    pub fn to_document(&self) -> ChannelDocument {
        ChannelDocument {
            n_sites: self.lattice.n_sites(),
            local_dim: self.lattice.local_dim(),
            support: self.support.sites().to_vec(),
            trace_preserving: self.trace_preserving,
            kraus_ops: self.kraus_ops.iter().map(matrix_to_rows).collect(),
        }
    }

    pub fn from_document(doc: &ChannelDocument) -> Result<Self> {
        let lattice = LatticeConfig::new(doc.n_sites, doc.local_dim)?;
        let support = SubsystemSupport::new(doc.support.clone(), &lattice)?;
        let ops = doc
            .kraus_ops
            .iter()
            .map(|rows| rows_to_matrix(rows))
            .collect::<Result<Vec<_>>>()?;
        Self::new(lattice, support, ops)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("channel document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ChannelDocument = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        Self::from_document(&doc)
    }
}

/// Serialized form: Kraus matrices as rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDocument {
    pub n_sites: usize,
    pub local_dim: usize,
    pub support: Vec<usize>,
    pub trace_preserving: bool,
    pub kraus_ops: Vec<Vec<Vec<[f64; 2]>>>,
}

pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Malformed("Kraus matrix must be square and nonempty".into()));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

/// Tensor power of a single-site operator over `count` sites.
fn tensor_power(op: &CMatrix, count: usize) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for _ in 0..count {
        out = out.kronecker(op);
    }
    out
}

/// `prod_{l even} sigma_x(l)` on the even sites.
pub fn make_spin_flip_even(lattice: LatticeConfig) -> Result<KrausChannel> {
    if lattice.n_sites() < 2 {
        return Err(Error::InvalidLattice("spin flip on even sites needs N >= 2".into()));
    }
    if lattice.local_dim() != 2 {
        return Err(Error::InvalidLattice("spin flip is defined for qubits".into()));
    }
    let even: Vec<usize> = (2..=lattice.n_sites()).step_by(2).collect();
    let op = tensor_power(&pauli_x(), even.len());
    let support = SubsystemSupport::new(even, &lattice)?;
    KrausChannel::single(lattice, support, op)
}

/// Projector on site 1 onto `a|0> + b|1>` together with the tilted input
/// `b|0...0> + a|1...1>`, where `a = N^-alpha`, `b = sqrt(1 - a^2)`.
pub fn make_local_projection(lattice: LatticeConfig, alpha: f64) -> Result<(KrausChannel, PureState)> {
    if lattice.n_sites() < 2 {
        return Err(Error::InvalidLattice("local projection needs N >= 2".into()));
    }
    if lattice.local_dim() != 2 {
        return Err(Error::InvalidLattice("local projection is defined for qubits".into()));
    }
    let input = PureState::tilted(lattice, alpha)?;
    let (a, b) = tilt_amplitudes(lattice.n_sites(), alpha);
    let v = DVector::from_vec(vec![C64::new(a, 0.0), C64::new(b, 0.0)]);
    let projector = &v * v.adjoint();
    let channel = KrausChannel::single(lattice, SubsystemSupport::new(vec![1], &lattice)?, projector)?;
    Ok((channel, input))
}

/// Local cat vector `(|0...0> + |1...1>)/sqrt(2)` on `count` sites of local
/// dimension `d`.
fn local_cat(count: usize, d: usize) -> DVector<C64> {
    let dim = d.pow(count as u32);
    let mut c = DVector::from_element(dim, ZERO);
    let all_one: usize = (0..count).map(|k| d.pow(k as u32)).sum();
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    c[0] += h;
    c[all_one] += h;
    c
}

/// Operation turning `psi1` into a state carrying a cat factor on `support`,
/// built from the Schmidt vectors `xi_i` of `psi1` on `support`.
pub fn make_cat_creator(psi1: &PureState, support: &SubsystemSupport, mode: CatMode) -> Result<KrausChannel> {
    let lattice = *psi1.lattice();
    let decomposition = schmidt(psi1, support)?;
    let c = local_cat(support.volume(), lattice.local_dim());
    match mode {
        CatMode::Literal => {
            let ds = support.dim(&lattice);
            let sum = decomposition
                .xi_vectors
                .iter()
                .fold(DVector::from_element(ds, ZERO), |acc, x| acc + x);
            KrausChannel::single(lattice, support.clone(), &c * sum.adjoint())
        }
        CatMode::Completed => {
            let ds = support.dim(&lattice);
            let mut ops: Vec<CMatrix> = decomposition.xi_vectors.iter().map(|x| &c * x.adjoint()).collect();
            for eta in linalg::orthogonal_complement(&decomposition.xi_vectors, ds) {
                ops.push(&c * eta.adjoint());
            }
            KrausChannel::new(lattice, support.clone(), ops)
        }
    }
}

/// Gaussian Kraus operators rescaled so that the stacked column
/// `[E_1; ...; E_M]` has operator norm `t`, drawn uniformly from `[0.5, 1]`.
pub fn random_channel<R: Rng + ?Sized>(
    lattice: LatticeConfig,
    support: SubsystemSupport,
    n_kraus: usize,
    rng: &mut R,
) -> Result<KrausChannel> {
    if n_kraus == 0 {
        return Err(Error::InvalidArgument("n_kraus must be at least 1".into()));
    }
    let ds = support.dim(&lattice);
    let mut ops: Vec<CMatrix> = (0..n_kraus)
        .map(|_| CMatrix::from_fn(ds, ds, |_, _| gaussian_c64(rng)))
        .collect();
    let gram = ops.iter().fold(CMatrix::zeros(ds, ds), |acc, e| acc + e.adjoint() * e);
    let stacked_norm = linalg::eigvalsh(&gram).last().copied().unwrap_or(0.0).sqrt();
    let t: f64 = rng.random_range(0.5..=1.0);
    let scale = C64::new(t / stacked_norm, 0.0);
    for e in &mut ops {
        *e *= scale;
    }
    KrausChannel::new(lattice, support, ops)
}

/// [`random_channel`] with a generator derived from `seed`.
pub fn random_channel_seeded(
    lattice: LatticeConfig,
    support: SubsystemSupport,
    n_kraus: usize,
    seed: u64,
) -> Result<KrausChannel> {
    random_channel(lattice, support, n_kraus, &mut task_rng(seed, 0))
}

/// Haar-random unitary on `support` as a single Kraus operator.
pub fn random_unitary_channel<R: Rng + ?Sized>(
    lattice: LatticeConfig,
    support: SubsystemSupport,
    rng: &mut R,
) -> Result<KrausChannel> {
    let ds = support.dim(&lattice);
    let g = CMatrix::from_fn(ds, ds, |_, _| gaussian_c64(rng));
    let (mut q, r) = linalg::thin_qr(&g);
    for j in 0..ds {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            q.column_mut(j).scale_mut_c(phase);
        }
    }
    KrausChannel::single(lattice, support, q)
}

trait ScaleComplex {
    fn scale_mut_c(&mut self, z: C64);
}

impl<S> ScaleComplex for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_c(&mut self, z: C64) {
        for x in self.iter_mut() {
            *x *= z;
        }
    }
}

/// Rank-one projector `|v><v|` on a single site, from a random direction.
pub fn random_site_projector<R: Rng + ?Sized>(lattice: LatticeConfig, site: usize, rng: &mut R) -> Result<KrausChannel> {
    lattice.check_site(site)?;
    let d = lattice.local_dim();
    let mut v = DVector::from_fn(d, |_, _| gaussian_c64(rng));
    v /= C64::new(v.norm(), 0.0);
    KrausChannel::single(lattice, SubsystemSupport::new(vec![site], &lattice)?, &v * v.adjoint())
}
