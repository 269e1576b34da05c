//! Pure and mixed states on a finite lattice.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lattice::{
    basis_index, CMatrix, LatticeConfig, Mode, SplitIndex, C64, ONE, ZERO,
};
use crate::linalg;

const PURE_NORM_TOL: f64 = 1e-12;
const DENSITY_TOL: f64 = 1e-10;

/// A normalized state vector of length `d^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    lattice: LatticeConfig,
    amplitudes: DVector<C64>,
}

impl PureState {
    /// Requires unit Euclidean norm within `1e-12`.
    pub fn new(lattice: LatticeConfig, amplitudes: Vec<C64>) -> Result<Self> {
        lattice.check_cap(Mode::Pure)?;
        if amplitudes.len() != lattice.dim() {
            return Err(Error::DimensionMismatch {
                expected: lattice.dim(),
                found: amplitudes.len(),
            });
        }
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > PURE_NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            lattice,
            amplitudes: v,
        })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(lattice: LatticeConfig, amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotNormalized(norm));
        }
        let scaled = amplitudes.into_iter().map(|a| a / norm).collect();
        Self::new(lattice, scaled)
    }

    pub(crate) fn from_vector_unchecked(lattice: LatticeConfig, amplitudes: DVector<C64>) -> Self {
        Self {
            lattice,
            amplitudes,
        }
    }

    /// Computational basis state `|s_1 ... s_N>`.
    pub fn basis(lattice: LatticeConfig, config: &[usize]) -> Result<Self> {
        if config.len() != lattice.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: lattice.n_sites(),
                found: config.len(),
            });
        }
        if let Some(&bad) = config.iter().find(|&&s| s >= lattice.local_dim()) {
            return Err(Error::InvalidArgument(format!("local level {bad} out of range")));
        }
        let mut amps = vec![ZERO; lattice.dim()];
        amps[basis_index(config, &lattice)] = ONE;
        Self::new(lattice, amps)
    }

    /// `|0...0>`.
    pub fn all_zero(lattice: LatticeConfig) -> Result<Self> {
        Self::basis(lattice, &vec![0; lattice.n_sites()])
    }

    /// `(|0...0> + |1...1>) / sqrt(2)`.
    pub fn cat(lattice: LatticeConfig) -> Result<Self> {
        Self::superposed_extremes(lattice, 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt())
    }

    /// `b |0...0> + a |1...1>` with `a = N^-alpha`, `b = sqrt(1 - N^-2alpha)`.
    pub fn tilted(lattice: LatticeConfig, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 0.5) {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in (0, 1/2], got {alpha}"
            )));
        }
        let (a, b) = tilt_amplitudes(lattice.n_sites(), alpha);
        Self::superposed_extremes(lattice, b, a)
    }

    fn superposed_extremes(lattice: LatticeConfig, zeros: f64, ones: f64) -> Result<Self> {
        let mut amps = vec![ZERO; lattice.dim()];
        amps[0] += C64::new(zeros, 0.0);
        let all_one = basis_index(&vec![1; lattice.n_sites()], &lattice);
        amps[all_one] += C64::new(ones, 0.0);
        Self::normalized(lattice, amps)
    }

    /// Tensor product of single-site states (each normalized on the fly).
    pub fn product(lattice: LatticeConfig, sites: &[Vec<C64>]) -> Result<Self> {
        if sites.len() != lattice.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: lattice.n_sites(),
                found: sites.len(),
            });
        }
        let mut v = DVector::from_element(1, ONE);
        for s in sites {
            if s.len() != lattice.local_dim() {
                return Err(Error::DimensionMismatch {
                    expected: lattice.local_dim(),
                    found: s.len(),
                });
            }
            let sv = DVector::from_column_slice(s);
            v = v.kronecker(&sv);
        }
        Self::normalized(lattice, v.as_slice().to_vec())
    }

    /// Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(lattice: LatticeConfig, rng: &mut R) -> Result<Self> {
        let amps = (0..lattice.dim()).map(|_| gaussian_c64(rng)).collect();
        Self::normalized(lattice, amps)
    }

    /// Product of independent Haar-random site states.
    pub fn random_product<R: Rng + ?Sized>(lattice: LatticeConfig, rng: &mut R) -> Result<Self> {
        let sites: Vec<Vec<C64>> = (0..lattice.n_sites())
            .map(|_| (0..lattice.local_dim()).map(|_| gaussian_c64(rng)).collect())
            .collect();
        Self::product(lattice, &sites)
    }

    /// `self (x) other` on the concatenated lattice.
    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        if self.lattice.local_dim() != other.lattice.local_dim() {
            return Err(Error::InvalidArgument("local dimensions differ".into()));
        }
        let lattice = LatticeConfig::new(
            self.lattice.n_sites() + other.lattice.n_sites(),
            self.lattice.local_dim(),
        )?;
        let v = self.amplitudes.kronecker(&other.amplitudes);
        Self::normalized(lattice, v.as_slice().to_vec())
    }

    pub fn lattice(&self) -> &LatticeConfig {
        &self.lattice
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// `|psi><psi|`.
    pub fn projector(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn to_density(&self) -> Result<DensityState> {
        self.lattice.check_cap(Mode::Mixed)?;
        Ok(DensityState::from_trusted(self.lattice, self.projector()))
    }
}

/// `(N^-alpha, sqrt(1 - N^-2alpha))`.
pub fn tilt_amplitudes(n_sites: usize, alpha: f64) -> (f64, f64) {
    let a = (n_sites as f64).powf(-alpha);
    (a, (1.0 - a * a).max(0.0).sqrt())
}

pub(crate) fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// A unit-trace positive semidefinite `d^N x d^N` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    lattice: LatticeConfig,
    matrix: CMatrix,
}

impl DensityState {
    /// Validates Hermiticity (entrywise `1e-10`), unit trace (`1e-10`) and
    /// positivity (eigenvalues `>= -1e-10`).
    pub fn new(lattice: LatticeConfig, matrix: CMatrix) -> Result<Self> {
        lattice.check_cap(Mode::Mixed)?;
        let dim = lattice.dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidDensity("non-finite entry".into()));
        }
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian (defect {defect:e})")));
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > DENSITY_TOL {
            return Err(Error::InvalidDensity(format!("trace {trace} != 1")));
        }
        let shifted = linalg::hermitian_part(&matrix) + CMatrix::identity(dim, dim).scale(DENSITY_TOL);
        if !linalg::is_positive_semidefinite(&shifted) {
            let min = linalg::eigvalsh(&matrix)[0];
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { lattice, matrix })
    }

    pub(crate) fn from_trusted(lattice: LatticeConfig, matrix: CMatrix) -> Self {
        Self { lattice, matrix }
    }

    pub fn from_pure(psi: &PureState) -> Result<Self> {
        psi.to_density()
    }

    /// `sum_i w_i |psi_i><psi_i|` with weights renormalized to sum to one.
    pub fn mixture(components: &[(f64, PureState)]) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let lattice = *first.1.lattice();
        lattice.check_cap(Mode::Mixed)?;
        let total: f64 = components.iter().map(|(w, _)| *w).sum();
        if components.iter().any(|(w, _)| *w < 0.0) || !(total > 0.0) {
            return Err(Error::InvalidArgument("mixture weights must be nonnegative".into()));
        }
        let dim = lattice.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (w, psi) in components {
            if psi.lattice() != &lattice {
                return Err(Error::InvalidArgument("mixture components on different lattices".into()));
            }
            let v = psi.amplitudes();
            m.gerc(C64::new(w / total, 0.0), v, v, ONE);
        }
        Ok(Self::from_trusted(lattice, m))
    }

    /// `1 / d^N`.
    pub fn maximally_mixed(lattice: LatticeConfig) -> Result<Self> {
        lattice.check_cap(Mode::Mixed)?;
        let dim = lattice.dim();
        Ok(Self::from_trusted(
            lattice,
            CMatrix::identity(dim, dim).scale(1.0 / dim as f64),
        ))
    }

    /// `(|0...0><0...0| + |1...1><1...1|) / 2`.
    pub fn classical_mixture(lattice: LatticeConfig) -> Result<Self> {
        let zero = PureState::all_zero(lattice)?;
        let one = PureState::basis(lattice, &vec![1; lattice.n_sites()])?;
        Self::mixture(&[(0.5, zero), (0.5, one)])
    }

    /// Uniform mixture of `count` random product states.
    pub fn random_product_mixture<R: Rng + ?Sized>(
        lattice: LatticeConfig,
        count: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let comps = (0..count.max(1))
            .map(|_| PureState::random_product(lattice, rng).map(|p| (1.0, p)))
            .collect::<Result<Vec<_>>>()?;
        Self::mixture(&comps)
    }

    /// `G G^dagger / Tr(G G^dagger)` for a `d^N x rank` complex Gaussian `G`.
    pub fn random<R: Rng + ?Sized>(lattice: LatticeConfig, rank: usize, rng: &mut R) -> Result<Self> {
        lattice.check_cap(Mode::Mixed)?;
        let dim = lattice.dim();
        let rank = rank.clamp(1, dim);
        let g = CMatrix::from_fn(dim, rank, |_, _| gaussian_c64(rng));
        let mut m = &g * g.adjoint();
        let tr = m.trace().re;
        m.scale_mut(1.0 / tr);
        Ok(Self::from_trusted(lattice, linalg::hermitian_part(&m)))
    }

    pub fn lattice(&self) -> &LatticeConfig {
        &self.lattice
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_product(&self.matrix, &self.matrix).re
    }

    /// `<psi| rho |psi>`.
    pub fn fidelity_with_pure(&self, psi: &PureState) -> f64 {
        let v = psi.amplitudes();
        (v.adjoint() * &self.matrix * v)[(0, 0)].re
    }

    /// Reduced density matrix on `keep` (sorted, 1-based sites).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<CMatrix> {
        for &s in keep {
            self.lattice.check_site(s)?;
        }
        Ok(partial_trace(&self.matrix, &self.lattice, keep))
    }

    /// Eigenvector of the largest eigenvalue, as a pure state.
    pub fn dominant_eigenvector(&self) -> PureState {
        let (_, vecs) = linalg::eigh(&self.matrix);
        let v = vecs.column(vecs.ncols() - 1).into_owned();
        PureState::from_vector_unchecked(self.lattice, v)
    }
}

/// Partial trace of a full-lattice operator onto the sites in `keep`.
pub fn partial_trace(m: &CMatrix, lattice: &LatticeConfig, keep: &[usize]) -> CMatrix {
    let split = SplitIndex::new(lattice, keep);
    let dk = split.inner.len();
    let mut out = CMatrix::zeros(dk, dk);
    for &o in &split.outer {
        for (a, &ia) in split.inner.iter().enumerate() {
            for (b, &ib) in split.inner.iter().enumerate() {
                out[(a, b)] += m[(o + ia, o + ib)];
            }
        }
    }
    out
}

/// Amplitudes reshaped into a `d^|S| x d^(N-|S|)` matrix.
pub fn bipartite_matrix(psi: &PureState, sites: &[usize]) -> CMatrix {
    let split = SplitIndex::new(psi.lattice(), sites);
    let amps = psi.amplitudes();
    DMatrix::from_fn(split.inner.len(), split.outer.len(), |a, b| {
        amps[split.inner[a] + split.outer[b]]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalization_is_enforced() {
        let lat = LatticeConfig::qubits(1).unwrap();
        assert!(matches!(
            PureState::new(lat, vec![ONE, ONE]),
            Err(Error::NotNormalized(_))
        ));
        assert!(PureState::normalized(lat, vec![ZERO, ZERO]).is_err());
        assert!(PureState::new(lat, vec![ONE]).is_err());
    }

    #[test]
    fn cat_and_tilted_amplitudes() {
        let lat = LatticeConfig::qubits(4).unwrap();
        let cat = PureState::cat(lat).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((cat.amplitudes()[0].re - h).abs() < 1e-15);
        assert!((cat.amplitudes()[15].re - h).abs() < 1e-15);
        let t = PureState::tilted(lat, 0.5).unwrap();
        assert!((t.amplitudes()[15].re - 0.5).abs() < 1e-15);
        assert!((t.amplitudes()[0].re - 0.75f64.sqrt()).abs() < 1e-15);
        assert!(PureState::tilted(lat, 0.0).is_err());
        assert!(PureState::tilted(lat, 0.7).is_err());
    }

    #[test]
    fn density_validation_rejects_bad_matrices() {
        let lat = LatticeConfig::qubits(1).unwrap();
        let not_unit = CMatrix::identity(2, 2);
        assert!(DensityState::new(lat, not_unit).is_err());
        let negative = CMatrix::from_row_slice(2, 2, &[C64::new(1.5, 0.0), ZERO, ZERO, C64::new(-0.5, 0.0)]);
        assert!(DensityState::new(lat, negative).is_err());
        let skew = CMatrix::from_row_slice(2, 2, &[C64::new(0.5, 0.0), ONE, ZERO, C64::new(0.5, 0.0)]);
        assert!(DensityState::new(lat, skew).is_err());
        assert!(DensityState::new(lat, CMatrix::identity(2, 2).scale(0.5)).is_ok());
    }

    #[test]
    fn random_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lat = LatticeConfig::qubits(3).unwrap();
        for rank in [1, 3, 8] {
            let rho = DensityState::random(lat, rank, &mut rng).unwrap();
            assert!(DensityState::new(lat, rho.matrix().clone()).is_ok());
        }
        let p = PureState::random_product(lat, &mut rng).unwrap();
        assert!((p.amplitudes().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_cat_is_classical() {
        let lat = LatticeConfig::qubits(3).unwrap();
        let rho = PureState::cat(lat).unwrap().to_density().unwrap();
        let red = rho.partial_trace(&[1, 3]).unwrap();
        assert!((red[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((red[(3, 3)].re - 0.5).abs() < 1e-15);
        assert!(red[(0, 3)].norm() < 1e-15);
    }

    #[test]
    fn cap_is_enforced() {
        let lat = LatticeConfig::qubits(11).unwrap();
        if std::env::var(crate::lattice::CAP_ENV).is_err() {
            assert!(matches!(
                DensityState::maximally_mixed(lat),
                Err(Error::CapExceeded { .. })
            ));
        }
    }
}
