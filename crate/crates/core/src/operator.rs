//! Additive operators `A = sum_l a(l)` built from traceless single-site terms.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{embed_local, local_basis, CMatrix, LatticeConfig, C64, ZERO};
use crate::linalg;

const SITE_NORM_TOL: f64 = 1e-12;

/// Real coefficients of every site over the traceless local basis (Pauli basis
/// for qubits), stored site-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveOperator {
    lattice: LatticeConfig,
    coeffs: Vec<f64>,
}

impl AdditiveOperator {
    /// `coeffs[l - 1]` holds the basis coefficients of site `l`. Every site
    /// operator must satisfy `||a(l)||_inf <= 1`.
    pub fn new(lattice: LatticeConfig, coeffs: Vec<Vec<f64>>) -> Result<Self> {
        if coeffs.len() != lattice.n_sites() {
            return Err(Error::DimensionMismatch {
                expected: lattice.n_sites(),
                found: coeffs.len(),
            });
        }
        let m = lattice.basis_len();
        let mut flat = Vec::with_capacity(m * coeffs.len());
        for c in &coeffs {
            if c.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: c.len(),
                });
            }
            flat.extend_from_slice(c);
        }
        Self::from_flat(lattice, flat)
    }

    /// Site-major flat coefficient vector of length `N (d^2 - 1)`.
    pub fn from_flat(lattice: LatticeConfig, coeffs: Vec<f64>) -> Result<Self> {
        let expected = lattice.n_sites() * lattice.basis_len();
        if coeffs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: coeffs.len(),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        let op = Self { lattice, coeffs };
        for site in 1..=lattice.n_sites() {
            let norm = op.site_norm(site);
            if norm > 1.0 + SITE_NORM_TOL {
                return Err(Error::SiteNormExceeded { site, norm });
            }
        }
        Ok(op)
    }

    pub(crate) fn from_flat_unchecked(lattice: LatticeConfig, coeffs: Vec<f64>) -> Self {
        Self { lattice, coeffs }
    }

    pub fn zero(lattice: LatticeConfig) -> Self {
        Self::from_flat_unchecked(lattice, vec![0.0; lattice.n_sites() * lattice.basis_len()])
    }

    /// Same coefficient vector `direction` on every site.
    pub fn uniform(lattice: LatticeConfig, direction: &[f64]) -> Result<Self> {
        Self::new(lattice, vec![direction.to_vec(); lattice.n_sites()])
    }

    /// `sum_l (-1)^l direction` (site numbering from 1).
    pub fn staggered(lattice: LatticeConfig, direction: &[f64]) -> Result<Self> {
        let coeffs = (1..=lattice.n_sites())
            .map(|l| {
                let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                direction.iter().map(|c| sign * c).collect()
            })
            .collect();
        Self::new(lattice, coeffs)
    }

    /// Unit vector along basis element `axis` (0, 1, 2 = x, y, z for qubits).
    pub fn axis(lattice: &LatticeConfig, axis: usize) -> Vec<f64> {
        let mut v = vec![0.0; lattice.basis_len()];
        v[axis] = 1.0;
        v
    }

    /// `M_z = sum_l sigma_z(l)`; for `d > 2` the last diagonal basis element.
    pub fn magnetization_z(lattice: LatticeConfig) -> Self {
        let axis = lattice.basis_len() - 1;
        Self::uniform(lattice, &Self::axis(&lattice, axis)).expect("unit axis is feasible")
    }

    pub fn magnetization_x(lattice: LatticeConfig) -> Self {
        Self::uniform(lattice, &Self::axis(&lattice, 0)).expect("unit axis is feasible")
    }

    /// `M_z^st = sum_l (-1)^l sigma_z(l)`.
    pub fn staggered_z(lattice: LatticeConfig) -> Self {
        let axis = lattice.basis_len() - 1;
        Self::staggered(lattice, &Self::axis(&lattice, axis)).expect("unit axis is feasible")
    }

    /// Independent random site operators, uniform in direction, norm in `[0, 1]`.
    pub fn random<R: Rng + ?Sized>(lattice: LatticeConfig, rng: &mut R) -> Self {
        Self::random_with_norm(lattice, rng, |r| r.random::<f64>().cbrt())
    }

    /// Random site directions with every site operator at unit norm.
    pub fn random_unit<R: Rng + ?Sized>(lattice: LatticeConfig, rng: &mut R) -> Self {
        Self::random_with_norm(lattice, rng, |_| 1.0)
    }

    fn random_with_norm<R: Rng + ?Sized>(
        lattice: LatticeConfig,
        rng: &mut R,
        mut radius: impl FnMut(&mut R) -> f64,
    ) -> Self {
        let m = lattice.basis_len();
        let mut op = Self::zero(lattice);
        for site in 1..=lattice.n_sites() {
            let dir: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let r = radius(rng);
            op.site_coeffs_mut(site).copy_from_slice(&dir);
            let norm = op.site_norm(site);
            let scale = if norm > 0.0 { r / norm } else { 0.0 };
            op.site_coeffs_mut(site).iter_mut().for_each(|c| *c *= scale);
        }
        op
    }

    pub fn lattice(&self) -> &LatticeConfig {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn site_coeffs(&self, site: usize) -> &[f64] {
        let m = self.lattice.basis_len();
        &self.coeffs[(site - 1) * m..site * m]
    }

    pub(crate) fn site_coeffs_mut(&mut self, site: usize) -> &mut [f64] {
        let m = self.lattice.basis_len();
        &mut self.coeffs[(site - 1) * m..site * m]
    }

    /// `a(l)` as a `d x d` matrix.
    pub fn site_operator(&self, site: usize) -> CMatrix {
        let d = self.lattice.local_dim();
        let mut op = CMatrix::zeros(d, d);
        for (c, b) in self.site_coeffs(site).iter().zip(local_basis(d)) {
            op += b.scale(*c);
        }
        op
    }

    /// `||a(l)||_inf`; for qubits this is the Euclidean norm of the Pauli triple.
    pub fn site_norm(&self, site: usize) -> f64 {
        site_operator_norm(&self.lattice, self.site_coeffs(site))
    }

    /// Copy with every site outside `sites` zeroed (`A_S`).
    pub fn restricted(&self, sites: &[usize]) -> Self {
        let mut out = self.clone();
        for site in 1..=self.lattice.n_sites() {
            if !sites.contains(&site) {
                out.site_coeffs_mut(site).iter_mut().for_each(|c| *c = 0.0);
            }
        }
        out
    }

    /// Coefficient-wise sum; fails if a site exceeds the norm constraint.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        if self.lattice != other.lattice {
            return Err(Error::InvalidArgument("operators on different lattices".into()));
        }
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Self::from_flat(self.lattice, coeffs)
    }

    /// Dense `d^N x d^N` matrix `sum_l a(l)`.
    pub fn realize(&self) -> CMatrix {
        let dim = self.lattice.dim();
        let mut full = CMatrix::zeros(dim, dim);
        for site in 1..=self.lattice.n_sites() {
            if self.site_coeffs(site).iter().all(|c| *c == 0.0) {
                continue;
            }
            full += embed_local(&self.site_operator(site), site, &self.lattice)
                .expect("site in range");
        }
        full
    }

    /// Precomputed site matrices for repeated application.
    pub fn site_operators(&self) -> SiteOperators {
        SiteOperators::new(self)
    }

    /// `A |v>`.
    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        self.site_operators().apply(v.as_slice())
    }
}

/// Operator norm of the site operator with basis coefficients `c`.
pub fn site_operator_norm(lattice: &LatticeConfig, c: &[f64]) -> f64 {
    if lattice.local_dim() == 2 {
        return c.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    let d = lattice.local_dim();
    let mut op = CMatrix::zeros(d, d);
    for (x, b) in c.iter().zip(local_basis(d)) {
        op += b.scale(*x);
    }
    linalg::eigvalsh(&op).into_iter().fold(0.0, |acc, e| acc.max(e.abs()))
}

/// The `d x d` site matrices of an additive operator, with all-zero sites skipped.
#[derive(Debug, Clone)]
pub struct SiteOperators {
    lattice: LatticeConfig,
    ops: Vec<(usize, CMatrix)>,
}

impl SiteOperators {
    pub fn new(a: &AdditiveOperator) -> Self {
        let ops = (1..=a.lattice.n_sites())
            .filter(|&s| a.site_coeffs(s).iter().any(|c| *c != 0.0))
            .map(|s| (s, a.site_operator(s)))
            .collect();
        Self {
            lattice: a.lattice,
            ops,
        }
    }

    /// `A v` for a raw amplitude slice.
    pub fn apply(&self, v: &[C64]) -> DVector<C64> {
        let mut out = DVector::zeros(v.len());
        for (site, op) in &self.ops {
            add_site_product(&self.lattice, *site, op, v, out.as_mut_slice());
        }
        out
    }

    /// `A M`.
    pub fn apply_left(&self, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(m.nrows(), m.ncols());
        for j in 0..m.ncols() {
            let col = m.column(j);
            let src = col.as_slice();
            let mut dst = out.column_mut(j);
            for (site, op) in &self.ops {
                add_site_product(&self.lattice, *site, op, src, dst.as_mut_slice());
            }
        }
        out
    }

    /// `M A` (uses Hermiticity of `A`).
    pub fn apply_right(&self, m: &CMatrix) -> CMatrix {
        self.apply_left(&m.adjoint()).adjoint()
    }

    /// `[A, M]`.
    pub fn commutator(&self, m: &CMatrix) -> CMatrix {
        self.apply_left(m) - self.apply_right(m)
    }
}

/// `out += op(site) v` for a single site operator.
pub(crate) fn add_site_product(
    lattice: &LatticeConfig,
    site: usize,
    op: &CMatrix,
    v: &[C64],
    out: &mut [C64],
) {
    let d = lattice.local_dim();
    let stride = lattice.stride(site);
    let block = stride * d;
    if d == 2 {
        let (a00, a01, a10, a11) = (op[(0, 0)], op[(0, 1)], op[(1, 0)], op[(1, 1)]);
        for base in (0..v.len()).step_by(block) {
            for off in base..base + stride {
                let x0 = v[off];
                let x1 = v[off + stride];
                out[off] += a00 * x0 + a01 * x1;
                out[off + stride] += a10 * x0 + a11 * x1;
            }
        }
        return;
    }
    let mut buf = vec![ZERO; d];
    for base in (0..v.len()).step_by(block) {
        for off in base..base + stride {
            for k in 0..d {
                buf[k] = v[off + k * stride];
            }
            for r in 0..d {
                let mut acc = ZERO;
                for k in 0..d {
                    acc += op[(r, k)] * buf[k];
                }
                out[off + r * stride] += acc;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{pauli_x, pauli_y, pauli_z, ONE};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn basis_vec(index: usize, dim: usize) -> DVector<C64> {
        let mut v = DVector::zeros(dim);
        v[index] = ONE;
        v
    }

    #[test]
    fn magnetization_eigenvalue() {
        let lat = LatticeConfig::qubits(3).unwrap();
        let mz = AdditiveOperator::magnetization_z(lat).realize();
        let v = basis_vec(0b010, 8);
        assert!((&mz * &v - v.scale(1.0)).norm() < 1e-15);
    }

    #[test]
    fn staggered_magnetization_against_direct_construction() {
        let lat = LatticeConfig::qubits(4).unwrap();
        let stz = AdditiveOperator::staggered_z(lat).realize();
        // Oracle: direct diagonal construction, sum_l (-1)^l s_l with s = +1 for |0>.
        let mut direct = CMatrix::zeros(16, 16);
        for idx in 0..16usize {
            let mut e = 0.0;
            for l in 1..=4usize {
                let bit = (idx >> (4 - l)) & 1;
                let s = if bit == 0 { 1.0 } else { -1.0 };
                e += if l % 2 == 0 { s } else { -s };
            }
            direct[(idx, idx)] = C64::new(e, 0.0);
        }
        assert!((&stz - &direct).norm() < 1e-14);
        let v = basis_vec(0b0101, 16);
        assert!((&stz * &v + v.scale(4.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_operator_realizes_to_zero() {
        let lat = LatticeConfig::qubits(3).unwrap();
        assert_eq!(AdditiveOperator::zero(lat).realize(), CMatrix::zeros(8, 8));
    }

    #[test]
    fn site_norm_constraint() {
        let lat = LatticeConfig::qubits(2).unwrap();
        assert!(AdditiveOperator::new(lat, vec![vec![0.6, 0.8, 0.0], vec![0.0; 3]]).is_ok());
        assert!(matches!(
            AdditiveOperator::new(lat, vec![vec![0.9, 0.9, 0.0], vec![0.0; 3]]),
            Err(Error::SiteNormExceeded { site: 1, .. })
        ));
    }

    #[test]
    fn pauli_coefficient_norm_equals_operator_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let c: Vec<f64> = (0..3).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let op = pauli_x().scale(c[0]) + pauli_y().scale(c[1]) + pauli_z().scale(c[2]);
            let opnorm = linalg::eigvalsh(&op).iter().fold(0.0f64, |a, e| a.max(e.abs()));
            let euclid = c.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((opnorm - euclid).abs() < 1e-12);
        }
    }

    #[test]
    fn local_application_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [2usize, 3] {
            let lat = LatticeConfig::new(3, d).unwrap();
            let a = AdditiveOperator::random(lat, &mut rng);
            let dense = a.realize();
            let m = CMatrix::from_fn(lat.dim(), 4, |_, _| crate::state::gaussian_c64(&mut rng));
            let ops = a.site_operators();
            assert!((ops.apply_left(&m) - &dense * &m).norm() < 1e-11);
            let sq = CMatrix::from_fn(lat.dim(), lat.dim(), |_, _| crate::state::gaussian_c64(&mut rng));
            assert!((ops.commutator(&sq) - (&dense * &sq - &sq * &dense)).norm() < 1e-10);
        }
    }

    #[test]
    fn random_operators_respect_site_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let lat = LatticeConfig::new(3, 3).unwrap();
        let a = AdditiveOperator::random_unit(lat, &mut rng);
        for s in 1..=3 {
            assert!((a.site_norm(s) - 1.0).abs() < 1e-10);
        }
    }
}
