//! Schmidt decomposition across a bipartition `S | complement`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::lattice::{SubsystemSupport, C64};
use crate::state::{bipartite_matrix, PureState};

/// Singular values at or below this are dropped from the Schmidt rank.
pub const SCHMIDT_RANK_TOL: f64 = 1e-12;

/// `|psi> = sum_i lambda_i |xi_i> (x) |phi_i>` with `lambda` descending.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub lambdas: Vec<f64>,
    /// Orthonormal vectors on `S`.
    pub xi_vectors: Vec<DVector<C64>>,
    /// Orthonormal vectors on the complement of `S`.
    pub phi_vectors: Vec<DVector<C64>>,
    pub support: SubsystemSupport,
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.lambdas.len()
    }

    /// Reassembled full amplitude vector.
    pub fn reconstruct(&self, psi: &PureState) -> DVector<C64> {
        let lattice = psi.lattice();
        let split = crate::lattice::SplitIndex::new(lattice, self.support.sites());
        let mut out = DVector::zeros(lattice.dim());
        for ((l, xi), phi) in self.lambdas.iter().zip(&self.xi_vectors).zip(&self.phi_vectors) {
            for (a, &ia) in split.inner.iter().enumerate() {
                for (b, &ob) in split.outer.iter().enumerate() {
                    out[ia + ob] += xi[a] * phi[b] * *l;
                }
            }
        }
        out
    }
}

/// Schmidt decomposition of `psi` across `support` via the SVD of the reshaped
/// amplitude matrix.
pub fn schmidt(psi: &PureState, support: &SubsystemSupport) -> Result<SchmidtDecomposition> {
    let lattice = psi.lattice();
    if !support.is_proper(lattice) {
        return Err(Error::InvalidSupport(
            "Schmidt decomposition needs a proper subset of sites".into(),
        ));
    }
    for &s in support.sites() {
        lattice.check_site(s)?;
    }
    let m = bipartite_matrix(psi, support.sites());
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut lambdas = Vec::new();
    let mut xi_vectors = Vec::new();
    let mut phi_vectors = Vec::new();
    for k in order {
        let s = svd.singular_values[k];
        if s <= SCHMIDT_RANK_TOL {
            continue;
        }
        lambdas.push(s);
        xi_vectors.push(u.column(k).into_owned());
        // M = U S V^dagger: the complement vector is row k of V^dagger.
        phi_vectors.push(v_t.row(k).transpose().into_owned());
    }
    Ok(SchmidtDecomposition {
        lambdas,
        xi_vectors,
        phi_vectors,
        support: support.clone(),
    })
}
