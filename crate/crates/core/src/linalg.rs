//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::lattice::{CMatrix, C64, ZERO};

/// `(M + M^dagger) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Largest entrywise modulus of `M - M^dagger`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let mut vals: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending with
/// eigenvectors as matching columns.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMatrix::from_fn(m.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Real symmetric eigen-decomposition, eigenvalues ascending.
pub fn eigh_real(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(m.nrows(), order.len(), |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Singular values of an arbitrary complex matrix, descending.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Thin QR factorization `m = q r` for `nrows >= ncols`.
pub fn thin_qr(m: &CMatrix) -> (CMatrix, CMatrix) {
    let qr = m.clone().qr();
    (qr.q(), qr.r())
}

/// Pivoted Cholesky factor `L` with `m ~= L L^dagger` for a positive
/// semidefinite `m`. Stops once the largest remaining diagonal entry drops to
/// `tol`; returns `None` when more than `max_rank` columns would be needed.
pub fn pivoted_cholesky(m: &CMatrix, tol: f64, max_rank: usize) -> Option<CMatrix> {
    let n = m.nrows();
    let mut diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    let mut cols: Vec<DVector<C64>> = Vec::new();
    loop {
        let (piv, &dmax) = diag
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty matrix");
        if dmax <= tol {
            break;
        }
        if cols.len() == max_rank {
            return None;
        }
        let mut col: DVector<C64> = m.column(piv).into_owned();
        for c in &cols {
            let f = c[piv].conj();
            col.axpy(-f, c, ONE_C);
        }
        let scale = 1.0 / dmax.sqrt();
        col *= C64::new(scale, 0.0);
        for i in 0..n {
            diag[i] -= col[i].norm_sqr();
        }
        diag[piv] = 0.0;
        cols.push(col);
    }
    if cols.is_empty() {
        return Some(CMatrix::zeros(n, 0));
    }
    Some(CMatrix::from_columns(&cols))
}

/// Cholesky test: true when every pivot of the Hermitian part of `m` is
/// positive.
pub fn is_positive_semidefinite(m: &CMatrix) -> bool {
    let n = m.nrows();
    let mut a = hermitian_part(m);
    for k in 0..n {
        let pivot = a[(k, k)].re;
        if !(pivot > 0.0) {
            return false;
        }
        let s = pivot.sqrt();
        for i in k..n {
            a[(i, k)] /= s;
        }
        for j in k + 1..n {
            let f = a[(j, k)].conj();
            if f == ZERO {
                continue;
            }
            for i in j..n {
                let v = a[(i, k)] * f;
                a[(i, j)] -= v;
            }
        }
    }
    true
}

const ONE_C: C64 = C64::new(1.0, 0.0);

/// `Tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Orthonormal basis of the orthogonal complement of the (orthonormal) columns
/// of `basis` in `C^n`.
pub fn orthogonal_complement(basis: &[DVector<C64>], n: usize) -> Vec<DVector<C64>> {
    let mut all: Vec<DVector<C64>> = basis.to_vec();
    let mut extra = Vec::new();
    for k in 0..n {
        if all.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[k] = ONE_C;
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for u in &all {
                let proj = u.dotc(&v);
                v.axpy(-proj, u, ONE_C);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v /= C64::new(norm, 0.0);
            all.push(v.clone());
            extra.push(v);
        }
    }
    extra
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pivoted_cholesky_recovers_low_rank() {
        let a = CMatrix::from_fn(6, 2, |i, j| C64::new((i + j) as f64 * 0.3, (i as f64) - 2.0 * j as f64));
        let m = &a * a.adjoint();
        let l = pivoted_cholesky(&m, 1e-12, 6).unwrap();
        assert_eq!(l.ncols(), 2);
        assert!((&l * l.adjoint() - &m).norm() < 1e-10);
        assert!(pivoted_cholesky(&m, 1e-12, 1).is_none());
    }

    #[test]
    fn complement_completes_basis() {
        let mut v = DVector::from_element(4, C64::new(0.5, 0.0));
        v[3] = C64::new(0.0, 0.5);
        let comp = orthogonal_complement(&[v.clone()], 4);
        assert_eq!(comp.len(), 3);
        let mut all = vec![v];
        all.extend(comp);
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((a.dotc(b) - C64::new(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn eigh_sorts_ascending() {
        let m = CMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(3.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(2.0, 0.0),
        ]));
        let (vals, vecs) = eigh(&m);
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
        let recon = &vecs * CMatrix::from_diagonal(&DVector::from_iterator(3, vals.iter().map(|&x| C64::new(x, 0.0)))) * vecs.adjoint();
        assert!((recon - m).norm() < 1e-12);
    }
}
