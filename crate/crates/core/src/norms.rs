//! Schatten `k`-norms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::CMatrix;
use crate::linalg;

/// Order `k` of a Schatten norm, `1 <= k <= inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SchattenOrder {
    Trace,
    Frobenius,
    Operator,
    Finite(f64),
}

impl SchattenOrder {
    /// `f64::INFINITY` maps to the operator norm; `k < 1` is rejected.
    pub fn new(k: f64) -> Result<Self> {
        if k.is_nan() || k < 1.0 {
            return Err(Error::InvalidNormOrder(k));
        }
        Ok(if k == 1.0 {
            Self::Trace
        } else if k == 2.0 {
            Self::Frobenius
        } else if k.is_infinite() {
            Self::Operator
        } else {
            Self::Finite(k)
        })
    }

    pub fn value(&self) -> f64 {
        match self {
            Self::Trace => 1.0,
            Self::Frobenius => 2.0,
            Self::Operator => f64::INFINITY,
            Self::Finite(k) => *k,
        }
    }
}

/// `(sum_j |e_j|^k)^(1/k)` over a spectrum (eigenvalues or singular values).
pub fn spectrum_norm(values: &[f64], order: SchattenOrder) -> f64 {
    match order {
        SchattenOrder::Trace => values.iter().map(|e| e.abs()).sum(),
        SchattenOrder::Frobenius => values.iter().map(|e| e * e).sum::<f64>().sqrt(),
        SchattenOrder::Operator => values.iter().fold(0.0, |acc, e| acc.max(e.abs())),
        SchattenOrder::Finite(k) => {
            let scale = values.iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
            if scale == 0.0 {
                return 0.0;
            }
            scale * values.iter().map(|e| (e.abs() / scale).powf(k)).sum::<f64>().powf(1.0 / k)
        }
    }
}

/// Schatten `k`-norm of `x`. Hermitian input (to `1e-12` relative) goes through
/// eigenvalues, anything else through singular values.
pub fn schatten_norm(x: &CMatrix, k: f64) -> Result<f64> {
    let order = SchattenOrder::new(k)?;
    Ok(schatten(x, order))
}

pub fn schatten(x: &CMatrix, order: SchattenOrder) -> f64 {
    if x.nrows() == 0 || x.ncols() == 0 {
        return 0.0;
    }
    if order == SchattenOrder::Frobenius {
        return x.norm();
    }
    let scale = linalg::max_abs(x);
    if scale == 0.0 {
        return 0.0;
    }
    if x.nrows() == x.ncols() && linalg::hermiticity_defect(x) <= 1e-12 * scale {
        spectrum_norm(&linalg::eigvalsh(x), order)
    } else {
        spectrum_norm(&linalg::singular_values(x), order)
    }
}

pub fn trace_norm(x: &CMatrix) -> f64 {
    schatten(x, SchattenOrder::Trace)
}

pub fn operator_norm(x: &CMatrix) -> f64 {
    schatten(x, SchattenOrder::Operator)
}

/// Nonzero singular values of `P Q^dagger` for thin `P`, `Q` (same column
/// count), computed from the small core of the two QR factorizations.
pub fn factored_singular_values(p: &CMatrix, q: &CMatrix) -> Vec<f64> {
    if p.ncols() == 0 {
        return Vec::new();
    }
    let (_, rp) = linalg::thin_qr(p);
    let (_, rq) = linalg::thin_qr(q);
    linalg::singular_values(&(rp * rq.adjoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{pauli_z, LatticeConfig, C64};
    use crate::operator::AdditiveOperator;
    use nalgebra::DVector;

    #[test]
    fn pauli_z_trace_norm() {
        assert!((schatten_norm(&pauli_z(), 1.0).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn magnetization_operator_norm() {
        let lat = LatticeConfig::qubits(4).unwrap();
        let mz = AdditiveOperator::magnetization_z(lat).realize();
        assert!((schatten_norm(&mz, f64::INFINITY).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_has_zero_norm() {
        let z = CMatrix::zeros(5, 5);
        for k in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            assert_eq!(schatten_norm(&z, k).unwrap(), 0.0);
        }
    }

    #[test]
    fn order_below_one_rejected() {
        assert!(matches!(schatten_norm(&pauli_z(), 0.5), Err(Error::InvalidNormOrder(_))));
        assert!(schatten_norm(&pauli_z(), f64::NAN).is_err());
    }

    #[test]
    fn finite_order_interpolates() {
        // Spectrum {3, -4}: the 3-norm is (27 + 64)^(1/3).
        let m = CMatrix::from_diagonal(&DVector::from_vec(vec![C64::new(3.0, 0.0), C64::new(-4.0, 0.0)]));
        let expect = 91f64.powf(1.0 / 3.0);
        assert!((schatten_norm(&m, 3.0).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn factored_matches_dense() {
        let p = CMatrix::from_fn(8, 2, |i, j| C64::new(i as f64 - j as f64, 0.3 * j as f64));
        let q = CMatrix::from_fn(8, 2, |i, j| C64::new(1.0 / (1.0 + i as f64), j as f64));
        let dense = linalg::singular_values(&(&p * q.adjoint()));
        let fact = factored_singular_values(&p, &q);
        for (a, b) in fact.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
