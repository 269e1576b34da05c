//! Macroscopicity indices and their finite-size scaling.

pub mod fit;
pub mod p;
pub mod q;

pub use fit::{fit_exponent, fit_floored, ExponentFit, FlooredFits};
pub use p::{build_vcm, commutator_spectrum_check, max_variance, variance, CommutatorSpectrum, IndexPReport, VCMatrix};
pub use q::{
    double_commutator_trace_norm, extract_witness, maximize_q, DoubleCommutator, IndexQReport, QSearch, QWitness,
};
