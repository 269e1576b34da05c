//! Macroscopic quantum superposition diagnostics on finite spin lattices.
//!
//! The crate computes the macroscopicity indices `p` (pure states) and `q`
//! (mixed states), builds and applies Kraus channels on subsystems, and checks
//! the trade-off inequalities that limit how much a local operation can raise
//! those indices.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certifier;
pub mod channels;
pub mod error;
pub mod indices;
pub mod lattice;
pub mod linalg;
pub mod norms;
pub mod operator;
pub mod rng;
pub mod schmidt;
pub mod state;

pub use error::{Error, Result};
pub use lattice::{Caps, LatticeConfig, Mode, SubsystemSupport, C64, CMatrix};
pub use operator::AdditiveOperator;
pub use state::{DensityState, PureState};
