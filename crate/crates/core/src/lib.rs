//! Simulation of trapped-ion W-state preparation, full Pauli tomography with
//! maximum-likelihood reconstruction, and multipartite entanglement analysis.
//!
//! Index convention: subsystem 0 is the least significant digit of a basis
//! index, and qubit `k` (counting from 1) is subsystem `k - 1`. `|D> = 0`,
//! `|S> = 1`.

// Negated comparisons reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod entangle;
pub mod error;
pub mod hilbert;
pub mod io;
pub mod ionsim;
pub mod optim;
pub mod seed;
pub mod tomo;

pub use error::{Error, Result};
pub use hilbert::{
    fidelity_pure, partial_trace, project_and_condition, tensor_product, DensityMatrix,
    HermitianOperator, PureState, Tensor, C64,
};
