//! Gate design through fixed random unitary reservoirs.
//!
//! A fixed mode-mixing medium, modeled as a random unitary `U`, becomes a
//! multi-level logic gate once a trainable input operator `S` is placed in
//! front of it: the realized transmission matrix is `T = U * S`. This crate
//! designs `S` two ways:
//!
//! - [`rnn`]: when `U` is known, by integrating a recurrent gradient flow
//!   for the matrix equation (projected or fully embedded target) to its
//!   stationary state;
//! - [`trainer`]: when `U` is only accessible through input/output pairs,
//!   by gradient descent on labeled random states, with epoch-based
//!   validation-threshold stopping.
//!
//! [`slm`] adds physical-device constraint models (phase-only, signed
//! amplitude, quantized levels) applied as retractions during training, and
//! [`scan`] reproduces the scaling studies over the embedding dimension.

pub mod error;
pub mod gates;
pub mod io;
pub mod linalg;
pub mod ode;
pub mod random;
pub mod rnn;
pub mod scan;
pub mod slm;
pub mod trainer;

pub use error::{Error, Result};
pub use gates::{
    achieved_gate, embed_target, gate_by_name, gate_x, gate_x_squared, gate_z, projector,
    rig_input, EmbedMode, GateSpec, TargetEmbedding,
};
pub use linalg::{frobenius_distance, unitarity_defect, Complex64, ComplexMatrix, ComplexVector};
pub use random::{haar_unitary, RandomSource};
pub use rnn::{
    error_functional, residual_projected, residual_unitary, rnn_rhs, solve, OdeConfig, RnnProblem,
    SolveResult, WInit,
};
pub use slm::{
    constrained_train, encode_input, retract_amplitude, retract_phase, ConstraintKind,
    ModulatorConstraint, SlmEncoding,
};
pub use trainer::{
    cost, cost_gradient, generate_dataset, train, verify_gate, CostSpan, Dataset, Optimizer,
    TrainConfig, TrainRun, VerifyReport,
};
