//! Sparse multivariate Bernoulli autoregressive processes.
//!
//! Simulation of the process, the ℓ1-regularized maximum likelihood estimator,
//! Markov-chain mixing diagnostics and an experiment harness.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod harness;
pub mod likelihood;
pub mod link;
pub mod markov;
pub mod process;
pub mod seed;
pub mod tensor;

pub use error::{MbpError, Result};
pub use link::{LinkKind, LinkSpec, DEFAULT_EPS};
pub use process::{design_matrix, random_sparse_theta, simulate, DesignMatrix, SamplePath};
pub use tensor::{NormKind, ParamTensor};
