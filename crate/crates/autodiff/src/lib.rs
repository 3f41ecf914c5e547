//! Reverse-mode automatic differentiation over dense row-major tensors.

pub mod checkpoint;
mod error;
mod graph;
mod kernels;
pub mod nn;
mod optim;
mod params;
mod scalar;
mod tensor;

pub use error::{AutodiffError, Result};
pub use graph::{Gradients, Graph, Var, BCE_EPSILON, LAYER_NORM_EPSILON, SELU_ALPHA, SELU_LAMBDA};
pub use kernels::{is_deterministic, set_deterministic};
pub use optim::{Hyper, Optimizer, OptimizerKind, RADAM_RHO_THRESHOLD};
pub use params::{Bound, ParamId, ParamStore};
pub use scalar::Real;
pub use tensor::Tensor;
