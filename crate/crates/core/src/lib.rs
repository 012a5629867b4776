//! Brownian motions with interacting drifts on a conductance network.
//!
//! The deterministic layers ([`linalg`], [`network`], [`nu`], the Bessel
//! kernel) are generic over the scalar type; the samplers work in `f64`.

// `!(x > 0)` is how NaN gets rejected along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bessel;
pub mod linalg;
pub mod network;
pub mod nu;
pub mod rng;
pub mod scalar;
pub mod sde;
pub mod stats;
pub mod vrjp;

pub use linalg::{LinalgError, Matrix};
pub use network::{ConductanceNetwork, DeformedParams, NetworkError, PotentialVector, TimeVector};
pub use nu::{NuError, NuParams};
pub use scalar::Real;

pub type Network = ConductanceNetwork<f64>;
pub type Params = NuParams<f64>;
pub type Mat = Matrix<f64>;
pub type Beta = PotentialVector<f64>;
pub type Times = TimeVector<f64>;
