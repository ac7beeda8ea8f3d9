//! Capacity of the two-switch channel `Y = (X S_T + N) S_R` with correlated
//! transmitter and receiver switches, plus its inner and outer bounds.
//!
//! Everything is in bits per real channel use. Closed forms therefore carry a
//! factor of one half, e.g. `1/2 log2(1 + P)` for an always-on link.
//!
//! Modules, bottom up:
//! - [`switch_model`]: joint law of the two switches from marginals and correlation.
//! - [`entropy`]: differential entropy of Gaussian mixtures by quadrature or Monte Carlo.
//! - [`capacity`]: causal, non-causal and outer-bound capacity expressions.
//! - [`simulator`]: direct channel sampling for independent cross-checks.
//! - [`sweep`] and [`validate`]: batch evaluation and the self-check suite.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod entropy;
pub mod error;
pub mod mc;
pub mod optimize;
pub mod quadrature;
pub mod seed;
pub mod simulator;
pub mod sweep;
pub mod switch_model;
pub mod validate;

pub use capacity::{
    evaluate, CapacityEstimate, ChannelConfig, DofConvention, GeneralModelStates, McSettings, NonCausalInput, Quantity,
};
pub use entropy::{EntropyEstimate, GaussianMixture, Method};
pub use error::{Error, Result};
pub use simulator::{ChannelModel, Transcript};
pub use sweep::{SweepRow, SweepSpec};
pub use switch_model::{joint_from_marginals, Switch, SwitchJoint};
pub use validate::{ValidateOptions, ValidationReport};
