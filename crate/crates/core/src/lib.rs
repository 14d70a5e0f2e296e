//! Evolutionary causal discovery.
//!
//! Genetic-programming symbolic regression fits an expression tree relating
//! predictor columns to a response column ([`gp`]). The fitted tree is then
//! probed by relative impact stratification ([`ris`]): predictor baselines
//! are perturbed one at a time and the change is traced through every
//! internal node up to the root. The same machinery drives quartile impact
//! tables, counterfactual scenarios and impact-based simplification.
//! [`synth`] provides a synthetic benchmark with known structure.

pub mod dataset;
pub mod error;
pub mod expr;
pub mod gp;
pub mod ris;
pub mod rng;
pub mod synth;

pub use dataset::{Dataset, RoleConfig};
pub use error::{Error, Result};
pub use expr::{Bindings, ExpressionTree, NodeId, Operator};
pub use gp::{evolve, FitResult, GpConfig};
