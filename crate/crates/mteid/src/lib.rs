//! Model files, command line and numerical oracles.

// `!(tol > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod model;
pub mod oracle;
pub mod output;
pub mod policy;

pub use error::{Error, Result};
pub use model::{load_model, model_to_string, parse_model, save_model};
pub use oracle::{monte_carlo_eu, quad_integrate, Estimate, QuadResult, Sampling};
pub use policy::{load_policy, save_policy, PolicyFile};
