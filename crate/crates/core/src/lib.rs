//! Mixture-of-truncated-exponentials potentials and influence diagrams.
//!
//! The algebra (combination, marginalization, normalization, decision
//! maximization) is closed form. [`fusion::solve`] runs variable deletion
//! over an [`diagram::InfluenceDiagram`] and returns the maximum expected
//! utility with one policy per decision.
#![no_std]
// `!(lo < hi)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod algebra;
pub mod crossing;
pub mod diagram;
pub mod error;
pub mod fitting;
pub mod fusion;
mod marginal;
pub mod maxmarg;
pub mod potential;
pub mod region;
pub mod variable;
pub mod wildcatter;

pub use crossing::{find_crossings, find_roots, CrossingSet};
pub use diagram::{validate_model, validate_order, Diagnostic, EliminationOrder, InfluenceDiagram};
pub use error::{MteError, Result};
pub use fusion::{fuse_step, solve, SolveResult, TraceEntry};
pub use marginal::exp_integral;
pub use maxmarg::{PolicyRule, Rule};
pub use potential::{Assignment, ExpTerm, MtePotential, NamedPiece, Piece, PotentialKind, Value};
pub use region::Interval;
pub use variable::{StateSpace, VarKind, Variable};
