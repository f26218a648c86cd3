//! Finite-state Bayesian persuasion: concavification by linear programming,
//! optimal prices, and certificates for both.
//!
//! Everything is discrete. Beliefs live on a finite simplex, signals are
//! finitely supported, and the semi-infinite dual is handled on explicit
//! candidate or probe sets.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod belief;
pub mod cert;
pub mod concavify;
pub mod constrained;
pub mod error;
mod linalg;
pub mod lp;
pub mod metrics;
pub mod moment;
pub mod objective;
pub mod tol;
pub mod two_dim;

pub use belief::{Atom, Belief, PriceFunction, Prior, Signal, StateSpace};
pub use cert::{Certificate, Verdict};
pub use concavify::{concavify_grid, simplex_mesh, CandidateSet, ConcavifyResult};
pub use error::{Error, Result};
pub use objective::{AffinePiece, MomentMap, MomentObjective, ObjectiveSpec};
pub use tol::Tolerances;
