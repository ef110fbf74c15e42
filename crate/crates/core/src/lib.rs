//! Inductive semi-supervised classification with entropic optimal transport.
//!
//! Labels spread from a small labeled pool to an unlabeled pool through
//! transport-plan affinities ([`transduction`]), after which unseen points are
//! labeled by a weighted vote over the whole training set, with weights read
//! off a second transport plan ([`induction`]). [`evaluation`] holds the ARI
//! and NMI scores and [`harness`] the randomized benchmark protocol.

pub mod error;
pub mod evaluation;
pub mod harness;
pub mod induction;
pub mod ot;
pub mod transduction;

pub use error::{Error, Result};
