//! Grasp refinement for multi-fingered hands on dense point-cloud surfaces.
//!
//! A grasp is improved by alternating two constrained optimisations: one that
//! slides the contacts over the object surface while the palm stays fixed, and
//! one that moves the palm relative to a fixed object while the contacts stay
//! put. See [`splitter::run_split`] for the outer loop.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod collision;
pub mod context;
pub mod cpo;
pub mod error;
pub mod hull;
pub mod kinematics;
pub mod linalg;
pub mod par;
pub mod ppo;
pub mod quality;
pub mod splitter;
pub mod surface;
pub mod trace;

pub use error::{Error, Result};
