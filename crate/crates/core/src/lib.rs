//! A minimal sensorimotor agent that discovers space.
//!
//! The agent sees the world only through two photoreceptors and a single
//! proprioceptive value `p` that is a hidden, nonlinear function of where the
//! receptors physically are. When the environment is rigidly displaced, the
//! agent records which proprioceptive values before and after the displacement
//! produce identical sensory input. Each such record is a *sensible rigid
//! displacement* `φ`. The catalogue of these functions induces a metric on
//! proprioception, and 1D metric MDS over that metric yields a rescaled
//! proprioception `P` that is affinely related to physical position.
//!
//! Pipeline, one module per stage:
//!
//! * [`world`]: light sources, the luminance field, rigid shifts.
//! * [`agent`]: the hidden proprioception map and the scanning procedure.
//! * [`phi`]: change detection, coincidence matching, the `φ` catalogue.
//! * [`metric`]: the distance matrix induced by `φ` norms and axiom checks.
//! * [`embed`]: STRESS1, weighted SMACOF in one dimension, normalization.
//! * [`runner`]: the seeded experiment loop, persistence and the isometry report.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod agent;
pub mod embed;
mod error;
pub mod metric;
pub mod persist;
pub mod phi;
pub mod runner;
pub mod stats;
pub mod world;

pub use error::{Error, Result};
