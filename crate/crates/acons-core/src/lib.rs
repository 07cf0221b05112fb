//! Dynamic active weighted average consensus over switched agent-activity
//! schedules.
//!
//! A network of agents interacts over a connected undirected graph. At any
//! time only a subset of agents is *active*: an active agent `i` carries a
//! positive weight `eta_i(t)` and has access to a local reference signal
//! `r_i(t)`; passive agents carry weight zero and see nothing. Every agent,
//! active or passive, must track the weighted average of the active
//! references,
//!
//! ```text
//! avg_a(t) = sum_i eta_i(t) r_i(t) / sum_i eta_i(t).
//! ```
//!
//! The crate implements the continuous-time consensus flow and its Euler
//! discretization with dual-rate sampling, models both as switched linear
//! systems, and certifies their tracking-error bounds empirically:
//!
//! - [`graph`]: weighted graph, Laplacian, and the orthonormal decomposition
//!   `T = [r N]` used by all compact-form analysis.
//! - [`schedule`]: piecewise-constant weight schedules, switching statistics,
//!   and average-dwell-time validation.
//! - [`signals`]: reference signals, the centralized oracle for `avg_a`, the
//!   disagreement input `w`, their smooth derivatives, and their jumps at
//!   switch times.
//! - [`ct_sim`] / [`dt_sim`]: fixed-step simulation of the continuous flow
//!   (switch-aligned RK4) and the discrete algorithm, plus the transformed
//!   compact-form stepper used as an equivalence oracle.
//! - [`analysis`]: subsystem matrices, Hurwitz/Schur certification, the
//!   maximum stable Euler step, empirical exponential envelopes of the
//!   transition matrix, and evaluation of the tracking-error bounds.
//! - [`containment`]: containment control of followers tracking the convex
//!   hull of observed leaders, reduced to active average consensus through
//!   nested centroids.
//!
//! The crate is `no_std` (with `alloc`); all float math goes through
//! [`libm`]. File formats, configuration, and the command-line front end
//! live in the companion `acons-cli` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod containment;
pub mod ct_sim;
pub mod dt_sim;
mod error;
pub mod graph;
pub mod linalg;
pub(crate) mod math;
pub mod schedule;
pub mod signals;
pub mod trajectory;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
