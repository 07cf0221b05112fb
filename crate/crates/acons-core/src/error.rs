//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Everything that can go wrong when building or running a scenario.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Fewer than two agents.
    AgentCountTooSmall(usize),
    /// Adjacency entry `(i, j)` differs from `(j, i)`.
    AsymmetricAdjacency(usize, usize),
    /// Negative edge weight at `(i, j)`.
    NegativeWeight(usize, usize),
    /// Nonzero self-loop weight at agent `i`.
    NonzeroDiagonal(usize),
    /// Non-finite value encountered in an input (context in the message).
    NonFiniteInput(&'static str),
    /// The communication graph is not connected.
    Disconnected,
    /// Matrix is not square.
    NotSquare { rows: usize, cols: usize },
    /// Two inputs disagree on the agent count or vector length.
    DimensionMismatch { expected: usize, got: usize },

    /// Schedule has no epochs.
    EmptySchedule,
    /// First epoch must start at t = 0.
    FirstEpochNotZero(f64),
    /// Epoch start times must be strictly increasing and below the horizon.
    EpochOrder { index: usize, start: f64 },
    /// Epoch `index` has no strictly positive weight (empty active set).
    NoActiveAgent { epoch: usize },
    /// Query time outside `[0, horizon_end]`.
    TimeOutOfHorizon { t: f64, horizon: f64 },
    /// Switch index outside `1..=switch_count`.
    SwitchIndexOutOfRange { k: usize, switches: usize },
    /// Dwell-time parameters must satisfy `tau_d > 0`.
    InvalidDwell(f64),

    /// Invalid signal parameters (context in the message).
    InvalidSignal(&'static str),

    /// A step size or sampling period must be positive and finite.
    InvalidStep(f64),
    /// Simulation state became non-finite at time `t`.
    NonFiniteState { t: f64 },

    /// Eigenvalue iteration failed to converge.
    EigenNoConvergence { size: usize },
    /// An eigenvalue failed its residual check.
    EigenResidual { residual: f64, tolerance: f64 },
    /// A subsystem expected to be Hurwitz is not (numerical pathology).
    SubsystemNotHurwitz { index: usize, max_real: f64 },
    /// Discrete step exceeds the maximum stable Euler step.
    StepExceedsStabilityLimit { delta_c: f64, d_bar: f64 },
    /// No decaying envelope fits the sampled transition-matrix norms.
    NoDecayingEnvelope { fitted_rate: f64 },
    /// Matrix order too large for the dense exponential oracle.
    ExpmOrderTooLarge { size: usize, max: usize },

    /// Convex hull of an empty point set.
    NoPoints,
    /// Nested centroid over an empty subset.
    EmptySubset(usize),
    /// A subset index refers past the end of the point list.
    SubsetIndexOutOfRange { subset: usize, index: usize },
    /// No follower observes any leader at sample `l`.
    EmptyObservationUnion { sample: usize },
    /// Leader waypoint times must be non-decreasing.
    WaypointOrder { leader: usize },
    /// Leader displacement between samples exceeds the declared bound.
    DisplacementBoundExceeded { leader: usize, sample: usize, displacement: f64, bound: f64 },
    /// Observation epoch sample indices must start at 0 and increase.
    ObservationEpochOrder { index: usize },

    /// Free-form validation failure raised while assembling a scenario.
    Scenario(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::AgentCountTooSmall(n) => write!(f, "need at least 2 agents, got {n}"),
            Error::AsymmetricAdjacency(i, j) => {
                write!(f, "adjacency not symmetric at ({i}, {j})")
            }
            Error::NegativeWeight(i, j) => write!(f, "negative edge weight at ({i}, {j})"),
            Error::NonzeroDiagonal(i) => write!(f, "nonzero self-loop weight at agent {i}"),
            Error::NonFiniteInput(what) => write!(f, "non-finite value in {what}"),
            Error::Disconnected => write!(f, "communication graph is not connected"),
            Error::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}, not square"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::EmptySchedule => write!(f, "schedule has no epochs"),
            Error::FirstEpochNotZero(t) => write!(f, "first epoch starts at {t}, expected 0"),
            Error::EpochOrder { index, start } => {
                write!(f, "epoch {index} start {start} violates strict ordering")
            }
            Error::NoActiveAgent { epoch } => {
                write!(f, "epoch {epoch} has no strictly positive weight")
            }
            Error::TimeOutOfHorizon { t, horizon } => {
                write!(f, "time {t} outside horizon [0, {horizon}]")
            }
            Error::SwitchIndexOutOfRange { k, switches } => {
                write!(f, "switch index {k} out of range (schedule has {switches} switches)")
            }
            Error::InvalidDwell(tau) => write!(f, "average dwell time must be positive, got {tau}"),
            Error::InvalidSignal(what) => write!(f, "invalid signal: {what}"),
            Error::InvalidStep(h) => write!(f, "step size must be positive and finite, got {h}"),
            Error::NonFiniteState { t } => write!(f, "state became non-finite at t = {t}"),
            Error::EigenNoConvergence { size } => {
                write!(f, "eigenvalue iteration did not converge for {size}x{size} matrix")
            }
            Error::EigenResidual { residual, tolerance } => {
                write!(f, "eigenvalue residual {residual:.3e} exceeds tolerance {tolerance:.3e}")
            }
            Error::SubsystemNotHurwitz { index, max_real } => {
                write!(f, "subsystem {index} not Hurwitz (max real part {max_real:.3e})")
            }
            Error::StepExceedsStabilityLimit { delta_c, d_bar } => {
                write!(f, "communication step {delta_c} >= stability limit {d_bar}")
            }
            Error::NoDecayingEnvelope { fitted_rate } => {
                write!(
                    f,
                    "no decaying envelope fits (fitted rate {fitted_rate:.3e}); \
                     switching is too fast for the subsystem set"
                )
            }
            Error::ExpmOrderTooLarge { size, max } => {
                write!(f, "matrix exponential oracle limited to order {max}, got {size}")
            }
            Error::NoPoints => write!(f, "convex hull of an empty point set"),
            Error::EmptySubset(j) => write!(f, "subset {j} is empty"),
            Error::SubsetIndexOutOfRange { subset, index } => {
                write!(f, "subset {subset} refers to point {index} past the end")
            }
            Error::EmptyObservationUnion { sample } => {
                write!(f, "no follower observes any leader at sample {sample}")
            }
            Error::WaypointOrder { leader } => {
                write!(f, "leader {leader} waypoint times must be non-decreasing")
            }
            Error::DisplacementBoundExceeded { leader, sample, displacement, bound } => write!(
                f,
                "leader {leader} moved {displacement:.6} between samples {sample} and {}, \
                 exceeding the declared bound {bound:.6}",
                sample + 1
            ),
            Error::ObservationEpochOrder { index } => {
                write!(f, "observation epoch {index} violates sample-index ordering")
            }
            Error::Scenario(msg) => write!(f, "{msg}"),
        }
    }
}

impl core::error::Error for Error {}
