//! Time-indexed simulation records shared by the continuous- and
//! discrete-time simulators.

use alloc::string::String;
use alloc::vec::Vec;

use crate::math;

/// Where a sample sits relative to the switching signal.
///
/// Switch times carry two samples with identical state: one evaluated
/// against the outgoing epoch (`PreSwitch`, the left limit of the tracking
/// target) and one against the incoming epoch (`PostSwitch`). Sample times
/// are strictly increasing except across exactly such pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleKind {
    Interior,
    PreSwitch,
    PostSwitch,
}

/// One recorded instant: states, the oracle target, per-agent errors.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub kind: SampleKind,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub avg: f64,
    pub err: Vec<f64>,
}

impl Sample {
    pub fn max_err(&self) -> f64 {
        self.err.iter().fold(0.0, |m, e| math::max(m, *e))
    }
}

/// A simulated run over its sample grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
    warnings: Vec<String>,
}

impl Trajectory {
    pub fn new() -> Self {
        Trajectory::default()
    }

    pub fn push(&mut self, sample: Sample) {
        self.samples.push(sample);
    }

    pub fn push_warning(&mut self, warning: String) {
        self.warnings.push(warning);
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    pub fn n_agents(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x.len())
    }

    /// `(t, max_i err_i)` per sample.
    pub fn max_error_series(&self) -> Vec<(f64, f64)> {
        self.samples.iter().map(|s| (s.t, s.max_err())).collect()
    }

    /// Largest per-agent error over the whole run.
    pub fn max_error(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| math::max(m, s.max_err()))
    }
}

/// Per-agent error series extracted from a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackingError {
    /// `per_agent[i][k]`: error of agent `i` at sample `k`.
    pub per_agent: Vec<Vec<f64>>,
    /// Max-over-agents series aligned with the samples.
    pub max: Vec<f64>,
}
