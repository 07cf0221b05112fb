//! Reference signals and the centralized tracking oracle.
//!
//! Each agent carries one reference signal `r_i(t)` with an evaluable
//! time derivative. Combined with a weight schedule this module produces
//! everything the error analysis consumes:
//!
//! - the active weighted average `avg_a(t) = Σ η_i r_i / Σ η_i`,
//! - the disagreement input `w_i(t) = η_i (r_i - avg_a)` with `1ᵀw = 0`,
//! - the smooth (between-switch) derivatives of both, and
//! - their jumps at switch times.
//!
//! Simulated states are continuous; the jump data never enters the
//! integrators and only feeds the switching term of the error bounds.

use alloc::vec::Vec;

use crate::math;
use crate::schedule::ModeSchedule;
use crate::{Error, Result};

/// A scalar reference signal with an evaluable derivative.
///
/// Zero-order-hold tracks are piecewise constant with derivative zero
/// between samples; polynomial coefficients are ordered low to high.
#[derive(Clone, Debug, PartialEq)]
pub enum ReferenceSignal {
    Constant { value: f64 },
    Sinusoid { offset: f64, amplitude: f64, omega: f64 },
    ZohTrack { samples: Vec<f64>, period: f64 },
    Polynomial { coeffs: Vec<f64> },
}

impl ReferenceSignal {
    fn validate(&self) -> Result<()> {
        match self {
            ReferenceSignal::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidSignal("constant value must be finite"));
                }
            }
            ReferenceSignal::Sinusoid { offset, amplitude, omega } => {
                if !(offset.is_finite() && amplitude.is_finite() && omega.is_finite()) {
                    return Err(Error::InvalidSignal("sinusoid parameters must be finite"));
                }
            }
            ReferenceSignal::ZohTrack { samples, period } => {
                if samples.is_empty() {
                    return Err(Error::InvalidSignal("zoh track needs at least one sample"));
                }
                if samples.iter().any(|s| !s.is_finite()) {
                    return Err(Error::InvalidSignal("zoh samples must be finite"));
                }
                if !period.is_finite() || *period <= 0.0 {
                    return Err(Error::InvalidSignal("zoh period must be positive"));
                }
            }
            ReferenceSignal::Polynomial { coeffs } => {
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidSignal("polynomial coefficients must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Signal value at `t >= 0`, right-continuous.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            ReferenceSignal::Constant { value } => *value,
            ReferenceSignal::Sinusoid { offset, amplitude, omega } => {
                offset + amplitude * math::sin(omega * t)
            }
            ReferenceSignal::ZohTrack { samples, period } => {
                let idx = zoh_index(t, *period, samples.len());
                samples[idx]
            }
            ReferenceSignal::Polynomial { coeffs } => horner(coeffs, t),
        }
    }

    /// Left limit of the signal at `t`; differs from `value` only where a
    /// zero-order-hold track steps exactly at `t`.
    pub fn value_left(&self, t: f64) -> f64 {
        match self {
            ReferenceSignal::ZohTrack { samples, period } => {
                let idx = zoh_index(t, *period, samples.len());
                if idx > 0 && (idx as f64) * period == t {
                    samples[idx - 1]
                } else {
                    samples[idx]
                }
            }
            _ => self.value(t),
        }
    }

    /// Times in `(0, horizon)` where the signal value steps; empty for the
    /// continuous kinds.
    pub fn jump_times(&self, horizon: f64) -> Vec<f64> {
        match self {
            ReferenceSignal::ZohTrack { samples, period } => {
                let mut out = Vec::new();
                for l in 1..samples.len() {
                    let t = l as f64 * period;
                    if t >= horizon {
                        break;
                    }
                    if samples[l] != samples[l - 1] {
                        out.push(t);
                    }
                }
                out
            }
            _ => Vec::new(),
        }
    }

    /// Time derivative between jumps; zero for constants and held tracks.
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            ReferenceSignal::Constant { .. } | ReferenceSignal::ZohTrack { .. } => 0.0,
            ReferenceSignal::Sinusoid { amplitude, omega, .. } => {
                amplitude * omega * math::cos(omega * t)
            }
            ReferenceSignal::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (i, c) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * t + (i as f64) * c;
                }
                acc
            }
        }
    }
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn zoh_index(t: f64, period: f64, len: usize) -> usize {
    let raw = math::floor(math::max(t, 0.0) / period);
    let idx = raw as usize;
    idx.min(len - 1)
}

/// Sample-and-hold lookup: signal value at the latest sample instant
/// `period * floor(t / period)`.
pub fn zoh_sample(signal: &ReferenceSignal, period: f64, t: f64) -> f64 {
    signal.value(period * math::floor(math::max(t, 0.0) / period))
}

/// Smooth parts of the bound input between switches: the feedforward
/// mismatch `E ṙ - (d avg_a/dt) 1` and the negated disagreement rate `-ẇ̃`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothDerivatives {
    pub feedforward_mismatch: Vec<f64>,
    pub neg_disagreement_rate: Vec<f64>,
}

/// One-sided data across switch `k`: `Δavg_k` and `Δw_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchJump {
    pub time: f64,
    pub avg_jump: f64,
    pub disagreement_jump: Vec<f64>,
}

/// The per-agent reference signals of a network.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceEnsemble {
    signals: Vec<ReferenceSignal>,
}

impl ReferenceEnsemble {
    pub fn new(signals: Vec<ReferenceSignal>) -> Result<Self> {
        for s in &signals {
            s.validate()?;
        }
        Ok(ReferenceEnsemble { signals })
    }

    pub fn len(&self) -> usize {
        self.signals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.is_empty()
    }

    pub fn signals(&self) -> &[ReferenceSignal] {
        &self.signals
    }

    /// Ensemble restricted to the surviving agents (departure support).
    pub fn restricted(&self, keep: &[usize]) -> Result<ReferenceEnsemble> {
        let mut signals = Vec::with_capacity(keep.len());
        for &i in keep {
            let s = self
                .signals
                .get(i)
                .ok_or(Error::DimensionMismatch { expected: self.signals.len(), got: i })?;
            signals.push(s.clone());
        }
        ReferenceEnsemble::new(signals)
    }

    pub fn values(&self, t: f64) -> Vec<f64> {
        self.signals.iter().map(|s| s.value(t)).collect()
    }

    pub fn derivatives(&self, t: f64) -> Vec<f64> {
        self.signals.iter().map(|s| s.derivative(t)).collect()
    }

    fn check_schedule(&self, schedule: &ModeSchedule) -> Result<()> {
        if schedule.n() != self.signals.len() {
            return Err(Error::DimensionMismatch {
                expected: self.signals.len(),
                got: schedule.n(),
            });
        }
        Ok(())
    }

    /// The tracking target `avg_a(t)`, right-continuous at switches.
    pub fn active_average(&self, schedule: &ModeSchedule, t: f64) -> Result<f64> {
        self.check_schedule(schedule)?;
        let weights = schedule.weights_at(t)?;
        Ok(weighted_average(weights, &self.values(t)))
    }

    /// Left limit of `avg_a` at `t`.
    pub fn active_average_left(&self, schedule: &ModeSchedule, t: f64) -> Result<f64> {
        self.check_schedule(schedule)?;
        let weights = schedule.weights_before(t)?;
        let values: Vec<f64> = self.signals.iter().map(|s| s.value_left(t)).collect();
        Ok(weighted_average(weights, &values))
    }

    /// Disagreement input `w_i = η_i (r_i - avg_a)`; `1ᵀw = 0` up to rounding.
    pub fn disagreement(&self, schedule: &ModeSchedule, t: f64) -> Result<Vec<f64>> {
        self.check_schedule(schedule)?;
        let weights = schedule.weights_at(t)?;
        let values = self.values(t);
        let avg = weighted_average(weights, &values);
        Ok(weights.iter().zip(&values).map(|(w, r)| w * (r - avg)).collect())
    }

    fn disagreement_left(&self, schedule: &ModeSchedule, t: f64) -> Result<Vec<f64>> {
        let weights = schedule.weights_before(t)?;
        let values: Vec<f64> = self.signals.iter().map(|s| s.value_left(t)).collect();
        let avg = weighted_average(weights, &values);
        Ok(weights.iter().zip(&values).map(|(w, r)| w * (r - avg)).collect())
    }

    /// Absolutely continuous part of the bound input at `t` (evaluated
    /// right-continuously at switch times). Within an epoch,
    /// `d avg/dt = Σ η_i ṙ_i / Σ η_i` and `ẇ̃_i = η_i (ṙ_i - d avg/dt)`.
    pub fn smooth_derivatives(
        &self,
        schedule: &ModeSchedule,
        t: f64,
    ) -> Result<SmoothDerivatives> {
        self.check_schedule(schedule)?;
        let weights = schedule.weights_at(t)?;
        let rates = self.derivatives(t);
        let avg_rate = weighted_average(weights, &rates);
        let feedforward_mismatch: Vec<f64> =
            weights.iter().zip(&rates).map(|(w, rd)| w * rd - avg_rate).collect();
        let neg_disagreement_rate: Vec<f64> =
            weights.iter().zip(&rates).map(|(w, rd)| -w * (rd - avg_rate)).collect();
        Ok(SmoothDerivatives { feedforward_mismatch, neg_disagreement_rate })
    }

    /// Jump data at switch `k` (1-based): `Δavg_k = avg(t_k⁺) - avg(t_k⁻)`
    /// and `Δw_k = w(t_k⁺) - w(t_k⁻)`. One-sided signal values are used when
    /// a held track steps exactly at the switch time.
    pub fn jumps_at(&self, schedule: &ModeSchedule, k: usize) -> Result<SwitchJump> {
        let switches = schedule.switch_times();
        if k == 0 || k > switches.len() {
            return Err(Error::SwitchIndexOutOfRange { k, switches: switches.len() });
        }
        self.jump_at_time(schedule, switches[k - 1])
    }

    /// One-sided jump data at an arbitrary time: weight switches and held-
    /// track value steps both appear here.
    pub fn jump_at_time(&self, schedule: &ModeSchedule, t: f64) -> Result<SwitchJump> {
        self.check_schedule(schedule)?;
        let avg_right = self.active_average(schedule, t)?;
        let avg_left = self.active_average_left(schedule, t)?;
        let w_right = self.disagreement(schedule, t)?;
        let w_left = self.disagreement_left(schedule, t)?;
        let disagreement_jump = w_right.iter().zip(&w_left).map(|(r, l)| r - l).collect();
        Ok(SwitchJump { time: t, avg_jump: avg_right - avg_left, disagreement_jump })
    }

    /// All times in `(0, horizon)` where the tracking target or the
    /// disagreement input can jump: schedule switches plus value steps of
    /// held tracks. Sorted and deduplicated; steps of passive agents are
    /// included here and drop out of the jump data itself.
    pub fn jump_event_times(&self, schedule: &ModeSchedule) -> Vec<f64> {
        let horizon = schedule.horizon_end();
        let mut events = schedule.switch_times();
        for s in &self.signals {
            events.extend(s.jump_times(horizon));
        }
        events.sort_by(|a, b| a.partial_cmp(b).expect("finite event times"));
        events.dedup();
        events
    }
}

/// `Σ w_i x_i / Σ w_i`; schedules guarantee `Σ w_i > 0`.
pub fn weighted_average(weights: &[f64], values: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    let acc: f64 = weights.iter().zip(values).map(|(w, x)| w * x).sum();
    acc / total
}
