//! Piecewise-constant per-agent weight schedules and switching statistics.
//!
//! A schedule is a finite list of epochs `(t_k, eta_k)` on `[0, horizon]`.
//! The weight vector is right-continuous: at a switch time the new epoch's
//! weights apply. Every epoch must keep at least one agent strictly active.
//! The average dwell-time condition `N(0, t) <= N0 + t / tau_d` is validated
//! empirically over the horizon.

use alloc::vec::Vec;

use crate::{Error, Result};

/// One constant-weight interval `[start, next_start)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Epoch {
    pub start: f64,
    pub weights: Vec<f64>,
}

/// Finite-horizon switching schedule of per-agent weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSchedule {
    epochs: Vec<Epoch>,
    horizon_end: f64,
}

impl ModeSchedule {
    pub fn new(epochs: Vec<Epoch>, horizon_end: f64) -> Result<Self> {
        if epochs.is_empty() {
            return Err(Error::EmptySchedule);
        }
        if !horizon_end.is_finite() || horizon_end <= 0.0 {
            return Err(Error::TimeOutOfHorizon { t: horizon_end, horizon: horizon_end });
        }
        if epochs[0].start != 0.0 {
            return Err(Error::FirstEpochNotZero(epochs[0].start));
        }
        let n = epochs[0].weights.len();
        for (idx, epoch) in epochs.iter().enumerate() {
            if epoch.weights.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: epoch.weights.len() });
            }
            if !epoch.start.is_finite() {
                return Err(Error::NonFiniteInput("epoch start time"));
            }
            if idx > 0 && epoch.start <= epochs[idx - 1].start {
                return Err(Error::EpochOrder { index: idx, start: epoch.start });
            }
            if epoch.start >= horizon_end && idx > 0 {
                return Err(Error::EpochOrder { index: idx, start: epoch.start });
            }
            let mut any_active = false;
            for &w in &epoch.weights {
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::NonFiniteInput("epoch weight"));
                }
                any_active |= w > 0.0;
            }
            if !any_active {
                return Err(Error::NoActiveAgent { epoch: idx });
            }
        }
        Ok(ModeSchedule { epochs, horizon_end })
    }

    /// Single-epoch schedule with constant weights.
    pub fn constant(weights: Vec<f64>, horizon_end: f64) -> Result<Self> {
        ModeSchedule::new(Vec::from([Epoch { start: 0.0, weights }]), horizon_end)
    }

    pub fn n(&self) -> usize {
        self.epochs[0].weights.len()
    }

    pub fn horizon_end(&self) -> f64 {
        self.horizon_end
    }

    pub fn epochs(&self) -> &[Epoch] {
        &self.epochs
    }

    /// Switch times `t_1 < t_2 < ...` (epoch boundaries after t = 0).
    pub fn switch_times(&self) -> Vec<f64> {
        self.epochs.iter().skip(1).map(|e| e.start).collect()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !t.is_finite() || t < 0.0 || t > self.horizon_end {
            return Err(Error::TimeOutOfHorizon { t, horizon: self.horizon_end });
        }
        Ok(())
    }

    /// Index of the epoch whose interval contains `t` (right-continuous).
    pub fn epoch_index_at(&self, t: f64) -> Result<usize> {
        self.check_time(t)?;
        // Last epoch whose start is <= t.
        let mut idx = 0;
        for (i, epoch) in self.epochs.iter().enumerate() {
            if epoch.start <= t {
                idx = i;
            } else {
                break;
            }
        }
        Ok(idx)
    }

    /// Weight vector at `t`; right-continuous at switch times.
    pub fn weights_at(&self, t: f64) -> Result<&[f64]> {
        Ok(&self.epochs[self.epoch_index_at(t)?].weights)
    }

    /// Weight vector of the epoch just before `t` (left limit). At t = 0 and
    /// away from switch times this equals `weights_at`.
    pub fn weights_before(&self, t: f64) -> Result<&[f64]> {
        let idx = self.epoch_index_at(t)?;
        if idx > 0 && self.epochs[idx].start == t {
            Ok(&self.epochs[idx - 1].weights)
        } else {
            Ok(&self.epochs[idx].weights)
        }
    }

    /// Indices of agents with strictly positive weight at `t`. Never empty.
    pub fn active_set(&self, t: f64) -> Result<Vec<usize>> {
        let weights = self.weights_at(t)?;
        Ok(weights
            .iter()
            .enumerate()
            .filter_map(|(i, &w)| (w > 0.0).then_some(i))
            .collect())
    }

    /// Number of switches in the open interval `(0, t)`.
    pub fn switch_count(&self, t: f64) -> Result<usize> {
        self.check_time(t)?;
        Ok(self.epochs.iter().skip(1).take_while(|e| e.start < t).count())
    }

    /// Checks `N(0, t) <= N0 + t / tau_d` over the whole horizon.
    ///
    /// The switch count is a step function jumping to `k` just after `t_k`,
    /// while the right side increases in `t`, so checking `k <= N0 + t_k /
    /// tau_d` at each switch time suffices.
    pub fn verify_dwell(&self, stats: &DwellStats) -> DwellVerdict {
        for (k, epoch) in self.epochs.iter().enumerate().skip(1) {
            let bound = stats.chatter_bound as f64 + epoch.start / stats.average_dwell;
            if k as f64 > bound {
                return DwellVerdict { satisfied: false, first_violation: Some(epoch.start) };
            }
        }
        DwellVerdict { satisfied: true, first_violation: None }
    }

    /// Distinct weight vectors in epoch order (the subsystem pool).
    pub fn distinct_weight_vectors(&self) -> Vec<Vec<f64>> {
        let mut pool: Vec<Vec<f64>> = Vec::new();
        for epoch in &self.epochs {
            if !pool.iter().any(|w| w == &epoch.weights) {
                pool.push(epoch.weights.clone());
            }
        }
        pool
    }

    /// Schedule restricted to the surviving agents (departure support).
    ///
    /// Epoch times stay absolute so that reference signals keep their time
    /// base; epochs entirely before `from` are dropped (the one containing
    /// `from` is re-anchored at 0), so epochs a restarted run never visits
    /// are not validated.
    pub fn restricted(&self, keep: &[usize], from: f64) -> Result<ModeSchedule> {
        self.check_time(from)?;
        let n = self.n();
        for &i in keep {
            if i >= n {
                return Err(Error::DimensionMismatch { expected: n, got: i });
            }
        }
        let start_idx = self.epoch_index_at(from)?;
        let mut epochs = Vec::new();
        for (idx, epoch) in self.epochs.iter().enumerate().skip(start_idx) {
            let start = if idx == start_idx { 0.0 } else { epoch.start };
            let weights: Vec<f64> = keep.iter().map(|&i| epoch.weights[i]).collect();
            epochs.push(Epoch { start, weights });
        }
        ModeSchedule::new(epochs, self.horizon_end)
    }
}

/// Average dwell-time declaration: chatter bound `N0` and dwell `tau_d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DwellStats {
    pub chatter_bound: u32,
    pub average_dwell: f64,
}

impl DwellStats {
    pub fn new(chatter_bound: u32, average_dwell: f64) -> Result<Self> {
        if !average_dwell.is_finite() || average_dwell <= 0.0 {
            return Err(Error::InvalidDwell(average_dwell));
        }
        Ok(DwellStats { chatter_bound, average_dwell })
    }
}

/// Outcome of the dwell-time check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DwellVerdict {
    pub satisfied: bool,
    pub first_violation: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn two_epoch() -> ModeSchedule {
        ModeSchedule::new(
            vec![
                Epoch { start: 0.0, weights: vec![1.0, 0.0] },
                Epoch { start: 10.0, weights: vec![0.0, 2.0] },
            ],
            20.0,
        )
        .unwrap()
    }

    #[test]
    fn weights_single_epoch() {
        let s = ModeSchedule::constant(vec![1.0, 1.0], 10.0).unwrap();
        assert_eq!(s.weights_at(5.0).unwrap(), &[1.0, 1.0]);
    }

    #[test]
    fn weights_right_continuous_at_switch() {
        let s = two_epoch();
        assert_eq!(s.weights_at(10.0).unwrap(), &[0.0, 2.0]);
        assert_eq!(s.weights_at(9.999).unwrap(), &[1.0, 0.0]);
        assert_eq!(s.weights_before(10.0).unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn out_of_horizon_rejected() {
        let s = two_epoch();
        assert!(matches!(s.weights_at(20.5), Err(Error::TimeOutOfHorizon { .. })));
        assert!(matches!(s.weights_at(-0.1), Err(Error::TimeOutOfHorizon { .. })));
        // Horizon end itself is queryable.
        assert_eq!(s.weights_at(20.0).unwrap(), &[0.0, 2.0]);
    }

    #[test]
    fn active_sets() {
        let s = ModeSchedule::constant(vec![0.0, 3.0, 0.5], 1.0).unwrap();
        assert_eq!(s.active_set(0.5).unwrap(), vec![1, 2]);

        let all = ModeSchedule::constant(vec![1.0; 4], 1.0).unwrap();
        assert_eq!(all.active_set(0.0).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn switch_counts() {
        // Single-agent schedules are legal at this level; graph validation
        // is what requires n >= 2.
        let s = ModeSchedule::constant(vec![1.0], 5.0).unwrap();
        assert_eq!(s.switch_count(4.0).unwrap(), 0);

        let s = ModeSchedule::new(
            vec![
                Epoch { start: 0.0, weights: vec![1.0] },
                Epoch { start: 10.0, weights: vec![2.0] },
                Epoch { start: 20.0, weights: vec![1.0] },
            ],
            30.0,
        )
        .unwrap();
        assert_eq!(s.switch_count(15.0).unwrap(), 1);
        assert_eq!(s.switch_count(25.0).unwrap(), 2);
        assert_eq!(s.switch_count(10.0).unwrap(), 0);
    }

    #[test]
    fn dwell_check_examples() {
        let mk = |times: &[f64]| {
            let mut epochs = vec![Epoch { start: 0.0, weights: vec![1.0] }];
            for (i, &t) in times.iter().enumerate() {
                let w = if i % 2 == 0 { 2.0 } else { 1.0 };
                epochs.push(Epoch { start: t, weights: vec![w] });
            }
            ModeSchedule::new(epochs, 10.0).unwrap()
        };

        // Switches at 1, 2, 3: k <= t_k / 1 holds with equality.
        let s = mk(&[1.0, 2.0, 3.0]);
        assert!(s.verify_dwell(&DwellStats::new(0, 1.0).unwrap()).satisfied);

        // Switches at 1, 1.1: N = 2 > 1.1 at the second switch.
        let s = mk(&[1.0, 1.1]);
        let verdict = s.verify_dwell(&DwellStats::new(0, 1.0).unwrap());
        assert!(!verdict.satisfied);
        assert_eq!(verdict.first_violation, Some(1.1));

        // Chatter bound at least the switch count always passes.
        let s = mk(&[0.1, 0.2, 0.3]);
        assert!(s.verify_dwell(&DwellStats::new(3, 100.0).unwrap()).satisfied);
    }

    #[test]
    fn validation_rejects_bad_epochs() {
        assert_eq!(ModeSchedule::new(vec![], 1.0).unwrap_err(), Error::EmptySchedule);
        assert!(matches!(
            ModeSchedule::new(vec![Epoch { start: 1.0, weights: vec![1.0] }], 2.0).unwrap_err(),
            Error::FirstEpochNotZero(_)
        ));
        assert!(matches!(
            ModeSchedule::new(
                vec![
                    Epoch { start: 0.0, weights: vec![1.0] },
                    Epoch { start: 0.0, weights: vec![2.0] }
                ],
                2.0
            )
            .unwrap_err(),
            Error::EpochOrder { .. }
        ));
        assert_eq!(
            ModeSchedule::constant(vec![0.0, 0.0], 2.0).unwrap_err(),
            Error::NoActiveAgent { epoch: 0 }
        );
    }

    #[test]
    fn restriction_shifts_and_projects() {
        let s = ModeSchedule::new(
            vec![
                Epoch { start: 0.0, weights: vec![1.0, 0.0, 2.0] },
                Epoch { start: 10.0, weights: vec![0.0, 0.5, 2.0] },
                Epoch { start: 15.0, weights: vec![0.0, 0.0, 1.0] },
            ],
            30.0,
        )
        .unwrap();
        let r = s.restricted(&[1, 2], 12.0).unwrap();
        assert_eq!(r.n(), 2);
        // Times stay absolute; only pre-restart epochs are dropped.
        assert_eq!(r.horizon_end(), 30.0);
        assert_eq!(r.weights_at(12.0).unwrap(), &[0.5, 2.0]);
        assert_eq!(r.weights_at(16.0).unwrap(), &[0.0, 1.0]);
        assert_eq!(r.weights_at(0.0).unwrap(), &[0.5, 2.0]);
    }

    fn dwell_instance() -> impl Strategy<Value = (ModeSchedule, DwellStats)> {
        let times = proptest::collection::vec(0.5f64..50.0, 1..8);
        (times, 0u32..4, 0.2f64..5.0).prop_map(|(mut times, n0, tau)| {
            times.sort_by(|a, b| a.partial_cmp(b).unwrap());
            times.dedup();
            let mut epochs = vec![Epoch { start: 0.0, weights: vec![1.0, 0.5] }];
            for (i, t) in times.into_iter().enumerate() {
                let w = if i % 2 == 0 { vec![0.0, 1.0] } else { vec![1.0, 0.5] };
                epochs.push(Epoch { start: t, weights: w });
            }
            let s = ModeSchedule::new(epochs, 60.0).unwrap();
            (s, DwellStats::new(n0, tau).unwrap())
        })
    }

    proptest! {
        /// Relaxing (N0 up, tau_d down) preserves a satisfied dwell check.
        #[test]
        fn dwell_monotonicity((s, stats) in dwell_instance(), extra in 0u32..3, shrink in 0.1f64..1.0) {
            let verdict = s.verify_dwell(&stats);
            if verdict.satisfied {
                let relaxed = DwellStats::new(
                    stats.chatter_bound + extra,
                    stats.average_dwell * shrink,
                ).unwrap();
                prop_assert!(s.verify_dwell(&relaxed).satisfied);
            }
        }

        /// The active set is never empty at any queryable time.
        #[test]
        fn active_set_nonempty((s, _) in dwell_instance(), frac in 0.0f64..=1.0) {
            let t = frac * s.horizon_end();
            prop_assert!(!s.active_set(t).unwrap().is_empty());
        }
    }
}
