//! Fixed-step simulation of the continuous-time consensus flow.
//!
//! Per agent the flow is
//!
//! ```text
//! x_i' = -eta_i (x_i - r_i) - Σ_j a_ij (x_i - x_j) - Σ_j a_ij (v_i - v_j) + eta_i r_i'
//! v_i' =  Σ_j a_ij (x_i - x_j)
//! ```
//!
//! with `v` an integral state. Integration is classical RK4 with a fixed
//! step, adjusted per epoch so that every switch time is exactly a step
//! boundary; within a step the weight vector is frozen to the epoch that
//! contains the step (right-continuous at the epoch start). States are
//! continuous across switches; only the tracking target jumps.
//!
//! The pairwise form of the coupling sums keeps `1ᵀ v' = 0` to rounding,
//! so `Σ_i v_i` is conserved along trajectories.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph::Topology;
use crate::math;
use crate::schedule::ModeSchedule;
use crate::signals::ReferenceEnsemble;
use crate::trajectory::{Sample, SampleKind, TrackingError, Trajectory};
use crate::{Error, Result};

/// Instantaneous simulation state.
#[derive(Clone, Debug, PartialEq)]
pub struct CtState {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

/// Right-hand side of the flow at `state.t`, with weights resolved
/// right-continuously from the schedule.
pub fn vector_field(
    topology: &Topology,
    schedule: &ModeSchedule,
    ensemble: &ReferenceEnsemble,
    state: &CtState,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dims(topology, schedule, ensemble)?;
    let weights = schedule.weights_at(state.t)?;
    let values = ensemble.values(state.t);
    let rates = ensemble.derivatives(state.t);
    Ok(rhs(topology, weights, &values, &rates, &state.x, &state.v))
}

fn check_dims(
    topology: &Topology,
    schedule: &ModeSchedule,
    ensemble: &ReferenceEnsemble,
) -> Result<()> {
    let n = topology.n();
    if schedule.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: schedule.n() });
    }
    if ensemble.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: ensemble.len() });
    }
    Ok(())
}

fn rhs(
    topology: &Topology,
    weights: &[f64],
    values: &[f64],
    rates: &[f64],
    x: &[f64],
    v: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let a = topology.adjacency();
    let mut xdot = vec![0.0; n];
    let mut vdot = vec![0.0; n];
    for i in 0..n {
        let mut coupling = 0.0;
        let mut flow = 0.0;
        for (j, &aij) in a.row(i).iter().enumerate() {
            if aij != 0.0 {
                flow += aij * (x[i] - x[j]);
                coupling += aij * (v[i] - v[j]);
            }
        }
        xdot[i] = -weights[i] * (x[i] - values[i]) - flow - coupling + weights[i] * rates[i];
        vdot[i] = flow;
    }
    (xdot, vdot)
}

/// Integrates from `(x0, v0)` at t = 0 to `t_end`.
pub fn integrate(
    topology: &Topology,
    schedule: &ModeSchedule,
    ensemble: &ReferenceEnsemble,
    x0: &[f64],
    v0: &[f64],
    t_end: f64,
    h: f64,
) -> Result<Trajectory> {
    integrate_span(topology, schedule, ensemble, x0, v0, 0.0, t_end, h)
}

/// Integrates over `[t_start, t_end]` within the schedule horizon. Used by
/// scenario runners that restart after a topology change.
#[allow(clippy::too_many_arguments)]
pub fn integrate_span(
    topology: &Topology,
    schedule: &ModeSchedule,
    ensemble: &ReferenceEnsemble,
    x0: &[f64],
    v0: &[f64],
    t_start: f64,
    t_end: f64,
    h: f64,
) -> Result<Trajectory> {
    check_dims(topology, schedule, ensemble)?;
    let n = topology.n();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    if v0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v0.len() });
    }
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::InvalidStep(h));
    }
    if t_end < t_start || t_start < 0.0 || t_end > schedule.horizon_end() {
        return Err(Error::TimeOutOfHorizon { t: t_end, horizon: schedule.horizon_end() });
    }
    if x0.iter().chain(v0).any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteInput("initial state"));
    }

    let mut traj = Trajectory::new();

    // Interval boundaries: span ends plus every switch time inside.
    let mut boundaries = vec![t_start];
    for t in schedule.switch_times() {
        if t > t_start && t < t_end {
            boundaries.push(t);
        }
    }
    boundaries.push(t_end);

    let mut shortest_epoch = f64::INFINITY;
    for pair in boundaries.windows(2) {
        let span = pair[1] - pair[0];
        if span > 0.0 && span < shortest_epoch {
            shortest_epoch = span;
        }
    }
    if shortest_epoch.is_finite() && h > shortest_epoch / 4.0 {
        traj.push_warning(format!(
            "step {h} exceeds a quarter of the shortest epoch ({shortest_epoch})"
        ));
    }

    let mut x = x0.to_vec();
    let mut v = v0.to_vec();
    record(&mut traj, schedule, ensemble, t_start, SampleKind::Interior, &x, &v)?;

    for (seg, pair) in boundaries.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        if b == a {
            continue;
        }
        if seg > 0 {
            // `a` is a switch time: re-record the same state against the
            // incoming epoch.
            record(&mut traj, schedule, ensemble, a, SampleKind::PostSwitch, &x, &v)?;
        }
        let weights = schedule.weights_at(a)?.to_vec();
        let steps = math::max(math::ceil((b - a) / h), 1.0) as usize;
        let sub_h = (b - a) / steps as f64;
        for j in 0..steps {
            let t0 = a + j as f64 * sub_h;
            let t1 = if j + 1 == steps { b } else { a + (j + 1) as f64 * sub_h };
            rk4_step(topology, ensemble, &weights, t0, t1 - t0, &mut x, &mut v);
            if x.iter().chain(&v).any(|s| !s.is_finite()) {
                return Err(Error::NonFiniteState { t: t1 });
            }
            let final_step = j + 1 == steps;
            let ends_at_switch = final_step && b < t_end;
            let kind = if ends_at_switch { SampleKind::PreSwitch } else { SampleKind::Interior };
            if ends_at_switch {
                record_left(&mut traj, schedule, ensemble, t1, &x, &v)?;
            } else {
                record(&mut traj, schedule, ensemble, t1, kind, &x, &v)?;
            }
        }
    }
    Ok(traj)
}

fn rk4_step(
    topology: &Topology,
    ensemble: &ReferenceEnsemble,
    weights: &[f64],
    t: f64,
    h: f64,
    x: &mut [f64],
    v: &mut [f64],
) {
    let eval = |tau: f64, xs: &[f64], vs: &[f64]| {
        let values = ensemble.values(tau);
        let rates = ensemble.derivatives(tau);
        rhs(topology, weights, &values, &rates, xs, vs)
    };
    let n = x.len();
    let mid = t + h / 2.0;

    let (k1x, k1v) = eval(t, x, v);
    let (x2, v2) = shifted(x, v, &k1x, &k1v, h / 2.0);
    let (k2x, k2v) = eval(mid, &x2, &v2);
    let (x3, v3) = shifted(x, v, &k2x, &k2v, h / 2.0);
    let (k3x, k3v) = eval(mid, &x3, &v3);
    let (x4, v4) = shifted(x, v, &k3x, &k3v, h);
    let (k4x, k4v) = eval(t + h, &x4, &v4);

    for i in 0..n {
        x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
        v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
    }
}

fn shifted(x: &[f64], v: &[f64], kx: &[f64], kv: &[f64], scale: f64) -> (Vec<f64>, Vec<f64>) {
    let xs = x.iter().zip(kx).map(|(a, k)| a + scale * k).collect();
    let vs = v.iter().zip(kv).map(|(a, k)| a + scale * k).collect();
    (xs, vs)
}

fn record(
    traj: &mut Trajectory,
    schedule: &ModeSchedule,
    ensemble: &ReferenceEnsemble,
    t: f64,
    kind: SampleKind,
    x: &[f64],
    v: &[f64],
) -> Result<()> {
    let avg = ensemble.active_average(schedule, t)?;
    push_sample(traj, t, kind, x, v, avg);
    Ok(())
}

fn record_left(
    traj: &mut Trajectory,
    schedule: &ModeSchedule,
    ensemble: &ReferenceEnsemble,
    t: f64,
    x: &[f64],
    v: &[f64],
) -> Result<()> {
    let avg = ensemble.active_average_left(schedule, t)?;
    push_sample(traj, t, SampleKind::PreSwitch, x, v, avg);
    Ok(())
}

fn push_sample(traj: &mut Trajectory, t: f64, kind: SampleKind, x: &[f64], v: &[f64], avg: f64) {
    let err = x.iter().map(|xi| (xi - avg).abs()).collect();
    traj.push(Sample { t, kind, x: x.to_vec(), v: v.to_vec(), avg, err });
}

/// Recomputes per-agent tracking errors `|x_i(t) - avg_a(t)|` from the
/// oracle, honoring left limits at pre-switch samples.
pub fn tracking_error(
    trajectory: &Trajectory,
    ensemble: &ReferenceEnsemble,
    schedule: &ModeSchedule,
) -> Result<TrackingError> {
    let n = trajectory.n_agents();
    let mut per_agent = vec![Vec::with_capacity(trajectory.len()); n];
    let mut max = Vec::with_capacity(trajectory.len());
    for sample in trajectory.samples() {
        let avg = match sample.kind {
            SampleKind::PreSwitch => ensemble.active_average_left(schedule, sample.t)?,
            _ => ensemble.active_average(schedule, sample.t)?,
        };
        let mut worst = 0.0f64;
        for (i, xi) in sample.x.iter().enumerate() {
            let e = (xi - avg).abs();
            per_agent[i].push(e);
            worst = worst.max(e);
        }
        max.push(worst);
    }
    Ok(TrackingError { per_agent, max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SpectralDecomposition;
    use crate::linalg::{norm, sym_eigen};
    use crate::schedule::Epoch;
    use crate::signals::ReferenceSignal;

    fn constant(v: f64) -> ReferenceSignal {
        ReferenceSignal::Constant { value: v }
    }

    /// Least-squares solve of `L v = w` on the subspace `1ᵀ v = total` via
    /// the spectral pseudo-inverse of the (symmetric PSD) Laplacian.
    fn laplacian_least_squares(topology: &Topology, w: &[f64], total: f64) -> Vec<f64> {
        let l = topology.laplacian();
        let n = topology.n();
        let eig = sym_eigen(&l).unwrap();
        let mut v = vec![total / n as f64; n];
        for m in 0..n {
            let lambda = eig.values[m];
            if lambda.abs() < 1e-9 {
                continue;
            }
            let u: Vec<f64> = (0..n).map(|i| eig.vectors[(i, m)]).collect();
            let coeff = crate::linalg::dot(&u, w) / lambda;
            for i in 0..n {
                v[i] += coeff * u[i];
            }
        }
        v
    }

    #[test]
    fn equilibrium_residual_vanishes() {
        let top = Topology::ring(5, 1.3).unwrap();
        let weights = vec![2.0, 0.0, 0.5, 0.0, 1.0];
        let refs = [1.0, -2.0, 0.5, 3.0, -1.0];
        let schedule = ModeSchedule::constant(weights.clone(), 10.0).unwrap();
        let ensemble =
            ReferenceEnsemble::new(refs.iter().map(|&r| constant(r)).collect()).unwrap();

        let avg = ensemble.active_average(&schedule, 0.0).unwrap();
        let w = ensemble.disagreement(&schedule, 0.0).unwrap();
        let v_star = laplacian_least_squares(&top, &w, 0.0);
        let x_star = vec![avg; 5];

        let state = CtState { t: 0.0, x: x_star.clone(), v: v_star.clone() };
        let (xdot, vdot) = vector_field(&top, &schedule, &ensemble, &state).unwrap();
        assert!(norm(&xdot) < 1e-12, "xdot residual {}", norm(&xdot));
        assert!(norm(&vdot) < 1e-12, "vdot residual {}", norm(&vdot));

        // Integrating from the equilibrium keeps the error series at zero.
        let traj =
            integrate(&top, &schedule, &ensemble, &x_star, &v_star, 2.0, 0.01).unwrap();
        for sample in traj.samples() {
            assert!(sample.max_err() < 1e-11, "error {} at t = {}", sample.max_err(), sample.t);
        }
    }

    #[test]
    fn passive_agent_at_consensus_is_stationary() {
        let top = Topology::ring(4, 1.0).unwrap();
        let schedule = ModeSchedule::constant(vec![0.0, 1.0, 1.0, 0.0], 1.0).unwrap();
        let ensemble = ReferenceEnsemble::new(vec![constant(9.0); 4]).unwrap();
        let state = CtState { t: 0.0, x: vec![3.0; 4], v: vec![-1.5; 4] };
        let (xdot, vdot) = vector_field(&top, &schedule, &ensemble, &state).unwrap();
        // All coupling terms vanish on consensus; passive agents are frozen.
        assert_eq!(xdot[0], 0.0);
        assert_eq!(xdot[3], 0.0);
        assert_eq!(vdot, vec![0.0; 4]);
    }

    #[test]
    fn integral_state_sum_is_conserved_by_field() {
        let top = Topology::ring(6, 0.8).unwrap();
        let schedule = ModeSchedule::constant(vec![1.0, 0.0, 2.0, 0.0, 0.3, 0.0], 1.0).unwrap();
        let ensemble = ReferenceEnsemble::new((0..6).map(|i| constant(i as f64)).collect())
            .unwrap();
        let state = CtState {
            t: 0.5,
            x: vec![0.3, -1.2, 2.0, 0.9, -0.4, 1.1],
            v: vec![1.0, 0.2, -0.7, 0.4, 0.0, -0.9],
        };
        let (_, vdot) = vector_field(&top, &schedule, &ensemble, &state).unwrap();
        assert!(vdot.iter().sum::<f64>().abs() < 1e-13);
    }

    #[test]
    fn zero_horizon_yields_initial_state_only() {
        let top = Topology::path(2, 1.0).unwrap();
        let schedule = ModeSchedule::constant(vec![1.0, 1.0], 5.0).unwrap();
        let ensemble = ReferenceEnsemble::new(vec![constant(0.0), constant(2.0)]).unwrap();
        let traj =
            integrate(&top, &schedule, &ensemble, &[0.5, 1.5], &[0.0, 0.0], 0.0, 0.01).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.first().unwrap().t, 0.0);
        assert_eq!(traj.first().unwrap().x, vec![0.5, 1.5]);
    }

    #[test]
    fn invalid_inputs_rejected() {
        let top = Topology::path(2, 1.0).unwrap();
        let schedule = ModeSchedule::constant(vec![1.0, 1.0], 5.0).unwrap();
        let ensemble = ReferenceEnsemble::new(vec![constant(0.0), constant(2.0)]).unwrap();
        assert!(matches!(
            integrate(&top, &schedule, &ensemble, &[0.0, 0.0], &[0.0, 0.0], 1.0, -0.1),
            Err(Error::InvalidStep(_))
        ));
        assert!(matches!(
            integrate(&top, &schedule, &ensemble, &[0.0, 0.0], &[0.0, 0.0], 9.0, 0.1),
            Err(Error::TimeOutOfHorizon { .. })
        ));
    }

    #[test]
    fn conservation_across_switch_and_duplicate_rows() {
        let top = Topology::ring(4, 1.0).unwrap();
        let schedule = ModeSchedule::new(
            vec![
                Epoch { start: 0.0, weights: vec![1.0, 0.0, 1.0, 0.0] },
                Epoch { start: 3.0, weights: vec![0.0, 2.0, 0.0, 1.0] },
            ],
            6.0,
        )
        .unwrap();
        let ensemble = ReferenceEnsemble::new(vec![
            constant(1.0),
            constant(-1.0),
            constant(2.0),
            constant(0.5),
        ])
        .unwrap();
        let v0 = vec![0.4, -0.2, 1.0, 0.1];
        let traj =
            integrate(&top, &schedule, &ensemble, &[0.0; 4], &v0, 6.0, 0.01).unwrap();

        let v_sum0: f64 = v0.iter().sum();
        let v_sum_end: f64 = traj.last().unwrap().v.iter().sum();
        assert!((v_sum_end - v_sum0).abs() <= 1e-9 * (1.0 + norm(&v0)));

        // Exactly one Pre/Post pair at t = 3 with identical state.
        let pre: Vec<_> =
            traj.samples().iter().filter(|s| s.kind == SampleKind::PreSwitch).collect();
        let post: Vec<_> =
            traj.samples().iter().filter(|s| s.kind == SampleKind::PostSwitch).collect();
        assert_eq!(pre.len(), 1);
        assert_eq!(post.len(), 1);
        assert_eq!(pre[0].t, 3.0);
        assert_eq!(post[0].t, 3.0);
        assert_eq!(pre[0].x, post[0].x);
        assert!(pre[0].avg != post[0].avg);

        // tracking_error recomputation matches the recorded errors.
        let redo = tracking_error(&traj, &ensemble, &schedule).unwrap();
        for (k, s) in traj.samples().iter().enumerate() {
            assert!((redo.max[k] - s.max_err()).abs() < 1e-15);
        }
    }

    #[test]
    fn all_active_static_references_converge() {
        let top = Topology::ring(5, 1.0).unwrap();
        let schedule = ModeSchedule::constant(vec![1.0; 5], 60.0).unwrap();
        let refs = [0.7, -1.1, 2.2, 0.1, -0.6];
        let ensemble =
            ReferenceEnsemble::new(refs.iter().map(|&r| constant(r)).collect()).unwrap();
        let x0 = vec![0.0; 5];
        let v0 = vec![0.0; 5];

        // Probe run to fit an empirical envelope err(t) ~ kappa e^(-lambda t).
        let probe =
            integrate(&top, &schedule, &ensemble, &x0, &v0, 20.0, 0.01).unwrap();
        let err_at = |traj: &Trajectory, t: f64| {
            traj.samples()
                .iter()
                .min_by(|a, b| {
                    ((a.t - t).abs()).partial_cmp(&(b.t - t).abs()).unwrap()
                })
                .unwrap()
                .max_err()
        };
        let (e1, e2) = (err_at(&probe, 5.0), err_at(&probe, 15.0));
        assert!(e2 < e1, "no decay: {e1} vs {e2}");
        let lambda = (e1 / e2).ln() / 10.0;
        let kappa = e1 * (lambda * 5.0).exp();

        // Horizon where the envelope predicts err < 1e-6, plus slack.
        let t_target = ((kappa.max(1e-12) / 1e-6).ln() / lambda + 5.0).min(60.0);
        let traj =
            integrate(&top, &schedule, &ensemble, &x0, &v0, t_target, 0.01).unwrap();
        assert!(
            traj.last().unwrap().max_err() < 1e-6,
            "error {} at t = {t_target}",
            traj.last().unwrap().max_err()
        );
    }

    #[test]
    fn rk4_order_check_against_fine_reference() {
        let top = Topology::ring(4, 1.0).unwrap();
        let schedule = ModeSchedule::constant(vec![1.0, 0.0, 0.5, 1.0], 4.0).unwrap();
        let ensemble = ReferenceEnsemble::new(vec![
            ReferenceSignal::Sinusoid { offset: 0.5, amplitude: 1.0, omega: 0.9 },
            constant(-0.3),
            ReferenceSignal::Sinusoid { offset: -0.2, amplitude: 0.7, omega: 1.7 },
            constant(1.1),
        ])
        .unwrap();
        let x0 = [0.3, -0.6, 1.2, 0.0];
        let v0 = [0.1, 0.0, -0.4, 0.2];

        let run = |h: f64| {
            let traj = integrate(&top, &schedule, &ensemble, &x0, &v0, 2.0, h).unwrap();
            let last = traj.last().unwrap().clone();
            let mut state = last.x.clone();
            state.extend_from_slice(&last.v);
            state
        };
        let reference = run(0.04 / 8.0);
        let dist = |a: &[f64]| -> f64 {
            a.iter().zip(&reference).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
        };
        let coarse = dist(&run(0.04));
        let fine = dist(&run(0.02));
        assert!(
            coarse / fine >= 8.0,
            "order check failed: e(h) = {coarse}, e(h/2) = {fine}"
        );
    }

    #[test]
    fn warning_when_step_exceeds_quarter_epoch() {
        let top = Topology::path(2, 1.0).unwrap();
        let schedule = ModeSchedule::new(
            vec![
                Epoch { start: 0.0, weights: vec![1.0, 0.0] },
                Epoch { start: 0.5, weights: vec![0.0, 1.0] },
            ],
            2.0,
        )
        .unwrap();
        let ensemble = ReferenceEnsemble::new(vec![constant(0.0), constant(1.0)]).unwrap();
        let traj =
            integrate(&top, &schedule, &ensemble, &[0.0, 0.0], &[0.0, 0.0], 2.0, 0.2).unwrap();
        assert_eq!(traj.warnings().len(), 1);
    }

    // Used by the equilibrium test; referenced here so the helper stays honest.
    #[test]
    fn least_squares_helper_solves_laplacian_system() {
        let top = Topology::ring(6, 1.0).unwrap();
        let schedule = ModeSchedule::constant(vec![1.0, 0.0, 0.0, 2.0, 0.0, 0.5], 1.0).unwrap();
        let ensemble = ReferenceEnsemble::new((0..6).map(|i| constant(i as f64 - 2.0)).collect())
            .unwrap();
        let w = ensemble.disagreement(&schedule, 0.0).unwrap();
        let v = laplacian_least_squares(&top, &w, 3.0);
        let resid: Vec<f64> = top
            .laplacian()
            .mul_vec(&v)
            .iter()
            .zip(&w)
            .map(|(a, b)| a - b)
            .collect();
        assert!(norm(&resid) < 1e-10);
        assert!((v.iter().sum::<f64>() - 3.0).abs() < 1e-10);

        let dec = SpectralDecomposition::new(&top);
        assert_eq!(dec.n(), 6);
    }
}
