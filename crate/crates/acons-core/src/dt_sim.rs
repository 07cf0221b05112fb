//! Discrete-time consensus with dual-rate sampling.
//!
//! Agents communicate every `delta_c` seconds and sample their references
//! every `delta_s` seconds with zero-order hold. Per step `k` (shorthand
//! for `t = k delta_c`):
//!
//! ```text
//! x_i(k)   = z_i(k) + eta_i(k) r_i(k)
//! z_i(k+1) = z_i(k) - δ eta_i(k)(x_i(k) - r_i(k))
//!            - δ Σ_j a_ij (x_i(k) - x_j(k)) - δ Σ_j a_ij (v_i(k) - v_j(k))
//! v_i(k+1) = v_i(k) + δ Σ_j a_ij (x_i(k) - x_j(k))
//! ```
//!
//! the Euler discretization of the continuous flow with the reference
//! injected through the output equation. [`CompactForm`] steps the same
//! recursion in the transformed error coordinates
//! `(Tᵀ(x - avg 1), Nᵀ(Lv - w))`; the two routes agree to rounding and the
//! compact one doubles as the oracle for the agentwise implementation.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::analysis::SubsystemSet;
use crate::graph::{SpectralDecomposition, Topology};
use crate::schedule::ModeSchedule;
use crate::signals::{weighted_average, zoh_sample, ReferenceEnsemble};
use crate::trajectory::{Sample, SampleKind, Trajectory};
use crate::{Error, Result};

/// A discrete-time run description: network, schedule, signals, both
/// sampling periods, and the step count.
#[derive(Clone, Debug)]
pub struct DtScenario {
    topology: Topology,
    schedule: ModeSchedule,
    ensemble: ReferenceEnsemble,
    delta_c: f64,
    delta_s: f64,
    steps: usize,
}

/// First-difference input driving the compact form at step `k`:
/// `ΔEr(k) = E(k+1)r(k+1) - E(k)r(k)`, `Δavg(k)`, and `Δw(k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactInput {
    pub weighted_reference_diff: Vec<f64>,
    pub average_diff: f64,
    pub disagreement_diff: Vec<f64>,
}

impl DtScenario {
    pub fn new(
        topology: Topology,
        schedule: ModeSchedule,
        ensemble: ReferenceEnsemble,
        delta_c: f64,
        delta_s: f64,
        steps: usize,
    ) -> Result<Self> {
        let n = topology.n();
        if schedule.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: schedule.n() });
        }
        if ensemble.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: ensemble.len() });
        }
        if !delta_c.is_finite() || delta_c <= 0.0 {
            return Err(Error::InvalidStep(delta_c));
        }
        if !delta_s.is_finite() || delta_s <= 0.0 {
            return Err(Error::InvalidStep(delta_s));
        }
        let t_end = steps as f64 * delta_c;
        if t_end > schedule.horizon_end() {
            return Err(Error::TimeOutOfHorizon { t: t_end, horizon: schedule.horizon_end() });
        }
        Ok(DtScenario { topology, schedule, ensemble, delta_c, delta_s, steps })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn schedule(&self) -> &ModeSchedule {
        &self.schedule
    }

    pub fn ensemble(&self) -> &ReferenceEnsemble {
        &self.ensemble
    }

    pub fn delta_c(&self) -> f64 {
        self.delta_c
    }

    pub fn delta_s(&self) -> f64 {
        self.delta_s
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Communication instant `t = k delta_c`.
    pub fn comm_time(&self, k: usize) -> f64 {
        k as f64 * self.delta_c
    }

    /// Weights at step `k` (frozen for the whole step).
    pub fn weights(&self, k: usize) -> Result<&[f64]> {
        self.schedule.weights_at(self.comm_time(k))
    }

    /// References seen at step `k`: each signal held at the latest sample
    /// instant `delta_s * floor(t / delta_s)`.
    pub fn sampled_references(&self, k: usize) -> Vec<f64> {
        let t = self.comm_time(k);
        self.ensemble
            .signals()
            .iter()
            .map(|s| zoh_sample(s, self.delta_s, t))
            .collect()
    }

    /// The tracking target at step `k`, built from the sampled references.
    pub fn sampled_average(&self, k: usize) -> Result<f64> {
        Ok(weighted_average(self.weights(k)?, &self.sampled_references(k)))
    }

    /// Sampled disagreement `w_i(k) = eta_i(k) (r_i(k) - avg(k))`.
    pub fn sampled_disagreement(&self, k: usize) -> Result<Vec<f64>> {
        let weights = self.weights(k)?;
        let refs = self.sampled_references(k);
        let avg = weighted_average(weights, &refs);
        Ok(weights.iter().zip(&refs).map(|(w, r)| w * (r - avg)).collect())
    }

    /// Compact-form input at step `k` (uses steps `k` and `k+1`).
    pub fn compact_input(&self, k: usize) -> Result<CompactInput> {
        let w_now = self.weights(k)?.to_vec();
        let w_next = self.weights(k + 1)?.to_vec();
        let r_now = self.sampled_references(k);
        let r_next = self.sampled_references(k + 1);
        let weighted_reference_diff = (0..self.topology.n())
            .map(|i| w_next[i] * r_next[i] - w_now[i] * r_now[i])
            .collect();
        let average_diff =
            weighted_average(&w_next, &r_next) - weighted_average(&w_now, &r_now);
        let d_now = self.sampled_disagreement(k)?;
        let d_next = self.sampled_disagreement(k + 1)?;
        let disagreement_diff = d_next.iter().zip(&d_now).map(|(a, b)| a - b).collect();
        Ok(CompactInput { weighted_reference_diff, average_diff, disagreement_diff })
    }
}

/// Agentwise state at step `k`; `x = z + eta ∘ r` holds by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DtState {
    pub k: usize,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub v: Vec<f64>,
}

impl DtState {
    /// Initial state: `z(0) = x0 - eta(0) ∘ r(0)`.
    pub fn initial(scenario: &DtScenario, x0: &[f64], v0: &[f64]) -> Result<Self> {
        let n = scenario.topology.n();
        if x0.len() != n || v0.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x0.len().min(v0.len()) });
        }
        if x0.iter().chain(v0).any(|s| !s.is_finite()) {
            return Err(Error::NonFiniteInput("initial state"));
        }
        let weights = scenario.weights(0)?;
        let refs = scenario.sampled_references(0);
        let z = (0..n).map(|i| x0[i] - weights[i] * refs[i]).collect();
        Ok(DtState { k: 0, x: x0.to_vec(), z, v: v0.to_vec() })
    }
}

/// One step of the agentwise recursion.
pub fn step(scenario: &DtScenario, state: &DtState) -> Result<DtState> {
    let k = state.k;
    if k >= scenario.steps {
        return Err(Error::TimeOutOfHorizon {
            t: scenario.comm_time(k + 1),
            horizon: scenario.comm_time(scenario.steps),
        });
    }
    let n = scenario.topology.n();
    let a = scenario.topology.adjacency();
    let delta = scenario.delta_c;
    let weights = scenario.weights(k)?.to_vec();
    let refs = scenario.sampled_references(k);

    let mut z_next = vec![0.0; n];
    let mut v_next = vec![0.0; n];
    for i in 0..n {
        let mut flow = 0.0;
        let mut coupling = 0.0;
        for (j, &aij) in a.row(i).iter().enumerate() {
            if aij != 0.0 {
                flow += aij * (state.x[i] - state.x[j]);
                coupling += aij * (state.v[i] - state.v[j]);
            }
        }
        z_next[i] = state.z[i]
            - delta * weights[i] * (state.x[i] - refs[i])
            - delta * flow
            - delta * coupling;
        v_next[i] = state.v[i] + delta * flow;
    }

    let weights_next = scenario.weights(k + 1)?;
    let refs_next = scenario.sampled_references(k + 1);
    let x_next: Vec<f64> =
        (0..n).map(|i| z_next[i] + weights_next[i] * refs_next[i]).collect();

    if x_next.iter().chain(&z_next).chain(&v_next).any(|s| !s.is_finite()) {
        return Err(Error::NonFiniteState { t: scenario.comm_time(k + 1) });
    }
    Ok(DtState { k: k + 1, x: x_next, z: z_next, v: v_next })
}

/// Runs the scenario from `(x0, v0)` and records every step.
pub fn simulate(scenario: &DtScenario, x0: &[f64], v0: &[f64]) -> Result<Trajectory> {
    let mut traj = Trajectory::new();
    let mut state = DtState::initial(scenario, x0, v0)?;
    record(scenario, &state, &mut traj)?;
    for _ in 0..scenario.steps {
        state = step(scenario, &state)?;
        record(scenario, &state, &mut traj)?;
    }
    Ok(traj)
}

fn record(scenario: &DtScenario, state: &DtState, traj: &mut Trajectory) -> Result<()> {
    let avg = scenario.sampled_average(state.k)?;
    let err = state.x.iter().map(|x| (x - avg).abs()).collect();
    traj.push(Sample {
        t: scenario.comm_time(state.k),
        kind: SampleKind::Interior,
        x: state.x.clone(),
        v: state.v.clone(),
        avg,
        err,
    });
    Ok(())
}

/// The transformed stepper: `(I + δ A_σ(k))` plus the first-difference
/// input through `B`. Algebraically identical to the agentwise recursion;
/// serves as its equivalence oracle.
#[derive(Clone, Debug)]
pub struct CompactForm {
    set: SubsystemSet,
}

impl CompactForm {
    pub fn new(scenario: &DtScenario) -> Result<Self> {
        let decomposition = SpectralDecomposition::new(&scenario.topology);
        let pool = scenario.schedule.distinct_weight_vectors();
        let set = SubsystemSet::new(decomposition, &pool)?;
        Ok(CompactForm { set })
    }

    pub fn order(&self) -> usize {
        self.set.order()
    }

    pub fn subsystems(&self) -> &SubsystemSet {
        &self.set
    }

    /// `[Tᵀ(x - avg 1); Nᵀ(Lv - w)]` at step `k`, length `2n - 1`.
    pub fn transform_state(
        &self,
        scenario: &DtScenario,
        x: &[f64],
        v: &[f64],
        k: usize,
    ) -> Result<Vec<f64>> {
        let n = scenario.topology.n();
        let avg = scenario.sampled_average(k)?;
        let w = scenario.sampled_disagreement(k)?;
        let e: Vec<f64> = x.iter().map(|xi| xi - avg).collect();
        let lv = scenario.topology.laplacian().mul_vec(v);
        let q_full: Vec<f64> = lv.iter().zip(&w).map(|(a, b)| a - b).collect();

        let t_t = self.set.decomposition.transform().transpose();
        let e_bar = t_t.mul_vec(&e);
        let q_bar = t_t.mul_vec(&q_full);
        let mut out = Vec::with_capacity(2 * n - 1);
        out.extend_from_slice(&e_bar);
        out.extend_from_slice(&q_bar[1..]);
        Ok(out)
    }

    /// The invariant first `q` coordinate `q_1 = rᵀ(Lv - w)`; zero whenever
    /// `1ᵀw = 0`, which the oracle guarantees.
    pub fn q1(&self, scenario: &DtScenario, v: &[f64], k: usize) -> Result<f64> {
        let w = scenario.sampled_disagreement(k)?;
        let lv = scenario.topology.laplacian().mul_vec(v);
        let q_full: Vec<f64> = lv.iter().zip(&w).map(|(a, b)| a - b).collect();
        let t_t = self.set.decomposition.transform().transpose();
        Ok(t_t.mul_vec(&q_full)[0])
    }

    /// Advances the transformed state from step `k` to `k + 1`.
    pub fn step(&self, scenario: &DtScenario, state: &[f64], k: usize) -> Result<Vec<f64>> {
        let m = self.order();
        if state.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: state.len() });
        }
        let weights = scenario.weights(k)?;
        let idx = self.set.find(weights).ok_or_else(|| {
            Error::Scenario(String::from("step weights missing from the subsystem pool"))
        })?;
        let a = &self.set.subsystems[idx].matrix;

        let drift = a.mul_vec(state);
        let mut next: Vec<f64> = state
            .iter()
            .zip(&drift)
            .map(|(s, d)| s + scenario.delta_c * d)
            .collect();

        let input = scenario.compact_input(k)?;
        let n = scenario.topology.n();
        let mut stacked = Vec::with_capacity(2 * n);
        for i in 0..n {
            stacked.push(input.weighted_reference_diff[i] - input.average_diff);
        }
        for i in 0..n {
            stacked.push(-input.disagreement_diff[i]);
        }
        let forced = self.set.input_transform.mul_vec(&stacked);
        for (dst, f) in next.iter_mut().zip(&forced) {
            *dst += f;
        }
        Ok(next)
    }
}
