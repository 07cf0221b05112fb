//! Switched-linear-system analysis.
//!
//! In the transformed coordinates `e = Tᵀ(x - avg 1)`, `q = Tᵀ(Lv - w)`
//! the consensus error dynamics are a switched linear system with one
//! subsystem per distinct weight vector:
//!
//! ```text
//! A_p = [ -Tᵀ(E_p + L)T   -[0; I] ]      B = [ Tᵀ  0  ]
//!       [ [0  L⁺L⁺]         0     ]          [ 0   Nᵀ ]
//! ```
//!
//! of order `2n - 1` (the first `q` coordinate is invariant and dropped).
//! Every subsystem is Hurwitz on a connected graph, and the Euler map
//! `I + δ A_p` is Schur exactly for `δ` below the step limit
//! `min -2 Re(μ) / |μ|²` over all subsystem eigenvalues.
//!
//! Exponential envelopes `‖Φ(t, τ)‖ ≤ κ e^{-λ (t-τ)}` (and the discrete
//! analogue `κ ω^{k-j}`) exist but are not constructive; they are fitted
//! here empirically from sampled transition matrices, inflated by a safety
//! factor, and re-verified against the fit samples. Norm samples use the
//! Frobenius norm, an upper bound on the induced 2-norm the error bounds
//! need. Bound evaluation (the right-hand sides consumed by the acceptance
//! checks) lives here as well.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dt_sim::DtScenario;
use crate::graph::{SpectralDecomposition, Topology};
use crate::linalg::{self, sort_complex, Complex, Matrix};
use crate::math;
use crate::schedule::ModeSchedule;
use crate::signals::ReferenceEnsemble;
use crate::trajectory::{SampleKind, Trajectory};
use crate::{Error, Result};

/// Margin below which real parts / radius gaps count as marginal rather
/// than decisively stable.
pub const STABILITY_MARGIN: f64 = 1e-10;

/// Residual tolerance (relative to ‖A‖_F) for accepting an eigenvalue.
const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

/// Eigenvalues with multiplicity, sorted by real then imaginary part.
///
/// Each value is verified by a residual check `‖(A - μI)v‖ ≤ 1e-8 ‖A‖`
/// with `v` a unit vector from inverse iteration.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex>> {
    let mut values = linalg::general_eigenvalues(a)?;
    sort_complex(&mut values);
    let tol = EIGEN_RESIDUAL_TOL * math::max(a.frobenius_norm(), f64::MIN_POSITIVE);
    for &mu in &values {
        let residual = linalg::eigen_residual(a, mu)?;
        if residual > tol {
            return Err(Error::EigenResidual { residual, tolerance: tol });
        }
    }
    Ok(values)
}

/// Largest real part over the spectrum.
pub fn hurwitz_margin(a: &Matrix) -> Result<f64> {
    let values = eigenvalues(a)?;
    Ok(values.iter().fold(f64::NEG_INFINITY, |m, v| math::max(m, v.re)))
}

/// All eigenvalue real parts below `-1e-10`.
pub fn is_hurwitz(a: &Matrix) -> Result<bool> {
    Ok(hurwitz_margin(a)? < -STABILITY_MARGIN)
}

/// Spectral radius.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    let values = eigenvalues(a)?;
    Ok(values.iter().fold(0.0, |m, v| math::max(m, v.abs())))
}

/// Spectral radius below `1 - 1e-10`.
pub fn is_schur(a: &Matrix) -> Result<bool> {
    Ok(spectral_radius(a)? < 1.0 - STABILITY_MARGIN)
}

/// One error subsystem: its weight vector, matrix, and spectrum.
#[derive(Clone, Debug)]
pub struct Subsystem {
    pub index: usize,
    pub weights: Vec<f64>,
    pub matrix: Matrix,
    pub eigenvalues: Vec<Complex>,
}

/// Assembles the error subsystem for one weight vector.
///
/// Rejects all-zero weight vectors: the algorithm requires a nonempty
/// active set at all times.
pub fn subsystem_matrix(decomposition: &SpectralDecomposition, weights: &[f64]) -> Result<Subsystem> {
    let n = decomposition.n();
    if weights.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: weights.len() });
    }
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return Err(Error::NonFiniteInput("subsystem weights"));
        }
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::NoActiveAgent { epoch: 0 });
    }

    let t = decomposition.transform();
    let lp = decomposition.reduced_laplacian();
    let m = 2 * n - 1;

    // Tᵀ(E + L)T assembled as TᵀET + diag(0, L⁺); the Laplacian enters
    // only through the stored reduced block.
    let mut e_p = Matrix::zeros(n, n);
    for i in 0..n {
        e_p[(i, i)] = weights[i];
    }
    let tt_e_t = &(&t.transpose() * &e_p) * t;

    let mut a = Matrix::zeros(m, m);
    for i in 0..n {
        for j in 0..n {
            let mut val = -tt_e_t[(i, j)];
            if i >= 1 && j >= 1 {
                val -= lp[(i - 1, j - 1)];
            }
            a[(i, j)] = val;
        }
    }
    // Top-right block: -[0; I].
    for i in 1..n {
        a[(i, n + i - 1)] = -1.0;
    }
    // Bottom-left block: [0 L⁺L⁺].
    let lp2 = lp * lp;
    for i in 0..(n - 1) {
        for j in 0..(n - 1) {
            a[(n + i, 1 + j)] = lp2[(i, j)];
        }
    }

    let eigenvalues = eigenvalues(&a)?;
    Ok(Subsystem { index: 0, weights: weights.to_vec(), matrix: a, eigenvalues })
}

/// The full subsystem pool plus the shared input transform `B`.
#[derive(Clone, Debug)]
pub struct SubsystemSet {
    pub decomposition: SpectralDecomposition,
    pub subsystems: Vec<Subsystem>,
    /// `B = [[Tᵀ, 0], [0, Nᵀ]]`, `(2n-1) x 2n`, `‖B‖ ≤ 1`.
    pub input_transform: Matrix,
}

impl SubsystemSet {
    pub fn new(decomposition: SpectralDecomposition, weight_set: &[Vec<f64>]) -> Result<Self> {
        let n = decomposition.n();
        let mut subsystems = Vec::with_capacity(weight_set.len());
        for (index, weights) in weight_set.iter().enumerate() {
            let mut sub = subsystem_matrix(&decomposition, weights)?;
            sub.index = index;
            subsystems.push(sub);
        }

        let t_t = decomposition.transform().transpose();
        let basis_t = decomposition.disagreement_basis().transpose();
        let mut b = Matrix::zeros(2 * n - 1, 2 * n);
        b.set_block(0, 0, &t_t);
        b.set_block(n, n, &basis_t);

        Ok(SubsystemSet { decomposition, subsystems, input_transform: b })
    }

    /// Index of the subsystem whose weights equal `weights` exactly.
    pub fn find(&self, weights: &[f64]) -> Option<usize> {
        self.subsystems.iter().position(|s| s.weights == weights)
    }

    pub fn order(&self) -> usize {
        2 * self.decomposition.n() - 1
    }
}

/// Largest Euler step keeping `I + δ A` Schur, from the spectrum of `A`:
/// `min -2 Re(μ) / |μ|²`.
pub fn euler_step_limit(eigenvalues: &[Complex]) -> f64 {
    eigenvalues
        .iter()
        .map(|mu| -2.0 * mu.re / mu.abs_sq())
        .fold(f64::INFINITY, math::min)
}

/// The maximum stable communication step over a subsystem pool.
///
/// Every subsystem must be Hurwitz (that is the theory's guarantee on a
/// connected graph); a non-Hurwitz subsystem indicates numerical pathology
/// and aborts.
pub fn max_stable_step(
    decomposition: &SpectralDecomposition,
    weight_set: &[Vec<f64>],
) -> Result<f64> {
    let set = SubsystemSet::new(decomposition.clone(), weight_set)?;
    max_stable_step_of(&set)
}

pub fn max_stable_step_of(set: &SubsystemSet) -> Result<f64> {
    let mut d_bar = f64::INFINITY;
    for sub in &set.subsystems {
        let max_re =
            sub.eigenvalues.iter().fold(f64::NEG_INFINITY, |m, v| math::max(m, v.re));
        if max_re >= -STABILITY_MARGIN {
            return Err(Error::SubsystemNotHurwitz { index: sub.index, max_real: max_re });
        }
        d_bar = math::min(d_bar, euler_step_limit(&sub.eigenvalues));
    }
    Ok(d_bar)
}

// ---------------------------------------------------------------------------
// Empirical exponential envelopes
// ---------------------------------------------------------------------------

/// Which transition matrix the certificate describes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CertificateMode {
    Continuous,
    Discrete { delta_c: f64 },
}

/// Decay law of a fitted certificate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CertificateRate {
    /// `‖Φ(t, τ)‖ ≤ κ e^{-λ (t - τ)}`.
    Continuous { lambda: f64 },
    /// `‖Φ(k, j)‖ ≤ κ ω^{k-j}` at communication step `delta_c`.
    Discrete { omega: f64, delta_c: f64 },
}

/// How a certificate was fitted, for reporting.
#[derive(Clone, Debug, PartialEq)]
pub struct FitProvenance {
    pub label: String,
    pub schedules: usize,
    pub grid_points: usize,
    pub horizon: f64,
    pub safety_factor: f64,
    pub rate_shade: f64,
}

/// Empirical exponential envelope of the switched error dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilityCertificate {
    pub kappa: f64,
    pub rate: CertificateRate,
    pub provenance: FitProvenance,
}

impl StabilityCertificate {
    pub fn lambda(&self) -> Option<f64> {
        match self.rate {
            CertificateRate::Continuous { lambda } => Some(lambda),
            CertificateRate::Discrete { .. } => None,
        }
    }

    pub fn omega(&self) -> Option<f64> {
        match self.rate {
            CertificateRate::Continuous { .. } => None,
            CertificateRate::Discrete { omega, .. } => Some(omega),
        }
    }
}

/// Knobs of the envelope fit.
#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Multiplier on the tightest κ after fitting (default 1.25).
    pub safety_factor: f64,
    /// Target number of grid points per schedule.
    pub grid_points: usize,
    /// Fraction of the largest gap from which the tail slope is fitted.
    pub tail_fraction: f64,
    /// Rate shading: the reported λ is `rate_shade` times the fitted slope
    /// (the discrete ω is raised to `rate_shade`), trading tightness for
    /// robustness on held-out schedules.
    pub rate_shade: f64,
    /// Free-form provenance label (scenario seeds etc.).
    pub label: String,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            safety_factor: 1.25,
            grid_points: 120,
            tail_fraction: 0.5,
            rate_shade: 0.95,
            label: String::new(),
        }
    }
}

/// Fits an exponential envelope over the transition matrices induced by one
/// schedule. See [`fit_certificate_multi`].
pub fn fit_certificate(
    decomposition: &SpectralDecomposition,
    weight_set: &[Vec<f64>],
    schedule: &ModeSchedule,
    mode: CertificateMode,
    options: &FitOptions,
) -> Result<StabilityCertificate> {
    fit_certificate_multi(decomposition, weight_set, &[schedule], mode, options)
}

/// Fits one envelope dominating the sampled transition-matrix norms of all
/// given schedules.
///
/// The fundamental solution is propagated from the identity (all canonical
/// unit initial states at once), `‖Φ(t, τ)‖_F` is sampled on a grid of
/// `(τ, t)` pairs, the tail of the per-gap upper envelope gives the decay
/// rate, and κ is the smallest constant dominating every sample at the
/// shaded rate, inflated by the safety factor. Growth (a non-negative
/// fitted rate) reports failure: the schedule switches too fast for the
/// subsystem pool.
pub fn fit_certificate_multi(
    decomposition: &SpectralDecomposition,
    weight_set: &[Vec<f64>],
    schedules: &[&ModeSchedule],
    mode: CertificateMode,
    options: &FitOptions,
) -> Result<StabilityCertificate> {
    if schedules.is_empty() {
        return Err(Error::EmptySchedule);
    }
    let set = SubsystemSet::new(decomposition.clone(), weight_set)?;
    if let CertificateMode::Discrete { delta_c } = mode {
        if !delta_c.is_finite() || delta_c <= 0.0 {
            return Err(Error::InvalidStep(delta_c));
        }
        let d_bar = max_stable_step_of(&set)?;
        if delta_c >= d_bar {
            return Err(Error::StepExceedsStabilityLimit { delta_c, d_bar });
        }
    } else {
        // Validates the Hurwitz property en passant.
        max_stable_step_of(&set)?;
    }

    let mut samples: Vec<(f64, f64)> = Vec::new(); // (gap, norm)
    let mut tail_rates: Vec<f64> = Vec::new();
    let mut horizon = 0.0f64;
    for schedule in schedules {
        horizon = math::max(horizon, schedule.horizon_end());
        let grid = match mode {
            CertificateMode::Continuous => {
                sample_transition_norms_ct(&set, schedule, options.grid_points)?
            }
            CertificateMode::Discrete { delta_c } => {
                sample_transition_norms_dt(&set, schedule, delta_c, options.grid_points)?
            }
        };
        let rate = tail_slope(&grid, options.tail_fraction)?;
        tail_rates.push(rate);
        samples.extend(grid);
    }

    // Slowest observed decay across schedules, capped by the slowest
    // single-subsystem rate: a schedule from the same pool may dwell in the
    // slow mode for its whole horizon, so no faster envelope rate can
    // dominate the family. (The observed tail of a switched run reflects a
    // time average over modes and regularly exceeds the slow-mode rate.)
    let structural = match mode {
        CertificateMode::Continuous => {
            let mut slowest = f64::INFINITY;
            for sub in &set.subsystems {
                let abscissa =
                    sub.eigenvalues.iter().fold(f64::NEG_INFINITY, |m, v| math::max(m, v.re));
                slowest = math::min(slowest, -abscissa);
            }
            slowest
        }
        CertificateMode::Discrete { delta_c } => {
            let mut rho_max = 0.0f64;
            for sub in &set.subsystems {
                for mu in &sub.eigenvalues {
                    let mapped =
                        math::hypot(1.0 + delta_c * mu.re, delta_c * mu.im);
                    rho_max = math::max(rho_max, mapped);
                }
            }
            // Per-step e-fold rate of the slowest Euler map.
            -math::ln(rho_max)
        }
    };
    let observed = tail_rates.iter().fold(f64::INFINITY, |m, r| math::min(m, *r));
    let slowest = math::min(observed, structural);
    if slowest.is_nan() || slowest <= 1e-12 {
        return Err(Error::NoDecayingEnvelope { fitted_rate: slowest });
    }
    let shaded = options.rate_shade * slowest;

    let rate = match mode {
        CertificateMode::Continuous => CertificateRate::Continuous { lambda: shaded },
        CertificateMode::Discrete { delta_c } => {
            let omega = math::exp(-shaded);
            if omega >= 1.0 {
                return Err(Error::NoDecayingEnvelope { fitted_rate: slowest });
            }
            CertificateRate::Discrete { omega, delta_c }
        }
    };

    // Tightest κ dominating every sample at the shaded rate, then inflated.
    let mut kappa_needed = 1.0f64;
    for &(gap, norm) in &samples {
        kappa_needed = math::max(kappa_needed, norm * math::exp(shaded * gap));
    }
    let kappa = options.safety_factor * kappa_needed;

    // Domination re-verification on the fit set.
    for &(gap, norm) in &samples {
        if norm > kappa * math::exp(-shaded * gap) * (1.0 + 1e-12) {
            return Err(Error::Scenario(String::from(
                "fitted envelope fails to dominate its own samples",
            )));
        }
    }

    Ok(StabilityCertificate {
        kappa,
        rate,
        provenance: FitProvenance {
            label: options.label.clone(),
            schedules: schedules.len(),
            grid_points: options.grid_points,
            horizon,
            safety_factor: options.safety_factor,
            rate_shade: options.rate_shade,
        },
    })
}

/// `(gap, ‖Φ‖_F)` samples of the transition matrices a schedule induces,
/// the raw material of the envelope fit. Exposed so a fitted certificate
/// can be checked against schedules it never saw.
pub fn transition_norm_samples(
    decomposition: &SpectralDecomposition,
    weight_set: &[Vec<f64>],
    schedule: &ModeSchedule,
    mode: CertificateMode,
    grid_points: usize,
) -> Result<Vec<(f64, f64)>> {
    let set = SubsystemSet::new(decomposition.clone(), weight_set)?;
    match mode {
        CertificateMode::Continuous => sample_transition_norms_ct(&set, schedule, grid_points),
        CertificateMode::Discrete { delta_c } => {
            sample_transition_norms_dt(&set, schedule, delta_c, grid_points)
        }
    }
}

/// Number of release times `τ` from which transition matrices are
/// propagated during a fit.
const RELEASE_POINTS: usize = 16;

/// `(gap, ‖Φ(t, τ)‖_F)` samples for the continuous-time dynamics.
///
/// `Φ(·, τ)` is RK4-propagated forward from the identity at each of a set
/// of release times `τ` (never by inverting a fundamental matrix, whose
/// condition number grows exponentially along the horizon).
fn sample_transition_norms_ct(
    set: &SubsystemSet,
    schedule: &ModeSchedule,
    grid_points: usize,
) -> Result<Vec<(f64, f64)>> {
    let m = set.order();
    let horizon = schedule.horizon_end();
    let grid_dt = horizon / grid_points.max(8) as f64;

    // Integration step: resolve the fastest subsystem mode comfortably.
    let mut max_abs_mu = 1.0f64;
    for sub in &set.subsystems {
        for mu in &sub.eigenvalues {
            max_abs_mu = math::max(max_abs_mu, mu.abs());
        }
    }
    let h_int = math::min(grid_dt, 0.25 / max_abs_mu);

    let mut grid_times = vec![0.0];
    for k in 1..=grid_points {
        grid_times.push(horizon * k as f64 / grid_points as f64);
    }
    for t in schedule.switch_times() {
        if t > 0.0 && t < horizon {
            grid_times.push(t);
        }
    }
    grid_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid_times.dedup();

    let tau_stride = (grid_times.len() / RELEASE_POINTS).max(1);
    let mut samples = Vec::new();
    let mut tau_idx = 0;
    while tau_idx < grid_times.len() {
        let mut x = Matrix::identity(m);
        samples.push((0.0, x.frobenius_norm()));
        for w in grid_times[tau_idx..].windows(2) {
            let (a, b) = (w[0], w[1]);
            // The grid contains every switch time, so one epoch covers [a, b).
            let epoch_weights = schedule.weights_at(a)?;
            let idx = set.find(epoch_weights).ok_or_else(|| {
                Error::Scenario(String::from("epoch weights not in subsystem set"))
            })?;
            let a_mat = &set.subsystems[idx].matrix;
            let steps = math::max(math::ceil((b - a) / h_int), 1.0) as usize;
            let h = (b - a) / steps as f64;
            for _ in 0..steps {
                x = rk4_matrix_step(a_mat, &x, h);
            }
            if !x.is_finite() {
                return Err(Error::NonFiniteState { t: b });
            }
            samples.push((b - grid_times[tau_idx], x.frobenius_norm()));
        }
        tau_idx += tau_stride;
    }
    Ok(samples)
}

/// `(gap in steps, ‖Φ(k, j)‖_F)` samples for the discrete stepper,
/// propagated forward from each release step `j`.
fn sample_transition_norms_dt(
    set: &SubsystemSet,
    schedule: &ModeSchedule,
    delta_c: f64,
    grid_points: usize,
) -> Result<Vec<(f64, f64)>> {
    let m = set.order();
    let total_steps = (schedule.horizon_end() / delta_c) as usize;
    if total_steps == 0 {
        return Err(Error::TimeOutOfHorizon { t: delta_c, horizon: schedule.horizon_end() });
    }
    let record_stride = (total_steps / grid_points.max(8)).max(1);
    let tau_stride = (total_steps / RELEASE_POINTS).max(1);

    let mut samples = Vec::new();
    let mut tau = 0;
    while tau < total_steps {
        let mut x = Matrix::identity(m);
        samples.push((0.0, x.frobenius_norm()));
        for k in tau..total_steps {
            let t = k as f64 * delta_c;
            let weights = schedule.weights_at(t)?;
            let idx = set.find(weights).ok_or_else(|| {
                Error::Scenario(String::from("epoch weights not in subsystem set"))
            })?;
            let a_mat = &set.subsystems[idx].matrix;
            // X <- (I + delta A) X
            x = x.add(&(a_mat * &x).scaled(delta_c));
            if !x.is_finite() {
                return Err(Error::NonFiniteState { t });
            }
            let gap = k + 1 - tau;
            if gap % record_stride == 0 || k + 1 == total_steps {
                samples.push((gap as f64, x.frobenius_norm()));
            }
        }
        tau += tau_stride;
    }
    Ok(samples)
}

fn rk4_matrix_step(a: &Matrix, x: &Matrix, h: f64) -> Matrix {
    let k1 = a * x;
    let k2 = a * &x.add(&k1.scaled(h / 2.0));
    let k3 = a * &x.add(&k2.scaled(h / 2.0));
    let k4 = a * &x.add(&k3.scaled(h));
    let mut out = x.clone();
    out = out.add(&k1.scaled(h / 6.0));
    out = out.add(&k2.scaled(h / 3.0));
    out = out.add(&k3.scaled(h / 3.0));
    out = out.add(&k4.scaled(h / 6.0));
    out
}

/// Decay rate from the per-gap upper envelope: bin the samples by gap, take
/// the max log-norm per bin, and fit a least-squares line through the tail
/// bins. Returns the negated slope (positive = decay).
fn tail_slope(samples: &[(f64, f64)], tail_fraction: f64) -> Result<f64> {
    let max_gap = samples.iter().fold(0.0f64, |m, s| math::max(m, s.0));
    if max_gap <= 0.0 {
        return Err(Error::Scenario(String::from("no positive-gap norm samples")));
    }
    const BINS: usize = 24;
    let mut bin_best: Vec<Option<(f64, f64)>> = vec![None; BINS]; // (gap, ln norm)
    for &(gap, norm) in samples {
        if gap <= 0.0 || norm <= 0.0 {
            continue;
        }
        let b = ((gap / max_gap) * BINS as f64) as usize;
        let b = b.min(BINS - 1);
        let ln = math::ln(norm);
        match bin_best[b] {
            Some((_, best)) if best >= ln => {}
            _ => bin_best[b] = Some((gap, ln)),
        }
    }
    let cutoff = tail_fraction * max_gap;
    let mut points: Vec<(f64, f64)> =
        bin_best.iter().flatten().filter(|(g, _)| *g >= cutoff).copied().collect();
    if points.len() < 2 {
        points = bin_best.iter().flatten().copied().collect();
    }
    if points.len() < 2 {
        return Err(Error::Scenario(String::from("not enough envelope points to fit")));
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return Err(Error::Scenario(String::from("degenerate envelope fit")));
    }
    let slope = (n * sxy - sx * sy) / denom;
    Ok(-slope)
}

// ---------------------------------------------------------------------------
// Error-bound evaluation
// ---------------------------------------------------------------------------

/// `‖[x0 - avg(0) 1; L v0 - w(0)]‖`, the initial-condition norm entering
/// both bounds.
fn initial_norm(
    topology: &Topology,
    schedule: &ModeSchedule,
    ensemble: &ReferenceEnsemble,
    x0: &[f64],
    v0: &[f64],
) -> Result<f64> {
    let avg0 = ensemble.active_average(schedule, 0.0)?;
    let w0 = ensemble.disagreement(schedule, 0.0)?;
    let e0: Vec<f64> = x0.iter().map(|x| x - avg0).collect();
    let lv = topology.laplacian().mul_vec(v0);
    let q0: Vec<f64> = lv.iter().zip(&w0).map(|(a, b)| a - b).collect();
    Ok(linalg::stacked_norm(&e0, &q0))
}

/// `sqrt(n Δavg² + ‖Δw‖²)` for switch `k`.
fn jump_norm(n: usize, avg_jump: f64, disagreement_jump: &[f64]) -> f64 {
    math::sqrt(
        n as f64 * avg_jump * avg_jump
            + disagreement_jump.iter().map(|d| d * d).sum::<f64>(),
    )
}

/// Continuous-time tracking-error bound at time `t`:
///
/// ```text
/// κ e^{-λt} ‖init‖ + κ Σ_{t_k ≤ t} e^{-λ(t - t_k)} ‖[Δavg_k 1; Δw_k]‖
///   + (κ/λ) sup_{τ ≤ t} ‖[E ṙ - avġ 1; -ẇ̃]‖
/// ```
///
/// The sup is taken over the grid `0, sup_step, 2 sup_step, …` up to `t`,
/// skipping switch instants; the continuum sup can exceed it by the grid
/// discretization gap.
#[allow(clippy::too_many_arguments)]
pub fn ct_bound(
    certificate: &StabilityCertificate,
    topology: &Topology,
    schedule: &ModeSchedule,
    ensemble: &ReferenceEnsemble,
    x0: &[f64],
    v0: &[f64],
    t: f64,
    sup_step: f64,
) -> Result<f64> {
    let lambda = certificate
        .lambda()
        .ok_or(Error::Scenario(String::from("continuous bound needs a continuous certificate")))?;
    if !sup_step.is_finite() || sup_step <= 0.0 {
        return Err(Error::InvalidStep(sup_step));
    }
    let kappa = certificate.kappa;
    let n = topology.n();

    let mut bound = kappa * math::exp(-lambda * t)
        * initial_norm(topology, schedule, ensemble, x0, v0)?;

    let events = ensemble.jump_event_times(schedule);
    for &tk in &events {
        if tk > t {
            break;
        }
        let jump = ensemble.jump_at_time(schedule, tk)?;
        bound += kappa
            * math::exp(-lambda * (t - tk))
            * jump_norm(n, jump.avg_jump, &jump.disagreement_jump);
    }

    let mut sup = 0.0f64;
    let mut tau = 0.0;
    while tau <= t {
        if !events.contains(&tau) {
            let d = ensemble.smooth_derivatives(schedule, tau)?;
            sup = math::max(
                sup,
                linalg::stacked_norm(&d.feedforward_mismatch, &d.neg_disagreement_rate),
            );
        }
        tau += sup_step;
    }
    Ok(bound + kappa / lambda * sup)
}

/// The continuous-time bound evaluated along a simulated trajectory,
/// aligned sample by sample. Pre-switch samples exclude the jump occurring
/// at their own time; interior samples feed the running sup.
pub fn ct_bound_series(
    certificate: &StabilityCertificate,
    topology: &Topology,
    schedule: &ModeSchedule,
    ensemble: &ReferenceEnsemble,
    trajectory: &Trajectory,
) -> Result<Vec<f64>> {
    let lambda = certificate
        .lambda()
        .ok_or(Error::Scenario(String::from("continuous bound needs a continuous certificate")))?;
    let kappa = certificate.kappa;
    let n = topology.n();
    let first = trajectory
        .first()
        .ok_or(Error::Scenario(String::from("empty trajectory")))?;
    let init = initial_norm(topology, schedule, ensemble, &first.x, &first.v)?;
    let t0 = first.t;

    let mut jumps = Vec::new();
    for tk in ensemble.jump_event_times(schedule) {
        if tk <= t0 {
            continue;
        }
        let j = ensemble.jump_at_time(schedule, tk)?;
        let norm = jump_norm(n, j.avg_jump, &j.disagreement_jump);
        if norm > 0.0 {
            jumps.push((tk, norm));
        }
    }

    let mut sup = 0.0f64;
    let mut out = Vec::with_capacity(trajectory.len());
    for sample in trajectory.samples() {
        let t = sample.t;
        if sample.kind == SampleKind::Interior {
            let d = ensemble.smooth_derivatives(schedule, t)?;
            sup = math::max(
                sup,
                linalg::stacked_norm(&d.feedforward_mismatch, &d.neg_disagreement_rate),
            );
        }
        let mut bound = kappa * math::exp(-lambda * (t - t0)) * init;
        for &(tk, jn) in &jumps {
            if tk > t {
                break;
            }
            // Heaviside convention: a jump at exactly t counts on the
            // post-switch side; for pure signal steps (interior samples)
            // the sample itself is already right-continuous.
            let active = tk < t || sample.kind != SampleKind::PreSwitch;
            if active {
                bound += kappa * math::exp(-lambda * (t - tk)) * jn;
            }
        }
        out.push(bound + kappa / lambda * sup);
    }
    Ok(out)
}

/// Discrete-time tracking-error bound at step `k`:
///
/// ```text
/// κ ω^k ‖init‖ + κ (1 - ω^k)/(1 - ω) sup_{l ≤ k-1} ‖[ΔEr(l) - Δavg(l) 1; -Δw(l)]‖
/// ```
pub fn dt_bound(
    certificate: &StabilityCertificate,
    scenario: &DtScenario,
    x0: &[f64],
    v0: &[f64],
    k: usize,
) -> Result<f64> {
    let series = dt_bound_prefix(certificate, scenario, x0, v0, k)?;
    Ok(*series.last().expect("prefix is nonempty"))
}

/// Discrete bound for all steps `0..=k`, sharing the running sup.
pub fn dt_bound_prefix(
    certificate: &StabilityCertificate,
    scenario: &DtScenario,
    x0: &[f64],
    v0: &[f64],
    k: usize,
) -> Result<Vec<f64>> {
    let (omega, cert_delta) = match certificate.rate {
        CertificateRate::Discrete { omega, delta_c } => (omega, delta_c),
        CertificateRate::Continuous { .. } => {
            return Err(Error::Scenario(String::from(
                "discrete bound needs a discrete certificate",
            )))
        }
    };
    if cert_delta != scenario.delta_c() {
        return Err(Error::Scenario(String::from(
            "certificate was fitted at a different communication step",
        )));
    }
    let kappa = certificate.kappa;

    let avg0 = scenario.sampled_average(0)?;
    let w0 = scenario.sampled_disagreement(0)?;
    let e0: Vec<f64> = x0.iter().map(|x| x - avg0).collect();
    let lv = scenario.topology().laplacian().mul_vec(v0);
    let q0: Vec<f64> = lv.iter().zip(&w0).map(|(a, b)| a - b).collect();
    let init = linalg::stacked_norm(&e0, &q0);

    let mut out = Vec::with_capacity(k + 1);
    let mut sup = 0.0f64;
    let mut omega_pow = 1.0f64;
    for step in 0..=k {
        if step > 0 {
            let l = step - 1;
            let input = scenario.compact_input(l)?;
            let top: Vec<f64> = input
                .weighted_reference_diff
                .iter()
                .map(|d| d - input.average_diff)
                .collect();
            let bottom: Vec<f64> = input.disagreement_diff.iter().map(|d| -d).collect();
            sup = math::max(sup, linalg::stacked_norm(&top, &bottom));
            omega_pow *= omega;
        }
        let geometric = if step == 0 { 0.0 } else { (1.0 - omega_pow) / (1.0 - omega) };
        out.push(kappa * omega_pow * init + kappa * geometric * sup);
    }
    Ok(out)
}

/// Matrix exponential `e^{A t}` for cross-checking the integrator on small
/// no-switch systems. Test-oracle scale only.
pub fn expm_oracle(a: &Matrix, t: f64) -> Result<Matrix> {
    const MAX_ORDER: usize = 12;
    if a.rows() > MAX_ORDER {
        return Err(Error::ExpmOrderTooLarge { size: a.rows(), max: MAX_ORDER });
    }
    linalg::expm(&a.scaled(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_inf;
    use crate::schedule::Epoch;
    use alloc::vec;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    /// Real roots of a monic cubic by Newton iteration with deflation;
    /// oracle for the companion-matrix test.
    fn cubic_roots(b: f64, c: f64, d: f64) -> Vec<Complex> {
        // One real root always exists; find it by bisection + Newton.
        let f = |x: f64| ((x + b) * x + c) * x + d;
        let mut lo = -1.0;
        let mut hi = 1.0;
        while f(lo) > 0.0 {
            lo *= 2.0;
        }
        while f(hi) < 0.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        // Deflate: x^2 + px + q
        let p = b + r;
        let q = c + r * p;
        let disc = p * p - 4.0 * q;
        let mut roots = vec![Complex::new(r, 0.0)];
        if disc >= 0.0 {
            let s = libm::sqrt(disc);
            roots.push(Complex::new((-p + s) / 2.0, 0.0));
            roots.push(Complex::new((-p - s) / 2.0, 0.0));
        } else {
            let s = libm::sqrt(-disc) / 2.0;
            roots.push(Complex::new(-p / 2.0, s));
            roots.push(Complex::new(-p / 2.0, -s));
        }
        sort_complex(&mut roots);
        roots
    }

    #[test]
    fn companion_cubic_eigenvalues() {
        // Companion matrix of x^3 + 3x^2 + 5x + 2.
        let a = mat(&[&[0.0, 0.0, -2.0], &[1.0, 0.0, -5.0], &[0.0, 1.0, -3.0]]);
        let got = eigenvalues(&a).unwrap();
        let want = cubic_roots(3.0, 5.0, 2.0);
        for (g, w) in got.iter().zip(&want) {
            assert!((g.re - w.re).abs() < 1e-9 && (g.im - w.im).abs() < 1e-9);
        }
        // Routh-Hurwitz for x^3 + a2 x^2 + a1 x + a0: a2, a0 > 0 and a2 a1 > a0.
        let routh_stable = |a2: f64, a1: f64, a0: f64| a2 > 0.0 && a0 > 0.0 && a2 * a1 > a0;
        assert!(routh_stable(3.0, 5.0, 2.0));
        assert!(got.iter().all(|mu| mu.re < 0.0));
        assert!(is_hurwitz(&a).unwrap());
    }

    #[test]
    fn hurwitz_examples() {
        assert!(is_hurwitz(&Matrix::identity(3).scaled(-1.0)).unwrap());
        // Nilpotent shift: zero eigenvalues are not Hurwitz.
        assert!(!is_hurwitz(&mat(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap());

        // -(E + L) for the unit path with E = diag(1, 0): [[-2, 1], [1, -1]],
        // eigenvalues (-3 ± sqrt 5)/2.
        let m = mat(&[&[-2.0, 1.0], &[1.0, -1.0]]);
        assert!(is_hurwitz(&m).unwrap());
        let eig = eigenvalues(&m).unwrap();
        let s5 = libm::sqrt(5.0);
        assert!((eig[0].re - (-3.0 - s5) / 2.0).abs() < 1e-12);
        assert!((eig[1].re - (-3.0 + s5) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn schur_examples() {
        assert!(is_schur(&Matrix::identity(4).scaled(0.5)).unwrap());
        assert!(!is_schur(&Matrix::identity(4)).unwrap());
    }

    #[test]
    fn two_agent_subsystem_matrix() {
        let top = Topology::path(2, 1.0).unwrap();
        let dec = SpectralDecomposition::new(&top);
        let sub = subsystem_matrix(&dec, &[1.0, 0.0]).unwrap();
        let expected = mat(&[
            &[-0.5, -0.5, 0.0],
            &[-0.5, -2.5, -1.0],
            &[0.0, 4.0, 0.0],
        ]);
        assert!(sub.matrix.sub(&expected).max_abs() < 1e-14);

        // Characteristic polynomial x^3 + 3x^2 + 5x + 2: eigenvalues match
        // the cubic-root oracle.
        let want = cubic_roots(3.0, 5.0, 2.0);
        for (g, w) in sub.eigenvalues.iter().zip(&want) {
            assert!((g.re - w.re).abs() < 1e-9 && (g.im - w.im).abs() < 1e-9);
        }

        assert!(matches!(
            subsystem_matrix(&dec, &[0.0, 0.0]),
            Err(Error::NoActiveAgent { .. })
        ));
    }

    #[test]
    fn subsystem_shape_is_2n_minus_1() {
        for n in 2..7 {
            let top = Topology::ring(n, 1.0).unwrap();
            let dec = SpectralDecomposition::new(&top);
            let mut w = vec![0.0; n];
            w[0] = 1.0;
            let sub = subsystem_matrix(&dec, &w).unwrap();
            assert_eq!(sub.matrix.rows(), 2 * n - 1);
            assert_eq!(sub.matrix.cols(), 2 * n - 1);
        }
    }

    #[test]
    fn euler_limit_scalar_case() {
        // Hypothetical single eigenvalue -a: limit is 2/a.
        let d = euler_step_limit(&[Complex::new(-0.8, 0.0)]);
        assert!((d - 2.5).abs() < 1e-12);
    }

    #[test]
    fn euler_limit_min_monotone() {
        let top = Topology::ring(4, 1.0).unwrap();
        let dec = SpectralDecomposition::new(&top);
        let small = vec![vec![1.0, 0.0, 0.0, 0.0]];
        let large = vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 2.0, 1.0, 0.0]];
        let d_small = max_stable_step(&dec, &small).unwrap();
        let d_large = max_stable_step(&dec, &large).unwrap();
        assert!(d_large <= d_small);
        assert!(d_small > 0.0);
    }

    #[test]
    fn mirrored_weight_subsystems_share_spectrum() {
        // Path of 2: swapping the active agent permutes the network, so the
        // two subsystems are similar.
        let top = Topology::path(2, 1.0).unwrap();
        let dec = SpectralDecomposition::new(&top);
        let a = subsystem_matrix(&dec, &[1.0, 0.0]).unwrap();
        let b = subsystem_matrix(&dec, &[0.0, 1.0]).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x.re - y.re).abs() < 1e-9 && (x.im - y.im).abs() < 1e-9);
        }
    }

    #[test]
    fn schur_boundary_on_two_agent_example() {
        let top = Topology::path(2, 1.0).unwrap();
        let dec = SpectralDecomposition::new(&top);
        let pool = vec![vec![1.0, 0.0]];
        let set = SubsystemSet::new(dec, &pool).unwrap();
        let d_bar = max_stable_step_of(&set).unwrap();
        let a = &set.subsystems[0].matrix;

        let euler = |delta: f64| {
            Matrix::identity(3).add(&a.scaled(delta))
        };
        assert!(is_schur(&euler(0.9 * d_bar)).unwrap());
        assert!(!is_schur(&euler(1.1 * d_bar)).unwrap());
    }

    #[test]
    fn fixed_subsystem_ct_certificate_matches_spectral_abscissa() {
        let top = Topology::ring(5, 1.0).unwrap();
        let dec = SpectralDecomposition::new(&top);
        let weights = vec![1.0, 0.0, 1.0, 0.0, 1.0];
        let sub = subsystem_matrix(&dec, &weights).unwrap();
        let abscissa = -sub
            .eigenvalues
            .iter()
            .fold(f64::NEG_INFINITY, |m, v| if v.re > m { v.re } else { m });

        let horizon = 40.0 / abscissa;
        let schedule = ModeSchedule::constant(weights.clone(), horizon).unwrap();
        // Tightness check: no rate shading.
        let opts = FitOptions { rate_shade: 1.0, ..FitOptions::default() };
        let cert = fit_certificate(
            &dec,
            core::slice::from_ref(&weights),
            &schedule,
            CertificateMode::Continuous,
            &opts,
        )
        .unwrap();
        let lambda = cert.lambda().unwrap();
        assert!(
            (lambda - abscissa).abs() <= 0.1 * abscissa,
            "lambda {lambda} vs abscissa {abscissa}"
        );
        assert!(cert.kappa >= 1.0);
    }

    #[test]
    fn fixed_subsystem_dt_certificate_matches_spectral_radius() {
        let top = Topology::ring(5, 1.0).unwrap();
        let dec = SpectralDecomposition::new(&top);
        let weights = vec![1.0, 1.0, 0.0, 0.0, 1.0];
        let set = SubsystemSet::new(dec.clone(), core::slice::from_ref(&weights)).unwrap();
        let d_bar = max_stable_step_of(&set).unwrap();
        let delta_c = 0.5 * d_bar;

        let euler = Matrix::identity(set.order()).add(&set.subsystems[0].matrix.scaled(delta_c));
        let rho = spectral_radius(&euler).unwrap();

        let steps_needed = 40.0 / (1.0 - rho);
        let schedule =
            ModeSchedule::constant(weights.clone(), steps_needed * delta_c).unwrap();
        let opts = FitOptions { rate_shade: 1.0, ..FitOptions::default() };
        let cert = fit_certificate(
            &dec,
            core::slice::from_ref(&weights),
            &schedule,
            CertificateMode::Discrete { delta_c },
            &opts,
        )
        .unwrap();
        let omega = cert.omega().unwrap();
        assert!((omega - rho).abs() <= 0.1 * rho, "omega {omega} vs rho {rho}");
    }

    #[test]
    fn certificate_dominates_held_out_schedules() {
        let top = Topology::ring(5, 1.0).unwrap();
        let dec = SpectralDecomposition::new(&top);
        let pool = vec![
            vec![1.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 0.0, 1.0],
        ];
        // Five schedules with the same pool and dwell scale but different
        // switch placements; fit on the first three, verify on the rest.
        let schedules: Vec<ModeSchedule> = (0..5)
            .map(|v| {
                let jitter = 0.4 * v as f64;
                let mut epochs = vec![Epoch { start: 0.0, weights: pool[v % 3].clone() }];
                let mut t = 5.0 + jitter;
                let mut mode = v;
                while t < 30.0 {
                    mode += 1;
                    epochs.push(Epoch { start: t, weights: pool[mode % 3].clone() });
                    t += 5.0 + 0.7 * ((v + mode) % 3) as f64;
                }
                ModeSchedule::new(epochs, 30.0).unwrap()
            })
            .collect();

        for &mode in &[
            CertificateMode::Continuous,
            CertificateMode::Discrete { delta_c: 0.4 * max_stable_step(&dec, &pool).unwrap() },
        ] {
            let fit_refs: Vec<&ModeSchedule> = schedules[..3].iter().collect();
            let cert =
                fit_certificate_multi(&dec, &pool, &fit_refs, mode, &FitOptions::default())
                    .unwrap();
            let decay = |gap: f64| match cert.rate {
                CertificateRate::Continuous { lambda } => math::exp(-lambda * gap),
                CertificateRate::Discrete { omega, .. } => math::exp(gap * math::ln(omega)),
            };
            for held_out in &schedules[3..] {
                let samples =
                    transition_norm_samples(&dec, &pool, held_out, mode, 120).unwrap();
                for (gap, norm) in samples {
                    let envelope = cert.kappa * decay(gap);
                    assert!(
                        norm <= envelope,
                        "held-out norm {norm} above envelope {envelope} at gap {gap}"
                    );
                }
            }
        }
    }

    #[test]
    fn unstable_step_is_rejected() {
        let top = Topology::path(2, 1.0).unwrap();
        let dec = SpectralDecomposition::new(&top);
        let weights = vec![1.0, 0.0];
        let d_bar = max_stable_step(&dec, core::slice::from_ref(&weights)).unwrap();
        let schedule = ModeSchedule::constant(weights.clone(), 50.0).unwrap();
        let err = fit_certificate(
            &dec,
            &[weights],
            &schedule,
            CertificateMode::Discrete { delta_c: 1.2 * d_bar },
            &FitOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::StepExceedsStabilityLimit { .. }));
    }

    #[test]
    fn ct_bound_static_perfect_initialization_is_zero() {
        let top = Topology::path(2, 1.0).unwrap();
        let schedule = ModeSchedule::constant(vec![1.0, 1.0], 10.0).unwrap();
        let ensemble = ReferenceEnsemble::new(vec![
            crate::signals::ReferenceSignal::Constant { value: 2.0 },
            crate::signals::ReferenceSignal::Constant { value: 2.0 },
        ])
        .unwrap();
        let cert = StabilityCertificate {
            kappa: 2.0,
            rate: CertificateRate::Continuous { lambda: 0.5 },
            provenance: FitProvenance {
                label: String::new(),
                schedules: 1,
                grid_points: 0,
                horizon: 10.0,
                safety_factor: 1.25,
                rate_shade: 0.95,
            },
        };
        // x0 at the average, v0 = 0 solves Lv = w = 0: bound vanishes.
        for t in [0.0, 1.0, 5.0] {
            let b = ct_bound(&cert, &top, &schedule, &ensemble, &[2.0, 2.0], &[0.0, 0.0], t, 0.1)
                .unwrap();
            assert!(b.abs() < 1e-12);
        }

        // Off-equilibrium start: bound is nonincreasing in t for static
        // signals without switches.
        let b1 = ct_bound(&cert, &top, &schedule, &ensemble, &[0.0, 1.0], &[0.0, 0.0], 1.0, 0.1)
            .unwrap();
        let b2 = ct_bound(&cert, &top, &schedule, &ensemble, &[0.0, 1.0], &[0.0, 0.0], 4.0, 0.1)
            .unwrap();
        assert!(b2 <= b1);
        assert!(b1 > 0.0);
    }

    #[test]
    fn dt_bound_examples() {
        let top = Topology::path(2, 1.0).unwrap();
        let schedule = ModeSchedule::constant(vec![1.0, 1.0], 100.0).unwrap();
        let ensemble = ReferenceEnsemble::new(vec![
            crate::signals::ReferenceSignal::Constant { value: 3.0 },
            crate::signals::ReferenceSignal::Constant { value: 3.0 },
        ])
        .unwrap();
        let scenario =
            crate::dt_sim::DtScenario::new(top, schedule, ensemble, 0.1, 0.1, 50).unwrap();
        let cert = StabilityCertificate {
            kappa: 2.0,
            rate: CertificateRate::Discrete { omega: 0.9, delta_c: 0.1 },
            provenance: FitProvenance {
                label: String::new(),
                schedules: 1,
                grid_points: 0,
                horizon: 100.0,
                safety_factor: 1.25,
                rate_shade: 0.95,
            },
        };

        // Constant equal references, fixed weights, perfect initialization:
        // the bound vanishes for every k.
        for k in [0, 1, 10, 50] {
            let b = dt_bound(&cert, &scenario, &[3.0, 3.0], &[0.0, 0.0], k).unwrap();
            assert!(b.abs() < 1e-12, "bound {b} at k = {k}");
        }

        // k = 0 keeps only the initial-condition term (empty sup).
        let x0 = [1.0, 0.0];
        let b0 = dt_bound(&cert, &scenario, &x0, &[0.0, 0.0], 0).unwrap();
        let avg0 = scenario.sampled_average(0).unwrap();
        let w0 = scenario.sampled_disagreement(0).unwrap();
        let e0: Vec<f64> = x0.iter().map(|x| x - avg0).collect();
        let init = crate::linalg::stacked_norm(&e0, &w0.iter().map(|w| -w).collect::<Vec<_>>());
        assert!((b0 - cert.kappa * init).abs() < 1e-12);
    }

    #[test]
    fn expm_oracle_matches_rk4_fundamental() {
        let a = mat(&[
            &[-0.5, 1.0, 0.0, 0.3],
            &[-1.0, -0.5, 0.2, 0.0],
            &[0.0, 0.1, -1.2, 0.8],
            &[0.2, 0.0, -0.8, -1.2],
        ]);
        let t = 1.7;
        let oracle = expm_oracle(&a, t).unwrap();

        let steps = 1700;
        let h = t / steps as f64;
        let mut x = Matrix::identity(4);
        for _ in 0..steps {
            x = rk4_matrix_step(&a, &x, h);
        }
        assert!(oracle.sub(&x).max_abs() < 1e-8);

        assert!(matches!(
            expm_oracle(&Matrix::zeros(13, 13), 1.0),
            Err(Error::ExpmOrderTooLarge { .. })
        ));
    }

    #[test]
    fn switched_certificate_and_bound_series_dominate_switch_jumps() {
        // Two-subsystem switched schedule; the fitted envelope must cover
        // the sampled norms by construction.
        let top = Topology::ring(4, 1.0).unwrap();
        let dec = SpectralDecomposition::new(&top);
        let pool = vec![vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]];
        let schedule = ModeSchedule::new(
            vec![
                Epoch { start: 0.0, weights: pool[0].clone() },
                Epoch { start: 8.0, weights: pool[1].clone() },
                Epoch { start: 16.0, weights: pool[0].clone() },
            ],
            28.0,
        )
        .unwrap();
        let cert = fit_certificate(
            &dec,
            &pool,
            &schedule,
            CertificateMode::Continuous,
            &FitOptions::default(),
        )
        .unwrap();
        assert!(cert.kappa >= 1.0);
        assert!(cert.lambda().unwrap() > 0.0);

        let ensemble = ReferenceEnsemble::new(vec![
            crate::signals::ReferenceSignal::Constant { value: 1.0 },
            crate::signals::ReferenceSignal::Constant { value: -1.0 },
            crate::signals::ReferenceSignal::Constant { value: 2.0 },
            crate::signals::ReferenceSignal::Constant { value: 0.0 },
        ])
        .unwrap();
        let x0 = vec![0.0; 4];
        let v0 = vec![0.0; 4];
        let traj = crate::ct_sim::integrate(&top, &schedule, &ensemble, &x0, &v0, 28.0, 0.01)
            .unwrap();
        let bounds = ct_bound_series(&cert, &top, &schedule, &ensemble, &traj).unwrap();
        assert_eq!(bounds.len(), traj.len());
        let mut worst_margin = f64::INFINITY;
        for (sample, bound) in traj.samples().iter().zip(&bounds) {
            worst_margin = if bound - sample.max_err() < worst_margin {
                bound - sample.max_err()
            } else {
                worst_margin
            };
        }
        assert!(worst_margin >= 0.0, "bound violated by {}", -worst_margin);

        // The point bound agrees with the series at the horizon end.
        let last = traj.last().unwrap();
        let point = ct_bound(&cert, &top, &schedule, &ensemble, &x0, &v0, last.t, 0.01).unwrap();
        assert!((point - bounds.last().unwrap()).abs() < 1e-9 * (1.0 + point));
        let _ = norm_inf(&last.x);
    }
}
