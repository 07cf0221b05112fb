//! Orchestration of the subcommands: simulation runs (including mid-run
//! agent departures), stability analysis, and certificate fitting with
//! bound-domination verdicts.

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::Serialize;

use acons_core::analysis::{
    self, ct_bound_series, dt_bound_prefix, fit_certificate_multi, CertificateMode,
    FitOptions, StabilityCertificate, SubsystemSet, STABILITY_MARGIN,
};
use acons_core::containment::{self, ContainmentReport};
use acons_core::ct_sim;
use acons_core::dt_sim::{self, DtScenario};
use acons_core::graph::{SpectralDecomposition, Topology};
use acons_core::linalg::Matrix;
use acons_core::schedule::ModeSchedule;
use acons_core::trajectory::Trajectory;

use crate::config::ScenarioConfig;
use crate::randgen::schedule_variant;

/// One stretch of a continuous-time run between network changes.
pub struct CtSegment {
    /// Original (0-based) ids of the agents alive in this segment.
    pub agents: Vec<usize>,
    pub trajectory: Trajectory,
}

pub struct CtRunOutput {
    pub n_agents: usize,
    pub segments: Vec<CtSegment>,
    /// Error-bound series aligned with the first segment's samples
    /// (only fitted for departure-free runs with certificate + dwell).
    pub bound: Option<Vec<f64>>,
}

impl CtRunOutput {
    /// Stitched `(t, max error over live agents)` series across segments.
    pub fn max_error_series(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for seg in &self.segments {
            out.extend(seg.trajectory.max_error_series());
        }
        out
    }
}

/// Runs the continuous-time scenario, splitting at departure times and
/// restarting the surviving agents from their current states.
pub fn run_ct(cfg: &ScenarioConfig, base_seed: u64) -> Result<CtRunOutput> {
    cfg.validate_simulation()?;
    let topology = cfg.build_topology()?;
    let schedule = cfg.build_schedule()?;
    let ensemble = cfg.build_ensemble()?;
    let departures = cfg.departures()?;
    let n = topology.n();
    let t_end = cfg.horizon.unwrap_or_else(|| schedule.horizon_end());
    let h = cfg.rates.h;

    let mut boundaries = vec![0.0];
    for (t, _) in &departures {
        if *t < t_end {
            boundaries.push(*t);
        }
    }
    boundaries.push(t_end);

    let mut segments = Vec::new();
    let mut agents: Vec<usize> = (0..n).collect();
    let mut top_cur = topology.clone();
    let mut sched_cur = schedule.clone();
    let mut ens_cur = ensemble.clone();
    let mut x: Vec<f64> = vec![0.0; n];
    let mut v: Vec<f64> = vec![0.0; n];

    for pair in boundaries.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let traj = ct_sim::integrate_span(&top_cur, &sched_cur, &ens_cur, &x, &v, a, b, h)?;
        for w in traj.warnings() {
            warn!("{}: {w}", cfg.name);
        }
        let last = traj.last().context("trajectory has at least the initial sample")?;
        x = last.x.clone();
        v = last.v.clone();
        segments.push(CtSegment { agents: agents.clone(), trajectory: traj });

        // Interior boundaries are departure times.
        if b < t_end {
            if let Some(&(_, original)) = departures.iter().find(|(t, _)| *t == b) {
                let local = agents
                    .iter()
                    .position(|&id| id == original)
                    .with_context(|| format!("agent {} departed twice", original + 1))?;
                info!("agent {} leaves at t = {b}", original + 1);
                top_cur = top_cur
                    .remove_agent(local)
                    .map_err(|e| anyhow::anyhow!("departure at t = {b}: {e}"))?;
                let keep: Vec<usize> =
                    (0..agents.len()).filter(|&i| i != local).collect();
                sched_cur = sched_cur
                    .restricted(&keep, b)
                    .map_err(|e| anyhow::anyhow!("departure at t = {b}: {e}"))?;
                ens_cur = ens_cur
                    .restricted(&keep)
                    .map_err(|e| anyhow::anyhow!("departure at t = {b}: {e}"))?;
                agents.remove(local);
                x.remove(local);
                v.remove(local);
            }
        }
    }

    let bound = if departures.is_empty() && cfg.certificate.is_some() && cfg.dwell.is_some() {
        let cert = fit_ct_certificate(cfg, &topology, &schedule, base_seed)?;
        Some(ct_bound_series(
            &cert,
            &topology,
            &schedule,
            &ensemble,
            &segments[0].trajectory,
        )?)
    } else {
        None
    };

    Ok(CtRunOutput { n_agents: n, segments, bound })
}

pub struct DtRunOutput {
    pub scenario: DtScenario,
    pub trajectory: Trajectory,
    pub bound: Option<Vec<f64>>,
    pub d_bar: f64,
}

/// Runs the discrete-time scenario. `delta_c` is validated against the
/// stability limit unless `allow_unstable` is set.
pub fn run_dt(cfg: &ScenarioConfig, base_seed: u64, allow_unstable: bool) -> Result<DtRunOutput> {
    cfg.validate_simulation()?;
    let topology = cfg.build_topology()?;
    let schedule = cfg.build_schedule()?;
    let ensemble = cfg.build_ensemble()?;
    if !cfg.departures()?.is_empty() {
        bail!("departures are only supported by simulate-ct");
    }
    let delta_c = cfg.rates.delta_c.context("rates.delta_c is required for simulate-dt")?;
    let delta_s = cfg.rates.delta_s.unwrap_or(delta_c);
    let steps = cfg.dt.as_ref().context("dt.steps is required for simulate-dt")?.steps;

    let decomposition = SpectralDecomposition::new(&topology);
    let pool = schedule.distinct_weight_vectors();
    let d_bar = analysis::max_stable_step(&decomposition, &pool)
        .map_err(|e| anyhow::anyhow!("stability analysis: {e}"))?;
    if delta_c >= d_bar {
        if allow_unstable {
            warn!("delta_c = {delta_c} >= stability limit {d_bar}; proceeding as requested");
        } else {
            bail!(
                "delta_c = {delta_c} is at or above the stability limit {d_bar}; \
                 pass --allow-unstable to run anyway"
            );
        }
    }

    let scenario = DtScenario::new(topology, schedule, ensemble, delta_c, delta_s, steps)
        .map_err(|e| anyhow::anyhow!("dt scenario: {e}"))?;
    let n = scenario.topology().n();
    let x0 = vec![0.0; n];
    let v0 = vec![0.0; n];
    let trajectory = dt_sim::simulate(&scenario, &x0, &v0)?;

    let bound = if cfg.certificate.is_some() && cfg.dwell.is_some() && delta_c < d_bar {
        let cert = fit_dt_certificate(cfg, &scenario, base_seed)?;
        Some(dt_bound_prefix(&cert, &scenario, &x0, &v0, steps)?)
    } else {
        None
    };

    Ok(DtRunOutput { scenario, trajectory, bound, d_bar })
}

// ---------------------------------------------------------------------------
// Analysis and certification reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct EigenvalueReport {
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubsystemReport {
    pub index: usize,
    pub weights: Vec<f64>,
    pub eigenvalues: Vec<EigenvalueReport>,
    pub hurwitz: bool,
    /// Largest eigenvalue real part.
    pub margin: f64,
    /// "hurwitz", "marginal", or "unstable"; marginal means within the
    /// numerical margin of the imaginary axis.
    pub classification: String,
    /// Lemma-1 surface: is `-(E + L)` Hurwitz for this weight vector.
    pub activity_laplacian_hurwitz: bool,
    /// Schur verdict of `I + delta_c A` when a step is configured.
    pub schur_at_delta_c: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalyzeReport {
    pub schema_version: u32,
    pub name: String,
    pub agents: usize,
    pub subsystems: Vec<SubsystemReport>,
    pub d_bar: f64,
    pub delta_c: Option<f64>,
    pub delta_c_stable: Option<bool>,
    pub pass: bool,
}

fn classify(margin: f64) -> &'static str {
    if margin < -STABILITY_MARGIN {
        "hurwitz"
    } else if margin <= STABILITY_MARGIN {
        "marginal"
    } else {
        "unstable"
    }
}

fn subsystem_reports(
    topology: &Topology,
    set: &SubsystemSet,
    delta_c: Option<f64>,
) -> Result<Vec<SubsystemReport>> {
    let n = topology.n();
    let laplacian = topology.laplacian();
    let mut out = Vec::with_capacity(set.subsystems.len());
    for sub in &set.subsystems {
        let margin = sub
            .eigenvalues
            .iter()
            .fold(f64::NEG_INFINITY, |m, v| m.max(v.re));
        let mut activity = laplacian.scaled(-1.0);
        for i in 0..n {
            activity[(i, i)] -= sub.weights[i];
        }
        let activity_hurwitz = analysis::is_hurwitz(&activity)
            .map_err(|e| anyhow::anyhow!("eigensolver: {e}"))?;
        let schur = match delta_c {
            None => None,
            Some(dc) => {
                let euler = Matrix::identity(sub.matrix.rows()).add(&sub.matrix.scaled(dc));
                Some(analysis::is_schur(&euler).map_err(|e| anyhow::anyhow!("eigensolver: {e}"))?)
            }
        };
        out.push(SubsystemReport {
            index: sub.index,
            weights: sub.weights.clone(),
            eigenvalues: sub
                .eigenvalues
                .iter()
                .map(|v| EigenvalueReport { re: v.re, im: v.im })
                .collect(),
            hurwitz: margin < -STABILITY_MARGIN,
            margin,
            classification: classify(margin).to_string(),
            activity_laplacian_hurwitz: activity_hurwitz,
            schur_at_delta_c: schur,
        });
    }
    Ok(out)
}

/// Stability report over the schedule's weight pool: subsystem spectra,
/// Hurwitz verdicts, the step limit, and Schur checks at the configured
/// `delta_c`.
pub fn run_analyze(cfg: &ScenarioConfig) -> Result<AnalyzeReport> {
    let topology = cfg.build_topology()?;
    let schedule = cfg.build_schedule()?;
    if schedule.n() != topology.n() {
        bail!(
            "schedule weight vectors have {} entries, topology has {}",
            schedule.n(),
            topology.n()
        );
    }
    let decomposition = SpectralDecomposition::new(&topology);
    let pool = schedule.distinct_weight_vectors();
    let set = SubsystemSet::new(decomposition, &pool)
        .map_err(|e| anyhow::anyhow!("subsystem assembly: {e}"))?;
    let d_bar =
        analysis::max_stable_step_of(&set).map_err(|e| anyhow::anyhow!("step limit: {e}"))?;
    let subsystems = subsystem_reports(&topology, &set, cfg.rates.delta_c)?;
    let delta_c_stable = cfg.rates.delta_c.map(|dc| dc < d_bar);
    let pass = subsystems
        .iter()
        .all(|s| s.hurwitz && s.activity_laplacian_hurwitz)
        && delta_c_stable.unwrap_or(true);
    Ok(AnalyzeReport {
        schema_version: crate::config::SCHEMA_VERSION,
        name: cfg.name.clone(),
        agents: topology.n(),
        subsystems,
        d_bar,
        delta_c: cfg.rates.delta_c,
        delta_c_stable,
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ProvenanceReport {
    pub label: String,
    pub schedules: usize,
    pub grid_points: usize,
    pub horizon: f64,
    pub safety_factor: f64,
    pub rate_shade: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DominationReport {
    pub scenarios: usize,
    pub points: usize,
    pub min_margin: f64,
    pub violations: usize,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeCertifyReport {
    pub mode: String,
    pub kappa: f64,
    /// Decay rate: λ (1/s) in continuous mode, ω (per step) in discrete.
    pub rate: f64,
    pub provenance: ProvenanceReport,
    pub domination: DominationReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyReport {
    pub schema_version: u32,
    pub name: String,
    pub agents: usize,
    pub d_bar: f64,
    pub dwell_satisfied: bool,
    pub subsystems: Vec<SubsystemReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ct: Option<ModeCertifyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<ModeCertifyReport>,
    pub pass: bool,
}

fn fit_options(cfg: &ScenarioConfig) -> FitOptions {
    let cert = cfg.certificate.clone().unwrap_or_default();
    FitOptions {
        safety_factor: cert.safety_factor,
        grid_points: cert.grid_points,
        rate_shade: cert.rate_shade,
        label: format!("fit seeds {:?}", cert.fit_seeds),
        ..FitOptions::default()
    }
}

fn fit_variants(cfg: &ScenarioConfig, schedule: &ModeSchedule, base_seed: u64) -> Vec<ModeSchedule> {
    let cert = cfg.certificate.clone().unwrap_or_default();
    cert.fit_seeds
        .iter()
        .map(|s| schedule_variant(schedule, base_seed.wrapping_add(*s)))
        .collect()
}

/// Fits the continuous-time envelope on seed-generated schedule variants
/// (never on the scenario under test).
pub fn fit_ct_certificate(
    cfg: &ScenarioConfig,
    topology: &Topology,
    schedule: &ModeSchedule,
    base_seed: u64,
) -> Result<StabilityCertificate> {
    let decomposition = SpectralDecomposition::new(topology);
    let pool = schedule.distinct_weight_vectors();
    let variants = fit_variants(cfg, schedule, base_seed);
    let refs: Vec<&ModeSchedule> = variants.iter().collect();
    fit_certificate_multi(
        &decomposition,
        &pool,
        &refs,
        CertificateMode::Continuous,
        &fit_options(cfg),
    )
    .map_err(|e| anyhow::anyhow!("certificate fit: {e}"))
}

pub fn fit_dt_certificate(
    cfg: &ScenarioConfig,
    scenario: &DtScenario,
    base_seed: u64,
) -> Result<StabilityCertificate> {
    let decomposition = SpectralDecomposition::new(scenario.topology());
    let pool = scenario.schedule().distinct_weight_vectors();
    let variants = fit_variants(cfg, scenario.schedule(), base_seed);
    let refs: Vec<&ModeSchedule> = variants.iter().collect();
    fit_certificate_multi(
        &decomposition,
        &pool,
        &refs,
        CertificateMode::Discrete { delta_c: scenario.delta_c() },
        &fit_options(cfg),
    )
    .map_err(|e| anyhow::anyhow!("certificate fit: {e}"))
}

struct Domination {
    points: usize,
    min_margin: f64,
    violations: usize,
}

fn domination_of(errors: &[f64], bounds: &[f64]) -> Domination {
    let mut min_margin = f64::INFINITY;
    let mut violations = 0;
    for (e, b) in errors.iter().zip(bounds) {
        let margin = b - e;
        if margin < min_margin {
            min_margin = margin;
        }
        if margin < 0.0 {
            violations += 1;
        }
    }
    Domination { points: errors.len(), min_margin, violations }
}

/// Fits certificates for the configured modes and checks that the
/// theoretical bound dominates the simulated error on the scenario itself
/// plus held-out seed variants of its schedule.
pub fn run_certify(cfg: &ScenarioConfig, base_seed: u64, jobs: usize) -> Result<CertifyReport> {
    cfg.validate_simulation()?;
    if !cfg.departures()?.is_empty() {
        bail!("certify does not support departures (the network changes identity)");
    }
    let topology = cfg.build_topology()?;
    let schedule = cfg.build_schedule()?;
    let ensemble = cfg.build_ensemble()?;
    let dwell = cfg
        .build_dwell()?
        .context("certify requires a dwell declaration (dwell.chatter_bound, dwell.average_dwell)")?;
    let verdict = schedule.verify_dwell(&dwell);
    if !verdict.satisfied {
        bail!(
            "declared dwell statistics are violated at t = {}",
            verdict.first_violation.unwrap_or(f64::NAN)
        );
    }

    let decomposition = SpectralDecomposition::new(&topology);
    let pool = schedule.distinct_weight_vectors();
    let set = SubsystemSet::new(decomposition, &pool)
        .map_err(|e| anyhow::anyhow!("subsystem assembly: {e}"))?;
    let d_bar =
        analysis::max_stable_step_of(&set).map_err(|e| anyhow::anyhow!("step limit: {e}"))?;
    let subsystems = subsystem_reports(&topology, &set, cfg.rates.delta_c)?;

    let cert_cfg = cfg.certificate.clone().unwrap_or_default();
    let eval_schedules: Vec<ModeSchedule> = std::iter::once(schedule.clone())
        .chain(
            cert_cfg
                .eval_seeds
                .iter()
                .map(|s| schedule_variant(&schedule, base_seed.wrapping_add(0x5eed).wrapping_add(*s))),
        )
        .collect();

    // Continuous mode.
    let ct_cert = fit_ct_certificate(cfg, &topology, &schedule, base_seed)?;
    let h = cfg.rates.h;
    let ct_dominations = run_parallel(jobs, &eval_schedules, |sched| {
        let n = topology.n();
        let traj = ct_sim::integrate(
            &topology,
            sched,
            &ensemble,
            &vec![0.0; n],
            &vec![0.0; n],
            sched.horizon_end(),
            h,
        )?;
        let bounds = ct_bound_series(&ct_cert, &topology, sched, &ensemble, &traj)?;
        let errors: Vec<f64> = traj.samples().iter().map(|s| s.max_err()).collect();
        Ok(domination_of(&errors, &bounds))
    })?;
    let ct_report = ModeCertifyReport {
        mode: "continuous".to_string(),
        kappa: ct_cert.kappa,
        rate: ct_cert.lambda().unwrap_or(f64::NAN),
        provenance: provenance_report(&ct_cert),
        domination: fold_dominations(&ct_dominations),
    };

    // Discrete mode, when configured.
    let dt_report = match (cfg.rates.delta_c, &cfg.dt) {
        (Some(delta_c), Some(dt_cfg)) => {
            let delta_s = cfg.rates.delta_s.unwrap_or(delta_c);
            let scenario = DtScenario::new(
                topology.clone(),
                schedule.clone(),
                ensemble.clone(),
                delta_c,
                delta_s,
                dt_cfg.steps,
            )
            .map_err(|e| anyhow::anyhow!("dt scenario: {e}"))?;
            let dt_cert = fit_dt_certificate(cfg, &scenario, base_seed)?;
            let dominations = run_parallel(jobs, &eval_schedules, |sched| {
                let steps = ((sched.horizon_end() / delta_c) as usize).min(dt_cfg.steps);
                let eval_scenario = DtScenario::new(
                    topology.clone(),
                    sched.clone(),
                    ensemble.clone(),
                    delta_c,
                    delta_s,
                    steps,
                )?;
                let n = topology.n();
                let x0 = vec![0.0; n];
                let v0 = vec![0.0; n];
                let traj = dt_sim::simulate(&eval_scenario, &x0, &v0)?;
                let bounds = dt_bound_prefix(&dt_cert, &eval_scenario, &x0, &v0, steps)?;
                let errors: Vec<f64> = traj.samples().iter().map(|s| s.max_err()).collect();
                Ok(domination_of(&errors, &bounds))
            })?;
            Some(ModeCertifyReport {
                mode: "discrete".to_string(),
                kappa: dt_cert.kappa,
                rate: dt_cert.omega().unwrap_or(f64::NAN),
                provenance: provenance_report(&dt_cert),
                domination: fold_dominations(&dominations),
            })
        }
        _ => None,
    };

    let pass = ct_report.domination.pass
        && dt_report.as_ref().is_none_or(|r| r.domination.pass);
    Ok(CertifyReport {
        schema_version: crate::config::SCHEMA_VERSION,
        name: cfg.name.clone(),
        agents: topology.n(),
        d_bar,
        dwell_satisfied: verdict.satisfied,
        subsystems,
        ct: Some(ct_report),
        dt: dt_report,
        pass,
    })
}

fn provenance_report(cert: &StabilityCertificate) -> ProvenanceReport {
    ProvenanceReport {
        label: cert.provenance.label.clone(),
        schedules: cert.provenance.schedules,
        grid_points: cert.provenance.grid_points,
        horizon: cert.provenance.horizon,
        safety_factor: cert.provenance.safety_factor,
        rate_shade: cert.provenance.rate_shade,
    }
}

fn fold_dominations(parts: &[Domination]) -> DominationReport {
    let mut report = DominationReport {
        scenarios: parts.len(),
        points: 0,
        min_margin: f64::INFINITY,
        violations: 0,
        pass: true,
    };
    for p in parts {
        report.points += p.points;
        report.violations += p.violations;
        if p.min_margin < report.min_margin {
            report.min_margin = p.min_margin;
        }
    }
    report.pass = report.violations == 0;
    report
}

/// Runs `work` over the scenarios, optionally on `jobs` worker threads;
/// results keep the input order either way.
fn run_parallel<F>(jobs: usize, schedules: &[ModeSchedule], work: F) -> Result<Vec<Domination>>
where
    F: Fn(&ModeSchedule) -> Result<Domination> + Sync,
{
    if jobs <= 1 || schedules.len() <= 1 {
        return schedules.iter().map(&work).collect();
    }
    let mut slots: Vec<Option<Result<Domination>>> = Vec::new();
    slots.resize_with(schedules.len(), || None);
    let slots_ref = std::sync::Mutex::new(&mut slots);
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(schedules.len()) {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if idx >= schedules.len() {
                    break;
                }
                let out = work(&schedules[idx]);
                slots_ref.lock().expect("worker poisoned the slot lock")[idx] = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.expect("every scenario slot was filled"))
        .collect()
}


#[derive(Debug)]
pub struct ContainmentRunOutput {
    pub report: ContainmentReport,
    pub delta_c: f64,
    pub delta_s: f64,
    pub d_bar: f64,
}

/// Runs the containment scenario after checking the induced weight
/// patterns against the stability limit.
pub fn run_containment(cfg: &ScenarioConfig, allow_unstable: bool) -> Result<ContainmentRunOutput> {
    let topology = cfg.build_topology()?;
    let (leaders, obs, init, steps) = cfg.build_containment()?;
    let delta_c = cfg.rates.delta_c.context("rates.delta_c is required for containment")?;
    let delta_s = cfg.rates.delta_s.context("rates.delta_s is required for containment")?;

    // Stability of the induced 0/1 activity patterns.
    let (sx, _) = containment::coordinate_scenarios(&topology, &obs, &leaders, delta_s, delta_c, steps)
        .map_err(|e| anyhow::anyhow!("containment setup: {e}"))?;
    let decomposition = SpectralDecomposition::new(&topology);
    let pool = sx.schedule().distinct_weight_vectors();
    let d_bar = analysis::max_stable_step(&decomposition, &pool)
        .map_err(|e| anyhow::anyhow!("stability analysis: {e}"))?;
    if delta_c >= d_bar {
        if allow_unstable {
            warn!("delta_c = {delta_c} >= stability limit {d_bar}; proceeding as requested");
        } else {
            bail!(
                "delta_c = {delta_c} is at or above the stability limit {d_bar}; \
                 pass --allow-unstable to run anyway"
            );
        }
    }

    let report = containment::run_containment(&topology, &obs, &leaders, delta_s, delta_c, steps, &init)
        .map_err(|e| anyhow::anyhow!("containment run: {e}"))?;
    Ok(ContainmentRunOutput { report, delta_c, delta_s, d_bar })
}
