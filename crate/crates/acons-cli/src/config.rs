//! Versioned JSON scenario configuration and its conversion into core
//! types.
//!
//! Agent, leader, and follower indices in config files are 1-based (the
//! human-facing numbering used throughout reports); everything is converted
//! to 0-based indices at the boundary.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use acons_core::containment::{Leader, LeaderEnsemble, ObsEpoch, ObservationMap, Vec2};
use acons_core::graph::Topology;
use acons_core::linalg::Matrix;
use acons_core::schedule::{DwellStats, Epoch, ModeSchedule};
use acons_core::signals::{ReferenceEnsemble, ReferenceSignal};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub name: String,
    pub topology: TopologyConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub signals: Vec<SignalConfig>,
    #[serde(default)]
    pub rates: RatesConfig,
    /// Run horizon override; defaults to the schedule horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dwell: Option<DwellConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<DtConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub containment: Option<ContainmentConfig>,
    /// Base seed for seed-derived scenario families.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologyConfig {
    Ring { n: usize, #[serde(default = "default_weight")] weight: f64 },
    Path { n: usize, #[serde(default = "default_weight")] weight: f64 },
    Complete { n: usize, #[serde(default = "default_weight")] weight: f64 },
    Explicit { adjacency: Vec<Vec<f64>> },
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub horizon: f64,
    pub epochs: Vec<EpochConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub departures: Vec<DepartureConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochConfig {
    pub t: f64,
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepartureConfig {
    pub t: f64,
    /// 1-based agent label.
    pub agent: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SignalConfig {
    Constant { value: f64 },
    Sinusoid { offset: f64, amplitude: f64, omega: f64 },
    Zoh { samples: Vec<f64>, period: f64 },
    Poly { coeffs: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatesConfig {
    /// Continuous-time integrator step.
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_s: Option<f64>,
}

fn default_h() -> f64 {
    0.01
}

impl Default for RatesConfig {
    fn default() -> Self {
        RatesConfig { h: default_h(), delta_c: None, delta_s: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DwellConfig {
    pub chatter_bound: u32,
    pub average_dwell: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateConfig {
    #[serde(default = "default_safety")]
    pub safety_factor: f64,
    #[serde(default = "default_rate_shade")]
    pub rate_shade: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Seeds of the schedule variants the envelope is fitted on.
    #[serde(default = "default_fit_seeds")]
    pub fit_seeds: Vec<u64>,
    /// Held-out seeds the bound-domination verdict is evaluated on.
    #[serde(default = "default_eval_seeds")]
    pub eval_seeds: Vec<u64>,
}

fn default_safety() -> f64 {
    1.25
}

fn default_rate_shade() -> f64 {
    0.95
}

fn default_grid_points() -> usize {
    120
}

fn default_fit_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}

fn default_eval_seeds() -> Vec<u64> {
    vec![6, 7, 8, 9, 10]
}

impl Default for CertificateConfig {
    fn default() -> Self {
        CertificateConfig {
            safety_factor: default_safety(),
            rate_shade: default_rate_shade(),
            grid_points: default_grid_points(),
            fit_seeds: default_fit_seeds(),
            eval_seeds: default_eval_seeds(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DtConfig {
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContainmentConfig {
    pub leaders: Vec<LeaderConfig>,
    pub displacement_bound: f64,
    /// Observation epochs; leader indices are 1-based.
    pub observations: Vec<ObsEpochConfig>,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub follower_init: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderConfig {
    pub waypoints: Vec<WaypointConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaypointConfig {
    pub t: f64,
    pub pos: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObsEpochConfig {
    pub from_sample: usize,
    pub sets: Vec<Vec<usize>>,
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).context("parsing config JSON")?;
        if cfg.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (this build reads {})",
                cfg.schema_version,
                SCHEMA_VERSION
            );
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")
            .with_context(|| format!("writing config {}", path.display()))?;
        Ok(())
    }

    pub fn build_topology(&self) -> Result<Topology> {
        let top = match &self.topology {
            TopologyConfig::Ring { n, weight } => Topology::ring(*n, *weight),
            TopologyConfig::Path { n, weight } => Topology::path(*n, *weight),
            TopologyConfig::Complete { n, weight } => Topology::complete(*n, *weight),
            TopologyConfig::Explicit { adjacency } => {
                let rows = adjacency.clone();
                Matrix::from_rows(&rows).and_then(Topology::new)
            }
        };
        top.map_err(|e| anyhow::anyhow!("topology: {e}"))
    }

    pub fn build_schedule(&self) -> Result<ModeSchedule> {
        let sched = self
            .schedule
            .as_ref()
            .context("config has no schedule section")?;
        let epochs = sched
            .epochs
            .iter()
            .map(|e| Epoch { start: e.t, weights: e.weights.clone() })
            .collect();
        ModeSchedule::new(epochs, sched.horizon).map_err(|e| anyhow::anyhow!("schedule: {e}"))
    }

    pub fn build_ensemble(&self) -> Result<ReferenceEnsemble> {
        if self.signals.is_empty() {
            bail!("config has no signals section");
        }
        let signals = self
            .signals
            .iter()
            .map(|s| match s {
                SignalConfig::Constant { value } => ReferenceSignal::Constant { value: *value },
                SignalConfig::Sinusoid { offset, amplitude, omega } => {
                    ReferenceSignal::Sinusoid {
                        offset: *offset,
                        amplitude: *amplitude,
                        omega: *omega,
                    }
                }
                SignalConfig::Zoh { samples, period } => {
                    ReferenceSignal::ZohTrack { samples: samples.clone(), period: *period }
                }
                SignalConfig::Poly { coeffs } => {
                    ReferenceSignal::Polynomial { coeffs: coeffs.clone() }
                }
            })
            .collect();
        ReferenceEnsemble::new(signals).map_err(|e| anyhow::anyhow!("signals: {e}"))
    }

    pub fn build_dwell(&self) -> Result<Option<DwellStats>> {
        match &self.dwell {
            None => Ok(None),
            Some(d) => Ok(Some(
                DwellStats::new(d.chatter_bound, d.average_dwell)
                    .map_err(|e| anyhow::anyhow!("dwell: {e}"))?,
            )),
        }
    }

    /// Departures as 0-based `(time, agent)` pairs, sorted by time.
    pub fn departures(&self) -> Result<Vec<(f64, usize)>> {
        let Some(sched) = &self.schedule else { return Ok(Vec::new()) };
        let n = self.agent_count()?;
        let mut out = Vec::new();
        for dep in &sched.departures {
            if dep.agent == 0 || dep.agent > n {
                bail!("departure agent {} out of range 1..={n}", dep.agent);
            }
            if !(dep.t > 0.0 && dep.t < sched.horizon) {
                bail!("departure time {} outside (0, horizon)", dep.t);
            }
            out.push((dep.t, dep.agent - 1));
        }
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite departure times"));
        Ok(out)
    }

    pub fn agent_count(&self) -> Result<usize> {
        Ok(match &self.topology {
            TopologyConfig::Ring { n, .. }
            | TopologyConfig::Path { n, .. }
            | TopologyConfig::Complete { n, .. } => *n,
            TopologyConfig::Explicit { adjacency } => adjacency.len(),
        })
    }

    /// Cross-field validation shared by every subcommand that simulates.
    pub fn validate_simulation(&self) -> Result<()> {
        let n = self.agent_count()?;
        let schedule = self.build_schedule()?;
        if schedule.n() != n {
            bail!("schedule weight vectors have {} entries, topology has {n}", schedule.n());
        }
        let ensemble = self.build_ensemble()?;
        if ensemble.len() != n {
            bail!("{} signals configured for {n} agents", ensemble.len());
        }
        if let Some(h) = self.horizon {
            if !(0.0..=schedule.horizon_end()).contains(&h) {
                bail!("run horizon {h} outside [0, {}]", schedule.horizon_end());
            }
        }
        if !(self.rates.h.is_finite() && self.rates.h > 0.0) {
            bail!("integrator step h must be positive, got {}", self.rates.h);
        }
        for (i, sig) in self.signals.iter().enumerate() {
            if let SignalConfig::Poly { coeffs } = sig {
                // Unbounded derivatives make the tracking bounds grow with
                // the horizon; allowed, but worth flagging.
                if coeffs.len() > 2 && coeffs[2..].iter().any(|c| *c != 0.0) {
                    log::warn!(
                        "signal {} is a polynomial of degree >= 2; its rate of change \
                         is unbounded and the error bounds grow with the horizon",
                        i + 1
                    );
                }
            }
        }
        self.departures()?;
        Ok(())
    }

    pub fn build_containment(
        &self,
    ) -> Result<(LeaderEnsemble, ObservationMap, Vec<Vec2>, usize)> {
        let c = self
            .containment
            .as_ref()
            .context("config has no containment section")?;
        let n = self.agent_count()?;
        let leaders: Vec<Leader> = c
            .leaders
            .iter()
            .map(|l| {
                Leader::new(
                    l.waypoints
                        .iter()
                        .map(|w| (w.t, Vec2::new(w.pos[0], w.pos[1])))
                        .collect(),
                )
            })
            .collect::<acons_core::Result<_>>()
            .map_err(|e| anyhow::anyhow!("leaders: {e}"))?;
        let n_leaders = leaders.len();
        let ensemble = LeaderEnsemble::new(leaders, c.displacement_bound)
            .map_err(|e| anyhow::anyhow!("leaders: {e}"))?;

        let epochs = c
            .observations
            .iter()
            .map(|e| {
                let mut sets = Vec::with_capacity(e.sets.len());
                for (follower, set) in e.sets.iter().enumerate() {
                    let mut converted = Vec::with_capacity(set.len());
                    for &leader in set {
                        if leader == 0 || leader > n_leaders {
                            bail!(
                                "follower {} observes leader {leader}, valid range 1..={n_leaders}",
                                follower + 1
                            );
                        }
                        converted.push(leader - 1);
                    }
                    sets.push(converted);
                }
                Ok(ObsEpoch { from_sample: e.from_sample, sets })
            })
            .collect::<Result<Vec<_>>>()?;
        let obs = ObservationMap::new(epochs).map_err(|e| anyhow::anyhow!("observations: {e}"))?;
        if obs.n_followers() != n {
            bail!("observation map covers {} followers, topology has {n}", obs.n_followers());
        }

        let init: Vec<Vec2> = if c.follower_init.is_empty() {
            vec![Vec2::default(); n]
        } else {
            if c.follower_init.len() != n {
                bail!("follower_init has {} entries for {n} followers", c.follower_init.len());
            }
            c.follower_init.iter().map(|p| Vec2::new(p[0], p[1])).collect()
        };
        Ok((ensemble, obs, init, c.steps))
    }
}
