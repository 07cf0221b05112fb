//! Canned demo scenarios.
//!
//! `fig2`: six agents on a ring track the weighted average of the active
//! references through three activity phases (a dynamic phase with four
//! observers, a static phase with a different observer set, and a
//! two-observer static phase); agent 1 leaves the network at t = 90.
//!
//! `fig4`: six followers on a ring contain ten mobile leaders, observing
//! them at 1 Hz while communicating at 5 Hz; the leaders freeze at t = 20.

use crate::config::{
    CertificateConfig, ContainmentConfig, DepartureConfig, DtConfig, DwellConfig, EpochConfig,
    LeaderConfig, ObsEpochConfig, RatesConfig, ScenarioConfig, ScheduleConfig, SignalConfig,
    TopologyConfig, WaypointConfig, SCHEMA_VERSION,
};

/// Weight given to every observing agent in the demos.
const FIG2_ACTIVE_WEIGHT: f64 = 4.0;

fn weights_for(active: &[usize], n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for &agent in active {
        w[agent - 1] = FIG2_ACTIVE_WEIGHT;
    }
    w
}

/// Zero-order-hold track that follows `offset + amp sin(omega t)` until
/// `t_freeze`, then holds `frozen` forever.
fn dynamic_then_frozen(offset: f64, amp: f64, omega: f64, t_freeze: f64, frozen: f64) -> SignalConfig {
    let period = 0.25;
    let dynamic_samples = (t_freeze / period) as usize;
    let mut samples: Vec<f64> = (0..dynamic_samples)
        .map(|l| {
            let t = l as f64 * period;
            offset + amp * (omega * t).sin()
        })
        .collect();
    samples.push(frozen);
    SignalConfig::Zoh { samples, period }
}

/// Six-agent ring demo with switching observer sets and a departure.
pub fn fig2_config() -> ScenarioConfig {
    let n = 6;
    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: "fig2".to_string(),
        topology: TopologyConfig::Ring { n, weight: 2.0 },
        schedule: Some(ScheduleConfig {
            horizon: 120.0,
            epochs: vec![
                EpochConfig { t: 0.0, weights: weights_for(&[1, 2, 4, 6], n) },
                EpochConfig { t: 50.0, weights: weights_for(&[2, 3, 5, 6], n) },
                EpochConfig { t: 70.0, weights: weights_for(&[3, 6], n) },
            ],
            departures: vec![DepartureConfig { t: 90.0, agent: 1 }],
        }),
        signals: vec![
            // Agents 1 and 4 observe smooth dynamic signals (active in the
            // dynamic phase only); agents 2 and 6 observe sampled dynamic
            // activity that goes static at t = 50; agents 3 and 5 observe
            // static values.
            SignalConfig::Sinusoid { offset: 1.5, amplitude: 0.8, omega: 0.5 },
            dynamic_then_frozen(1.0, 0.8, 0.4, 50.0, 2.0),
            SignalConfig::Constant { value: 1.0 },
            SignalConfig::Sinusoid { offset: -0.5, amplitude: 1.0, omega: 0.7 },
            SignalConfig::Constant { value: 3.0 },
            dynamic_then_frozen(2.0, 0.6, 0.3, 50.0, 2.5),
        ],
        rates: RatesConfig { h: 0.01, delta_c: Some(0.05), delta_s: Some(0.25) },
        horizon: None,
        dwell: Some(DwellConfig { chatter_bound: 1, average_dwell: 20.0 }),
        certificate: Some(CertificateConfig::default()),
        dt: Some(DtConfig { steps: 2400 }),
        containment: None,
        seed: Some(2),
    }
}

/// Containment demo: 10 leaders drift for 20 s and then freeze; follower 4
/// (phases 1-2) and follower 6 (phase 1) run passive.
pub fn fig4_config() -> ScenarioConfig {
    let n_leaders = 10;
    let center = (4.0, 4.0);
    let radius = 3.0;
    let leaders = (0..n_leaders)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n_leaders as f64;
            let x0 = center.0 + radius * theta.cos();
            let y0 = center.1 + radius * theta.sin();
            LeaderConfig {
                waypoints: vec![
                    WaypointConfig { t: 0.0, pos: [x0, y0] },
                    WaypointConfig { t: 10.0, pos: [x0 + 2.0, y0 - 0.5] },
                    WaypointConfig { t: 20.0, pos: [x0 + 2.5, y0 + 1.5] },
                ],
            }
        })
        .collect();

    ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        name: "fig4".to_string(),
        topology: TopologyConfig::Ring { n: 6, weight: 1.0 },
        schedule: None,
        signals: Vec::new(),
        rates: RatesConfig { h: 0.01, delta_c: Some(0.2), delta_s: Some(1.0) },
        horizon: None,
        dwell: None,
        certificate: None,
        dt: None,
        containment: Some(ContainmentConfig {
            leaders,
            displacement_bound: 0.5,
            observations: vec![
                ObsEpochConfig {
                    from_sample: 0,
                    sets: vec![
                        vec![1, 4, 6, 8],
                        vec![2, 4, 7, 8, 10],
                        vec![3, 4, 5, 9],
                        vec![],
                        vec![1, 3, 9],
                        vec![],
                    ],
                },
                ObsEpochConfig {
                    from_sample: 5,
                    sets: vec![
                        vec![3, 5, 6, 8],
                        vec![1, 2, 7, 9, 10],
                        vec![3, 4, 5, 9],
                        vec![],
                        vec![1, 3, 9],
                        vec![2, 5, 7, 9],
                    ],
                },
                ObsEpochConfig {
                    from_sample: 10,
                    sets: vec![
                        vec![1, 2, 5, 8],
                        vec![2, 3, 6, 7, 10],
                        vec![3, 4, 5, 9],
                        vec![3, 10],
                        vec![1, 3, 9],
                        vec![2, 5, 7, 9],
                    ],
                },
            ],
            steps: 150,
            follower_init: vec![
                [0.0, 0.0],
                [1.0, 0.0],
                [2.0, 0.0],
                [0.0, 1.0],
                [1.0, 1.0],
                [2.0, 1.0],
            ],
        }),
        seed: Some(4),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig2_is_well_formed() {
        let cfg = fig2_config();
        cfg.validate_simulation().unwrap();
        let schedule = cfg.build_schedule().unwrap();
        // Active sets of the three phases, 0-based.
        assert_eq!(schedule.active_set(10.0).unwrap(), vec![0, 1, 3, 5]);
        assert_eq!(schedule.active_set(60.0).unwrap(), vec![1, 2, 4, 5]);
        assert_eq!(schedule.active_set(80.0).unwrap(), vec![2, 5]);
        assert_eq!(cfg.departures().unwrap(), vec![(90.0, 0)]);
    }

    #[test]
    fn fig4_is_well_formed() {
        let cfg = fig4_config();
        let (leaders, obs, init, steps) = cfg.build_containment().unwrap();
        assert_eq!(leaders.len(), 10);
        assert_eq!(obs.n_followers(), 6);
        assert_eq!(init.len(), 6);
        assert_eq!(steps, 150);
        // Phase 1 passives: followers 4 and 6 (0-based 3 and 5).
        assert!(obs.sets_at(0)[3].is_empty());
        assert!(obs.sets_at(0)[5].is_empty());
        assert!(!obs.sets_at(12)[3].is_empty());
        // Leaders hold still after t = 20.
        let p20 = leaders.position(0, 20.0);
        let p29 = leaders.position(0, 29.0);
        assert_eq!(p20, p29);
    }
}
