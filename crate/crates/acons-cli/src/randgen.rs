//! Seeded random scenario generation for property suites and certificate
//! fitting. Everything is driven by an explicit 64-bit seed so that runs
//! are reproducible bit for bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use acons_core::graph::Topology;
use acons_core::linalg::Matrix;
use acons_core::schedule::{Epoch, ModeSchedule};
use acons_core::signals::{ReferenceEnsemble, ReferenceSignal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random connected graph: a random spanning tree plus extra edges with
/// probability 0.3, weights in [0.2, 2.0].
pub fn random_connected_topology(rng: &mut ChaCha8Rng, n_min: usize, n_max: usize) -> Topology {
    let n = rng.gen_range(n_min..=n_max);
    let mut a = Matrix::zeros(n, n);
    for i in 1..n {
        // Attach node i to a random earlier node: spanning tree.
        let j = rng.gen_range(0..i);
        let w = rng.gen_range(0.2..=2.0);
        a[(i, j)] = w;
        a[(j, i)] = w;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if a[(i, j)] == 0.0 && rng.gen_bool(0.3) {
                let w = rng.gen_range(0.2..=2.0);
                a[(i, j)] = w;
                a[(j, i)] = w;
            }
        }
    }
    Topology::new(a).expect("spanning tree keeps the graph connected")
}

/// Random valid weight vector: each agent active with probability
/// `activity`, weights in [0.2, 2.0], at least one agent forced active.
pub fn random_weight_vector(rng: &mut ChaCha8Rng, n: usize, activity: f64) -> Vec<f64> {
    let mut weights = vec![0.0; n];
    for w in weights.iter_mut() {
        if rng.gen_bool(activity) {
            *w = rng.gen_range(0.2..=2.0);
        }
    }
    if weights.iter().all(|&w| w == 0.0) {
        weights[rng.gen_range(0..n)] = rng.gen_range(0.2..=2.0);
    }
    weights
}

/// Pool of distinct random weight vectors.
pub fn random_weight_pool(
    rng: &mut ChaCha8Rng,
    n: usize,
    count: usize,
    activity: f64,
) -> Vec<Vec<f64>> {
    let mut pool: Vec<Vec<f64>> = Vec::with_capacity(count);
    while pool.len() < count {
        let w = random_weight_vector(rng, n, activity);
        if !pool.contains(&w) {
            pool.push(w);
        }
    }
    pool
}

/// Random switching schedule over a fixed pool: dwell intervals uniform in
/// `[dwell_min, dwell_max]`, modes drawn without immediate repeats.
pub fn random_schedule(
    rng: &mut ChaCha8Rng,
    pool: &[Vec<f64>],
    horizon: f64,
    dwell_min: f64,
    dwell_max: f64,
) -> ModeSchedule {
    let mut epochs = Vec::new();
    let mut t = 0.0;
    let mut last_mode = usize::MAX;
    while t < horizon {
        let mut mode = rng.gen_range(0..pool.len());
        if pool.len() > 1 && mode == last_mode {
            mode = (mode + 1) % pool.len();
        }
        last_mode = mode;
        epochs.push(Epoch { start: t, weights: pool[mode].clone() });
        t += rng.gen_range(dwell_min..=dwell_max);
    }
    ModeSchedule::new(epochs, horizon).expect("generated epochs are ordered and active")
}

/// Random smooth reference ensemble: a mix of constants and sinusoids with
/// offsets in [-1, 1], amplitudes up to 0.6, frequencies up to 1 rad/s.
pub fn random_smooth_ensemble(rng: &mut ChaCha8Rng, n: usize) -> ReferenceEnsemble {
    let signals = (0..n)
        .map(|_| {
            if rng.gen_bool(0.5) {
                ReferenceSignal::Constant { value: rng.gen_range(-1.0..=1.0) }
            } else {
                ReferenceSignal::Sinusoid {
                    offset: rng.gen_range(-1.0..=1.0),
                    amplitude: rng.gen_range(0.1..=0.6),
                    omega: rng.gen_range(0.2..=1.0),
                }
            }
        })
        .collect();
    ReferenceEnsemble::new(signals).expect("generated signal parameters are finite")
}

/// A schedule statistically like `base`: same weight pool and horizon,
/// re-drawn switch times with mean dwell matched to the base (jittered
/// ±30%) and re-drawn mode order.
pub fn schedule_variant(base: &ModeSchedule, seed: u64) -> ModeSchedule {
    let mut r = rng(seed);
    let pool = base.distinct_weight_vectors();
    let switches = base.switch_times().len();
    let mean_dwell = base.horizon_end() / (switches + 1) as f64;
    random_schedule(
        &mut r,
        &pool,
        base.horizon_end(),
        0.7 * mean_dwell,
        1.3 * mean_dwell,
    )
}
