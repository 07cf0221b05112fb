//! Containment control by reduction to active average consensus.
//!
//! Followers observe a subset of mobile leaders at a slow sampling rate and
//! must track the convex hull of the jointly observed leaders while
//! communicating at a faster rate. Each active follower feeds the centroid
//! of its observed leaders into the discrete consensus algorithm (weight 1;
//! unobserving followers run passive with weight 0 and zero reference).
//! The consensus target, the mean of the active local centroids, is then
//! a nested centroid, which always lies inside the hull of the observed
//! leaders, so every follower converges toward a point of the hull with
//! bounded error.
//!
//! The consensus recursion is linear and diagonal across coordinates, so a
//! planar scenario is exactly two independent scalar runs sharing one
//! schedule.

use alloc::vec;
use alloc::vec::Vec;

use crate::dt_sim::{self, DtScenario};
use crate::graph::Topology;
use crate::math;
use crate::schedule::{Epoch, ModeSchedule};
use crate::signals::{ReferenceEnsemble, ReferenceSignal};
use crate::trajectory::Trajectory;
use crate::{Error, Result};

/// A point in the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dist(self, other: Vec2) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Cross product `(a - o) × (b - o)`; positive for a counterclockwise turn.
fn cross(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// One leader's piecewise-linear motion through waypoints. The position
/// holds at the first/last waypoint outside the covered time range.
#[derive(Clone, Debug, PartialEq)]
pub struct Leader {
    waypoints: Vec<(f64, Vec2)>,
}

impl Leader {
    pub fn new(waypoints: Vec<(f64, Vec2)>) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::NoPoints);
        }
        for (i, (t, p)) in waypoints.iter().enumerate() {
            if !t.is_finite() || !p.is_finite() {
                return Err(Error::NonFiniteInput("leader waypoint"));
            }
            if i > 0 && *t < waypoints[i - 1].0 {
                return Err(Error::WaypointOrder { leader: 0 });
            }
        }
        Ok(Leader { waypoints })
    }

    /// Fixed position for all time.
    pub fn stationary(p: Vec2) -> Self {
        Leader { waypoints: vec![(0.0, p)] }
    }

    pub fn position(&self, t: f64) -> Vec2 {
        let first = self.waypoints.first().expect("validated nonempty");
        if t <= first.0 {
            return first.1;
        }
        for pair in self.waypoints.windows(2) {
            let (t0, p0) = pair[0];
            let (t1, p1) = pair[1];
            if t <= t1 {
                if t1 == t0 {
                    return p1;
                }
                let s = (t - t0) / (t1 - t0);
                return Vec2::new(p0.x + s * (p1.x - p0.x), p0.y + s * (p1.y - p0.y));
            }
        }
        self.waypoints.last().expect("validated nonempty").1
    }
}

/// All leaders plus the declared per-sample displacement budget.
#[derive(Clone, Debug, PartialEq)]
pub struct LeaderEnsemble {
    leaders: Vec<Leader>,
    displacement_bound: f64,
}

impl LeaderEnsemble {
    pub fn new(leaders: Vec<Leader>, displacement_bound: f64) -> Result<Self> {
        if leaders.is_empty() {
            return Err(Error::NoPoints);
        }
        if !displacement_bound.is_finite() || displacement_bound < 0.0 {
            return Err(Error::NonFiniteInput("displacement bound"));
        }
        Ok(LeaderEnsemble { leaders, displacement_bound })
    }

    pub fn len(&self) -> usize {
        self.leaders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaders.is_empty()
    }

    pub fn displacement_bound(&self) -> f64 {
        self.displacement_bound
    }

    pub fn position(&self, j: usize, t: f64) -> Vec2 {
        self.leaders[j].position(t)
    }

    /// Checks that no leader moves more than the declared bound between
    /// consecutive sample instants `0, delta_s, ..., (samples-1) delta_s`.
    pub fn validate_displacement(&self, delta_s: f64, samples: usize) -> Result<()> {
        for (j, leader) in self.leaders.iter().enumerate() {
            for l in 1..samples {
                let a = leader.position((l - 1) as f64 * delta_s);
                let b = leader.position(l as f64 * delta_s);
                let displacement = a.dist(b);
                if displacement > self.displacement_bound * (1.0 + 1e-12) {
                    return Err(Error::DisplacementBoundExceeded {
                        leader: j,
                        sample: l - 1,
                        displacement,
                        bound: self.displacement_bound,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Per-follower observed-leader index sets, constant over sample-index
/// epochs and held between samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ObsEpoch {
    pub from_sample: usize,
    /// `sets[i]` = 0-based indices of the leaders follower `i` observes.
    pub sets: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationMap {
    epochs: Vec<ObsEpoch>,
}

impl ObservationMap {
    pub fn new(epochs: Vec<ObsEpoch>) -> Result<Self> {
        if epochs.is_empty() {
            return Err(Error::EmptySchedule);
        }
        let followers = epochs[0].sets.len();
        for (idx, epoch) in epochs.iter().enumerate() {
            if epoch.sets.len() != followers {
                return Err(Error::DimensionMismatch {
                    expected: followers,
                    got: epoch.sets.len(),
                });
            }
            let expected_start_ok =
                if idx == 0 { epoch.from_sample == 0 } else { epoch.from_sample > epochs[idx - 1].from_sample };
            if !expected_start_ok {
                return Err(Error::ObservationEpochOrder { index: idx });
            }
            if epoch.sets.iter().all(Vec::is_empty) {
                return Err(Error::EmptyObservationUnion { sample: epoch.from_sample });
            }
        }
        Ok(ObservationMap { epochs })
    }

    pub fn n_followers(&self) -> usize {
        self.epochs[0].sets.len()
    }

    pub fn epochs(&self) -> &[ObsEpoch] {
        &self.epochs
    }

    /// Observation sets in force at sample `l` (zero-order held).
    pub fn sets_at(&self, l: usize) -> &[Vec<usize>] {
        let mut current = &self.epochs[0];
        for epoch in &self.epochs {
            if epoch.from_sample <= l {
                current = epoch;
            } else {
                break;
            }
        }
        &current.sets
    }

    fn max_leader_index(&self) -> Option<usize> {
        self.epochs
            .iter()
            .flat_map(|e| e.sets.iter().flatten())
            .copied()
            .max()
    }
}

/// Local observation input of follower `i` at sample `l`: the centroid of
/// its observed leaders' held positions, or `None` while it observes
/// nothing (passive, weight 0, zero reference).
pub fn local_centroid(
    leaders: &LeaderEnsemble,
    obs_map: &ObservationMap,
    delta_s: f64,
    l: usize,
    follower: usize,
) -> Option<Vec2> {
    let sets = obs_map.sets_at(l);
    let set = &sets[follower];
    if set.is_empty() {
        return None;
    }
    let t = l as f64 * delta_s;
    let mut acc = Vec2::default();
    for &j in set {
        let p = leaders.position(j, t);
        acc.x += p.x;
        acc.y += p.y;
    }
    let m = set.len() as f64;
    Some(Vec2::new(acc.x / m, acc.y / m))
}

/// Convex hull with counterclockwise vertices; collinear points are not
/// retained. Degenerate inputs produce point or segment hulls.
#[derive(Clone, Debug, PartialEq)]
pub struct Hull2D {
    vertices: Vec<Vec2>,
}

impl Hull2D {
    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }
}

/// Andrew's monotone chain over the lexicographically sorted points.
pub fn hull_2d(points: &[Vec2]) -> Result<Hull2D> {
    if points.is_empty() {
        return Err(Error::NoPoints);
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFiniteInput("hull points"));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).expect("finite points"));
    sorted.dedup();

    if sorted.len() <= 2 {
        return Ok(Hull2D { vertices: sorted });
    }

    let mut hull: Vec<Vec2> = Vec::with_capacity(sorted.len() + 1);
    // Lower hull, then upper hull over the reversed order.
    for &p in sorted.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in sorted.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        // All points collinear: the extremes form a segment.
        let mut seg = vec![sorted[0], sorted[sorted.len() - 1]];
        seg.dedup();
        return Ok(Hull2D { vertices: seg });
    }
    Ok(Hull2D { vertices: hull })
}

/// Membership up to `tol`: signed distance to every edge at least `-tol`
/// (point/segment hulls fall back to a distance test).
pub fn contains(hull: &Hull2D, p: Vec2, tol: f64) -> bool {
    match hull.vertices.len() {
        0 => false,
        1 => hull.vertices[0].dist(p) <= tol,
        2 => segment_distance(hull.vertices[0], hull.vertices[1], p) <= tol,
        _ => {
            let m = hull.vertices.len();
            for i in 0..m {
                let a = hull.vertices[i];
                let b = hull.vertices[(i + 1) % m];
                let len = a.dist(b);
                if cross(a, b, p) < -tol * len {
                    return false;
                }
            }
            true
        }
    }
}

fn segment_distance(a: Vec2, b: Vec2, p: Vec2) -> f64 {
    let len_sq = (b.x - a.x) * (b.x - a.x) + (b.y - a.y) * (b.y - a.y);
    if len_sq == 0.0 {
        return a.dist(p);
    }
    let s = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / len_sq;
    let s = math::max(0.0, math::min(1.0, s));
    Vec2::new(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)).dist(p)
}

/// Mean of subset centroids. Always a point of the convex hull of the
/// original points, regardless of subset overlap.
pub fn nested_centroid(points: &[Vec2], subsets: &[Vec<usize>]) -> Result<Vec2> {
    if subsets.is_empty() {
        return Err(Error::EmptySubset(0));
    }
    let mut acc = Vec2::default();
    for (j, subset) in subsets.iter().enumerate() {
        if subset.is_empty() {
            return Err(Error::EmptySubset(j));
        }
        let mut centroid = Vec2::default();
        for &idx in subset {
            let p = points
                .get(idx)
                .ok_or(Error::SubsetIndexOutOfRange { subset: j, index: idx })?;
            centroid.x += p.x;
            centroid.y += p.y;
        }
        let m = subset.len() as f64;
        acc.x += centroid.x / m;
        acc.y += centroid.y / m;
    }
    let s = subsets.len() as f64;
    Ok(Vec2::new(acc.x / s, acc.y / s))
}

/// One communication instant of a containment run.
#[derive(Clone, Debug, PartialEq)]
pub struct ContainmentStep {
    pub k: usize,
    pub t: f64,
    pub followers: Vec<Vec2>,
    /// Mean of the active local centroids (the consensus target).
    pub xbar: Vec2,
    pub hull: Hull2D,
    /// `‖follower_i - xbar‖` per follower.
    pub errors: Vec<f64>,
    pub xbar_in_hull: bool,
    pub follower_in_hull: Vec<bool>,
}

/// A full containment run.
#[derive(Clone, Debug)]
pub struct ContainmentReport {
    pub steps: Vec<ContainmentStep>,
    pub max_error: f64,
    pub xbar_membership_violations: usize,
    pub x_trajectory: Trajectory,
    pub y_trajectory: Trajectory,
}

/// The two scalar consensus scenarios (x and y coordinates) induced by an
/// observation map: weight 1 for observing followers, local centroids as
/// held reference tracks.
pub fn coordinate_scenarios(
    topology: &Topology,
    obs_map: &ObservationMap,
    leaders: &LeaderEnsemble,
    delta_s: f64,
    delta_c: f64,
    steps: usize,
) -> Result<(DtScenario, DtScenario)> {
    let n = topology.n();
    if obs_map.n_followers() != n {
        return Err(Error::DimensionMismatch { expected: n, got: obs_map.n_followers() });
    }
    if !delta_s.is_finite() || delta_s <= 0.0 {
        return Err(Error::InvalidStep(delta_s));
    }
    if !delta_c.is_finite() || delta_c <= 0.0 {
        return Err(Error::InvalidStep(delta_c));
    }
    if let Some(max_idx) = obs_map.max_leader_index() {
        if max_idx >= leaders.len() {
            return Err(Error::SubsetIndexOutOfRange { subset: 0, index: max_idx });
        }
    }

    let horizon = steps as f64 * delta_c;
    let samples = (horizon / delta_s) as usize + 1;
    leaders.validate_displacement(delta_s, samples)?;

    // Per-follower held reference tracks and the 0/1 weight schedule.
    let mut tracks_x = vec![Vec::with_capacity(samples); n];
    let mut tracks_y = vec![Vec::with_capacity(samples); n];
    let mut epochs: Vec<Epoch> = Vec::new();
    for l in 0..samples {
        let mut pattern = vec![0.0; n];
        for i in 0..n {
            match local_centroid(leaders, obs_map, delta_s, l, i) {
                Some(c) => {
                    pattern[i] = 1.0;
                    tracks_x[i].push(c.x);
                    tracks_y[i].push(c.y);
                }
                None => {
                    tracks_x[i].push(0.0);
                    tracks_y[i].push(0.0);
                }
            }
        }
        let start = l as f64 * delta_s;
        let changed = epochs.last().is_none_or(|e| e.weights != pattern);
        if changed && start < horizon {
            epochs.push(Epoch { start, weights: pattern });
        }
    }
    let schedule = ModeSchedule::new(epochs, horizon.max(delta_c))?;

    let to_ensemble = |tracks: &[Vec<f64>]| -> Result<ReferenceEnsemble> {
        ReferenceEnsemble::new(
            tracks
                .iter()
                .map(|samples| ReferenceSignal::ZohTrack {
                    samples: samples.clone(),
                    period: delta_s,
                })
                .collect(),
        )
    };
    let ensemble_x = to_ensemble(&tracks_x)?;
    let ensemble_y = to_ensemble(&tracks_y)?;

    let sx = DtScenario::new(
        topology.clone(),
        schedule.clone(),
        ensemble_x,
        delta_c,
        delta_s,
        steps,
    )?;
    let sy = DtScenario::new(topology.clone(), schedule, ensemble_y, delta_c, delta_s, steps)?;
    Ok((sx, sy))
}

/// Runs the full planar containment scenario: one discrete consensus run
/// per coordinate, hull bookkeeping, and membership checks per step.
pub fn run_containment(
    topology: &Topology,
    obs_map: &ObservationMap,
    leaders: &LeaderEnsemble,
    delta_s: f64,
    delta_c: f64,
    steps: usize,
    follower_init: &[Vec2],
) -> Result<ContainmentReport> {
    let n = topology.n();
    if follower_init.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: follower_init.len() });
    }
    let (sx, sy) = coordinate_scenarios(topology, obs_map, leaders, delta_s, delta_c, steps)?;

    let x0: Vec<f64> = follower_init.iter().map(|p| p.x).collect();
    let y0: Vec<f64> = follower_init.iter().map(|p| p.y).collect();
    let zeros = vec![0.0; n];
    let x_trajectory = dt_sim::simulate(&sx, &x0, &zeros)?;
    let y_trajectory = dt_sim::simulate(&sy, &y0, &zeros)?;

    const MEMBERSHIP_TOL: f64 = 1e-9;
    let mut out_steps = Vec::with_capacity(steps + 1);
    let mut max_error = 0.0f64;
    let mut violations = 0usize;
    for k in 0..=steps {
        let t = k as f64 * delta_c;
        let l = (t / delta_s) as usize;
        let sets = obs_map.sets_at(l);
        let mut observed: Vec<usize> = sets.iter().flatten().copied().collect();
        observed.sort_unstable();
        observed.dedup();
        let t_sample = l as f64 * delta_s;
        let hull_points: Vec<Vec2> =
            observed.iter().map(|&j| leaders.position(j, t_sample)).collect();
        let hull = hull_2d(&hull_points)?;

        let xs = &x_trajectory.samples()[k];
        let ys = &y_trajectory.samples()[k];
        let followers: Vec<Vec2> =
            (0..n).map(|i| Vec2::new(xs.x[i], ys.x[i])).collect();
        let xbar = Vec2::new(xs.avg, ys.avg);
        let errors: Vec<f64> = followers.iter().map(|f| f.dist(xbar)).collect();
        for e in &errors {
            max_error = math::max(max_error, *e);
        }
        let xbar_in_hull = contains(&hull, xbar, MEMBERSHIP_TOL);
        if !xbar_in_hull {
            violations += 1;
        }
        let follower_in_hull =
            followers.iter().map(|f| contains(&hull, *f, MEMBERSHIP_TOL)).collect();
        out_steps.push(ContainmentStep {
            k,
            t,
            followers,
            xbar,
            hull,
            errors,
            xbar_in_hull,
            follower_in_hull,
        });
    }

    Ok(ContainmentReport {
        steps: out_steps,
        max_error,
        xbar_membership_violations: violations,
        x_trajectory,
        y_trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(raw: &[(f64, f64)]) -> Vec<Vec2> {
        raw.iter().map(|&(x, y)| Vec2::new(x, y)).collect()
    }

    #[test]
    fn local_centroid_cases() {
        let leaders = LeaderEnsemble::new(
            vec![
                Leader::stationary(Vec2::new(3.0, 4.0)),
                Leader::stationary(Vec2::new(0.0, 0.0)),
                Leader::stationary(Vec2::new(4.0, 0.0)),
            ],
            1.0,
        )
        .unwrap();
        let obs = ObservationMap::new(vec![ObsEpoch {
            from_sample: 0,
            sets: vec![vec![0], vec![1, 2], vec![]],
        }])
        .unwrap();

        assert_eq!(local_centroid(&leaders, &obs, 1.0, 0, 0), Some(Vec2::new(3.0, 4.0)));
        assert_eq!(local_centroid(&leaders, &obs, 1.0, 0, 1), Some(Vec2::new(2.0, 0.0)));
        assert_eq!(local_centroid(&leaders, &obs, 1.0, 0, 2), None);
    }

    #[test]
    fn hull_examples() {
        let tri = hull_2d(&pts(&[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)])).unwrap();
        assert_eq!(tri.vertices().len(), 3);

        let square = hull_2d(&pts(&[
            (0.0, 0.0),
            (2.0, 0.0),
            (2.0, 2.0),
            (0.0, 2.0),
            (1.0, 1.0),
        ]))
        .unwrap();
        assert_eq!(square.vertices().len(), 4);
        for v in square.vertices() {
            assert!(v.x == 0.0 || v.x == 2.0);
        }

        // Collinear input degenerates to a segment with preserved membership.
        let seg = hull_2d(&pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)])).unwrap();
        assert_eq!(seg.vertices().len(), 2);
        assert!(contains(&seg, Vec2::new(1.5, 1.5), 1e-12));
        assert!(!contains(&seg, Vec2::new(1.5, 1.6), 1e-9));

        let point = hull_2d(&pts(&[(1.0, 1.0), (1.0, 1.0)])).unwrap();
        assert_eq!(point.vertices().len(), 1);
        assert!(contains(&point, Vec2::new(1.0, 1.0), 0.0));

        assert!(matches!(hull_2d(&[]), Err(Error::NoPoints)));
    }

    #[test]
    fn membership_cases() {
        let hull = hull_2d(&pts(&[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)])).unwrap();
        // A vertex is inside at zero tolerance.
        assert!(contains(&hull, Vec2::new(0.0, 0.0), 0.0));
        // The vertex centroid is inside.
        assert!(contains(&hull, Vec2::new(4.0 / 3.0, 4.0 / 3.0), 0.0));
        // A point pushed outward past the tolerance is out.
        let tol = 1e-6;
        assert!(!contains(&hull, Vec2::new(2.0, -2.0 * tol), tol));
        assert!(contains(&hull, Vec2::new(2.0, -0.5 * tol), tol));
    }

    #[test]
    fn nested_centroid_examples() {
        let points = pts(&[(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)]);
        let x = nested_centroid(&points, &[vec![0, 1], vec![1, 2]]).unwrap();
        assert_eq!(x, Vec2::new(2.0, 1.0));
        let hull = hull_2d(&points).unwrap();
        assert!(contains(&hull, x, 1e-9));

        // Single subset over everything: the ordinary centroid.
        let c = nested_centroid(&points, &[vec![0, 1, 2]]).unwrap();
        assert!((c.x - 4.0 / 3.0).abs() < 1e-15 && (c.y - 4.0 / 3.0).abs() < 1e-15);

        // Singleton subsets of one point collapse to it.
        let p = nested_centroid(&points, &[vec![1], vec![1], vec![1]]).unwrap();
        assert_eq!(p, Vec2::new(4.0, 0.0));

        assert!(matches!(
            nested_centroid(&points, &[vec![0], vec![]]),
            Err(Error::EmptySubset(1))
        ));
        assert!(matches!(
            nested_centroid(&points, &[vec![7]]),
            Err(Error::SubsetIndexOutOfRange { .. })
        ));
    }

    #[test]
    fn nested_centroid_differs_from_plain_centroid_under_overlap() {
        let points = pts(&[(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)]);
        let nested =
            nested_centroid(&points, &[vec![0], vec![0, 1], vec![0, 1, 2]]).unwrap();
        let plain = nested_centroid(&points, &[vec![0, 1, 2]]).unwrap();
        assert!(nested.dist(plain) > 1.0);
        let hull = hull_2d(&points).unwrap();
        assert!(contains(&hull, nested, 1e-9));
    }

    fn fig_style_setup() -> (Topology, ObservationMap, LeaderEnsemble) {
        let top = Topology::ring(4, 1.0).unwrap();
        let obs = ObservationMap::new(vec![ObsEpoch {
            from_sample: 0,
            sets: vec![vec![0, 1], vec![1, 2], vec![], vec![2, 3]],
        }])
        .unwrap();
        let leaders = LeaderEnsemble::new(
            vec![
                Leader::stationary(Vec2::new(0.0, 0.0)),
                Leader::stationary(Vec2::new(4.0, 0.0)),
                Leader::stationary(Vec2::new(4.0, 4.0)),
                Leader::stationary(Vec2::new(0.0, 4.0)),
            ],
            0.5,
        )
        .unwrap();
        (top, obs, leaders)
    }

    #[test]
    fn static_leaders_converge_to_interior_target() {
        let (top, obs, leaders) = fig_style_setup();
        let init = vec![Vec2::new(-3.0, 2.0); 4];
        let report = run_containment(&top, &obs, &leaders, 1.0, 0.1, 600, &init).unwrap();

        let last = report.steps.last().unwrap();
        for e in &last.errors {
            assert!(*e < 1e-3, "terminal follower error {e}");
        }
        assert!(last.xbar_in_hull);
        assert_eq!(report.xbar_membership_violations, 0);
        // Static leaders: the target is constant and inside the square.
        assert!(contains(&last.hull, last.xbar, 1e-9));
    }

    #[test]
    fn planar_run_equals_per_coordinate_runs_bitwise() {
        let (top, obs, leaders) = fig_style_setup();
        let init = [Vec2::new(1.0, -1.0), Vec2::new(0.0, 0.5), Vec2::default(), Vec2::new(2.0, 1.0)];
        let report = run_containment(&top, &obs, &leaders, 1.0, 0.25, 120, &init).unwrap();

        let (sx, sy) = coordinate_scenarios(&top, &obs, &leaders, 1.0, 0.25, 120).unwrap();
        let x0: Vec<f64> = init.iter().map(|p| p.x).collect();
        let y0: Vec<f64> = init.iter().map(|p| p.y).collect();
        let tx = dt_sim::simulate(&sx, &x0, &[0.0; 4]).unwrap();
        let ty = dt_sim::simulate(&sy, &y0, &[0.0; 4]).unwrap();
        for (k, step) in report.steps.iter().enumerate() {
            for i in 0..4 {
                assert_eq!(step.followers[i].x.to_bits(), tx.samples()[k].x[i].to_bits());
                assert_eq!(step.followers[i].y.to_bits(), ty.samples()[k].x[i].to_bits());
            }
        }
    }

    #[test]
    fn observation_union_must_be_nonempty() {
        assert!(matches!(
            ObservationMap::new(vec![ObsEpoch { from_sample: 0, sets: vec![vec![], vec![]] }]),
            Err(Error::EmptyObservationUnion { sample: 0 })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        /// Nested centroids always live inside the hull (fuzz version of
        /// the acceptance check).
        #[test]
        fn nested_centroid_in_hull(
            raw_points in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..20),
            subset_picks in proptest::collection::vec(
                proptest::collection::vec(proptest::bool::ANY, 20), 1..6
            ),
        ) {
            let points = pts(&raw_points);
            let mut subsets = Vec::new();
            for picks in &subset_picks {
                let subset: Vec<usize> = (0..points.len()).filter(|&i| picks[i]).collect();
                subsets.push(if subset.is_empty() { vec![0] } else { subset });
            }
            let x = nested_centroid(&points, &subsets).unwrap();
            let hull = hull_2d(&points).unwrap();
            prop_assert!(contains(&hull, x, 1e-9));
        }

        /// Every input point is inside-or-on its own hull.
        #[test]
        fn hull_contains_inputs(
            raw_points in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..40),
        ) {
            let points = pts(&raw_points);
            let hull = hull_2d(&points).unwrap();
            for p in &points {
                prop_assert!(contains(&hull, *p, 1e-9));
            }
        }
    }
}
