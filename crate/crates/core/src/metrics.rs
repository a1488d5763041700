//! Trajectory post-processing and metrics: Gaussian smoothing, maximum
//! lateral distance, front-pass classification, and the per-episode metric
//! report consumed by the experiment drivers.

use crate::env::{EnvConfig, EpisodeRecord, Status};
use crate::scalar::Scalar;
use crate::scenario::Scenario;
use crate::slm::{total_field, Pose};

/// Smoothing defaults used for displayed trajectories.
pub const SMOOTH_SIGMA: f64 = 2.0;
pub const SMOOTH_TRUNCATE: f64 = 3.0;

/// Virtual sample with odd (point) reflection about the endpoints, which
/// continues straight segments exactly and never enlarges the lateral
/// envelope relative to the endpoint line.
fn reflected<T: Scalar>(positions: &[[T; 2]], index: isize) -> [T; 2] {
    let n = positions.len() as isize;
    if index >= 0 && index < n {
        return positions[index as usize];
    }
    let two = T::cast(2.0);
    if index < 0 {
        let inner = reflected(positions, -index);
        let p0 = positions[0];
        [two * p0[0] - inner[0], two * p0[1] - inner[1]]
    } else {
        let inner = reflected(positions, 2 * (n - 1) - index);
        let pn = positions[(n - 1) as usize];
        [two * pn[0] - inner[0], two * pn[1] - inner[1]]
    }
}

/// Per-coordinate discrete Gaussian smoothing over the point index, with
/// reflected boundary handling and the first and last points pinned.
/// `kernel_sigma` is measured in steps; the kernel is truncated at
/// `truncate * kernel_sigma`. A non-positive sigma is the identity.
pub fn smooth_trajectory<T: Scalar>(positions: &[[T; 2]], kernel_sigma: f64, truncate: f64) -> Vec<[T; 2]> {
    let n = positions.len();
    if n < 3 || kernel_sigma <= 0.0 {
        return positions.to_vec();
    }
    let radius = (truncate * kernel_sigma).ceil() as isize;
    if radius == 0 {
        return positions.to_vec();
    }
    let mut weights = Vec::with_capacity((2 * radius + 1) as usize);
    let denom = 2.0 * kernel_sigma * kernel_sigma;
    for j in -radius..=radius {
        weights.push(T::cast((-((j * j) as f64) / denom).exp()));
    }
    let total: T = weights.iter().copied().sum();
    let mut out = Vec::with_capacity(n);
    out.push(positions[0]);
    for i in 1..n - 1 {
        let mut acc = [T::zero(); 2];
        for (w, j) in weights.iter().zip(-radius..=radius) {
            let p = reflected(positions, i as isize + j);
            acc[0] = acc[0] + *w * p[0];
            acc[1] = acc[1] + *w * p[1];
        }
        out.push([acc[0] / total, acc[1] / total]);
    }
    out.push(positions[n - 1]);
    out
}

/// Maximum perpendicular distance from any trajectory point to the infinite
/// line through `start` and `goal`.
pub fn compute_mld<T: Scalar>(positions: &[[T; 2]], start: [T; 2], goal: [T; 2]) -> T {
    let dx = goal[0] - start[0];
    let dy = goal[1] - start[1];
    let len = (dx * dx + dy * dy).sqrt();
    if len == T::zero() {
        return T::zero();
    }
    let (ux, uy) = (dx / len, dy / len);
    let mut max = T::zero();
    for p in positions {
        let rx = p[0] - start[0];
        let ry = p[1] - start[1];
        let lateral = (ux * ry - uy * rx).abs();
        max = max.max(lateral);
    }
    max
}

/// True when the trajectory's point of closest approach to the human lies
/// strictly in the human's facing half-plane. Ties in the distance scan
/// resolve to the earliest point.
pub fn classify_front_pass<T: Scalar>(positions: &[[T; 2]], human: &Pose<T>) -> bool {
    let mut best_idx = 0usize;
    let mut best_d2 = T::infinity();
    for (i, p) in positions.iter().enumerate() {
        let dx = p[0] - human.x;
        let dy = p[1] - human.y;
        let d2 = dx * dx + dy * dy;
        if d2 < best_d2 {
            best_d2 = d2;
            best_idx = i;
        }
    }
    let p = positions[best_idx];
    let (hx, hy) = (human.heading.cos(), human.heading.sin());
    (p[0] - human.x) * hx + (p[1] - human.y) * hy > T::zero()
}

/// Post-processed measurements of one evaluation episode.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub scenario_id: String,
    pub status: Status,
    /// Maximum lateral distance of the raw trajectory.
    pub mld: f64,
    /// Maximum lateral distance of the Gaussian-smoothed display trajectory.
    pub mld_smoothed: f64,
    pub path_length: f64,
    /// Straight-line distance from start to goal.
    pub straight_length: f64,
    /// Raw path length over the straight distance between the trajectory's
    /// own endpoints; at least 1 for any non-degenerate path.
    pub detour_ratio: f64,
    /// Facing-side classification against the scenario's human; absent for
    /// multi-human scenarios.
    pub front_pass: Option<bool>,
    /// Sum of the raw social field along the raw trajectory, re-evaluated
    /// pose by pose.
    pub field_integral: f64,
}

/// Computes every metric for one episode of a scenario.
pub fn compute_metrics(record: &EpisodeRecord<f64>, scenario: &Scenario, env_cfg: &EnvConfig<f64>) -> MetricReport {
    let positions = &record.positions;
    let smoothed = smooth_trajectory(positions, SMOOTH_SIGMA, SMOOTH_TRUNCATE);
    let mld = compute_mld(positions, scenario.start, scenario.goal);
    let mld_smoothed = compute_mld(&smoothed, scenario.start, scenario.goal);
    let path_length = record.path_length();
    let end = *positions.last().expect("record holds at least the start position");
    let chord = ((end[0] - scenario.start[0]).powi(2) + (end[1] - scenario.start[1]).powi(2)).sqrt();
    let detour_ratio = if chord > 0.0 { path_length / chord } else { f64::INFINITY };
    let front_pass = if scenario.humans.len() == 1 {
        Some(classify_front_pass(positions, &scenario.humans[0]))
    } else {
        None
    };
    let mut field_integral = 0.0;
    for step in &record.steps {
        let pose = Pose::new(step.position[0], step.position[1], step.heading);
        field_integral += total_field(&pose, &scenario.humans, &env_cfg.slm)
            .map(|s| s.total)
            .unwrap_or(f64::NAN);
    }
    MetricReport {
        scenario_id: scenario.id.clone(),
        status: record.status,
        mld,
        mld_smoothed,
        path_length,
        straight_length: scenario.straight_length(),
        detour_ratio,
        front_pass,
        field_integral,
    }
}
