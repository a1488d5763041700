//! Scenario data model, suite file I/O, and deterministic generators for
//! the experiment suites.
//!
//! Coordinates are meters in an arena-centered frame: the square arena of
//! side `arena_side` spans `[-side/2, side/2]` on both axes. Suite files are
//! JSON with headings stored in degrees; all values are quantized to 1e-6 so
//! that save/load round-trips are byte-identical.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slm::Pose;

/// Humans closer than this are rejected (keeps the pairwise field away from
/// its degenerate-distance domain).
pub const MIN_HUMAN_SPACING: f64 = 0.3;
/// Humans may not stand closer than this to the start or the goal; equals
/// the default success threshold (one step length).
pub const MIN_ENDPOINT_CLEARANCE: f64 = 0.45;
/// Default cap on the lateral offset of a generated single human from the
/// start-goal segment.
pub const DEFAULT_LATERAL_OFFSET: f64 = 0.5;

const DEFAULT_ARENA_SIDE: f64 = 15.0;
/// Generated geometry keeps this margin to the arena edge.
const EDGE_MARGIN: f64 = 0.3;

/// One navigation task: arena, endpoints, and static humans.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub arena_side: f64,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub humans: Vec<Pose<f64>>,
    pub tags: Vec<String>,
}

impl Scenario {
    pub fn straight_length(&self) -> f64 {
        let dx = self.goal[0] - self.start[0];
        let dy = self.goal[1] - self.start[1];
        (dx * dx + dy * dy).sqrt()
    }

    /// Checks every scenario invariant; errors name the scenario.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidScenario { id: self.id.clone(), reason });
        if !(self.arena_side.is_finite() && self.arena_side > 0.0) {
            return fail(format!("arena_side must be positive, got {}", self.arena_side));
        }
        let half = self.arena_side / 2.0;
        let inside = |p: [f64; 2]| p[0].is_finite() && p[1].is_finite() && p[0].abs() <= half && p[1].abs() <= half;
        if !inside(self.start) {
            return fail(format!("start {:?} outside the arena", self.start));
        }
        if !inside(self.goal) {
            return fail(format!("goal {:?} outside the arena", self.goal));
        }
        if self.start == self.goal {
            return fail("start and goal coincide".into());
        }
        for (k, h) in self.humans.iter().enumerate() {
            if !h.heading.is_finite() {
                return fail(format!("human {k} has non-finite heading"));
            }
            if !inside([h.x, h.y]) {
                return fail(format!("human {k} at ({}, {}) outside the arena", h.x, h.y));
            }
            for (j, other) in self.humans.iter().enumerate().take(k) {
                let d = h.distance_to(other);
                if d < MIN_HUMAN_SPACING {
                    return fail(format!("humans {j} and {k} only {d:.4} m apart"));
                }
            }
            for (name, p) in [("start", self.start), ("goal", self.goal)] {
                let d = ((h.x - p[0]).powi(2) + (h.y - p[1]).powi(2)).sqrt();
                if d < MIN_ENDPOINT_CLEARANCE {
                    return fail(format!("human {k} within {d:.4} m of {name}"));
                }
            }
        }
        Ok(())
    }
}

/// A named list of scenarios, the on-disk unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Suite {
    pub name: String,
    pub scenarios: Vec<Scenario>,
}

impl Suite {
    pub fn new(name: impl Into<String>, scenarios: Vec<Scenario>) -> Self {
        Suite { name: name.into(), scenarios }
    }

    pub fn by_id(&self, id: &str) -> Option<&Scenario> {
        self.scenarios.iter().find(|s| s.id == id)
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    /// Canonical JSON form: quantized values, headings in degrees, fixed
    /// field order, trailing newline.
    pub fn to_json(&self) -> String {
        let file = SuiteFile {
            suite: self.name.clone(),
            scenarios: self
                .scenarios
                .iter()
                .map(|s| ScenarioFile {
                    id: s.id.clone(),
                    arena_side: quant6(s.arena_side),
                    start: [quant6(s.start[0]), quant6(s.start[1])],
                    goal: [quant6(s.goal[0]), quant6(s.goal[1])],
                    humans: s
                        .humans
                        .iter()
                        .map(|h| HumanFile {
                            x: quant6(h.x),
                            y: quant6(h.y),
                            heading_deg: quant6(h.heading.to_degrees()),
                        })
                        .collect(),
                    tags: s.tags.clone(),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("suite serialization cannot fail");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SuiteFile = serde_json::from_str(text).map_err(|e| Error::ScenarioParse(e.to_string()))?;
        let scenarios: Vec<Scenario> = file
            .scenarios
            .into_iter()
            .map(|s| Scenario {
                id: s.id,
                arena_side: s.arena_side,
                start: s.start,
                goal: s.goal,
                humans: s.humans.iter().map(|h| Pose::new(h.x, h.y, h.heading_deg.to_radians())).collect(),
                tags: s.tags,
            })
            .collect();
        for s in &scenarios {
            s.validate()?;
        }
        Ok(Suite { name: file.suite, scenarios })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteFile {
    suite: String,
    scenarios: Vec<ScenarioFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    id: String,
    arena_side: f64,
    start: [f64; 2],
    goal: [f64; 2],
    humans: Vec<HumanFile>,
    tags: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HumanFile {
    x: f64,
    y: f64,
    heading_deg: f64,
}

fn quant6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Quantizes a pose the same way the file format does, so generated
/// scenarios are identical before and after a save/load cycle.
fn canonical_pose(x: f64, y: f64, heading_rad: f64) -> Pose<f64> {
    let heading_deg = quant6(crate::scalar::normalize_angle(heading_rad).to_degrees());
    Pose::new(quant6(x), quant6(y), heading_deg.to_radians())
}

/// Stable 64-bit seed derivation: every generator and sweep cell gets its
/// own ChaCha stream from (base seed, textual tag).
pub fn derive_seed(base: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in tag.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    // splitmix64 finalizer over the combined value
    let mut z = base ^ h;
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn unit(angle: f64) -> [f64; 2] {
    [angle.cos(), angle.sin()]
}

/// Movement directions available to the agent by default; generated
/// segments align with this grid so the shortest path between the
/// endpoints is actually representable and lateral-deviation metrics
/// measure avoidance behavior rather than direction-quantization error.
const SEGMENT_DIRECTIONS: usize = 16;

/// Start/goal pair at least 10 m apart, inside the arena with margin,
/// with a bearing on the default action grid.
fn sample_segment(rng: &mut ChaCha20Rng, half: f64) -> ([f64; 2], [f64; 2]) {
    loop {
        let dir_idx = (rng.random::<f64>() * SEGMENT_DIRECTIONS as f64) as usize % SEGMENT_DIRECTIONS;
        let dir = dir_idx as f64 * std::f64::consts::TAU / SEGMENT_DIRECTIONS as f64;
        let length = 10.1 + rng.random::<f64>() * 2.4;
        let cx = (rng.random::<f64>() * 2.0 - 1.0) * 1.0;
        let cy = (rng.random::<f64>() * 2.0 - 1.0) * 1.0;
        let [ux, uy] = unit(dir);
        let start = [cx - 0.5 * length * ux, cy - 0.5 * length * uy];
        let goal = [cx + 0.5 * length * ux, cy + 0.5 * length * uy];
        let limit = half - EDGE_MARGIN;
        let ok = [start, goal]
            .iter()
            .all(|p| p[0].abs() <= limit && p[1].abs() <= limit);
        if ok {
            return (start, goal);
        }
    }
}

fn single_human_rule(
    count: usize,
    seed: u64,
    namespace: &str,
    id_prefix: &str,
    tags: &[&str],
    lateral_max: f64,
    on_line: bool,
) -> Vec<Scenario> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, &format!("{namespace}/{i}")));
            loop {
                let half = DEFAULT_ARENA_SIDE / 2.0;
                let (start, goal) = sample_segment(&mut rng, half);
                let dx = goal[0] - start[0];
                let dy = goal[1] - start[1];
                let len = (dx * dx + dy * dy).sqrt();
                let t = 0.3 + rng.random::<f64>() * 0.4;
                let lateral = if on_line {
                    0.0
                } else {
                    (rng.random::<f64>() * 2.0 - 1.0) * lateral_max * 0.998
                };
                let nx = -dy / len;
                let ny = dx / len;
                let hx = start[0] + t * dx + lateral * nx;
                let hy = start[1] + t * dy + lateral * ny;
                let heading = rng.random::<f64>() * std::f64::consts::TAU - std::f64::consts::PI;
                let scenario = Scenario {
                    id: format!("{id_prefix}-{i:03}"),
                    arena_side: DEFAULT_ARENA_SIDE,
                    start: [quant6(start[0]), quant6(start[1])],
                    goal: [quant6(goal[0]), quant6(goal[1])],
                    humans: vec![canonical_pose(hx, hy, heading)],
                    tags: tags.iter().map(|t| t.to_string()).collect(),
                };
                if scenario.validate().is_ok() {
                    return scenario;
                }
            }
        })
        .collect()
}

/// Single-human suite: endpoints at least 10 m apart, one human within
/// `DEFAULT_LATERAL_OFFSET` of the start-goal segment at 30-70% of its
/// length, uniformly random heading.
pub fn gen_single_human(count: usize, seed: u64) -> Vec<Scenario> {
    single_human_rule(count, seed, "single", "single", &["single"], DEFAULT_LATERAL_OFFSET, false)
}

/// Same rule with a caller-chosen lateral bound.
pub fn gen_single_human_with_offset(count: usize, seed: u64, lateral_max: f64) -> Vec<Scenario> {
    single_human_rule(count, seed, "single", "single", &["single"], lateral_max, false)
}

/// 21 single-human scenarios on independent seed streams, used by the
/// heading-irrelevant component ablations and the sigma sweep.
pub fn gen_hisc_cac_suite(seed: u64) -> Vec<Scenario> {
    single_human_rule(21, seed, "hisccac", "hisccac", &["hisc-cac", "single"], DEFAULT_LATERAL_OFFSET, false)
}

/// 42 scenarios probing orientation sensitivity: the human stands on the
/// start-goal line with a heading 30-150 degrees off it, exactly 21 facing
/// each side of the line.
pub fn gen_hrsc_suite(seed: u64) -> Vec<Scenario> {
    (0..42usize)
        .map(|i| {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, &format!("hrsc/{i}")));
            let left = i % 2 == 0;
            loop {
                let half = DEFAULT_ARENA_SIDE / 2.0;
                let (start, goal) = sample_segment(&mut rng, half);
                let dx = goal[0] - start[0];
                let dy = goal[1] - start[1];
                let line_angle = dy.atan2(dx);
                let t = 0.3 + rng.random::<f64>() * 0.4;
                let mut u = rng.random::<f64>();
                if u == 0.0 {
                    u = 0.5;
                }
                let rel = (30.0 + u * 120.0).to_radians();
                let heading = if left { line_angle + rel } else { line_angle - rel };
                let scenario = Scenario {
                    id: format!("hrsc-{i:03}"),
                    arena_side: DEFAULT_ARENA_SIDE,
                    start: [quant6(start[0]), quant6(start[1])],
                    goal: [quant6(goal[0]), quant6(goal[1])],
                    humans: vec![canonical_pose(start[0] + t * dx, start[1] + t * dy, heading)],
                    tags: vec!["hrsc".into(), if left { "left" } else { "right" }.into()],
                };
                if scenario.validate().is_ok() {
                    return scenario;
                }
            }
        })
        .collect()
}

/// Multi-human suite: three humans in a conversational ring (pairwise 1-2 m,
/// headings toward the formation centroid within 20 degrees), centroid within
/// 1 m of the start-goal segment.
pub fn gen_multi_human(count: usize, seed: u64) -> Vec<Scenario> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, &format!("multi/{i}")));
            loop {
                let half = DEFAULT_ARENA_SIDE / 2.0;
                let (start, goal) = sample_segment(&mut rng, half);
                let dx = goal[0] - start[0];
                let dy = goal[1] - start[1];
                let len = (dx * dx + dy * dy).sqrt();
                let t = 0.35 + rng.random::<f64>() * 0.3;
                let lateral = (rng.random::<f64>() * 2.0 - 1.0) * 0.999;
                let cx = start[0] + t * dx + lateral * (-dy / len);
                let cy = start[1] + t * dy + lateral * (dx / len);
                let base = rng.random::<f64>() * std::f64::consts::TAU;
                let mut offsets = Vec::with_capacity(3);
                let mut sways = Vec::with_capacity(3);
                for j in 0..3 {
                    let jitter = (rng.random::<f64>() * 2.0 - 1.0) * 25.0f64.to_radians();
                    let angle = base + j as f64 * std::f64::consts::TAU / 3.0 + jitter;
                    let radius = 0.60 + rng.random::<f64>() * 0.45;
                    offsets.push([radius * angle.cos(), radius * angle.sin()]);
                    sways.push((rng.random::<f64>() * 2.0 - 1.0) * 19.8f64.to_radians());
                }
                // recenter the ring so the formation centroid lands exactly
                // on the sampled near-segment point
                let mx = offsets.iter().map(|o| o[0]).sum::<f64>() / 3.0;
                let my = offsets.iter().map(|o| o[1]).sum::<f64>() / 3.0;
                let mut humans = Vec::with_capacity(3);
                for (o, sway) in offsets.iter().zip(&sways) {
                    let hx = cx + o[0] - mx;
                    let hy = cy + o[1] - my;
                    let toward = (cy - hy).atan2(cx - hx);
                    humans.push(canonical_pose(hx, hy, toward + sway));
                }
                let spacing_ok = (0..3).all(|a| {
                    (0..a).all(|b| {
                        let d = humans[a].distance_to(&humans[b]);
                        (1.002..=1.998).contains(&d)
                    })
                });
                if !spacing_ok {
                    continue;
                }
                let scenario = Scenario {
                    id: format!("multi-{i:03}"),
                    arena_side: DEFAULT_ARENA_SIDE,
                    start: [quant6(start[0]), quant6(start[1])],
                    goal: [quant6(goal[0]), quant6(goal[1])],
                    humans,
                    tags: vec!["multi".into()],
                };
                if scenario.validate().is_ok() {
                    return scenario;
                }
            }
        })
        .collect()
}
