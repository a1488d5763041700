//! Episodic 2-D navigation environment.
//!
//! The agent starts at the scenario start, moves a fixed step length along
//! one of `n_headings` evenly spaced directions per step, and is rewarded
//! for goal progress, penalized a constant per-step energy cost, and
//! penalized the social field value at its new pose. Reaching the goal
//! region, leaving the arena, or exhausting the step budget terminates the
//! episode with an extra `+C`/`-C` term on top of the step components.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{normalize_angle, Scalar};
use crate::scenario::Scenario;
use crate::slm::{total_field, Pose, SlmParams};

/// Environment parameters; defaults reproduce the reference setup
/// (15 m arena, 0.45 m steps, gamma 0.9, sigma 0.5, C 500, alpha 1).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EnvConfig<T> {
    /// Side length of the square arena, meters. The arena spans
    /// `[-arena/2, arena/2]` on both axes.
    pub arena: T,
    /// Distance covered by every step, meters.
    pub step_length: T,
    /// Success when the distance to the goal drops below this, meters.
    pub success_threshold: T,
    /// Episode fails once this many steps have been taken without success.
    pub max_steps: usize,
    /// Number of evenly spaced movement directions.
    pub n_headings: usize,
    /// Discount factor for returns.
    pub gamma: T,
    /// Weight of the social field term in the step reward.
    pub sigma: T,
    /// Magnitude of the terminal bonus/penalty.
    pub terminal_c: T,
    /// Constant per-step energy cost.
    pub alpha: T,
    /// When true the social term is added instead of subtracted (the
    /// literal published sign); the default penalizes discomfort.
    pub social_term_positive: bool,
    pub slm: SlmParams<T>,
}

impl<T: Scalar> Default for EnvConfig<T> {
    fn default() -> Self {
        let step = T::cast(0.45);
        EnvConfig {
            arena: T::cast(15.0),
            step_length: step,
            success_threshold: step,
            max_steps: 200,
            n_headings: 16,
            gamma: T::cast(0.9),
            sigma: T::cast(0.5),
            terminal_c: T::cast(500.0),
            alpha: T::one(),
            social_term_positive: false,
            slm: SlmParams::default(),
        }
    }
}

impl<T: Scalar> EnvConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidBounds(msg));
        if !(self.step_length > T::zero() && self.step_length < self.arena) {
            return bad(format!("need 0 < step_length < arena, got {} / {}", self.step_length, self.arena));
        }
        if !(self.success_threshold > T::zero()) {
            return bad(format!("success_threshold must be > 0, got {}", self.success_threshold));
        }
        if self.n_headings < 4 {
            return bad(format!("n_headings must be at least 4, got {}", self.n_headings));
        }
        if !(self.gamma > T::zero() && self.gamma <= T::one()) {
            return bad(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if self.sigma < T::zero() {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        self.slm.validate()
    }

    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_slm(mut self, slm: SlmParams<T>) -> Self {
        self.slm = slm;
        self
    }

    /// Movement direction of a discrete action, radians in `(-pi, pi]`.
    pub fn action_heading(&self, action: usize) -> T {
        let tau = T::PI() + T::PI();
        normalize_angle(tau * T::cast(action as f64) / T::cast(self.n_headings as f64))
    }

    /// Stable hash of every field that affects environment dynamics; stored
    /// in checkpoints and manifests so runs can be matched to their setup.
    pub fn fingerprint(&self) -> String {
        let s = self;
        let text = format!(
            "arena={};step={};succ={};max={};nh={};gamma={};sigma={};c={};alpha={};pos={};slm={},{},{},{},{},{},{},{},{},{},{}",
            s.arena.as_f64(),
            s.step_length.as_f64(),
            s.success_threshold.as_f64(),
            s.max_steps,
            s.n_headings,
            s.gamma.as_f64(),
            s.sigma.as_f64(),
            s.terminal_c.as_f64(),
            s.alpha.as_f64(),
            s.social_term_positive,
            s.slm.m_agent.as_f64(),
            s.slm.n_agent.as_f64(),
            s.slm.m_person.as_f64(),
            s.slm.n_person.as_f64(),
            s.slm.a.as_f64(),
            s.slm.b.as_f64(),
            s.slm.c.as_f64(),
            s.slm.k_cap.as_f64(),
            s.slm.enable_hrsc,
            s.slm.enable_hisc,
            s.slm.enable_cac,
        );
        let mut h: u64 = 0xcbf29ce484222325;
        for b in text.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

/// Episode state after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    Success,
    FailureOutOfBounds,
    FailureStepLimit,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Running
    }

    pub fn is_success(self) -> bool {
        self == Status::Success
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::Success => "success",
            Status::FailureOutOfBounds => "failure_out_of_bounds",
            Status::FailureStepLimit => "failure_step_limit",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Flat observation vector of length `3n + 2`: normalized agent position,
/// then per human its normalized relative position and raw heading.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<T>(Vec<T>);

impl<T> Observation<T> {
    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }
}

/// The logged components of one step reward; the step reward equals
/// `distance + energy + social_weighted + terminal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBreakdown<T> {
    pub distance: T,
    pub energy: T,
    /// Raw field total at the post-step pose.
    pub social_raw: T,
    /// Signed, sigma-weighted social contribution as applied.
    pub social_weighted: T,
    /// `+C`, `-C`, or zero.
    pub terminal: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub observation: Observation<T>,
    pub reward: T,
    pub status: Status,
    pub breakdown: RewardBreakdown<T>,
}

/// Everything recorded about one executed step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T> {
    pub action: usize,
    pub heading: T,
    pub position: [T; 2],
    pub reward: T,
    pub breakdown: RewardBreakdown<T>,
    pub status: Status,
}

/// Full rollout of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord<T> {
    /// Start position followed by the position after every step.
    pub positions: Vec<[T; 2]>,
    pub steps: Vec<StepRecord<T>>,
    pub total_reward: T,
    pub discounted_return: T,
    pub status: Status,
}

impl<T: Scalar> EpisodeRecord<T> {
    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn path_length(&self) -> T {
        let mut acc = T::zero();
        for w in self.positions.windows(2) {
            let dx = w[1][0] - w[0][0];
            let dy = w[1][1] - w[0][1];
            acc = acc + (dx * dx + dy * dy).sqrt();
        }
        acc
    }

    /// Sum of the raw social field values along the trajectory.
    pub fn social_raw_sum(&self) -> T {
        self.steps.iter().map(|s| s.breakdown.social_raw).sum()
    }

    /// Per-step CSV: `step,x,y,heading,r_total,r_d,r_e,r_s_weighted,status`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "step,x,y,heading,r_total,r_d,r_e,r_s_weighted,status")?;
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                i + 1,
                s.position[0].as_f64(),
                s.position[1].as_f64(),
                s.heading.as_f64(),
                s.reward.as_f64(),
                s.breakdown.distance.as_f64(),
                s.breakdown.energy.as_f64(),
                s.breakdown.social_weighted.as_f64(),
                s.status
            )?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        let mut buf = std::io::BufWriter::new(file);
        self.write_csv(&mut buf).map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

/// Constant per-step energy reward, `-alpha`.
pub fn reward_energy<T: Scalar>(config: &EnvConfig<T>) -> T {
    -config.alpha
}

/// Goal-progress reward: distance reduction over one step, normalized by
/// the step length; lies in `[-1, 1]` because steps have fixed length.
pub fn reward_distance<T: Scalar>(d_prev: T, d_curr: T, config: &EnvConfig<T>) -> T {
    (d_prev - d_curr) / config.step_length
}

/// Raw social field total at an agent pose (unweighted).
pub fn reward_social<T: Scalar>(agent_pose: &Pose<T>, persons: &[Pose<T>], config: &EnvConfig<T>) -> Result<T> {
    Ok(total_field(agent_pose, persons, &config.slm)?.total)
}

/// Termination test; precedence: success, then out-of-bounds, then the
/// step limit.
pub fn check_termination<T: Scalar>(
    position: [T; 2],
    goal: [T; 2],
    steps_taken: usize,
    config: &EnvConfig<T>,
) -> Status {
    let dx = goal[0] - position[0];
    let dy = goal[1] - position[1];
    if (dx * dx + dy * dy).sqrt() < config.success_threshold {
        return Status::Success;
    }
    let half = config.arena / T::cast(2.0);
    if position[0].abs() > half || position[1].abs() > half {
        return Status::FailureOutOfBounds;
    }
    if steps_taken >= config.max_steps {
        return Status::FailureStepLimit;
    }
    Status::Running
}

/// Sum of `gamma^t * r_t` over an ordered reward sequence.
pub fn discounted_return<T: Scalar>(rewards: &[T], gamma: T) -> T {
    let mut acc = T::zero();
    for &r in rewards.iter().rev() {
        acc = gamma * acc + r;
    }
    acc
}

/// One episodic environment instance bound to a scenario; single-threaded,
/// any number of independent instances may run concurrently.
#[derive(Debug, Clone)]
pub struct NavEnv<T> {
    config: EnvConfig<T>,
    start: [T; 2],
    goal: [T; 2],
    humans: Vec<Pose<T>>,
    agent: [T; 2],
    steps_taken: usize,
    status: Status,
    positions: Vec<[T; 2]>,
    steps: Vec<StepRecord<T>>,
}

impl<T: Scalar> NavEnv<T> {
    /// Builds and resets an environment; errors when the scenario violates
    /// its own invariants or does not match the configured arena.
    pub fn new(scenario: &Scenario, config: EnvConfig<T>) -> Result<Self> {
        config.validate()?;
        scenario.validate()?;
        if (scenario.arena_side - config.arena.as_f64()).abs() > 1e-9 {
            return Err(Error::InvalidScenario {
                id: scenario.id.clone(),
                reason: format!(
                    "scenario arena_side {} does not match configured arena {}",
                    scenario.arena_side, config.arena
                ),
            });
        }
        let cvt = |p: [f64; 2]| [T::cast(p[0]), T::cast(p[1])];
        let mut env = NavEnv {
            config,
            start: cvt(scenario.start),
            goal: cvt(scenario.goal),
            humans: scenario
                .humans
                .iter()
                .map(|h| Pose::new(T::cast(h.x), T::cast(h.y), T::cast(h.heading)))
                .collect(),
            agent: [T::zero(); 2],
            steps_taken: 0,
            status: Status::Running,
            positions: Vec::new(),
            steps: Vec::new(),
        };
        env.reset();
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig<T> {
        &self.config
    }

    pub fn humans(&self) -> &[Pose<T>] {
        &self.humans
    }

    pub fn goal(&self) -> [T; 2] {
        self.goal
    }

    pub fn agent_position(&self) -> [T; 2] {
        self.agent
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Observation length for `n` humans, `3n + 2`.
    pub fn observation_len(&self) -> usize {
        3 * self.humans.len() + 2
    }

    /// Places the agent back on the start and returns the first observation.
    pub fn reset(&mut self) -> Observation<T> {
        self.agent = self.start;
        self.steps_taken = 0;
        self.status = Status::Running;
        self.positions.clear();
        self.positions.push(self.agent);
        self.steps.clear();
        self.observation()
    }

    /// Current observation: normalized agent position, then per human its
    /// normalized relative position and heading.
    pub fn observation(&self) -> Observation<T> {
        let half = self.config.arena / T::cast(2.0);
        let mut v = Vec::with_capacity(self.observation_len());
        v.push(self.agent[0] / half);
        v.push(self.agent[1] / half);
        for h in &self.humans {
            v.push((h.x - self.agent[0]) / half);
            v.push((h.y - self.agent[1]) / half);
            v.push(h.heading);
        }
        Observation(v)
    }

    pub fn distance_to_goal(&self) -> T {
        let dx = self.goal[0] - self.agent[0];
        let dy = self.goal[1] - self.agent[1];
        (dx * dx + dy * dy).sqrt()
    }

    /// Executes one fixed-length step along the chosen heading.
    pub fn step(&mut self, action: usize) -> Result<StepOutcome<T>> {
        if self.status.is_terminal() {
            return Err(Error::EpisodeFinished);
        }
        if action >= self.config.n_headings {
            return Err(Error::Dimension(format!(
                "action index {action} out of range for {} headings",
                self.config.n_headings
            )));
        }
        let heading = self.config.action_heading(action);
        let (sin, cos) = heading.sin_cos();
        let d_prev = self.distance_to_goal();
        self.agent = [self.agent[0] + self.config.step_length * cos, self.agent[1] + self.config.step_length * sin];
        let d_curr = self.distance_to_goal();
        self.steps_taken += 1;

        let pose = Pose::new(self.agent[0], self.agent[1], heading);
        let social_raw = reward_social(&pose, &self.humans, &self.config)?;
        let weighted = self.config.sigma * social_raw;
        let social_weighted = if self.config.social_term_positive { weighted } else { -weighted };

        self.status = check_termination(self.agent, self.goal, self.steps_taken, &self.config);
        let terminal = match self.status {
            Status::Running => T::zero(),
            Status::Success => self.config.terminal_c,
            Status::FailureOutOfBounds | Status::FailureStepLimit => -self.config.terminal_c,
        };

        let breakdown = RewardBreakdown {
            distance: reward_distance(d_prev, d_curr, &self.config),
            energy: reward_energy(&self.config),
            social_raw,
            social_weighted,
            terminal,
        };
        let reward = breakdown.distance + breakdown.energy + breakdown.social_weighted + breakdown.terminal;

        self.positions.push(self.agent);
        self.steps.push(StepRecord {
            action,
            heading,
            position: self.agent,
            reward,
            breakdown,
            status: self.status,
        });

        Ok(StepOutcome { observation: self.observation(), reward, status: self.status, breakdown })
    }

    /// Snapshot of everything since the last reset.
    pub fn episode_record(&self) -> EpisodeRecord<T> {
        let rewards: Vec<T> = self.steps.iter().map(|s| s.reward).collect();
        EpisodeRecord {
            positions: self.positions.clone(),
            steps: self.steps.clone(),
            total_reward: rewards.iter().copied().sum(),
            discounted_return: discounted_return(&rewards, self.config.gamma),
            status: self.status,
        }
    }
}
