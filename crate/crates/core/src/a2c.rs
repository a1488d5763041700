//! Advantage actor-critic trainer coupling the navigation environment with
//! the dense-network module.
//!
//! One trainer instance is strictly single-threaded so that a seed fully
//! determines every output; independent runs (sweep cells) parallelize at
//! the process or task level.

use std::io::{BufRead, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::env::{EnvConfig, EpisodeRecord, NavEnv, Status};
use crate::error::{Error, Result};
use crate::net::{
    clip_global_norm, log_softmax, softmax_logits_to_dist, MlpGrads, MlpParams, RmspropState,
};
use crate::scalar::Scalar;
use crate::scenario::Scenario;

/// Hidden stack shared by the actor and the critic.
pub const HIDDEN_LAYERS: [usize; 5] = [64, 128, 256, 128, 64];

pub fn actor_layer_sizes(obs_len: usize, n_actions: usize) -> Vec<usize> {
    let mut v = Vec::with_capacity(HIDDEN_LAYERS.len() + 2);
    v.push(obs_len);
    v.extend_from_slice(&HIDDEN_LAYERS);
    v.push(n_actions);
    v
}

pub fn critic_layer_sizes(obs_len: usize) -> Vec<usize> {
    actor_layer_sizes(obs_len, 1)
}

/// Trainer hyperparameters; defaults follow the reference A2C setup
/// (5-step rollouts, value coefficient 0.5, gradient clip 0.5, RMSprop at
/// learning rate 5e-4) over a 10,000-step budget.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub total_env_steps: usize,
    pub n_steps: usize,
    pub value_loss_coef: f64,
    pub entropy_coef: f64,
    pub grad_clip_norm: f64,
    pub seed: u64,
    pub learning_rate: f64,
    pub decay_rho: f64,
    pub epsilon: f64,
    /// Episode interval used by callers that print progress; the log itself
    /// always records every episode.
    pub log_interval: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            total_env_steps: 10_000,
            n_steps: 5,
            value_loss_coef: 0.5,
            entropy_coef: 0.0,
            grad_clip_norm: 0.5,
            seed: 0,
            learning_rate: 5e-4,
            decay_rho: 0.99,
            epsilon: 1e-8,
            log_interval: 50,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 || self.total_env_steps < self.n_steps {
            return Err(Error::InvalidBounds(format!(
                "need total_env_steps >= n_steps >= 1, got {} / {}",
                self.total_env_steps, self.n_steps
            )));
        }
        if self.value_loss_coef < 0.0 || self.entropy_coef < 0.0 || self.grad_clip_norm < 0.0 {
            return Err(Error::InvalidBounds("loss coefficients must be >= 0".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// One environment transition plus the critic value of its state.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<T> {
    pub obs: Vec<T>,
    pub action: usize,
    pub reward: T,
    pub done: bool,
    pub value: T,
}

/// A fixed-length rollout window; `bootstrap_value` is the critic value of
/// the state following the last transition, zero when that transition ended
/// its episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBatch<T> {
    pub transitions: Vec<Transition<T>>,
    pub bootstrap_value: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeStat {
    pub index: usize,
    pub env_step: usize,
    pub reward: f64,
    pub length: usize,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStat {
    pub index: usize,
    pub env_step: usize,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    /// Joint gradient norm before clipping.
    pub grad_norm: f64,
}

/// Append-only training log, exported as two CSV files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub episodes: Vec<EpisodeStat>,
    pub updates: Vec<UpdateStat>,
}

impl TrainLog {
    pub fn write_episodes_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "episode_idx,env_step,reward,length,status")?;
        for e in &self.episodes {
            writeln!(w, "{},{},{},{},{}", e.index, e.env_step, e.reward, e.length, e.status)?;
        }
        Ok(())
    }

    pub fn write_updates_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "update_idx,env_step,policy_loss,value_loss,entropy,grad_norm")?;
        for u in &self.updates {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                u.index, u.env_step, u.policy_loss, u.value_loss, u.entropy, u.grad_norm
            )?;
        }
        Ok(())
    }

    pub fn save(&self, episodes_path: &Path, updates_path: &Path) -> Result<()> {
        let f = std::fs::File::create(episodes_path)
            .map_err(|e| Error::io(format!("creating {}", episodes_path.display()), e))?;
        self.write_episodes_csv(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(format!("writing {}", episodes_path.display()), e))?;
        let f = std::fs::File::create(updates_path)
            .map_err(|e| Error::io(format!("creating {}", updates_path.display()), e))?;
        self.write_updates_csv(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(format!("writing {}", updates_path.display()), e))?;
        Ok(())
    }
}

/// n-step bootstrapped returns and advantages over one rollout window.
/// Returns reset at episode ends; the tail continues into
/// `bootstrap_value`. The advantage is the return minus the recorded value.
pub fn compute_advantages<T: Scalar>(
    transitions: &[Transition<T>],
    bootstrap_value: T,
    gamma: T,
) -> (Vec<T>, Vec<T>) {
    let n = transitions.len();
    let mut returns = vec![T::zero(); n];
    let mut advantages = vec![T::zero(); n];
    let mut acc = bootstrap_value;
    for t in (0..n).rev() {
        let tr = &transitions[t];
        acc = if tr.done { tr.reward } else { tr.reward + gamma * acc };
        returns[t] = acc;
        advantages[t] = acc - tr.value;
    }
    (returns, advantages)
}

/// Loss statistics of one update, before clipping and optimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

/// Batch-mean gradients of the actor and critic losses.
///
/// Actor loss: `-mean(log pi(a|s) * A) - entropy_coef * mean(H)` with the
/// advantages treated as constants. Critic loss:
/// `value_loss_coef * mean((V(s) - R)^2)`.
pub fn compute_losses_and_grads<T: Scalar>(
    actor: &MlpParams<T>,
    critic: &MlpParams<T>,
    transitions: &[Transition<T>],
    returns: &[T],
    advantages: &[T],
    value_loss_coef: f64,
    entropy_coef: f64,
) -> Result<(MlpGrads<T>, MlpGrads<T>, LossStats)> {
    if transitions.is_empty() {
        return Err(Error::InvalidBounds("empty batch".into()));
    }
    let inv_b = T::cast(1.0 / transitions.len() as f64);
    let v_coef = T::cast(value_loss_coef);
    let e_coef = T::cast(entropy_coef);

    let mut actor_grads = MlpGrads::zeros_like(actor);
    let mut critic_grads = MlpGrads::zeros_like(critic);
    let mut policy_loss = T::zero();
    let mut value_loss = T::zero();
    let mut entropy_sum = T::zero();

    for (t, tr) in transitions.iter().enumerate() {
        let advantage = advantages[t];
        let (logits, trace) = actor.forward(&tr.obs)?;
        let probs = softmax_logits_to_dist(&logits);
        let logp = log_softmax(&logits);
        policy_loss = policy_loss - logp[tr.action] * advantage;
        let mut entropy = T::zero();
        for &p in &probs {
            if p > T::zero() {
                entropy = entropy - p * p.ln();
            }
        }
        entropy_sum = entropy_sum + entropy;

        let mut out_grad = Vec::with_capacity(probs.len());
        for (j, &p) in probs.iter().enumerate() {
            let indicator = if j == tr.action { T::one() } else { T::zero() };
            let mut g = -advantage * (indicator - p);
            if e_coef > T::zero() && p > T::zero() {
                g = g + e_coef * p * (logp[j] + entropy);
            }
            out_grad.push(g * inv_b);
        }
        actor.backward_accumulate(&trace, &out_grad, &mut actor_grads)?;

        let (v_out, trace) = critic.forward(&tr.obs)?;
        let err = v_out[0] - returns[t];
        value_loss = value_loss + v_coef * err * err;
        let two = T::cast(2.0);
        critic.backward_accumulate(&trace, &[two * v_coef * err * inv_b], &mut critic_grads)?;
    }

    let stats = LossStats {
        policy_loss: (policy_loss * inv_b).as_f64(),
        value_loss: (value_loss * inv_b).as_f64(),
        entropy: (entropy_sum * inv_b).as_f64(),
    };
    if !(stats.policy_loss.is_finite() && stats.value_loss.is_finite() && stats.entropy.is_finite()) {
        return Err(Error::TrainingDivergence { detail: dump_batch(transitions, returns, advantages, &stats) });
    }
    if !actor_grads.all_finite() || !critic_grads.all_finite() {
        return Err(Error::TrainingDivergence { detail: dump_batch(transitions, returns, advantages, &stats) });
    }
    Ok((actor_grads, critic_grads, stats))
}

fn dump_batch<T: Scalar>(transitions: &[Transition<T>], returns: &[T], advantages: &[T], stats: &LossStats) -> String {
    let mut s = format!(
        "non-finite loss (policy={}, value={}, entropy={}); batch of {}:",
        stats.policy_loss,
        stats.value_loss,
        stats.entropy,
        transitions.len()
    );
    for (t, tr) in transitions.iter().enumerate() {
        s.push_str(&format!(
            "\n  t={t} action={} reward={} done={} value={} return={} advantage={}",
            tr.action,
            tr.reward.as_f64(),
            tr.done,
            tr.value.as_f64(),
            returns[t].as_f64(),
            advantages[t].as_f64()
        ));
    }
    s
}

/// Trained networks plus the full training log.
#[derive(Debug, Clone)]
pub struct TrainOutput<T> {
    pub actor: MlpParams<T>,
    pub critic: MlpParams<T>,
    pub log: TrainLog,
    pub env_steps: usize,
}

/// Single-scenario actor-critic trainer.
pub struct Trainer<T: Scalar> {
    env: NavEnv<T>,
    cfg: TrainConfig,
    pub actor: MlpParams<T>,
    pub critic: MlpParams<T>,
    opt_actor: RmspropState<T>,
    opt_critic: RmspropState<T>,
    rng: ChaCha20Rng,
    current_obs: Vec<T>,
    env_steps: usize,
    episode_reward: f64,
    episode_length: usize,
    episode_index: usize,
    pub log: TrainLog,
}

impl<T: Scalar> Trainer<T> {
    /// Seeds the RNG and draws the actor parameters first, the critic
    /// parameters second; the remaining stream drives action sampling.
    pub fn new(scenario: &Scenario, env_cfg: EnvConfig<T>, cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut env = NavEnv::new(scenario, env_cfg)?;
        let obs_len = env.observation_len();
        let n_actions = env.config().n_headings;
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        let actor = MlpParams::init_xavier(&actor_layer_sizes(obs_len, n_actions), &mut rng)?;
        let critic = MlpParams::init_xavier(&critic_layer_sizes(obs_len), &mut rng)?;
        let opt_actor = RmspropState::new(
            &actor,
            T::cast(cfg.learning_rate),
            T::cast(cfg.decay_rho),
            T::cast(cfg.epsilon),
        );
        let opt_critic = RmspropState::new(
            &critic,
            T::cast(cfg.learning_rate),
            T::cast(cfg.decay_rho),
            T::cast(cfg.epsilon),
        );
        let current_obs = env.reset().into_vec();
        Ok(Trainer {
            env,
            cfg,
            actor,
            critic,
            opt_actor,
            opt_critic,
            rng,
            current_obs,
            env_steps: 0,
            episode_reward: 0.0,
            episode_length: 0,
            episode_index: 0,
            log: TrainLog::default(),
        })
    }

    pub fn env_steps(&self) -> usize {
        self.env_steps
    }

    fn sample_action(&mut self, probs: &[T]) -> usize {
        let u: f64 = self.rng.random();
        let mut acc = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            acc += p.as_f64();
            if u < acc {
                return i;
            }
        }
        probs.len() - 1
    }

    /// Collects exactly `n_steps` transitions, resetting the same scenario
    /// whenever an episode terminates inside the window.
    pub fn collect_rollout(&mut self) -> Result<RolloutBatch<T>> {
        let mut transitions = Vec::with_capacity(self.cfg.n_steps);
        for _ in 0..self.cfg.n_steps {
            let obs = self.current_obs.clone();
            let logits = self.actor.predict(&obs)?;
            let probs = softmax_logits_to_dist(&logits);
            let action = self.sample_action(&probs);
            let value = self.critic.predict(&obs)?[0];
            let outcome = self.env.step(action)?;
            self.env_steps += 1;
            self.episode_reward += outcome.reward.as_f64();
            self.episode_length += 1;
            let done = outcome.status.is_terminal();
            transitions.push(Transition { obs, action, reward: outcome.reward, done, value });
            if done {
                self.log.episodes.push(EpisodeStat {
                    index: self.episode_index,
                    env_step: self.env_steps,
                    reward: self.episode_reward,
                    length: self.episode_length,
                    status: outcome.status,
                });
                self.episode_index += 1;
                self.episode_reward = 0.0;
                self.episode_length = 0;
                self.current_obs = self.env.reset().into_vec();
            } else {
                self.current_obs = outcome.observation.into_vec();
            }
        }
        let bootstrap_value = if transitions.last().map(|t| t.done).unwrap_or(false) {
            T::zero()
        } else {
            self.critic.predict(&self.current_obs)?[0]
        };
        Ok(RolloutBatch { transitions, bootstrap_value })
    }

    /// One gradient update from a rollout window: loss gradients, joint
    /// global-norm clipping, one RMSprop step per network.
    pub fn update(&mut self, batch: &RolloutBatch<T>) -> Result<UpdateStat> {
        let gamma = self.env.config().gamma;
        let (returns, advantages) = compute_advantages(&batch.transitions, batch.bootstrap_value, gamma);
        let (mut actor_grads, mut critic_grads, stats) = compute_losses_and_grads(
            &self.actor,
            &self.critic,
            &batch.transitions,
            &returns,
            &advantages,
            self.cfg.value_loss_coef,
            self.cfg.entropy_coef,
        )?;
        let pre_clip =
            clip_global_norm(&mut [&mut actor_grads, &mut critic_grads], T::cast(self.cfg.grad_clip_norm));
        self.opt_actor.step(&mut self.actor, &actor_grads)?;
        self.opt_critic.step(&mut self.critic, &critic_grads)?;
        let stat = UpdateStat {
            index: self.log.updates.len(),
            env_step: self.env_steps,
            policy_loss: stats.policy_loss,
            value_loss: stats.value_loss,
            entropy: stats.entropy,
            grad_norm: pre_clip.as_f64(),
        };
        self.log.updates.push(stat);
        Ok(stat)
    }

    /// Runs collect/update cycles until the step budget is consumed; the
    /// total steps taken land in `[total_env_steps, total_env_steps + n_steps)`.
    pub fn run(mut self) -> Result<TrainOutput<T>> {
        while self.env_steps < self.cfg.total_env_steps {
            let batch = self.collect_rollout()?;
            self.update(&batch)?;
        }
        Ok(TrainOutput { actor: self.actor, critic: self.critic, log: self.log, env_steps: self.env_steps })
    }
}

/// Trains one policy on one scenario; see [`Trainer`].
pub fn train<T: Scalar>(
    scenario: &Scenario,
    env_cfg: &EnvConfig<T>,
    cfg: &TrainConfig,
) -> Result<TrainOutput<T>> {
    Trainer::new(scenario, env_cfg.clone(), cfg.clone())?.run()
}

/// Deterministic evaluation episode: argmax actions, ties broken by the
/// lowest action index.
pub fn rollout_greedy<T: Scalar>(
    actor: &MlpParams<T>,
    scenario: &Scenario,
    env_cfg: &EnvConfig<T>,
) -> Result<EpisodeRecord<T>> {
    let mut env = NavEnv::new(scenario, env_cfg.clone())?;
    if actor.input_len() != env.observation_len() {
        return Err(Error::Dimension(format!(
            "checkpoint expects observation length {}, scenario provides {}",
            actor.input_len(),
            env.observation_len()
        )));
    }
    if actor.output_len() != env.config().n_headings {
        return Err(Error::Dimension(format!(
            "checkpoint emits {} actions, environment has {} headings",
            actor.output_len(),
            env.config().n_headings
        )));
    }
    let mut obs = env.reset().into_vec();
    while !env.status().is_terminal() {
        let logits = actor.predict(&obs)?;
        let mut best = 0usize;
        for (i, &v) in logits.iter().enumerate() {
            if v > logits[best] {
                best = i;
            }
        }
        obs = env.step(best)?.observation.into_vec();
    }
    Ok(env.episode_record())
}

/// Writes a policy checkpoint: actor block, critic block, then an
/// `envfp <hash>` line tying the file to the environment configuration it
/// was trained under.
pub fn save_checkpoint<T: Scalar>(
    actor: &MlpParams<T>,
    critic: &MlpParams<T>,
    env_cfg: &EnvConfig<T>,
    path: &Path,
) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
    let mut w = std::io::BufWriter::new(file);
    actor
        .write_checkpoint(&mut w)
        .and_then(|_| critic.write_checkpoint(&mut w))
        .and_then(|_| writeln!(w, "envfp {}", env_cfg.fingerprint()))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Loads a policy checkpoint; returns the actor, the critic, and the stored
/// environment fingerprint.
pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(MlpParams<T>, MlpParams<T>, String)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut reader = std::io::BufReader::new(file);
    let actor = MlpParams::read_checkpoint(&mut reader)?;
    let critic = MlpParams::read_checkpoint(&mut reader)?;
    let mut line = String::new();
    reader
        .read_line(&mut line)
        .map_err(|e| Error::CheckpointFormat { section: "envfp".into(), reason: e.to_string() })?;
    let fingerprint = line
        .trim()
        .strip_prefix("envfp ")
        .ok_or_else(|| Error::CheckpointFormat {
            section: "envfp".into(),
            reason: format!("expected `envfp <hash>`, got `{}`", line.trim()),
        })?
        .to_string();
    Ok((actor, critic, fingerprint))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::gen_single_human;
    use crate::slm::Pose;

    fn empty_scenario() -> Scenario {
        Scenario {
            id: "empty".into(),
            arena_side: 15.0,
            start: [-5.0, 0.0],
            goal: [5.0, 0.0],
            humans: vec![],
            tags: vec![],
        }
    }

    fn short_cfg(seed: u64, total: usize) -> TrainConfig {
        TrainConfig { total_env_steps: total, seed, ..TrainConfig::default() }
    }

    #[test]
    fn layer_size_helpers() {
        assert_eq!(actor_layer_sizes(5, 16), vec![5, 64, 128, 256, 128, 64, 16]);
        assert_eq!(critic_layer_sizes(5), vec![5, 64, 128, 256, 128, 64, 1]);
    }

    #[test]
    fn forced_action_policy_replays_its_sequence() {
        let scenario = empty_scenario();
        let mut trainer =
            Trainer::<f64>::new(&scenario, EnvConfig::default(), short_cfg(1, 100)).unwrap();
        // overwrite the actor with a stub that always picks action 12
        trainer.actor = MlpParams::zeros(trainer.actor.layer_sizes()).unwrap();
        let last = trainer.actor.n_layers() - 1;
        trainer.actor.biases[last][12] = 1000.0;
        let batch = trainer.collect_rollout().unwrap();
        assert_eq!(batch.transitions.len(), 5);
        assert!(batch.transitions.iter().all(|t| t.action == 12));
    }

    #[test]
    fn terminal_inside_window_sets_done_and_zero_bootstrap() {
        // goal one step from start: every episode ends on its first step
        let mut scenario = empty_scenario();
        scenario.start = [4.6, 0.0];
        scenario.goal = [5.0, 0.0];
        let mut trainer =
            Trainer::<f64>::new(&scenario, EnvConfig::default(), short_cfg(3, 100)).unwrap();
        trainer.actor = MlpParams::zeros(trainer.actor.layer_sizes()).unwrap();
        let last = trainer.actor.n_layers() - 1;
        trainer.actor.biases[last][0] = 1000.0; // straight toward the goal
        let batch = trainer.collect_rollout().unwrap();
        assert!(batch.transitions.iter().all(|t| t.done));
        assert_eq!(batch.bootstrap_value, 0.0);
        assert_eq!(trainer.log.episodes.len(), 5);
        assert!(trainer.log.episodes.iter().all(|e| e.status == Status::Success));
    }

    #[test]
    fn rollout_is_seed_deterministic() {
        let scenario = gen_single_human(1, 77).remove(0);
        let collect = || {
            let mut t =
                Trainer::<f64>::new(&scenario, EnvConfig::default(), short_cfg(9, 100)).unwrap();
            t.collect_rollout().unwrap()
        };
        assert_eq!(collect(), collect());
    }

    #[test]
    fn advantage_recursion_examples() {
        // single terminal transition with r = 500 and V = 0
        let t: Vec<Transition<f64>> =
            vec![Transition { obs: vec![], action: 0, reward: 500.0, done: true, value: 0.0 }];
        let (ret, adv) = compute_advantages(&t, 0.0, 0.9);
        assert_eq!(ret, vec![500.0]);
        assert_eq!(adv, vec![500.0]);

        // two non-terminal transitions bootstrapped by V' = 2
        let t: Vec<Transition<f64>> = vec![
            Transition { obs: vec![], action: 0, reward: 0.0, done: false, value: 0.0 },
            Transition { obs: vec![], action: 0, reward: 1.0, done: false, value: 0.0 },
        ];
        let (ret, _) = compute_advantages(&t, 2.0, 0.9);
        assert!((ret[1] - 2.8).abs() < 1e-12);
        assert!((ret[0] - 2.52).abs() < 1e-12);

        // returns exactly predicted: advantages vanish
        let t: Vec<Transition<f64>> = vec![
            Transition { obs: vec![], action: 0, reward: 1.0, done: false, value: 1.9 },
            Transition { obs: vec![], action: 0, reward: 1.0, done: true, value: 1.0 },
        ];
        let (_, adv) = compute_advantages(&t, 0.0, 0.9);
        assert!(adv.iter().all(|a| a.abs() < 1e-12));
    }

    #[test]
    fn zero_advantages_leave_actor_unchanged() {
        let scenario = empty_scenario();
        let mut trainer =
            Trainer::<f64>::new(&scenario, EnvConfig::default(), short_cfg(5, 100)).unwrap();
        let batch = trainer.collect_rollout().unwrap();
        let (returns, _) = compute_advantages(&batch.transitions, batch.bootstrap_value, 0.9);
        let zeros = vec![0.0; returns.len()];
        let (actor_grads, _, _) = compute_losses_and_grads(
            &trainer.actor,
            &trainer.critic,
            &batch.transitions,
            &returns,
            &zeros,
            0.5,
            0.0,
        )
        .unwrap();
        assert!(actor_grads.weights.iter().all(|w| w.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn perfect_critic_gives_zero_value_loss() {
        let scenario = empty_scenario();
        let trainer = Trainer::<f64>::new(&scenario, EnvConfig::default(), short_cfg(5, 100)).unwrap();
        let obs = vec![0.0; 2];
        let transitions = vec![Transition { obs, action: 0, reward: 0.0, done: false, value: 0.0 }];
        // returns chosen to equal the critic's actual output on this state
        let v = trainer.critic.predict(&transitions[0].obs).unwrap()[0];
        let (_, _, stats) = compute_losses_and_grads(
            &trainer.actor,
            &trainer.critic,
            &transitions,
            &[v],
            &[0.0],
            0.5,
            0.0,
        )
        .unwrap();
        assert_eq!(stats.value_loss, 0.0);
    }

    #[test]
    fn positive_advantage_action_gains_probability() {
        let scenario = empty_scenario();
        let mut trainer =
            Trainer::<f64>::new(&scenario, EnvConfig::default(), short_cfg(21, 100)).unwrap();
        let obs = trainer.env.reset().into_vec();
        let before = softmax_logits_to_dist(&trainer.actor.predict(&obs).unwrap())[3];
        let batch = RolloutBatch {
            transitions: vec![Transition { obs: obs.clone(), action: 3, reward: 1.0, done: true, value: 0.0 }],
            bootstrap_value: 0.0,
        };
        trainer.update(&batch).unwrap();
        let after = softmax_logits_to_dist(&trainer.actor.predict(&obs).unwrap())[3];
        assert!(after > before, "{after} <= {before}");
    }

    #[test]
    fn update_grad_norm_respects_clip() {
        let scenario = empty_scenario();
        let mut trainer =
            Trainer::<f64>::new(&scenario, EnvConfig::default(), short_cfg(2, 100)).unwrap();
        let batch = trainer.collect_rollout().unwrap();
        let gamma = trainer.env.config().gamma;
        let (returns, advantages) = compute_advantages(&batch.transitions, batch.bootstrap_value, gamma);
        let (mut ag, mut cg, _) = compute_losses_and_grads(
            &trainer.actor,
            &trainer.critic,
            &batch.transitions,
            &returns,
            &advantages,
            0.5,
            0.0,
        )
        .unwrap();
        clip_global_norm(&mut [&mut ag, &mut cg], 0.5);
        let post = (ag.global_norm().powi(2) + cg.global_norm().powi(2)).sqrt();
        assert!(post <= 0.5 + 1e-9, "post-clip norm {post}");
    }

    #[test]
    fn budget_exactness_and_seeded_reproducibility() {
        let scenario = gen_single_human(1, 4).remove(0);
        let cfg = short_cfg(11, 203); // deliberately not a multiple of n_steps
        let a = train(&scenario, &EnvConfig::<f64>::default(), &cfg).unwrap();
        assert!(a.env_steps >= 203 && a.env_steps < 203 + 5, "steps {}", a.env_steps);
        let b = train(&scenario, &EnvConfig::<f64>::default(), &cfg).unwrap();
        assert_eq!(a.log, b.log);
        assert_eq!(a.actor, b.actor);
        assert_eq!(a.critic, b.critic);
        // every logged value is finite
        assert!(a.log.updates.iter().all(|u| {
            u.policy_loss.is_finite() && u.value_loss.is_finite() && u.entropy.is_finite() && u.grad_norm.is_finite()
        }));
    }

    #[test]
    fn greedy_rollout_is_well_formed_even_untrained() {
        let scenario = gen_single_human(1, 6).remove(0);
        let trainer =
            Trainer::<f64>::new(&scenario, EnvConfig::default(), short_cfg(0, 100)).unwrap();
        let rec = rollout_greedy(&trainer.actor, &scenario, &EnvConfig::default()).unwrap();
        assert!(rec.status.is_terminal());
        assert_eq!(rec.positions.len(), rec.steps.len() + 1);
        assert!(rec.n_steps() <= 200);
    }

    #[test]
    fn greedy_rollout_rejects_architecture_mismatch() {
        let scenario = gen_single_human(1, 6).remove(0);
        let wrong = MlpParams::<f64>::zeros(&[7, 4, 16]).unwrap();
        assert!(matches!(
            rollout_greedy(&wrong, &scenario, &EnvConfig::default()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn greedy_ties_break_to_lowest_index() {
        let mut scenario = empty_scenario();
        scenario.goal = [-5.0, 0.45]; // irrelevant; zero net gives all-equal logits
        scenario.start = [-5.0, -0.2];
        let actor = MlpParams::<f64>::zeros(&actor_layer_sizes(2, 16)).unwrap();
        let rec = rollout_greedy(&actor, &scenario, &EnvConfig::default()).unwrap();
        assert!(rec.steps.iter().all(|s| s.action == 0));
    }

    #[test]
    fn checkpoint_round_trip_with_fingerprint() {
        let scenario = gen_single_human(1, 2).remove(0);
        let trainer =
            Trainer::<f64>::new(&scenario, EnvConfig::default(), short_cfg(0, 100)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.ckpt");
        let cfg = EnvConfig::<f64>::default();
        save_checkpoint(&trainer.actor, &trainer.critic, &cfg, &path).unwrap();
        let (actor, critic, fp) = load_checkpoint::<f64>(&path).unwrap();
        assert_eq!(actor, trainer.actor);
        assert_eq!(critic, trainer.critic);
        assert_eq!(fp, cfg.fingerprint());
        // altered dynamics alter the fingerprint
        assert_ne!(fp, cfg.with_sigma(0.0).fingerprint());
    }

    #[test]
    fn social_sign_flag_flips_the_social_term() {
        let scenario = Scenario {
            id: "s".into(),
            arena_side: 15.0,
            start: [-5.0, 0.0],
            goal: [5.0, 0.0],
            humans: vec![Pose::new(0.0, 0.6, 0.0)],
            tags: vec![],
        };
        let mut neg = NavEnv::new(&scenario, EnvConfig::<f64>::default()).unwrap();
        let mut cfg = EnvConfig::<f64>::default();
        cfg.social_term_positive = true;
        let mut pos = NavEnv::new(&scenario, cfg).unwrap();
        let a = neg.step(0).unwrap();
        let b = pos.step(0).unwrap();
        assert_eq!(a.breakdown.social_weighted, -b.breakdown.social_weighted);
        assert!(a.breakdown.social_weighted < 0.0);
    }
}
