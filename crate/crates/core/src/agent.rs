//! Memory module + actor + critic, trained by episodic actor-critic.
//!
//! Each step the encoded input `[obs | one-hot(prev action) | sign(prev
//! reward)]` advances the memory, and the memory output feeds two MLP
//! decoders: the actor (action logits) and the critic (scalar value).
//! One meta-episode is rolled out, one tape is built over it, and one Adam
//! update is applied. Trainable cells are differentiated through the whole
//! meta-episode; reservoir states enter the tape as constants.

use crate::autodiff::{Gradients, NodeId, ParamStore, Tape};
use crate::cells::{CellConfig, CellState, MemoryCell, MemoryKind, Mlp, MlpConfig};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::optim::{AdamConfig, AdamState};
use crate::reservoir::{esn_step, EsnConfig, ReservoirState, ReservoirWeights};
use crate::rng::{stream_rng, stream_seed, Rng64, Stream};
use crate::tensor::Matrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub memory: MemoryKind,
    /// Hidden size of a trainable cell. Ignored by reservoir kinds, whose
    /// size follows from their [`EsnConfig`].
    pub memory_dim: usize,
    pub decoder: MlpConfig,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub discount: f64,
    pub optimizer: AdamConfig,
    pub esn_dense: EsnConfig,
    pub esn_local: EsnConfig,
}

impl AgentConfig {
    pub fn new(memory: MemoryKind) -> Self {
        AgentConfig {
            memory,
            memory_dim: 32,
            decoder: MlpConfig::default(),
            entropy_coef: 0.001,
            value_coef: 0.5,
            discount: 0.9,
            optimizer: AdamConfig::default(),
            esn_dense: EsnConfig::dense(),
            esn_local: EsnConfig::local(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.entropy_coef >= 0.0) {
            return Err(Error::config("entropy_coef must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return Err(Error::config("discount must lie in [0, 1]"));
        }
        if !(self.value_coef >= 0.0) {
            return Err(Error::config("value_coef must be >= 0"));
        }
        if !(self.optimizer.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be positive"));
        }
        self.esn_dense.validate()?;
        self.esn_local.validate()
    }

    /// Width of the memory output given the encoded input width.
    pub fn memory_output_dim(&self, input_dim: usize) -> usize {
        match self.memory {
            MemoryKind::EsnDense => self.esn_dense.reservoir_size(input_dim),
            MemoryKind::EsnLocal => self.esn_local.reservoir_size(input_dim),
            _ => self.memory_dim,
        }
    }
}

/// Width of an encoded input.
pub fn encoded_width(obs_width: usize, n_actions: usize) -> usize {
    obs_width + n_actions + 1
}

/// `[obs | one-hot(prev_action) | sign(prev_reward)]`; no previous action
/// gives an all-zero one-hot.
pub fn encode_input(obs: &[f64], prev_action: Option<usize>, n_actions: usize, prev_reward: f64) -> Vec<f64> {
    let mut x = Vec::with_capacity(encoded_width(obs.len(), n_actions));
    x.extend_from_slice(obs);
    let start = x.len();
    x.resize(start + n_actions, 0.0);
    if let Some(a) = prev_action {
        x[start + a] = 1.0;
    }
    let sign = if prev_reward > 0.0 {
        1.0
    } else if prev_reward < 0.0 {
        -1.0
    } else {
        0.0
    };
    x.push(sign);
    x
}

/// `G_t = r_t + discount * G_{t+1}`, zero after the last step.
pub fn compute_returns(rewards: &[f64], discount: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut g = 0.0;
    for t in (0..rewards.len()).rev() {
        g = rewards[t] + discount * g;
        out[t] = g;
    }
    out
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Draws an index from `probs` with one uniform variate.
pub fn sample_categorical(probs: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the running sum; take the last positive entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySample {
    pub action: usize,
    pub log_prob: f64,
    pub entropy: f64,
    pub value: f64,
}

/// Everything recorded over one meta-episode.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub inputs: Vec<Vec<f64>>,
    pub memory: Vec<Vec<f64>>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub entropies: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub scored: Vec<bool>,
    /// Trial index of each step.
    pub trials: Vec<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct LossNodes {
    pub total: NodeId,
    pub policy: NodeId,
    pub value: NodeId,
    pub entropy: NodeId,
}

/// Builds
/// `sum_t [ -log pi(a_t) * A_t + value_coef * (V_t - G_t)^2 - entropy_coef * H_t ]`
/// on the tape, with `A_t = G_t - V_t` held constant.
///
/// `logits` is `T x A`, `values` is `T x 1`.
pub fn actor_critic_loss(
    tape: &mut Tape,
    logits: NodeId,
    values: NodeId,
    actions: &[usize],
    returns: &[f64],
    entropy_coef: f64,
    value_coef: f64,
) -> Result<LossNodes> {
    let v = tape.value(values);
    if v.cols() != 1 || v.rows() != returns.len() {
        return Err(Error::config(format!(
            "values {:?} do not match {} returns",
            v.shape(),
            returns.len()
        )));
    }
    let advantages: Vec<f64> = returns.iter().zip(v.data()).map(|(g, v)| g - v).collect();
    actor_critic_loss_with_advantages(tape, logits, values, actions, returns, &advantages, entropy_coef, value_coef)
}

/// [`actor_critic_loss`] with the policy-term advantages supplied.
#[allow(clippy::too_many_arguments)]
pub fn actor_critic_loss_with_advantages(
    tape: &mut Tape,
    logits: NodeId,
    values: NodeId,
    actions: &[usize],
    returns: &[f64],
    advantages: &[f64],
    entropy_coef: f64,
    value_coef: f64,
) -> Result<LossNodes> {
    let (t_len, n_actions) = tape.value(logits).shape();
    if actions.len() != t_len
        || returns.len() != t_len
        || advantages.len() != t_len
        || tape.value(values).shape() != (t_len, 1)
    {
        return Err(Error::config(format!(
            "loss over {t_len} steps with {} actions, {} returns, {} advantages, values {:?}",
            actions.len(),
            returns.len(),
            advantages.len(),
            tape.value(values).shape()
        )));
    }
    let log_probs = tape.log_softmax_rows(logits)?;

    let mut weights = Matrix::zeros(t_len, n_actions);
    for (t, (&a, &adv)) in actions.iter().zip(advantages).enumerate() {
        if a >= n_actions {
            return Err(Error::usage(format!("action {a} outside 0..{n_actions}")));
        }
        weights.set(t, a, -adv);
    }
    let weights = tape.constant(weights)?;
    let weighted = tape.mul(log_probs, weights)?;
    let policy = tape.sum_all(weighted)?;

    let probs = tape.exp(log_probs)?;
    let p_log_p = tape.mul(probs, log_probs)?;
    let neg_entropy = tape.sum_all(p_log_p)?;
    let entropy = tape.scale(neg_entropy, entropy_coef)?;

    let targets = tape.constant(Matrix::from_vec(t_len, 1, returns.to_vec())?)?;
    let err = tape.sub(values, targets)?;
    let sq = tape.mul(err, err)?;
    let sq_sum = tape.sum_all(sq)?;
    let value = tape.scale(sq_sum, value_coef)?;

    let pv = tape.add(policy, value)?;
    let total = tape.add(pv, entropy)?;
    if !tape.value(total).is_finite() {
        return Err(Error::non_finite("actor-critic loss"));
    }
    Ok(LossNodes {
        total,
        policy,
        value,
        entropy,
    })
}

#[derive(Debug)]
enum Memory {
    Cell(MemoryCell),
    Reservoir(Arc<ReservoirWeights>),
}

/// Per-meta-episode summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub steps: usize,
    pub total_reward: f64,
    pub mean_step_reward: f64,
    /// Mean reward over scored steps.
    pub scored_accuracy: f64,
    pub mean_entropy: f64,
    /// Reward collected in each trial.
    pub trial_rewards: Vec<f64>,
    /// Steps taken in each trial.
    pub trial_steps: Vec<usize>,
    pub loss: LossBreakdown,
}

impl EpisodeMetrics {
    fn from_trajectory(traj: &Trajectory, loss: LossBreakdown) -> Self {
        let steps = traj.len();
        let total_reward: f64 = traj.rewards.iter().sum();
        let (scored_sum, scored_n) = traj
            .rewards
            .iter()
            .zip(&traj.scored)
            .filter(|(_, &s)| s)
            .fold((0.0, 0usize), |(s, n), (r, _)| (s + r, n + 1));
        let n_trials = traj.trials.last().map_or(0, |t| t + 1);
        let mut trial_rewards = vec![0.0; n_trials];
        let mut trial_steps = vec![0; n_trials];
        for (&t, &r) in traj.trials.iter().zip(&traj.rewards) {
            trial_rewards[t] += r;
            trial_steps[t] += 1;
        }
        EpisodeMetrics {
            steps,
            total_reward,
            mean_step_reward: total_reward / steps.max(1) as f64,
            scored_accuracy: scored_sum / scored_n.max(1) as f64,
            mean_entropy: traj.entropies.iter().sum::<f64>() / steps.max(1) as f64,
            trial_rewards,
            trial_steps,
            loss,
        }
    }

    /// Reward per step within each trial.
    pub fn trial_step_rewards(&self) -> Vec<f64> {
        self.trial_rewards
            .iter()
            .zip(&self.trial_steps)
            .map(|(&r, &s)| r / s.max(1) as f64)
            .collect()
    }
}

/// An agent with its parameters and optimizer state.
#[derive(Debug)]
pub struct Agent {
    config: AgentConfig,
    n_actions: usize,
    input_dim: usize,
    store: ParamStore,
    memory: Memory,
    actor: Mlp,
    critic: Mlp,
    optimizer: AdamState,
}

impl Agent {
    /// Builds an agent for `obs_width` observations and `n_actions` actions.
    /// Reservoir weights and initial parameters come from separate
    /// sub-streams of `seed`.
    pub fn new(config: AgentConfig, obs_width: usize, n_actions: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        if n_actions < 2 {
            return Err(Error::config("agent needs at least two actions"));
        }
        let input_dim = encoded_width(obs_width, n_actions);
        let mut rng = stream_rng(seed, Stream::Init);
        let mut store = ParamStore::new();
        let memory = match config.memory {
            MemoryKind::EsnDense | MemoryKind::EsnLocal => {
                let esn = if config.memory == MemoryKind::EsnDense {
                    &config.esn_dense
                } else {
                    &config.esn_local
                };
                let weights =
                    ReservoirWeights::build(esn, input_dim, stream_seed(seed, Stream::Reservoir))?;
                Memory::Reservoir(Arc::new(weights))
            }
            kind => Memory::Cell(MemoryCell::new(
                CellConfig {
                    kind,
                    input_dim,
                    hidden_dim: config.memory_dim,
                },
                &mut store,
                &mut rng,
            )?),
        };
        let mem_dim = config.memory_output_dim(input_dim);
        let actor = Mlp::new("actor", config.decoder, mem_dim, n_actions, &mut store, &mut rng)?;
        let critic = Mlp::new("critic", config.decoder, mem_dim, 1, &mut store, &mut rng)?;
        let optimizer = AdamState::new(config.optimizer, &store);
        Ok(Agent {
            config,
            n_actions,
            input_dim,
            store,
            memory,
            actor,
            critic,
            optimizer,
        })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn params(&self) -> &ParamStore {
        &self.store
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn optimizer(&self) -> &AdamState {
        &self.optimizer
    }

    pub fn trainable_count(&self) -> usize {
        self.store.scalar_count()
    }

    /// Trainable parameters belonging to the memory module.
    pub fn recurrent_trainable_count(&self) -> usize {
        match &self.memory {
            Memory::Cell(cell) => cell.param_ids().iter().map(|&id| self.store.get(id).len()).sum(),
            Memory::Reservoir(_) => 0,
        }
    }

    pub fn reservoir(&self) -> Option<&ReservoirWeights> {
        match &self.memory {
            Memory::Reservoir(w) => Some(w),
            Memory::Cell(_) => None,
        }
    }

    pub fn memory_output_dim(&self) -> usize {
        self.actor.input_dim()
    }

    /// Policy and value for one memory output.
    pub fn act(&self, memory_output: &[f64], rng: &mut impl Rng) -> Result<(PolicySample, Vec<f64>)> {
        let logits = self.actor.forward_plain(&self.store, memory_output)?;
        if logits.iter().any(|l| !l.is_finite()) {
            return Err(Error::non_finite("policy logits"));
        }
        let value = self.critic.forward_plain(&self.store, memory_output)?[0];
        let probs = softmax(&logits);
        let action = sample_categorical(&probs, rng);
        let entropy = -probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>();
        Ok((
            PolicySample {
                action,
                log_prob: probs[action].ln(),
                entropy,
                value,
            },
            probs,
        ))
    }

    /// Rolls out one meta-episode and records the tape for it.
    pub fn rollout(&self, env: &mut dyn Environment, rng: &mut Rng64) -> Result<Rollout> {
        if env.action_count() != self.n_actions
            || encoded_width(env.observation_width(), env.action_count()) != self.input_dim
        {
            return Err(Error::config("environment does not match agent widths"));
        }
        let mut tape = Tape::new();
        let mut traj = Trajectory::default();
        let mut cell_outputs = Vec::new();
        let mut cell_state = match &self.memory {
            Memory::Cell(cell) => Some(cell.initial_state(&mut tape)?),
            Memory::Reservoir(_) => None,
        };
        let mut res_state = match &self.memory {
            Memory::Reservoir(w) => Some(ReservoirState::zeros(w.n_hidden())),
            Memory::Cell(_) => None,
        };

        let mut obs = env.reset();
        let mut prev_action = None;
        let mut prev_reward = 0.0;
        loop {
            let x = encode_input(&obs, prev_action, self.n_actions, prev_reward);
            let mem_out = match &self.memory {
                Memory::Cell(cell) => {
                    let xn = tape.constant(Matrix::row_vector(x.clone()))?;
                    let state: &CellState = cell_state.as_ref().expect("cell state");
                    let (next, out) = cell.step(&mut tape, &self.store, state, xn)?;
                    cell_state = Some(next);
                    cell_outputs.push(out);
                    tape.value(out).data().to_vec()
                }
                Memory::Reservoir(w) => {
                    let next = esn_step(w, res_state.as_ref().expect("reservoir state"), &x)?;
                    let out = next.activations.clone();
                    res_state = Some(next);
                    out
                }
            };
            let (sample, _) = self.act(&mem_out, rng)?;
            let outcome = env.step(sample.action)?;

            traj.inputs.push(x);
            traj.memory.push(mem_out);
            traj.actions.push(sample.action);
            traj.log_probs.push(sample.log_prob);
            traj.entropies.push(sample.entropy);
            traj.values.push(sample.value);
            traj.rewards.push(outcome.reward);
            traj.scored.push(outcome.scored);
            traj.trials.push(outcome.trial);

            prev_action = Some(sample.action);
            prev_reward = outcome.reward;
            obs = outcome.observation;
            if outcome.done {
                break;
            }
        }

        let states = match &self.memory {
            Memory::Cell(_) => tape.stack_rows(&cell_outputs)?,
            Memory::Reservoir(_) => {
                let rows: Vec<&[f64]> = traj.memory.iter().map(Vec::as_slice).collect();
                tape.constant(Matrix::from_vec(rows.len(), self.memory_output_dim(), rows.concat())?)?
            }
        };
        Ok(Rollout { tape, states, traj })
    }

    /// Loss and gradients for a finished rollout.
    pub fn gradients(&self, rollout: Rollout) -> Result<(Gradients, LossBreakdown, Trajectory)> {
        let Rollout {
            mut tape,
            states,
            traj,
        } = rollout;
        let logits = self.actor.forward(&mut tape, &self.store, states)?;
        let values = self.critic.forward(&mut tape, &self.store, states)?;
        let returns = compute_returns(&traj.rewards, self.config.discount);
        let nodes = actor_critic_loss(
            &mut tape,
            logits,
            values,
            &traj.actions,
            &returns,
            self.config.entropy_coef,
            self.config.value_coef,
        )?;
        let breakdown = LossBreakdown {
            total: tape.value(nodes.total).item(),
            policy: tape.value(nodes.policy).item(),
            value: tape.value(nodes.value).item(),
            entropy: tape.value(nodes.entropy).item(),
        };
        let grads = tape.backward(nodes.total, &self.store)?;
        Ok((grads, breakdown, traj))
    }

    pub fn apply(&mut self, grads: &Gradients) -> Result<()> {
        self.optimizer.step(&mut self.store, grads)
    }

    /// One meta-episode followed by one optimizer update.
    pub fn train_meta_episode(&mut self, env: &mut dyn Environment, rng: &mut Rng64) -> Result<EpisodeMetrics> {
        let rollout = self.rollout(env, rng)?;
        let (grads, loss, traj) = self.gradients(rollout)?;
        self.apply(&grads)?;
        Ok(EpisodeMetrics::from_trajectory(&traj, loss))
    }

    /// One meta-episode without learning.
    pub fn evaluate_meta_episode(&self, env: &mut dyn Environment, rng: &mut Rng64) -> Result<EpisodeMetrics> {
        let rollout = self.rollout(env, rng)?;
        Ok(EpisodeMetrics::from_trajectory(&rollout.traj, LossBreakdown::default()))
    }
}

/// A recorded meta-episode whose tape still awaits the loss.
#[derive(Debug)]
pub struct Rollout {
    pub tape: Tape,
    /// `T x memory_dim` memory outputs on the tape.
    pub states: NodeId,
    pub traj: Trajectory,
}
