//! Oracles shared by the integration tests. None of these call into the
//! code path they check.
#![allow(dead_code)]

use esnrl::agent::actor_critic_loss_with_advantages;
use esnrl::autodiff::{Gradients, ParamStore, Tape};
use esnrl::cells::{CellConfig, MemoryCell, MemoryKind, Mlp, MlpConfig};
use esnrl::envs::{
    wall_bits, Bandit, BanditConfig, Environment, HiddenParams, Maze, MazeConfig, OracleInfo,
    RecallConfig, RecallMatch, SeqBandit, SeqBanditConfig,
};
use esnrl::reservoir::{esn_step, EsnConfig, ReservoirState, ReservoirWeights};
use esnrl::rng::rng_from_seed;
use esnrl::Matrix;
use rand::Rng;
use std::collections::VecDeque;

/// Spectral radius through nalgebra's real Schur decomposition.
pub fn eigen_oracle_radius(w: &Matrix) -> f64 {
    let n = w.rows();
    let m = nalgebra::DMatrix::from_row_slice(n, n, w.data());
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Relative error with an absolute floor for tiny values.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central finite-difference gradient of `f` at `x`.
pub fn central_diff(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub fn norm_rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = na.max(nb);
    if scale < 1e-12 {
        0.0
    } else {
        diff / scale
    }
}

pub const FD_STEP: f64 = 1e-5;

/// A small agent-shaped loss: memory unrolled over a random input sequence,
/// actor and critic decoders on every step, actor-critic loss on random
/// actions and returns.
pub struct LossProblem {
    pub store: ParamStore,
    cell: Option<MemoryCell>,
    reservoir_states: Option<Matrix>,
    actor: Mlp,
    critic: Mlp,
    inputs: Vec<Vec<f64>>,
    actions: Vec<usize>,
    returns: Vec<f64>,
}

impl LossProblem {
    pub fn new(kind: MemoryKind, seed: u64, steps: usize) -> Self {
        let (input_dim, hidden, n_actions) = (5, 6, 3);
        let mut rng = rng_from_seed(seed);
        let mut store = ParamStore::new();
        let inputs: Vec<Vec<f64>> = (0..steps)
            .map(|_| (0..input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let (cell, reservoir_states, mem_dim) = if kind.is_reservoir() {
            let cfg = if kind == MemoryKind::EsnDense {
                EsnConfig { n_hidden: 12, ..EsnConfig::dense() }
            } else {
                EsnConfig { n_unique: 4, n_shared: 2, radius: 3, ..EsnConfig::local() }
            };
            let w = ReservoirWeights::build(&cfg, input_dim, seed).unwrap();
            let mut h = ReservoirState::zeros(w.n_hidden());
            let mut rows = Vec::new();
            for x in &inputs {
                h = esn_step(&w, &h, x).unwrap();
                rows.extend_from_slice(&h.activations);
            }
            let n = w.n_hidden();
            (None, Some(Matrix::from_vec(steps, n, rows).unwrap()), n)
        } else {
            let cfg = CellConfig { kind, input_dim, hidden_dim: hidden };
            (Some(MemoryCell::new(cfg, &mut store, &mut rng).unwrap()), None, hidden)
        };
        let dec = MlpConfig { n_hidden_units: 8, n_layers: 2 };
        let actor = Mlp::new("actor", dec, mem_dim, n_actions, &mut store, &mut rng).unwrap();
        let critic = Mlp::new("critic", dec, mem_dim, 1, &mut store, &mut rng).unwrap();
        let actions = (0..steps).map(|_| rng.gen_range(0..n_actions)).collect();
        let returns = (0..steps).map(|_| rng.gen_range(-1.0..2.0)).collect();
        LossProblem { store, cell, reservoir_states, actor, critic, inputs, actions, returns }
    }

    /// Advantages at the stored parameters; the policy term treats them as
    /// constants, so finite differences must hold them fixed too.
    fn advantages(&self) -> Vec<f64> {
        let mut tape = Tape::new();
        let states = self.states(&self.store, &mut tape);
        let values = self.critic.forward(&mut tape, &self.store, states).unwrap();
        let v = tape.value(values).data().to_vec();
        self.returns.iter().zip(v).map(|(g, v)| g - v).collect()
    }

    fn build(&self, store: &ParamStore, tape: &mut Tape, advantages: &[f64]) -> esnrl::autodiff::NodeId {
        let states = self.states(store, tape);
        let logits = self.actor.forward(tape, store, states).unwrap();
        let values = self.critic.forward(tape, store, states).unwrap();
        actor_critic_loss_with_advantages(tape, logits, values, &self.actions, &self.returns, advantages, 0.01, 0.5)
            .unwrap()
            .total
    }

    fn states(&self, store: &ParamStore, tape: &mut Tape) -> esnrl::autodiff::NodeId {
        match (&self.cell, &self.reservoir_states) {
            (Some(cell), _) => {
                let mut state = cell.initial_state(tape).unwrap();
                let mut outs = Vec::new();
                for x in &self.inputs {
                    let xn = tape.constant(Matrix::row_vector(x.clone())).unwrap();
                    let (next, out) = cell.step(tape, store, &state, xn).unwrap();
                    state = next;
                    outs.push(out);
                }
                tape.stack_rows(&outs).unwrap()
            }
            (None, Some(states)) => tape.constant(states.clone()).unwrap(),
            _ => unreachable!(),
        }
    }

    pub fn loss(&self, store: &ParamStore, advantages: &[f64]) -> f64 {
        let mut tape = Tape::new();
        let loss = self.build(store, &mut tape, advantages);
        tape.value(loss).item()
    }

    pub fn analytic(&self) -> Gradients {
        let mut tape = Tape::new();
        let loss = self.build(&self.store, &mut tape, &self.advantages());
        tape.backward(loss, &self.store).unwrap()
    }

    /// Largest per-tensor relative error between backprop and central
    /// differences.
    pub fn check(&self) -> f64 {
        let grads = self.analytic();
        let advantages = self.advantages();
        let mut worst: f64 = 0.0;
        let mut probe = self.store.clone();
        for id in self.store.ids() {
            let base = self.store.get(id).data().to_vec();
            let numeric = central_diff(&base, FD_STEP, |x| {
                probe.get_mut(id).data_mut().copy_from_slice(x);
                self.loss(&probe, &advantages)
            });
            probe.get_mut(id).data_mut().copy_from_slice(&base);
            worst = worst.max(norm_rel_err(grads.get(id).data(), &numeric));
        }
        worst
    }
}

fn decode_one_hot(obs: &[f64]) -> usize {
    obs.iter().position(|&v| v == 1.0).expect("one-hot observation")
}

/// Recall labels recomputed from the observed symbols with a sliding window,
/// over `episodes` episodes of random actions.
pub fn check_recall(episodes: usize, seed: u64) -> Result<String, String> {
    let cfg = RecallConfig::default();
    let mut env = RecallMatch::new(cfg.clone(), rng_from_seed(seed)).map_err(|e| e.to_string())?;
    let mut rng = rng_from_seed(seed ^ 0xabc);
    let mut scored = 0usize;
    for ep in 0..episodes {
        let mut window: VecDeque<usize> = VecDeque::new();
        let mut obs = env.reset();
        for t in 0.. {
            window.push_front(decode_one_hot(&obs));
            window.truncate(cfg.lag_m + 1);
            let expected = (window.len() > cfg.lag_m)
                .then(|| usize::from(window[cfg.lag_n] == window[cfg.lag_m]));
            let action = rng.gen_range(0..2);
            let out = env.step(action).map_err(|e| e.to_string())?;
            let OracleInfo::Recall { label } = out.info else {
                return Err("wrong oracle info".into());
            };
            if label != expected {
                return Err(format!("episode {ep} step {t}: label {label:?}, oracle {expected:?}"));
            }
            let reward = if expected == Some(action) { 1.0 } else { 0.0 };
            if out.reward != reward || out.scored != expected.is_some() {
                return Err(format!("episode {ep} step {t}: reward/scored mismatch"));
            }
            scored += usize::from(out.scored);
            if out.done {
                break;
            }
            obs = out.observation;
        }
    }
    Ok(format!("{episodes} episodes, {scored} scored labels exact"))
}

/// Upper 1% points of the chi-square distribution by degrees of freedom.
const CHI2_99: [f64; 5] = [6.634897, 9.210340, 11.344867, 13.276704, 15.086272];

/// Pearson chi-square of `draws` winner samples against the arm probabilities.
pub fn check_bandit(n_arms: usize, draws: usize, seed: u64) -> Result<String, String> {
    let cfg = BanditConfig { n_arms, ..BanditConfig::default() };
    let mut env = Bandit::new(cfg, rng_from_seed(seed)).map_err(|e| e.to_string())?;
    env.reset();
    let probs = match env.hidden() {
        HiddenParams::Bandit { probs } => probs,
        _ => return Err("wrong hidden params".into()),
    };
    let mut counts = vec![0usize; n_arms];
    for _ in 0..draws {
        counts[env.draw_winner()] += 1;
    }
    let chi2: f64 = counts
        .iter()
        .zip(&probs)
        .map(|(&c, &p)| {
            let e = p * draws as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let critical = CHI2_99[n_arms - 2];
    if chi2 < critical {
        Ok(format!("chi2 = {chi2:.3} < {critical} (p > 0.01), probs {probs:.3?}"))
    } else {
        Err(format!("chi2 = {chi2:.3} >= {critical}, counts {counts:?}, probs {probs:?}"))
    }
}

/// Breadth-first shortest paths on an open `n x n` grid, written against
/// the geometry directly.
fn bfs_path(n: usize, start: (usize, usize), target: (usize, usize)) -> Option<Vec<usize>> {
    let moves: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, 1), (0, -1)];
    let mut prev = vec![None; n * n];
    let idx = |p: (usize, usize)| p.0 * n + p.1;
    let mut seen = vec![false; n * n];
    let mut queue = VecDeque::from([start]);
    seen[idx(start)] = true;
    while let Some(p) = queue.pop_front() {
        if p == target {
            let mut path = Vec::new();
            let mut cur = p;
            while let Some((from, a)) = prev[idx(cur)] {
                path.push(a);
                cur = from;
            }
            path.reverse();
            return Some(path);
        }
        for (a, d) in moves.iter().enumerate() {
            let (r, c) = (p.0 as isize + d.0, p.1 as isize + d.1);
            if r < 0 || c < 0 || r >= n as isize || c >= n as isize {
                continue;
            }
            let q = (r as usize, c as usize);
            if !seen[idx(q)] {
                seen[idx(q)] = true;
                prev[idx(q)] = Some((p, a));
                queue.push_back(q);
            }
        }
    }
    None
}

/// Every (start, target) pair: the BFS path exists, has Manhattan length,
/// and replaying it in the environment collects the reward on its last move
/// with wall bits matching the geometry along the way.
pub fn check_maze(seed: u64) -> Result<String, String> {
    let cfg = MazeConfig::default();
    let n = cfg.grid;
    let mut env = Maze::new(cfg, rng_from_seed(seed)).map_err(|e| e.to_string())?;
    let mut pairs = 0;
    for target in (0..n).flat_map(|r| (0..n).map(move |c| (r, c))) {
        for start in (0..n).flat_map(|r| (0..n).map(move |c| (r, c))) {
            if start == target {
                continue;
            }
            let path = bfs_path(n, start, target).ok_or(format!("{start:?} cannot reach {target:?}"))?;
            let dist = start.0.abs_diff(target.0) + start.1.abs_diff(target.1);
            if path.len() != dist {
                return Err(format!("{start:?}->{target:?}: path {} vs distance {dist}", path.len()));
            }
            let obs = env.reset_at(target, start).map_err(|e| e.to_string())?;
            if obs != wall_bits(start, n) {
                return Err(format!("wall bits wrong at {start:?}"));
            }
            for (k, &a) in path.iter().enumerate() {
                let out = env.step(a).map_err(|e| e.to_string())?;
                let last = k + 1 == path.len();
                if (out.reward == 1.0) != last || out.trial_end != last {
                    return Err(format!("{start:?}->{target:?}: reward at move {k}"));
                }
                if !last && out.observation != wall_bits(env.position(), n) {
                    return Err(format!("wall bits wrong at {:?}", env.position()));
                }
            }
            if env.starts().iter().any(|&s| s == target) {
                return Err("a trial started on the target".into());
            }
            pairs += 1;
        }
    }
    Ok(format!("{pairs} (start, target) pairs reachable along shortest paths"))
}

/// The first attempts of every meta-episode enumerate all sequences; exactly
/// one pays, and the remaining random attempts agree with it.
pub fn check_seq_bandit(meta_episodes: usize, seed: u64) -> Result<String, String> {
    let cfg = SeqBanditConfig::default();
    let (k, len, n_seq) = (cfg.n_arms, cfg.seq_len, cfg.n_sequences());
    let mut env = SeqBandit::new(cfg.clone(), rng_from_seed(seed)).map_err(|e| e.to_string())?;
    let mut rng = rng_from_seed(seed ^ 0x5eed);
    let decode = |code: usize| -> Vec<usize> {
        (0..len).map(|i| (code / k.pow((len - 1 - i) as u32)) % k).collect()
    };
    let mut targets_seen = vec![0usize; n_seq];
    for ep in 0..meta_episodes {
        env.reset();
        let mut rewarded = Vec::new();
        for attempt in 0..cfg.attempts {
            let seq = if attempt < n_seq {
                decode(attempt)
            } else {
                (0..len).map(|_| rng.gen_range(0..k)).collect()
            };
            let mut total = 0.0;
            for (i, &a) in seq.iter().enumerate() {
                let out = env.step(a).map_err(|e| e.to_string())?;
                if i + 1 < len && out.reward != 0.0 {
                    return Err(format!("episode {ep}: reward before the final decision"));
                }
                total += out.reward;
            }
            if total == 1.0 {
                rewarded.push(seq);
            } else if total != 0.0 {
                return Err(format!("episode {ep}: attempt reward {total}"));
            }
        }
        rewarded.sort();
        rewarded.dedup();
        if rewarded.len() != 1 {
            return Err(format!("episode {ep}: {} rewarded sequences", rewarded.len()));
        }
        let code = rewarded[0].iter().fold(0, |acc, &a| acc * k + a);
        targets_seen[code] += 1;
    }
    if targets_seen.iter().any(|&c| c == 0) {
        return Err(format!("some sequence never chosen as target: {targets_seen:?}"));
    }
    Ok(format!("{meta_episodes} meta-episodes, one rewarded sequence each, targets {targets_seen:?}"))
}
