use super::{check_action, Environment, HiddenParams, OracleInfo, StepOutcome, TaskKind};
use crate::error::{Error, Result};
use crate::rng::Rng64;
use rand::Rng;
use rand_distr::{Distribution, WeightedIndex};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BanditConfig {
    pub n_arms: usize,
    pub episode_len: usize,
}

impl Default for BanditConfig {
    fn default() -> Self {
        BanditConfig {
            n_arms: 2,
            episode_len: 100,
        }
    }
}

impl BanditConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_arms < 2 || self.episode_len == 0 {
            return Err(Error::config("bandit needs >= 2 arms and a positive length"));
        }
        Ok(())
    }
}

/// Each step one arm wins, drawn from a categorical distribution whose
/// probabilities are drawn uniformly from the simplex per episode. Reward
/// is 1 for picking the winner.
#[derive(Debug)]
pub struct Bandit {
    config: BanditConfig,
    rng: Rng64,
    probs: Vec<f64>,
    t: usize,
    done: bool,
}

impl Bandit {
    pub fn new(config: BanditConfig, rng: Rng64) -> Result<Self> {
        config.validate()?;
        let k = config.n_arms;
        Ok(Bandit {
            config,
            rng,
            probs: vec![1.0 / k as f64; k],
            t: 0,
            done: true,
        })
    }

    /// Starts an episode with fixed arm probabilities.
    pub fn reset_with_probs(&mut self, probs: Vec<f64>) -> Result<Vec<f64>> {
        if probs.len() != self.config.n_arms
            || probs.iter().any(|&p| !(0.0..=1.0).contains(&p))
            || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::config(format!("invalid arm probabilities {probs:?}")));
        }
        self.probs = probs;
        self.t = 0;
        self.done = false;
        Ok(vec![1.0])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Samples a winning arm without advancing the episode.
    pub fn draw_winner(&mut self) -> usize {
        WeightedIndex::new(&self.probs)
            .expect("probabilities sum to one")
            .sample(&mut self.rng)
    }

    fn optimal_arm(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

/// Flat Dirichlet sample by normalizing i.i.d. exponentials.
fn flat_dirichlet(k: usize, rng: &mut impl Rng) -> Vec<f64> {
    let exp = rand_distr::Exp1;
    loop {
        let draws: Vec<f64> = (0..k).map(|_| exp.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        if total > 0.0 {
            return draws.into_iter().map(|d| d / total).collect();
        }
    }
}

impl Environment for Bandit {
    fn task(&self) -> TaskKind {
        TaskKind::Bandit
    }

    fn observation_width(&self) -> usize {
        1
    }

    fn action_count(&self) -> usize {
        self.config.n_arms
    }

    fn meta_episode_length(&self) -> usize {
        self.config.episode_len
    }

    fn reset(&mut self) -> Vec<f64> {
        let probs = flat_dirichlet(self.config.n_arms, &mut self.rng);
        self.reset_with_probs(probs).expect("valid dirichlet draw")
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::usage("step after end of episode"));
        }
        check_action(action, self.config.n_arms)?;
        let winner = self.draw_winner();
        self.t += 1;
        self.done = self.t == self.config.episode_len;
        Ok(StepOutcome {
            observation: vec![1.0],
            reward: if action == winner { 1.0 } else { 0.0 },
            done: self.done,
            trial: 0,
            trial_end: self.done,
            scored: true,
            info: OracleInfo::Bandit {
                winner,
                optimal_arm: self.optimal_arm(),
            },
        })
    }

    fn hidden(&self) -> HiddenParams {
        HiddenParams::Bandit {
            probs: self.probs.clone(),
        }
    }
}
