use super::{check_action, one_hot, Environment, HiddenParams, OracleInfo, StepOutcome, TaskKind};
use crate::error::{Error, Result};
use crate::rng::Rng64;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeqBanditConfig {
    pub n_arms: usize,
    pub seq_len: usize,
    pub attempts: usize,
    /// Size of the cue alphabet.
    pub n_cues: usize,
}

impl Default for SeqBanditConfig {
    fn default() -> Self {
        SeqBanditConfig {
            n_arms: 2,
            seq_len: 3,
            attempts: 30,
            n_cues: 4,
        }
    }
}

impl SeqBanditConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_arms < 2 || self.seq_len == 0 || self.attempts == 0 || self.n_cues == 0 {
            return Err(Error::config("invalid sequential bandit settings"));
        }
        Ok(())
    }

    /// Number of distinct action sequences.
    pub fn n_sequences(&self) -> usize {
        self.n_arms.pow(self.seq_len as u32)
    }
}

/// Reward arrives only at the end of an attempt whose actions spell out the
/// hidden target sequence. Observations are the episode's cue plus a one-hot
/// of the position inside the current attempt.
#[derive(Debug)]
pub struct SeqBandit {
    config: SeqBanditConfig,
    rng: Rng64,
    target: Vec<usize>,
    cue: usize,
    taken: Vec<usize>,
    attempt: usize,
    done: bool,
}

impl SeqBandit {
    pub fn new(config: SeqBanditConfig, rng: Rng64) -> Result<Self> {
        config.validate()?;
        Ok(SeqBandit {
            target: vec![0; config.seq_len],
            config,
            rng,
            cue: 0,
            taken: Vec::new(),
            attempt: 0,
            done: true,
        })
    }

    pub fn reset_with_target(&mut self, target: Vec<usize>, cue: usize) -> Result<Vec<f64>> {
        if target.len() != self.config.seq_len
            || target.iter().any(|&a| a >= self.config.n_arms)
            || cue >= self.config.n_cues
        {
            return Err(Error::config(format!("invalid target {target:?} / cue {cue}")));
        }
        self.target = target;
        self.cue = cue;
        self.taken.clear();
        self.attempt = 0;
        self.done = false;
        Ok(self.observe())
    }

    fn observe(&self) -> Vec<f64> {
        let mut obs = one_hot(self.cue, self.config.n_cues);
        obs.extend(one_hot(self.taken.len(), self.config.seq_len));
        obs
    }
}

impl Environment for SeqBandit {
    fn task(&self) -> TaskKind {
        TaskKind::SeqBandit
    }

    fn observation_width(&self) -> usize {
        self.config.n_cues + self.config.seq_len
    }

    fn action_count(&self) -> usize {
        self.config.n_arms
    }

    fn meta_episode_length(&self) -> usize {
        self.config.attempts * self.config.seq_len
    }

    fn reset(&mut self) -> Vec<f64> {
        let target = (0..self.config.seq_len)
            .map(|_| self.rng.gen_range(0..self.config.n_arms))
            .collect();
        let cue = self.rng.gen_range(0..self.config.n_cues);
        self.reset_with_target(target, cue).expect("valid draw")
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::usage("step after end of episode"));
        }
        check_action(action, self.config.n_arms)?;
        let phase = self.taken.len();
        self.taken.push(action);
        let trial = self.attempt;
        let mut reward = 0.0;
        let trial_end = self.taken.len() == self.config.seq_len;
        if trial_end {
            if self.taken == self.target {
                reward = 1.0;
            }
            self.taken.clear();
            self.attempt += 1;
            self.done = self.attempt == self.config.attempts;
        }
        Ok(StepOutcome {
            observation: self.observe(),
            reward,
            done: self.done,
            trial,
            trial_end,
            scored: true,
            info: OracleInfo::SeqBandit {
                target: self.target.clone(),
                phase,
            },
        })
    }

    fn hidden(&self) -> HiddenParams {
        HiddenParams::SeqBandit {
            target: self.target.clone(),
            cue: self.cue,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn rewards(target: Vec<usize>, actions: &[usize]) -> Vec<f64> {
        let mut env = SeqBandit::new(SeqBanditConfig::default(), rng_from_seed(1)).unwrap();
        env.reset_with_target(target, 0).unwrap();
        actions.iter().map(|&a| env.step(a).unwrap().reward).collect()
    }

    #[test]
    fn matching_attempt_pays_on_last_step() {
        assert_eq!(rewards(vec![0, 1, 0], &[0, 1, 0]), vec![0.0, 0.0, 1.0]);
        assert_eq!(rewards(vec![0, 1, 0], &[0, 1, 1]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn eight_sequences() {
        assert_eq!(SeqBanditConfig::default().n_sequences(), 8);
    }

    #[test]
    fn episode_length() {
        let mut env = SeqBandit::new(SeqBanditConfig::default(), rng_from_seed(2)).unwrap();
        env.reset();
        let mut n = 0;
        while !env.step(0).unwrap().done {
            n += 1;
        }
        assert_eq!(n + 1, 90);
    }
}
