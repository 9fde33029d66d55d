use super::{check_action, one_hot, Environment, HiddenParams, OracleInfo, StepOutcome, TaskKind};
use crate::error::{Error, Result};
use crate::rng::Rng64;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecallConfig {
    /// Alphabet size K.
    pub n_symbols: usize,
    pub lag_n: usize,
    pub lag_m: usize,
    pub episode_len: usize,
}

impl Default for RecallConfig {
    fn default() -> Self {
        RecallConfig {
            n_symbols: 2,
            lag_n: 2,
            lag_m: 4,
            episode_len: 100,
        }
    }
}

impl RecallConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lag_n == self.lag_m {
            return Err(Error::config("recall lags must differ"));
        }
        if self.n_symbols < 2 || self.episode_len == 0 {
            return Err(Error::config("recall needs >= 2 symbols and a positive length"));
        }
        Ok(())
    }
}

/// Label at step `t`: 1 when the symbols `lag_n` and `lag_m` steps back
/// agree, `None` while either is before the start.
pub fn recall_label(symbols: &[usize], t: usize, lag_n: usize, lag_m: usize) -> Option<usize> {
    let back = lag_n.max(lag_m);
    if t < back {
        return None;
    }
    Some(usize::from(symbols[t - lag_n] == symbols[t - lag_m]))
}

/// At each step the agent sees a random symbol and must answer whether the
/// symbols seen `lag_n` and `lag_m` steps earlier were the same.
#[derive(Debug)]
pub struct RecallMatch {
    config: RecallConfig,
    rng: Rng64,
    symbols: Vec<usize>,
    t: usize,
    done: bool,
}

impl RecallMatch {
    pub fn new(config: RecallConfig, rng: Rng64) -> Result<Self> {
        config.validate()?;
        Ok(RecallMatch {
            config,
            rng,
            symbols: Vec::new(),
            t: 0,
            done: true,
        })
    }

    /// Symbols shown so far this episode.
    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    fn draw(&mut self) -> Vec<f64> {
        let s = self.rng.gen_range(0..self.config.n_symbols);
        self.symbols.push(s);
        one_hot(s, self.config.n_symbols)
    }
}

impl Environment for RecallMatch {
    fn task(&self) -> TaskKind {
        TaskKind::RecallMatch
    }

    fn observation_width(&self) -> usize {
        self.config.n_symbols
    }

    fn action_count(&self) -> usize {
        2
    }

    fn meta_episode_length(&self) -> usize {
        self.config.episode_len
    }

    fn reset(&mut self) -> Vec<f64> {
        self.symbols.clear();
        self.t = 0;
        self.done = false;
        self.draw()
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::usage("step after end of episode"));
        }
        check_action(action, 2)?;
        let label = recall_label(&self.symbols, self.t, self.config.lag_n, self.config.lag_m);
        let reward = match label {
            Some(l) if l == action => 1.0,
            _ => 0.0,
        };
        self.t += 1;
        let done = self.t == self.config.episode_len;
        self.done = done;
        let observation = if done {
            vec![0.0; self.config.n_symbols]
        } else {
            self.draw()
        };
        Ok(StepOutcome {
            observation,
            reward,
            done,
            trial: 0,
            trial_end: done,
            scored: label.is_some(),
            info: OracleInfo::Recall { label },
        })
    }

    fn hidden(&self) -> HiddenParams {
        HiddenParams::RecallMatch
    }
}
