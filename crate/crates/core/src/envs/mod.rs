//! Memory-dependent partially observed tasks.
//!
//! Every task runs in meta-episodes: a block of steps (possibly split into
//! trials) that share hidden parameters drawn at [`Environment::reset`].
//! Agents keep their memory across trials and reset it only with the
//! meta-episode.

mod bandit;
mod maze;
mod recall;
mod seq_bandit;

pub use bandit::{Bandit, BanditConfig};
pub use maze::{manhattan, wall_bits, Maze, MazeConfig, MazeAction};
pub use recall::{recall_label, RecallConfig, RecallMatch};
pub use seq_bandit::{SeqBandit, SeqBanditConfig};

use crate::error::{Error, Result};
use crate::rng::Rng64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    RecallMatch,
    Bandit,
    SeqBandit,
    WaterMaze,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::RecallMatch => "recall_match",
            TaskKind::Bandit => "bandit",
            TaskKind::SeqBandit => "seq_bandit",
            TaskKind::WaterMaze => "water_maze",
        }
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub task: TaskKind,
    #[serde(default)]
    pub recall: RecallConfig,
    #[serde(default)]
    pub bandit: BanditConfig,
    #[serde(default)]
    pub seq_bandit: SeqBanditConfig,
    #[serde(default)]
    pub maze: MazeConfig,
}

impl EnvConfig {
    pub fn new(task: TaskKind) -> Self {
        EnvConfig {
            task,
            recall: RecallConfig::default(),
            bandit: BanditConfig::default(),
            seq_bandit: SeqBanditConfig::default(),
            maze: MazeConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.task {
            TaskKind::RecallMatch => self.recall.validate(),
            TaskKind::Bandit => self.bandit.validate(),
            TaskKind::SeqBandit => self.seq_bandit.validate(),
            TaskKind::WaterMaze => self.maze.validate(),
        }
    }

    /// Builds the configured task with its own random stream.
    pub fn build(&self, rng: Rng64) -> Result<Box<dyn Environment>> {
        self.validate()?;
        Ok(match self.task {
            TaskKind::RecallMatch => Box::new(RecallMatch::new(self.recall.clone(), rng)?),
            TaskKind::Bandit => Box::new(Bandit::new(self.bandit.clone(), rng)?),
            TaskKind::SeqBandit => Box::new(SeqBandit::new(self.seq_bandit.clone(), rng)?),
            TaskKind::WaterMaze => Box::new(Maze::new(self.maze.clone(), rng)?),
        })
    }
}

/// Ground truth attached to each step for tests and traces.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleInfo {
    /// `label` is `None` on unscored steps.
    Recall { label: Option<usize> },
    Bandit { winner: usize, optimal_arm: usize },
    SeqBandit { target: Vec<usize>, phase: usize },
    Maze {
        position: (usize, usize),
        target: (usize, usize),
    },
}

impl std::fmt::Display for OracleInfo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OracleInfo::Recall { label: Some(l) } => write!(f, "label={l}"),
            OracleInfo::Recall { label: None } => write!(f, "label=none"),
            OracleInfo::Bandit { winner, optimal_arm } => {
                write!(f, "winner={winner} optimal={optimal_arm}")
            }
            OracleInfo::SeqBandit { target, phase } => {
                let t: Vec<String> = target.iter().map(|a| a.to_string()).collect();
                write!(f, "target={} phase={phase}", t.join(""))
            }
            OracleInfo::Maze { position, target } => write!(
                f,
                "pos={},{} target={},{}",
                position.0, position.1, target.0, target.1
            ),
        }
    }
}

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Observation for the next step.
    pub observation: Vec<f64>,
    pub reward: f64,
    /// End of the meta-episode.
    pub done: bool,
    /// Trial the action belonged to.
    pub trial: usize,
    /// The action closed its trial.
    pub trial_end: bool,
    /// Whether this step counts toward accuracy metrics.
    pub scored: bool,
    pub info: OracleInfo,
}

/// Hidden task parameters of the current meta-episode.
#[derive(Debug, Clone, PartialEq)]
pub enum HiddenParams {
    RecallMatch,
    Bandit { probs: Vec<f64> },
    SeqBandit { target: Vec<usize>, cue: usize },
    WaterMaze { target: (usize, usize) },
}

pub trait Environment: Send {
    fn task(&self) -> TaskKind;
    fn observation_width(&self) -> usize;
    fn action_count(&self) -> usize;
    /// Upper bound on steps in one meta-episode.
    fn meta_episode_length(&self) -> usize;
    /// Draws new hidden parameters and returns the first observation.
    fn reset(&mut self) -> Vec<f64>;
    fn step(&mut self, action: usize) -> Result<StepOutcome>;
    fn hidden(&self) -> HiddenParams;
}

pub(crate) fn check_action(action: usize, n: usize) -> Result<()> {
    if action >= n {
        return Err(Error::usage(format!("action {action} outside 0..{n}")));
    }
    Ok(())
}

pub(crate) fn one_hot(i: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Best achievable expected reward per step with the hidden parameters
/// known: bandit `max(p)`, sequential bandit one reward per attempt, recall
/// match every scored step, maze trials completed along shortest paths from
/// uniformly random starts.
pub fn oracle_optimal_return(config: &EnvConfig, hidden: &HiddenParams) -> f64 {
    match hidden {
        HiddenParams::RecallMatch => 1.0,
        HiddenParams::Bandit { probs } => probs.iter().cloned().fold(0.0, f64::max),
        HiddenParams::SeqBandit { target, .. } => 1.0 / target.len() as f64,
        HiddenParams::WaterMaze { target } => {
            1.0 / maze::mean_optimal_steps(config.maze.grid, *target)
        }
    }
}

/// One row of a step trace.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub step: usize,
    pub trial: usize,
    pub observation: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub info: String,
}

/// Writes `step,trial,observation,action,reward,info` rows; observation
/// entries are joined with `;`.
pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "step,trial,observation,action,reward,info").map_err(io)?;
    for r in rows {
        let obs: Vec<String> = r.observation.iter().map(|v| format!("{v}")).collect();
        writeln!(
            w,
            "{},{},{},{},{:.16e},{}",
            r.step,
            r.trial,
            obs.join(";"),
            r.action,
            r.reward,
            r.info
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
