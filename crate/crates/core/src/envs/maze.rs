use super::{check_action, Environment, HiddenParams, OracleInfo, StepOutcome, TaskKind};
use crate::error::{Error, Result};
use crate::rng::Rng64;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MazeConfig {
    /// Side length of the square grid.
    pub grid: usize,
    pub steps_per_trial: usize,
    pub trials_per_target: usize,
}

impl Default for MazeConfig {
    fn default() -> Self {
        MazeConfig {
            grid: 4,
            steps_per_trial: 30,
            trials_per_target: 5,
        }
    }
}

impl MazeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 3 || self.steps_per_trial == 0 || self.trials_per_target == 0 {
            return Err(Error::config("maze needs grid >= 3 and positive trial sizes"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MazeAction {
    North,
    South,
    East,
    West,
}

impl MazeAction {
    pub const ALL: [MazeAction; 4] = [
        MazeAction::North,
        MazeAction::South,
        MazeAction::East,
        MazeAction::West,
    ];

    fn delta(self) -> (isize, isize) {
        match self {
            MazeAction::North => (-1, 0),
            MazeAction::South => (1, 0),
            MazeAction::East => (0, 1),
            MazeAction::West => (0, -1),
        }
    }
}

/// Neighbour offsets in observation order: N, NE, E, SE, S, SW, W, NW.
const NEIGHBOURS: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

fn offset(pos: (usize, usize), d: (isize, isize), n: usize) -> Option<(usize, usize)> {
    let r = pos.0 as isize + d.0;
    let c = pos.1 as isize + d.1;
    (r >= 0 && c >= 0 && (r as usize) < n && (c as usize) < n).then_some((r as usize, c as usize))
}

/// One bit per neighbouring cell, 1 where the neighbour is outside the grid.
pub fn wall_bits(pos: (usize, usize), n: usize) -> [f64; 8] {
    let mut bits = [0.0; 8];
    for (b, &d) in bits.iter_mut().zip(&NEIGHBOURS) {
        if offset(pos, d, n).is_none() {
            *b = 1.0;
        }
    }
    bits
}

pub fn manhattan(a: (usize, usize), b: (usize, usize)) -> usize {
    a.0.abs_diff(b.0) + a.1.abs_diff(b.1)
}

/// Mean shortest-path length to `target` over the other cells.
pub(crate) fn mean_optimal_steps(n: usize, target: (usize, usize)) -> f64 {
    let mut total = 0;
    for r in 0..n {
        for c in 0..n {
            total += manhattan((r, c), target);
        }
    }
    total as f64 / (n * n - 1) as f64
}

/// Open square arena with a hidden goal cell. The agent only senses which
/// of its eight neighbours are walls; each meta-episode places one goal and
/// runs several trials from fresh random starts.
#[derive(Debug)]
pub struct Maze {
    config: MazeConfig,
    rng: Rng64,
    target: (usize, usize),
    position: (usize, usize),
    starts: Vec<(usize, usize)>,
    trial: usize,
    trial_steps: usize,
    done: bool,
}

impl Maze {
    pub fn new(config: MazeConfig, rng: Rng64) -> Result<Self> {
        config.validate()?;
        Ok(Maze {
            config,
            rng,
            target: (0, 0),
            position: (0, 0),
            starts: Vec::new(),
            trial: 0,
            trial_steps: 0,
            done: true,
        })
    }

    pub fn reset_with_target(&mut self, target: (usize, usize)) -> Result<Vec<f64>> {
        let n = self.config.grid;
        if target.0 >= n || target.1 >= n {
            return Err(Error::config(format!("target {target:?} outside {n}x{n} grid")));
        }
        self.target = target;
        self.starts.clear();
        self.trial = 0;
        self.done = false;
        self.begin_trial();
        Ok(self.observe())
    }

    /// Like [`Maze::reset_with_target`] but the first trial starts at `start`.
    pub fn reset_at(&mut self, target: (usize, usize), start: (usize, usize)) -> Result<Vec<f64>> {
        let n = self.config.grid;
        if start == target || start.0 >= n || start.1 >= n {
            return Err(Error::config(format!("start {start:?} invalid for target {target:?}")));
        }
        self.reset_with_target(target)?;
        self.position = start;
        self.starts[0] = start;
        Ok(self.observe())
    }

    pub fn position(&self) -> (usize, usize) {
        self.position
    }

    /// Start cells of the trials so far.
    pub fn starts(&self) -> &[(usize, usize)] {
        &self.starts
    }

    fn begin_trial(&mut self) {
        let n = self.config.grid;
        let start = loop {
            let cell = (self.rng.gen_range(0..n), self.rng.gen_range(0..n));
            if cell != self.target {
                break cell;
            }
        };
        self.position = start;
        self.starts.push(start);
        self.trial_steps = 0;
    }

    fn observe(&self) -> Vec<f64> {
        wall_bits(self.position, self.config.grid).to_vec()
    }
}

impl Environment for Maze {
    fn task(&self) -> TaskKind {
        TaskKind::WaterMaze
    }

    fn observation_width(&self) -> usize {
        8
    }

    fn action_count(&self) -> usize {
        4
    }

    fn meta_episode_length(&self) -> usize {
        self.config.steps_per_trial * self.config.trials_per_target
    }

    fn reset(&mut self) -> Vec<f64> {
        let n = self.config.grid;
        let target = (self.rng.gen_range(0..n), self.rng.gen_range(0..n));
        self.reset_with_target(target).expect("target inside grid")
    }

    fn step(&mut self, action: usize) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::usage("step after end of episode"));
        }
        check_action(action, 4)?;
        let n = self.config.grid;
        if let Some(next) = offset(self.position, MazeAction::ALL[action].delta(), n) {
            self.position = next;
        }
        self.trial_steps += 1;
        let found = self.position == self.target;
        let info = OracleInfo::Maze {
            position: self.position,
            target: self.target,
        };
        let trial = self.trial;
        let trial_end = found || self.trial_steps == self.config.steps_per_trial;
        if trial_end {
            self.trial += 1;
            if self.trial == self.config.trials_per_target {
                self.done = true;
            } else {
                self.begin_trial();
            }
        }
        Ok(StepOutcome {
            observation: self.observe(),
            reward: if found { 1.0 } else { 0.0 },
            done: self.done,
            trial,
            trial_end,
            scored: true,
            info,
        })
    }

    fn hidden(&self) -> HiddenParams {
        HiddenParams::WaterMaze {
            target: self.target,
        }
    }
}
