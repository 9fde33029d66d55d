//! Seeded multi-run experiments and their on-disk reports.
//!
//! Output layout under the output directory:
//!
//! - `runs/<model>_<seed>.csv`: `episode,mean_step_reward`
//! - `details/<model>_<seed>.csv`: per-episode diagnostics
//! - `curves/<model>.csv`: `episode,min,mean,max` across runs after smoothing
//! - `report.json`: resolved config, model sizes and run metadata
//! - `timings.json`: wall-clock durations (the only non-reproducible file)

use crate::agent::{Agent, AgentConfig, EpisodeMetrics};
use crate::cells::{equalize_model_sizes, MemoryKind, MlpConfig, ModelSize};
use crate::envs::{EnvConfig, TaskKind};
use crate::error::{Error, Result};
use crate::optim::AdamConfig;
use crate::reservoir::{EsnConfig, ReservoirWeights};
use crate::rng::{derive_run_seed, stream_rng, stream_seed, Stream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Episode budget used when a config leaves `episodes` unset.
pub fn default_episodes(task: TaskKind) -> usize {
    match task {
        TaskKind::RecallMatch => 8_000,
        TaskKind::Bandit => 10_000,
        TaskKind::WaterMaze => 20_000,
        TaskKind::SeqBandit => 40_000,
    }
}

/// Learning settings shared by every model in an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub discount: f64,
    pub optimizer: AdamConfig,
    pub decoder_layers: usize,
    pub esn_dense: EsnConfig,
    pub esn_local: EsnConfig,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let a = AgentConfig::new(MemoryKind::Linear);
        TrainingConfig {
            entropy_coef: a.entropy_coef,
            value_coef: a.value_coef,
            discount: a.discount,
            optimizer: a.optimizer,
            decoder_layers: a.decoder.n_layers,
            esn_dense: a.esn_dense,
            esn_local: a.esn_local,
        }
    }
}

fn default_models() -> Vec<MemoryKind> {
    MemoryKind::ALL.to_vec()
}

fn default_runs() -> usize {
    8
}

fn default_window() -> usize {
    100
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvConfig,
    #[serde(default = "default_models")]
    pub models: Vec<MemoryKind>,
    /// Meta-episodes per run; unset means [`default_episodes`].
    #[serde(default)]
    pub episodes: Option<usize>,
    #[serde(default = "default_runs")]
    pub runs_per_model: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_window")]
    pub smoothing_window: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub training: TrainingConfig,
}

impl ExperimentConfig {
    pub fn new(task: TaskKind) -> Self {
        ExperimentConfig {
            env: EnvConfig::new(task),
            models: default_models(),
            episodes: None,
            runs_per_model: default_runs(),
            base_seed: 0,
            smoothing_window: default_window(),
            output_dir: default_output(),
            training: TrainingConfig::default(),
        }
    }

    pub fn task(&self) -> TaskKind {
        self.env.task
    }

    pub fn episodes(&self) -> usize {
        self.episodes.unwrap_or_else(|| default_episodes(self.task()))
    }

    /// Parses and validates a JSON document. Parse errors carry line and
    /// column; unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        if self.models.is_empty() {
            return Err(Error::config("models: at least one model is required"));
        }
        for (i, m) in self.models.iter().enumerate() {
            if self.models[..i].contains(m) {
                return Err(Error::config(format!("models: {m} listed twice")));
            }
        }
        if self.episodes == Some(0) {
            return Err(Error::config("episodes must be >= 1"));
        }
        if self.runs_per_model == 0 {
            return Err(Error::config("runs_per_model must be >= 1"));
        }
        if self.smoothing_window == 0 {
            return Err(Error::config("smoothing_window must be >= 1"));
        }
        if self.training.decoder_layers == 0 {
            return Err(Error::config("training.decoder_layers must be >= 1"));
        }
        self.agent_config(MemoryKind::Linear, 32, 32).validate()
    }

    /// The config with every default written out.
    pub fn resolved(&self) -> Self {
        let mut cfg = self.clone();
        cfg.episodes = Some(self.episodes());
        cfg
    }

    /// Encoded input width and action count of the configured task.
    pub fn task_widths(&self) -> Result<(usize, usize)> {
        let env = self.env.build(stream_rng(0, Stream::Env))?;
        Ok((
            crate::agent::encoded_width(env.observation_width(), env.action_count()),
            env.action_count(),
        ))
    }

    pub fn model_sizes(&self) -> Result<Vec<ModelSize>> {
        let (input_dim, n_actions) = self.task_widths()?;
        Ok(equalize_model_sizes(
            &self.models,
            input_dim,
            n_actions,
            self.training.decoder_layers,
            &self.training.esn_dense,
            &self.training.esn_local,
        ))
    }

    pub fn agent_config(&self, memory: MemoryKind, memory_dim: usize, decoder_width: usize) -> AgentConfig {
        let t = &self.training;
        AgentConfig {
            memory,
            memory_dim,
            decoder: MlpConfig {
                n_hidden_units: decoder_width,
                n_layers: t.decoder_layers,
            },
            entropy_coef: t.entropy_coef,
            value_coef: t.value_coef,
            discount: t.discount,
            optimizer: t.optimizer,
            esn_dense: t.esn_dense.clone(),
            esn_local: t.esn_local.clone(),
        }
    }

    pub fn run_seed(&self, model: MemoryKind, run_index: usize) -> u64 {
        derive_run_seed(self.base_seed, model.index() as u64, run_index as u64)
    }
}

/// Per-episode numbers kept for each run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub mean_step_reward: f64,
    pub scored_accuracy: f64,
    /// Reward per step in the first trial.
    pub first_trial: f64,
    /// Reward per step averaged over the remaining trials (equal to
    /// `first_trial` for single-trial tasks).
    pub later_trials: f64,
    pub mean_entropy: f64,
    pub loss: f64,
}

impl From<&EpisodeMetrics> for EpisodeSummary {
    fn from(m: &EpisodeMetrics) -> Self {
        let per_trial = m.trial_step_rewards();
        let first = per_trial.first().copied().unwrap_or(0.0);
        let later = if per_trial.len() > 1 {
            per_trial[1..].iter().sum::<f64>() / (per_trial.len() - 1) as f64
        } else {
            first
        };
        EpisodeSummary {
            mean_step_reward: m.mean_step_reward,
            scored_accuracy: m.scored_accuracy,
            first_trial: first,
            later_trials: later,
            mean_entropy: m.mean_entropy,
            loss: m.loss.total,
        }
    }
}

/// Everything one training run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub model: MemoryKind,
    pub task: TaskKind,
    pub run_index: usize,
    pub seed: u64,
    pub size: ModelSize,
    pub trainable_params: usize,
    pub agent: AgentConfig,
    #[serde(skip)]
    pub episodes: Vec<EpisodeSummary>,
    #[serde(skip)]
    pub duration_secs: f64,
}

impl RunRecord {
    pub fn rewards(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.mean_step_reward).collect()
    }

    pub fn file_stem(&self) -> String {
        format!("{}_{}", self.model.name(), self.seed)
    }
}

/// Trains one model for one run index. `on_episode` sees every episode as
/// it completes.
pub fn run_single(
    config: &ExperimentConfig,
    size: &ModelSize,
    run_index: usize,
    mut on_episode: impl FnMut(usize, &EpisodeMetrics),
) -> Result<RunRecord> {
    let start = Instant::now();
    let seed = config.run_seed(size.kind, run_index);
    let agent_cfg = config.agent_config(size.kind, size.memory_dim, size.decoder_width);
    let mut env = config.env.build(stream_rng(seed, Stream::Env))?;
    let mut agent = Agent::new(agent_cfg.clone(), env.observation_width(), env.action_count(), seed)?;
    let mut policy_rng = stream_rng(seed, Stream::Policy);
    let n = config.episodes();
    let mut episodes = Vec::with_capacity(n);
    for ep in 0..n {
        let m = agent.train_meta_episode(env.as_mut(), &mut policy_rng)?;
        on_episode(ep, &m);
        episodes.push(EpisodeSummary::from(&m));
    }
    Ok(RunRecord {
        model: size.kind,
        task: config.task(),
        run_index,
        seed,
        size: *size,
        trainable_params: agent.trainable_count(),
        agent: agent_cfg,
        episodes,
        duration_secs: start.elapsed().as_secs_f64(),
    })
}

/// Trailing moving average; early entries average what is available.
pub fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, &v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RewardCurve {
    pub min: Vec<f64>,
    pub mean: Vec<f64>,
    pub max: Vec<f64>,
}

impl RewardCurve {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }
}

/// Elementwise min, mean and max across equally long runs.
pub fn aggregate_curves(runs: &[Vec<f64>]) -> Result<RewardCurve> {
    let first = runs.first().ok_or_else(|| Error::usage("no runs to aggregate"))?;
    let len = first.len();
    if let Some(bad) = runs.iter().find(|r| r.len() != len) {
        return Err(Error::usage(format!(
            "runs differ in length ({len} vs {})",
            bad.len()
        )));
    }
    let mut curve = RewardCurve {
        min: vec![f64::INFINITY; len],
        mean: vec![0.0; len],
        max: vec![f64::NEG_INFINITY; len],
    };
    for run in runs {
        for (i, &v) in run.iter().enumerate() {
            curve.min[i] = curve.min[i].min(v);
            curve.max[i] = curve.max[i].max(v);
            curve.mean[i] += v;
        }
    }
    for m in &mut curve.mean {
        *m /= runs.len() as f64;
    }
    // summation rounding can push the mean a hair outside [min, max]
    for i in 0..len {
        curve.mean[i] = curve.mean[i].clamp(curve.min[i], curve.max[i]);
    }
    Ok(curve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub sizes: Vec<ModelSize>,
    pub runs: Vec<RunRecord>,
}

/// Runs every (model, run) pair on `jobs` worker threads (all cores when
/// `None`). Results come back in config order regardless of scheduling.
pub fn run_experiment(config: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentReport> {
    config.validate()?;
    let sizes = config.model_sizes()?;
    let work: Vec<(ModelSize, usize)> = sizes
        .iter()
        .flat_map(|s| (0..config.runs_per_model).map(move |r| (*s, r)))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::usage(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<RunRecord> = pool.install(|| {
        work.par_iter()
            .map(|(size, r)| run_single(config, size, *r, |_, _| {}))
            .collect::<Result<_>>()
    })?;
    Ok(ExperimentReport {
        config: config.resolved(),
        sizes,
        runs,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Fails early when `dir` cannot be created or written.
pub fn check_writable(dir: &Path) -> Result<()> {
    create_dir(dir)?;
    let probe = dir.join(".write_check");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Writes per-run CSVs, smoothed curves, `report.json` and `timings.json`.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    let runs_dir = dir.join("runs");
    let details_dir = dir.join("details");
    create_dir(&runs_dir)?;
    create_dir(&details_dir)?;
    for run in &report.runs {
        let stem = run.file_stem();
        write_csv(
            &runs_dir.join(format!("{stem}.csv")),
            &["episode", "mean_step_reward"],
            run.episodes
                .iter()
                .enumerate()
                .map(|(i, e)| vec![(i + 1).to_string(), num(e.mean_step_reward)]),
        )?;
        write_csv(
            &details_dir.join(format!("{stem}.csv")),
            &[
                "episode",
                "mean_step_reward",
                "scored_accuracy",
                "first_trial",
                "later_trials",
                "mean_entropy",
                "loss",
            ],
            run.episodes.iter().enumerate().map(|(i, e)| {
                vec![
                    (i + 1).to_string(),
                    num(e.mean_step_reward),
                    num(e.scored_accuracy),
                    num(e.first_trial),
                    num(e.later_trials),
                    num(e.mean_entropy),
                    num(e.loss),
                ]
            }),
        )?;
    }
    let mut by_model: BTreeMap<usize, (MemoryKind, Vec<Vec<f64>>)> = BTreeMap::new();
    for run in &report.runs {
        by_model
            .entry(run.model.index())
            .or_insert_with(|| (run.model, Vec::new()))
            .1
            .push(run.rewards());
    }
    let window = report.config.smoothing_window;
    write_curves(dir, by_model.into_values(), window)?;
    write_json(&dir.join("report.json"), report)?;
    let timings: BTreeMap<String, f64> = report
        .runs
        .iter()
        .map(|r| (r.file_stem(), r.duration_secs))
        .collect();
    write_json(&dir.join("timings.json"), &timings)
}

fn write_curves(
    dir: &Path,
    models: impl Iterator<Item = (MemoryKind, Vec<Vec<f64>>)>,
    window: usize,
) -> Result<Vec<(MemoryKind, RewardCurve)>> {
    let curves_dir = dir.join("curves");
    create_dir(&curves_dir)?;
    let mut out = Vec::new();
    for (model, runs) in models {
        let smoothed: Vec<Vec<f64>> = runs.iter().map(|r| smooth(r, window)).collect();
        let curve = aggregate_curves(&smoothed)?;
        write_csv(
            &curves_dir.join(format!("{}.csv", model.name())),
            &["episode", "min", "mean", "max"],
            (0..curve.len()).map(|i| {
                vec![
                    (i + 1).to_string(),
                    num(curve.min[i]),
                    num(curve.mean[i]),
                    num(curve.max[i]),
                ]
            }),
        )?;
        out.push((model, curve));
    }
    Ok(out)
}

fn read_run_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["episode", "mean_step_reward"] {
        return Err(Error::config(format!("{}: unexpected header", path.display())));
    }
    let mut values = Vec::new();
    for row in r.records() {
        let row = row?;
        let v: f64 = row[1].parse().map_err(|_| {
            Error::config(format!("{}: bad number {:?}", path.display(), &row[1]))
        })?;
        values.push(v);
    }
    Ok(values)
}

/// Rebuilds `curves/` from the run CSVs in `dir`, using the smoothing window
/// recorded in `report.json`.
pub fn aggregate_dir(dir: &Path) -> Result<Vec<(MemoryKind, RewardCurve)>> {
    let report_path = dir.join("report.json");
    let text = fs::read_to_string(&report_path).map_err(|e| Error::io(&report_path, e))?;
    let report: ExperimentReport = serde_json::from_str(&text)?;
    let mut by_model: BTreeMap<usize, (MemoryKind, Vec<Vec<f64>>)> = BTreeMap::new();
    for run in &report.runs {
        let path = dir.join("runs").join(format!("{}.csv", run.file_stem()));
        by_model
            .entry(run.model.index())
            .or_insert_with(|| (run.model, Vec::new()))
            .1
            .push(read_run_csv(&path)?);
    }
    write_curves(dir, by_model.into_values(), report.config.smoothing_window)
}

/// Parameter counts per model, as a fixed-width text table.
pub fn format_parameter_table(task: TaskKind, sizes: &[ModelSize]) -> String {
    let mut counts: Vec<usize> = sizes.iter().map(|s| s.total_params).collect();
    counts.sort_unstable();
    let median = median_usize(&counts);
    let mut out = format!("task {task}, median trainable parameters {median}\n");
    out.push_str(&format!(
        "{:<10} {:>10} {:>13} {:>10} {:>10} {:>10} {:>9}\n",
        "model", "memory_dim", "decoder_width", "recurrent", "decoder", "total", "vs_median"
    ));
    for s in sizes {
        out.push_str(&format!(
            "{:<10} {:>10} {:>13} {:>10} {:>10} {:>10} {:>+8.2}%\n",
            s.kind.name(),
            s.memory_dim,
            s.decoder_width,
            s.recurrent_params,
            s.decoder_params,
            s.total_params,
            100.0 * (s.total_params as f64 - median) / median
        ));
    }
    out
}

/// Median of a sorted slice.
pub fn median_usize(sorted: &[usize]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    }
}

/// Largest relative distance of any model's count from the median.
pub fn max_deviation_from_median(sizes: &[ModelSize]) -> f64 {
    let mut counts: Vec<usize> = sizes.iter().map(|s| s.total_params).collect();
    counts.sort_unstable();
    let median = median_usize(&counts);
    counts
        .iter()
        .map(|&c| (c as f64 - median).abs() / median)
        .fold(0.0, f64::max)
}

/// Writes the reservoir matrices of run 0 for every ESN model in the config
/// to `<out>/<model>/{recurrent,input}.csv`. Returns the directories written.
pub fn export_weights(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let (input_dim, _) = config.task_widths()?;
    let mut written = Vec::new();
    for &model in &config.models {
        let esn = match model {
            MemoryKind::EsnDense => &config.training.esn_dense,
            MemoryKind::EsnLocal => &config.training.esn_local,
            _ => continue,
        };
        let seed = config.run_seed(model, 0);
        let weights = ReservoirWeights::build(esn, input_dim, stream_seed(seed, Stream::Reservoir))?;
        let dir = out.join(model.name());
        create_dir(&dir)?;
        weights.export_csv(&dir)?;
        written.push(dir);
    }
    Ok(written)
}
