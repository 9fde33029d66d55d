//! A small multi-model, multi-seed experiment written to disk in the same
//! layout as `esnrl run`.
//!
//! cargo run --example experiment -- [task] [episodes] [out_dir]

use esnrl::cells::MemoryKind;
use esnrl::envs::TaskKind;
use esnrl::harness::{run_experiment, write_report, ExperimentConfig};
use std::path::PathBuf;

fn main() -> esnrl::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let task: TaskKind = serde_json::from_str(&format!("\"{}\"", args.first().map_or("bandit", String::as_str)))?;
    let mut cfg = ExperimentConfig::new(task);
    cfg.episodes = Some(args.get(1).and_then(|s| s.parse().ok()).unwrap_or(300));
    cfg.models = vec![MemoryKind::Linear, MemoryKind::Gru, MemoryKind::EsnLocal];
    cfg.runs_per_model = 2;
    cfg.smoothing_window = 50;
    cfg.output_dir = PathBuf::from(args.get(2).map_or("results/example", String::as_str));

    let report = run_experiment(&cfg, None)?;
    write_report(&report, &cfg.output_dir)?;
    for run in &report.runs {
        let r = run.rewards();
        let tail = &r[r.len().saturating_sub(50)..];
        println!(
            "{:<10} run {} ({} params): last-50 mean step reward {:.3}",
            run.model.name(),
            run.run_index,
            run.trainable_params,
            tail.iter().sum::<f64>() / tail.len() as f64
        );
    }
    println!("results in {}", cfg.output_dir.display());
    Ok(())
}
