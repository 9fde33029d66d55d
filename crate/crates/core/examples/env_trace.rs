//! Plays each task with a uniformly random policy and writes a step trace
//! (observation, action, reward, oracle info) per task.
//!
//! cargo run --example env_trace -- [out_dir] [seed]

use esnrl::envs::{write_trace, EnvConfig, TaskKind, TraceRow};
use esnrl::rng::rng_from_seed;
use rand::Rng;
use std::path::PathBuf;

fn main() -> esnrl::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = PathBuf::from(args.first().map_or("traces", String::as_str));
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    std::fs::create_dir_all(&out).map_err(|e| esnrl::Error::io(&out, e))?;

    for task in [TaskKind::RecallMatch, TaskKind::Bandit, TaskKind::SeqBandit, TaskKind::WaterMaze] {
        let mut env = EnvConfig::new(task).build(rng_from_seed(seed))?;
        let mut rng = rng_from_seed(seed + 1);
        let mut obs = env.reset();
        let mut rows = Vec::new();
        for step in 0.. {
            let action = rng.gen_range(0..env.action_count());
            let outcome = env.step(action)?;
            rows.push(TraceRow {
                step,
                trial: outcome.trial,
                observation: obs,
                action,
                reward: outcome.reward,
                info: outcome.info.to_string(),
            });
            obs = outcome.observation;
            if outcome.done {
                break;
            }
        }
        let total: f64 = rows.iter().map(|r| r.reward).sum();
        let path = out.join(format!("{task}.csv"));
        write_trace(&path, &rows)?;
        println!("{task}: {} steps, reward {total}, hidden {:?} -> {}", rows.len(), env.hidden(), path.display());
    }
    Ok(())
}
