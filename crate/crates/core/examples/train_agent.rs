//! Trains one agent on one task and prints a smoothed learning curve.
//!
//! cargo run --example train_agent -- [task] [memory] [episodes] [seed]
//! e.g. cargo run --example train_agent -- bandit gru 2000 7

use esnrl::agent::{Agent, AgentConfig};
use esnrl::cells::MemoryKind;
use esnrl::envs::{EnvConfig, TaskKind};
use esnrl::rng::{stream_rng, Stream};

fn main() -> esnrl::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let task: TaskKind = serde_json::from_str(&format!("\"{}\"", args.first().map_or("bandit", String::as_str)))?;
    let kind: MemoryKind = args.get(1).map_or("gru", String::as_str).parse()?;
    let episodes: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0);

    let env_cfg = EnvConfig::new(task);
    let mut env = env_cfg.build(stream_rng(seed, Stream::Env))?;
    let cfg = AgentConfig::new(kind);
    let mut agent = Agent::new(
        cfg,
        env.observation_width(),
        env.action_count(),
        seed,
    )?;
    println!(
        "{} on {}: {} trainable parameters, memory width {}",
        kind,
        task,
        agent.trainable_count(),
        agent.memory_output_dim()
    );
    let mut policy_rng = stream_rng(seed, Stream::Policy);
    let report_every = (episodes / 20).max(1);
    let (mut acc, mut acc_scored, mut n) = (0.0, 0.0, 0);
    let (mut first, mut later) = (0.0, 0.0);
    for ep in 1..=episodes {
        let m = agent.train_meta_episode(env.as_mut(), &mut policy_rng)?;
        acc += m.mean_step_reward;
        acc_scored += m.scored_accuracy;
        let per_trial = m.trial_step_rewards();
        first += per_trial[0];
        if per_trial.len() > 1 {
            later += per_trial[1..].iter().sum::<f64>() / (per_trial.len() - 1) as f64;
        }
        n += 1;
        if ep % report_every == 0 {
            println!(
                "episode {ep:>6}  mean step reward {:.4}  scored {:.4}  first trial {:.4}  later trials {:.4}  entropy {:.3}",
                acc / n as f64,
                acc_scored / n as f64,
                first / n as f64,
                later / n as f64,
                m.mean_entropy
            );
            (acc, acc_scored, n, first, later) = (0.0, 0.0, 0, 0.0, 0.0);
        }
    }
    Ok(())
}
