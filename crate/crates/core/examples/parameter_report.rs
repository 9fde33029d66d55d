//! Prints the equalized parameter counts of every model on every task.
//!
//! cargo run --example parameter_report

use esnrl::envs::TaskKind;
use esnrl::harness::{format_parameter_table, max_deviation_from_median, ExperimentConfig};

fn main() -> esnrl::Result<()> {
    for task in [TaskKind::RecallMatch, TaskKind::Bandit, TaskKind::SeqBandit, TaskKind::WaterMaze] {
        let cfg = ExperimentConfig::new(task);
        let sizes = cfg.model_sizes()?;
        print!("{}", format_parameter_table(task, &sizes));
        println!("max deviation from median: {:.2}%\n", 100.0 * max_deviation_from_median(&sizes));
    }
    Ok(())
}
