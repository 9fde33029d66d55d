//! Builds dense and local reservoirs, reports their structure and spectral
//! radius, runs a short pulse response and optionally writes the matrices.
//!
//! cargo run --example reservoir -- [n_inputs] [seed] [out_dir]

use esnrl::reservoir::{esn_step, spectral_radius, EsnConfig, ReservoirState, ReservoirWeights};
use std::path::Path;

fn main() -> esnrl::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n_inputs: usize = args.first().and_then(|s| s.parse().ok()).unwrap_or(5);
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);

    for (name, cfg) in [("dense", EsnConfig::dense()), ("local", EsnConfig::local())] {
        let w = ReservoirWeights::build(&cfg, n_inputs, seed)?;
        let n = w.n_hidden();
        let density = w.recurrent().count_nonzero() as f64 / (n * n) as f64;
        println!(
            "{name}: N = {n}, recurrent density {density:.3}, input nonzeros {}, radius {:.12}",
            w.input().count_nonzero(),
            spectral_radius(w.recurrent())?
        );

        // one pulse on every input, then silence
        let mut h = esn_step(&w, &ReservoirState::zeros(n), &vec![1.0; n_inputs])?;
        let silent = vec![0.0; n_inputs];
        for t in 1..=50 {
            h = esn_step(&w, &h, &silent)?;
            if t % 10 == 0 {
                let norm = h.activations.iter().map(|a| a * a).sum::<f64>().sqrt();
                println!("  step {t:>2}: |h| = {norm:.4e}");
            }
        }

        if let Some(out) = args.get(2) {
            let dir = Path::new(out).join(name);
            std::fs::create_dir_all(&dir).map_err(|e| esnrl::Error::io(&dir, e))?;
            w.export_csv(&dir)?;
            println!("  wrote {}", dir.display());
        }
    }
    Ok(())
}
