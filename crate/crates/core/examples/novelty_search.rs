//! Runs random sampling, novelty search and archetype-seeded novelty search
//! with the same budget and compares how much of feature space each covers.
//!
//! ```bash
//! cargo run --release -p msglon --example novelty_search -- 2 3 20
//! ```
//! Arguments: dimension, number of seeds, generations.

use msglon::analysis::CoverageGrid;
use msglon::novelty::{ns_run, NsConfig, SearchMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let d: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);
    let seeds: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);
    let t_max: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);

    for mode in [SearchMode::Random, SearchMode::Ns, SearchMode::NsPlus] {
        let mut total = 0.0;
        for seed in 0..seeds {
            let mut cfg = NsConfig::new(d, mode, seed);
            cfg.lambda = 50;
            cfg.t_max = t_max;
            let t = std::time::Instant::now();
            let run = ns_run(&cfg)?;
            let grid = CoverageGrid::from_features(cfg.m, run.solutions.iter().map(|s| &s.features));
            println!(
                "{:8} seed {seed}  solutions {:5}  archive {:4}  coverage {:.4}  ({:.1}s)",
                mode.as_str(),
                run.solutions.len(),
                run.archive.len(),
                grid.coverage(),
                t.elapsed().as_secs_f64()
            );
            total += grid.coverage();
        }
        println!("{:8} mean coverage {:.4}", mode.as_str(), total / seeds as f64);
    }
    Ok(())
}
