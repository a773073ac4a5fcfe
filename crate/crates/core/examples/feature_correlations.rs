//! Evolves a diverse corpus with archetype-seeded novelty search, benchmarks
//! DE and CMA-ES on every instance, and prints rank correlations between LON
//! features and success rate.
//!
//! ```bash
//! cargo run --release -p msglon --example feature_correlations -- 10
//! ```
//! Argument: generations (corpus size is `20 + 50 * generations`).

use msglon::analysis::{build_dataset, correlation_table, CorpusRecord, Metric, PerformanceRecord};
use msglon::bench::{measure, Algorithm, BenchProtocol};
use msglon::io::run_records;
use msglon::novelty::{ns_run, NsConfig, SearchMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t_max: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(10);
    let mut cfg = NsConfig::new(2, SearchMode::NsPlus, 0);
    cfg.lambda = 50;
    cfg.t_max = t_max;
    let t = std::time::Instant::now();
    let run = ns_run(&cfg)?;
    println!("corpus: {} instances ({:.1}s)", run.solutions.len(), t.elapsed().as_secs_f64());

    let protocol = BenchProtocol::default();
    let corpus: Vec<CorpusRecord> = run_records(&run);
    let mut perf = Vec::new();
    let t = std::time::Instant::now();
    for rec in &corpus {
        let inst = run.instance(rec.instance_id as usize)?;
        for alg in Algorithm::ALL {
            let p = measure(&inst, alg, &protocol, rec.instance_id);
            perf.push(PerformanceRecord {
                instance_id: rec.instance_id,
                algorithm: alg,
                trials: p.trials.len(),
                success_rate: p.success_rate,
                conv_time: p.conv_time,
            });
        }
    }
    println!("benchmarked in {:.1}s", t.elapsed().as_secs_f64());

    let dataset = build_dataset(&corpus, &perf, &Algorithm::ALL);
    for alg in Algorithm::ALL {
        let mean = perf.iter().filter(|p| p.algorithm == alg).map(|p| p.success_rate).sum::<f64>()
            / corpus.len() as f64;
        println!("{:6} mean success rate {mean:.3}", alg.as_str());
    }
    for e in correlation_table(&dataset) {
        if e.metric == Metric::SuccessRate {
            let rho = e.rho.map_or("   n/a".to_string(), |r| format!("{r:+.3}"));
            println!("{:6} {:18} rho {rho}  (n = {})", e.algorithm.as_str(), e.feature, e.n);
        }
    }
    Ok(())
}
