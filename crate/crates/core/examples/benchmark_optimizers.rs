//! DE and CMA-ES on an easy, a deceptive and a random landscape.
//!
//! ```bash
//! cargo run --release -p msglon --example benchmark_optimizers
//! ```

use msglon::bench::{measure, Algorithm, BenchProtocol};
use msglon::msg::{ArchetypeKind, MsgInstance};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let d = 2;
    let m = 100;
    let protocol = BenchProtocol::default();
    let cases = [
        ("uni-modal", MsgInstance::archetype(ArchetypeKind::UniModal, d, m, 0)?),
        ("multi-sink", MsgInstance::archetype(ArchetypeKind::MultiSink, d, m, 0)?),
        ("random", MsgInstance::random(d, m, 3)?),
    ];
    println!("{} trials, budget {} evaluations", protocol.trials, protocol.budget(d));
    for (key, (name, inst)) in cases.iter().enumerate() {
        for alg in Algorithm::ALL {
            let p = measure(inst, alg, &protocol, key as u64);
            let converged = p.trials.iter().filter(|t| t.converged).count();
            println!(
                "{name:10} {:6} success {:5.1}%  conv_time {:7.1}  converged {converged}/{}",
                alg.as_str(),
                100.0 * p.success_rate,
                p.conv_time,
                p.trials.len()
            );
        }
    }
    Ok(())
}
