//! Compares analytic basins with capped gradient ascent on random instances.
//!
//! ```bash
//! cargo run --release -p msglon --example validate_basins -- 2 20
//! ```

use msglon::gd::{difference_rate, GdConfig};
use msglon::msg::{default_components, MsgInstance};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let d: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);
    let count: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(10);
    let m = default_components(d);
    let cfg = GdConfig::default();
    let mut rates = Vec::new();
    for seed in 0..count {
        let inst = MsgInstance::random(d, m, seed)?;
        let rep = difference_rate(&inst, &cfg)?;
        println!(
            "seed {seed:3}  optima {:3}  difference_rate {:.4}%  fallbacks {}",
            inst.local_optima().len(),
            100.0 * rep.rate,
            rep.fallbacks
        );
        rates.push(rep.rate);
    }
    rates.sort_by(f64::total_cmp);
    println!("median difference_rate: {:.4}%", 100.0 * rates[rates.len() / 2]);
    Ok(())
}
