//! Builds a random landscape, prints its optima, and round-trips it through JSON.
//!
//! ```bash
//! cargo run --release -p msglon --example generate_instance -- 2 42 instance.json
//! ```

use msglon::msg::{default_components, MsgInstance};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let d: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);
    let out = args.next();

    let inst = MsgInstance::random(d, default_components(d), seed)?;
    let optima = inst.local_optima();
    let global = inst.component(optima.global_index);
    println!("d = {d}, m = {}, seed = {seed}", inst.len());
    println!("{} local optima; global is component {} at {:?} (f = {:.4})",
        optima.len(), optima.global_index, global.center, global.weight);

    let x = vec![0.5; d];
    let e = inst.evaluate(&x)?;
    println!("f(center of cube) = {:.6} from component {}", e.value, e.index);

    let json = inst.to_json()?;
    assert_eq!(MsgInstance::from_json(&json)?, inst);
    match out {
        Some(path) => {
            msglon::io::write_instance(path.as_ref(), &inst)?;
            println!("wrote {path}");
        }
        None => println!("{} bytes of JSON", json.len()),
    }
    Ok(())
}
