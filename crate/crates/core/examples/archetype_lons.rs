//! LON features of the three archetypes next to a random landscape.
//!
//! ```bash
//! cargo run --release -p msglon --example archetype_lons
//! ```

use msglon::lon::{Lon, LonConfig, LonFeatures};
use msglon::msg::{ArchetypeKind, MsgInstance};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (d, m) = (2, 100);
    let mut cases: Vec<(String, MsgInstance)> = ArchetypeKind::ALL
        .iter()
        .map(|&k| Ok((k.as_str().to_string(), MsgInstance::archetype(k, d, m, 1)?)))
        .collect::<Result<_, msglon::error::Error>>()?;
    cases.push(("random".into(), MsgInstance::random(d, m, 1)?));

    let rows: Vec<(LonFeatures, usize, usize)> = cases
        .iter()
        .map(|(_, inst)| {
            let lon = Lon::build(inst, &LonConfig::defaults(d, m, 7));
            let mono = lon.monotonic();
            (LonFeatures::compute(&lon), mono.edges.len(), mono.funnel().edges.len())
        })
        .collect();

    print!("{:20}", "");
    for (name, _) in &cases {
        print!(" {name:>11}");
    }
    println!();
    for (i, feature) in LonFeatures::NAMES.iter().enumerate() {
        print!("{feature:20}");
        for (f, _, _) in &rows {
            print!(" {:>11.4}", f.to_array()[i]);
        }
        println!();
    }
    print!("{:20}", "monotonic edges");
    for r in &rows {
        print!(" {:>11}", r.1);
    }
    print!("\n{:20}", "funnel edges");
    for r in &rows {
        print!(" {:>11}", r.2);
    }
    println!();
    Ok(())
}
