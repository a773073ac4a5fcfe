//! Renders analytic basins of a 2-D landscape as a PGM image, with pixels
//! where gradient ascent disagrees drawn black.
//!
//! ```bash
//! cargo run --release -p msglon --example basin_map -- 5 basins.pgm
//! ```

use msglon::gd::{BasinRaster, GdConfig};
use msglon::msg::MsgInstance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5);
    let out = args.next().unwrap_or_else(|| "basins.pgm".into());
    let inst = MsgInstance::random(2, 100, seed)?;
    let raster = BasinRaster::compute(&inst, &GdConfig::default(), 256)?;
    msglon::io::write_atomic(out.as_ref(), &raster.to_pgm())?;
    println!("{} optima, {:.2}% of pixels disagree, wrote {out}",
        inst.local_optima().len(), 100.0 * raster.disagreement());
    Ok(())
}
