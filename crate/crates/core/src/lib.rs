pub mod analysis;
pub mod bench;
pub mod error;
pub mod gd;
pub mod io;
pub mod lon;
pub mod msg;
pub mod novelty;
pub mod pipeline;
pub mod rng;
pub mod sobol;
