//! Capped-step gradient ascent as an independent basin oracle.
//!
//! At `x` the dominating component `k` defines the step
//! `x <- x + min(eta g_k(x) / sigma_k^2, 1) (c_k - x)`, which never passes
//! `c_k`. Comparing where trajectories end with the analytic basin map gives
//! the fraction of starting points on which the two disagree.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lon::BasinAssignment;
use crate::msg::{Evaluation, MsgInstance};
use crate::sobol::Sobol;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub eta: f64,
    pub max_steps: usize,
    /// Starting points per dimension.
    pub starts_per_dim: usize,
    /// Trajectories stop once a step moves less than this.
    pub move_tolerance: f64,
    /// An endpoint farther than this from its assigned optimum counts as not converged.
    pub proximity_tolerance: f64,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            eta: 0.01,
            max_steps: 2000,
            starts_per_dim: 5000,
            move_tolerance: 1e-12,
            proximity_tolerance: 1e-3,
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(Error::invalid("eta", "must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be at least 1"));
        }
        Ok(())
    }
}

/// Where one trajectory ended up.
#[derive(Debug, Clone, PartialEq)]
pub struct GdOutcome {
    /// Component index of the local optimum the start is assigned to.
    pub optimum: usize,
    pub endpoint: Vec<f64>,
    pub steps: usize,
    /// Stopped on the move tolerance before the step limit.
    pub converged: bool,
    /// The endpoint was not near its region owner, so the nearest optimum was used.
    pub fallback: bool,
    /// Steps on which `f` went down.
    pub f_decreases: usize,
    /// Iterates that left the unit cube before clipping.
    pub clipped: usize,
}

/// One capped step from `x`; returns the step length and whether the
/// iterate had to be clipped.
pub fn gd_step(instance: &MsgInstance, x: &mut [f64], eta: f64) -> (f64, bool) {
    let e = instance.eval(x);
    step_from(instance, x, e, eta)
}

fn step_from(instance: &MsgInstance, x: &mut [f64], e: Evaluation, eta: f64) -> (f64, bool) {
    let k = e.index;
    let sigma = instance.sigma(k);
    let rate = eta * e.value / (sigma * sigma);
    let c = instance.center(k);
    let mut norm2 = 0.0;
    let mut clipped = false;
    if rate >= 1.0 {
        for (xi, ci) in x.iter_mut().zip(c) {
            norm2 += (ci - *xi) * (ci - *xi);
            *xi = *ci;
        }
    } else {
        for (xi, ci) in x.iter_mut().zip(c) {
            let next = *xi + rate * (ci - *xi);
            let clamped = next.clamp(0.0, 1.0);
            clipped |= clamped != next;
            norm2 += (clamped - *xi) * (clamped - *xi);
            *xi = clamped;
        }
    }
    (norm2.sqrt(), clipped)
}

/// Runs one trajectory from `x0` and maps its endpoint to a local optimum.
pub fn gd_converge(
    instance: &MsgInstance,
    basins: &BasinAssignment,
    x0: &[f64],
    config: &GdConfig,
) -> Result<GdOutcome> {
    if x0.len() != instance.dim() {
        return Err(Error::DimensionMismatch {
            expected: instance.dim(),
            actual: x0.len(),
        });
    }
    if x0.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid("start point", "outside [0,1]^d"));
    }
    Ok(trajectory(instance, basins, x0, config))
}

fn trajectory(
    instance: &MsgInstance,
    basins: &BasinAssignment,
    x0: &[f64],
    config: &GdConfig,
) -> GdOutcome {
    let mut x = x0.to_vec();
    let mut e = instance.eval(&x);
    let mut steps = 0;
    let mut converged = false;
    let mut f_decreases = 0;
    let mut clipped = 0;
    while steps < config.max_steps {
        let (moved, was_clipped) = step_from(instance, &mut x, e, config.eta);
        steps += 1;
        clipped += usize::from(was_clipped);
        let next = instance.eval(&x);
        if next.value < e.value - 1e-14 {
            f_decreases += 1;
        }
        e = next;
        if moved < config.move_tolerance {
            converged = true;
            break;
        }
    }
    let owner = basins.assign(instance, &x);
    let near = distance(&x, instance.center(owner)) <= config.proximity_tolerance;
    let (optimum, fallback) = if converged || near {
        (owner, false)
    } else {
        (nearest_optimum(instance, basins, &x), true)
    };
    GdOutcome {
        optimum,
        endpoint: x,
        steps,
        converged,
        fallback,
        f_decreases,
        clipped,
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn nearest_optimum(instance: &MsgInstance, basins: &BasinAssignment, x: &[f64]) -> usize {
    let idx = &basins.optima().indices;
    let mut best = idx[0];
    let mut best_d = distance(x, instance.center(best));
    for &i in &idx[1..] {
        let d = distance(x, instance.center(i));
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Aggregate comparison of gradient and analytic basins on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferenceReport {
    pub starts: usize,
    pub disagreements: usize,
    pub rate: f64,
    /// Trajectories resolved by the nearest-optimum fallback.
    pub fallbacks: usize,
    pub f_decreases: usize,
}

/// Sobol' starting points for the comparison.
pub fn start_points(d: usize, config: &GdConfig) -> Result<Vec<Vec<f64>>> {
    Ok(Sobol::new(d)?.take(config.starts_per_dim * d).collect())
}

/// Fraction of Sobol' starts whose gradient endpoint lies in a different
/// basin than the analytic assignment of the start.
pub fn difference_rate(instance: &MsgInstance, config: &GdConfig) -> Result<DifferenceReport> {
    config.validate()?;
    let basins = BasinAssignment::build(instance);
    let starts = start_points(instance.dim(), config)?;
    let (disagreements, fallbacks, f_decreases) = starts
        .par_iter()
        .map(|x0| {
            let out = trajectory(instance, &basins, x0, config);
            let ours = basins.assign(instance, x0);
            (
                usize::from(out.optimum != ours),
                usize::from(out.fallback),
                out.f_decreases,
            )
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    if fallbacks > 0 {
        log::warn!("{fallbacks} of {} trajectories did not reach an optimum", starts.len());
    }
    Ok(DifferenceReport {
        starts: starts.len(),
        disagreements,
        rate: disagreements as f64 / starts.len().max(1) as f64,
        fallbacks,
        f_decreases,
    })
}

/// Grid map of a 2-D instance: the analytic basin and the gradient basin
/// of each pixel center, row-major with row 0 at `x_2 = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasinRaster {
    pub resolution: usize,
    pub analytic: Vec<usize>,
    pub gradient: Vec<usize>,
}

impl BasinRaster {
    pub fn compute(instance: &MsgInstance, config: &GdConfig, resolution: usize) -> Result<Self> {
        if instance.dim() != 2 {
            return Err(Error::Capability("basin rasters are only drawn for d = 2".into()));
        }
        let basins = BasinAssignment::build(instance);
        let pixels: Vec<(usize, usize)> = (0..resolution * resolution)
            .into_par_iter()
            .map(|p| {
                let (row, col) = (p / resolution, p % resolution);
                let x = [
                    (col as f64 + 0.5) / resolution as f64,
                    1.0 - (row as f64 + 0.5) / resolution as f64,
                ];
                let ours = basins.assign(instance, &x);
                (ours, trajectory(instance, &basins, &x, config).optimum)
            })
            .collect();
        let (analytic, gradient) = pixels.into_iter().unzip();
        Ok(Self {
            resolution,
            analytic,
            gradient,
        })
    }

    pub fn disagreement(&self) -> f64 {
        let n = self.analytic.iter().zip(&self.gradient).filter(|(a, b)| a != b).count();
        n as f64 / self.analytic.len().max(1) as f64
    }

    /// Binary PGM (P5): basins in grey levels, disagreeing pixels black.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{0} {0}\n255\n", self.resolution).into_bytes();
        out.extend(self.analytic.iter().zip(&self.gradient).map(|(&a, &g)| {
            if a != g {
                0
            } else {
                // Spread basin ids over light greys.
                (64 + (a.wrapping_mul(97) % 192)) as u8
            }
        }));
        out
    }
}
