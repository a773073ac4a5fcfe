//! (mu/mu_w, lambda)-CMA-ES with rank-one and rank-mu covariance updates
//! and cumulative step-size adaptation, using the standard default
//! strategy parameters. Sampled points are clipped to the unit cube and
//! the clipped points are what the update sees.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{clip, par_trials, BenchProtocol, Objective, TrialRecord};
use crate::msg::MsgInstance;
use crate::rng;

pub const INITIAL_STEP: f64 = 0.3;

/// Smallest eigenvalue kept, relative to the largest.
const EIGEN_FLOOR: f64 = 1e-14;

/// Bookkeeping beyond the trial record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CmaesStats {
    pub generations: usize,
    /// Covariance eigenvalues raised to the floor.
    pub repairs: usize,
}

pub fn default_population(d: usize) -> usize {
    4 + (3.0 * (d as f64).ln()).floor() as usize
}

pub fn run_cmaes(instance: &MsgInstance, protocol: &BenchProtocol, seed: u64) -> Vec<TrialRecord> {
    par_trials(protocol, |trial| cmaes_trial(instance, protocol, seed, trial).0)
}

struct Params {
    lambda: usize,
    weights: Vec<f64>,
    mueff: f64,
    cc: f64,
    cs: f64,
    c1: f64,
    cmu: f64,
    damps: f64,
    chi_n: f64,
}

impl Params {
    fn new(n: usize) -> Self {
        let nf = n as f64;
        let lambda = default_population(n);
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln())
            .collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mueff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let cc = (4.0 + mueff / nf) / (nf + 4.0 + 2.0 * mueff / nf);
        let cs = (mueff + 2.0) / (nf + mueff + 5.0);
        let c1 = 2.0 / ((nf + 1.3).powi(2) + mueff);
        let cmu = (1.0 - c1).min(2.0 * (mueff - 2.0 + 1.0 / mueff) / ((nf + 2.0).powi(2) + mueff));
        let damps = 1.0 + 2.0 * (((mueff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + cs;
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));
        Self {
            lambda,
            weights,
            mueff,
            cc,
            cs,
            c1,
            cmu,
            damps,
            chi_n,
        }
    }
}

pub(crate) fn cmaes_trial(
    instance: &MsgInstance,
    protocol: &BenchProtocol,
    seed: u64,
    trial: usize,
) -> (TrialRecord, CmaesStats) {
    let mut r = rng::stream(seed, "cmaes", trial as u64);
    let mut obj = Objective::new(instance, protocol.budget(instance.dim()));
    let n = obj.dim();
    let p = Params::new(n);
    let mut stats = CmaesStats::default();

    let mut mean = DVector::from_fn(n, |_, _| r.random::<f64>());
    let mut sigma = INITIAL_STEP;
    let mut cov = DMatrix::<f64>::identity(n, n);
    let mut basis = DMatrix::<f64>::identity(n, n);
    let mut scales = DVector::<f64>::from_element(n, 1.0);
    let mut inv_sqrt = DMatrix::<f64>::identity(n, n);
    let mut ps = DVector::<f64>::zeros(n);
    let mut pc = DVector::<f64>::zeros(n);

    if obj.eval(mean.as_slice()).is_none() {
        return (obj.finish(false, protocol), stats);
    }

    let mut xs: Vec<DVector<f64>> = vec![DVector::zeros(n); p.lambda];
    let mut fs = vec![0.0; p.lambda];
    loop {
        for k in 0..p.lambda {
            let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut r));
            let y = &basis * z.component_mul(&scales);
            let mut x = &mean + y * sigma;
            clip(x.as_mut_slice());
            let Some(f) = obj.eval(x.as_slice()) else {
                return (obj.finish(false, protocol), stats);
            };
            xs[k] = x;
            fs[k] = f;
        }
        stats.generations += 1;

        let mut order: Vec<usize> = (0..p.lambda).collect();
        order.sort_by(|&a, &b| fs[b].total_cmp(&fs[a]));

        let old_mean = mean.clone();
        let ys: Vec<DVector<f64>> = order[..p.weights.len()]
            .iter()
            .map(|&k| (&xs[k] - &old_mean) / sigma)
            .collect();
        let mut y_w = DVector::<f64>::zeros(n);
        for (w, y) in p.weights.iter().zip(&ys) {
            y_w += y * *w;
        }
        mean = &old_mean + &y_w * sigma;

        ps = &ps * (1.0 - p.cs) + (&inv_sqrt * &y_w) * (p.cs * (2.0 - p.cs) * p.mueff).sqrt();
        let gen = stats.generations as f64;
        let ps_norm = ps.norm();
        let hsig = ps_norm / (1.0 - (1.0 - p.cs).powf(2.0 * gen)).sqrt() / p.chi_n
            < 1.4 + 2.0 / (n as f64 + 1.0);
        let hsig_f = if hsig { 1.0 } else { 0.0 };
        pc = &pc * (1.0 - p.cc) + &y_w * (hsig_f * (p.cc * (2.0 - p.cc) * p.mueff).sqrt());

        let mut rank_mu = DMatrix::<f64>::zeros(n, n);
        for (w, y) in p.weights.iter().zip(&ys) {
            rank_mu += (y * y.transpose()) * *w;
        }
        cov = &cov * (1.0 - p.c1 - p.cmu)
            + (&pc * pc.transpose() + &cov * ((1.0 - hsig_f) * p.cc * (2.0 - p.cc))) * p.c1
            + rank_mu * p.cmu;
        cov = (&cov + cov.transpose()) * 0.5;
        sigma *= ((p.cs / p.damps) * (ps_norm / p.chi_n - 1.0)).exp();

        let eig = SymmetricEigen::new(cov.clone());
        let max_eig = eig.eigenvalues.max();
        let floor = if max_eig.is_finite() && max_eig > 0.0 {
            max_eig * EIGEN_FLOOR
        } else {
            EIGEN_FLOOR
        };
        let mut values = eig.eigenvalues.clone();
        let mut repaired = false;
        for v in values.iter_mut() {
            if !(*v >= floor) {
                *v = floor;
                repaired = true;
            }
        }
        basis = eig.eigenvectors;
        if repaired {
            stats.repairs += 1;
            cov = &basis * DMatrix::from_diagonal(&values) * basis.transpose();
        }
        scales = values.map(f64::sqrt);
        inv_sqrt = &basis * DMatrix::from_diagonal(&scales.map(|s| 1.0 / s)) * basis.transpose();

        let dx = sigma * scales.max();
        let (lo, hi) = fs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &f| (lo.min(f), hi.max(f)));
        if dx < protocol.conv_tol_x && hi - lo < protocol.conv_tol_f {
            return (obj.finish(true, protocol), stats);
        }
    }
}
