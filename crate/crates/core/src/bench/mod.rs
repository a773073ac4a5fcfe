//! Optimizer benchmarking on MSG instances.
//!
//! Both optimizers maximize `f` on `[0,1]^d` under a hard evaluation budget
//! that includes the initial evaluations. A trial succeeds when the best
//! point found lies within `success_tol` of the global optimum's center.

mod cmaes;
mod de;

pub use cmaes::{run_cmaes, CmaesStats};
pub use de::run_de;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::msg::MsgInstance;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    De,
    Cmaes,
}

impl Algorithm {
    pub const ALL: [Algorithm; 2] = [Algorithm::Cmaes, Algorithm::De];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::De => "de",
            Algorithm::Cmaes => "cmaes",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "de" => Ok(Algorithm::De),
            "cmaes" | "cma-es" => Ok(Algorithm::Cmaes),
            other => Err(format!("unknown algorithm {other:?}")),
        }
    }
}

/// How the distance between the best point and the global optimum is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorNorm {
    Euclidean,
    MaxCoordinate,
}

impl std::str::FromStr for ErrorNorm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "euclidean" => Ok(ErrorNorm::Euclidean),
            "max-coordinate" => Ok(ErrorNorm::MaxCoordinate),
            other => Err(format!("unknown error norm {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchProtocol {
    pub trials: usize,
    /// Evaluations per dimension; the budget is `budget_per_dim * d`.
    pub budget_per_dim: usize,
    pub success_tol: f64,
    pub error_norm: ErrorNorm,
    pub conv_tol_x: f64,
    pub conv_tol_f: f64,
    pub seed: u64,
}

impl Default for BenchProtocol {
    fn default() -> Self {
        Self {
            trials: 31,
            budget_per_dim: 1000,
            success_tol: 1e-2,
            error_norm: ErrorNorm::Euclidean,
            conv_tol_x: 1e-11,
            conv_tol_f: 1e-11,
            seed: 0,
        }
    }
}

impl BenchProtocol {
    pub fn budget(&self, d: usize) -> usize {
        self.budget_per_dim * d
    }

    pub fn error(&self, x: &[f64], target: &[f64]) -> f64 {
        let diffs = x.iter().zip(target).map(|(a, b)| (a - b).abs());
        match self.error_norm {
            ErrorNorm::Euclidean => diffs.map(|t| t * t).sum::<f64>().sqrt(),
            ErrorNorm::MaxCoordinate => diffs.fold(0.0, f64::max),
        }
    }

    /// Seed for all trials of one instance.
    pub fn instance_seed(&self, instance_key: u64) -> u64 {
        rng::derive_seed(self.seed, "bench-instance", instance_key)
    }
}

/// Outcome of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub success: bool,
    pub evals_used: usize,
    pub converged: bool,
    pub best_f: f64,
    pub best_x: Vec<f64>,
}

/// Budget-enforcing, best-tracking view of an instance.
pub(crate) struct Objective<'a> {
    instance: &'a MsgInstance,
    budget: usize,
    evals: usize,
    best_f: f64,
    best_x: Vec<f64>,
}

impl<'a> Objective<'a> {
    pub(crate) fn new(instance: &'a MsgInstance, budget: usize) -> Self {
        Self {
            instance,
            budget,
            evals: 0,
            best_f: f64::NEG_INFINITY,
            best_x: vec![0.0; instance.dim()],
        }
    }

    /// `f(x)`, or `None` once the budget is spent.
    pub(crate) fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.evals >= self.budget {
            return None;
        }
        self.evals += 1;
        let f = self.instance.eval(x).value;
        if f > self.best_f {
            self.best_f = f;
            self.best_x.copy_from_slice(x);
        }
        Some(f)
    }

    pub(crate) fn dim(&self) -> usize {
        self.instance.dim()
    }

    pub(crate) fn finish(self, converged: bool, protocol: &BenchProtocol) -> TrialRecord {
        let global = self.instance.local_optima().global_index;
        let err = protocol.error(&self.best_x, self.instance.center(global));
        TrialRecord {
            success: err < protocol.success_tol,
            evals_used: self.evals,
            converged,
            best_f: self.best_f,
            best_x: self.best_x,
        }
    }
}

pub(crate) fn clip(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Aggregate performance of one algorithm on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstancePerformance {
    pub algorithm: Algorithm,
    pub success_rate: f64,
    /// Mean evaluations to convergence; runs that never converge count as the full budget.
    pub conv_time: f64,
    pub trials: Vec<TrialRecord>,
}

impl InstancePerformance {
    pub fn from_trials(algorithm: Algorithm, trials: Vec<TrialRecord>) -> Self {
        let n = trials.len().max(1) as f64;
        let successes = trials.iter().filter(|t| t.success).count();
        let conv_time = trials.iter().map(|t| t.evals_used as f64).sum::<f64>() / n;
        Self {
            algorithm,
            success_rate: successes as f64 / n,
            conv_time,
            trials,
        }
    }
}

/// Runs `protocol.trials` independent trials of `algorithm`.
pub fn run_trials(
    instance: &MsgInstance,
    algorithm: Algorithm,
    protocol: &BenchProtocol,
    instance_seed: u64,
) -> Vec<TrialRecord> {
    match algorithm {
        Algorithm::De => run_de(instance, protocol, instance_seed),
        Algorithm::Cmaes => run_cmaes(instance, protocol, instance_seed),
    }
}

pub fn measure(
    instance: &MsgInstance,
    algorithm: Algorithm,
    protocol: &BenchProtocol,
    instance_key: u64,
) -> InstancePerformance {
    let trials = run_trials(instance, algorithm, protocol, protocol.instance_seed(instance_key));
    InstancePerformance::from_trials(algorithm, trials)
}

pub(crate) fn par_trials<F>(protocol: &BenchProtocol, run: F) -> Vec<TrialRecord>
where
    F: Fn(usize) -> TrialRecord + Sync + Send,
{
    (0..protocol.trials).into_par_iter().map(run).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::msg::{ArchetypeKind, GaussianComponent, Provenance};

    fn far_trap() -> MsgInstance {
        // Tiny global peak in a corner, broad decoy elsewhere.
        MsgInstance::from_components(
            2,
            &[
                GaussianComponent {
                    center: vec![0.999, 0.999],
                    weight: 1.0,
                    sigma: 1e-4,
                },
                GaussianComponent {
                    center: vec![0.2, 0.2],
                    weight: 0.9,
                    sigma: 0.3,
                },
            ],
            0,
            Provenance::Manual,
        )
        .unwrap()
    }

    #[test]
    fn all_failures_without_convergence_cost_the_full_budget() {
        let trials = vec![
            TrialRecord {
                success: false,
                evals_used: 2000,
                converged: false,
                best_f: 0.1,
                best_x: vec![0.0, 0.0],
            };
            31
        ];
        let p = InstancePerformance::from_trials(Algorithm::De, trials);
        assert_eq!(p.conv_time, 2000.0);
        assert_eq!(p.success_rate, 0.0);
    }

    #[test]
    fn infinite_tolerance_makes_every_trial_succeed() {
        let inst = far_trap();
        let protocol = BenchProtocol {
            trials: 5,
            success_tol: f64::INFINITY,
            ..BenchProtocol::default()
        };
        for alg in Algorithm::ALL {
            assert_eq!(measure(&inst, alg, &protocol, 0).success_rate, 1.0);
        }
    }

    #[test]
    fn unimodal_is_solved() {
        let inst = MsgInstance::archetype(ArchetypeKind::UniModal, 2, 100, 0).unwrap();
        let protocol = BenchProtocol::default();
        for alg in Algorithm::ALL {
            let p = measure(&inst, alg, &protocol, 0);
            assert_eq!(p.trials.len(), 31);
            assert!(p.success_rate >= 30.0 / 31.0, "{alg:?}: {}", p.success_rate);
        }
    }

    #[test]
    fn best_never_exceeds_global_value() {
        let inst = MsgInstance::random(2, 100, 5).unwrap();
        let protocol = BenchProtocol {
            trials: 4,
            ..BenchProtocol::default()
        };
        let top = inst.weight(inst.local_optima().global_index);
        for alg in Algorithm::ALL {
            for t in measure(&inst, alg, &protocol, 1).trials {
                assert!(t.best_f <= top);
                assert!(t.evals_used <= protocol.budget(2));
                assert_eq!(inst.eval(&t.best_x).value, t.best_f);
            }
        }
    }

    #[test]
    fn max_coordinate_norm() {
        let p = BenchProtocol {
            error_norm: ErrorNorm::MaxCoordinate,
            ..BenchProtocol::default()
        };
        assert_eq!(p.error(&[0.1, 0.5], &[0.2, 0.45]), 0.1);
    }
}
