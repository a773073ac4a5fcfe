//! DE/rand/1/bin with per-individual dither of the scale factor.

use rand::Rng;

use super::{clip, par_trials, BenchProtocol, Objective, TrialRecord};
use crate::msg::MsgInstance;
use crate::rng;

const CR: f64 = 0.9;
/// The scale factor of each mutant is drawn from `[F_LO, F_HI)`, around a base of 0.5.
const F_LO: f64 = 0.5;
const F_HI: f64 = 1.0;

pub fn run_de(instance: &MsgInstance, protocol: &BenchProtocol, seed: u64) -> Vec<TrialRecord> {
    par_trials(protocol, |trial| de_trial(instance, protocol, seed, trial))
}

fn spread(pop: &[Vec<f64>], fit: &[f64]) -> (f64, f64) {
    let d = pop[0].len();
    let dx = (0..d)
        .map(|j| {
            let (lo, hi) = pop
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| {
                    (lo.min(x[j]), hi.max(x[j]))
                });
            hi - lo
        })
        .fold(0.0, f64::max);
    let (lo, hi) = fit
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &f| (lo.min(f), hi.max(f)));
    (dx, hi - lo)
}

pub(crate) fn de_trial(
    instance: &MsgInstance,
    protocol: &BenchProtocol,
    seed: u64,
    trial: usize,
) -> TrialRecord {
    let mut r = rng::stream(seed, "de", trial as u64);
    let mut obj = Objective::new(instance, protocol.budget(instance.dim()));
    let d = obj.dim();
    let np = (10 * d).max(4);

    let mut pop: Vec<Vec<f64>> = Vec::with_capacity(np);
    let mut fit: Vec<f64> = Vec::with_capacity(np);
    for _ in 0..np {
        let x: Vec<f64> = (0..d).map(|_| r.random::<f64>()).collect();
        match obj.eval(&x) {
            Some(f) => {
                pop.push(x);
                fit.push(f);
            }
            None => return obj.finish(false, protocol),
        }
    }

    let mut trial_x = vec![0.0; d];
    loop {
        let (dx, df) = spread(&pop, &fit);
        if dx < protocol.conv_tol_x && df < protocol.conv_tol_f {
            return obj.finish(true, protocol);
        }
        let mut next_pop = pop.clone();
        let mut next_fit = fit.clone();
        for i in 0..np {
            let (a, b, c) = loop {
                let a = r.random_range(0..np);
                let b = r.random_range(0..np);
                let c = r.random_range(0..np);
                if a != i && b != i && c != i && a != b && b != c && a != c {
                    break (a, b, c);
                }
            };
            let f_scale = r.random_range(F_LO..F_HI);
            let j_rand = r.random_range(0..d);
            for j in 0..d {
                trial_x[j] = if j == j_rand || r.random::<f64>() < CR {
                    pop[a][j] + f_scale * (pop[b][j] - pop[c][j])
                } else {
                    pop[i][j]
                };
            }
            clip(&mut trial_x);
            let Some(f) = obj.eval(&trial_x) else {
                return obj.finish(false, protocol);
            };
            if f >= fit[i] {
                next_pop[i].copy_from_slice(&trial_x);
                next_fit[i] = f;
            }
        }
        pop = next_pop;
        fit = next_fit;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_generation_uses_population_size_evaluations() {
        let inst = MsgInstance::random(2, 100, 0).unwrap();
        let protocol = BenchProtocol {
            budget_per_dim: 10,
            ..BenchProtocol::default()
        };
        // Budget 20 = NP for d = 2: the initial population exhausts it.
        let t = de_trial(&inst, &protocol, 1, 0);
        assert_eq!(t.evals_used, 20);
        assert!(!t.converged);
        let t = de_trial(&inst, &BenchProtocol::default(), 1, 0);
        assert!(t.evals_used <= 2000);
    }

    #[test]
    fn reruns_are_identical() {
        let inst = MsgInstance::random(2, 100, 3).unwrap();
        let p = BenchProtocol {
            trials: 3,
            ..BenchProtocol::default()
        };
        assert_eq!(run_de(&inst, &p, 9), run_de(&inst, &p, 9));
    }
}
