//! Novelty search over MSG generator parameters.
//!
//! Centers are fixed to a Sobol' prefix; the genotype is the vector of
//! peak heights and scales. Each genotype is mapped to a LON and its
//! features, and the 2-D phenotype `(num_nodes / m, global_funnel_size)`
//! drives a `(mu + lambda)` selection on novelty, the mean distance to the
//! `k` nearest neighbours among the archive and the current population.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lon::{Lon, LonConfig, LonFeatures};
use crate::msg::{
    archetype_parameters, default_components, reference_radius, sigma_bounds, ArchetypeKind,
    CenterSet, MsgInstance, Provenance, WEIGHT_FLOOR,
};
use crate::rng;

/// Peak heights followed by scales, one of each per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genotype {
    pub weights: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl Genotype {
    pub fn random<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> Self {
        let (weights, sigmas) = crate::msg::uniform_parameters(d, m, rng);
        Self { weights, sigmas }
    }

    pub fn archetype(kind: ArchetypeKind, centers: &CenterSet, noise_seed: u64) -> Self {
        let (weights, sigmas, _) = archetype_parameters(kind, centers, noise_seed);
        Self { weights, sigmas }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Additive Gaussian mutation, clipped back into bounds.
    pub fn mutate<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        alpha_w: f64,
        alpha_sigma: f64,
        sigma_range: (f64, f64),
    ) -> Self {
        let mut child = self.clone();
        for w in &mut child.weights {
            let e: f64 = StandardNormal.sample(rng);
            *w = (*w + alpha_w * e).clamp(WEIGHT_FLOOR, 1.0);
        }
        for s in &mut child.sigmas {
            let e: f64 = StandardNormal.sample(rng);
            *s = (*s + alpha_sigma * e).clamp(sigma_range.0, sigma_range.1);
        }
        child
    }

    pub fn within_bounds(&self, sigma_range: (f64, f64)) -> bool {
        self.weights.iter().all(|w| (WEIGHT_FLOOR..=1.0).contains(w))
            && self
                .sigmas
                .iter()
                .all(|&s| s >= sigma_range.0 && s <= sigma_range.1)
    }

    pub fn instance(
        &self,
        centers: &CenterSet,
        seed: u64,
        provenance: Provenance,
    ) -> Result<MsgInstance> {
        MsgInstance::new(
            centers.clone(),
            self.weights.clone(),
            self.sigmas.clone(),
            seed,
            provenance,
        )
    }
}

/// Point in the novelty feature space: `[num_nodes / m, global_funnel_size]`.
pub type Phenotype = [f64; 2];

pub fn phenotype(features: &LonFeatures, m: usize) -> Phenotype {
    [features.num_nodes as f64 / m as f64, features.global_funnel_size]
}

fn dist(a: &Phenotype, b: &Phenotype) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Mean Euclidean distance from `point` to its `k` nearest references
/// (all of them when fewer than `k`); `+inf` for an empty reference set.
/// Callers leave the solution itself out of `reference`.
pub fn novelty<I>(point: &Phenotype, reference: I, k: usize) -> f64
where
    I: IntoIterator<Item = Phenotype>,
{
    let mut d: Vec<f64> = reference.into_iter().map(|r| dist(point, &r)).collect();
    if d.is_empty() {
        return f64::INFINITY;
    }
    let k = k.max(1).min(d.len());
    if k < d.len() {
        d.select_nth_unstable_by(k - 1, f64::total_cmp);
    }
    d[..k].iter().sum::<f64>() / k as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    /// Independent uniform sampling of the parameters.
    Random,
    Ns,
    /// Novelty search with three archetypes in the initial population.
    NsPlus,
}

impl SearchMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SearchMode::Random => "random",
            SearchMode::Ns => "ns",
            SearchMode::NsPlus => "ns-plus",
        }
    }
}

impl std::str::FromStr for SearchMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "random" => Ok(SearchMode::Random),
            "ns" => Ok(SearchMode::Ns),
            "ns-plus" | "ns+" => Ok(SearchMode::NsPlus),
            other => Err(format!("unknown search mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsConfig {
    pub d: usize,
    pub m: usize,
    pub mu: usize,
    pub lambda: usize,
    pub t_max: usize,
    pub k: usize,
    pub rho_min_init: f64,
    pub alpha_w: f64,
    pub alpha_sigma: f64,
    /// Generations between threshold updates.
    pub window: usize,
    /// More additions than this in a window raises the threshold.
    pub window_hi: usize,
    pub factor_up: f64,
    pub factor_down: f64,
    /// Escape samples per optimum when building each LON.
    pub lon_samples: usize,
    pub lon_radius: f64,
    pub seed: u64,
    pub mode: SearchMode,
}

impl NsConfig {
    /// `mu = 20, lambda = 100, t_max = 100, k = 15, rho_min = 0.05`,
    /// `alpha_w = 0.1, alpha_sigma = 0.05`, threshold checked every 4 generations.
    pub fn new(d: usize, mode: SearchMode, seed: u64) -> Self {
        let m = default_components(d);
        Self {
            d,
            m,
            mu: 20,
            lambda: 100,
            t_max: 100,
            k: 15,
            rho_min_init: 0.05,
            alpha_w: 0.1,
            alpha_sigma: 0.05,
            window: 4,
            window_hi: 30,
            factor_up: 1.05,
            factor_down: 0.95,
            lon_samples: 500 * d,
            lon_radius: reference_radius(d, m),
            seed,
            mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d", self.d),
            ("m", self.m),
            ("mu", self.mu),
            ("lambda", self.lambda),
            ("k", self.k),
            ("window", self.window),
            ("lon_samples", self.lon_samples),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::invalid("novelty config", format!("{name} must be positive")));
            }
        }
        if self.mode == SearchMode::NsPlus && self.mu < ArchetypeKind::ALL.len() {
            return Err(Error::invalid(
                "novelty config",
                "ns-plus needs mu >= 3 to hold the archetypes",
            ));
        }
        for (name, v) in [
            ("rho_min_init", self.rho_min_init),
            ("alpha_w", self.alpha_w),
            ("alpha_sigma", self.alpha_sigma),
            ("factor_up", self.factor_up),
            ("factor_down", self.factor_down),
            ("lon_radius", self.lon_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid("novelty config", format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Total solutions produced: `mu + t_max * lambda`.
    pub fn budget(&self) -> usize {
        self.mu + self.t_max * self.lambda
    }

    pub fn sigma_range(&self) -> (f64, f64) {
        sigma_bounds(self.d, self.m)
    }
}

/// One generated landscape with its features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub id: usize,
    pub generation: usize,
    pub parent: Option<usize>,
    pub genotype: Genotype,
    pub features: LonFeatures,
    pub phenotype: Phenotype,
}

/// Maps genotypes to LON features on a fixed center set.
#[derive(Debug, Clone)]
pub struct PhenotypeMap {
    pub centers: CenterSet,
    pub lon_samples: usize,
    pub lon_radius: f64,
    pub seed: u64,
}

impl PhenotypeMap {
    pub fn from_config(config: &NsConfig) -> Result<Self> {
        Ok(Self {
            centers: CenterSet::sobol(config.d, config.m)?,
            lon_samples: config.lon_samples,
            lon_radius: config.lon_radius,
            seed: config.seed,
        })
    }

    /// LON sampling seed of solution `id`.
    pub fn lon_seed(&self, id: usize) -> u64 {
        rng::derive_seed(self.seed, "solution-lon", id as u64)
    }

    pub fn features(&self, genotype: &Genotype, id: usize) -> Result<LonFeatures> {
        let inst = genotype.instance(&self.centers, self.seed, Provenance::Manual)?;
        let lon = Lon::build(
            &inst,
            &LonConfig {
                samples: self.lon_samples,
                radius: self.lon_radius,
                seed: self.lon_seed(id),
            },
        );
        Ok(LonFeatures::compute(&lon))
    }

    fn solve(
        &self,
        batch: Vec<(usize, usize, Option<usize>, Genotype)>,
    ) -> Result<Vec<Solution>> {
        let m = self.centers.len();
        batch
            .into_par_iter()
            .map(|(id, generation, parent, genotype)| {
                let features = self.features(&genotype, id)?;
                Ok(Solution {
                    id,
                    generation,
                    parent,
                    phenotype: phenotype(&features, m),
                    features,
                    genotype,
                })
            })
            .collect()
    }
}

/// Record of an archive insertion, kept for auditing the threshold rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub id: usize,
    pub generation: usize,
    pub novelty: f64,
    pub threshold: f64,
}

/// Everything a run produced, in generation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsRun {
    pub config: NsConfig,
    /// Every solution ever produced; `solutions[i].id == i`.
    pub solutions: Vec<Solution>,
    pub archive: Vec<usize>,
    pub archive_log: Vec<ArchiveEntry>,
    /// Threshold in force at the end of each generation, starting with the initial one.
    pub thresholds: Vec<f64>,
    /// Parent ids after each selection step.
    pub populations: Vec<Vec<usize>>,
}

impl NsRun {
    pub fn centers(&self) -> Result<CenterSet> {
        CenterSet::sobol(self.config.d, self.config.m)
    }

    /// Materializes solution `id` as an instance.
    pub fn instance(&self, id: usize) -> Result<MsgInstance> {
        let s = &self.solutions[id];
        s.genotype.instance(
            &self.centers()?,
            self.config.seed,
            Provenance::Search {
                mode: self.config.mode.as_str().to_string(),
                run_seed: self.config.seed,
                solution: s.id,
                generation: s.generation,
                parent: s.parent,
            },
        )
    }

    pub fn phenotypes(&self) -> Vec<Phenotype> {
        self.solutions.iter().map(|s| s.phenotype).collect()
    }
}

fn initial_population(config: &NsConfig, centers: &CenterSet) -> Vec<Genotype> {
    let mut r = rng::stream(config.seed, "init", 0);
    let mut pop: Vec<Genotype> = (0..config.mu)
        .map(|_| Genotype::random(config.d, config.m, &mut r))
        .collect();
    if config.mode == SearchMode::NsPlus {
        let noise = rng::derive_seed(config.seed, "archetype", 0);
        for (slot, kind) in pop.iter_mut().zip(ArchetypeKind::ALL) {
            *slot = Genotype::archetype(kind, centers, noise);
        }
    }
    pop
}

/// Uniformly sampled genotypes, as many as a novelty run would produce.
pub fn random_baseline(config: &NsConfig) -> Result<NsRun> {
    config.validate()?;
    let config = NsConfig {
        mode: SearchMode::Random,
        ..config.clone()
    };
    let map = PhenotypeMap::from_config(&config)?;
    let mut r = rng::stream(config.seed, "init", 0);
    let batch = (0..config.budget())
        .map(|id| (id, 0, None, Genotype::random(config.d, config.m, &mut r)))
        .collect();
    let solutions = map.solve(batch)?;
    Ok(NsRun {
        thresholds: vec![config.rho_min_init],
        config,
        solutions,
        archive: Vec::new(),
        archive_log: Vec::new(),
        populations: Vec::new(),
    })
}

/// Runs the `(mu + lambda)` novelty search, or the random baseline when
/// `config.mode` is [`SearchMode::Random`].
pub fn ns_run(config: &NsConfig) -> Result<NsRun> {
    config.validate()?;
    if config.mode == SearchMode::Random {
        return random_baseline(config);
    }
    let map = PhenotypeMap::from_config(config)?;
    let sigma_range = config.sigma_range();
    let init = initial_population(config, &map.centers)
        .into_iter()
        .enumerate()
        .map(|(id, g)| (id, 0, None, g))
        .collect();
    let mut solutions = map.solve(init)?;
    let mut parents: Vec<usize> = (0..config.mu).collect();
    let mut archive: Vec<usize> = parents.clone();
    let mut in_archive = vec![true; solutions.len()];
    let mut archive_log = Vec::new();
    let mut threshold = config.rho_min_init;
    let mut thresholds = vec![threshold];
    let mut populations = vec![parents.clone()];
    let mut window_additions = 0usize;

    for t in 1..=config.t_max {
        let mut r = rng::stream(config.seed, "reproduce", t as u64);
        let base = solutions.len();
        let batch: Vec<_> = (0..config.lambda)
            .map(|i| {
                let p = parents[r.random_range(0..parents.len())];
                let child = solutions[p].genotype.mutate(
                    &mut r,
                    config.alpha_w,
                    config.alpha_sigma,
                    sigma_range,
                );
                (base + i, t, Some(p), child)
            })
            .collect();
        solutions.extend(map.solve(batch)?);
        in_archive.resize(solutions.len(), false);
        let offspring: Vec<usize> = (base..solutions.len()).collect();

        // Reference set: archive plus parents plus offspring, each solution once.
        let mut reference: Vec<usize> = archive.clone();
        reference.extend(parents.iter().chain(&offspring).filter(|&&i| !in_archive[i]));
        let pool: Vec<usize> = parents.iter().chain(&offspring).copied().collect();
        let scores: Vec<f64> = pool
            .iter()
            .map(|&z| {
                novelty(
                    &solutions[z].phenotype,
                    reference
                        .iter()
                        .filter(|&&o| o != z)
                        .map(|&o| solutions[o].phenotype),
                    config.k,
                )
            })
            .collect();

        for (&z, &score) in pool.iter().zip(&scores).skip(parents.len()) {
            if score > threshold {
                archive.push(z);
                in_archive[z] = true;
                archive_log.push(ArchiveEntry {
                    id: z,
                    generation: t,
                    novelty: score,
                    threshold,
                });
                window_additions += 1;
            }
        }

        let mut ranked: Vec<usize> = (0..pool.len()).collect();
        ranked.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        parents = ranked[..config.mu].iter().map(|&i| pool[i]).collect();

        if t % config.window == 0 {
            if window_additions > config.window_hi {
                threshold *= config.factor_up;
            } else if window_additions == 0 {
                threshold *= config.factor_down;
            }
            window_additions = 0;
        }
        thresholds.push(threshold);
        populations.push(parents.clone());
    }

    Ok(NsRun {
        config: config.clone(),
        solutions,
        archive,
        archive_log,
        thresholds,
        populations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(mode: SearchMode, seed: u64) -> NsConfig {
        NsConfig {
            mu: 6,
            lambda: 10,
            t_max: 5,
            k: 3,
            lon_samples: 100,
            ..NsConfig::new(2, mode, seed)
        }
    }

    #[test]
    fn single_neighbour() {
        assert!((novelty(&[0.0, 0.0], [[0.3, 0.0]], 1) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn empty_reference_is_infinitely_novel() {
        assert_eq!(novelty(&[0.5, 0.5], [], 15), f64::INFINITY);
    }

    #[test]
    fn fewer_references_than_k_averages_all() {
        let v = novelty(&[0.0, 0.0], [[0.1, 0.0], [0.3, 0.0]], 15);
        assert!((v - 0.2).abs() < 1e-15);
    }

    #[test]
    fn mutation_respects_bounds() {
        let mut r = rng::stream(1, "t", 0);
        let range = sigma_bounds(2, 100);
        let mut g = Genotype::random(2, 100, &mut r);
        for _ in 0..50 {
            g = g.mutate(&mut r, 0.5, 0.5, range);
            assert!(g.within_bounds(range));
        }
    }

    #[test]
    fn zero_generations_returns_initial_population() {
        let cfg = NsConfig {
            t_max: 0,
            ..small(SearchMode::Ns, 1)
        };
        let run = ns_run(&cfg).unwrap();
        assert_eq!(run.solutions.len(), cfg.mu);
    }

    #[test]
    fn default_budget() {
        assert_eq!(NsConfig::new(2, SearchMode::Ns, 0).budget(), 10_020);
    }

    #[test]
    fn run_shape_and_determinism() {
        let cfg = small(SearchMode::NsPlus, 3);
        let a = ns_run(&cfg).unwrap();
        assert_eq!(a.solutions.len(), cfg.budget());
        assert!(a.populations.iter().all(|p| p.len() == cfg.mu));
        assert!(a.solutions.iter().enumerate().all(|(i, s)| s.id == i));
        for e in &a.archive_log {
            assert!(e.novelty > e.threshold);
        }
        let b = ns_run(&cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        // The uni-modal archetype has a single optimum.
        assert_eq!(a.solutions[0].features.num_nodes, 1);
    }

    #[test]
    fn phenotype_recomputes_identically() {
        let cfg = small(SearchMode::Ns, 8);
        let run = ns_run(&cfg).unwrap();
        let map = PhenotypeMap::from_config(&cfg).unwrap();
        for s in run.solutions.iter().step_by(7) {
            let f = map.features(&s.genotype, s.id).unwrap();
            assert_eq!(phenotype(&f, cfg.m), s.phenotype);
        }
    }

    #[test]
    fn random_baseline_matches_budget_and_bounds() {
        let cfg = small(SearchMode::Random, 2);
        let run = random_baseline(&cfg).unwrap();
        assert_eq!(run.solutions.len(), cfg.budget());
        let range = cfg.sigma_range();
        assert!(run.solutions.iter().all(|s| s.genotype.within_bounds(range)));
    }

    #[test]
    fn threshold_decays_without_additions() {
        // A huge threshold admits nothing, so every window shrinks it.
        let cfg = NsConfig {
            rho_min_init: 1e6,
            window: 2,
            t_max: 4,
            ..small(SearchMode::Ns, 4)
        };
        let run = ns_run(&cfg).unwrap();
        assert!(run.archive_log.is_empty());
        let expected = [1e6, 1e6, 1e6 * 0.95, 1e6 * 0.95, 1e6 * 0.95 * 0.95];
        assert_eq!(run.thresholds, expected);
    }
}
