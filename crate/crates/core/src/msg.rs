//! Max-set-of-Gaussians landscapes.
//!
//! An instance on `[0,1]^d` is the pointwise maximum of `m` isotropic
//! Gaussian bumps `g_i(x) = w_i exp(-|x - c_i|^2 / (2 sigma_i^2))`. The
//! objective is maximized. A center `c_i` is a local optimum exactly when
//! `g_i(c_i) > g_j(c_i)` for every `j != i`, so all local optima are found
//! with one evaluation of `f` per center.

use std::cmp::Ordering;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::sobol;

/// Current version tag of the instance JSON schema.
pub const INSTANCE_FORMAT_VERSION: u32 = 1;
const INSTANCE_FORMAT: &str = "msglon-instance";

/// Smallest admissible peak height; weights live in `(0, 1]`.
pub const WEIGHT_FLOOR: f64 = 1e-9;

/// Side length of one of `m` equal hypercubes partitioning `[0,1]^d`.
pub fn reference_radius(d: usize, m: usize) -> f64 {
    (1.0 / m as f64).powf(1.0 / d as f64)
}

/// `(sigma_min, sigma_max) = (r/4, 3r)`.
pub fn sigma_bounds(d: usize, m: usize) -> (f64, f64) {
    let r = reference_radius(d, m);
    (r / 4.0, 3.0 * r)
}

/// Default component count, `50 d`.
pub fn default_components(d: usize) -> usize {
    50 * d
}

#[inline]
fn gaussian(weight: f64, inv_two_var: f64, center: &[f64], x: &[f64]) -> f64 {
    let q: f64 = center
        .iter()
        .zip(x)
        .map(|(c, xi)| {
            let t = xi - c;
            t * t
        })
        .sum();
    weight * (-q * inv_two_var).exp()
}

#[inline]
fn inv_two_var(sigma: f64) -> f64 {
    0.5 / (sigma * sigma)
}

/// One isotropic Gaussian bump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub center: Vec<f64>,
    pub weight: f64,
    pub sigma: f64,
}

impl GaussianComponent {
    pub fn value_at(&self, x: &[f64]) -> f64 {
        gaussian(self.weight, inv_two_var(self.sigma), &self.center, x)
    }
}

/// A validated set of pairwise-distinct centers in `[0,1]^d`, stored row-major.
///
/// Cloning is cheap; instances generated from one center set share storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterSet {
    dim: usize,
    coords: Arc<[f64]>,
}

impl CenterSet {
    pub fn new(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension", "must be at least 1"));
        }
        if points.is_empty() {
            return Err(Error::invalid("component count", "must be at least 1"));
        }
        let mut coords = Vec::with_capacity(dim * points.len());
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: p.len(),
                });
            }
            if let Some(x) = p.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return Err(Error::invalid(
                    "center",
                    format!("component {i} has coordinate {x} outside [0,1]"),
                ));
            }
            coords.extend_from_slice(p);
        }
        let set = Self {
            dim,
            coords: coords.into(),
        };
        set.check_distinct()?;
        Ok(set)
    }

    /// The first `m` points of the `d`-dimensional Sobol' sequence.
    pub fn sobol(d: usize, m: usize) -> Result<Self> {
        Self::new(d, &sobol::sample_centers(d, m)?)
    }

    fn check_distinct(&self) -> Result<()> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.get(a)
                .iter()
                .zip(self.get(b))
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        });
        for w in idx.windows(2) {
            if self.get(w[0]) == self.get(w[1]) {
                return Err(Error::invalid(
                    "center",
                    format!("components {} and {} share a center", w[0], w[1]),
                ));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Index of the center closest to the middle of the cube (lowest index on ties).
    pub fn most_central(&self) -> usize {
        let dist = |c: &[f64]| c.iter().map(|x| (x - 0.5) * (x - 0.5)).sum::<f64>();
        let mut best = 0;
        for i in 1..self.len() {
            if dist(self.get(i)) < dist(self.get(best)) {
                best = i;
            }
        }
        best
    }
}

/// How an instance came to be. Stored alongside the components in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Manual,
    /// Weights and scales drawn uniformly within bounds.
    Uniform,
    Archetype {
        archetype: ArchetypeKind,
        anchor: usize,
    },
    /// Produced by a novelty-search (or random-baseline) run.
    Search {
        mode: String,
        run_seed: u64,
        solution: usize,
        generation: usize,
        parent: Option<usize>,
    },
}

/// Hand-designed landscape archetypes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArchetypeKind {
    /// A single broad peak; every other bump sits exactly on its flank.
    UniModal,
    /// Many narrow peaks whose heights fall off linearly away from one center.
    UniSink,
    /// Many narrow peaks of nearly equal height.
    MultiSink,
}

impl ArchetypeKind {
    pub const ALL: [ArchetypeKind; 3] = [Self::UniModal, Self::UniSink, Self::MultiSink];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::UniModal => "uni-modal",
            Self::UniSink => "uni-sink",
            Self::MultiSink => "multi-sink",
        }
    }
}

impl std::str::FromStr for ArchetypeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown archetype {s:?}"))
    }
}

/// `f(x)` together with the component attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub index: usize,
}

impl Evaluation {
    /// Larger value wins; equal values go to the lower index.
    #[inline]
    fn beats(&self, other: Option<&Evaluation>) -> bool {
        match other {
            None => true,
            Some(o) => self.value > o.value || (self.value == o.value && self.index < o.index),
        }
    }
}

/// The two largest component values at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub best: Evaluation,
    pub runner_up: Option<Evaluation>,
}

/// Whether a center is a local optimum, or which component dominates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterStatus {
    Optimum,
    /// Merged into the strongest other component at this center
    /// (lowest index on ties).
    DominatedBy(usize),
}

/// Indices of the components whose centers are local optima.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalOptimumSet {
    pub indices: Vec<usize>,
    pub global_index: usize,
}

impl LocalOptimumSet {
    pub fn from_statuses(instance: &MsgInstance, statuses: &[CenterStatus]) -> Self {
        let indices: Vec<usize> = statuses
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, CenterStatus::Optimum))
            .map(|(i, _)| i)
            .collect();
        let mut global_index = indices[0];
        for &i in &indices[1..] {
            if instance.weight(i) > instance.weight(global_index) {
                global_index = i;
            }
        }
        Self {
            indices,
            global_index,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

/// An immutable MSG landscape.
#[derive(Debug, Clone)]
pub struct MsgInstance {
    centers: CenterSet,
    weights: Vec<f64>,
    sigmas: Vec<f64>,
    seed: u64,
    provenance: Provenance,
    inv_two_var: Vec<f64>,
    /// Component indices by descending weight, ascending index on ties.
    order: Vec<usize>,
}

impl PartialEq for MsgInstance {
    fn eq(&self, other: &Self) -> bool {
        self.centers == other.centers
            && self.weights == other.weights
            && self.sigmas == other.sigmas
            && self.seed == other.seed
            && self.provenance == other.provenance
    }
}

impl MsgInstance {
    pub fn new(
        centers: CenterSet,
        weights: Vec<f64>,
        sigmas: Vec<f64>,
        seed: u64,
        provenance: Provenance,
    ) -> Result<Self> {
        let m = centers.len();
        if weights.len() != m || sigmas.len() != m {
            return Err(Error::invalid(
                "instance",
                format!(
                    "{m} centers but {} weights and {} sigmas",
                    weights.len(),
                    sigmas.len()
                ),
            ));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0 && **w <= 1.0))
        {
            return Err(Error::invalid(
                "weight",
                format!("component {i} has weight {w} outside (0,1]"),
            ));
        }
        if let Some((i, s)) = sigmas
            .iter()
            .enumerate()
            .find(|(_, s)| !(s.is_finite() && **s > 0.0))
        {
            return Err(Error::invalid(
                "sigma",
                format!("component {i} has non-positive sigma {s}"),
            ));
        }
        let inv_two_var = sigmas.iter().map(|&s| inv_two_var(s)).collect();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
        Ok(Self {
            centers,
            weights,
            sigmas,
            seed,
            provenance,
            inv_two_var,
            order,
        })
    }

    pub fn from_components(
        dim: usize,
        components: &[GaussianComponent],
        seed: u64,
        provenance: Provenance,
    ) -> Result<Self> {
        let points: Vec<Vec<f64>> = components.iter().map(|c| c.center.clone()).collect();
        let centers = CenterSet::new(dim, &points)?;
        Self::new(
            centers,
            components.iter().map(|c| c.weight).collect(),
            components.iter().map(|c| c.sigma).collect(),
            seed,
            provenance,
        )
    }

    /// Sobol' centers with weights `U(0,1]` and scales `U[sigma_min, sigma_max]`.
    pub fn random(d: usize, m: usize, seed: u64) -> Result<Self> {
        let centers = CenterSet::sobol(d, m)?;
        let (weights, sigmas) = uniform_parameters(d, m, &mut rng::stream(seed, "instance", 0));
        Self::new(centers, weights, sigmas, seed, Provenance::Uniform)
    }

    pub fn dim(&self) -> usize {
        self.centers.dim()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn centers(&self) -> &CenterSet {
        &self.centers
    }

    pub fn center(&self, i: usize) -> &[f64] {
        self.centers.get(i)
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sigma(&self, i: usize) -> f64 {
        self.sigmas[i]
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn component(&self, i: usize) -> GaussianComponent {
        GaussianComponent {
            center: self.center(i).to_vec(),
            weight: self.weights[i],
            sigma: self.sigmas[i],
        }
    }

    pub fn components(&self) -> impl Iterator<Item = GaussianComponent> + '_ {
        (0..self.len()).map(|i| self.component(i))
    }

    /// `g_i(x)`.
    #[inline]
    pub fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        gaussian(self.weights[i], self.inv_two_var[i], self.center(i), x)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// `f(x)` and the attaining component (lowest index on ties).
    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        self.check_dim(x)?;
        Ok(self.eval(x))
    }

    /// [`evaluate`](Self::evaluate) without the length check.
    #[inline]
    pub fn eval(&self, x: &[f64]) -> Evaluation {
        debug_assert_eq!(x.len(), self.dim());
        let mut best: Option<Evaluation> = None;
        for &i in &self.order {
            if let Some(b) = &best {
                // g_i <= w_i, and weights only decrease from here on.
                if self.weights[i] < b.value {
                    break;
                }
            }
            let e = Evaluation {
                value: self.component_value(i, x),
                index: i,
            };
            if e.beats(best.as_ref()) {
                best = Some(e);
            }
        }
        best.expect("instance has at least one component")
    }

    /// Best and second-best component at `x`; one evaluation of `f`.
    pub fn probe(&self, x: &[f64]) -> Result<Probe> {
        self.check_dim(x)?;
        Ok(self.probe_unchecked(x))
    }

    pub(crate) fn probe_unchecked(&self, x: &[f64]) -> Probe {
        let mut best: Option<Evaluation> = None;
        let mut second: Option<Evaluation> = None;
        for &i in &self.order {
            if let Some(s) = &second {
                if self.weights[i] < s.value {
                    break;
                }
            }
            let e = Evaluation {
                value: self.component_value(i, x),
                index: i,
            };
            if e.beats(best.as_ref()) {
                second = best;
                best = Some(e);
            } else if e.beats(second.as_ref()) {
                second = Some(e);
            }
        }
        Probe {
            best: best.expect("instance has at least one component"),
            runner_up: second,
        }
    }

    /// Classifies every center using `probe` once per center.
    pub fn center_statuses_with(
        &self,
        mut probe: impl FnMut(&[f64]) -> Probe,
    ) -> Vec<CenterStatus> {
        (0..self.len())
            .map(|i| {
                let p = probe(self.center(i));
                if p.best.index != i {
                    CenterStatus::DominatedBy(p.best.index)
                } else {
                    match p.runner_up {
                        Some(r) if r.value >= p.best.value => CenterStatus::DominatedBy(r.index),
                        _ => CenterStatus::Optimum,
                    }
                }
            })
            .collect()
    }

    pub fn center_statuses(&self) -> Vec<CenterStatus> {
        self.center_statuses_with(|x| self.probe_unchecked(x))
    }

    /// All centers not dominated by another Gaussian at themselves.
    pub fn local_optima(&self) -> LocalOptimumSet {
        LocalOptimumSet::from_statuses(self, &self.center_statuses())
    }

    /// Builds one of the hand-designed archetypes on Sobol' centers.
    ///
    /// The anchor component is the center closest to the middle of the cube.
    pub fn archetype(kind: ArchetypeKind, d: usize, m: usize, noise_seed: u64) -> Result<Self> {
        let centers = CenterSet::sobol(d, m)?;
        let (weights, sigmas, anchor) = archetype_parameters(kind, &centers, noise_seed);
        Self::new(
            centers,
            weights,
            sigmas,
            noise_seed,
            Provenance::Archetype {
                archetype: kind,
                anchor,
            },
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&InstanceFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(s)?;
        Self::try_from(file)
    }
}

/// Uniform weights in `(0,1]` and scales in `[sigma_min, sigma_max]`.
pub fn uniform_parameters<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> (Vec<f64>, Vec<f64>) {
    let (lo, hi) = sigma_bounds(d, m);
    let weights = (0..m)
        .map(|_| (1.0 - rng.random::<f64>()).max(WEIGHT_FLOOR))
        .collect();
    let sigmas = (0..m).map(|_| rng.random_range(lo..=hi)).collect();
    (weights, sigmas)
}

/// Weights, scales and anchor index of an archetype over fixed centers.
pub fn archetype_parameters(
    kind: ArchetypeKind,
    centers: &CenterSet,
    noise_seed: u64,
) -> (Vec<f64>, Vec<f64>, usize) {
    let d = centers.dim();
    let m = centers.len();
    let (sigma_min, sigma_max) = sigma_bounds(d, m);
    let anchor = centers.most_central();
    let dist = |j: usize| -> f64 {
        centers
            .get(anchor)
            .iter()
            .zip(centers.get(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let mut sigmas = vec![sigma_min; m];
    let weights = match kind {
        ArchetypeKind::UniModal => {
            sigmas[anchor] = sigma_max;
            let peak = GaussianComponent {
                center: centers.get(anchor).to_vec(),
                weight: 1.0,
                sigma: sigma_max,
            };
            (0..m)
                .map(|j| {
                    if j == anchor {
                        1.0
                    } else {
                        peak.value_at(centers.get(j)).max(f64::MIN_POSITIVE)
                    }
                })
                .collect()
        }
        ArchetypeKind::UniSink => {
            let far = (0..m).map(dist).fold(0.0, f64::max);
            (0..m)
                .map(|j| {
                    if j == anchor || far == 0.0 {
                        1.0
                    } else {
                        1.0 - UNI_SINK_DROP * dist(j) / far
                    }
                })
                .collect()
        }
        ArchetypeKind::MultiSink => {
            let mut r = rng::stream(noise_seed, "multi-sink", 0);
            let raw: Vec<f64> = (0..m)
                .map(|_| {
                    let eps: f64 = StandardNormal.sample(&mut r);
                    1.0 + 0.01 * eps
                })
                .collect();
            let max = raw.iter().copied().fold(f64::MIN, f64::max);
            raw.iter().map(|w| w / max).collect()
        }
    };
    (weights, sigmas, anchor)
}

/// Height lost between the anchor and the farthest center in the uni-sink archetype.
const UNI_SINK_DROP: f64 = 0.9;

/// On-disk JSON form of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub format: String,
    pub version: u32,
    pub d: usize,
    pub m: usize,
    pub seed: u64,
    pub generator: Provenance,
    pub components: Vec<GaussianComponent>,
}

impl From<&MsgInstance> for InstanceFile {
    fn from(inst: &MsgInstance) -> Self {
        Self {
            format: INSTANCE_FORMAT.to_string(),
            version: INSTANCE_FORMAT_VERSION,
            d: inst.dim(),
            m: inst.len(),
            seed: inst.seed,
            generator: inst.provenance.clone(),
            components: inst.components().collect(),
        }
    }
}

impl TryFrom<InstanceFile> for MsgInstance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        if file.format != INSTANCE_FORMAT {
            return Err(Error::invalid(
                "instance file",
                format!("unexpected format tag {:?}", file.format),
            ));
        }
        if file.version != INSTANCE_FORMAT_VERSION {
            return Err(Error::invalid(
                "instance file",
                format!("unsupported version {}", file.version),
            ));
        }
        if file.components.len() != file.m {
            return Err(Error::invalid(
                "instance file",
                format!("m = {} but {} components", file.m, file.components.len()),
            ));
        }
        MsgInstance::from_components(file.d, &file.components, file.seed, file.generator)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(sigma: f64) -> MsgInstance {
        MsgInstance::from_components(
            2,
            &[GaussianComponent {
                center: vec![0.5, 0.5],
                weight: 1.0,
                sigma,
            }],
            0,
            Provenance::Manual,
        )
        .unwrap()
    }

    fn naive(inst: &MsgInstance, x: &[f64]) -> Evaluation {
        let mut best = Evaluation {
            value: inst.component_value(0, x),
            index: 0,
        };
        for i in 1..inst.len() {
            let v = inst.component_value(i, x);
            if v > best.value {
                best = Evaluation { value: v, index: i };
            }
        }
        best
    }

    #[test]
    fn single_gaussian_values() {
        let inst = single(0.1);
        assert_eq!(
            inst.evaluate(&[0.5, 0.5]).unwrap(),
            Evaluation {
                value: 1.0,
                index: 0
            }
        );
        let e = inst.evaluate(&[0.6, 0.5]).unwrap();
        assert_eq!(e.index, 0);
        assert!((e.value - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(matches!(
            single(0.1).evaluate(&[0.5]),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        ));
    }

    #[test]
    fn random_instance_matches_naive_loop_on_grid() {
        let inst = MsgInstance::random(2, 10, 3).unwrap();
        for a in 0..10 {
            for b in 0..10 {
                let x = [a as f64 / 9.0, b as f64 / 9.0];
                assert_eq!(inst.evaluate(&x).unwrap(), naive(&inst, &x));
            }
        }
    }

    #[test]
    fn single_gaussian_is_its_own_optimum() {
        let opt = single(0.1).local_optima();
        assert_eq!(opt.indices, vec![0]);
        assert_eq!(opt.global_index, 0);
    }

    #[test]
    fn dominated_center_is_not_an_optimum() {
        let comps = [
            GaussianComponent {
                center: vec![0.5],
                weight: 1.0,
                sigma: 0.3,
            },
            GaussianComponent {
                center: vec![0.55],
                weight: 0.5,
                sigma: 0.05,
            },
        ];
        let inst = MsgInstance::from_components(1, &comps, 0, Provenance::Manual).unwrap();
        assert!(comps[0].value_at(&[0.55]) > comps[1].value_at(&[0.55]));
        assert_eq!(inst.local_optima().indices, vec![0]);
        assert_eq!(
            inst.center_statuses(),
            vec![CenterStatus::Optimum, CenterStatus::DominatedBy(0)]
        );
    }

    #[test]
    fn equal_height_at_center_counts_as_dominated() {
        let inst = MsgInstance::archetype(ArchetypeKind::UniModal, 2, 100, 0).unwrap();
        let opt = inst.local_optima();
        assert_eq!(opt.len(), 1);
        let Provenance::Archetype { anchor, .. } = inst.provenance() else {
            unreachable!()
        };
        assert_eq!(opt.indices, vec![*anchor]);
    }

    #[test]
    fn multi_sink_weights_are_normalized() {
        let inst = MsgInstance::archetype(ArchetypeKind::MultiSink, 2, 100, 5).unwrap();
        assert!(inst.weights().iter().all(|&w| w > 0.0 && w <= 1.0));
        assert_eq!(inst.weights().iter().filter(|&&w| w == 1.0).count(), 1);
        let (lo, _) = sigma_bounds(2, 100);
        assert!(inst.sigmas().iter().all(|&s| s == lo));
    }

    #[test]
    fn uni_sink_farthest_center_is_lowest() {
        let inst = MsgInstance::archetype(ArchetypeKind::UniSink, 2, 100, 0).unwrap();
        let Provenance::Archetype { anchor, .. } = *inst.provenance() else {
            unreachable!()
        };
        assert_eq!(inst.weight(anchor), 1.0);
        let dist = |j: usize| -> f64 {
            inst.center(anchor)
                .iter()
                .zip(inst.center(j))
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        };
        let far = (0..inst.len()).max_by(|&a, &b| dist(a).total_cmp(&dist(b))).unwrap();
        let min = (0..inst.len())
            .filter(|&j| j != anchor)
            .map(|j| inst.weight(j))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(inst.weight(far), min);
    }

    #[test]
    fn rejects_invalid_components() {
        let bad_weight = GaussianComponent {
            center: vec![0.1],
            weight: 0.0,
            sigma: 0.1,
        };
        assert!(MsgInstance::from_components(1, &[bad_weight], 0, Provenance::Manual).is_err());
        let outside = GaussianComponent {
            center: vec![1.5],
            weight: 0.5,
            sigma: 0.1,
        };
        assert!(MsgInstance::from_components(1, &[outside], 0, Provenance::Manual).is_err());
        let a = GaussianComponent {
            center: vec![0.2, 0.3],
            weight: 0.5,
            sigma: 0.1,
        };
        assert!(
            MsgInstance::from_components(2, &[a.clone(), a], 0, Provenance::Manual).is_err()
        );
    }

    #[test]
    fn json_round_trip() {
        let inst = MsgInstance::random(3, 30, 11).unwrap();
        let back = MsgInstance::from_json(&inst.to_json().unwrap()).unwrap();
        assert_eq!(inst, back);
        assert!(MsgInstance::from_json("{\"format\": \"nope\"}").is_err());
    }

    proptest! {
        #[test]
        fn evaluate_is_pointwise_max(seed in 0u64..500, xs in prop::collection::vec(0.0f64..=1.0, 3)) {
            let inst = MsgInstance::random(3, 20, seed).unwrap();
            let e = inst.evaluate(&xs).unwrap();
            for i in 0..inst.len() {
                prop_assert!(e.value >= inst.component_value(i, &xs));
            }
            prop_assert_eq!(e.value, inst.component_value(e.index, &xs));
            prop_assert_eq!(e, naive(&inst, &xs));
            let p = inst.probe(&xs).unwrap();
            prop_assert_eq!(p.best, e);
        }
    }
}
