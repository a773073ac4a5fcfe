//! Basins of attraction and local optima networks built without search.
//!
//! Every component owns the region where it attains the maximum. A region
//! whose center is dominated by another component is merged into that
//! component's region, and merging repeats until it reaches a local optimum.
//! The chain cannot cycle because each hop moves to a strictly higher
//! center value. Escape edges are then estimated by sampling a ball around
//! each optimum and assigning every sample to a basin.

use std::collections::VecDeque;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::msg::{reference_radius, CenterStatus, Evaluation, LocalOptimumSet, MsgInstance};
use crate::rng;
use rand::Rng;

/// Maps every component to the local optimum its region is merged into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasinAssignment {
    parent: Vec<usize>,
    owner: Vec<usize>,
    optima: LocalOptimumSet,
}

impl BasinAssignment {
    pub fn build(instance: &MsgInstance) -> Self {
        Self::from_statuses(instance, &instance.center_statuses())
    }

    pub fn from_statuses(instance: &MsgInstance, statuses: &[CenterStatus]) -> Self {
        let m = statuses.len();
        let parent: Vec<usize> = statuses
            .iter()
            .enumerate()
            .map(|(i, s)| match s {
                CenterStatus::Optimum => i,
                CenterStatus::DominatedBy(j) => *j,
            })
            .collect();
        const UNSET: usize = usize::MAX;
        let mut owner = vec![UNSET; m];
        let mut chain = Vec::new();
        for start in 0..m {
            let mut i = start;
            while owner[i] == UNSET && parent[i] != i {
                chain.push(i);
                i = parent[i];
                debug_assert!(chain.len() < m, "merge chain cycles");
            }
            let root = if owner[i] == UNSET { i } else { owner[i] };
            owner[i] = root;
            for j in chain.drain(..) {
                owner[j] = root;
            }
        }
        Self {
            parent,
            owner,
            optima: LocalOptimumSet::from_statuses(instance, statuses),
        }
    }

    /// Local optimum that component `i` is merged into.
    pub fn owner(&self, i: usize) -> usize {
        self.owner[i]
    }

    /// Next hop of the merge chain (`i` itself for an optimum).
    pub fn parent(&self, i: usize) -> usize {
        self.parent[i]
    }

    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    pub fn optima(&self) -> &LocalOptimumSet {
        &self.optima
    }

    /// Local optimum whose basin contains `x`.
    pub fn assign_point(&self, instance: &MsgInstance, x: &[f64]) -> Result<usize> {
        Ok(self.owner[instance.evaluate(x)?.index])
    }

    #[inline]
    pub(crate) fn assign(&self, instance: &MsgInstance, x: &[f64]) -> usize {
        self.owner[instance.eval(x).index]
    }
}

/// Escape-edge sampling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LonConfig {
    /// Samples drawn around each local optimum.
    pub samples: usize,
    pub radius: f64,
    pub seed: u64,
}

impl LonConfig {
    /// `s = 500 d` samples in a ball of radius `(1/m)^(1/d)`.
    pub fn defaults(d: usize, m: usize, seed: u64) -> Self {
        Self {
            samples: 500 * d,
            radius: reference_radius(d, m),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LonNode {
    /// Component index of the optimum.
    pub component: usize,
    pub fitness: f64,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LonEdge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LonKind {
    Full,
    Monotonic,
    Funnel,
}

/// Weighted directed graph over local optima. Edges are sorted by
/// `(source, target)` and refer to positions in `nodes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lon {
    pub kind: LonKind,
    pub nodes: Vec<LonNode>,
    pub edges: Vec<LonEdge>,
    /// Node index of the global optimum.
    pub optimal: usize,
    pub sample_count: usize,
    pub radius: f64,
}

/// Uniform point in the ball of radius `r` around `center`, clipped to the cube.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, center: &[f64], r: f64, out: &mut [f64]) {
    let d = center.len();
    let mut norm2 = 0.0;
    loop {
        for o in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *o = z;
            norm2 += z * z;
        }
        if norm2 > 0.0 {
            break;
        }
    }
    let u: f64 = rng.random();
    let scale = r * u.powf(1.0 / d as f64) / norm2.sqrt();
    for (o, c) in out.iter_mut().zip(center) {
        *o = (c + *o * scale).clamp(0.0, 1.0);
    }
}

impl Lon {
    pub fn build(instance: &MsgInstance, config: &LonConfig) -> Self {
        let basins = BasinAssignment::build(instance);
        Self::from_basins(instance, &basins, config)
    }

    pub fn from_basins(instance: &MsgInstance, basins: &BasinAssignment, config: &LonConfig) -> Self {
        Self::from_basins_with(instance, basins, config, |x| instance.eval(x))
    }

    /// Like [`from_basins`](Self::from_basins) with a caller-supplied
    /// evaluation of `f`, e.g. one that counts calls.
    pub fn from_basins_with<F>(
        instance: &MsgInstance,
        basins: &BasinAssignment,
        config: &LonConfig,
        eval: F,
    ) -> Self
    where
        F: Fn(&[f64]) -> Evaluation + Sync,
    {
        let optima = basins.optima();
        let mut node_of = vec![usize::MAX; instance.len()];
        for (n, &i) in optima.indices.iter().enumerate() {
            node_of[i] = n;
        }
        let nodes: Vec<LonNode> = optima
            .indices
            .iter()
            .map(|&i| LonNode {
                component: i,
                fitness: instance.weight(i),
                center: instance.center(i).to_vec(),
            })
            .collect();
        let n = nodes.len();
        let s = config.samples;
        let edges: Vec<LonEdge> = (0..n)
            .into_par_iter()
            .map(|src| {
                let comp = nodes[src].component;
                let mut r = rng::stream(config.seed, "escape", comp as u64);
                let mut counts = vec![0usize; n];
                let mut x = vec![0.0; instance.dim()];
                for _ in 0..s {
                    sample_ball(&mut r, &nodes[src].center, config.radius, &mut x);
                    let owner = basins.owner(eval(&x).index);
                    counts[node_of[owner]] += 1;
                }
                counts
                    .into_iter()
                    .enumerate()
                    .filter(|&(dst, c)| dst != src && c > 0)
                    .map(|(dst, c)| LonEdge {
                        source: src,
                        target: dst,
                        weight: c as f64 / s as f64,
                    })
                    .collect::<Vec<_>>()
            })
            .flatten()
            .collect();
        Self {
            kind: LonKind::Full,
            nodes,
            edges,
            optimal: node_of[optima.global_index],
            sample_count: s,
            radius: config.radius,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.nodes.len()];
        for e in &self.edges {
            deg[e.source] += 1;
        }
        deg
    }

    pub fn out_weight_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.nodes.len()];
        for e in &self.edges {
            sums[e.source] += e.weight;
        }
        sums
    }

    pub fn in_strengths(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.nodes.len()];
        for e in &self.edges {
            sums[e.target] += e.weight;
        }
        sums
    }

    /// Node indices with out-degree 0.
    pub fn sinks(&self) -> Vec<usize> {
        self.out_degrees()
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Keeps only edges to strictly fitter optima.
    pub fn monotonic(&self) -> Lon {
        Lon {
            kind: LonKind::Monotonic,
            edges: self
                .edges
                .iter()
                .filter(|e| self.nodes[e.target].fitness > self.nodes[e.source].fitness)
                .copied()
                .collect(),
            ..self.clone()
        }
    }

    /// Keeps each node's heaviest outgoing edge; ties go to the fitter
    /// target, then the lower target index. Expects a monotonic LON.
    pub fn funnel(&self) -> Lon {
        let mut best: Vec<Option<LonEdge>> = vec![None; self.nodes.len()];
        for e in &self.edges {
            let slot = &mut best[e.source];
            let better = match slot {
                None => true,
                Some(b) => {
                    let (fe, fb) = (self.nodes[e.target].fitness, self.nodes[b.target].fitness);
                    e.weight > b.weight
                        || (e.weight == b.weight && (fe > fb || (fe == fb && e.target < b.target)))
                }
            };
            if better {
                *slot = Some(*e);
            }
        }
        Lon {
            kind: LonKind::Funnel,
            edges: best.into_iter().flatten().collect(),
            ..self.clone()
        }
    }

    /// Node indices in topological order, or `None` if the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut indeg = vec![0usize; n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            indeg[e.target] += 1;
            out[e.source].push(e.target);
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &out[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Unweighted hop counts to the nearest of `targets` along edge direction.
    pub fn hops_to(&self, targets: &[usize]) -> Vec<Option<usize>> {
        let n = self.nodes.len();
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            rev[e.target].push(e.source);
        }
        let mut dist = vec![None; n];
        let mut queue = VecDeque::new();
        for &t in targets {
            if dist[t].is_none() {
                dist[t] = Some(0);
                queue.push_back(t);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &rev[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Terminal node of each node's chain in a graph with out-degree at most one.
    pub fn chain_ends(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut next = vec![None; n];
        for e in &self.edges {
            next[e.source] = Some(e.target);
        }
        (0..n)
            .map(|start| {
                let mut i = start;
                let mut hops = 0;
                while let Some(j) = next[i] {
                    i = j;
                    hops += 1;
                    assert!(hops <= n, "funnel chain cycles");
                }
                i
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// The eight LON metrics, in CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LonFeatures {
    pub num_nodes: usize,
    pub edge_density: f64,
    pub num_sinks: usize,
    pub avg_path_opt: f64,
    pub avg_path_sinks: f64,
    pub in_strength_opt: f64,
    pub in_strength_sinks: f64,
    pub global_funnel_size: f64,
}

impl LonFeatures {
    pub const NAMES: [&'static str; 8] = [
        "num_nodes",
        "edge_density",
        "num_sinks",
        "avg_path_opt",
        "avg_path_sinks",
        "in_strength_opt",
        "in_strength_sinks",
        "global_funnel_size",
    ];

    /// Everything but `global_funnel_size` comes from the monotonic LON;
    /// that one comes from the funnel LON. Path averages skip the target
    /// nodes themselves and nodes that cannot reach a target, and are 0
    /// when nothing qualifies.
    pub fn compute(lon: &Lon) -> Self {
        let mono = lon.monotonic();
        let n = mono.num_nodes();
        let edge_density = if n > 1 {
            mono.edges.len() as f64 / (n * (n - 1)) as f64
        } else {
            0.0
        };
        let sinks = mono.sinks();
        let mean_hops = |d: Vec<Option<usize>>| -> f64 {
            let hops: Vec<usize> = d.into_iter().flatten().filter(|&h| h > 0).collect();
            if hops.is_empty() {
                0.0
            } else {
                hops.iter().sum::<usize>() as f64 / hops.len() as f64
            }
        };
        let strength = mono.in_strengths();
        let in_strength_sinks = if sinks.is_empty() {
            0.0
        } else {
            sinks.iter().map(|&s| strength[s]).sum::<f64>() / sinks.len() as f64
        };
        let ends = mono.funnel().chain_ends();
        let in_opt_funnel = ends.iter().filter(|&&e| e == mono.optimal).count();
        Self {
            num_nodes: n,
            edge_density,
            num_sinks: sinks.len(),
            avg_path_opt: mean_hops(mono.hops_to(&[mono.optimal])),
            avg_path_sinks: mean_hops(mono.hops_to(&sinks)),
            in_strength_opt: strength[mono.optimal],
            in_strength_sinks,
            global_funnel_size: in_opt_funnel as f64 / n as f64,
        }
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.num_nodes as f64,
            self.edge_density,
            self.num_sinks as f64,
            self.avg_path_opt,
            self.avg_path_sinks,
            self.in_strength_opt,
            self.in_strength_sinks,
            self.global_funnel_size,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}
