//! Independent reference implementations used by the integration tests and
//! the acceptance run. Nothing here calls into the library's evaluation,
//! basin or feature code; only plain instance parameters are read.

#![allow(dead_code)]

use std::collections::BTreeSet;

use msglon::lon::{Lon, LonFeatures};
use msglon::msg::MsgInstance;
use petgraph::algo::dijkstra;
use petgraph::graph::{DiGraph, NodeIndex};
use petgraph::visit::{EdgeRef, Reversed};
use petgraph::Direction;

/// Plain parameter copy of an instance.
pub struct Naive {
    pub centers: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl Naive {
    pub fn of(inst: &MsgInstance) -> Self {
        Self {
            centers: (0..inst.len()).map(|i| inst.center(i).to_vec()).collect(),
            weights: inst.weights().to_vec(),
            sigmas: inst.sigmas().to_vec(),
        }
    }

    pub fn g(&self, i: usize, x: &[f64]) -> f64 {
        let d2: f64 = self.centers[i].iter().zip(x).map(|(c, v)| (c - v) * (c - v)).sum();
        self.weights[i] * (-d2 / (2.0 * self.sigmas[i] * self.sigmas[i])).exp()
    }

    /// Maximal component, lowest index on ties.
    pub fn argmax(&self, x: &[f64]) -> usize {
        let mut best = 0;
        for i in 1..self.weights.len() {
            if self.g(i, x) > self.g(best, x) {
                best = i;
            }
        }
        best
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        self.g(self.argmax(x), x)
    }

    /// Follows "merge into the strongest other Gaussian at my center" until
    /// a center that no other Gaussian reaches or exceeds.
    pub fn owner(&self, i: usize) -> usize {
        let ci = &self.centers[i];
        let own = self.g(i, ci);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.weights.len() {
            if j == i {
                continue;
            }
            let v = self.g(j, ci);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((j, v));
            }
        }
        match best {
            Some((j, v)) if v >= own => self.owner(j),
            _ => i,
        }
    }

    pub fn assign(&self, x: &[f64]) -> usize {
        self.owner(self.argmax(x))
    }

    /// Adaptive-step ascent along the active component's gradient, started
    /// at `x0`; returns the nearest center to the endpoint and its distance.
    pub fn hill_climb(&self, x0: &[f64]) -> (usize, f64) {
        let mut x = x0.to_vec();
        let mut fx = self.f(&x);
        let mut h: f64 = 1e-3;
        let mut trial = vec![0.0; x.len()];
        for _ in 0..200_000 {
            if h < 1e-13 {
                break;
            }
            let k = self.argmax(&x);
            let dir: Vec<f64> = self.centers[k].iter().zip(&x).map(|(c, v)| c - v).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let step = h.min(norm);
            for ((t, v), dv) in trial.iter_mut().zip(&x).zip(&dir) {
                *t = (v + step * dv / norm).clamp(0.0, 1.0);
            }
            let ft = self.f(&trial);
            if ft > fx {
                x.copy_from_slice(&trial);
                fx = ft;
                h *= 1.5;
            } else {
                h *= 0.5;
            }
        }
        let (i, dist) = self
            .centers
            .iter()
            .enumerate()
            .map(|(i, c)| {
                (i, c.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        (i, dist)
    }

    /// Distinct hill-climb endpoints from every center.
    pub fn climb_optima(&self) -> (BTreeSet<usize>, f64) {
        let mut set = BTreeSet::new();
        let mut worst = 0.0f64;
        for c in &self.centers {
            let (i, dist) = self.hill_climb(c);
            set.insert(i);
            worst = worst.max(dist);
        }
        (set, worst)
    }
}

/// Features recomputed with petgraph from the full LON's node list and edges.
pub fn reference_features(lon: &Lon) -> LonFeatures {
    let n = lon.nodes.len();
    let mut g: DiGraph<f64, f64> = DiGraph::new();
    let ids: Vec<NodeIndex> = lon.nodes.iter().map(|v| g.add_node(v.fitness)).collect();
    for e in &lon.edges {
        if lon.nodes[e.target].fitness > lon.nodes[e.source].fitness {
            g.add_edge(ids[e.source], ids[e.target], e.weight);
        }
    }
    let opt = ids[lon.optimal];
    let sinks: Vec<NodeIndex> = g
        .node_indices()
        .filter(|&v| g.neighbors_directed(v, Direction::Outgoing).next().is_none())
        .collect();

    let rev = Reversed(&g);
    let mut best_to_sink = vec![usize::MAX; n];
    for &s in &sinks {
        for (v, dist) in dijkstra(rev, s, None, |_| 1usize) {
            best_to_sink[v.index()] = best_to_sink[v.index()].min(dist);
        }
    }
    let mean = |v: Vec<usize>| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<usize>() as f64 / v.len() as f64
        }
    };
    let to_opt: Vec<usize> = dijkstra(rev, opt, None, |_| 1usize)
        .into_iter()
        .filter(|&(v, _)| v != opt)
        .map(|(_, d)| d)
        .collect();
    let to_sinks: Vec<usize> = best_to_sink.into_iter().filter(|&d| d != usize::MAX && d > 0).collect();

    let in_strength = |v: NodeIndex| -> f64 {
        g.edges_directed(v, Direction::Incoming).map(|e| *e.weight()).sum()
    };
    let in_strength_sinks = if sinks.is_empty() {
        0.0
    } else {
        sinks.iter().map(|&s| in_strength(s)).sum::<f64>() / sinks.len() as f64
    };

    // Funnel: heaviest out-edge, then fitter target, then lower target index.
    let next: Vec<Option<usize>> = g
        .node_indices()
        .map(|v| {
            g.edges(v)
                .map(|e| (*e.weight(), g[e.target()], e.target().index()))
                .max_by(|a, b| {
                    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(b.2.cmp(&a.2))
                })
                .map(|t| t.2)
        })
        .collect();
    let funnel_to_opt = (0..n)
        .filter(|&v| {
            let mut cur = v;
            while let Some(nx) = next[cur] {
                cur = nx;
            }
            cur == opt.index()
        })
        .count();

    LonFeatures {
        num_nodes: n,
        edge_density: if n > 1 { g.edge_count() as f64 / (n * (n - 1)) as f64 } else { 0.0 },
        num_sinks: sinks.len(),
        avg_path_opt: mean(to_opt),
        avg_path_sinks: mean(to_sinks),
        in_strength_opt: in_strength(opt),
        in_strength_sinks,
        global_funnel_size: funnel_to_opt as f64 / n as f64,
    }
}

/// Describes the first mismatch between two feature vectors, if any.
/// Counts and fractions must agree exactly; means and sums within 1e-12.
pub fn feature_mismatch(a: &LonFeatures, b: &LonFeatures) -> Option<String> {
    let exact = [
        ("num_nodes", a.num_nodes as f64, b.num_nodes as f64),
        ("edge_density", a.edge_density, b.edge_density),
        ("num_sinks", a.num_sinks as f64, b.num_sinks as f64),
        ("global_funnel_size", a.global_funnel_size, b.global_funnel_size),
    ];
    for (name, x, y) in exact {
        if x != y {
            return Some(format!("{name}: {x} vs {y}"));
        }
    }
    let close = [
        ("avg_path_opt", a.avg_path_opt, b.avg_path_opt),
        ("avg_path_sinks", a.avg_path_sinks, b.avg_path_sinks),
        ("in_strength_opt", a.in_strength_opt, b.in_strength_opt),
        ("in_strength_sinks", a.in_strength_sinks, b.in_strength_sinks),
    ];
    for (name, x, y) in close {
        if (x - y).abs() > 1e-12 {
            return Some(format!("{name}: {x} vs {y}"));
        }
    }
    None
}

/// Checks the structural invariants of a LON and its features; returns the
/// list of violations.
pub fn graph_violations(lon: &Lon) -> Vec<String> {
    let mut out = Vec::new();
    let mono = lon.monotonic();
    if petgraph::algo::toposort(&to_petgraph(&mono), None).is_err() {
        out.push("monotonic LON has a cycle".into());
    }
    let mut sums = vec![0.0; lon.nodes.len()];
    for e in &lon.edges {
        if e.source == e.target {
            out.push("self edge".into());
        }
        if !(e.weight > 0.0 && e.weight <= 1.0) {
            out.push(format!("edge weight {}", e.weight));
        }
        sums[e.source] += e.weight;
    }
    if sums.iter().any(|&s| s > 1.0 + 1e-12) {
        out.push("outgoing weight sum above 1".into());
    }
    let f = LonFeatures::compute(lon);
    if f.num_sinks < 1 {
        out.push("no sink".into());
    }
    if f.num_sinks == 1 && f.global_funnel_size != 1.0 {
        out.push(format!("single sink but funnel size {}", f.global_funnel_size));
    }
    if !f.is_finite() {
        out.push("non-finite feature".into());
    }
    out
}

pub fn to_petgraph(lon: &Lon) -> DiGraph<(), f64> {
    let mut g = DiGraph::new();
    let ids: Vec<NodeIndex> = lon.nodes.iter().map(|_| g.add_node(())).collect();
    for e in &lon.edges {
        g.add_edge(ids[e.source], ids[e.target], e.weight);
    }
    g
}
