//! Shortest-path kernel over node-kind labels.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::model::{DecisionGraph, NodeKind};

/// (source kind, target kind, path length) → number of node pairs.
pub type KernelFeatures = BTreeMap<(NodeKind, NodeKind, u32), u64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpOptions {
    /// Follow edges in their direction only. The undirected variant treats
    /// the skeleton as symmetric.
    pub directed: bool,
}

impl Default for SpOptions {
    fn default() -> Self {
        SpOptions { directed: true }
    }
}

pub fn sp_features(g: &DecisionGraph) -> KernelFeatures {
    sp_features_with(g, SpOptions::default())
}

/// Counts every ordered pair `(u, v)`, `u ≠ v`, with a finite BFS distance.
pub fn sp_features_with(g: &DecisionGraph, opts: SpOptions) -> KernelFeatures {
    let index: HashMap<&str, usize> = g.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let n = g.nodes.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in &g.edges {
        let (Some(&u), Some(&v)) = (index.get(e.from.as_str()), index.get(e.to.as_str())) else {
            continue;
        };
        if u == v {
            continue;
        }
        adj[u].push(v);
        if !opts.directed {
            adj[v].push(u);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }

    let mut features = KernelFeatures::new();
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = u32::MAX);
        dist[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for (t, &d) in dist.iter().enumerate() {
            if t != s && d != u32::MAX {
                *features.entry((g.nodes[s].kind, g.nodes[t].kind, d)).or_insert(0) += 1;
            }
        }
    }
    features
}

/// Unnormalized kernel value: the dot product of two feature maps.
pub fn sp_kernel(f1: &KernelFeatures, f2: &KernelFeatures) -> f64 {
    let dot: u128 = f1
        .iter()
        .filter_map(|(k, a)| f2.get(k).map(|b| u128::from(*a) * u128::from(*b)))
        .sum();
    dot as f64
}

/// Cosine-normalized kernel. Two empty feature maps are identical (1.0);
/// exactly one empty map gives 0.0.
pub fn normalized_kernel(f1: &KernelFeatures, f2: &KernelFeatures) -> f64 {
    match (f1.is_empty(), f2.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let k = sp_kernel(f1, f2);
    let k11 = sp_kernel(f1, f1);
    let k22 = sp_kernel(f2, f2);
    (k / (k11 * k22).sqrt()).clamp(0.0, 1.0)
}

pub fn sp_similarity(g1: &DecisionGraph, g2: &DecisionGraph) -> f64 {
    sp_similarity_with(g1, g2, SpOptions::default())
}

pub fn sp_similarity_with(g1: &DecisionGraph, g2: &DecisionGraph, opts: SpOptions) -> f64 {
    normalized_kernel(&sp_features_with(g1, opts), &sp_features_with(g2, opts))
}
