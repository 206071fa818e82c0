//! Graphlet kernel: connected induced subgraphs of 3–5 nodes on the
//! undirected skeleton, bucketed by isomorphism class.

use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::DecisionGraph;

/// (graphlet size, canonical adjacency code) → count.
pub type GraphletFeatures = BTreeMap<(u8, u16), f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct GraphletOptions {
    pub sizes: Vec<usize>,
    /// Graphs with at most this many nodes are counted exhaustively.
    pub exhaustive_threshold: usize,
    /// Node subsets drawn per graphlet size when sampling.
    pub sample_budget: usize,
    pub seed: u64,
}

impl Default for GraphletOptions {
    fn default() -> Self {
        GraphletOptions {
            sizes: vec![3, 4, 5],
            exhaustive_threshold: 30,
            sample_budget: 20_000,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("graphlet size {0} is not supported (3, 4 or 5)")]
pub struct UnsupportedSize(pub usize);

/// Bit index of the pair `(i, j)`, `i < j`, in a `k`-node adjacency code.
fn pair_bit(k: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < k);
    // pairs enumerated row by row: (0,1),(0,2),..,(0,k-1),(1,2),..
    i * (2 * k - i - 1) / 2 + (j - i - 1)
}

/// Adjacency code of the subgraph induced by `nodes`.
pub fn adjacency_code(nodes: &[usize], adjacent: impl Fn(usize, usize) -> bool) -> u16 {
    let k = nodes.len();
    let mut code = 0u16;
    for i in 0..k {
        for j in (i + 1)..k {
            if adjacent(nodes[i], nodes[j]) {
                code |= 1 << pair_bit(k, i, j);
            }
        }
    }
    code
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

fn canonical_table(k: usize) -> &'static [u16] {
    static TABLES: [OnceLock<Vec<u16>>; 6] = [
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
        OnceLock::new(),
    ];
    TABLES[k].get_or_init(|| {
        let bits = k * k.saturating_sub(1) / 2;
        let perms = permutations(k);
        (0..(1u32 << bits))
            .map(|code| {
                perms
                    .iter()
                    .map(|p| {
                        let mut out = 0u16;
                        for i in 0..k {
                            for j in (i + 1)..k {
                                if code & (1 << pair_bit(k, i, j)) != 0 {
                                    let (a, b) = if p[i] < p[j] { (p[i], p[j]) } else { (p[j], p[i]) };
                                    out |= 1 << pair_bit(k, a, b);
                                }
                            }
                        }
                        out
                    })
                    .min()
                    .expect("at least one permutation")
            })
            .collect()
    })
}

/// Canonical representative of the isomorphism class of a `k`-node code:
/// the smallest code over all relabelings.
pub fn canonical_class(k: usize, code: u16) -> u16 {
    assert!((1..=5).contains(&k), "graphlet size out of range");
    canonical_table(k)[code as usize]
}

struct Skeleton {
    adj: Vec<Vec<usize>>,
    matrix: Vec<Vec<bool>>,
}

impl Skeleton {
    fn new(n: usize, edges: &[(usize, usize)]) -> Skeleton {
        let mut adj = vec![Vec::new(); n];
        let mut matrix = vec![vec![false; n]; n];
        for &(u, v) in edges {
            if u == v || u >= n || v >= n || matrix[u][v] {
                continue;
            }
            matrix[u][v] = true;
            matrix[v][u] = true;
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Skeleton { adj, matrix }
    }

    fn code(&self, nodes: &[usize]) -> u16 {
        adjacency_code(nodes, |a, b| self.matrix[a][b])
    }

    fn connected(&self, nodes: &[usize]) -> bool {
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..nodes.len() {
                if !seen[j] && self.matrix[nodes[i]][nodes[j]] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn check_sizes(sizes: &[usize]) -> Result<(), UnsupportedSize> {
    match sizes.iter().find(|s| !(3..=5).contains(*s)) {
        Some(&s) => Err(UnsupportedSize(s)),
        None => Ok(()),
    }
}

/// Exhaustive enumeration (ESU) of connected induced subgraphs of an
/// undirected graph on nodes `0..n`.
pub fn graphlet_counts_exhaustive(
    n: usize,
    edges: &[(usize, usize)],
    sizes: &[usize],
) -> Result<GraphletFeatures, UnsupportedSize> {
    check_sizes(sizes)?;
    let sk = Skeleton::new(n, edges);
    let max = sizes.iter().copied().max().unwrap_or(0);
    let mut counts: HashMap<(u8, u16), u64> = HashMap::new();
    if max == 0 {
        return Ok(GraphletFeatures::new());
    }

    let mut sub = Vec::with_capacity(max);
    for v in 0..n {
        sub.clear();
        sub.push(v);
        let ext: Vec<usize> = sk.adj[v].iter().copied().filter(|&u| u > v).collect();
        extend(&sk, &mut sub, ext, v, max, sizes, &mut counts);
    }
    Ok(counts.into_iter().map(|(k, c)| (k, c as f64)).collect())
}

fn extend(
    sk: &Skeleton,
    sub: &mut Vec<usize>,
    mut ext: Vec<usize>,
    root: usize,
    max: usize,
    sizes: &[usize],
    counts: &mut HashMap<(u8, u16), u64>,
) {
    let k = sub.len();
    if sizes.contains(&k) {
        let class = canonical_class(k, sk.code(sub));
        *counts.entry((k as u8, class)).or_insert(0) += 1;
    }
    if k == max {
        return;
    }
    while let Some(w) = ext.pop() {
        let mut next = ext.clone();
        for &u in &sk.adj[w] {
            if u > root && !sub.contains(&u) && !next.contains(&u) && u != w && !sub.iter().any(|&s| sk.matrix[s][u]) {
                next.push(u);
            }
        }
        sub.push(w);
        extend(sk, sub, next, root, max, sizes, counts);
        sub.pop();
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Estimates class counts by drawing uniform node subsets; estimates are
/// scaled to the total number of subsets.
pub fn graphlet_counts_sampled(
    n: usize,
    edges: &[(usize, usize)],
    sizes: &[usize],
    budget: usize,
    seed: u64,
) -> Result<GraphletFeatures, UnsupportedSize> {
    check_sizes(sizes)?;
    let sk = Skeleton::new(n, edges);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = GraphletFeatures::new();
    for &k in sizes {
        if n < k || budget == 0 {
            continue;
        }
        let scale = binomial(n, k) / budget as f64;
        let mut hits: BTreeMap<u16, u64> = BTreeMap::new();
        for _ in 0..budget {
            let mut nodes = rand::seq::index::sample(&mut rng, n, k).into_vec();
            nodes.sort_unstable();
            if sk.connected(&nodes) {
                *hits.entry(canonical_class(k, sk.code(&nodes))).or_insert(0) += 1;
            }
        }
        for (class, count) in hits {
            features.insert((k as u8, class), count as f64 * scale);
        }
    }
    Ok(features)
}

fn skeleton_of(g: &DecisionGraph) -> (usize, Vec<(usize, usize)>) {
    let index: HashMap<&str, usize> = g.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let edges = g
        .edges
        .iter()
        .filter_map(|e| Some((*index.get(e.from.as_str())?, *index.get(e.to.as_str())?)))
        .collect();
    (g.nodes.len(), edges)
}

pub fn graphlet_features(g: &DecisionGraph, opts: &GraphletOptions) -> Result<GraphletFeatures, UnsupportedSize> {
    let (n, edges) = skeleton_of(g);
    if n <= opts.exhaustive_threshold {
        graphlet_counts_exhaustive(n, &edges, &opts.sizes)
    } else {
        graphlet_counts_sampled(n, &edges, &opts.sizes, opts.sample_budget, opts.seed)
    }
}

pub fn normalized_graphlet_kernel(f1: &GraphletFeatures, f2: &GraphletFeatures) -> f64 {
    match (f1.is_empty(), f2.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let dot = |a: &GraphletFeatures, b: &GraphletFeatures| -> f64 {
        a.iter().filter_map(|(k, x)| b.get(k).map(|y| x * y)).sum()
    };
    (dot(f1, f2) / (dot(f1, f1) * dot(f2, f2)).sqrt()).clamp(0.0, 1.0)
}

pub fn graphlet_similarity(
    g1: &DecisionGraph,
    g2: &DecisionGraph,
    opts: &GraphletOptions,
) -> Result<f64, UnsupportedSize> {
    Ok(normalized_graphlet_kernel(
        &graphlet_features(g1, opts)?,
        &graphlet_features(g2, opts)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Edge;
    use crate::synth::structure_from_edges;

    #[test]
    fn class_counts_match_known_totals() {
        // Non-isomorphic graphs (connected or not) on 3, 4, 5 nodes: 4, 11, 34.
        for (k, expected) in [(3, 4), (4, 11), (5, 34)] {
            let table = canonical_table(k);
            let mut classes: Vec<u16> = table.to_vec();
            classes.sort_unstable();
            classes.dedup();
            assert_eq!(classes.len(), expected, "k={k}");
        }
    }

    #[test]
    fn path_has_only_path_classes() {
        let edges: Vec<(usize, usize)> = (0..5).map(|i| (i, i + 1)).collect();
        let f = graphlet_counts_exhaustive(6, &edges, &[3, 4, 5]).unwrap();
        let path3 = canonical_class(3, adjacency_code(&[0, 1, 2], |a, b| a.abs_diff(b) == 1));
        let triangle = canonical_class(3, 0b111);
        assert_eq!(f.get(&(3, path3)), Some(&4.0));
        assert_eq!(f.get(&(3, triangle)), None);
        assert_eq!(f.keys().filter(|(k, _)| *k == 4).count(), 1);
        assert_eq!(
            f.get(&(
                5,
                canonical_class(5, adjacency_code(&[0, 1, 2, 3, 4], |a, b| a.abs_diff(b) == 1))
            )),
            Some(&2.0)
        );
    }

    #[test]
    fn self_similarity() {
        let g = structure_from_edges(
            5,
            &[
                Edge::new("n00", "n02"),
                Edge::new("n01", "n02"),
                Edge::new("n02", "n03"),
                Edge::new("n03", "n04"),
                Edge::new("n01", "n04"),
            ],
        );
        let s = graphlet_similarity(&g, &g, &GraphletOptions::default()).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert_eq!(graphlet_counts_exhaustive(3, &[], &[6]), Err(UnsupportedSize(6)));
    }

    #[test]
    fn sampling_estimates_dense_graphs() {
        let n = 12;
        let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        let exact = graphlet_counts_exhaustive(n, &edges, &[3]).unwrap();
        let sampled = graphlet_counts_sampled(n, &edges, &[3], 500, 1).unwrap();
        assert_eq!(exact.len(), sampled.len());
        for (k, v) in &exact {
            assert!((v - sampled[k]).abs() < 1e-9);
        }
    }
}
