//! Topic distances on a [`TopicGraph`] and a caching distance oracle.

use std::collections::HashMap;
use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GraphKind, TopicGraph};
use crate::corpus::{CodeView, Corpus};
use crate::error::{Error, Result};
use crate::stats::pearson;

/// Largest node count for which the provider keeps a full triangular cache.
pub const DENSE_CACHE_MAX_NODES: usize = 4096;

const SHARDS: usize = 64;
const SHARD_CAPACITY: usize = 1 << 16;
const EMPTY: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    WeightedOverlap,
    Jaccard,
    DirectedOverlap,
}

impl DistanceMetric {
    pub fn name(self) -> &'static str {
        match self {
            DistanceMetric::WeightedOverlap => "weighted_overlap",
            DistanceMetric::Jaccard => "jaccard",
            DistanceMetric::DirectedOverlap => "directed_overlap",
        }
    }
}

/// Iterates `(k, w_a, w_b)` over the common ids of two sorted adjacency lists.
fn common<'a>(
    a: &'a [(u32, f64)],
    b: &'a [(u32, f64)],
) -> impl Iterator<Item = (u32, f64, f64)> + 'a {
    let (mut x, mut y) = (0, 0);
    std::iter::from_fn(move || {
        while x < a.len() && y < b.len() {
            match a[x].0.cmp(&b[y].0) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    let out = (a[x].0, a[x].1, b[y].1);
                    x += 1;
                    y += 1;
                    return Some(out);
                }
            }
        }
        None
    })
}

fn overlap_ratio(w_shared: f64, s_i: f64, s_j: f64, direct: f64) -> f64 {
    if w_shared <= 0.0 {
        return 0.0;
    }
    let denom = s_i + s_j - direct - w_shared;
    if denom <= 0.0 {
        return 1.0;
    }
    (w_shared / denom).clamp(0.0, 1.0)
}

/// Weighted overlap similarity of two nodes of an undirected graph.
///
/// `W = Σ_{k ∈ Λi ∩ Λj} (w_ik + w_kj) / 2` and
/// `O = W / (s_i + s_j - 2 w_ij - W)`, with `O = 0` whenever `W = 0`.
pub fn weighted_overlap(graph: &TopicGraph, i: u32, j: u32) -> f64 {
    let w: f64 = common(graph.neighbors(i), graph.neighbors(j))
        .map(|(_, a, b)| (a + b) / 2.0)
        .sum();
    overlap_ratio(w, graph.strength(i), graph.strength(j), 2.0 * graph.weight(i, j))
}

/// Average of the outgoing and incoming weighted overlaps. Both directional
/// denominators subtract `w_{i->j} + w_{j->i}`.
pub fn directed_overlap(graph: &TopicGraph, i: u32, j: u32) -> f64 {
    let direct = graph.weight(i, j) + graph.weight(j, i);
    let w_out: f64 = common(graph.out_neighbors(i), graph.out_neighbors(j))
        .map(|(_, a, b)| (a + b) / 2.0)
        .sum();
    let w_in: f64 = common(graph.in_neighbors(i), graph.in_neighbors(j))
        .map(|(_, a, b)| (a + b) / 2.0)
        .sum();
    let o_out = overlap_ratio(w_out, graph.out_strength(i), graph.out_strength(j), direct);
    let o_in = overlap_ratio(w_in, graph.in_strength(i), graph.in_strength(j), direct);
    (o_out + o_in) / 2.0
}

fn neighbor_set(graph: &TopicGraph, i: u32) -> Vec<u32> {
    let mut s: Vec<u32> = graph.out_neighbors(i).iter().map(|e| e.0).collect();
    if graph.is_directed() {
        s.extend(graph.in_neighbors(i).iter().map(|e| e.0));
        s.sort_unstable();
        s.dedup();
    }
    s
}

/// Unweighted Jaccard similarity of neighbour sets; 0 for an empty union.
pub fn jaccard_similarity(graph: &TopicGraph, i: u32, j: u32) -> f64 {
    let a = neighbor_set(graph, i);
    let b = neighbor_set(graph, j);
    let (mut x, mut y, mut inter) = (0, 0, 0usize);
    while x < a.len() && y < b.len() {
        match a[x].cmp(&b[y]) {
            std::cmp::Ordering::Less => x += 1,
            std::cmp::Ordering::Greater => y += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                x += 1;
                y += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Anything that can report a distance between two topic ids.
pub trait TopicDistances: Sync {
    fn distance(&self, i: u32, j: u32) -> f64;
}

impl<F: Fn(u32, u32) -> f64 + Sync> TopicDistances for F {
    fn distance(&self, i: u32, j: u32) -> f64 {
        self(i, j)
    }
}

impl TopicDistances for DistanceProvider<'_> {
    fn distance(&self, i: u32, j: u32) -> f64 {
        DistanceProvider::distance(self, i, j)
    }
}

enum Cache {
    Dense { n: usize, cells: Vec<AtomicU64> },
    Sharded(Vec<Mutex<HashMap<u64, f64>>>),
}

/// Thread-safe, cached topic-distance oracle.
///
/// A cached pair returns exactly the value computed on first use.
pub struct DistanceProvider<'g> {
    graph: &'g TopicGraph,
    metric: DistanceMetric,
    cache: Cache,
}

impl<'g> DistanceProvider<'g> {
    pub fn new(graph: &'g TopicGraph, metric: DistanceMetric) -> Self {
        Self::with_dense_limit(graph, metric, DENSE_CACHE_MAX_NODES)
    }

    /// Like [`new`](Self::new) but with a custom dense-cache node threshold.
    pub fn with_dense_limit(graph: &'g TopicGraph, metric: DistanceMetric, dense_limit: usize) -> Self {
        let n = graph.node_count();
        let cache = if n <= dense_limit {
            let len = n * n.saturating_sub(1) / 2;
            Cache::Dense {
                n,
                cells: (0..len).map(|_| AtomicU64::new(EMPTY)).collect(),
            }
        } else {
            Cache::Sharded((0..SHARDS).map(|_| Mutex::new(HashMap::new())).collect())
        };
        Self {
            graph,
            metric,
            cache,
        }
    }

    pub fn graph(&self) -> &'g TopicGraph {
        self.graph
    }

    pub fn metric(&self) -> DistanceMetric {
        self.metric
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.cache, Cache::Dense { .. })
    }

    /// Uncached distance at full `f64` precision.
    pub fn raw_distance(&self, i: u32, j: u32) -> f64 {
        if i == j {
            return 0.0;
        }
        let sim = match self.metric {
            DistanceMetric::WeightedOverlap => weighted_overlap(self.graph, i, j),
            DistanceMetric::Jaccard => jaccard_similarity(self.graph, i, j),
            DistanceMetric::DirectedOverlap => directed_overlap(self.graph, i, j),
        };
        1.0 - sim
    }

    /// Distance between two node ids. Panics on out-of-range ids; see
    /// [`topic_distance`] for the checked variant.
    pub fn distance(&self, i: u32, j: u32) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        match &self.cache {
            Cache::Dense { n, cells } => {
                let (a, b, n) = (a as usize, b as usize, *n);
                assert!(b < n, "topic id {b} out of range");
                let idx = a * n - a * (a + 1) / 2 + (b - a - 1);
                let bits = cells[idx].load(Ordering::Relaxed);
                if bits != EMPTY {
                    return f64::from_bits(bits);
                }
                let d = self.raw_distance(a as u32, b as u32);
                cells[idx].store(d.to_bits(), Ordering::Relaxed);
                d
            }
            Cache::Sharded(shards) => {
                let key = ((a as u64) << 32) | b as u64;
                let shard = &shards[(key.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 58) as usize % SHARDS];
                if let Some(&d) = shard.lock().expect("cache lock").get(&key) {
                    return d;
                }
                let d = self.raw_distance(a, b);
                let mut guard = shard.lock().expect("cache lock");
                if guard.len() >= SHARD_CAPACITY {
                    guard.clear();
                }
                guard.insert(key, d);
                d
            }
        }
    }

    pub fn distance_by_key(&self, a: &str, b: &str) -> Result<f64> {
        let i = self
            .graph
            .node_id(a)
            .ok_or_else(|| Error::UnknownTopic(a.to_string()))?;
        let j = self
            .graph
            .node_id(b)
            .ok_or_else(|| Error::UnknownTopic(b.to_string()))?;
        Ok(self.distance(i, j))
    }
}

/// Checked topic distance.
pub fn topic_distance(provider: &DistanceProvider, i: u32, j: u32) -> Result<f64> {
    let n = provider.graph().node_count() as u32;
    for t in [i, j] {
        if t >= n {
            return Err(Error::UnknownTopic(t.to_string()));
        }
    }
    Ok(provider.distance(i, j))
}

/// Dense symmetric distance matrix over a node subset.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub nodes: Vec<u32>,
    pub keys: Vec<String>,
    /// Row-major `n × n` values.
    pub values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.nodes.len() + b]
    }

    /// Upper-triangle entries in row-major order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                out.push(self.get(a, b));
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["topic".to_string()];
        header.extend(self.keys.iter().cloned());
        w.write_record(&header)?;
        let n = self.len();
        for a in 0..n {
            let mut rec = vec![self.keys[a].clone()];
            rec.extend((0..n).map(|b| self.get(a, b).to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_nodes(provider: &DistanceProvider, nodes: &[u32]) -> Result<()> {
    let n = provider.graph().node_count() as u32;
    match nodes.iter().find(|&&t| t >= n) {
        Some(t) => Err(Error::UnknownTopic(t.to_string())),
        None => Ok(()),
    }
}

/// Builds the distance matrix of `nodes`, refusing subsets larger than
/// `node_budget` (use [`write_distance_csv`] to stream those).
pub fn distance_matrix(provider: &DistanceProvider, nodes: &[u32], node_budget: usize) -> Result<DistanceMatrix> {
    if nodes.len() > node_budget {
        return Err(Error::NodeBudget {
            requested: nodes.len(),
            budget: node_budget,
        });
    }
    check_nodes(provider, nodes)?;
    let n = nodes.len();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|a| (0..n).map(move |b| provider.distance(nodes[a], nodes[b])))
        .collect();
    let keys = nodes
        .iter()
        .map(|&t| provider.graph().nodes()[t as usize].clone())
        .collect();
    Ok(DistanceMatrix {
        nodes: nodes.to_vec(),
        keys,
        values,
    })
}

/// Streams a distance matrix as CSV one row at a time.
pub fn write_distance_csv<W: Write>(provider: &DistanceProvider, nodes: &[u32], out: W) -> Result<()> {
    check_nodes(provider, nodes)?;
    let names = provider.graph().nodes();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["topic".to_string()];
    header.extend(nodes.iter().map(|&t| names[t as usize].clone()));
    w.write_record(&header)?;
    for &a in nodes {
        let row: Vec<f64> = nodes.par_iter().map(|&b| provider.distance(a, b)).collect();
        let mut rec = vec![names[a as usize].clone()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Pairwise correlations between distance matrices of several periods.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityTable {
    /// `all` followed by one label per period.
    pub labels: Vec<String>,
    /// Nodes connected in every graph; distances are compared over these.
    pub common_nodes: usize,
    /// Periods with fewer than two multi-topic papers.
    pub degenerate: Vec<bool>,
    /// Symmetric correlation matrix, `None` where undefined.
    pub correlations: Vec<Vec<Option<f64>>>,
}

/// Builds one graph per inclusive date range plus one over all papers and
/// correlates their upper-triangle distance vectors over the shared nodes.
pub fn period_stability(
    corpus: &Corpus,
    view: &CodeView,
    periods: &[(NaiveDate, NaiveDate)],
    kind: GraphKind,
    metric: DistanceMetric,
    node_budget: usize,
) -> Result<StabilityTable> {
    if periods.len() < 2 {
        return Err(Error::InsufficientData("period stability needs at least two periods".into()));
    }
    let mut graphs = vec![TopicGraph::build(kind, corpus, view, None)];
    let mut degenerate = vec![false];
    let mut labels = vec!["all".to_string()];
    for (from, to) in periods {
        let subset: Vec<u32> = corpus
            .papers()
            .iter()
            .enumerate()
            .filter(|(_, p)| p.date >= *from && p.date <= *to)
            .map(|(i, _)| i as u32)
            .collect();
        let multi = subset
            .iter()
            .filter(|&&p| view.paper_topics(p as usize).len() >= 2)
            .count();
        degenerate.push(multi < 2);
        labels.push(format!("{from}..{to}"));
        graphs.push(TopicGraph::build(kind, corpus, view, Some(&subset)));
    }

    let common: Vec<u32> = (0..view.topics().len() as u32)
        .filter(|&t| {
            graphs
                .iter()
                .zip(&degenerate)
                .all(|(g, &deg)| deg || g.is_connected(t))
        })
        .collect();
    let nodes = &common[..common.len().min(node_budget)];

    let vectors: Vec<Option<Vec<f64>>> = graphs
        .iter()
        .zip(&degenerate)
        .map(|(g, &deg)| {
            if deg {
                return Ok(None);
            }
            let provider = DistanceProvider::new(g, metric);
            Ok(Some(distance_matrix(&provider, nodes, node_budget)?.upper_triangle()))
        })
        .collect::<Result<_>>()?;

    let k = graphs.len();
    let mut correlations = vec![vec![None; k]; k];
    for a in 0..k {
        for b in a..k {
            let r = match (&vectors[a], &vectors[b]) {
                (Some(x), Some(y)) if a == b && x.len() >= 2 => Some(1.0),
                (Some(x), Some(y)) => pearson(x, y).ok(),
                _ => None,
            };
            correlations[a][b] = r;
            correlations[b][a] = r;
        }
    }
    Ok(StabilityTable {
        labels,
        common_nodes: nodes.len(),
        degenerate,
        correlations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CodeScheme, EligibilityFilter, Paper};
    use crate::topicgraph::{build_citation, build_cooccurrence};

    fn corpus(topics: &[&[&str]]) -> Corpus {
        let ps = topics
            .iter()
            .enumerate()
            .map(|(i, t)| Paper {
                paper_id: format!("p{i}"),
                date: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
                authors: vec!["x".into()],
                codes: t.iter().map(|s| s.to_string()).collect(),
                refs: vec![],
                institutions: None,
                covariates: Default::default(),
            })
            .collect();
        let f = EligibilityFilter {
            min_papers: 1,
            ..Default::default()
        };
        Corpus::from_papers(ps, &CodeScheme::default(), &f).unwrap()
    }

    #[test]
    fn path_graph_overlap_is_one() {
        let c = corpus(&[&["i", "k"], &["j", "k"]]);
        let g = build_cooccurrence(&c, c.scheme()).unwrap();
        let (i, j) = (g.node_id("i").unwrap(), g.node_id("j").unwrap());
        assert_eq!(weighted_overlap(&g, i, j), 1.0);
        let p = DistanceProvider::new(&g, DistanceMetric::WeightedOverlap);
        assert_eq!(p.distance(i, j), 0.0);
        assert_eq!(p.distance(i, i), 0.0);
    }

    #[test]
    fn disjoint_neighbourhoods_give_distance_one() {
        let c = corpus(&[&["a", "b"], &["c", "d"]]);
        let g = build_cooccurrence(&c, c.scheme()).unwrap();
        let (a, c_) = (g.node_id("a").unwrap(), g.node_id("c").unwrap());
        assert_eq!(weighted_overlap(&g, a, c_), 0.0);
        // a and b are connected only to each other: W = 0 so O = 0.
        let b = g.node_id("b").unwrap();
        assert_eq!(weighted_overlap(&g, a, b), 0.0);
        let p = DistanceProvider::new(&g, DistanceMetric::WeightedOverlap);
        assert_eq!(p.distance(a, c_), 1.0);
    }

    #[test]
    fn isolated_node_distance_one() {
        let c = corpus(&[&["a", "b"], &["z"]]);
        let g = build_cooccurrence(&c, c.scheme()).unwrap();
        let p = DistanceProvider::new(&g, DistanceMetric::WeightedOverlap);
        let z = g.node_id("z").unwrap();
        assert_eq!(p.distance(z, 0), 1.0);
        assert_eq!(p.distance(z, z), 0.0);
    }

    #[test]
    fn jaccard_counts_neighbours() {
        let c = corpus(&[&["a", "k", "m"], &["b", "k"]]);
        let g = build_cooccurrence(&c, c.scheme()).unwrap();
        let (a, b) = (g.node_id("a").unwrap(), g.node_id("b").unwrap());
        // Λa = {k, m}, Λb = {k}
        assert_eq!(jaccard_similarity(&g, a, b), 0.5);
    }

    #[test]
    fn sharded_cache_matches_dense() {
        let c = corpus(&[&["a", "b", "c"], &["b", "c", "d"], &["a", "d"], &["e", "a", "c"]]);
        let g = build_cooccurrence(&c, c.scheme()).unwrap();
        let dense = DistanceProvider::new(&g, DistanceMetric::WeightedOverlap);
        let sharded = DistanceProvider::with_dense_limit(&g, DistanceMetric::WeightedOverlap, 0);
        assert!(!sharded.is_dense());
        let n = g.node_count() as u32;
        for i in 0..n {
            for j in 0..n {
                assert_eq!(dense.distance(i, j), sharded.distance(j, i));
                assert_eq!(dense.distance(i, j), dense.distance(i, j));
            }
        }
    }

    #[test]
    fn directed_overlap_symmetric() {
        let mk = |id: &str, codes: &[&str], refs: &[&str]| Paper {
            paper_id: id.into(),
            date: NaiveDate::from_ymd_opt(2000, 1, 1).unwrap(),
            authors: vec!["x".into()],
            codes: codes.iter().map(|s| s.to_string()).collect(),
            refs: refs.iter().map(|s| s.to_string()).collect(),
            institutions: None,
            covariates: Default::default(),
        };
        let ps = vec![
            mk("q", &["c"], &[]),
            mk("p1", &["a"], &["q"]),
            mk("p2", &["b"], &["q"]),
        ];
        let f = EligibilityFilter {
            min_papers: 1,
            ..Default::default()
        };
        let c = Corpus::from_papers(ps, &CodeScheme::default(), &f).unwrap();
        let g = build_citation(&c, c.scheme()).unwrap();
        let (a, b) = (g.node_id("a").unwrap(), g.node_id("b").unwrap());
        // Shared out-neighbour c: O_out = 1, no in-neighbours: O_in = 0.
        assert_eq!(directed_overlap(&g, a, b), 0.5);
        assert_eq!(directed_overlap(&g, b, a), 0.5);
    }

    #[test]
    fn matrix_budget_and_single_node() {
        let c = corpus(&[&["a", "b"]]);
        let g = build_cooccurrence(&c, c.scheme()).unwrap();
        let p = DistanceProvider::new(&g, DistanceMetric::WeightedOverlap);
        let m = distance_matrix(&p, &[0], 10).unwrap();
        assert_eq!(m.values, vec![0.0]);
        assert!(matches!(distance_matrix(&p, &[0, 1], 1), Err(Error::NodeBudget { .. })));
        assert!(matches!(topic_distance(&p, 0, 7), Err(Error::UnknownTopic(_))));
    }
}
