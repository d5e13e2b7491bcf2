//! Weighted topic graphs built from a corpus.
//!
//! Every contribution to an edge weight has the form `1/d` for an integer
//! `d`, so contributions are tallied as integer counts per `(edge, d)` and
//! only turned into floating point at the end. This makes the result
//! independent of paper order and thread scheduling, and lets co-occurrence
//! strengths come out as exact integers.

mod distance;

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use distance::{
    directed_overlap, distance_matrix, jaccard_similarity, period_stability, topic_distance,
    weighted_overlap, write_distance_csv, DistanceMatrix, DistanceMetric, DistanceProvider,
    StabilityTable, TopicDistances, DENSE_CACHE_MAX_NODES,
};

use crate::corpus::{CodeScheme, CodeView, Corpus};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    #[default]
    Cooccurrence,
    Citation,
    Cociting,
}

impl GraphKind {
    pub fn is_directed(self) -> bool {
        matches!(self, GraphKind::Citation)
    }

    pub fn name(self) -> &'static str {
        match self {
            GraphKind::Cooccurrence => "cooccurrence",
            GraphKind::Citation => "citation",
            GraphKind::Cociting => "cociting",
        }
    }
}

/// Sparse weighted topic graph. Node ids are the topic ids of the
/// [`CodeView`] the graph was built from.
#[derive(Debug, Clone)]
pub struct TopicGraph {
    kind: GraphKind,
    nodes: Vec<String>,
    /// Outgoing adjacency (all neighbours for undirected kinds), sorted by id.
    out_adj: Vec<Vec<(u32, f64)>>,
    /// Incoming adjacency; only populated for directed graphs.
    in_adj: Vec<Vec<(u32, f64)>>,
    s_out: Vec<f64>,
    s_in: Vec<f64>,
}

type Tally = HashMap<(u32, u32, u64), u64>;

fn merge(mut a: Tally, b: Tally) -> Tally {
    if a.len() < b.len() {
        return merge(b, a);
    }
    for (k, v) in b {
        *a.entry(k).or_default() += v;
    }
    a
}

/// Sums `count/d` terms in ascending `d` order, keeping the integer part exact.
fn exact_sum(terms: &[(u64, u64)]) -> f64 {
    let mut whole = 0u64;
    let mut frac = 0.0;
    for &(d, count) in terms {
        whole += count / d;
        frac += (count % d) as f64 / d as f64;
    }
    whole as f64 + frac
}

impl TopicGraph {
    /// Builds a graph over the papers in `subset` (all papers when `None`).
    pub fn build(kind: GraphKind, corpus: &Corpus, view: &CodeView, subset: Option<&[u32]>) -> Self {
        let all: Vec<u32>;
        let papers: &[u32] = match subset {
            Some(s) => s,
            None => {
                all = (0..corpus.len() as u32).collect();
                &all
            }
        };
        let tally = match kind {
            GraphKind::Cooccurrence => cooccurrence_tally(view, papers),
            GraphKind::Citation => citation_tally(corpus, view, papers),
            GraphKind::Cociting => cociting_tally(corpus, view, papers),
        };
        Self::from_tally(kind, view.topics().to_vec(), tally)
    }

    fn from_tally(kind: GraphKind, nodes: Vec<String>, tally: Tally) -> Self {
        let n = nodes.len();
        let directed = kind.is_directed();
        let mut entries: Vec<((u32, u32, u64), u64)> = tally.into_iter().collect();
        entries.sort_unstable();

        let mut node_terms: Vec<Vec<(u64, u64)>> = vec![Vec::new(); n];
        let mut in_terms: Vec<Vec<(u64, u64)>> = if directed { vec![Vec::new(); n] } else { Vec::new() };
        let mut out_adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        let mut in_adj: Vec<Vec<(u32, f64)>> = if directed { vec![Vec::new(); n] } else { Vec::new() };

        let mut start = 0;
        while start < entries.len() {
            let (a, b, _) = entries[start].0;
            let mut end = start;
            let mut terms = Vec::new();
            while end < entries.len() && entries[end].0 .0 == a && entries[end].0 .1 == b {
                let ((_, _, d), c) = entries[end];
                terms.push((d, c));
                end += 1;
            }
            let w = exact_sum(&terms);
            out_adj[a as usize].push((b, w));
            node_terms[a as usize].extend_from_slice(&terms);
            if directed {
                in_adj[b as usize].push((a, w));
                in_terms[b as usize].extend_from_slice(&terms);
            } else {
                out_adj[b as usize].push((a, w));
                node_terms[b as usize].extend_from_slice(&terms);
            }
            start = end;
        }

        let strengths = |terms: &mut Vec<Vec<(u64, u64)>>| -> Vec<f64> {
            terms
                .iter_mut()
                .map(|t| {
                    t.sort_unstable();
                    let mut merged: Vec<(u64, u64)> = Vec::with_capacity(t.len());
                    for &(d, c) in t.iter() {
                        match merged.last_mut() {
                            Some(last) if last.0 == d => last.1 += c,
                            _ => merged.push((d, c)),
                        }
                    }
                    exact_sum(&merged)
                })
                .collect()
        };
        let s_out = strengths(&mut node_terms);
        let s_in = if directed { strengths(&mut in_terms) } else { s_out.clone() };
        for adj in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            adj.sort_unstable_by_key(|e| e.0);
        }

        Self {
            kind,
            nodes,
            out_adj,
            in_adj,
            s_out,
            s_in,
        }
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn is_directed(&self) -> bool {
        self.kind.is_directed()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_id(&self, key: &str) -> Option<u32> {
        self.nodes
            .binary_search_by(|n| n.as_str().cmp(key))
            .ok()
            .map(|i| i as u32)
    }

    /// Neighbours of an undirected node, or out-neighbours of a directed one.
    pub fn neighbors(&self, i: u32) -> &[(u32, f64)] {
        &self.out_adj[i as usize]
    }

    pub fn out_neighbors(&self, i: u32) -> &[(u32, f64)] {
        &self.out_adj[i as usize]
    }

    pub fn in_neighbors(&self, i: u32) -> &[(u32, f64)] {
        if self.is_directed() {
            &self.in_adj[i as usize]
        } else {
            &self.out_adj[i as usize]
        }
    }

    /// Weight of edge `i -> j` (or `{i, j}`), zero when absent.
    pub fn weight(&self, i: u32, j: u32) -> f64 {
        let adj = &self.out_adj[i as usize];
        adj.binary_search_by_key(&j, |e| e.0)
            .map(|k| adj[k].1)
            .unwrap_or(0.0)
    }

    pub fn strength(&self, i: u32) -> f64 {
        self.s_out[i as usize]
    }

    pub fn out_strength(&self, i: u32) -> f64 {
        self.s_out[i as usize]
    }

    pub fn in_strength(&self, i: u32) -> f64 {
        self.s_in[i as usize]
    }

    /// Whether the node has any incident edge.
    pub fn is_connected(&self, i: u32) -> bool {
        !self.out_adj[i as usize].is_empty()
            || (self.is_directed() && !self.in_adj[i as usize].is_empty())
    }

    pub fn edge_count(&self) -> usize {
        let n: usize = self.out_adj.iter().map(Vec::len).sum();
        if self.is_directed() {
            n
        } else {
            n / 2
        }
    }

    /// Edges as `(src, dst, weight)`; undirected edges listed once with `src < dst`.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        let directed = self.is_directed();
        self.out_adj.iter().enumerate().flat_map(move |(i, adj)| {
            adj.iter()
                .filter(move |&&(j, _)| directed || (i as u32) < j)
                .map(move |&(j, w)| (i as u32, j, w))
        })
    }

    pub fn write_edges_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["src", "dst", "weight"])?;
        for (i, j, wt) in self.edges() {
            w.write_record([&self.nodes[i as usize], &self.nodes[j as usize], &wt.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_strengths_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node", "strength_out", "strength_in", "degree_out", "degree_in"])?;
        for i in 0..self.nodes.len() as u32 {
            w.write_record([
                self.nodes[i as usize].clone(),
                self.out_strength(i).to_string(),
                self.in_strength(i).to_string(),
                self.out_neighbors(i).len().to_string(),
                self.in_neighbors(i).len().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn cooccurrence_tally(view: &CodeView, papers: &[u32]) -> Tally {
    papers
        .par_iter()
        .fold(Tally::new, |mut acc, &p| {
            let topics = view.paper_topics(p as usize);
            let n = topics.len();
            if n >= 2 {
                let d = (n - 1) as u64;
                for (x, &a) in topics.iter().enumerate() {
                    for &b in &topics[x + 1..] {
                        *acc.entry((a, b, d)).or_default() += 1;
                    }
                }
            }
            acc
        })
        .reduce(Tally::new, merge)
}

fn citation_tally(corpus: &Corpus, view: &CodeView, papers: &[u32]) -> Tally {
    let mut member = vec![false; corpus.len()];
    for &p in papers {
        member[p as usize] = true;
    }
    papers
        .par_iter()
        .fold(Tally::new, |mut acc, &p| {
            let src = view.paper_topics(p as usize);
            let refs = corpus.refs(p as usize);
            if src.is_empty() || refs.is_empty() {
                return acc;
            }
            let r = refs.len() as u64;
            for &q in refs {
                if !member[q as usize] {
                    continue;
                }
                let dst = view.paper_topics(q as usize);
                if dst.is_empty() {
                    continue;
                }
                let d = src.len() as u64 * r * dst.len() as u64;
                for &a in src {
                    for &b in dst {
                        if a != b {
                            *acc.entry((a, b, d)).or_default() += 1;
                        }
                    }
                }
            }
            acc
        })
        .reduce(Tally::new, merge)
}

fn cociting_tally(corpus: &Corpus, view: &CodeView, papers: &[u32]) -> Tally {
    let mut member = vec![false; corpus.len()];
    for &p in papers {
        member[p as usize] = true;
    }
    (0..corpus.len())
        .into_par_iter()
        .fold(Tally::new, |mut acc, q| {
            let citers: Vec<u32> = corpus
                .citers(q)
                .iter()
                .copied()
                .filter(|&c| member[c as usize] && !view.paper_topics(c as usize).is_empty())
                .collect();
            for (x, &pi) in citers.iter().enumerate() {
                let ti = view.paper_topics(pi as usize);
                for &pj in &citers[x + 1..] {
                    let tj = view.paper_topics(pj as usize);
                    let d = ti.len() as u64 * tj.len() as u64;
                    for &a in ti {
                        for &b in tj {
                            if a != b {
                                *acc.entry((a.min(b), a.max(b), d)).or_default() += 1;
                            }
                        }
                    }
                }
            }
            acc
        })
        .reduce(Tally::new, merge)
}

fn view_for(corpus: &Corpus, scheme: &CodeScheme) -> Result<Option<CodeView>> {
    scheme.validate()?;
    Ok((scheme != corpus.scheme()).then(|| corpus.code_view(scheme)))
}

fn build_with(kind: GraphKind, corpus: &Corpus, scheme: &CodeScheme) -> Result<TopicGraph> {
    let owned = view_for(corpus, scheme)?;
    let view = owned.as_ref().unwrap_or(corpus.codes());
    Ok(TopicGraph::build(kind, corpus, view, None))
}

/// Topic co-occurrence graph: each paper with `n >= 2` distinct topics adds
/// `1/(n-1)` to every topic pair it contains.
pub fn build_cooccurrence(corpus: &Corpus, scheme: &CodeScheme) -> Result<TopicGraph> {
    build_with(GraphKind::Cooccurrence, corpus, scheme)
}

/// Directed topic citation graph: a citation from `p` to `q` adds
/// `1/(n_p * r_p * n_q)` to every edge from a topic of `p` to a different
/// topic of `q`, where `r_p` counts the in-corpus references of `p`.
pub fn build_citation(corpus: &Corpus, scheme: &CodeScheme) -> Result<TopicGraph> {
    build_with(GraphKind::Citation, corpus, scheme)
}

/// Co-citing graph: two papers citing the same paper add `1/(n_p * n_q)` to
/// every cross pair of their topics, once per shared reference.
pub fn build_cociting(corpus: &Corpus, scheme: &CodeScheme) -> Result<TopicGraph> {
    build_with(GraphKind::Cociting, corpus, scheme)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{EligibilityFilter, Paper};
    use chrono::NaiveDate;

    fn paper(id: &str, year: i32, codes: &[&str], refs: &[&str]) -> Paper {
        Paper {
            paper_id: id.into(),
            date: NaiveDate::from_ymd_opt(year, 1, 1).unwrap(),
            authors: vec!["x".into()],
            codes: codes.iter().map(|s| s.to_string()).collect(),
            refs: refs.iter().map(|s| s.to_string()).collect(),
            institutions: None,
            covariates: Default::default(),
        }
    }

    fn corpus(ps: Vec<Paper>) -> Corpus {
        let f = EligibilityFilter {
            min_papers: 1,
            ..Default::default()
        };
        Corpus::from_papers(ps, &CodeScheme::default(), &f).unwrap()
    }

    #[test]
    fn cooccurrence_two_papers() {
        let c = corpus(vec![
            paper("p1", 2000, &["t1", "t2", "t3"], &[]),
            paper("p2", 2001, &["t1", "t2"], &[]),
        ]);
        let g = build_cooccurrence(&c, &CodeScheme::default()).unwrap();
        let id = |k| g.node_id(k).unwrap();
        assert_eq!(g.weight(id("t1"), id("t2")), 1.5);
        assert_eq!(g.weight(id("t2"), id("t1")), 1.5);
        assert_eq!(g.weight(id("t1"), id("t3")), 0.5);
        assert_eq!(g.strength(id("t1")), 2.0);
        assert_eq!(g.strength(id("t3")), 1.0);
    }

    #[test]
    fn single_topic_papers_give_isolated_nodes() {
        let c = corpus(vec![paper("p1", 2000, &["a"], &[]), paper("p2", 2000, &["b", "b"], &[])]);
        let g = build_cooccurrence(&c, &CodeScheme::default()).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.strength(0), 0.0);
    }

    #[test]
    fn citation_weights() {
        let c = corpus(vec![
            paper("q", 2000, &["c"], &[]),
            paper("r", 2000, &["d"], &[]),
            paper("p", 2001, &["a", "b"], &["q", "r"]),
        ]);
        let g = build_citation(&c, &CodeScheme::default()).unwrap();
        let id = |k| g.node_id(k).unwrap();
        assert_eq!(g.weight(id("a"), id("c")), 0.25);
        assert_eq!(g.weight(id("b"), id("c")), 0.25);
        assert_eq!(g.weight(id("c"), id("a")), 0.0);
        assert_eq!(g.in_strength(id("c")), 0.5);
        assert_eq!(g.out_strength(id("a")), 0.5);

        let c = corpus(vec![paper("q", 2000, &["b"], &[]), paper("p", 2001, &["a"], &["q"])]);
        let g = build_citation(&c, &CodeScheme::default()).unwrap();
        assert_eq!(g.weight(g.node_id("a").unwrap(), g.node_id("b").unwrap()), 1.0);
    }

    #[test]
    fn no_citations_no_edges() {
        let c = corpus(vec![paper("p", 2000, &["a", "b"], &[])]);
        assert_eq!(build_citation(&c, &CodeScheme::default()).unwrap().edge_count(), 0);
        assert_eq!(build_cociting(&c, &CodeScheme::default()).unwrap().edge_count(), 0);
    }

    #[test]
    fn cociting_counts_each_shared_reference() {
        let c = corpus(vec![
            paper("q", 2000, &["z"], &[]),
            paper("r", 2000, &["z"], &[]),
            paper("p1", 2001, &["a"], &["q"]),
            paper("p2", 2001, &["b"], &["q"]),
        ]);
        let g = build_cociting(&c, &CodeScheme::default()).unwrap();
        let (a, b) = (g.node_id("a").unwrap(), g.node_id("b").unwrap());
        assert_eq!(g.weight(a, b), 1.0);

        let c = corpus(vec![
            paper("q", 2000, &["z"], &[]),
            paper("r", 2000, &["z"], &[]),
            paper("p1", 2001, &["a"], &["q", "r"]),
            paper("p2", 2001, &["b"], &["q", "r"]),
        ]);
        let g = build_cociting(&c, &CodeScheme::default()).unwrap();
        assert_eq!(g.weight(a, b), 2.0);
        assert_eq!(g.weight(b, a), 2.0);
    }

    #[test]
    fn exact_sum_keeps_integers() {
        assert_eq!(exact_sum(&[(3, 3), (2, 4)]), 3.0);
        assert_eq!(exact_sum(&[(2, 1), (4, 1)]), 0.75);
    }
}
