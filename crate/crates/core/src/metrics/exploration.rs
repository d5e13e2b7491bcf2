//! Exploration propensity (EP) and exploration distance (ED).

use serde::{Deserialize, Serialize};

use crate::corpus::{CodeView, Corpus, DAYS_PER_YEAR};
use crate::topicgraph::TopicDistances;

/// Which earlier papers a paper is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum LookbackWindow {
    /// The `J` immediately preceding papers.
    Papers(usize),
    /// Papers dated in `[date - K years, date)`.
    Years(u32),
    /// Every preceding paper.
    All,
}

impl Default for LookbackWindow {
    fn default() -> Self {
        LookbackWindow::Papers(5)
    }
}

impl LookbackWindow {
    pub fn label(&self) -> String {
        match self {
            LookbackWindow::Papers(j) => format!("papers:{j}"),
            LookbackWindow::Years(k) => format!("years:{k}"),
            LookbackWindow::All => "all".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaperDistanceMode {
    #[default]
    Mean,
    Hausdorff,
}

/// Index range `[start, pos)` of the look-back papers of `papers[pos]`.
pub fn lookback_range(corpus: &Corpus, papers: &[u32], pos: usize, window: LookbackWindow) -> (usize, usize) {
    match window {
        LookbackWindow::All => (0, pos),
        LookbackWindow::Papers(j) => (pos.saturating_sub(j), pos),
        LookbackWindow::Years(k) => {
            let date = corpus.paper(papers[pos] as usize).date;
            let span = k as f64 * DAYS_PER_YEAR;
            let end = papers[..pos].partition_point(|&p| corpus.paper(p as usize).date < date);
            let start = papers[..end]
                .partition_point(|&p| (date - corpus.paper(p as usize).date).num_days() as f64 > span);
            (start, end)
        }
    }
}

fn sorted_union<'a>(sets: impl Iterator<Item = &'a [u32]>) -> Vec<u32> {
    let mut out: Vec<u32> = sets.flatten().copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Exploratory flag for papers `2..=L` of a chronological paper list.
pub fn exploratory_flags(corpus: &Corpus, view: &CodeView, papers: &[u32], window: LookbackWindow) -> Vec<bool> {
    (1..papers.len())
        .map(|pos| {
            let (s, e) = lookback_range(corpus, papers, pos, window);
            let past = sorted_union(papers[s..e].iter().map(|&p| view.paper_areas(p as usize)));
            view.paper_areas(papers[pos] as usize)
                .iter()
                .any(|a| past.binary_search(a).is_err())
        })
        .collect()
}

/// Share of exploratory papers among papers `2..=L`; `None` for fewer than two papers.
pub fn ep(corpus: &Corpus, view: &CodeView, papers: &[u32], window: LookbackWindow) -> Option<f64> {
    if papers.len() < 2 {
        return None;
    }
    let flags = exploratory_flags(corpus, view, papers, window);
    Some(flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64)
}

/// Distance between a paper's topic set and a look-back topic set.
pub fn paper_distance<D: TopicDistances + ?Sized>(
    topics: &[u32],
    past: &[u32],
    provider: &D,
    mode: PaperDistanceMode,
) -> Option<f64> {
    if topics.is_empty() || past.is_empty() {
        return None;
    }
    match mode {
        PaperDistanceMode::Mean => {
            let mut sum = 0.0;
            for &t in topics {
                for &k in past {
                    sum += provider.distance(t, k);
                }
            }
            Some(sum / (topics.len() * past.len()) as f64)
        }
        PaperDistanceMode::Hausdorff => topics
            .iter()
            .map(|&t| past.iter().map(|&k| provider.distance(t, k)).fold(f64::INFINITY, f64::min))
            .reduce(f64::max),
    }
}

/// ED together with the number of papers whose distance was undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdDetail {
    pub value: Option<f64>,
    pub defined: usize,
    pub undefined: usize,
}

pub fn ed_detail<D: TopicDistances + ?Sized>(
    corpus: &Corpus,
    view: &CodeView,
    papers: &[u32],
    window: LookbackWindow,
    provider: &D,
    mode: PaperDistanceMode,
) -> EdDetail {
    let mut sum = 0.0;
    let mut defined = 0;
    let mut undefined = 0;
    for pos in 1..papers.len() {
        let (s, e) = lookback_range(corpus, papers, pos, window);
        let past = sorted_union(papers[s..e].iter().map(|&p| view.paper_topics(p as usize)));
        match paper_distance(view.paper_topics(papers[pos] as usize), &past, provider, mode) {
            Some(d) => {
                sum += d;
                defined += 1;
            }
            None => undefined += 1,
        }
    }
    EdDetail {
        value: (defined > 0).then(|| sum / defined as f64),
        defined,
        undefined,
    }
}

/// Mean paper distance over papers `2..=L`; `None` when no distance is defined.
pub fn ed<D: TopicDistances + ?Sized>(
    corpus: &Corpus,
    view: &CodeView,
    papers: &[u32],
    window: LookbackWindow,
    provider: &D,
    mode: PaperDistanceMode,
) -> Option<f64> {
    ed_detail(corpus, view, papers, window, provider, mode).value
}
