//! Career trajectories, cohort comparisons and group transitions.

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::Serialize;

use super::exploration::{ed, ep, LookbackWindow, PaperDistanceMode};
use super::groups::{assign_groups, Group};
use crate::corpus::{elapsed_years, AuthorCareer, CodeView, Corpus};
use crate::error::{Error, Result};
use crate::stats::ks_two_sample;
use crate::topicgraph::TopicDistances;

/// Shared inputs for temporal analyses.
pub struct MetricContext<'a, D: TopicDistances + ?Sized> {
    pub corpus: &'a Corpus,
    pub view: &'a CodeView,
    pub distances: &'a D,
    pub window: LookbackWindow,
    pub mode: PaperDistanceMode,
}

impl<D: TopicDistances + ?Sized> MetricContext<'_, D> {
    pub fn ep_ed(&self, papers: &[u32]) -> (Option<f64>, Option<f64>) {
        (
            ep(self.corpus, self.view, papers, self.window),
            ed(self.corpus, self.view, papers, self.window, self.distances, self.mode),
        )
    }

    /// Papers of a career within its first `years` career years.
    pub fn within_years<'c>(&self, career: &'c AuthorCareer, years: u32) -> &'c [u32] {
        let k = career.papers.partition_point(|&p| {
            elapsed_years(career.first_date, self.corpus.paper(p as usize).date) < years as i64
        });
        &career.papers[..k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanCi {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
}

/// Mean with a normal-approximation 95% interval (`mean ± 1.96·SE`).
pub fn mean_ci(values: &[f64]) -> Option<MeanCi> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let se = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Some(MeanCi {
        mean,
        lower: mean - 1.96 * se,
        upper: mean + 1.96 * se,
        n,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryPoint {
    pub career_year: u32,
    pub ep: Option<MeanCi>,
    pub ed: Option<MeanCi>,
}

/// Cumulative EP/ED at the end of each career year `1..=max_year`, averaged
/// over authors whose careers span at least `max_year` years.
pub fn temporal_trajectories<D: TopicDistances + ?Sized>(
    ctx: &MetricContext<'_, D>,
    max_year: u32,
) -> Result<Vec<TrajectoryPoint>> {
    let corpus = ctx.corpus;
    let authors: Vec<&AuthorCareer> = corpus
        .careers()
        .iter()
        .filter(|c| {
            let last = corpus.paper(*c.papers.last().expect("nonempty career") as usize).date;
            elapsed_years(c.first_date, last) + 1 >= max_year as i64
        })
        .collect();
    if authors.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no author has a career of at least {max_year} years"
        )));
    }
    let per_author: Vec<Vec<(Option<f64>, Option<f64>)>> = authors
        .par_iter()
        .map(|c| (1..=max_year).map(|y| ctx.ep_ed(ctx.within_years(c, y))).collect())
        .collect();
    Ok((1..=max_year)
        .map(|y| {
            let idx = (y - 1) as usize;
            let eps: Vec<f64> = per_author.iter().filter_map(|v| v[idx].0).collect();
            let eds: Vec<f64> = per_author.iter().filter_map(|v| v[idx].1).collect();
            TrajectoryPoint {
                career_year: y,
                ep: mean_ci(&eps),
                ed: mean_ci(&eds),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct Cohort {
    pub label: String,
    pub ep: Vec<f64>,
    pub ed: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KsComparison {
    pub metric: &'static str,
    pub a: String,
    pub b: String,
    pub d: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CohortComparison {
    pub cohorts: Vec<Cohort>,
    pub tests: Vec<KsComparison>,
}

/// EP/ED within the first `horizon` career years for authors grouped by the
/// year of their first paper (inclusive ranges), with pairwise K-S tests.
pub fn cohort_compare<D: TopicDistances + ?Sized>(
    ctx: &MetricContext<'_, D>,
    cohorts: &[(i32, i32)],
    horizon: u32,
) -> Result<CohortComparison> {
    if cohorts.len() < 2 {
        return Err(Error::InsufficientData("cohort comparison needs two cohorts".into()));
    }
    let mut out = Vec::new();
    for &(from, to) in cohorts {
        let members: Vec<&AuthorCareer> = ctx
            .corpus
            .careers()
            .iter()
            .filter(|c| (from..=to).contains(&c.first_date.year()))
            .collect();
        let vals: Vec<(Option<f64>, Option<f64>)> = members
            .par_iter()
            .map(|c| ctx.ep_ed(ctx.within_years(c, horizon)))
            .collect();
        let cohort = Cohort {
            label: format!("{from}-{to}"),
            ep: vals.iter().filter_map(|v| v.0).collect(),
            ed: vals.iter().filter_map(|v| v.1).collect(),
        };
        if cohort.ep.is_empty() || cohort.ed.is_empty() {
            return Err(Error::InsufficientData(format!("cohort {} is empty", cohort.label)));
        }
        out.push(cohort);
    }
    let mut tests = Vec::new();
    for metric in ["ep", "ed"] {
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                let (x, y) = if metric == "ep" {
                    (&out[i].ep, &out[j].ep)
                } else {
                    (&out[i].ed, &out[j].ed)
                };
                let ks = ks_two_sample(x, y)?;
                tests.push(KsComparison {
                    metric,
                    a: out[i].label.clone(),
                    b: out[j].label.clone(),
                    d: ks.d,
                    p: ks.p,
                });
            }
        }
    }
    Ok(CohortComparison { cohorts: out, tests })
}

#[derive(Debug, Clone, Serialize)]
pub struct Transition {
    pub from: NaiveDate,
    pub to: NaiveDate,
    /// `counts[a][b]`: authors in group `a` at `from` and `b` at `to` (A..D order).
    pub counts: [[usize; 4]; 4],
    pub stay_rate: [Option<f64>; 4],
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupTransitions {
    pub snapshots: Vec<NaiveDate>,
    /// Per snapshot, `(author_id, group)` for authors classified there.
    pub membership: Vec<Vec<(String, Group)>>,
    pub transitions: Vec<Transition>,
    /// Share of authors labelled at every snapshot who never changed group.
    pub persistence: Option<f64>,
}

fn group_index(g: Group) -> Option<usize> {
    match g {
        Group::A => Some(0),
        Group::B => Some(1),
        Group::C => Some(2),
        Group::D => Some(3),
        Group::Excluded => None,
    }
}

/// Groups authors at each snapshot using only papers dated before it.
pub fn group_transitions<D: TopicDistances + ?Sized>(
    ctx: &MetricContext<'_, D>,
    snapshots: &[NaiveDate],
    q_percent: f64,
) -> Result<GroupTransitions> {
    if snapshots.len() < 2 {
        return Err(Error::InsufficientData("group transitions need two snapshots".into()));
    }
    let careers = ctx.corpus.careers();
    let mut membership: Vec<Vec<Option<Group>>> = Vec::new();
    let mut labels = Vec::new();
    for &snap in snapshots {
        let metrics: Vec<Option<(f64, f64)>> = careers
            .par_iter()
            .map(|c| {
                let k = c
                    .papers
                    .partition_point(|&p| ctx.corpus.paper(p as usize).date < snap);
                match ctx.ep_ed(&c.papers[..k]) {
                    (Some(e), Some(d)) => Some((e, d)),
                    _ => None,
                }
            })
            .collect();
        let idx: Vec<usize> = (0..careers.len()).filter(|&i| metrics[i].is_some()).collect();
        let ep: Vec<f64> = idx.iter().map(|&i| metrics[i].unwrap().0).collect();
        let ed: Vec<f64> = idx.iter().map(|&i| metrics[i].unwrap().1).collect();
        let assignment = assign_groups(&ep, &ed, q_percent);
        let mut m = vec![None; careers.len()];
        for (&i, g) in idx.iter().zip(assignment.groups) {
            m[i] = Some(g);
        }
        labels.push(
            idx.iter()
                .map(|&i| (careers[i].author_id.clone(), m[i].expect("assigned")))
                .collect(),
        );
        membership.push(m);
    }

    let mut transitions = Vec::new();
    for s in 1..snapshots.len() {
        let mut counts = [[0usize; 4]; 4];
        for i in 0..careers.len() {
            let from = membership[s - 1][i].and_then(group_index);
            let to = membership[s][i].and_then(group_index);
            if let (Some(a), Some(b)) = (from, to) {
                counts[a][b] += 1;
            }
        }
        let mut stay_rate = [None; 4];
        for (g, row) in counts.iter().enumerate() {
            let total: usize = row.iter().sum();
            if total > 0 {
                stay_rate[g] = Some(row[g] as f64 / total as f64);
            }
        }
        transitions.push(Transition {
            from: snapshots[s - 1],
            to: snapshots[s],
            counts,
            stay_rate,
        });
    }

    let mut always = 0;
    let mut same = 0;
    for i in 0..careers.len() {
        let seq: Option<Vec<usize>> = membership.iter().map(|m| m[i].and_then(group_index)).collect();
        if let Some(seq) = seq {
            always += 1;
            if seq.iter().all(|&g| g == seq[0]) {
                same += 1;
            }
        }
    }
    Ok(GroupTransitions {
        snapshots: snapshots.to_vec(),
        membership: labels,
        transitions,
        persistence: (always > 0).then(|| same as f64 / always as f64),
    })
}
