//! Null models: degree-preserving author–paper shuffles and outcome permutation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{Corpus, Paper};
use crate::error::{Error, Result};
use crate::metrics::{quantile, AuthorAnalysisRow};
use crate::stats::replicate_rng;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ShuffleReport {
    pub attempted: usize,
    pub accepted: usize,
    /// Calendar years with too few authorships to swap.
    pub unchanged_years: Vec<i32>,
}

/// Randomizes authorship within each calendar year by double-edge swaps,
/// keeping every author's yearly paper count and every paper's author count.
/// Swaps that would list an author twice on a paper are rejected.
pub fn null_paper_shuffle(corpus: &Corpus, seed: u64, swaps_per_edge: usize) -> Result<(Corpus, ShuffleReport)> {
    let mut papers = corpus.papers().to_vec();
    let mut by_year: BTreeMap<i32, Vec<(usize, usize)>> = BTreeMap::new();
    for (i, p) in papers.iter().enumerate() {
        for slot in 0..p.authors.len() {
            by_year.entry(p.year()).or_default().push((i, slot));
        }
    }
    let mut report = ShuffleReport::default();
    for (k, (year, edges)) in by_year.iter().enumerate() {
        let distinct_papers = {
            let mut v: Vec<usize> = edges.iter().map(|e| e.0).collect();
            v.dedup();
            v.len()
        };
        if edges.len() < 2 || distinct_papers < 2 {
            report.unchanged_years.push(*year);
            continue;
        }
        let mut rng = replicate_rng(seed, k as u64);
        let attempts = swaps_per_edge * edges.len();
        report.attempted += attempts;
        for _ in 0..attempts {
            let (p1, s1) = edges[rng.random_range(0..edges.len())];
            let (p2, s2) = edges[rng.random_range(0..edges.len())];
            if p1 == p2 {
                continue;
            }
            let a1 = &papers[p1].authors[s1];
            let a2 = &papers[p2].authors[s2];
            if a1 == a2 || papers[p2].authors.contains(a1) || papers[p1].authors.contains(a2) {
                continue;
            }
            let a1 = a1.clone();
            let a2 = std::mem::replace(&mut papers[p2].authors[s2], a1);
            papers[p1].authors[s1] = a2;
            let slot = |papers: &mut Vec<Paper>, p: usize, s: usize| {
                papers[p].institutions.as_mut().and_then(|v| v.get_mut(s)).map(std::mem::take)
            };
            let i1 = slot(&mut papers, p1, s1);
            let i2 = slot(&mut papers, p2, s2);
            let (back1, back2) = match (i1, i2) {
                (Some(x), Some(y)) => (Some(y), Some(x)),
                other => other,
            };
            if let Some(v) = back1 {
                papers[p1].institutions.as_mut().expect("taken above")[s1] = v;
            }
            if let Some(v) = back2 {
                papers[p2].institutions.as_mut().expect("taken above")[s2] = v;
            }
            report.accepted += 1;
        }
    }
    Ok((corpus.rebuilt_with(papers)?, report))
}

/// Permutes one numeric column across rows; every other column is untouched.
pub fn null_author_shuffle(rows: &[AuthorAnalysisRow], column: &str, seed: u64) -> Result<Vec<AuthorAnalysisRow>> {
    let mut values: Vec<f64> = rows
        .iter()
        .map(|r| r.get(column).ok_or_else(|| Error::MissingVariable(column.to_string())))
        .collect::<Result<_>>()?;
    values.shuffle(&mut replicate_rng(seed, 0));
    let mut out = rows.to_vec();
    for (r, v) in out.iter_mut().zip(values) {
        r.set(column, v)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullSummary {
    pub statistic: String,
    pub observed: f64,
    pub replicates: usize,
    pub failed: usize,
    /// Replicates with `|null| >= |observed|`.
    pub exceedances: usize,
    pub exceedance_rate: f64,
    pub null_mean: f64,
    pub null_abs_q95: f64,
    pub seed: u64,
}

/// Runs `replicate(i)` for `i in 0..replicates` in parallel and compares the
/// null statistics with the observed one.
pub fn null_distribution<F>(statistic: &str, observed: f64, replicates: usize, seed: u64, replicate: F) -> NullSummary
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let values: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|i| replicate(i).ok().filter(|v| v.is_finite()))
        .collect();
    let ok: Vec<f64> = values.iter().flatten().copied().collect();
    summarize_null(statistic, observed, &ok, replicates, seed)
}

pub fn summarize_null(statistic: &str, observed: f64, nulls: &[f64], replicates: usize, seed: u64) -> NullSummary {
    let exceed = nulls.iter().filter(|v| v.abs() >= observed.abs()).count();
    let abs: Vec<f64> = nulls.iter().map(|v| v.abs()).collect();
    NullSummary {
        statistic: statistic.to_string(),
        observed,
        replicates,
        failed: replicates - nulls.len(),
        exceedances: exceed,
        exceedance_rate: if nulls.is_empty() { f64::NAN } else { exceed as f64 / nulls.len() as f64 },
        null_mean: if nulls.is_empty() { f64::NAN } else { nulls.iter().sum::<f64>() / nulls.len() as f64 },
        null_abs_q95: if abs.is_empty() { f64::NAN } else { quantile(&abs, 0.95) },
        seed,
    }
}
