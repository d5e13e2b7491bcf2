//! Per-author analysis rows: metrics, impact, covariates and group labels.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use chrono::Datelike;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::exploration::{ed_detail, ep, LookbackWindow, PaperDistanceMode};
use super::groups::{assign_groups, Group};
use super::impact::{AreaYearStats, ImpactMeasure, PaperImpact};
use super::split::{split_author, Eligibility, Exclusion, SplitPoint};
use crate::corpus::{AuthorCareer, CodeView, Corpus};
use crate::error::{Error, Result};
use crate::topicgraph::TopicDistances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub window: LookbackWindow,
    pub split: SplitPoint,
    pub eligibility: Eligibility,
    pub impact: ImpactMeasure,
    pub distance_mode: PaperDistanceMode,
    /// Percent; 50 splits everyone into high/low.
    pub group_quantile: f64,
    pub ivy_institutions: BTreeSet<String>,
    /// Papers per author consulted for code importation.
    pub importation_lookback: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            window: LookbackWindow::default(),
            split: SplitPoint::default(),
            eligibility: Eligibility::default(),
            impact: ImpactMeasure::default(),
            distance_mode: PaperDistanceMode::default(),
            group_quantile: 50.0,
            ivy_institutions: BTreeSet::new(),
            importation_lookback: 5,
        }
    }
}

/// One eligible author at one split point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuthorAnalysisRow {
    pub author_id: String,
    pub ep_past: f64,
    pub ed_past: f64,
    pub ep_future: Option<f64>,
    pub ed_future: Option<f64>,
    pub logcit_past: f64,
    pub logcit_future: f64,
    pub p_past: usize,
    pub p_future: usize,
    pub year_first: i32,
    pub area_first: String,
    pub group: Group,
    pub group_future: Group,
    /// Side-prefixed covariates (`past.team_size`, `future.ivy`, ...); `None` = missing.
    pub covariates: BTreeMap<String, Option<f64>>,
    pub attributes: BTreeMap<String, String>,
}

/// Numeric columns every row carries.
pub const CORE_NUMERIC: [&str; 9] = [
    "logcit_past",
    "logcit_future",
    "p_past",
    "p_future",
    "ep_past",
    "ed_past",
    "ep_future",
    "ed_future",
    "year_first",
];

impl AuthorAnalysisRow {
    /// Numeric variable by name; group dummies are available as `group_A` etc.
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "logcit_past" => Some(self.logcit_past),
            "logcit_future" => Some(self.logcit_future),
            "p_past" => Some(self.p_past as f64),
            "p_future" => Some(self.p_future as f64),
            "ep_past" => Some(self.ep_past),
            "ed_past" => Some(self.ed_past),
            "ep_future" => self.ep_future,
            "ed_future" => self.ed_future,
            "year_first" => Some(self.year_first as f64),
            _ => {
                if let Some(g) = name.strip_prefix("group_") {
                    return Group::parse(g).map(|g| f64::from(u8::from(self.group == g)));
                }
                self.covariates.get(name).copied().flatten()
            }
        }
    }

    /// Categorical variable by name.
    pub fn category(&self, name: &str) -> Option<String> {
        match name {
            "year_first" => Some(self.year_first.to_string()),
            "area_first" => Some(self.area_first.clone()),
            "group" => Some(self.group.as_str().to_string()),
            "group_future" => Some(self.group_future.as_str().to_string()),
            _ => name
                .strip_prefix("attr.")
                .and_then(|k| self.attributes.get(k).cloned()),
        }
    }

    pub fn has_variable(&self, name: &str) -> bool {
        CORE_NUMERIC.contains(&name)
            || self.covariates.contains_key(name)
            || name.starts_with("group_")
            || matches!(name, "area_first" | "group" | "group_future")
            || name.strip_prefix("attr.").is_some_and(|k| self.attributes.contains_key(k))
    }

    /// Sets a numeric variable; used by perturbation and shuffles.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "logcit_past" => self.logcit_past = value,
            "logcit_future" => self.logcit_future = value,
            "ep_past" => self.ep_past = value,
            "ed_past" => self.ed_past = value,
            "ep_future" => self.ep_future = Some(value),
            "ed_future" => self.ed_future = Some(value),
            _ => match self.covariates.get_mut(name) {
                Some(slot) => *slot = Some(value),
                None => return Err(Error::UnknownColumn(name.to_string())),
            },
        }
        Ok(())
    }
}

/// Analysis rows plus bookkeeping for one configuration.
#[derive(Debug, Clone)]
pub struct RowSet {
    pub rows: Vec<AuthorAnalysisRow>,
    pub exclusions: BTreeMap<String, usize>,
    pub undefined_distances: usize,
    pub degenerate_ep: bool,
    pub degenerate_ed: bool,
}

impl RowSet {
    pub fn from_rows(rows: Vec<AuthorAnalysisRow>) -> Self {
        Self {
            rows,
            exclusions: BTreeMap::new(),
            undefined_distances: 0,
            degenerate_ep: false,
            degenerate_ed: false,
        }
    }

    pub fn covariate_names(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.rows.iter().flat_map(|r| r.covariates.keys()).collect();
        set.into_iter().cloned().collect()
    }

    pub fn attribute_names(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.rows.iter().flat_map(|r| r.attributes.keys()).collect();
        set.into_iter().cloned().collect()
    }

    /// Re-labels groups from current EP/ED values.
    pub fn regroup(&mut self, q_percent: f64) {
        let ep: Vec<f64> = self.rows.iter().map(|r| r.ep_past).collect();
        let ed: Vec<f64> = self.rows.iter().map(|r| r.ed_past).collect();
        let a = assign_groups(&ep, &ed, q_percent);
        for (r, g) in self.rows.iter_mut().zip(a.groups) {
            r.group = g;
        }
        self.degenerate_ep = a.degenerate_ep;
        self.degenerate_ed = a.degenerate_ed;

        let idx: Vec<usize> = (0..self.rows.len())
            .filter(|&i| self.rows[i].ep_future.is_some() && self.rows[i].ed_future.is_some())
            .collect();
        let ep: Vec<f64> = idx.iter().map(|&i| self.rows[i].ep_future.unwrap()).collect();
        let ed: Vec<f64> = idx.iter().map(|&i| self.rows[i].ed_future.unwrap()).collect();
        let a = assign_groups(&ep, &ed, q_percent);
        for r in &mut self.rows {
            r.group_future = Group::Excluded;
        }
        for (&i, g) in idx.iter().zip(a.groups) {
            self.rows[i].group_future = g;
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let covs = self.covariate_names();
        let attrs = self.attribute_names();
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = [
            "author_id",
            "group",
            "group_future",
            "year_first",
            "area_first",
            "p_past",
            "p_future",
            "logcit_past",
            "logcit_future",
            "ep_past",
            "ed_past",
            "ep_future",
            "ed_future",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend(covs.iter().cloned());
        header.extend(attrs.iter().map(|a| format!("attr.{a}")));
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let mut rec = vec![
                r.author_id.clone(),
                r.group.to_string(),
                r.group_future.to_string(),
                r.year_first.to_string(),
                r.area_first.clone(),
                r.p_past.to_string(),
                r.p_future.to_string(),
                r.logcit_past.to_string(),
                r.logcit_future.to_string(),
                r.ep_past.to_string(),
                r.ed_past.to_string(),
                opt(r.ep_future),
                opt(r.ed_future),
            ];
            rec.extend(covs.iter().map(|c| opt(r.covariates.get(c).copied().flatten())));
            rec.extend(attrs.iter().map(|a| r.attributes.get(a).cloned().unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Shared inputs for row construction.
pub struct RowContext<'a, D: TopicDistances + ?Sized> {
    pub corpus: &'a Corpus,
    pub view: &'a CodeView,
    pub distances: &'a D,
    pub impact: &'a PaperImpact,
    pub area_stats: &'a AreaYearStats,
}

/// Most frequent area of the first paper that has any; ties go to the smallest key.
pub fn area_first(view: &CodeView, papers: &[u32]) -> String {
    for &p in papers {
        let list = view.paper_area_list(p as usize);
        if list.is_empty() {
            continue;
        }
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for &a in list {
            *counts.entry(a).or_default() += 1;
        }
        let best = counts
            .iter()
            .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(x.0)))
            .map(|(&a, _)| a)
            .expect("nonempty");
        return view.areas()[best as usize].clone();
    }
    String::new()
}

/// `I_other / (I_focal + I_other)` for one paper at one code level, or `None`
/// when the paper is solo or neither side imports any code.
pub fn importation_contribution(
    corpus: &Corpus,
    author: &str,
    paper: u32,
    lookback: usize,
    codes_of: impl Fn(usize) -> Vec<u32>,
) -> Option<f64> {
    let p = corpus.paper(paper as usize);
    if p.authors.len() < 2 {
        return None;
    }
    let recent_codes = |a: &str| -> Vec<u32> {
        let list = corpus.author_papers(a);
        let pos = list.partition_point(|&q| q < paper);
        let mut out: Vec<u32> = list[pos.saturating_sub(lookback)..pos]
            .iter()
            .flat_map(|&q| codes_of(q as usize))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    };
    let current = codes_of(paper as usize);
    let focal = recent_codes(author);
    let mut others: Vec<u32> = p
        .authors
        .iter()
        .filter(|a| a.as_str() != author)
        .flat_map(|a| recent_codes(a))
        .collect();
    others.sort_unstable();
    others.dedup();
    let i_focal = current.iter().filter(|c| focal.binary_search(c).is_ok()).count();
    let i_other = current.iter().filter(|c| others.binary_search(c).is_ok()).count();
    importation_ratio(i_focal, i_other)
}

pub fn importation_ratio(i_focal: usize, i_other: usize) -> Option<f64> {
    let total = i_focal + i_other;
    (total > 0).then(|| i_other as f64 / total as f64)
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Side-level covariates (without prefix) for an author's papers.
pub fn side_covariates<D: TopicDistances + ?Sized>(
    ctx: &RowContext<'_, D>,
    author: &str,
    papers: &[u32],
    config: &AnalysisConfig,
) -> BTreeMap<String, Option<f64>> {
    let corpus = ctx.corpus;
    let view = ctx.view;
    let mut out = BTreeMap::new();
    let pop = |p: u32, use_max: bool| -> Option<f64> {
        let year = corpus.paper(p as usize).date.year();
        let vals = view
            .paper_areas(p as usize)
            .iter()
            .map(|&a| ctx.area_stats.popularity(a, year));
        if use_max {
            vals.reduce(f64::max)
        } else {
            let v: Vec<f64> = vals.collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        }
    };
    out.insert("popularity_mean".into(), mean_of(papers.iter().map(|&p| pop(p, false))));
    out.insert("popularity_max".into(), mean_of(papers.iter().map(|&p| pop(p, true))));
    out.insert(
        "team_size".into(),
        mean_of(papers.iter().map(|&p| Some(corpus.paper(p as usize).authors.len() as f64))),
    );
    out.insert(
        "lead_author".into(),
        mean_of(papers.iter().map(|&p| {
            let a = &corpus.paper(p as usize).authors;
            let lead = a.first().map(String::as_str) == Some(author) || a.last().map(String::as_str) == Some(author);
            Some(f64::from(u8::from(lead)))
        })),
    );
    let lb = config.importation_lookback;
    out.insert(
        "import_area".into(),
        mean_of(papers.iter().map(|&p| {
            importation_contribution(corpus, author, p, lb, |q| view.paper_areas(q).to_vec())
        })),
    );
    out.insert(
        "import_topic".into(),
        mean_of(papers.iter().map(|&p| {
            importation_contribution(corpus, author, p, lb, |q| view.paper_topics(q).to_vec())
        })),
    );

    let mut institutions: BTreeSet<&str> = BTreeSet::new();
    let mut with_info = 0usize;
    for &p in papers {
        let paper = corpus.paper(p as usize);
        if let Some(inst) = &paper.institutions {
            if let Some(pos) = paper.authors.iter().position(|a| a == author) {
                with_info += 1;
                institutions.extend(inst[pos].iter().map(String::as_str));
            }
        }
    }
    let (change, ivy) = if with_info == 0 {
        (None, None)
    } else {
        let ivy = institutions.iter().any(|i| config.ivy_institutions.contains(*i));
        (
            Some(institutions.len() as f64 / with_info as f64),
            Some(f64::from(u8::from(ivy))),
        )
    };
    out.insert("institution_change".into(), change);
    out.insert("ivy".into(), ivy);

    let mut ext: BTreeSet<&String> = BTreeSet::new();
    for &p in papers {
        ext.extend(corpus.paper(p as usize).covariates.keys());
    }
    for name in ext {
        let v = mean_of(
            papers
                .iter()
                .map(|&p| corpus.paper(p as usize).covariates.get(name).copied()),
        );
        out.insert(format!("ext.{name}"), v);
    }
    out
}

fn row_for<D: TopicDistances + ?Sized>(
    ctx: &RowContext<'_, D>,
    career: &AuthorCareer,
    config: &AnalysisConfig,
) -> std::result::Result<(AuthorAnalysisRow, usize), Exclusion> {
    let (past, future) = split_author(ctx.corpus, career, config.split, config.eligibility)?;
    let (corpus, view) = (ctx.corpus, ctx.view);
    let ep_past = ep(corpus, view, past, config.window).ok_or(Exclusion::UndefinedMetric)?;
    let edp = ed_detail(corpus, view, past, config.window, ctx.distances, config.distance_mode);
    let ed_past = edp.value.ok_or(Exclusion::UndefinedMetric)?;
    let ep_future = ep(corpus, view, future, config.window);
    let edf = ed_detail(corpus, view, future, config.window, ctx.distances, config.distance_mode);

    let logcit_past = ctx
        .impact
        .aggregate(past, super::impact::Aggregate::Mean)
        .ok_or(Exclusion::UndefinedImpact)?;
    let logcit_future = ctx
        .impact
        .aggregate(future, config.impact.future_aggregate())
        .ok_or(Exclusion::UndefinedImpact)?;

    let mut covariates = BTreeMap::new();
    for (side, papers) in [("past", past), ("future", future)] {
        for (k, v) in side_covariates(ctx, &career.author_id, papers, config) {
            covariates.insert(format!("{side}.{k}"), v);
        }
    }

    let row = AuthorAnalysisRow {
        author_id: career.author_id.clone(),
        ep_past,
        ed_past,
        ep_future,
        ed_future: edf.value,
        logcit_past,
        logcit_future,
        p_past: past.len(),
        p_future: future.len(),
        year_first: career.first_date.year(),
        area_first: area_first(view, &career.papers),
        group: Group::Excluded,
        group_future: Group::Excluded,
        covariates,
        attributes: career.attributes.clone(),
    };
    Ok((row, edp.undefined))
}

/// Builds one row per eligible author and assigns groups.
pub fn build_rows<D: TopicDistances + ?Sized>(ctx: &RowContext<'_, D>, config: &AnalysisConfig) -> RowSet {
    let results: Vec<_> = ctx
        .corpus
        .careers()
        .par_iter()
        .map(|c| row_for(ctx, c, config))
        .collect();
    let mut rows = Vec::new();
    let mut exclusions: BTreeMap<String, usize> = BTreeMap::new();
    let mut undefined = 0;
    for r in results {
        match r {
            Ok((row, u)) => {
                rows.push(row);
                undefined += u;
            }
            Err(e) => *exclusions.entry(e.name().to_string()).or_default() += 1,
        }
    }
    let mut set = RowSet {
        rows,
        exclusions,
        undefined_distances: undefined,
        degenerate_ep: false,
        degenerate_ed: false,
    };
    set.regroup(config.group_quantile);
    set
}

/// Convenience wrapper that builds impact and area tables itself.
pub fn analysis_rows<D: TopicDistances + ?Sized>(
    corpus: &Corpus,
    view: &CodeView,
    distances: &D,
    config: &AnalysisConfig,
) -> RowSet {
    let impact = PaperImpact::build(corpus, view, config.impact);
    let area_stats = AreaYearStats::build(corpus, view);
    let ctx = RowContext {
        corpus,
        view,
        distances,
        impact: &impact,
        area_stats: &area_stats,
    };
    build_rows(&ctx, config)
}
