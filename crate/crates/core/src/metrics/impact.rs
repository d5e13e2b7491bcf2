//! Per-paper impact values and their aggregation over a career side.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{CodeView, Corpus};

/// `ln(1 + count)`.
pub fn log_citations(count: u32) -> f64 {
    (count as f64).ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpactMeasure {
    #[default]
    LogC5,
    LogC10,
    NormalizedV1,
    NormalizedV2,
    PercentileMax,
    PercentileMean,
    MaxLogC5,
    MaxLogC10,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    Mean,
    Max,
}

impl ImpactMeasure {
    pub const ALL: [ImpactMeasure; 8] = [
        ImpactMeasure::LogC5,
        ImpactMeasure::LogC10,
        ImpactMeasure::NormalizedV1,
        ImpactMeasure::NormalizedV2,
        ImpactMeasure::PercentileMax,
        ImpactMeasure::PercentileMean,
        ImpactMeasure::MaxLogC5,
        ImpactMeasure::MaxLogC10,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ImpactMeasure::LogC5 => "log_c5",
            ImpactMeasure::LogC10 => "log_c10",
            ImpactMeasure::NormalizedV1 => "normalized_v1",
            ImpactMeasure::NormalizedV2 => "normalized_v2",
            ImpactMeasure::PercentileMax => "percentile_max",
            ImpactMeasure::PercentileMean => "percentile_mean",
            ImpactMeasure::MaxLogC5 => "max_log_c5",
            ImpactMeasure::MaxLogC10 => "max_log_c10",
        }
    }

    /// How future-side values are aggregated. Past-side values always use the mean.
    pub fn future_aggregate(self) -> Aggregate {
        match self {
            ImpactMeasure::MaxLogC5 | ImpactMeasure::MaxLogC10 => Aggregate::Max,
            _ => Aggregate::Mean,
        }
    }
}

/// `c_raw / e`, where `e` is the arithmetic (or harmonic) mean of the
/// per-area expected values `e_i`. `None` when `e` is zero or undefined.
pub fn normalized_citations(c_raw: f64, e_i: &[f64], harmonic: bool) -> Option<f64> {
    if e_i.is_empty() {
        return None;
    }
    let n = e_i.len() as f64;
    let e = if harmonic {
        if e_i.iter().any(|&x| x <= 0.0) {
            return None;
        }
        n / e_i.iter().map(|x| 1.0 / x).sum::<f64>()
    } else {
        e_i.iter().sum::<f64>() / n
    };
    (e > 0.0).then(|| c_raw / e)
}

/// Corpus-wide area/year tallies shared by impact normalisation and
/// area popularity.
#[derive(Debug, Clone)]
pub struct AreaYearStats {
    papers_per_year: HashMap<i32, usize>,
    /// Papers per (area, year) carrying the area at least once.
    area_papers: HashMap<(u32, i32), Vec<u32>>,
}

impl AreaYearStats {
    pub fn build(corpus: &Corpus, view: &CodeView) -> Self {
        let mut papers_per_year: HashMap<i32, usize> = HashMap::new();
        let mut area_papers: HashMap<(u32, i32), Vec<u32>> = HashMap::new();
        for (i, p) in corpus.papers().iter().enumerate() {
            let y = p.year();
            *papers_per_year.entry(y).or_default() += 1;
            for &a in view.paper_areas(i) {
                area_papers.entry((a, y)).or_default().push(i as u32);
            }
        }
        Self {
            papers_per_year,
            area_papers,
        }
    }

    /// Share of the year's papers associated with the area.
    pub fn popularity(&self, area: u32, year: i32) -> f64 {
        let total = self.papers_per_year.get(&year).copied().unwrap_or(0);
        if total == 0 {
            return 0.0;
        }
        let n = self.area_papers.get(&(area, year)).map_or(0, Vec::len);
        n as f64 / total as f64
    }

    pub fn stratum(&self, area: u32, year: i32) -> &[u32] {
        self.area_papers
            .get(&(area, year))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }
}

/// Per-paper impact values for one measure.
#[derive(Debug, Clone)]
pub struct PaperImpact {
    pub measure: ImpactMeasure,
    pub values: Vec<Option<f64>>,
    /// Papers dropped because their normalising factor was zero.
    pub zero_factor: usize,
}

impl PaperImpact {
    pub fn build(corpus: &Corpus, view: &CodeView, measure: ImpactMeasure) -> Self {
        let n = corpus.len();
        let log5: Vec<f64> = (0..n).map(|i| log_citations(corpus.c5(i))).collect();
        let mut zero_factor = 0;
        let values = match measure {
            ImpactMeasure::LogC5 | ImpactMeasure::MaxLogC5 => log5.into_iter().map(Some).collect(),
            ImpactMeasure::LogC10 | ImpactMeasure::MaxLogC10 => {
                (0..n).map(|i| Some(log_citations(corpus.c10(i)))).collect()
            }
            ImpactMeasure::NormalizedV1 | ImpactMeasure::NormalizedV2 => {
                let stats = AreaYearStats::build(corpus, view);
                let v2 = measure == ImpactMeasure::NormalizedV2;
                let mut e_cache: HashMap<(u32, i32), f64> = HashMap::new();
                (0..n)
                    .map(|i| {
                        let year = corpus.paper(i).year();
                        let list = if v2 { view.paper_areas(i) } else { view.paper_area_list(i) };
                        if list.is_empty() {
                            return None;
                        }
                        let e_i: Vec<f64> = list
                            .iter()
                            .map(|&a| {
                                *e_cache.entry((a, year)).or_insert_with(|| {
                                    stratum_mean(&stats, view, &log5, a, year, v2)
                                })
                            })
                            .collect();
                        let v = normalized_citations(log5[i], &e_i, v2);
                        if v.is_none() {
                            zero_factor += 1;
                        }
                        v
                    })
                    .collect()
            }
            ImpactMeasure::PercentileMax | ImpactMeasure::PercentileMean => {
                let stats = AreaYearStats::build(corpus, view);
                let use_max = measure == ImpactMeasure::PercentileMax;
                (0..n)
                    .map(|i| {
                        let year = corpus.paper(i).year();
                        let pcts: Vec<f64> = view
                            .paper_areas(i)
                            .iter()
                            .map(|&a| {
                                let s = stats.stratum(a, year);
                                let below = s.iter().filter(|&&q| log5[q as usize] < log5[i]).count();
                                100.0 * below as f64 / s.len() as f64
                            })
                            .collect();
                        if pcts.is_empty() {
                            None
                        } else if use_max {
                            pcts.into_iter().reduce(f64::max)
                        } else {
                            Some(pcts.iter().sum::<f64>() / pcts.len() as f64)
                        }
                    })
                    .collect()
            }
        };
        Self {
            measure,
            values,
            zero_factor,
        }
    }

    pub fn value(&self, paper: usize) -> Option<f64> {
        self.values[paper]
    }

    /// Aggregates defined values over a paper list; `None` if none is defined.
    pub fn aggregate(&self, papers: &[u32], how: Aggregate) -> Option<f64> {
        let vals = papers.iter().filter_map(|&p| self.values[p as usize]);
        match how {
            Aggregate::Max => vals.reduce(f64::max),
            Aggregate::Mean => {
                let (sum, n) = vals.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
                (n > 0).then(|| sum / n as f64)
            }
        }
    }
}

/// Mean log-c5 of the papers of one year carrying an area. With fractional
/// weighting each paper counts by the share of its area list taken by the area.
fn stratum_mean(stats: &AreaYearStats, view: &CodeView, log5: &[f64], area: u32, year: i32, weighted: bool) -> f64 {
    let papers = stats.stratum(area, year);
    let mut num = 0.0;
    let mut den = 0.0;
    for &q in papers {
        let f = if weighted {
            let list = view.paper_area_list(q as usize);
            list.iter().filter(|&&a| a == area).count() as f64 / list.len() as f64
        } else {
            1.0
        };
        num += f * log5[q as usize];
        den += f;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}
