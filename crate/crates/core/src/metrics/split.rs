//! Splitting a career into past and future parts.

use serde::{Deserialize, Serialize};

use crate::corpus::{elapsed_years, AuthorCareer, Corpus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum SplitPoint {
    /// Past = papers within the first `N` career years.
    CareerYears(u32),
    /// Past = the first `M` papers.
    PaperCount(usize),
}

impl Default for SplitPoint {
    fn default() -> Self {
        SplitPoint::CareerYears(10)
    }
}

impl SplitPoint {
    pub fn value(&self) -> usize {
        match *self {
            SplitPoint::CareerYears(n) => n as usize,
            SplitPoint::PaperCount(m) => m,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SplitPoint::CareerYears(n) => format!("years:{n}"),
            SplitPoint::PaperCount(m) => format!("papers:{m}"),
        }
    }

    /// Minimum past papers when none is configured: 5 in year mode, `M` in count mode.
    pub fn default_min_past(&self) -> usize {
        match *self {
            SplitPoint::CareerYears(_) => 5,
            SplitPoint::PaperCount(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Eligibility {
    /// `None` uses [`SplitPoint::default_min_past`].
    pub min_past: Option<usize>,
    pub min_future: usize,
}

impl Default for Eligibility {
    fn default() -> Self {
        Self {
            min_past: None,
            min_future: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    TooFewPast,
    TooFewFuture,
    UndefinedMetric,
    UndefinedImpact,
}

impl Exclusion {
    pub fn name(self) -> &'static str {
        match self {
            Exclusion::TooFewPast => "too_few_past",
            Exclusion::TooFewFuture => "too_few_future",
            Exclusion::UndefinedMetric => "undefined_metric",
            Exclusion::UndefinedImpact => "undefined_impact",
        }
    }
}

/// Number of papers falling on the past side.
pub fn split_index(corpus: &Corpus, papers: &[u32], first: chrono::NaiveDate, split: SplitPoint) -> usize {
    match split {
        SplitPoint::PaperCount(m) => m.min(papers.len()),
        SplitPoint::CareerYears(n) => papers
            .partition_point(|&p| elapsed_years(first, corpus.paper(p as usize).date) < n as i64),
    }
}

/// Splits a career into `(past, future)` or reports why it is excluded.
pub fn split_author<'a>(
    corpus: &Corpus,
    career: &'a AuthorCareer,
    split: SplitPoint,
    eligibility: Eligibility,
) -> Result<(&'a [u32], &'a [u32]), Exclusion> {
    let k = split_index(corpus, &career.papers, career.first_date, split);
    let (past, future) = career.papers.split_at(k);
    let min_past = eligibility.min_past.unwrap_or_else(|| split.default_min_past());
    if past.len() < min_past.max(1) {
        return Err(Exclusion::TooFewPast);
    }
    if future.len() < eligibility.min_future.max(1) {
        return Err(Exclusion::TooFewFuture);
    }
    Ok((past, future))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CodeScheme, EligibilityFilter, Paper};
    use chrono::NaiveDate;

    fn corpus(dates: &[(i32, u32)]) -> Corpus {
        let ps = dates
            .iter()
            .enumerate()
            .map(|(i, &(y, m))| Paper {
                paper_id: format!("p{i:02}"),
                date: NaiveDate::from_ymd_opt(y, m, 1).unwrap(),
                authors: vec!["x".into()],
                codes: vec![],
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
    fn year_split_at_anniversary() {
        let dates: Vec<(i32, u32)> = (0..12).map(|i| (2000 + (i * 20 / 12) as i32, 6)).collect();
        let c = corpus(&dates);
        let career = &c.careers()[0];
        let (past, future) = split_author(&c, career, SplitPoint::CareerYears(10), Eligibility::default()).unwrap();
        // 2010-06-01 is 3652 days in, short of 10 * 365.25.
        let cut = NaiveDate::from_ymd_opt(2010, 6, 2).unwrap();
        for &p in past {
            assert!(c.paper(p as usize).date < cut);
        }
        for &p in future {
            assert!(c.paper(p as usize).date >= cut);
        }
        assert_eq!(past.len(), 7);
        assert_eq!(past.len() + future.len(), 12);
    }

    #[test]
    fn too_few_future_excluded() {
        let dates: Vec<(i32, u32)> = (0..7).map(|i| (2000 + i, 1)).collect();
        let c = corpus(&dates);
        let career = &c.careers()[0];
        assert_eq!(
            split_author(&c, career, SplitPoint::PaperCount(5), Eligibility::default()),
            Err(Exclusion::TooFewFuture)
        );
    }

    #[test]
    fn count_split_takes_first_m() {
        let dates: Vec<(i32, u32)> = (0..15).map(|i| (2000 + i, 1)).collect();
        let c = corpus(&dates);
        let career = &c.careers()[0];
        let (past, future) = split_author(&c, career, SplitPoint::PaperCount(10), Eligibility::default()).unwrap();
        assert_eq!(past, &career.papers[..10]);
        assert_eq!(future.len(), 5);
    }
}
