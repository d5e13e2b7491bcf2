//! Paper records, JSONL ingestion, citation counting and author careers.
//!
//! A [`Corpus`] is immutable once built. Papers are kept in chronological
//! order with ties broken by `paper_id`, so every index-based view (careers,
//! citation lists) is chronological as well.

mod codes;
pub mod synth;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use codes::{CodeKey, CodeScheme, CodeView};

use crate::error::{Error, Result};


/// One publication record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paper {
    pub paper_id: String,
    pub date: NaiveDate,
    /// Byline order.
    pub authors: Vec<String>,
    #[serde(default)]
    pub codes: Vec<String>,
    #[serde(default)]
    pub refs: Vec<String>,
    /// Institution ids per author, parallel to `authors`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub institutions: Option<Vec<Vec<String>>>,
    /// Externally supplied per-paper covariates (e.g. novelty scores).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub covariates: BTreeMap<String, f64>,
}

impl Paper {
    pub fn year(&self) -> i32 {
        self.date.year()
    }
}

/// What to do with a record that is missing a required field or violates a
/// per-paper invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingPolicy {
    /// Drop the record, keep its authors.
    #[default]
    DropPaper,
    /// Drop the record and exclude every author listed on it.
    DropAuthor,
    /// Fail the load.
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EligibilityFilter {
    pub min_papers: usize,
    pub date_from: Option<NaiveDate>,
    pub date_to: Option<NaiveDate>,
    pub missing_policy: MissingPolicy,
}

impl Default for EligibilityFilter {
    fn default() -> Self {
        Self {
            min_papers: 10,
            date_from: None,
            date_to: None,
            missing_policy: MissingPolicy::DropPaper,
        }
    }
}

/// Warning tallies produced while building a corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub papers: usize,
    pub authors: usize,
    pub eligible_authors: usize,
    pub warnings: BTreeMap<String, usize>,
}

impl ValidationReport {
    pub fn warn(&mut self, class: &str) {
        self.warn_n(class, 1);
    }

    pub fn warn_n(&mut self, class: &str, n: usize) {
        if n > 0 {
            *self.warnings.entry(class.to_string()).or_default() += n;
        }
    }

    pub fn warning_count(&self) -> usize {
        self.warnings.values().sum()
    }

    pub fn get(&self, class: &str) -> usize {
        self.warnings.get(class).copied().unwrap_or(0)
    }
}

/// Publication history of one eligible author.
#[derive(Debug, Clone, PartialEq)]
pub struct AuthorCareer {
    pub author_id: String,
    /// Corpus paper indices, chronological.
    pub papers: Vec<u32>,
    pub first_date: NaiveDate,
    pub attributes: BTreeMap<String, String>,
}

impl AuthorCareer {
    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn paper_ids<'a>(&'a self, corpus: &'a Corpus) -> impl Iterator<Item = &'a str> + 'a {
        self.papers
            .iter()
            .map(move |&p| corpus.paper(p as usize).paper_id.as_str())
    }
}

/// Length of a year in day arithmetic.
pub const DAYS_PER_YEAR: f64 = 365.25;

/// Whole years elapsed between two dates, `floor(days / 365.25)`.
pub fn elapsed_years(from: NaiveDate, to: NaiveDate) -> i64 {
    ((to - from).num_days() as f64 / DAYS_PER_YEAR).floor() as i64
}

/// `to` lies strictly after `from` and at most `years * 365.25` days after it.
pub fn within_years(from: NaiveDate, to: NaiveDate, years: u32) -> bool {
    let days = (to - from).num_days();
    days > 0 && days as f64 <= years as f64 * DAYS_PER_YEAR
}

#[derive(Debug, Clone)]
pub struct Corpus {
    papers: Vec<Paper>,
    index: HashMap<String, u32>,
    refs: Vec<Vec<u32>>,
    citers: Vec<Vec<u32>>,
    c5: Vec<u32>,
    c10: Vec<u32>,
    author_papers: BTreeMap<String, Vec<u32>>,
    careers: Vec<AuthorCareer>,
    career_index: HashMap<String, usize>,
    codes: CodeView,
    filter: EligibilityFilter,
    report: ValidationReport,
}

impl Corpus {
    /// Builds a corpus from already-parsed papers.
    pub fn from_papers(
        papers: Vec<Paper>,
        scheme: &CodeScheme,
        filter: &EligibilityFilter,
    ) -> Result<Self> {
        Self::build(
            papers,
            scheme,
            filter,
            &BTreeSet::new(),
            ValidationReport::default(),
            &BTreeMap::new(),
        )
    }

    fn build(
        mut papers: Vec<Paper>,
        scheme: &CodeScheme,
        filter: &EligibilityFilter,
        excluded_authors: &BTreeSet<String>,
        mut report: ValidationReport,
        attributes: &BTreeMap<String, BTreeMap<String, String>>,
    ) -> Result<Self> {
        scheme.validate()?;

        let before = papers.len();
        papers.retain(|p| {
            filter.date_from.is_none_or(|d| p.date >= d) && filter.date_to.is_none_or(|d| p.date <= d)
        });
        report.warn_n("out_of_date_range", before - papers.len());

        for p in &papers {
            if let Some(inst) = &p.institutions {
                if inst.len() != p.authors.len() {
                    return Err(Error::InstitutionsMismatch {
                        paper: p.paper_id.clone(),
                        got: inst.len(),
                        authors: p.authors.len(),
                    });
                }
            }
        }

        papers.sort_by(|a, b| (a.date, &a.paper_id).cmp(&(b.date, &b.paper_id)));
        let mut index = HashMap::with_capacity(papers.len());
        for (i, p) in papers.iter().enumerate() {
            if index.insert(p.paper_id.clone(), i as u32).is_some() {
                return Err(Error::DuplicatePaper(p.paper_id.clone()));
            }
        }

        let mut external = 0usize;
        let mut self_refs = 0usize;
        let mut refs = Vec::with_capacity(papers.len());
        for (i, p) in papers.iter().enumerate() {
            let mut r = Vec::with_capacity(p.refs.len());
            for id in &p.refs {
                match index.get(id) {
                    Some(&j) if j as usize == i => self_refs += 1,
                    Some(&j) => r.push(j),
                    None => external += 1,
                }
            }
            r.sort_unstable();
            r.dedup();
            refs.push(r);
        }
        report.warn_n("external_ref", external);
        report.warn_n("self_ref", self_refs);

        let mut citers = vec![Vec::new(); papers.len()];
        for (i, r) in refs.iter().enumerate() {
            for &j in r {
                citers[j as usize].push(i as u32);
            }
        }
        let count_within = |target: usize, years: u32| -> u32 {
            let d = papers[target].date;
            citers[target]
                .iter()
                .filter(|&&c| within_years(d, papers[c as usize].date, years))
                .count() as u32
        };
        let c5 = (0..papers.len()).map(|i| count_within(i, 5)).collect();
        let c10 = (0..papers.len()).map(|i| count_within(i, 10)).collect();

        let mut grouped: HashMap<&str, Vec<u32>> = HashMap::new();
        for (i, p) in papers.iter().enumerate() {
            for a in &p.authors {
                grouped.entry(a.as_str()).or_default().push(i as u32);
            }
        }
        let author_papers: BTreeMap<String, Vec<u32>> =
            grouped.into_iter().map(|(a, ps)| (a.to_string(), ps)).collect();

        let mut careers = Vec::new();
        let mut below_min = 0;
        for (author, ps) in &author_papers {
            if excluded_authors.contains(author) {
                continue;
            }
            if ps.len() < filter.min_papers {
                below_min += 1;
                continue;
            }
            careers.push(AuthorCareer {
                author_id: author.clone(),
                papers: ps.clone(),
                first_date: papers[ps[0] as usize].date,
                attributes: attributes.get(author).cloned().unwrap_or_default(),
            });
        }
        report.warn_n("author_below_min_papers", below_min);
        let career_index = careers
            .iter()
            .enumerate()
            .map(|(i, c)| (c.author_id.clone(), i))
            .collect();

        let codes = CodeView::build(&papers, scheme);
        report.warn_n("short_code", codes.short_codes());
        report.warn_n("empty_code", codes.empty_codes());
        report.papers = papers.len();
        report.authors = author_papers.len();
        report.eligible_authors = careers.len();

        Ok(Self {
            papers,
            index,
            refs,
            citers,
            c5,
            c10,
            author_papers,
            careers,
            career_index,
            codes,
            filter: filter.clone(),
            report,
        })
    }

    /// Rebuilds the corpus with a different paper list, keeping scheme,
    /// filter and author attributes.
    pub fn rebuilt_with(&self, papers: Vec<Paper>) -> Result<Self> {
        let attributes = self
            .careers
            .iter()
            .filter(|c| !c.attributes.is_empty())
            .map(|c| (c.author_id.clone(), c.attributes.clone()))
            .collect();
        Self::build(
            papers,
            self.codes.scheme(),
            &self.filter,
            &BTreeSet::new(),
            ValidationReport::default(),
            &attributes,
        )
    }

    /// Attaches per-author attributes (e.g. gender labels) to careers.
    pub fn with_author_attributes(
        mut self,
        attributes: &BTreeMap<String, BTreeMap<String, String>>,
    ) -> Self {
        for c in &mut self.careers {
            if let Some(a) = attributes.get(&c.author_id) {
                c.attributes = a.clone();
            }
        }
        self
    }

    pub fn papers(&self) -> &[Paper] {
        &self.papers
    }

    pub fn paper(&self, idx: usize) -> &Paper {
        &self.papers[idx]
    }

    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    pub fn paper_index(&self, paper_id: &str) -> Option<usize> {
        self.index.get(paper_id).map(|&i| i as usize)
    }

    /// In-corpus references of a paper (self references dropped).
    pub fn refs(&self, idx: usize) -> &[u32] {
        &self.refs[idx]
    }

    /// In-corpus papers referencing `idx`, chronological.
    pub fn citers(&self, idx: usize) -> &[u32] {
        &self.citers[idx]
    }

    pub fn c5(&self, idx: usize) -> u32 {
        self.c5[idx]
    }

    pub fn c10(&self, idx: usize) -> u32 {
        self.c10[idx]
    }

    /// Number of in-corpus citations received strictly after publication and
    /// within `horizon_years` calendar years.
    pub fn citation_count(&self, idx: usize, horizon_years: u32) -> u32 {
        match horizon_years {
            5 => self.c5[idx],
            10 => self.c10[idx],
            h => {
                let d = self.papers[idx].date;
                self.citers[idx]
                    .iter()
                    .filter(|&&c| within_years(d, self.papers[c as usize].date, h))
                    .count() as u32
            }
        }
    }

    pub fn careers(&self) -> &[AuthorCareer] {
        &self.careers
    }

    pub fn career(&self, author_id: &str) -> Option<&AuthorCareer> {
        self.career_index.get(author_id).map(|&i| &self.careers[i])
    }

    /// Papers of any author, eligible or not.
    pub fn author_papers(&self, author_id: &str) -> &[u32] {
        self.author_papers
            .get(author_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn all_authors(&self) -> impl Iterator<Item = (&str, &[u32])> {
        self.author_papers
            .iter()
            .map(|(a, p)| (a.as_str(), p.as_slice()))
    }

    pub fn codes(&self) -> &CodeView {
        &self.codes
    }

    pub fn scheme(&self) -> &CodeScheme {
        self.codes.scheme()
    }

    pub fn filter(&self) -> &EligibilityFilter {
        &self.filter
    }

    pub fn report(&self) -> &ValidationReport {
        &self.report
    }

    /// Derived code view under another scheme (for digit-combination sweeps).
    pub fn code_view(&self, scheme: &CodeScheme) -> CodeView {
        CodeView::build(&self.papers, scheme)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        write_papers_jsonl(&self.papers, path)
    }
}

/// Citation count of a paper given by id. See [`Corpus::citation_count`].
pub fn citation_counts(corpus: &Corpus, paper_id: &str, horizon_years: u32) -> Result<u32> {
    let idx = corpus
        .paper_index(paper_id)
        .ok_or_else(|| Error::UnknownPaper(paper_id.to_string()))?;
    Ok(corpus.citation_count(idx, horizon_years))
}

pub fn write_papers_jsonl(papers: &[Paper], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in papers {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

enum LineOutcome {
    Blank,
    Paper(Paper),
    /// Record rejected by the missing-field policy; carries the warning class
    /// and whatever author ids could be read.
    Invalid {
        class: String,
        reason: String,
        authors: Vec<String>,
    },
}

fn parse_line(line: &str, line_no: usize) -> Result<LineOutcome> {
    if line.trim().is_empty() {
        return Ok(LineOutcome::Blank);
    }
    let value: Value = serde_json::from_str(line).map_err(|e| Error::Malformed {
        line: line_no,
        msg: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| Error::Malformed {
        line: line_no,
        msg: "record is not a JSON object".into(),
    })?;

    let strings = |v: &Value| -> Option<Vec<String>> {
        v.as_array()?
            .iter()
            .map(|x| x.as_str().map(str::to_string))
            .collect()
    };
    let authors = obj.get("authors").and_then(strings).unwrap_or_default();
    let invalid = |class: &str, reason: String| LineOutcome::Invalid {
        class: class.to_string(),
        reason,
        authors: authors.clone(),
    };

    let Some(paper_id) = obj.get("paper_id").and_then(Value::as_str) else {
        return Ok(invalid("missing_field:paper_id", "missing paper_id".into()));
    };
    let Some(date) = obj.get("date").and_then(Value::as_str) else {
        return Ok(invalid("missing_field:date", format!("{paper_id}: missing date")));
    };
    let Ok(date) = NaiveDate::parse_from_str(date, "%Y-%m-%d") else {
        return Ok(invalid("invalid_date", format!("{paper_id}: bad date `{date}`")));
    };
    if obj.get("authors").is_none() || authors.is_empty() {
        return Ok(invalid("missing_field:authors", format!("{paper_id}: no authors")));
    }
    let mut seen = HashSet::new();
    if !authors.iter().all(|a| seen.insert(a.as_str())) {
        return Ok(invalid("duplicate_author", format!("{paper_id}: duplicate author")));
    }

    let list = |key: &str| -> Result<Vec<String>> {
        match obj.get(key) {
            None | Some(Value::Null) => Ok(Vec::new()),
            Some(v) => strings(v).ok_or_else(|| Error::Malformed {
                line: line_no,
                msg: format!("`{key}` must be an array of strings"),
            }),
        }
    };
    let codes = list("codes")?;
    let refs = list("refs")?;
    let institutions = match obj.get("institutions") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let outer = v.as_array().ok_or_else(|| Error::Malformed {
                line: line_no,
                msg: "`institutions` must be an array".into(),
            })?;
            let inner: Option<Vec<Vec<String>>> = outer.iter().map(strings).collect();
            Some(inner.ok_or_else(|| Error::Malformed {
                line: line_no,
                msg: "`institutions` entries must be arrays of strings".into(),
            })?)
        }
    };
    let covariates = match obj.get("covariates") {
        None | Some(Value::Null) => BTreeMap::new(),
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Malformed {
            line: line_no,
            msg: format!("`covariates`: {e}"),
        })?,
    };

    Ok(LineOutcome::Paper(Paper {
        paper_id: paper_id.to_string(),
        date,
        authors,
        codes,
        refs,
        institutions,
        covariates,
    }))
}

/// Loads a JSONL papers file.
///
/// Lines are parsed in parallel; the result does not depend on scheduling.
pub fn load_corpus(path: &Path, scheme: &CodeScheme, filter: &EligibilityFilter) -> Result<Corpus> {
    let reader = BufReader::new(File::open(path)?);
    let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
    load_corpus_lines(&lines, scheme, filter)
}

pub fn load_corpus_lines(
    lines: &[String],
    scheme: &CodeScheme,
    filter: &EligibilityFilter,
) -> Result<Corpus> {
    let parsed: Vec<Result<LineOutcome>> = lines
        .par_iter()
        .enumerate()
        .map(|(i, l)| parse_line(l, i + 1))
        .collect();

    let mut report = ValidationReport::default();
    let mut papers = Vec::with_capacity(lines.len());
    let mut excluded = BTreeSet::new();
    for (i, outcome) in parsed.into_iter().enumerate() {
        match outcome? {
            LineOutcome::Blank => {}
            LineOutcome::Paper(p) => papers.push(p),
            LineOutcome::Invalid {
                class,
                reason,
                authors,
            } => match filter.missing_policy {
                MissingPolicy::Reject => {
                    return Err(Error::InvalidRecord {
                        line: i + 1,
                        reason,
                    })
                }
                MissingPolicy::DropPaper => report.warn(&class),
                MissingPolicy::DropAuthor => {
                    report.warn(&class);
                    report.warn_n("author_dropped", authors.len());
                    excluded.extend(authors);
                }
            },
        }
    }
    Corpus::build(papers, scheme, filter, &excluded, report, &BTreeMap::new())
}

/// Reads per-author attributes from JSONL lines of the form
/// `{"author_id": "...", "attributes": {"gender": "f"}}`.
pub fn load_author_attributes(path: &Path) -> Result<BTreeMap<String, BTreeMap<String, String>>> {
    #[derive(Deserialize)]
    struct Line {
        author_id: String,
        #[serde(default)]
        attributes: BTreeMap<String, String>,
    }
    let reader = BufReader::new(File::open(path)?);
    let mut out = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Line = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.insert(rec.author_id, rec.attributes);
    }
    Ok(out)
}
