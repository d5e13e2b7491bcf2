//! Hierarchical classification codes: area and topic keys.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Paper;
use crate::error::{Error, Result};

/// How raw classification codes are reduced to area and topic keys.
///
/// Codes are normalised by stripping separator characters, then truncated to
/// a prefix. `topic_prefix_len = None` keeps the whole normalised code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodeScheme {
    pub area_prefix_len: usize,
    pub topic_prefix_len: Option<usize>,
    pub separator_chars: String,
}

impl Default for CodeScheme {
    fn default() -> Self {
        Self {
            area_prefix_len: 2,
            topic_prefix_len: None,
            separator_chars: ".-+ ".to_string(),
        }
    }
}

/// Outcome of reducing one code to a key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeKey {
    pub key: String,
    /// The normalised code was shorter than the requested prefix.
    pub short: bool,
}

impl CodeKey {
    fn empty() -> Self {
        Self {
            key: String::new(),
            short: false,
        }
    }
}

impl CodeScheme {
    pub fn new(area_prefix_len: usize, topic_prefix_len: Option<usize>) -> Result<Self> {
        let scheme = Self {
            area_prefix_len,
            topic_prefix_len,
            ..Self::default()
        };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<()> {
        if self.area_prefix_len == 0 {
            return Err(Error::Config("area_prefix_len must be positive".into()));
        }
        match self.topic_prefix_len {
            Some(0) => Err(Error::Config("topic_prefix_len must be positive".into())),
            Some(t) if t < self.area_prefix_len => Err(Error::Config(format!(
                "area_prefix_len {} exceeds topic_prefix_len {t}",
                self.area_prefix_len
            ))),
            _ => Ok(()),
        }
    }

    pub fn normalize(&self, code: &str) -> String {
        code.chars()
            .filter(|c| !self.separator_chars.contains(*c))
            .collect()
    }

    fn prefix(&self, code: &str, len: Option<usize>) -> CodeKey {
        let normalized = self.normalize(code);
        match len {
            None => CodeKey {
                key: normalized,
                short: false,
            },
            Some(len) => {
                let n = normalized.chars().count();
                if n < len {
                    CodeKey {
                        key: normalized,
                        short: true,
                    }
                } else {
                    CodeKey {
                        key: normalized.chars().take(len).collect(),
                        short: false,
                    }
                }
            }
        }
    }

    pub fn area(&self, code: &str) -> CodeKey {
        self.prefix(code, Some(self.area_prefix_len))
    }

    pub fn topic(&self, code: &str) -> CodeKey {
        self.prefix(code, self.topic_prefix_len)
    }

    pub fn area_key(&self, code: &str) -> String {
        self.area(code).key
    }

    pub fn topic_key(&self, code: &str) -> String {
        self.topic(code).key
    }

    /// Short label such as `2-6` or `2-full`, used in sweep output.
    pub fn label(&self) -> String {
        match self.topic_prefix_len {
            Some(t) => format!("{}-{t}", self.area_prefix_len),
            None => format!("{}-full", self.area_prefix_len),
        }
    }
}

/// Interned area/topic keys for every paper of a corpus under one scheme.
///
/// Area and topic ids index into the sorted `areas` / `topics` name tables.
#[derive(Debug, Clone)]
pub struct CodeView {
    scheme: CodeScheme,
    areas: Vec<String>,
    topics: Vec<String>,
    /// Area ids in code order, duplicates retained.
    paper_areas: Vec<Vec<u32>>,
    /// Distinct sorted area ids.
    paper_area_sets: Vec<Vec<u32>>,
    /// Distinct sorted topic ids.
    paper_topics: Vec<Vec<u32>>,
    short_codes: usize,
    empty_codes: usize,
}

impl CodeView {
    pub fn build(papers: &[Paper], scheme: &CodeScheme) -> Self {
        // Distinct raw codes are reduced once; occurrences map through them.
        let mut raw: HashMap<&str, usize> = HashMap::new();
        for code in papers.iter().flat_map(|p| &p.codes) {
            let next = raw.len();
            raw.entry(code.as_str()).or_insert(next);
        }
        let mut reduced: Vec<(CodeKey, CodeKey)> = vec![(CodeKey::empty(), CodeKey::empty()); raw.len()];
        for (code, &i) in &raw {
            reduced[i] = (scheme.area(code), scheme.topic(code));
        }
        let areas = sorted_unique(reduced.iter().filter(|(a, _)| !a.key.is_empty()).map(|(a, _)| &a.key));
        let topics = sorted_unique(reduced.iter().filter(|(a, _)| !a.key.is_empty()).map(|(_, t)| &t.key));
        let lookup = |table: &[String], key: &String| -> u32 {
            table.binary_search(key).expect("key interned above") as u32
        };
        // Per raw code: (area id, topic id, short), or None when empty.
        let ids: Vec<Option<(u32, u32, bool)>> = reduced
            .iter()
            .map(|(a, t)| {
                (!a.key.is_empty()).then(|| (lookup(&areas, &a.key), lookup(&topics, &t.key), a.short || t.short))
            })
            .collect();

        let mut short_codes = 0;
        let mut empty_codes = 0;
        let mut paper_areas = Vec::with_capacity(papers.len());
        let mut paper_area_sets = Vec::with_capacity(papers.len());
        let mut paper_topics = Vec::with_capacity(papers.len());
        for paper in papers {
            let mut pa = Vec::with_capacity(paper.codes.len());
            let mut pt = Vec::with_capacity(paper.codes.len());
            for code in &paper.codes {
                match ids[raw[code.as_str()]] {
                    None => empty_codes += 1,
                    Some((a, t, short)) => {
                        short_codes += usize::from(short);
                        pa.push(a);
                        pt.push(t);
                    }
                }
            }
            let mut set = pa.clone();
            set.sort_unstable();
            set.dedup();
            pt.sort_unstable();
            pt.dedup();
            paper_areas.push(pa);
            paper_area_sets.push(set);
            paper_topics.push(pt);
        }

        Self {
            scheme: scheme.clone(),
            areas,
            topics,
            paper_areas,
            paper_area_sets,
            paper_topics,
            short_codes,
            empty_codes,
        }
    }

    pub fn scheme(&self) -> &CodeScheme {
        &self.scheme
    }

    pub fn areas(&self) -> &[String] {
        &self.areas
    }

    pub fn topics(&self) -> &[String] {
        &self.topics
    }

    pub fn area_id(&self, key: &str) -> Option<u32> {
        self.areas
            .binary_search_by(|a| a.as_str().cmp(key))
            .ok()
            .map(|i| i as u32)
    }

    pub fn topic_id(&self, key: &str) -> Option<u32> {
        self.topics
            .binary_search_by(|a| a.as_str().cmp(key))
            .ok()
            .map(|i| i as u32)
    }

    /// Area ids of a paper in code order (with duplicates).
    pub fn paper_area_list(&self, paper: usize) -> &[u32] {
        &self.paper_areas[paper]
    }

    pub fn paper_areas(&self, paper: usize) -> &[u32] {
        &self.paper_area_sets[paper]
    }

    pub fn paper_topics(&self, paper: usize) -> &[u32] {
        &self.paper_topics[paper]
    }

    pub fn short_codes(&self) -> usize {
        self.short_codes
    }

    pub fn empty_codes(&self) -> usize {
        self.empty_codes
    }
}

fn sorted_unique<'a>(keys: impl Iterator<Item = &'a String>) -> Vec<String> {
    let mut v: Vec<String> = keys.cloned().collect();
    v.sort_unstable();
    v.dedup();
    v
}
