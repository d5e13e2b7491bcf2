//! Shared stage plumbing: loading inputs once, building rows, writing tables.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use cautious_core::causal::{psw, default_covariates, Arm, ArmEffect, Estimand, WeightConfig};
use cautious_core::corpus::load_author_attributes;
use cautious_core::metrics::{analysis_rows, AnalysisConfig, RowSet};
use cautious_core::stats::Term;
use cautious_core::{load_corpus, AuthorAnalysisRow, CodeView, Corpus, DistanceProvider, Group, TopicGraph};

use crate::config::{terms_of, PswSection, RunConfig};
use crate::error::{input_error, CliError, CliResult};
use crate::manifest::{file_digest, sha256_hex, RunManifest, StageWriter};

/// Corpus, topic graph and (lazily) analysis rows for one configuration.
pub struct Inputs {
    pub corpus: Corpus,
    pub graph: TopicGraph,
    /// Digests of the files read, by label.
    pub digests: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    rows: OnceLock<RowSet>,
}

impl Inputs {
    pub fn load(config: &RunConfig) -> CliResult<Self> {
        let path = config.corpus_path();
        if !path.exists() {
            return Err(CliError::MissingInput {
                what: "corpus",
                path: path.display().to_string(),
                producer: "synth",
            });
        }
        let mut digests = BTreeMap::new();
        digests.insert("corpus".to_string(), file_digest(&path)?);
        let mut corpus = load_corpus(&path, &config.codes, &config.corpus.filter()).map_err(input_error)?;
        if let Some(attr) = &config.corpus.attributes {
            let attr = config.resolve(attr);
            if !attr.exists() {
                return Err(CliError::Config(format!("author attributes file `{}` does not exist", attr.display())));
            }
            digests.insert("attributes".to_string(), file_digest(&attr)?);
            corpus = corpus.with_author_attributes(&load_author_attributes(&attr).map_err(input_error)?);
        }
        let warnings = corpus
            .report()
            .warnings
            .iter()
            .map(|(class, n)| format!("{class}: {n}"))
            .collect();
        let graph = TopicGraph::build(config.graph.kind, &corpus, corpus.codes(), None);
        Ok(Self {
            corpus,
            graph,
            digests,
            warnings,
            rows: OnceLock::new(),
        })
    }

    pub fn provider(&self, config: &RunConfig) -> DistanceProvider<'_> {
        DistanceProvider::new(&self.graph, config.graph.metric)
    }

    /// Rows under the configured analysis settings.
    pub fn rows(&self, config: &RunConfig) -> &RowSet {
        self.rows.get_or_init(|| {
            let provider = self.provider(config);
            analysis_rows(&self.corpus, self.corpus.codes(), &provider, &config.analysis)
        })
    }

    /// Rows under other analysis settings, reusing the topic graph.
    pub fn rows_with(&self, config: &RunConfig, analysis: &AnalysisConfig) -> RowSet {
        let provider = self.provider(config);
        analysis_rows(&self.corpus, self.corpus.codes(), &provider, analysis)
    }

    /// Rows under a different code view, with a graph built for it.
    pub fn rows_for_view(&self, config: &RunConfig, view: &CodeView, analysis: &AnalysisConfig) -> RowSet {
        let graph = TopicGraph::build(config.graph.kind, &self.corpus, view, None);
        let provider = DistanceProvider::new(&graph, config.graph.metric);
        analysis_rows(&self.corpus, view, &provider, analysis)
    }
}

pub fn row_warnings(rows: &RowSet) -> Vec<String> {
    let mut out: Vec<String> = rows
        .exclusions
        .iter()
        .filter(|(_, n)| **n > 0)
        .map(|(k, n)| format!("excluded {k}: {n}"))
        .collect();
    if rows.undefined_distances > 0 {
        out.push(format!("papers with undefined distance: {}", rows.undefined_distances));
    }
    if rows.degenerate_ep {
        out.push("EP has no spread at the group quantile; groups are degenerate".into());
    }
    if rows.degenerate_ed {
        out.push("ED has no spread at the group quantile; groups are degenerate".into());
    }
    out
}

pub fn config_digest(config: &RunConfig) -> String {
    sha256_hex(config.canonical().as_bytes())
}

/// Runs one stage body and records its outputs in the manifest.
pub fn stage<F>(config: &RunConfig, name: &str, inputs: Option<&Inputs>, body: F) -> CliResult<()>
where
    F: FnOnce(&mut StageWriter) -> CliResult<()>,
{
    let out = config.out_dir();
    let digest = config_digest(config);
    let mut w = StageWriter::new(&out, &digest, config.seed)?;
    if let Some(inputs) = inputs {
        w.record.inputs = inputs.digests.clone();
        w.record.warnings = inputs.warnings.clone();
    }
    body(&mut w)?;
    let mut m = RunManifest::open(&out, digest, config.seed)?;
    w.finish(&mut m, name);
    m.write(&out)
}

/// Per-replicate seed derived from a run seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn covariates(names: &Option<Vec<String>>, include_ep: bool) -> Vec<Term> {
    match names {
        Some(n) => terms_of(n),
        None => default_covariates(include_ep),
    }
}

pub fn weight_config(section: &PswSection, estimand: Estimand) -> WeightConfig {
    WeightConfig {
        method: section.method,
        estimand,
        trim_percentile: section.trim_percentile,
    }
}

/// Weighted ATE of `treated` against `baseline` over the four groups.
pub fn group_ate(
    rows: &[AuthorAnalysisRow],
    section: &PswSection,
    treated: Group,
    baseline: Group,
) -> cautious_core::Result<ArmEffect> {
    let arms = Arm::four_groups();
    let b = arms.iter().position(|a| a.label == baseline.as_str()).expect("labelled group");
    let est = psw(
        rows,
        &arms,
        b,
        None,
        &covariates(&section.covariates, false),
        &section.outcome,
        &weight_config(section, Estimand::Ate),
    )?;
    est.effect(treated.as_str())
        .cloned()
        .ok_or_else(|| cautious_core::Error::InsufficientData(format!("no rows in group {treated}")))
}

pub fn num(x: f64) -> String {
    x.to_string()
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// CSV bytes from a header and string records.
pub fn csv_bytes<I>(header: &[&str], records: I) -> CliResult<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::io("formatting csv", std::io::Error::other(e));
    w.write_record(header).map_err(err)?;
    for r in records {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError::io("formatting csv", std::io::Error::other(e.to_string())))
}

/// Bytes produced by one of the core `write_*_csv` helpers.
pub fn core_csv<F>(f: F) -> CliResult<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> cautious_core::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(CliError::Analysis)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::BTreeSet<u64> = (0..100).map(|i| derive_seed(7, i)).collect();
        assert_eq!(s.len(), 100);
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn csv_quotes_fields() {
        let b = csv_bytes(&["a", "b"], vec![vec!["x,y".into(), num(0.5)]]).unwrap();
        assert_eq!(String::from_utf8(b).unwrap(), "a,b\n\"x,y\",0.5\n");
    }
}
