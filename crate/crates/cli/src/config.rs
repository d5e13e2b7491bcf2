//! TOML run configuration.

use std::path::{Path, PathBuf};

use cautious_core::causal::{Estimand, PropensityMethod, TreatOn};
use cautious_core::corpus::synth::SynthConfig;
use cautious_core::corpus::MissingPolicy;
use cautious_core::metrics::AnalysisConfig;
use cautious_core::stats::{ModelSpec, Term};
use cautious_core::{CodeScheme, DistanceMetric, EligibilityFilter, GraphKind, Group};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: PathBuf,
    pub corpus: CorpusSection,
    pub codes: CodeScheme,
    pub graph: GraphSection,
    pub analysis: AnalysisConfig,
    pub synth: Option<SynthConfig>,
    pub regress: Option<RegressSection>,
    pub psm: Option<PsmSection>,
    pub psw: Option<PswSection>,
    pub null: Option<NullSection>,
    pub mediation: Option<MediationSection>,
    pub sweep: SweepSection,
    pub report: ReportSection,
    /// Directory relative paths are resolved against (the config file's).
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out: PathBuf::from("out"),
            corpus: CorpusSection::default(),
            codes: CodeScheme::default(),
            graph: GraphSection::default(),
            analysis: AnalysisConfig::default(),
            synth: None,
            regress: None,
            psm: None,
            psw: None,
            null: None,
            mediation: None,
            sweep: SweepSection::default(),
            report: ReportSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
    /// Optional JSONL of per-author attributes.
    pub attributes: Option<PathBuf>,
    pub min_papers: usize,
    pub date_from: Option<NaiveDate>,
    pub date_to: Option<NaiveDate>,
    pub missing_policy: MissingPolicy,
}

impl Default for CorpusSection {
    fn default() -> Self {
        let f = EligibilityFilter::default();
        Self {
            path: PathBuf::from("papers.jsonl"),
            attributes: None,
            min_papers: f.min_papers,
            date_from: f.date_from,
            date_to: f.date_to,
            missing_policy: f.missing_policy,
        }
    }
}

impl CorpusSection {
    pub fn filter(&self) -> EligibilityFilter {
        EligibilityFilter {
            min_papers: self.min_papers,
            date_from: self.date_from,
            date_to: self.date_to,
            missing_policy: self.missing_policy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    pub kind: GraphKind,
    pub metric: DistanceMetric,
    /// Write the full distance matrix when the graph has at most this many nodes.
    pub distance_matrix_max_nodes: usize,
}

impl Default for GraphSection {
    fn default() -> Self {
        Self {
            kind: GraphKind::Cooccurrence,
            metric: DistanceMetric::WeightedOverlap,
            distance_matrix_max_nodes: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressSection {
    pub models: Vec<ModelSpec>,
    pub response: String,
    pub extras: Vec<String>,
    /// Responses for the covariate-as-outcome model.
    pub s9_responses: Vec<String>,
    pub bootstrap: usize,
}

impl Default for RegressSection {
    fn default() -> Self {
        Self {
            models: vec![ModelSpec::S3, ModelSpec::S4, ModelSpec::S5, ModelSpec::S6, ModelSpec::S8],
            response: cautious_core::stats::DEFAULT_RESPONSE.to_string(),
            extras: Vec::new(),
            s9_responses: Vec::new(),
            bootstrap: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsmSection {
    pub treat_on: Vec<TreatOn>,
    pub caliper_sd: f64,
    pub method: PropensityMethod,
    /// `None` uses the usual covariates.
    pub covariates: Option<Vec<String>>,
    pub outcome: String,
}

impl Default for PsmSection {
    fn default() -> Self {
        Self {
            treat_on: vec![TreatOn::Ep, TreatOn::Ed, TreatOn::Groups(Group::A, Group::D)],
            caliper_sd: 0.2,
            method: PropensityMethod::Logistic,
            covariates: None,
            outcome: cautious_core::stats::DEFAULT_RESPONSE.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PswSection {
    /// Four-group ATE against each baseline.
    pub baselines: Vec<Group>,
    /// Each group against the pooled rest, under `estimand`.
    pub versus_rest: Vec<Group>,
    pub estimand: Estimand,
    pub method: PropensityMethod,
    pub trim_percentile: Option<f64>,
    pub covariates: Option<Vec<String>>,
    pub outcome: String,
}

impl Default for PswSection {
    fn default() -> Self {
        Self {
            baselines: vec![Group::D],
            versus_rest: vec![Group::A],
            estimand: Estimand::Att,
            method: PropensityMethod::Logistic,
            trim_percentile: Some(99.0),
            covariates: None,
            outcome: cautious_core::stats::DEFAULT_RESPONSE.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NullKind {
    Author,
    Paper,
}

impl NullKind {
    pub fn name(self) -> &'static str {
        match self {
            NullKind::Author => "author",
            NullKind::Paper => "paper",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NullSection {
    pub replicates: usize,
    pub kinds: Vec<NullKind>,
    pub swaps_per_edge: usize,
    /// The statistic is the weighted ATE of `treated` against `baseline`.
    pub treated: Group,
    pub baseline: Group,
}

impl Default for NullSection {
    fn default() -> Self {
        Self {
            replicates: 200,
            kinds: vec![NullKind::Author, NullKind::Paper],
            swaps_per_edge: 10,
            treated: Group::A,
            baseline: Group::D,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediationItem {
    pub treatment: String,
    pub mediator: String,
    #[serde(default = "default_outcome")]
    pub outcome: String,
    #[serde(default)]
    pub controls: Vec<String>,
}

fn default_outcome() -> String {
    cautious_core::stats::DEFAULT_RESPONSE.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediationSection {
    pub bootstrap: usize,
    pub min_rows: usize,
    pub items: Vec<MediationItem>,
}

impl Default for MediationSection {
    fn default() -> Self {
        Self {
            bootstrap: 500,
            min_rows: 30,
            items: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepDimension {
    Split,
    Window,
    Quantile,
    Digits,
    DistanceMode,
}

impl SweepDimension {
    pub fn name(self) -> &'static str {
        match self {
            SweepDimension::Split => "split",
            SweepDimension::Window => "window",
            SweepDimension::Quantile => "quantile",
            SweepDimension::Digits => "digits",
            SweepDimension::DistanceMode => "distance_mode",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Dimensions swept by `run`.
    pub dimensions: Vec<SweepDimension>,
    /// Career-year split points.
    pub splits: Vec<u32>,
    /// Look-back sizes in papers.
    pub windows: Vec<usize>,
    /// Look-back sizes in years.
    pub years: Vec<u32>,
    pub quantiles: Vec<f64>,
    /// Code schemes as `area-topic`, e.g. `2-6` or `2-full`.
    pub digits: Vec<String>,
    /// Add the weighted A-vs-D ATE to every sweep row.
    pub with_ate: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            dimensions: Vec::new(),
            splits: (2..=15).collect(),
            windows: (1..=15).collect(),
            years: (1..=15).collect(),
            quantiles: vec![50.0, 45.0, 40.0, 35.0, 30.0],
            digits: ["2-2", "2-4", "4-4", "4-6", "2-6"].iter().map(|s| s.to_string()).collect(),
            with_ate: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportItem {
    Correlations,
    Marginal,
    Ate,
    Thresholds,
    Trajectories,
    Cohorts,
    Transitions,
    Stability,
    Drastic,
    Mediation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub analyses: Vec<ReportItem>,
    pub bin_step: f64,
    /// Past-impact range for the controlled correlation; defaults to the 40th-60th percentile band.
    pub control_band: Option<(f64, f64)>,
    pub marginal_points: usize,
    /// Career-year split points for the ATE series; empty uses the analysis split.
    pub ate_splits: Vec<u32>,
    pub thresholds: Vec<f64>,
    pub max_year: u32,
    pub cohorts: Vec<(i32, i32)>,
    pub cohort_horizon: u32,
    pub snapshots: Vec<NaiveDate>,
    pub periods: Vec<(NaiveDate, NaiveDate)>,
    pub stability_node_budget: usize,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            analyses: Vec::new(),
            bin_step: 0.1,
            control_band: None,
            marginal_points: 21,
            ate_splits: Vec::new(),
            thresholds: vec![50.0, 45.0, 40.0, 35.0, 30.0],
            max_year: 10,
            cohorts: Vec::new(),
            cohort_horizon: 5,
            snapshots: Vec::new(),
            periods: Vec::new(),
            stability_node_budget: 2000,
        }
    }
}

/// Regressor term for a row variable name.
pub fn term_of(name: &str) -> Term {
    if matches!(name, "area_first" | "group" | "group_future") || name.starts_with("attr.") {
        Term::cat(name)
    } else {
        Term::num(name)
    }
}

pub fn terms_of(names: &[String]) -> Vec<Term> {
    names.iter().map(|n| term_of(n)).collect()
}

/// Parses `area-topic` digit labels such as `2-6` or `2-full`.
pub fn parse_digits(label: &str) -> CliResult<CodeScheme> {
    let bad = || CliError::Config(format!("digit combination `{label}` is not of the form `2-6` or `2-full`"));
    let (a, t) = label.split_once('-').ok_or_else(bad)?;
    let area: usize = a.parse().map_err(|_| bad())?;
    let topic = if t == "full" { None } else { Some(t.parse().map_err(|_| bad())?) };
    CodeScheme::new(area, topic).map_err(|e| CliError::Config(e.to_string()))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config `{}`: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.resolve(&self.corpus.path)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.out)
    }

    /// Canonical text the config digest is taken over; output location is excluded.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        serde_json::to_string(&c).expect("config serializes")
    }

    /// Checks internal consistency, including that every requested analysis
    /// has its upstream sections enabled.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        self.codes.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(0.0 < self.analysis.group_quantile && self.analysis.group_quantile <= 50.0) {
            return bad("analysis.group_quantile must lie in (0, 50]".into());
        }
        if let Some(s) = &self.synth {
            s.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(p) = &self.psm {
            if !(p.caliper_sd > 0.0) {
                return bad("psm.caliper_sd must be positive".into());
            }
        }
        if let Some(p) = &self.psw {
            if p.baselines.iter().chain(&p.versus_rest).any(|g| !g.is_labeled()) {
                return bad("psw groups must be among A, B, C, D".into());
            }
        }
        if let Some(n) = &self.null {
            if self.psw.is_none() {
                return bad("null models compare weighted ATEs and need a [psw] section".into());
            }
            if n.treated == n.baseline || !n.treated.is_labeled() || !n.baseline.is_labeled() {
                return bad("null.treated and null.baseline must be distinct groups among A, B, C, D".into());
            }
        }
        for q in self.sweep.quantiles.iter().chain(&self.report.thresholds) {
            if !(0.0 < *q && *q <= 50.0) {
                return bad(format!("quantile {q} must lie in (0, 50]"));
            }
        }
        for d in &self.sweep.digits {
            parse_digits(d)?;
        }
        if self.sweep.with_ate && !self.sweep.dimensions.is_empty() && self.psw.is_none() {
            return bad("sweep.with_ate needs a [psw] section".into());
        }
        for item in &self.report.analyses {
            match item {
                ReportItem::Marginal if self.regress.is_none() => {
                    return bad("report `marginal` needs a [regress] section".into())
                }
                ReportItem::Ate | ReportItem::Thresholds | ReportItem::Drastic if self.psw.is_none() => {
                    return bad(format!("report `{item:?}` needs a [psw] section").to_lowercase())
                }
                ReportItem::Mediation if self.mediation.as_ref().is_none_or(|m| m.items.is_empty()) => {
                    return bad("report `mediation` needs [mediation] items".into())
                }
                ReportItem::Cohorts if self.report.cohorts.len() < 2 => {
                    return bad("report `cohorts` needs at least two report.cohorts".into())
                }
                ReportItem::Transitions if self.report.snapshots.len() < 2 => {
                    return bad("report `transitions` needs at least two report.snapshots".into())
                }
                ReportItem::Stability if self.report.periods.len() < 2 => {
                    return bad("report `stability` needs at least two report.periods".into())
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn sections_parse() {
        let c = RunConfig::from_toml(
            r#"
            seed = 9
            [corpus]
            path = "p.jsonl"
            min_papers = 5
            [analysis]
            window = { mode = "years", value = 3 }
            split = { mode = "paper_count", value = 20 }
            [regress]
            models = ["S4", "S11"]
            [psw]
            baselines = ["D", "C"]
            [null]
            replicates = 10
            kinds = ["author"]
            [report]
            analyses = ["correlations", "ate"]
            cohorts = [[1980, 1989], [1990, 1999]]
            "#,
        )
        .unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.corpus.min_papers, 5);
        assert_eq!(c.analysis.window, cautious_core::LookbackWindow::Years(3));
        assert_eq!(c.regress.as_ref().unwrap().models, vec![ModelSpec::S4, ModelSpec::S11]);
        assert_eq!(c.psw.as_ref().unwrap().baselines, vec![Group::D, Group::C]);
        assert_eq!(c.report.cohorts, vec![(1980, 1989), (1990, 1999)]);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_fields_and_missing_upstream_are_rejected() {
        assert!(RunConfig::from_toml("sed = 1").is_err());
        let c = RunConfig::from_toml("[null]\nreplicates = 3").unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("[psw]"));
        let c = RunConfig::from_toml("[report]\nanalyses = [\"marginal\"]").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn digit_labels() {
        assert_eq!(parse_digits("2-6").unwrap(), CodeScheme::new(2, Some(6)).unwrap());
        assert_eq!(parse_digits("4-full").unwrap(), CodeScheme::new(4, None).unwrap());
        assert!(parse_digits("6-2").is_err());
        assert!(parse_digits("x").is_err());
    }
}
