//! Named regression models over analysis rows and bootstrap coefficient intervals.

use std::fmt;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bootstrap::{percentile_interval, replicate_rng, resample_indices, Interval};
use super::design::{DesignMatrix, Table, Term};
use super::linear::{ols_fit, qr_coef, RegressionResult};
use crate::error::{Error, Result};
use crate::metrics::{AuthorAnalysisRow, Group, CORE_NUMERIC};

pub const DEFAULT_RESPONSE: &str = "logcit_future";

/// Model families of the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelSpec {
    /// Past EP plus controls.
    S3,
    /// Past EP and ED plus controls.
    S4,
    /// Past EP and ED only.
    S5,
    /// Group indicators (baseline D) plus controls.
    S6,
    /// Future EP and ED plus controls.
    S8,
    /// A covariate as response, S4 regressors.
    S9,
    /// S4 plus extra covariates.
    S10,
    /// S4 plus every past-side covariate and extras.
    S11,
}

impl ModelSpec {
    pub const ALL: [ModelSpec; 8] = [
        ModelSpec::S3,
        ModelSpec::S4,
        ModelSpec::S5,
        ModelSpec::S6,
        ModelSpec::S8,
        ModelSpec::S9,
        ModelSpec::S10,
        ModelSpec::S11,
    ];

    pub fn parse(s: &str) -> Option<ModelSpec> {
        Self::ALL.into_iter().find(|m| m.to_string().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Response and additional covariates for a model run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelOptions {
    pub response: String,
    /// Extra regressors; names starting with `attr.` are categorical.
    pub extras: Vec<String>,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            response: DEFAULT_RESPONSE.to_string(),
            extras: Vec::new(),
        }
    }
}

/// Column table of every numeric and categorical row variable.
pub fn rows_table(rows: &[AuthorAnalysisRow]) -> Table {
    let mut t = Table::new(rows.len());
    t.ids = rows.iter().map(|r| r.author_id.clone()).collect();
    let mut numeric: Vec<String> = CORE_NUMERIC.iter().map(|s| s.to_string()).collect();
    let mut covs = std::collections::BTreeSet::new();
    let mut attrs = std::collections::BTreeSet::new();
    for r in rows {
        covs.extend(r.covariates.keys().cloned());
        attrs.extend(r.attributes.keys().cloned());
    }
    numeric.extend(covs);
    numeric.extend(Group::LABELED.iter().map(|g| format!("group_{}", g.as_str())));
    for name in &numeric {
        t.add_numeric(name, rows.iter().map(|r| r.get(name)).collect());
    }
    for name in ["year_first", "area_first"] {
        t.add_categorical(name, rows.iter().map(|r| r.category(name)).collect());
    }
    for name in ["group", "group_future"] {
        t.add_categorical(
            name,
            rows.iter()
                .map(|r| r.category(name).filter(|g| g != Group::Excluded.as_str()))
                .collect(),
        );
    }
    for a in attrs {
        let name = format!("attr.{a}");
        t.add_categorical(&name, rows.iter().map(|r| r.category(&name)).collect());
    }
    t
}

fn term_for(name: &str) -> Term {
    if name.starts_with("attr.") {
        Term::cat(name)
    } else {
        Term::num(name)
    }
}

/// Automatic S11 covariates: at most 5% missing and not constant. Exact
/// duplicates of an earlier automatic column are skipped as well.
fn usable_auto(values: &[Option<f64>]) -> bool {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let missing = values.len() - present.len();
    if missing as f64 > 0.05 * values.len() as f64 {
        return false;
    }
    present.iter().any(|v| *v != present[0])
}

fn controls() -> Vec<Term> {
    vec![
        Term::num("logcit_past"),
        Term::num("p_past"),
        Term::cat("year_first"),
        Term::cat("area_first"),
    ]
}

/// Response and regressors of a model over a table.
pub fn model_terms(spec: ModelSpec, table: &Table, options: &ModelOptions) -> Result<(String, Vec<Term>)> {
    let response = options.response.clone();
    let s4 = || {
        let mut t = controls();
        t.push(Term::num("ep_past"));
        t.push(Term::num("ed_past"));
        t
    };
    let mut terms = match spec {
        ModelSpec::S3 => {
            let mut t = controls();
            t.push(Term::num("ep_past"));
            t
        }
        ModelSpec::S4 => s4(),
        ModelSpec::S5 => vec![Term::num("ep_past"), Term::num("ed_past")],
        ModelSpec::S6 => {
            let mut t = controls();
            t.push(Term::cat_ref("group", Group::D.as_str()));
            t
        }
        ModelSpec::S8 => {
            let mut t = controls();
            t.push(Term::num("ep_future"));
            t.push(Term::num("ed_future"));
            t
        }
        ModelSpec::S9 => {
            if response == DEFAULT_RESPONSE {
                return Err(Error::Config("S9 needs a covariate as its response".into()));
            }
            s4()
        }
        ModelSpec::S10 => s4(),
        ModelSpec::S11 => {
            let mut t = s4();
            let mut auto: Vec<&[Option<f64>]> = Vec::new();
            for name in table.numeric_names() {
                if !name.starts_with("past.") || t.iter().any(|x| x.name() == name) {
                    continue;
                }
                let values = table.numeric(name)?;
                if usable_auto(values) && !auto.contains(&values) {
                    auto.push(values);
                    t.push(Term::num(name));
                }
            }
            t
        }
    };
    if matches!(spec, ModelSpec::S10 | ModelSpec::S11 | ModelSpec::S9) {
        for e in &options.extras {
            if !terms.iter().any(|t| t.name() == e) && *e != response {
                terms.push(term_for(e));
            }
        }
    }
    for t in &terms {
        match t {
            Term::Numeric(n) => {
                table.numeric(n)?;
            }
            Term::Categorical { name, .. } => {
                table.categorical(name)?;
            }
        }
    }
    table.numeric(&response)?;
    Ok((response, terms))
}

#[derive(Debug, Clone)]
pub struct ModelFit {
    pub spec: ModelSpec,
    pub terms: Vec<Term>,
    pub design: DesignMatrix,
    pub result: RegressionResult,
}

pub fn run_model_table(table: &Table, spec: ModelSpec, options: &ModelOptions) -> Result<ModelFit> {
    let (response, terms) = model_terms(spec, table, options)?;
    let design = DesignMatrix::build(table, &response, &terms)?;
    let result = ols_fit(&design, None)?;
    Ok(ModelFit {
        spec,
        terms,
        design,
        result,
    })
}

pub fn run_model(rows: &[AuthorAnalysisRow], spec: ModelSpec, options: &ModelOptions) -> Result<ModelFit> {
    run_model_table(&rows_table(rows), spec, options)
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapCoefs {
    pub names: Vec<String>,
    pub estimates: Vec<f64>,
    /// Percentile 95% intervals; `None` if every replicate failed.
    pub intervals: Vec<Option<Interval>>,
    pub replicates: usize,
    pub failed: usize,
    pub seed: u64,
}

impl BootstrapCoefs {
    pub fn interval(&self, name: &str) -> Option<Interval> {
        let j = self.names.iter().position(|n| n == name)?;
        self.intervals[j]
    }
}

/// Case-resampling bootstrap of a fitted model's coefficients; replicates
/// that lose a dummy level are rank deficient and counted as failed.
pub fn bootstrap_model(fit: &ModelFit, replicates: usize, seed: u64) -> BootstrapCoefs {
    let design = &fit.design;
    let n = design.nrows();
    let draws: Vec<Option<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = replicate_rng(seed, b as u64);
            let pick = resample_indices(&mut rng, n);
            let x = design.x.select_rows(&pick);
            let y = DVector::from_iterator(n, pick.iter().map(|&i| design.y[i]));
            qr_coef(&x, &y, &design.names).ok().map(|c| c.iter().copied().collect())
        })
        .collect();
    let failed = draws.iter().filter(|d| d.is_none()).count();
    let intervals = (0..fit.result.names.len())
        .map(|j| {
            let v: Vec<f64> = draws.iter().flatten().map(|d| d[j]).collect();
            percentile_interval(&v, 0.05)
        })
        .collect();
    BootstrapCoefs {
        names: fit.result.names.clone(),
        estimates: fit.result.coef.clone(),
        intervals,
        replicates,
        failed,
        seed,
    }
}
