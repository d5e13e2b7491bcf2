//! Inverse-propensity weighting with multi-arm ATE and ATT estimands.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::propensity::{balance_table, multi_propensity, BalanceRow, CovariateMatrix, PropensityMethod};
use crate::error::{Error, Result};
use crate::metrics::{quantile, AuthorAnalysisRow, Group};
use crate::stats::{ols_fit, rows_table, t_quantile, DesignMatrix, Table, Term};

/// A comparison arm: one or more group labels pooled together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arm {
    pub label: String,
    pub members: Vec<String>,
}

impl Arm {
    pub fn group(g: Group) -> Self {
        Self {
            label: g.as_str().to_string(),
            members: vec![g.as_str().to_string()],
        }
    }

    /// Every labelled group except `g`.
    pub fn rest_of(g: Group) -> Self {
        let members: Vec<String> = Group::LABELED
            .iter()
            .filter(|&&x| x != g)
            .map(|x| x.as_str().to_string())
            .collect();
        Self {
            label: format!("not_{}", g.as_str()),
            members,
        }
    }

    pub fn four_groups() -> Vec<Arm> {
        Group::LABELED.iter().map(|&g| Arm::group(g)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Estimand {
    #[default]
    Ate,
    Att,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightConfig {
    pub method: PropensityMethod,
    pub estimand: Estimand,
    /// Weights above this percentile are clipped to it; `None` disables trimming.
    pub trim_percentile: Option<f64>,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            method: PropensityMethod::Logistic,
            estimand: Estimand::Ate,
            trim_percentile: Some(99.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmEffect {
    pub arm: String,
    pub estimate: f64,
    pub se: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub p: f64,
    /// `exp(estimate) - 1`.
    pub percent: f64,
}

impl ArmEffect {
    pub fn ci_contains(&self, x: f64) -> bool {
        self.ci_lower <= x && x <= self.ci_upper
    }

    pub fn ci_excludes_zero(&self) -> bool {
        !self.ci_contains(0.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightedEstimate {
    pub estimand: Estimand,
    pub baseline: String,
    pub treated: Option<String>,
    pub effects: Vec<ArmEffect>,
    pub ids: Vec<String>,
    pub arms: Vec<String>,
    pub weights: Vec<f64>,
    pub trimmed: usize,
    pub balance: Vec<BalanceRow>,
}

impl WeightedEstimate {
    pub fn effect(&self, arm: &str) -> Option<&ArmEffect> {
        self.effects.iter().find(|e| e.arm == arm)
    }

    /// Weights as `author_id,group,weight`.
    pub fn write_weights_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["author_id", "group", "weight"])?;
        for i in 0..self.ids.len() {
            w.write_record([self.ids[i].as_str(), self.arms[i].as_str(), &self.weights[i].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn log_to_percent(delta_log: f64) -> f64 {
    delta_log.exp() - 1.0
}

/// Weighted estimate of arm effects against `baseline` (an index into
/// `arms`). Under ATT, `treated` names the arm whose distribution the others
/// are reweighted to.
#[allow(clippy::too_many_arguments)]
pub fn psw_table(
    table: &Table,
    group_column: &str,
    arms: &[Arm],
    baseline: usize,
    treated: Option<usize>,
    covariates: &[Term],
    outcome: &str,
    config: &WeightConfig,
) -> Result<WeightedEstimate> {
    if arms.len() < 2 || baseline >= arms.len() {
        return Err(Error::Config("weighting needs at least two arms and a valid baseline".into()));
    }
    let labels = table.categorical(group_column)?;
    let complete = CovariateMatrix::complete_rows(table, covariates, &[outcome])?;
    let mut rows = Vec::new();
    let mut arm_of = Vec::new();
    for i in complete {
        if let Some(l) = &labels[i] {
            if let Some(a) = arms.iter().position(|a| a.members.contains(l)) {
                rows.push(i);
                arm_of.push(a);
            }
        }
    }
    for (a, arm) in arms.iter().enumerate() {
        let count = arm_of.iter().filter(|&&x| x == a).count();
        if count < 2 {
            return Err(Error::InsufficientData(format!(
                "arm {} has {count} members; at least 2 are needed",
                arm.label
            )));
        }
    }
    let cov = CovariateMatrix::build(table, &rows, covariates)?;
    let p = multi_propensity(&cov, &arm_of, arms.len(), config.method)?;

    let treated_arm = match config.estimand {
        Estimand::Ate => None,
        Estimand::Att => Some(treated.ok_or_else(|| Error::Config("ATT needs a treated arm".into()))?),
    };
    let mut weights: Vec<f64> = (0..rows.len())
        .map(|i| {
            let own = p[i][arm_of[i]];
            match treated_arm {
                None => 1.0 / own,
                Some(t) if arm_of[i] == t => 1.0,
                Some(t) => p[i][t] / own,
            }
        })
        .collect();
    let mut trimmed = 0;
    if let Some(pct) = config.trim_percentile {
        let cap = quantile(&weights, pct / 100.0);
        for w in &mut weights {
            if *w > cap {
                *w = cap;
                trimmed += 1;
            }
        }
    }

    let mut sub = table.take(&rows);
    let arm_labels: Vec<Option<String>> = arm_of.iter().map(|&a| Some(arms[a].label.clone())).collect();
    sub.add_categorical("__arm", arm_labels.clone());
    let design = DesignMatrix::build(&sub, outcome, &[Term::cat_ref("__arm", &arms[baseline].label)])?;
    let fit = ols_fit(&design, Some(&weights))?;
    let q = t_quantile(0.975, fit.df);
    let mut effects = Vec::new();
    for (a, arm) in arms.iter().enumerate() {
        if a == baseline {
            continue;
        }
        let j = fit.index(&format!("__arm[{}]", arm.label))?;
        let (b, se) = (fit.coef[j], fit.se[j]);
        effects.push(ArmEffect {
            arm: arm.label.clone(),
            estimate: b,
            se,
            ci_lower: b - q * se,
            ci_upper: b + q * se,
            p: fit.p[j],
            percent: log_to_percent(b),
        });
    }

    let reference = treated_arm.unwrap_or(baseline);
    let is_ref: Vec<bool> = arm_of.iter().map(|&a| a == reference).collect();
    let other = if reference == baseline {
        (0..arms.len()).find(|&a| a != baseline).expect("two arms")
    } else {
        baseline
    };
    let keep: Vec<usize> = (0..rows.len())
        .filter(|&i| arm_of[i] == reference || arm_of[i] == other)
        .collect();
    let sub_cov = CovariateMatrix {
        names: cov.names.clone(),
        x: cov.x.select_rows(&keep),
    };
    let sub_flags: Vec<bool> = keep.iter().map(|&i| is_ref[i]).collect();
    let sub_w: Vec<f64> = keep.iter().map(|&i| weights[i]).collect();
    let balance = balance_table(&sub_cov, &sub_flags, &sub_w);

    Ok(WeightedEstimate {
        estimand: config.estimand,
        baseline: arms[baseline].label.clone(),
        treated: treated_arm.map(|t| arms[t].label.clone()),
        effects,
        ids: rows
            .iter()
            .map(|&i| table.ids.get(i).cloned().unwrap_or_else(|| i.to_string()))
            .collect(),
        arms: arm_labels.into_iter().map(|l| l.expect("labelled")).collect(),
        weights,
        trimmed,
        balance,
    })
}

/// Four-group (or pooled-arm) weighting over analysis rows using past groups.
pub fn psw(
    rows: &[AuthorAnalysisRow],
    arms: &[Arm],
    baseline: usize,
    treated: Option<usize>,
    covariates: &[Term],
    outcome: &str,
    config: &WeightConfig,
) -> Result<WeightedEstimate> {
    psw_table(&rows_table(rows), "group", arms, baseline, treated, covariates, outcome, config)
}

/// ATE of every group against `baseline` (usually D).
pub fn psw_ate(
    rows: &[AuthorAnalysisRow],
    baseline: Group,
    covariates: &[Term],
    outcome: &str,
    method: PropensityMethod,
) -> Result<WeightedEstimate> {
    let arms = Arm::four_groups();
    let b = arms.iter().position(|a| a.label == baseline.as_str()).expect("labelled group");
    let config = WeightConfig {
        method,
        ..Default::default()
    };
    psw(rows, &arms, b, None, covariates, outcome, &config)
}

/// ATT of `treated` against the pooled remaining groups.
pub fn psw_att(
    rows: &[AuthorAnalysisRow],
    treated: Group,
    covariates: &[Term],
    outcome: &str,
    method: PropensityMethod,
) -> Result<WeightedEstimate> {
    let arms = vec![Arm::rest_of(treated), Arm::group(treated)];
    let config = WeightConfig {
        method,
        estimand: Estimand::Att,
        ..Default::default()
    };
    psw(rows, &arms, 0, Some(1), covariates, outcome, &config)
}
