//! Propensity models and covariate balance.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{boosted_stumps_fit, logistic_fit_matrix, BoostParams, DesignMatrix, Table, Term, INTERCEPT};

/// How propensities are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PropensityMethod {
    #[default]
    Logistic,
    Boosted(BoostParams),
}

/// The usual propensity covariates: past impact, past paper count, first
/// year and first area; past EP is added when treating on ED.
pub fn default_covariates(include_ep: bool) -> Vec<Term> {
    let mut t = vec![
        Term::num("logcit_past"),
        Term::num("p_past"),
        Term::num("year_first"),
        Term::cat("area_first"),
    ];
    if include_ep {
        t.push(Term::num("ep_past"));
    }
    t
}

/// Covariate matrix over `rows` of `table`, with constant columns removed.
#[derive(Debug, Clone)]
pub struct CovariateMatrix {
    pub names: Vec<String>,
    pub x: DMatrix<f64>,
}

impl CovariateMatrix {
    /// Builds covariates for the given table rows. Every row must be complete.
    pub fn build(table: &Table, rows: &[usize], covariates: &[Term]) -> Result<Self> {
        let sub = table.take(rows);
        let mut probe = sub.clone();
        probe.add_complete("__one", &vec![1.0; rows.len()]);
        let design = DesignMatrix::build(&probe, "__one", covariates)?;
        if design.nrows() != rows.len() {
            return Err(Error::InsufficientData(format!(
                "{} rows have missing propensity covariates",
                rows.len() - design.nrows()
            )));
        }
        let keep: Vec<usize> = (0..design.ncols())
            .filter(|&j| {
                design.names[j] == INTERCEPT || {
                    let c = design.x.column(j);
                    c.iter().any(|&v| v != c[0])
                }
            })
            .collect();
        Ok(Self {
            names: keep.iter().map(|&j| design.names[j].clone()).collect(),
            x: design.x.select_columns(&keep),
        })
    }

    /// Columns other than the intercept.
    pub fn covariate_columns(&self) -> impl Iterator<Item = (usize, &String)> {
        self.names.iter().enumerate().filter(|(_, n)| *n != INTERCEPT)
    }

    /// Rows that are complete in `covariates` and every numeric `also` column.
    pub fn complete_rows(table: &Table, covariates: &[Term], also: &[&str]) -> Result<Vec<usize>> {
        let mut probe = table.clone();
        probe.add_complete("__one", &vec![1.0; table.len()]);
        let mut terms = covariates.to_vec();
        terms.extend(also.iter().map(|n| Term::num(n)));
        Ok(DesignMatrix::build(&probe, "__one", &terms)?.rows)
    }
}

/// `P(label = 1 | x)` under the chosen method, clipped to `[1e-6, 1-1e-6]`.
pub fn binary_propensity(cov: &CovariateMatrix, labels: &[f64], method: PropensityMethod) -> Result<Vec<f64>> {
    match method {
        PropensityMethod::Logistic => {
            let m = logistic_fit_matrix(&cov.x, labels, &cov.names, None)?;
            Ok(m.predict(&cov.x))
        }
        PropensityMethod::Boosted(params) => {
            let m = boosted_stumps_fit(&cov.x, labels, None, params)?;
            Ok(m.predict(&cov.x))
        }
    }
}

/// One-vs-rest propensities for `k` arms, normalized to sum to one per row.
pub fn multi_propensity(
    cov: &CovariateMatrix,
    arm: &[usize],
    k: usize,
    method: PropensityMethod,
) -> Result<Vec<Vec<f64>>> {
    let n = arm.len();
    let mut p = vec![vec![0.0; k]; n];
    if k == 2 {
        let labels: Vec<f64> = arm.iter().map(|&a| f64::from(u8::from(a == 1))).collect();
        let q = binary_propensity(cov, &labels, method)?;
        for i in 0..n {
            p[i] = vec![1.0 - q[i], q[i]];
        }
        return Ok(p);
    }
    for g in 0..k {
        let labels: Vec<f64> = arm.iter().map(|&a| f64::from(u8::from(a == g))).collect();
        let q = binary_propensity(cov, &labels, method)?;
        for i in 0..n {
            p[i][g] = q[i];
        }
    }
    for row in &mut p {
        let s: f64 = row.iter().sum();
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    Ok(p)
}

/// Standardized mean difference of one covariate between two weighted samples.
pub fn smd(treated: &[(f64, f64)], control: &[(f64, f64)]) -> f64 {
    let stats = |s: &[(f64, f64)]| {
        let w: f64 = s.iter().map(|p| p.1).sum();
        let m = s.iter().map(|p| p.0 * p.1).sum::<f64>() / w;
        let v = s.iter().map(|p| p.1 * (p.0 - m).powi(2)).sum::<f64>() / w;
        (m, v)
    };
    if treated.is_empty() || control.is_empty() {
        return f64::NAN;
    }
    let (mt, vt) = stats(treated);
    let (mc, vc) = stats(control);
    let pooled = ((vt + vc) / 2.0).sqrt();
    if pooled == 0.0 {
        if mt == mc {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (mt - mc) / pooled
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceRow {
    pub covariate: String,
    pub smd_before: f64,
    pub smd_after: f64,
}

/// Balance between treated and control rows before (unit weights) and after
/// (given weights; zero excludes a row).
pub fn balance_table(cov: &CovariateMatrix, treated: &[bool], after_weights: &[f64]) -> Vec<BalanceRow> {
    cov.covariate_columns()
        .map(|(j, name)| {
            let col = cov.x.column(j);
            let split = |w: &dyn Fn(usize) -> f64| {
                let mut t = Vec::new();
                let mut c = Vec::new();
                for i in 0..col.len() {
                    let wi = w(i);
                    if wi > 0.0 {
                        if treated[i] {
                            t.push((col[i], wi));
                        } else {
                            c.push((col[i], wi));
                        }
                    }
                }
                smd(&t, &c)
            };
            BalanceRow {
                covariate: name.clone(),
                smd_before: split(&|_| 1.0),
                smd_after: split(&|i| after_weights[i]),
            }
        })
        .collect()
}
