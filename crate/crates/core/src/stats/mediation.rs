//! Product-of-coefficients mediation with percentile bootstrap intervals.

use rayon::prelude::*;
use serde::Serialize;

use super::bootstrap::{bootstrap_pvalue, percentile_interval, replicate_rng, resample_indices, Interval};
use super::design::{DesignMatrix, Table, Term};
use super::hypothesis::pearson;
use super::linear::ols_fit;
use crate::error::{Error, Result};

/// Correlation between treatment and mediator above which a warning is raised.
pub const COLLINEARITY_WARNING: f64 = 0.9;

#[derive(Debug, Clone, Serialize)]
pub struct MediationResult {
    pub treatment: String,
    pub mediator: String,
    pub outcome: String,
    /// Mediator model slope on treatment.
    pub a: f64,
    /// Outcome model slope on mediator.
    pub b: f64,
    pub acme: f64,
    pub ade: f64,
    pub total: f64,
    pub acme_ci: Option<Interval>,
    pub ade_ci: Option<Interval>,
    pub total_ci: Option<Interval>,
    pub acme_p: Option<f64>,
    pub ade_p: Option<f64>,
    pub total_p: Option<f64>,
    pub n: usize,
    pub replicates: usize,
    pub failed: usize,
    pub seed: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct Effects {
    a: f64,
    b: f64,
    c: f64,
}

fn effects(table: &Table, treatment: &str, mediator: &str, outcome: &str, controls: &[Term]) -> Result<Effects> {
    let mut mt = vec![Term::num(treatment)];
    mt.extend(controls.iter().cloned());
    let m_design = DesignMatrix::build(table, mediator, &mt)?;
    let m_fit = ols_fit(&m_design, None)?;

    let mut yt = vec![Term::num(treatment), Term::num(mediator)];
    yt.extend(controls.iter().cloned());
    let y_design = DesignMatrix::build(table, outcome, &yt)?;
    let y_fit = ols_fit(&y_design, None)?;
    Ok(Effects {
        a: m_fit.coef_of(treatment)?,
        b: y_fit.coef_of(mediator)?,
        c: y_fit.coef_of(treatment)?,
    })
}

/// Fits `M ~ a T + controls` and `Y ~ c T + b M + controls` on complete
/// cases; ACME = a·b, ADE = c, total = ACME + ADE.
#[allow(clippy::too_many_arguments)]
pub fn mediation(
    table: &Table,
    treatment: &str,
    mediator: &str,
    outcome: &str,
    controls: &[Term],
    replicates: usize,
    seed: u64,
    min_rows: usize,
) -> Result<MediationResult> {
    let mut needed = vec![Term::num(treatment), Term::num(mediator)];
    needed.extend(controls.iter().cloned());
    let complete = DesignMatrix::build(table, outcome, &needed)?;
    let rows = complete.rows.clone();
    if rows.len() < min_rows.max(3) {
        return Err(Error::InsufficientData(format!(
            "{} complete rows for mediation, need {min_rows}",
            rows.len()
        )));
    }
    let base = table.take(&rows);
    let e = effects(&base, treatment, mediator, outcome, controls)?;

    let mut warnings = Vec::new();
    let t = base.complete(treatment)?;
    let m = base.complete(mediator)?;
    if let Ok(r) = pearson(&t, &m) {
        if r.abs() > COLLINEARITY_WARNING {
            warnings.push(format!(
                "treatment `{treatment}` and mediator `{mediator}` are highly correlated (r = {r:.3})"
            ));
        }
    }

    let n = rows.len();
    let draws: Vec<Option<Effects>> = (0..replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = replicate_rng(seed, b as u64);
            let idx = resample_indices(&mut rng, n);
            effects(&base.take(&idx), treatment, mediator, outcome, controls).ok()
        })
        .collect();
    let ok: Vec<Effects> = draws.iter().flatten().copied().collect();
    let acme: Vec<f64> = ok.iter().map(|d| d.a * d.b).collect();
    let ade: Vec<f64> = ok.iter().map(|d| d.c).collect();
    let total: Vec<f64> = ok.iter().map(|d| d.a * d.b + d.c).collect();
    Ok(MediationResult {
        treatment: treatment.to_string(),
        mediator: mediator.to_string(),
        outcome: outcome.to_string(),
        a: e.a,
        b: e.b,
        acme: e.a * e.b,
        ade: e.c,
        total: e.a * e.b + e.c,
        acme_ci: percentile_interval(&acme, 0.05),
        ade_ci: percentile_interval(&ade, 0.05),
        total_ci: percentile_interval(&total, 0.05),
        acme_p: bootstrap_pvalue(&acme),
        ade_p: bootstrap_pvalue(&ade),
        total_p: bootstrap_pvalue(&total),
        n,
        replicates,
        failed: replicates - ok.len(),
        seed,
        warnings,
    })
}
