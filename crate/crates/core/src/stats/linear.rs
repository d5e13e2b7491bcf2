//! Ordinary and weighted least squares via Householder QR.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::design::{population_sd, DesignMatrix, INTERCEPT};
use crate::error::{Error, Result};

/// Significance stars: `***` p < 0.01, `**` p < 0.05, `*` p < 0.1.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegressionResult {
    pub response: String,
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub r2: f64,
    pub n: usize,
    pub df: usize,
    pub sigma: f64,
    pub dropped: usize,
    #[serde(skip)]
    pub cov: DMatrix<f64>,
}

impl RegressionResult {
    pub fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingVariable(name.to_string()))
    }

    pub fn coef_of(&self, name: &str) -> Result<f64> {
        Ok(self.coef[self.index(name)?])
    }

    pub fn p_of(&self, name: &str) -> Result<f64> {
        Ok(self.p[self.index(name)?])
    }

    pub fn se_of(&self, name: &str) -> Result<f64> {
        Ok(self.se[self.index(name)?])
    }

    /// Two-sided 95% interval from the t distribution with the residual df.
    pub fn ci95(&self, name: &str) -> Result<(f64, f64)> {
        let j = self.index(name)?;
        let q = t_quantile(0.975, self.df);
        Ok((self.coef[j] - q * self.se[j], self.coef[j] + q * self.se[j]))
    }

    pub fn stars_of(&self, name: &str) -> Result<&'static str> {
        Ok(stars(self.p_of(name)?))
    }

    /// Coefficient table: `term,estimate,se,t,p,stars`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["term", "estimate", "se", "t", "p", "stars"])?;
        for j in 0..self.names.len() {
            w.write_record([
                self.names[j].clone(),
                self.coef[j].to_string(),
                self.se[j].to_string(),
                self.t[j].to_string(),
                self.p[j].to_string(),
                stars(self.p[j]).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn t_quantile(prob: f64, df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df.max(1) as f64)
        .expect("valid t distribution")
        .inverse_cdf(prob)
}

/// Two-sided p-value of a t statistic.
pub fn t_pvalue(t: f64, df: usize) -> f64 {
    if t.is_nan() {
        return 1.0;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let dist = StudentsT::new(0.0, 1.0, df.max(1) as f64).expect("valid t distribution");
    (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
}

/// Solves least squares with a thin QR, detecting collinear columns.
pub(crate) struct QrSolve {
    pub beta: DVector<f64>,
    pub r_inv: DMatrix<f64>,
}

pub(crate) fn qr_solve(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<QrSolve> {
    let (beta, r_inv) = qr_parts(x, y, names, true)?;
    Ok(QrSolve {
        beta,
        r_inv: r_inv.expect("requested"),
    })
}

/// Least squares coefficients only.
pub(crate) fn qr_coef(x: &DMatrix<f64>, y: &DVector<f64>, names: &[String]) -> Result<DVector<f64>> {
    Ok(qr_parts(x, y, names, false)?.0)
}

fn qr_parts(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
    inverse: bool,
) -> Result<(DVector<f64>, Option<DMatrix<f64>>)> {
    let k = x.ncols();
    let qr = x.clone().qr();
    let r = qr.r();
    let mut bad = Vec::new();
    for j in 0..k {
        let norm = x.column(j).norm();
        if norm == 0.0 || r[(j, j)].abs() <= 1e-10 * norm.max(1.0) {
            bad.push(names[j].clone());
        }
    }
    if !bad.is_empty() {
        return Err(Error::RankDeficient(bad));
    }
    let mut qty = y.clone();
    qr.q_tr_mul(&mut qty);
    let beta = r
        .solve_upper_triangular(&qty.rows(0, k).into_owned())
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))?;
    let r_inv = if inverse {
        Some(
            r.solve_upper_triangular(&DMatrix::identity(k, k))
                .ok_or_else(|| Error::RankDeficient(names.to_vec()))?,
        )
    } else {
        None
    };
    Ok((beta, r_inv))
}

/// Least squares fit with classical standard errors. Weights, when given,
/// scale each row by `sqrt(w)`.
pub fn ols_fit(design: &DesignMatrix, weights: Option<&[f64]>) -> Result<RegressionResult> {
    let n = design.nrows();
    let k = design.ncols();
    if n <= k {
        return Err(Error::InsufficientData(format!(
            "{n} complete rows for {k} columns"
        )));
    }
    let w: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::InsufficientData("weights length differs from rows".into()));
            }
            if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::Config("weights must be positive and finite".into()));
            }
            w.to_vec()
        }
        None => vec![1.0; n],
    };
    let sw: Vec<f64> = w.iter().map(|v| v.sqrt()).collect();
    let xw = DMatrix::from_fn(n, k, |r, c| design.x[(r, c)] * sw[r]);
    let yw = DVector::from_fn(n, |r, _| design.y[r] * sw[r]);
    let sol = qr_solve(&xw, &yw, &design.names)?;

    let fitted = &xw * &sol.beta;
    let rss: f64 = (0..n).map(|r| (yw[r] - fitted[r]).powi(2)).sum();
    let wsum: f64 = w.iter().sum();
    let ybar = (0..n).map(|r| w[r] * design.y[r]).sum::<f64>() / wsum;
    let tss: f64 = (0..n).map(|r| w[r] * (design.y[r] - ybar).powi(2)).sum();
    let r2 = if tss > 0.0 { (1.0 - rss / tss).clamp(0.0, 1.0) } else { 0.0 };

    let df = n - k;
    let sigma2 = rss / df as f64;
    let cov = &sol.r_inv * sol.r_inv.transpose() * sigma2;
    let coef: Vec<f64> = sol.beta.iter().copied().collect();
    let se: Vec<f64> = (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let t: Vec<f64> = coef
        .iter()
        .zip(&se)
        .map(|(&b, &s)| {
            if s > 0.0 {
                b / s
            } else if b == 0.0 || b.abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY * b.signum()
            }
        })
        .collect();
    let p = t.iter().map(|&t| t_pvalue(t, df)).collect();
    Ok(RegressionResult {
        response: design.response.clone(),
        names: design.names.clone(),
        coef,
        se,
        t,
        p,
        r2,
        n,
        df,
        sigma: sigma2.sqrt(),
        dropped: design.dropped,
        cov,
    })
}

/// `coef · SD_x / SD_y` with population SDs over the design's rows; the
/// intercept gets `None`.
pub fn standardized_coef(result: &RegressionResult, design: &DesignMatrix) -> Result<Vec<Option<f64>>> {
    let sd_y = population_sd(&design.y);
    if sd_y == 0.0 {
        return Err(Error::ZeroVariance(design.response.clone()));
    }
    result
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            if name == INTERCEPT {
                return Ok(None);
            }
            let col: Vec<f64> = design.x.column(j).iter().copied().collect();
            let sd_x = population_sd(&col);
            if sd_x == 0.0 {
                return Err(Error::ZeroVariance(name.clone()));
            }
            Ok(Some(standardize(result.coef[j], sd_x, sd_y)))
        })
        .collect()
}

pub fn standardize(coef: f64, sd_x: f64, sd_y: f64) -> f64 {
    coef * sd_x / sd_y
}

/// E-value of a regression coefficient on a continuous outcome, using the
/// standardized-difference approximation `RR = exp(0.91 d)`.
pub fn e_value(coef: f64, sd_outcome: f64) -> f64 {
    let d = coef.abs() / sd_outcome;
    let rr = (0.91 * d).exp();
    e_value_rr(rr)
}

/// E-value of a risk ratio (`RR >= 1`; smaller ratios are inverted).
pub fn e_value_rr(rr: f64) -> f64 {
    let rr = if rr < 1.0 { 1.0 / rr } else { rr };
    if rr <= 1.0 {
        return 1.0;
    }
    rr + (rr * (rr - 1.0)).sqrt()
}
