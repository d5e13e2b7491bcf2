//! Logistic regression by iteratively reweighted least squares.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::design::DesignMatrix;
use crate::error::{Error, Result};

pub const PROB_FLOOR: f64 = 1e-6;
const MAX_ITER: usize = 100;
const TOL: f64 = 1e-8;
const DEVIANCE_TOL: f64 = 1e-10;
const ETA_CLIP: f64 = 40.0;
const DIVERGENCE: f64 = 50.0;

pub fn sigmoid(eta: f64) -> f64 {
    let e = eta.clamp(-ETA_CLIP, ETA_CLIP);
    1.0 / (1.0 + (-e).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn clip_prob(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

/// Bernoulli deviance `-2 Σ w [y ln p + (1-y) ln(1-p)]` with clipped `p`.
pub fn bernoulli_deviance(y: &[f64], p: &[f64], weights: Option<&[f64]>) -> f64 {
    -2.0 * y
        .iter()
        .zip(p)
        .enumerate()
        .map(|(i, (&yi, &pi))| {
            let pi = pi.clamp(1e-15, 1.0 - 1e-15);
            let w = weights.map_or(1.0, |w| w[i]);
            w * (yi * pi.ln() + (1.0 - yi) * (1.0 - pi).ln())
        })
        .sum::<f64>()
}

#[derive(Debug, Clone, Serialize)]
pub struct LogisticModel {
    pub names: Vec<String>,
    pub coef: Vec<f64>,
    pub iterations: usize,
    pub deviance: f64,
}

impl LogisticModel {
    pub fn linear_predictor(&self, x: &DMatrix<f64>) -> Vec<f64> {
        let b = DVector::from_column_slice(&self.coef);
        (x * b).iter().copied().collect()
    }

    /// Probabilities clipped to `[1e-6, 1 - 1e-6]`.
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        self.linear_predictor(x)
            .into_iter()
            .map(|e| clip_prob(sigmoid(e)))
            .collect()
    }
}

fn check_labels(y: &[f64]) -> Result<()> {
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Config("logistic labels must be 0 or 1".into()));
    }
    let pos = y.iter().filter(|&&v| v == 1.0).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::InsufficientData("logistic fit needs both classes present".into()));
    }
    Ok(())
}

/// Fits `P(y=1) = sigmoid(X b)`; the design's response holds the 0/1 labels.
pub fn logistic_fit(design: &DesignMatrix, weights: Option<&[f64]>) -> Result<LogisticModel> {
    logistic_fit_matrix(&design.x, &design.y, &design.names, weights)
}

pub fn logistic_fit_matrix(
    x: &DMatrix<f64>,
    y: &[f64],
    names: &[String],
    weights: Option<&[f64]>,
) -> Result<LogisticModel> {
    let n = x.nrows();
    let k = x.ncols();
    if y.len() != n {
        return Err(Error::InsufficientData("labels length differs from rows".into()));
    }
    if n <= k {
        return Err(Error::InsufficientData(format!("{n} rows for {k} columns")));
    }
    check_labels(y)?;
    if let Some(w) = weights {
        if w.len() != n || w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Config("weights must be positive, finite and one per row".into()));
        }
    }
    let wt = |i: usize| weights.map_or(1.0, |w| w[i]);

    // Iterate on standardized columns; centering is absorbed by a constant column if present.
    let constant = (0..k).find(|&j| {
        let c = x.column(j);
        c[0] != 0.0 && c.iter().all(|&v| v == c[0])
    });
    let mut center = vec![0.0; k];
    let mut scale = vec![1.0; k];
    for j in (0..k).filter(|&j| Some(j) != constant) {
        let c = x.column(j);
        let mean = c.mean();
        let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        if sd > 0.0 {
            if constant.is_some() {
                center[j] = mean;
            }
            scale[j] = if constant.is_some() { sd } else { (sd * sd + mean * mean).sqrt() };
        }
    }
    let x = &DMatrix::from_fn(n, k, |i, j| (x[(i, j)] - center[j]) / scale[j]);
    let unscale = |gamma: &DVector<f64>| -> Vec<f64> {
        let mut beta: Vec<f64> = (0..k).map(|j| gamma[j] / scale[j]).collect();
        if let Some(c) = constant {
            let shift: f64 = (0..k).map(|j| beta[j] * center[j]).sum();
            beta[c] = (gamma[c] - shift) / x[(0, c)];
        }
        beta
    };

    let mut beta = DVector::<f64>::zeros(k);
    let mut last_deviance = f64::INFINITY;
    for iter in 1..=MAX_ITER {
        let eta = x * &beta;
        let mut h = DMatrix::<f64>::zeros(k, k);
        let mut g = DVector::<f64>::zeros(k);
        for i in 0..n {
            let p = sigmoid(eta[i]);
            let wi = wt(i) * (p * (1.0 - p)).max(1e-12);
            let ri = wt(i) * (y[i] - p);
            let row = x.row(i);
            for a in 0..k {
                let xa = row[a];
                if xa == 0.0 {
                    continue;
                }
                g[a] += xa * ri;
                for b in a..k {
                    h[(a, b)] += wi * xa * row[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }
        let step = match h.clone().cholesky() {
            Some(c) => c.solve(&g),
            None => h
                .lu()
                .solve(&g)
                .ok_or_else(|| Error::RankDeficient(names.to_vec()))?,
        };
        beta += &step;
        if !beta.iter().all(|b| b.is_finite()) || beta.amax() > DIVERGENCE {
            return Err(Error::Separation);
        }
        let p: Vec<f64> = (x * &beta).iter().map(|&e| sigmoid(e)).collect();
        let deviance = bernoulli_deviance(y, &p, weights);
        // Quasi-separated levels drift without diverging; the deviance settles.
        let settled = (last_deviance - deviance).abs() < DEVIANCE_TOL * (deviance.abs() + 0.1);
        if settled && deviance < 1e-6 {
            return Err(Error::Separation);
        }
        if step.amax() < TOL || settled {
            return Ok(LogisticModel {
                names: names.to_vec(),
                coef: unscale(&beta),
                iterations: iter,
                deviance,
            });
        }
        last_deviance = deviance;
    }
    Err(Error::NonConvergence {
        what: "logistic IRLS",
        iterations: MAX_ITER,
    })
}
