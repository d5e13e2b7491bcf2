//! Two-sample and k-sample tests, paired t-test and correlation.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::linear::t_pvalue;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub d: f64,
    pub p: f64,
}

/// Asymptotic Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // Small-lambda series of the CDF.
        let c = (2.0 * std::f64::consts::PI).sqrt() / lambda;
        let f = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let cdf = c * (1..=7).map(|k| ((2 * k - 1) as f64).powi(2) * f).map(f64::exp).sum::<f64>();
        1.0 - cdf
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-16 {
                break;
            }
        }
        2.0 * s
    };
    p.clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InsufficientData("K-S test needs two nonempty samples".into()));
    }
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (nx, ny) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / nx - j as f64 / ny).abs());
    }
    if d == 0.0 {
        return Ok(KsResult { d, p: 1.0 });
    }
    let en = (nx * ny / (nx + ny)).sqrt();
    Ok(KsResult {
        d,
        p: kolmogorov_sf(en * d),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KwResult {
    pub h: f64,
    pub df: usize,
    pub p: f64,
}

/// Average ranks (1-based) with ties sharing their mean rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = r;
        }
        i = j + 1;
    }
    out
}

/// Kruskal–Wallis H test with tie correction.
pub fn kruskal_wallis(groups: &[&[f64]]) -> Result<KwResult> {
    let groups: Vec<&[f64]> = groups.iter().copied().filter(|g| !g.is_empty()).collect();
    if groups.len() < 2 {
        return Err(Error::InsufficientData("Kruskal-Wallis needs two nonempty groups".into()));
    }
    let all: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let n = all.len() as f64;
    let df = groups.len() - 1;
    let r = ranks(&all);
    let mut h = 0.0;
    let mut offset = 0;
    for g in &groups {
        let sum: f64 = r[offset..offset + g.len()].iter().sum();
        h += sum * sum / g.len() as f64;
        offset += g.len();
    }
    h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);

    let mut sorted = all.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    let correction = 1.0 - ties / (n * n * n - n);
    if correction <= 0.0 {
        return Ok(KwResult { h: 0.0, df, p: 1.0 });
    }
    let h = (h / correction).max(0.0);
    let p = ChiSquared::new(df as f64)
        .map(|c| c.sf(h))
        .unwrap_or(1.0)
        .clamp(0.0, 1.0);
    Ok(KwResult { h, df, p })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedT {
    pub mean_diff: f64,
    pub t: f64,
    pub df: usize,
    pub p: f64,
}

/// Paired t-test on `x − y`.
pub fn paired_t_test(x: &[f64], y: &[f64]) -> Result<PairedT> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData("paired t-test needs two equal samples of size >= 2".into()));
    }
    let n = x.len() as f64;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let df = x.len() - 1;
    let t = if se > 0.0 {
        mean / se
    } else if mean == 0.0 {
        0.0
    } else {
        f64::INFINITY * mean.signum()
    };
    Ok(PairedT {
        mean_diff: mean,
        t,
        df,
        p: t_pvalue(t, df),
    })
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InsufficientData("pearson needs two equal samples of size >= 2".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("x".into()));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("y".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
