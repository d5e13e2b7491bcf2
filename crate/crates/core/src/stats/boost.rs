//! Gradient-boosted decision stumps on Bernoulli deviance.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logistic::{bernoulli_deviance, clip_prob, logit, sigmoid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

impl Stump {
    fn apply(&self, x: f64) -> f64 {
        if x <= self.threshold {
            self.left
        } else {
            self.right
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoostedModel {
    pub init: f64,
    pub stumps: Vec<Stump>,
    /// Training deviance after the baseline and after each stump.
    pub deviance_path: Vec<f64>,
}

impl BoostedModel {
    pub fn log_odds(&self, x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|r| {
                self.init
                    + self
                        .stumps
                        .iter()
                        .map(|s| s.apply(x[(r, s.feature)]))
                        .sum::<f64>()
            })
            .collect()
    }

    /// Probabilities clipped to `[1e-6, 1 - 1e-6]`.
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        self.log_odds(x).into_iter().map(|e| clip_prob(sigmoid(e))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostParams {
    pub trees: usize,
    pub shrinkage: f64,
    pub seed: u64,
}

impl Default for BoostParams {
    fn default() -> Self {
        Self {
            trees: 200,
            shrinkage: 0.1,
            seed: 0,
        }
    }
}

/// Fits boosted stumps to 0/1 labels. Columns of `x` are candidate split
/// features; constant columns never split.
pub fn boosted_stumps_fit(
    x: &DMatrix<f64>,
    y: &[f64],
    weights: Option<&[f64]>,
    params: BoostParams,
) -> Result<BoostedModel> {
    let n = x.nrows();
    if y.len() != n || n == 0 {
        return Err(Error::InsufficientData("labels length differs from rows".into()));
    }
    if !(params.shrinkage > 0.0 && params.shrinkage <= 1.0) {
        return Err(Error::Config("shrinkage must lie in (0, 1]".into()));
    }
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Config("boosting labels must be 0 or 1".into()));
    }
    let w: Vec<f64> = weights.map_or_else(|| vec![1.0; n], <[f64]>::to_vec);
    let wsum: f64 = w.iter().sum();
    let prevalence = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / wsum;
    if prevalence <= 0.0 || prevalence >= 1.0 {
        return Err(Error::InsufficientData("constant labels".into()));
    }
    let init = logit(prevalence);
    let mut f = vec![init; n];
    let prob = |f: &[f64]| -> Vec<f64> { f.iter().map(|&e| sigmoid(e)).collect() };
    let mut deviance = bernoulli_deviance(y, &prob(&f), Some(&w));
    let mut path = vec![deviance];

    let k = x.ncols();
    let orders: Vec<Vec<usize>> = (0..k)
        .map(|j| {
            let mut o: Vec<usize> = (0..n).collect();
            o.sort_by(|&a, &b| x[(a, j)].total_cmp(&x[(b, j)]));
            o
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut stumps = Vec::new();

    for _ in 0..params.trees {
        let p = prob(&f);
        let g: Vec<f64> = (0..n).map(|i| w[i] * (y[i] - p[i])).collect();
        let h: Vec<f64> = (0..n).map(|i| w[i] * (p[i] * (1.0 - p[i])).max(1e-12)).collect();
        let gt: f64 = g.iter().sum();
        let ht: f64 = h.iter().sum();

        let mut features: Vec<usize> = (0..k).collect();
        features.shuffle(&mut rng);
        let mut best: Option<(f64, Stump)> = None;
        for &j in &features {
            let o = &orders[j];
            let (mut gl, mut hl) = (0.0, 0.0);
            for pos in 0..n - 1 {
                let i = o[pos];
                gl += g[i];
                hl += h[i];
                let v = x[(i, j)];
                let next = x[(o[pos + 1], j)];
                if next == v {
                    continue;
                }
                let (gr, hr) = (gt - gl, ht - hl);
                let gain = gl * gl / hl + gr * gr / hr - gt * gt / ht;
                if best.as_ref().is_none_or(|(b, _)| gain > *b + 1e-12) {
                    best = Some((
                        gain,
                        Stump {
                            feature: j,
                            threshold: (v + next) / 2.0,
                            left: gl / hl,
                            right: gr / hr,
                        },
                    ));
                }
            }
        }
        let Some((_, raw)) = best else { break };

        let mut scale = params.shrinkage;
        let mut accepted = None;
        for _ in 0..30 {
            let s = Stump {
                left: raw.left * scale,
                right: raw.right * scale,
                ..raw
            };
            let trial: Vec<f64> = (0..n).map(|i| f[i] + s.apply(x[(i, s.feature)])).collect();
            let dev = bernoulli_deviance(y, &prob(&trial), Some(&w));
            if dev <= deviance {
                accepted = Some((s, trial, dev));
                break;
            }
            scale /= 2.0;
        }
        let Some((s, trial, dev)) = accepted else { break };
        f = trial;
        deviance = dev;
        path.push(dev);
        stumps.push(s);
    }
    Ok(BoostedModel {
        init,
        stumps,
        deviance_path: path,
    })
}
