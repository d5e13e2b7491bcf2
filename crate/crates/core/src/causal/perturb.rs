//! Gaussian perturbation of a metric column.

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::metrics::AuthorAnalysisRow;
use crate::stats::replicate_rng;

/// Adds independent `N(0, sigma^2)` noise to `column`; values are not clipped.
/// Missing values stay missing.
pub fn perturb_gaussian(rows: &[AuthorAnalysisRow], column: &str, sigma: f64, seed: u64) -> Result<Vec<AuthorAnalysisRow>> {
    if !(sigma >= 0.0) {
        return Err(Error::Config("sigma must be non-negative".into()));
    }
    if let Some(r) = rows.first() {
        if !r.has_variable(column) {
            return Err(Error::UnknownColumn(column.to_string()));
        }
    }
    let mut out = rows.to_vec();
    if sigma == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = replicate_rng(seed, 0);
    for r in &mut out {
        let noise = normal.sample(&mut rng);
        if let Some(v) = r.get(column) {
            r.set(column, v + noise)?;
        }
    }
    Ok(out)
}
