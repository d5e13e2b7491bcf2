//! Greedy 1:1 nearest-neighbour propensity-score matching with a caliper.

use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::propensity::{balance_table, binary_propensity, BalanceRow, CovariateMatrix, PropensityMethod};
use crate::error::{Error, Result};
use crate::metrics::{quantile, AuthorAnalysisRow, Group};
use crate::stats::{kruskal_wallis, logit, paired_t_test, population_sd, rows_table, KwResult, PairedT, Table, Term};

/// How treatment is defined for matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "on", content = "groups", rename_all = "snake_case")]
pub enum TreatOn {
    /// Top half of past EP is treated.
    Ep,
    /// Top half of past ED is treated; past EP joins the covariates.
    Ed,
    /// First group treated, second control; other rows ignored.
    Groups(Group, Group),
}

impl TreatOn {
    /// Per-row treatment flag (`None` = not in the comparison).
    pub fn assign(&self, rows: &[AuthorAnalysisRow]) -> Vec<Option<bool>> {
        let by_median = |v: Vec<f64>| {
            if v.is_empty() {
                return Vec::new();
            }
            let m = quantile(&v, 0.5);
            v.into_iter().map(|x| Some(x >= m)).collect()
        };
        match self {
            TreatOn::Ep => by_median(rows.iter().map(|r| r.ep_past).collect()),
            TreatOn::Ed => by_median(rows.iter().map(|r| r.ed_past).collect()),
            TreatOn::Groups(t, c) => rows
                .iter()
                .map(|r| {
                    if r.group == *t {
                        Some(true)
                    } else if r.group == *c {
                        Some(false)
                    } else {
                        None
                    }
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    /// Caliper in standard deviations of the logit propensity.
    pub caliper_sd: f64,
    pub seed: u64,
    pub method: PropensityMethod,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            caliper_sd: 0.2,
            seed: 0,
            method: PropensityMethod::Logistic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchedPair {
    pub treated_id: String,
    pub control_id: String,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchResult {
    pub pairs: Vec<MatchedPair>,
    pub n_treated: usize,
    pub n_control: usize,
    pub unmatched_treated: usize,
    pub unmatched_control: usize,
    pub caliper: f64,
    pub balance: Vec<BalanceRow>,
    pub treated_mean: f64,
    pub control_mean: f64,
    /// Mean of treated-minus-control outcome over pairs.
    pub att: f64,
    pub paired_t: Option<PairedT>,
    pub kw: Option<KwResult>,
}

impl MatchResult {
    /// Pairs as `treated_id,control_id,logit_gap`.
    pub fn write_pairs_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["treated_id", "control_id", "logit_gap"])?;
        for p in &self.pairs {
            w.write_record([p.treated_id.as_str(), p.control_id.as_str(), &p.gap.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Greedy matching on scores: treated units in seeded random order each take
/// the nearest unused control within `caliper`. Returns `(treated, control)`
/// index pairs.
pub fn greedy_match(treated: &[f64], control: &[f64], caliper: f64, seed: u64) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..control.len()).collect();
    order.sort_by(|&a, &b| control[a].total_cmp(&control[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| control[i]).collect();
    let mut free: BTreeSet<usize> = (0..sorted.len()).collect();

    let mut t_order: Vec<usize> = (0..treated.len()).collect();
    t_order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut pairs = Vec::new();
    for t in t_order {
        let s = treated[t];
        let pos = sorted.partition_point(|&v| v < s);
        let above = free.range(pos..).next().copied();
        let below = free.range(..pos).next_back().copied();
        let best = match (below, above) {
            (Some(b), Some(a)) => {
                if (s - sorted[b]).abs() <= (sorted[a] - s).abs() {
                    Some(b)
                } else {
                    Some(a)
                }
            }
            (b, a) => b.or(a),
        };
        if let Some(c) = best {
            if (sorted[c] - s).abs() <= caliper {
                free.remove(&c);
                pairs.push((t, order[c]));
            }
        }
    }
    pairs
}

/// Matches treated to control rows of `table` on the logit propensity.
pub fn psm_table(
    table: &Table,
    treated: &[Option<bool>],
    covariates: &[Term],
    outcome: &str,
    config: &MatchConfig,
) -> Result<MatchResult> {
    let complete = CovariateMatrix::complete_rows(table, covariates, &[outcome])?;
    let rows: Vec<usize> = complete.into_iter().filter(|&i| treated[i].is_some()).collect();
    let flags: Vec<bool> = rows.iter().map(|&i| treated[i].expect("filtered")).collect();
    let n_treated = flags.iter().filter(|&&f| f).count();
    let n_control = flags.len() - n_treated;
    if n_treated == 0 || n_control == 0 {
        return Err(Error::InsufficientData("matching needs treated and control rows".into()));
    }
    let cov = CovariateMatrix::build(table, &rows, covariates)?;
    let labels: Vec<f64> = flags.iter().map(|&f| f64::from(u8::from(f))).collect();
    let p = binary_propensity(&cov, &labels, config.method)?;
    let lp: Vec<f64> = p.iter().map(|&v| logit(v)).collect();
    let caliper = config.caliper_sd * population_sd(&lp);

    let t_idx: Vec<usize> = (0..rows.len()).filter(|&i| flags[i]).collect();
    let c_idx: Vec<usize> = (0..rows.len()).filter(|&i| !flags[i]).collect();
    let t_lp: Vec<f64> = t_idx.iter().map(|&i| lp[i]).collect();
    let c_lp: Vec<f64> = c_idx.iter().map(|&i| lp[i]).collect();
    let matched = greedy_match(&t_lp, &c_lp, caliper, config.seed);
    if matched.is_empty() {
        return Err(Error::NoMatches(caliper));
    }

    let y = table.numeric(outcome)?;
    let id = |i: usize| table.ids.get(rows[i]).cloned().unwrap_or_else(|| rows[i].to_string());
    let mut pairs = Vec::new();
    let mut yt = Vec::new();
    let mut yc = Vec::new();
    let mut w_after = vec![0.0; rows.len()];
    for &(a, b) in &matched {
        let (ti, ci) = (t_idx[a], c_idx[b]);
        pairs.push(MatchedPair {
            treated_id: id(ti),
            control_id: id(ci),
            gap: (lp[ti] - lp[ci]).abs(),
        });
        yt.push(y[rows[ti]].expect("complete"));
        yc.push(y[rows[ci]].expect("complete"));
        w_after[ti] = 1.0;
        w_after[ci] = 1.0;
    }
    let treated_mean = yt.iter().sum::<f64>() / yt.len() as f64;
    let control_mean = yc.iter().sum::<f64>() / yc.len() as f64;
    Ok(MatchResult {
        n_treated,
        n_control,
        unmatched_treated: n_treated - pairs.len(),
        unmatched_control: n_control - pairs.len(),
        caliper,
        balance: balance_table(&cov, &flags, &w_after),
        treated_mean,
        control_mean,
        att: treated_mean - control_mean,
        paired_t: paired_t_test(&yt, &yc).ok(),
        kw: kruskal_wallis(&[&yt, &yc]).ok(),
        pairs,
    })
}

/// Matching over analysis rows with the usual covariates.
pub fn psm(
    rows: &[AuthorAnalysisRow],
    treat_on: TreatOn,
    covariates: &[Term],
    outcome: &str,
    config: &MatchConfig,
) -> Result<MatchResult> {
    let table = rows_table(rows);
    psm_table(&table, &treat_on.assign(rows), covariates, outcome, config)
}
