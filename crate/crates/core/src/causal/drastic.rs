//! Authors who switch strategy across the split point.

use serde::Serialize;

use super::weighting::{psw_table, Arm, ArmEffect, WeightConfig};
use crate::metrics::{AuthorAnalysisRow, Group};
use crate::stats::{rows_table, Term};

#[derive(Debug, Clone, Serialize)]
pub struct SwitchSummary {
    pub from: Group,
    pub to: Group,
    pub origin: usize,
    pub switchers: usize,
    pub fraction: Option<f64>,
    /// Mean of `logcit_future - logcit_past` over switchers.
    pub mean_change: Option<f64>,
    /// Weighted effect of switching versus staying on future impact.
    pub effect: Option<ArmEffect>,
    pub note: Option<String>,
}

/// D→A and A→D switchers, comparing past-group to future-group labels.
pub fn drastic_change_analysis(
    rows: &[AuthorAnalysisRow],
    covariates: &[Term],
    config: &WeightConfig,
) -> Vec<SwitchSummary> {
    [(Group::D, Group::A), (Group::A, Group::D)]
        .into_iter()
        .map(|(from, to)| switch_summary(rows, from, to, covariates, config))
        .collect()
}

fn switch_summary(
    rows: &[AuthorAnalysisRow],
    from: Group,
    to: Group,
    covariates: &[Term],
    config: &WeightConfig,
) -> SwitchSummary {
    let origin: Vec<&AuthorAnalysisRow> = rows.iter().filter(|r| r.group == from).collect();
    let switchers: Vec<&AuthorAnalysisRow> = origin.iter().copied().filter(|r| r.group_future == to).collect();
    let mut out = SwitchSummary {
        from,
        to,
        origin: origin.len(),
        switchers: switchers.len(),
        fraction: (!origin.is_empty()).then(|| switchers.len() as f64 / origin.len() as f64),
        mean_change: (!switchers.is_empty()).then(|| {
            switchers.iter().map(|r| r.logcit_future - r.logcit_past).sum::<f64>() / switchers.len() as f64
        }),
        effect: None,
        note: None,
    };
    if switchers.is_empty() {
        out.note = Some("no switchers".into());
        return out;
    }
    let mut table = rows_table(rows);
    let labels: Vec<Option<String>> = rows
        .iter()
        .map(|r| {
            if r.group != from {
                None
            } else if r.group_future == to {
                Some("switch".to_string())
            } else if r.group_future == from {
                Some("stay".to_string())
            } else {
                None
            }
        })
        .collect();
    table.add_categorical("__switch", labels);
    let arms = [
        Arm {
            label: "stay".into(),
            members: vec!["stay".into()],
        },
        Arm {
            label: "switch".into(),
            members: vec!["switch".into()],
        },
    ];
    match psw_table(&table, "__switch", &arms, 0, None, covariates, "logcit_future", config) {
        Ok(r) => out.effect = r.effects.into_iter().next(),
        Err(e) => out.note = Some(e.to_string()),
    }
    out
}
