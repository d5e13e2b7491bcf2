//! Plot-data series for the report command.

use std::collections::BTreeMap;

use serde::Serialize;

use cautious_core::causal::{drastic_change_analysis, Estimand};
use cautious_core::metrics::{
    bin_value, cohort_compare, exploratory_flags, group_transitions, mean_ci, temporal_trajectories, Aggregate,
    ImpactMeasure, MeanCi, MetricContext, PaperImpact, SplitPoint,
};
use cautious_core::stats::{mediation, pearson, rows_table, run_model_table, ModelOptions, ModelSpec, Table};
use cautious_core::topicgraph::period_stability;
use cautious_core::{AuthorAnalysisRow, DistanceProvider, Group};

use crate::commands::{effect_record, try_psw_comparisons, EFFECT_HEADER};
use crate::config::{terms_of, ReportItem, RunConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::StageWriter;
use crate::pipeline::{covariates, csv_bytes, num, opt, stage, weight_config, Inputs};

const BIN_HEADER: [&str; 7] = ["metric", "bin", "n", "mean", "ci_lower", "ci_upper", "band"];

/// Centre of bin `k`, rounded so labels print cleanly.
fn bin_centre(k: i64, step: f64) -> f64 {
    (k as f64 * step * 1e9).round() / 1e9
}

/// Mean of `y` per `step`-wide bin of `x`, in ascending bin order.
fn binned(pairs: impl IntoIterator<Item = (f64, f64)>, step: f64) -> Vec<(f64, MeanCi)> {
    let mut bins: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for (x, y) in pairs {
        bins.entry((bin_value(x, step) / step).round() as i64).or_default().push(y);
    }
    bins.into_iter()
        .filter_map(|(k, ys)| mean_ci(&ys).map(|m| (bin_centre(k, step), m)))
        .collect()
}

fn bin_records<'a>(metric: &'a str, band: &str, bins: Vec<(f64, MeanCi)>) -> impl Iterator<Item = Vec<String>> + 'a {
    let band = band.to_string();
    bins.into_iter().map(move |(b, m)| {
        vec![
            metric.to_string(),
            num(b),
            m.n.to_string(),
            num(m.mean),
            num(m.lower),
            num(m.upper),
            band.clone(),
        ]
    })
}

pub fn run_report(config: &RunConfig, inputs: &Inputs) -> CliResult<()> {
    let items = &config.report.analyses;
    stage(config, "report", Some(inputs), |w| {
        for item in items {
            match item {
                ReportItem::Correlations => correlations(config, inputs, w)?,
                ReportItem::Marginal => marginal(config, inputs, w)?,
                ReportItem::Ate => ate_series(config, inputs, w)?,
                ReportItem::Thresholds => thresholds(config, inputs, w)?,
                ReportItem::Trajectories => trajectories(config, inputs, w)?,
                ReportItem::Cohorts => cohorts(config, inputs, w)?,
                ReportItem::Transitions => transitions(config, inputs, w)?,
                ReportItem::Stability => stability(config, inputs, w)?,
                ReportItem::Drastic => drastic(config, inputs, w)?,
                ReportItem::Mediation => mediation_table(config, inputs, w)?,
            }
        }
        Ok(())
    })
}

fn context<'a>(config: &RunConfig, inputs: &'a Inputs, provider: &'a DistanceProvider<'a>) -> MetricContext<'a, DistanceProvider<'a>> {
    MetricContext {
        corpus: &inputs.corpus,
        view: inputs.corpus.codes(),
        distances: provider,
        window: config.analysis.window,
        mode: config.analysis.distance_mode,
    }
}

fn correlations(config: &RunConfig, inputs: &Inputs, w: &mut StageWriter) -> CliResult<()> {
    let step = config.report.bin_step;
    let corpus = &inputs.corpus;
    let view = corpus.codes();
    let provider = inputs.provider(config);
    let ctx = context(config, inputs, &provider);
    let impact = PaperImpact::build(corpus, view, ImpactMeasure::LogC5);

    // Whole-career metrics against career impact.
    let mut career_ep = Vec::new();
    let mut career_ed = Vec::new();
    let mut switching: BTreeMap<i64, (usize, usize)> = BTreeMap::new();
    for c in corpus.careers() {
        let (ep, ed) = ctx.ep_ed(&c.papers);
        if let Some(y) = impact.aggregate(&c.papers, Aggregate::Mean) {
            if let Some(ep) = ep {
                career_ep.push((ep, y));
            }
            if let Some(ed) = ed {
                career_ed.push((ed, y));
            }
        }
        let flags = exploratory_flags(corpus, view, &c.papers, config.analysis.window);
        for (k, &flag) in flags.iter().enumerate() {
            if let Some(past) = impact.aggregate(&c.papers[..=k], Aggregate::Mean) {
                let e = switching.entry((bin_value(past, step) / step).round() as i64).or_default();
                e.0 += 1;
                e.1 += flag as usize;
            }
        }
    }
    let mut records: Vec<Vec<String>> = Vec::new();
    records.extend(bin_records("ep", "career", binned(career_ep.iter().copied(), step)));
    records.extend(bin_records("ed", "career", binned(career_ed.iter().copied(), step)));

    let rows = &inputs.rows(config).rows;
    let (lo, hi) = match config.report.control_band {
        Some(b) => b,
        None => {
            let past: Vec<f64> = rows.iter().map(|r| r.logcit_past).collect();
            if past.is_empty() {
                return Err(CliError::Analysis(cautious_core::Error::InsufficientData(
                    "no analysis rows for the controlled correlation".into(),
                )));
            }
            (
                cautious_core::metrics::quantile(&past, 0.4),
                cautious_core::metrics::quantile(&past, 0.6),
            )
        }
    };
    let band: Vec<&AuthorAnalysisRow> = rows
        .iter()
        .filter(|r| r.logcit_past >= lo && r.logcit_past <= hi)
        .collect();
    let label = format!("{lo}..{hi}");
    records.extend(bin_records("ep_past", &label, binned(band.iter().map(|r| (r.ep_past, r.logcit_future)), step)));
    records.extend(bin_records("ed_past", &label, binned(band.iter().map(|r| (r.ed_past, r.logcit_future)), step)));
    w.file("fig2_binned.csv", &csv_bytes(&BIN_HEADER, records)?)?;

    let switch_records = switching.into_iter().map(|(k, (n, e))| {
        vec![num(bin_centre(k, step)), n.to_string(), e.to_string(), num(e as f64 / n as f64)]
    });
    w.file(
        "fig2b_switching.csv",
        &csv_bytes(&["past_impact_bin", "papers", "exploratory", "probability"], switch_records)?,
    )?;

    #[derive(Serialize)]
    struct Summary {
        career_authors: usize,
        pearson_ep_impact: Option<f64>,
        pearson_ed_impact: Option<f64>,
        control_band: (f64, f64),
        control_rows: usize,
    }
    let r = |v: &[(f64, f64)]| {
        let (x, y): (Vec<f64>, Vec<f64>) = v.iter().copied().unzip();
        pearson(&x, &y).ok()
    };
    w.json(
        "fig2_summary.json",
        &Summary {
            career_authors: corpus.careers().len(),
            pearson_ep_impact: r(&career_ep),
            pearson_ed_impact: r(&career_ed),
            control_band: (lo, hi),
            control_rows: band.len(),
        },
    )
}

/// Predicted outcome along one regressor with the others at their means.
pub fn marginal_series(fit: &cautious_core::stats::ModelFit, column: &str, points: usize) -> CliResult<Vec<[f64; 4]>> {
    let d = &fit.design;
    let r = &fit.result;
    let j = d
        .column_index(column)
        .ok_or_else(|| CliError::Config(format!("model {} has no regressor `{column}`", fit.spec)))?;
    let means: Vec<f64> = (0..d.ncols()).map(|c| d.x.column(c).mean()).collect();
    let col = d.x.column(j);
    let (lo, hi) = (col.min(), col.max());
    let t = cautious_core::stats::t_quantile(0.975, r.df);
    let points = points.max(2);
    Ok((0..points)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
            let mut g = means.clone();
            g[j] = x;
            let pred: f64 = g.iter().zip(&r.coef).map(|(a, b)| a * b).sum();
            let mut var = 0.0;
            for a in 0..g.len() {
                for b in 0..g.len() {
                    var += g[a] * r.cov[(a, b)] * g[b];
                }
            }
            let half = t * var.max(0.0).sqrt();
            [x, pred, pred - half, pred + half]
        })
        .collect())
}

fn marginal(config: &RunConfig, inputs: &Inputs, w: &mut StageWriter) -> CliResult<()> {
    let section = config.regress.as_ref().expect("validated");
    let table = rows_table(&inputs.rows(config).rows);
    let options = ModelOptions {
        response: section.response.clone(),
        extras: section.extras.clone(),
    };
    let mut records = Vec::new();
    for spec in [ModelSpec::S3, ModelSpec::S4] {
        let fit = run_model_table(&table, spec, &options)?;
        for column in ["ep_past", "ed_past"] {
            if fit.design.column_index(column).is_none() {
                continue;
            }
            for [x, pred, lo, hi] in marginal_series(&fit, column, config.report.marginal_points)? {
                records.push(vec![spec.to_string(), column.to_string(), num(x), num(pred), num(lo), num(hi)]);
            }
        }
    }
    w.file(
        "fig3_marginal.csv",
        &csv_bytes(&["model", "metric", "value", "prediction", "ci_lower", "ci_upper"], records)?,
    )
}

fn group_mean_records(label: &str, rows: &[AuthorAnalysisRow], outcome: &str) -> Vec<Vec<String>> {
    Group::LABELED
        .iter()
        .filter_map(|&g| {
            let ys: Vec<f64> = rows.iter().filter(|r| r.group == g).filter_map(|r| r.get(outcome)).collect();
            mean_ci(&ys).map(|m| {
                vec![
                    label.to_string(),
                    g.to_string(),
                    m.n.to_string(),
                    num(m.mean),
                    num(m.lower),
                    num(m.upper),
                ]
            })
        })
        .collect()
}

fn prefixed(prefix: &str, records: Vec<Vec<String>>) -> impl Iterator<Item = Vec<String>> + '_ {
    records.into_iter().map(move |mut r| {
        r.insert(0, prefix.to_string());
        r
    })
}

fn ate_series(config: &RunConfig, inputs: &Inputs, w: &mut StageWriter) -> CliResult<()> {
    let outcome = &config.psw.as_ref().expect("validated").outcome;
    let splits: Vec<SplitPoint> = if config.report.ate_splits.is_empty() {
        vec![config.analysis.split]
    } else {
        config.report.ate_splits.iter().map(|&n| SplitPoint::CareerYears(n)).collect()
    };
    let mut means = Vec::new();
    let mut effects = Vec::new();
    for split in splits {
        let mut analysis = config.analysis.clone();
        analysis.split = split;
        let rows = inputs.rows_with(config, &analysis).rows;
        let label = split.value().to_string();
        means.extend(group_mean_records(&label, &rows, outcome));
        for (comp, est) in try_psw_comparisons(config, &rows)? {
            match est {
                Ok(est) => effects.extend(prefixed(&label, effect_record(&comp, &est))),
                Err(e) => w.warn(format!("ATE at split {label}, {comp}: {e}")),
            }
        }
    }
    w.file(
        "fig5a_group_means.csv",
        &csv_bytes(&["split", "group", "n", "mean", "ci_lower", "ci_upper"], means)?,
    )?;
    let header: Vec<&str> = std::iter::once("split").chain(EFFECT_HEADER).collect();
    w.file("fig5bc_ate.csv", &csv_bytes(&header, effects)?)
}

fn thresholds(config: &RunConfig, inputs: &Inputs, w: &mut StageWriter) -> CliResult<()> {
    let mut effects = Vec::new();
    for &q in &config.report.thresholds {
        let mut rows = inputs.rows(config).clone();
        rows.regroup(q);
        for (comp, est) in try_psw_comparisons(config, &rows.rows)? {
            match est {
                Ok(est) => effects.extend(prefixed(&num(q), effect_record(&comp, &est))),
                Err(e) => w.warn(format!("ATE at quantile {q}, {comp}: {e}")),
            }
        }
    }
    let header: Vec<&str> = std::iter::once("quantile").chain(EFFECT_HEADER).collect();
    w.file("fig5d_thresholds.csv", &csv_bytes(&header, effects)?)
}

fn mean_ci_cells(m: Option<MeanCi>) -> [String; 4] {
    [
        m.map(|m| m.n.to_string()).unwrap_or_else(|| "0".into()),
        opt(m.map(|m| m.mean)),
        opt(m.map(|m| m.lower)),
        opt(m.map(|m| m.upper)),
    ]
}

fn trajectories(config: &RunConfig, inputs: &Inputs, w: &mut StageWriter) -> CliResult<()> {
    let provider = inputs.provider(config);
    let ctx = context(config, inputs, &provider);
    let points = temporal_trajectories(&ctx, config.report.max_year)?;
    let mut records = Vec::new();
    for p in &points {
        for (metric, m) in [("ep", p.ep), ("ed", p.ed)] {
            let mut r = vec![p.career_year.to_string(), metric.to_string()];
            r.extend(mean_ci_cells(m));
            records.push(r);
        }
    }
    w.file(
        "fig6a_trajectories.csv",
        &csv_bytes(&["career_year", "metric", "n", "mean", "ci_lower", "ci_upper"], records)?,
    )
}

fn cohorts(config: &RunConfig, inputs: &Inputs, w: &mut StageWriter) -> CliResult<()> {
    let provider = inputs.provider(config);
    let ctx = context(config, inputs, &provider);
    let cmp = cohort_compare(&ctx, &config.report.cohorts, config.report.cohort_horizon)?;
    let mut values = Vec::new();
    for c in &cmp.cohorts {
        for (metric, vs) in [("ep", &c.ep), ("ed", &c.ed)] {
            values.extend(vs.iter().map(|v| vec![c.label.clone(), metric.to_string(), num(*v)]));
        }
    }
    w.file("fig6b_cohort_values.csv", &csv_bytes(&["cohort", "metric", "value"], values)?)?;
    let tests = cmp
        .tests
        .iter()
        .map(|t| vec![t.metric.to_string(), t.a.clone(), t.b.clone(), num(t.d), num(t.p)]);
    w.file("fig6b_ks.csv", &csv_bytes(&["metric", "cohort_a", "cohort_b", "d", "p"], tests)?)
}

fn transitions(config: &RunConfig, inputs: &Inputs, w: &mut StageWriter) -> CliResult<()> {
    let provider = inputs.provider(config);
    let ctx = context(config, inputs, &provider);
    let gt = group_transitions(&ctx, &config.report.snapshots, config.analysis.group_quantile)?;
    let mut records = Vec::new();
    for t in &gt.transitions {
        for (a, ga) in Group::LABELED.iter().enumerate() {
            for (b, gb) in Group::LABELED.iter().enumerate() {
                records.push(vec![
                    t.from.to_string(),
                    t.to.to_string(),
                    ga.to_string(),
                    gb.to_string(),
                    t.counts[a][b].to_string(),
                ]);
            }
        }
    }
    w.file(
        "fig6c_transitions.csv",
        &csv_bytes(&["from", "to", "from_group", "to_group", "authors"], records)?,
    )?;
    #[derive(Serialize)]
    struct Summary<'a> {
        snapshots: &'a [chrono::NaiveDate],
        labelled: Vec<usize>,
        stay_rates: Vec<BTreeMap<&'static str, Option<f64>>>,
        persistence: Option<f64>,
    }
    w.json(
        "fig6c_summary.json",
        &Summary {
            snapshots: &gt.snapshots,
            labelled: gt.membership.iter().map(Vec::len).collect(),
            stay_rates: gt
                .transitions
                .iter()
                .map(|t| Group::LABELED.iter().map(|g| g.as_str()).zip(t.stay_rate).collect())
                .collect(),
            persistence: gt.persistence,
        },
    )
}

fn stability(config: &RunConfig, inputs: &Inputs, w: &mut StageWriter) -> CliResult<()> {
    let t = period_stability(
        &inputs.corpus,
        inputs.corpus.codes(),
        &config.report.periods,
        config.graph.kind,
        config.graph.metric,
        config.report.stability_node_budget,
    )?;
    let mut records = Vec::new();
    for (i, a) in t.labels.iter().enumerate() {
        for (j, b) in t.labels.iter().enumerate() {
            records.push(vec![
                a.clone(),
                b.clone(),
                opt(t.correlations[i][j]),
                t.degenerate[i].to_string(),
                t.degenerate[j].to_string(),
                t.common_nodes.to_string(),
            ]);
        }
    }
    w.file(
        "stability.csv",
        &csv_bytes(
            &["period_a", "period_b", "correlation", "degenerate_a", "degenerate_b", "common_nodes"],
            records,
        )?,
    )
}

fn drastic(config: &RunConfig, inputs: &Inputs, w: &mut StageWriter) -> CliResult<()> {
    let section = config.psw.as_ref().expect("validated");
    let rows = &inputs.rows(config).rows;
    let summaries = drastic_change_analysis(
        rows,
        &covariates(&section.covariates, false),
        &weight_config(section, Estimand::Ate),
    );
    let records = summaries.iter().map(|s| {
        let e = s.effect.as_ref();
        vec![
            s.from.to_string(),
            s.to.to_string(),
            s.origin.to_string(),
            s.switchers.to_string(),
            opt(s.fraction),
            opt(s.mean_change),
            opt(e.map(|e| e.estimate)),
            opt(e.map(|e| e.se)),
            opt(e.map(|e| e.ci_lower)),
            opt(e.map(|e| e.ci_upper)),
            opt(e.map(|e| e.p)),
            s.note.clone().unwrap_or_default(),
        ]
    });
    w.file(
        "drastic.csv",
        &csv_bytes(
            &[
                "from", "to", "origin", "switchers", "fraction", "mean_change", "effect", "se", "ci_lower",
                "ci_upper", "p", "note",
            ],
            records,
        )?,
    )
}

fn mediation_table(config: &RunConfig, inputs: &Inputs, w: &mut StageWriter) -> CliResult<()> {
    let section = config.mediation.as_ref().expect("validated");
    let table: Table = rows_table(&inputs.rows(config).rows);
    let mut records = Vec::new();
    for item in &section.items {
        let m = mediation(
            &table,
            &item.treatment,
            &item.mediator,
            &item.outcome,
            &terms_of(&item.controls),
            section.bootstrap,
            config.seed,
            section.min_rows,
        )?;
        for warning in &m.warnings {
            w.warn(format!("mediation {} -> {}: {warning}", m.treatment, m.mediator));
        }
        for (effect, value, ci, p) in [
            ("acme", m.acme, m.acme_ci, m.acme_p),
            ("ade", m.ade, m.ade_ci, m.ade_p),
            ("total", m.total, m.total_ci, m.total_p),
        ] {
            records.push(vec![
                m.treatment.clone(),
                m.mediator.clone(),
                m.outcome.clone(),
                effect.to_string(),
                num(value),
                opt(ci.map(|c| c.lower)),
                opt(ci.map(|c| c.upper)),
                opt(p),
                m.n.to_string(),
                m.replicates.to_string(),
                m.failed.to_string(),
            ]);
        }
    }
    w.file(
        "mediation.csv",
        &csv_bytes(
            &[
                "treatment", "mediator", "outcome", "effect", "estimate", "ci_lower", "ci_upper", "p", "n",
                "replicates", "failed",
            ],
            records,
        )?,
    )
}
