//! Subcommand implementations. Each `cmd_*` loads its inputs; the `run_*`
//! variants share already-loaded inputs so `run` reads the corpus once.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use cautious_core::causal::{
    null_author_shuffle, null_paper_shuffle, psm_table, psw, summarize_null, Arm, Estimand, MatchConfig, TreatOn,
    WeightedEstimate,
};
use cautious_core::corpus::synth::synthesize;
use cautious_core::metrics::{analysis_rows, AnalysisConfig, LookbackWindow, PaperDistanceMode, RowSet, SplitPoint};
use cautious_core::stats::{
    bootstrap_model, e_value, population_sd, rows_table, run_model_table, standardized_coef, ModelFit, ModelOptions,
    ModelSpec, Table,
};
use cautious_core::topicgraph::write_distance_csv;
use cautious_core::{load_corpus, CodeScheme, EligibilityFilter, Group};

use crate::config::{parse_digits, NullKind, RunConfig, SweepDimension};
use crate::error::{input_error, CliError, CliResult};
use crate::manifest::StageWriter;
use crate::pipeline::{
    core_csv, covariates, csv_bytes, derive_seed, group_ate, num, opt, row_warnings, stage, weight_config, Inputs,
};
use crate::report::run_report;

/// Checks a papers file and writes `validation.json`.
pub fn cmd_validate(config: &RunConfig, path: Option<&Path>) -> CliResult<()> {
    config.validate()?;
    let path = path.map(Path::to_path_buf).unwrap_or_else(|| config.corpus_path());
    if !path.exists() {
        return Err(CliError::MissingInput {
            what: "corpus",
            path: path.display().to_string(),
            producer: "synth",
        });
    }
    let corpus = load_corpus(&path, &config.codes, &config.corpus.filter()).map_err(input_error)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        papers: usize,
        authors: usize,
        eligible_authors: usize,
        areas: usize,
        topics: usize,
        short_codes: usize,
        empty_codes: usize,
        warnings: &'a BTreeMap<String, usize>,
    }
    let report = corpus.report();
    stage(config, "validate", None, |w| {
        w.input("corpus", &path)?;
        for (class, n) in &report.warnings {
            w.warn(format!("{class}: {n}"));
        }
        w.json(
            "validation.json",
            &Summary {
                papers: corpus.len(),
                authors: corpus.all_authors().count(),
                eligible_authors: report.eligible_authors,
                areas: corpus.codes().areas().len(),
                topics: corpus.codes().topics().len(),
                short_codes: corpus.codes().short_codes(),
                empty_codes: corpus.codes().empty_codes(),
                warnings: &report.warnings,
            },
        )
    })
}

/// Generates a synthetic corpus at `corpus.path` with its ground truth.
pub fn cmd_synth(config: &RunConfig) -> CliResult<()> {
    config.validate()?;
    let mut synth = config
        .synth
        .clone()
        .ok_or_else(|| CliError::Config("`synth` needs a [synth] section".into()))?;
    synth.seed = config.seed;
    synth.analysis = config.analysis.clone();
    let s = synthesize(&synth).map_err(CliError::Analysis)?;
    let path = config.corpus_path();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(format!("creating `{}`", parent.display()), e))?;
    }
    s.corpus.write_jsonl(&path).map_err(CliError::Analysis)?;
    stage(config, "synth", None, |w| {
        w.external("corpus", &path)?;
        let mut csv = csv::Writer::from_writer(Vec::new());
        for t in &s.truth {
            csv.serialize(t)
                .map_err(|e| CliError::io("formatting truth", std::io::Error::other(e)))?;
        }
        let bytes = csv
            .into_inner()
            .map_err(|e| CliError::io("formatting truth", std::io::Error::other(e.to_string())))?;
        w.file("synth_truth.csv", &bytes)?;
        w.json("synth_summary.json", &s.summary)
    })
}

pub fn cmd_graph(config: &RunConfig) -> CliResult<()> {
    config.validate()?;
    run_graph(config, &Inputs::load(config)?)
}

pub fn run_graph(config: &RunConfig, inputs: &Inputs) -> CliResult<()> {
    let g = &inputs.graph;
    stage(config, "graph", Some(inputs), |w| {
        w.file("graph_edges.csv", &core_csv(|b| g.write_edges_csv(b))?)?;
        w.file("graph_strengths.csv", &core_csv(|b| g.write_strengths_csv(b))?)?;
        #[derive(Serialize)]
        struct Summary {
            kind: &'static str,
            metric: &'static str,
            nodes: usize,
            edges: usize,
            isolated: usize,
        }
        w.json(
            "graph_summary.json",
            &Summary {
                kind: g.kind().name(),
                metric: config.graph.metric.name(),
                nodes: g.node_count(),
                edges: g.edge_count(),
                isolated: (0..g.node_count() as u32).filter(|&i| !g.is_connected(i)).count(),
            },
        )?;
        let n = g.node_count();
        if n > 0 && n <= config.graph.distance_matrix_max_nodes {
            let provider = inputs.provider(config);
            let nodes: Vec<u32> = (0..n as u32).collect();
            w.file("distances.csv", &core_csv(|b| write_distance_csv(&provider, &nodes, b))?)?;
        }
        Ok(())
    })
}

pub fn cmd_metrics(config: &RunConfig) -> CliResult<()> {
    config.validate()?;
    run_metrics(config, &Inputs::load(config)?)
}

pub fn run_metrics(config: &RunConfig, inputs: &Inputs) -> CliResult<()> {
    let rows = inputs.rows(config);
    stage(config, "metrics", Some(inputs), |w| {
        for m in row_warnings(rows) {
            w.warn(m);
        }
        w.file("metrics.csv", &core_csv(|b| rows.write_csv(b))?)?;
        #[derive(Serialize)]
        struct Summary<'a> {
            rows: usize,
            window: String,
            split: String,
            group_quantile: f64,
            groups: BTreeMap<&'static str, usize>,
            exclusions: &'a BTreeMap<String, usize>,
            undefined_distances: usize,
            degenerate_ep: bool,
            degenerate_ed: bool,
        }
        w.json(
            "metrics_summary.json",
            &Summary {
                rows: rows.rows.len(),
                window: config.analysis.window.label(),
                split: config.analysis.split.label(),
                group_quantile: config.analysis.group_quantile,
                groups: group_counts(&rows.rows),
                exclusions: &rows.exclusions,
                undefined_distances: rows.undefined_distances,
                degenerate_ep: rows.degenerate_ep,
                degenerate_ed: rows.degenerate_ed,
            },
        )
    })
}

pub fn group_counts(rows: &[cautious_core::AuthorAnalysisRow]) -> BTreeMap<&'static str, usize> {
    let mut m: BTreeMap<&'static str, usize> = Group::LABELED.iter().map(|g| (g.as_str(), 0)).collect();
    for r in rows {
        if r.group.is_labeled() {
            *m.entry(r.group.as_str()).or_default() += 1;
        }
    }
    m
}

pub fn cmd_regress(config: &RunConfig) -> CliResult<()> {
    config.validate()?;
    run_regress(config, &Inputs::load(config)?)
}

/// Fits every configured model as `(label, fit)`.
pub fn fit_models(config: &RunConfig, table: &Table) -> CliResult<Vec<ModelFit>> {
    let section = config
        .regress
        .as_ref()
        .ok_or_else(|| CliError::Config("`regress` needs a [regress] section".into()))?;
    let mut fits = Vec::new();
    for &spec in &section.models {
        let responses: Vec<String> = if spec == ModelSpec::S9 {
            section.s9_responses.clone()
        } else {
            vec![section.response.clone()]
        };
        for response in responses {
            let options = ModelOptions {
                response,
                extras: section.extras.clone(),
            };
            fits.push(run_model_table(table, spec, &options)?);
        }
    }
    Ok(fits)
}

pub fn run_regress(config: &RunConfig, inputs: &Inputs) -> CliResult<()> {
    let section = config
        .regress
        .as_ref()
        .ok_or_else(|| CliError::Config("`regress` needs a [regress] section".into()))?;
    let rows = inputs.rows(config);
    let table = rows_table(&rows.rows);
    let fits = fit_models(config, &table)?;
    let mut coef_rows = Vec::new();
    let mut model_rows = Vec::new();
    for fit in &fits {
        let r = &fit.result;
        let std = standardized_coef(r, &fit.design).ok();
        let boot = bootstrap_model(fit, section.bootstrap, config.seed);
        let sd_y = population_sd(&fit.design.y);
        for (j, name) in r.names.iter().enumerate() {
            let (lo, hi) = r.ci95(name)?;
            let b = boot.intervals.get(j).copied().flatten();
            coef_rows.push(vec![
                fit.spec.to_string(),
                r.response.clone(),
                name.clone(),
                num(r.coef[j]),
                num(r.se[j]),
                num(r.t[j]),
                num(r.p[j]),
                cautious_core::stats::stars(r.p[j]).to_string(),
                num(lo),
                num(hi),
                opt(std.as_ref().and_then(|s| s[j])),
                if name == cautious_core::stats::INTERCEPT { String::new() } else { num(e_value(r.coef[j], sd_y)) },
                opt(b.map(|i| i.lower)),
                opt(b.map(|i| i.upper)),
            ]);
        }
        model_rows.push(vec![
            fit.spec.to_string(),
            r.response.clone(),
            r.n.to_string(),
            r.df.to_string(),
            num(r.r2),
            num(r.sigma),
            r.dropped.to_string(),
            boot.replicates.to_string(),
            boot.failed.to_string(),
        ]);
    }
    stage(config, "regress", Some(inputs), |w| {
        for m in row_warnings(rows) {
            w.warn(m);
        }
        w.file(
            "regress_coefficients.csv",
            &csv_bytes(
                &[
                    "model", "response", "term", "coef", "se", "t", "p", "stars", "ci_lower", "ci_upper",
                    "std_coef", "e_value", "boot_lower", "boot_upper",
                ],
                coef_rows,
            )?,
        )?;
        w.file(
            "regress_models.csv",
            &csv_bytes(
                &["model", "response", "n", "df", "r2", "sigma", "dropped", "bootstrap_replicates", "bootstrap_failed"],
                model_rows,
            )?,
        )
    })
}

fn treat_label(t: &TreatOn) -> String {
    match t {
        TreatOn::Ep => "ep".into(),
        TreatOn::Ed => "ed".into(),
        TreatOn::Groups(a, b) => format!("{a}_vs_{b}"),
    }
}

pub fn cmd_psm(config: &RunConfig) -> CliResult<()> {
    config.validate()?;
    run_psm(config, &Inputs::load(config)?)
}

pub fn run_psm(config: &RunConfig, inputs: &Inputs) -> CliResult<()> {
    let section = config
        .psm
        .as_ref()
        .ok_or_else(|| CliError::Config("`psm` needs a [psm] section".into()))?;
    let rows = &inputs.rows(config).rows;
    let table = rows_table(rows);
    let mut summary = Vec::new();
    let mut pairs = Vec::new();
    let mut balance = Vec::new();
    let mut failures = Vec::new();
    for t in &section.treat_on {
        let label = treat_label(t);
        let covs = covariates(&section.covariates, *t == TreatOn::Ed);
        let mc = MatchConfig {
            caliper_sd: section.caliper_sd,
            seed: config.seed,
            method: section.method,
        };
        let r = match psm_table(&table, &t.assign(rows), &covs, &section.outcome, &mc) {
            Ok(r) => r,
            Err(e) => {
                let mut rec = vec![label.clone()];
                rec.extend(std::iter::repeat_n(String::new(), 13));
                rec.push(e.to_string());
                summary.push(rec);
                failures.push((label, e));
                continue;
            }
        };
        summary.push(vec![
            label.clone(),
            r.n_treated.to_string(),
            r.n_control.to_string(),
            r.pairs.len().to_string(),
            r.unmatched_treated.to_string(),
            r.unmatched_control.to_string(),
            num(r.caliper),
            num(r.treated_mean),
            num(r.control_mean),
            num(r.att),
            opt(r.paired_t.map(|p| p.t)),
            opt(r.paired_t.map(|p| p.p)),
            opt(r.kw.map(|k| k.h)),
            opt(r.kw.map(|k| k.p)),
            String::new(),
        ]);
        for p in &r.pairs {
            pairs.push(vec![label.clone(), p.treated_id.clone(), p.control_id.clone(), num(p.gap)]);
        }
        for b in &r.balance {
            balance.push(vec![label.clone(), b.covariate.clone(), num(b.smd_before), num(b.smd_after)]);
        }
    }
    if !failures.is_empty() && failures.len() == section.treat_on.len() {
        return Err(CliError::Analysis(failures.swap_remove(0).1));
    }
    stage(config, "psm", Some(inputs), |w| {
        for (label, e) in &failures {
            w.warn(format!("{label}: {e}"));
        }
        w.file(
            "psm_summary.csv",
            &csv_bytes(
                &[
                    "treat_on", "n_treated", "n_control", "pairs", "unmatched_treated", "unmatched_control",
                    "caliper", "treated_mean", "control_mean", "att", "paired_t", "paired_p", "kw_h", "kw_p", "note",
                ],
                summary,
            )?,
        )?;
        w.file("psm_pairs.csv", &csv_bytes(&["treat_on", "treated_id", "control_id", "logit_gap"], pairs)?)?;
        w.file("psm_balance.csv", &csv_bytes(&["treat_on", "covariate", "smd_before", "smd_after"], balance)?)
    })
}

/// Every configured weighting comparison as `(label, estimate)`; failed
/// comparisons keep their error.
pub fn try_psw_comparisons(
    config: &RunConfig,
    rows: &[cautious_core::AuthorAnalysisRow],
) -> CliResult<Vec<(String, cautious_core::Result<WeightedEstimate>)>> {
    let section = config
        .psw
        .as_ref()
        .ok_or_else(|| CliError::Config("`psw` needs a [psw] section".into()))?;
    let covs = covariates(&section.covariates, false);
    let mut out = Vec::new();
    for &b in &section.baselines {
        let arms = Arm::four_groups();
        let bi = arms.iter().position(|a| a.label == b.as_str()).expect("labelled group");
        let est = psw(rows, &arms, bi, None, &covs, &section.outcome, &weight_config(section, Estimand::Ate));
        out.push((format!("groups_vs_{b}"), est));
    }
    for &g in &section.versus_rest {
        let arms = vec![Arm::rest_of(g), Arm::group(g)];
        let treated = (section.estimand == Estimand::Att).then_some(1);
        let est = psw(rows, &arms, 0, treated, &covs, &section.outcome, &weight_config(section, section.estimand));
        out.push((format!("{g}_vs_rest"), est));
    }
    Ok(out)
}

/// Like [`try_psw_comparisons`], failing on the first failed comparison.
pub fn psw_comparisons(
    config: &RunConfig,
    rows: &[cautious_core::AuthorAnalysisRow],
) -> CliResult<Vec<(String, WeightedEstimate)>> {
    try_psw_comparisons(config, rows)?
        .into_iter()
        .map(|(label, est)| Ok((label, est?)))
        .collect()
}

pub fn effect_record(label: &str, est: &WeightedEstimate) -> Vec<Vec<String>> {
    est.effects
        .iter()
        .map(|e| {
            vec![
                label.to_string(),
                format!("{:?}", est.estimand).to_lowercase(),
                est.baseline.clone(),
                e.arm.clone(),
                num(e.estimate),
                num(e.se),
                num(e.ci_lower),
                num(e.ci_upper),
                num(e.p),
                num(e.percent),
            ]
        })
        .collect()
}

pub const EFFECT_HEADER: [&str; 10] =
    ["comparison", "estimand", "baseline", "arm", "estimate", "se", "ci_lower", "ci_upper", "p", "percent"];

pub fn cmd_psw(config: &RunConfig) -> CliResult<()> {
    config.validate()?;
    run_psw(config, &Inputs::load(config)?)
}

pub fn run_psw(config: &RunConfig, inputs: &Inputs) -> CliResult<()> {
    let rows = &inputs.rows(config).rows;
    let mut comps = Vec::new();
    let mut failures = Vec::new();
    for (label, est) in try_psw_comparisons(config, rows)? {
        match est {
            Ok(est) => comps.push((label, est)),
            Err(e) => failures.push((label, e)),
        }
    }
    if comps.is_empty() && !failures.is_empty() {
        return Err(CliError::Analysis(failures.swap_remove(0).1));
    }
    let mut effects = Vec::new();
    let mut weights = Vec::new();
    let mut balance = Vec::new();
    let mut trimmed = Vec::new();
    for (label, est) in &comps {
        effects.extend(effect_record(label, est));
        for i in 0..est.ids.len() {
            weights.push(vec![label.clone(), est.ids[i].clone(), est.arms[i].clone(), num(est.weights[i])]);
        }
        for b in &est.balance {
            balance.push(vec![label.clone(), b.covariate.clone(), num(b.smd_before), num(b.smd_after)]);
        }
        if est.trimmed > 0 {
            trimmed.push(format!("{label}: {} weights trimmed", est.trimmed));
        }
    }
    stage(config, "psw", Some(inputs), |w| {
        for (label, e) in &failures {
            w.warn(format!("{label}: {e}"));
        }
        for t in trimmed {
            w.warn(t);
        }
        w.file("psw_effects.csv", &csv_bytes(&EFFECT_HEADER, effects)?)?;
        w.file("psw_weights.csv", &csv_bytes(&["comparison", "author_id", "arm", "weight"], weights)?)?;
        w.file("psw_balance.csv", &csv_bytes(&["comparison", "covariate", "smd_before", "smd_after"], balance)?)
    })
}

pub fn cmd_null(config: &RunConfig, replicates: Option<usize>) -> CliResult<()> {
    config.validate()?;
    run_null(config, &Inputs::load(config)?, replicates)
}

/// Null replicate values of the weighted ATE for one shuffle kind.
pub fn null_values(config: &RunConfig, inputs: &Inputs, kind: NullKind, replicates: usize) -> CliResult<Vec<Option<f64>>> {
    let section = config.null.clone().unwrap_or_default();
    let psw_section = config
        .psw
        .as_ref()
        .ok_or_else(|| CliError::Config("null models need a [psw] section".into()))?;
    let rows = &inputs.rows(config).rows;
    let provider = inputs.provider(config);
    let salt = match kind {
        NullKind::Author => 0,
        NullKind::Paper => 1 << 32,
    };
    let values = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(config.seed, salt + i as u64);
            let shuffled = match kind {
                NullKind::Author => null_author_shuffle(rows, &psw_section.outcome, seed).ok()?,
                NullKind::Paper => {
                    let (c, _) = null_paper_shuffle(&inputs.corpus, seed, section.swaps_per_edge).ok()?;
                    analysis_rows(&c, c.codes(), &provider, &config.analysis).rows
                }
            };
            group_ate(&shuffled, psw_section, section.treated, section.baseline)
                .ok()
                .map(|e| e.estimate)
                .filter(|v| v.is_finite())
        })
        .collect();
    Ok(values)
}

pub fn run_null(config: &RunConfig, inputs: &Inputs, replicates: Option<usize>) -> CliResult<()> {
    let section = config
        .null
        .clone()
        .ok_or_else(|| CliError::Config("`null` needs a [null] section".into()))?;
    let psw_section = config.psw.as_ref().expect("validated");
    let replicates = replicates.unwrap_or(section.replicates);
    let rows = &inputs.rows(config).rows;
    let observed = group_ate(rows, psw_section, section.treated, section.baseline)?.estimate;
    let mut summaries = Vec::new();
    let mut values = Vec::new();
    for &kind in &section.kinds {
        let v = null_values(config, inputs, kind, replicates)?;
        let ok: Vec<f64> = v.iter().flatten().copied().collect();
        summaries.push(summarize_null(
            &format!("ate_{}_vs_{}_{}", section.treated, section.baseline, kind.name()),
            observed,
            &ok,
            replicates,
            config.seed,
        ));
        for (i, x) in v.iter().enumerate() {
            values.push(vec![kind.name().to_string(), i.to_string(), opt(*x)]);
        }
    }
    stage(config, "null", Some(inputs), |w| {
        for s in &summaries {
            if s.failed > 0 {
                w.warn(format!("{}: {} replicates failed", s.statistic, s.failed));
            }
        }
        w.json("null_summary.json", &summaries)?;
        w.file("null_replicates.csv", &csv_bytes(&["kind", "replicate", "ate"], values)?)
    })
}

/// One swept setting and the rows it produces.
struct SweepPoint {
    value: String,
    rows: RowSet,
}

fn sweep_points(config: &RunConfig, inputs: &Inputs, dim: SweepDimension) -> CliResult<Vec<SweepPoint>> {
    let base = &config.analysis;
    let with = |f: &dyn Fn(&mut AnalysisConfig)| {
        let mut a = base.clone();
        f(&mut a);
        a
    };
    let points = match dim {
        SweepDimension::Split => config
            .sweep
            .splits
            .par_iter()
            .map(|&n| SweepPoint {
                value: n.to_string(),
                rows: inputs.rows_with(config, &with(&|a| a.split = SplitPoint::CareerYears(n))),
            })
            .collect(),
        SweepDimension::Window => {
            let windows: Vec<LookbackWindow> = config
                .sweep
                .windows
                .iter()
                .map(|&j| LookbackWindow::Papers(j))
                .chain(config.sweep.years.iter().map(|&k| LookbackWindow::Years(k)))
                .collect();
            windows
                .par_iter()
                .map(|&win| SweepPoint {
                    value: win.label(),
                    rows: inputs.rows_with(config, &with(&|a| a.window = win)),
                })
                .collect()
        }
        SweepDimension::Quantile => config
            .sweep
            .quantiles
            .iter()
            .map(|&q| {
                let mut rows = inputs.rows(config).clone();
                rows.regroup(q);
                SweepPoint {
                    value: num(q),
                    rows,
                }
            })
            .collect(),
        SweepDimension::Digits => {
            let schemes: Vec<(String, CodeScheme)> = config
                .sweep
                .digits
                .iter()
                .map(|d| Ok((d.clone(), parse_digits(d)?)))
                .collect::<CliResult<_>>()?;
            schemes
                .par_iter()
                .map(|(label, scheme)| {
                    let view = inputs.corpus.code_view(scheme);
                    SweepPoint {
                        value: label.clone(),
                        rows: inputs.rows_for_view(config, &view, base),
                    }
                })
                .collect()
        }
        SweepDimension::DistanceMode => [PaperDistanceMode::Mean, PaperDistanceMode::Hausdorff]
            .par_iter()
            .map(|&m| SweepPoint {
                value: format!("{m:?}").to_lowercase(),
                rows: inputs.rows_with(config, &with(&|a| a.distance_mode = m)),
            })
            .collect(),
    };
    Ok(points)
}

pub const SWEEP_HEADER: [&str; 16] = [
    "dimension", "value", "rows", "ep_coef", "ep_se", "ep_p", "ed_coef", "ed_se", "ed_p", "r2", "ate", "ate_se",
    "ate_ci_lower", "ate_ci_upper", "ate_p", "note",
];

/// Sweep rows: S4 EP/ED coefficients and optionally the A-vs-D weighted ATE.
pub fn sweep_records(config: &RunConfig, inputs: &Inputs, dim: SweepDimension) -> CliResult<Vec<Vec<String>>> {
    let points = sweep_points(config, inputs, dim)?;
    let options = config
        .regress
        .as_ref()
        .map(|r| ModelOptions {
            response: r.response.clone(),
            extras: r.extras.clone(),
        })
        .unwrap_or_default();
    let records = points
        .par_iter()
        .map(|p| {
            let mut rec = vec![dim.name().to_string(), p.value.clone(), p.rows.rows.len().to_string()];
            let mut notes = Vec::new();
            match run_model_table(&rows_table(&p.rows.rows), ModelSpec::S4, &options) {
                Ok(fit) => {
                    for name in ["ep_past", "ed_past"] {
                        let r = &fit.result;
                        rec.push(opt(r.coef_of(name).ok()));
                        rec.push(opt(r.se_of(name).ok()));
                        rec.push(opt(r.p_of(name).ok()));
                    }
                    rec.push(num(fit.result.r2));
                }
                Err(e) => {
                    rec.extend(std::iter::repeat_n(String::new(), 7));
                    notes.push(format!("S4: {e}"));
                }
            }
            match (&config.psw, config.sweep.with_ate) {
                (Some(section), true) => match group_ate(&p.rows.rows, section, Group::A, Group::D) {
                    Ok(e) => rec.extend([num(e.estimate), num(e.se), num(e.ci_lower), num(e.ci_upper), num(e.p)]),
                    Err(e) => {
                        rec.extend(std::iter::repeat_n(String::new(), 5));
                        notes.push(format!("ATE: {e}"));
                    }
                },
                _ => rec.extend(std::iter::repeat_n(String::new(), 5)),
            }
            rec.push(notes.join("; "));
            rec
        })
        .collect();
    Ok(records)
}

pub fn cmd_sweep(config: &RunConfig, dim: SweepDimension) -> CliResult<()> {
    config.validate()?;
    run_sweep(config, &Inputs::load(config)?, dim)
}

pub fn run_sweep(config: &RunConfig, inputs: &Inputs, dim: SweepDimension) -> CliResult<()> {
    let records = sweep_records(config, inputs, dim)?;
    let notes: Vec<String> = records
        .iter()
        .filter(|r| !r[15].is_empty())
        .map(|r| format!("{}={}: {}", r[0], r[1], r[15]))
        .collect();
    stage(config, &format!("sweep_{}", dim.name()), Some(inputs), |w| {
        for n in notes {
            w.warn(n);
        }
        w.file(&format!("sweep_{}.csv", dim.name()), &csv_bytes(&SWEEP_HEADER, records)?)
    })
}

pub fn cmd_report(config: &RunConfig) -> CliResult<()> {
    config.validate()?;
    if config.report.analyses.is_empty() {
        return stage(config, "report", None, |_| Ok(()));
    }
    run_report(config, &Inputs::load(config)?)
}

/// Every configured stage in order over one loaded corpus.
pub fn cmd_run(config: &RunConfig) -> CliResult<()> {
    config.validate()?;
    cmd_validate(config, None)?;
    let inputs = Inputs::load(config)?;
    run_graph(config, &inputs)?;
    run_metrics(config, &inputs)?;
    if config.regress.is_some() {
        run_regress(config, &inputs)?;
    }
    if config.psm.is_some() {
        run_psm(config, &inputs)?;
    }
    if config.psw.is_some() {
        run_psw(config, &inputs)?;
    }
    if config.null.is_some() {
        run_null(config, &inputs, None)?;
    }
    for &d in &config.sweep.dimensions {
        run_sweep(config, &inputs, d)?;
    }
    if config.report.analyses.is_empty() {
        stage(config, "report", None, |_| Ok(()))
    } else {
        run_report(config, &inputs)
    }
}

/// Stage writer for callers that assemble their own outputs.
pub fn open_stage(config: &RunConfig) -> CliResult<StageWriter> {
    StageWriter::new(&config.out_dir(), &crate::pipeline::config_digest(config), config.seed)
}

/// Default eligibility filter re-exported for callers building configs in code.
pub fn default_filter() -> EligibilityFilter {
    EligibilityFilter::default()
}
