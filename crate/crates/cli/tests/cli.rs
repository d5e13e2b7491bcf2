use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use cautious_cli::report::marginal_series;
use cautious_cli::{RunConfig, RunManifest};
use cautious_core::corpus::synth::{synthesize, OutcomeModel, SynthConfig};
use cautious_core::stats::{rows_table, run_model_table, ModelOptions, ModelSpec};

const SMALL: &str = r#"
seed = 11
out = "out"

[corpus]
path = "data/papers.jsonl"

[analysis.split]
mode = "career_years"
value = 4

[synth]
authors = 160

[synth.outcome]
mode = "group"
effect = 0.2
future_group = false

[regress]
bootstrap = 20

[psm]

[psw]

[null]
replicates = 4

[sweep]
dimensions = ["split", "digits"]
splits = [2, 3, 4]
digits = ["2-2", "2-full"]

[report]
analyses = ["correlations", "marginal", "ate", "trajectories", "cohorts", "transitions"]
ate_splits = [2, 4]
max_year = 6
cohorts = [[1985, 1992], [1993, 1999]]
snapshots = ["2000-01-01", "2004-01-01"]
"#;

fn cautious(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cautious"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) {
    std::fs::write(dir.join("run.toml"), text).unwrap();
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Every file under `dir`, by relative path.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn full_run(threads: &str) -> BTreeMap<String, Vec<u8>> {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    ok(&cautious(dir.path(), &["--config", "run.toml", "--threads", threads, "synth"]));
    ok(&cautious(dir.path(), &["--config", "run.toml", "--threads", threads, "run"]));
    let files = snapshot(dir.path());
    drop(dir);
    files
}

#[test]
fn full_pipeline_is_byte_identical_across_runs_and_threads() {
    let a = full_run("1");
    let b = full_run("1");
    let c = full_run("4");
    assert!(a.contains_key("out/manifest.json"));
    assert!(a.contains_key("out/sweep_split.csv"));
    assert!(a.contains_key("out/fig3_marginal.csv"));
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (name, bytes) in &a {
        assert!(bytes == &b[name], "{name} differs between runs");
        assert!(bytes == &c[name], "{name} differs between 1 and 4 threads");
    }
}

#[test]
fn manifest_digests_match_outputs() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    ok(&cautious(dir.path(), &["--config", "run.toml", "synth"]));
    ok(&cautious(dir.path(), &["--config", "run.toml", "graph"]));
    ok(&cautious(dir.path(), &["--config", "run.toml", "metrics"]));
    let out = dir.path().join("out");
    let m: RunManifest = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.tool, "cautious");
    for stage in ["synth", "graph", "metrics"] {
        let rec = &m.stages[stage];
        assert_eq!(rec.config_sha256, m.config_sha256);
        for (file, digest) in &rec.outputs {
            if file == "corpus" {
                continue;
            }
            let bytes = std::fs::read(out.join(file)).unwrap();
            assert_eq!(&cautious_cli::manifest::sha256_hex(&bytes), digest, "{file}");
        }
    }
    assert_eq!(m.stages["graph"].inputs["corpus"], m.stages["synth"].outputs["corpus"]);
}

#[test]
fn missing_corpus_names_its_producer() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    let out = cautious(dir.path(), &["--config", "run.toml", "metrics"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cautious synth"), "{err}");
    assert!(err.contains("papers.jsonl"), "{err}");
}

#[test]
fn bad_config_and_malformed_input_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "seed = 1\nbogus = 2\n");
    let out = cautious(dir.path(), &["--config", "run.toml", "graph"]);
    assert_eq!(out.status.code(), Some(1));

    write_config(dir.path(), "[corpus]\npath = \"bad.jsonl\"\n");
    std::fs::write(dir.path().join("bad.jsonl"), "{\"paper_id\": \"p1\"\n").unwrap();
    let out = cautious(dir.path(), &["--config", "run.toml", "validate"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn analysis_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("[regress]\n", "[regress]\nresponse = \"no_such_column\"\n");
    write_config(dir.path(), &text);
    ok(&cautious(dir.path(), &["--config", "run.toml", "synth"]));
    let out = cautious(dir.path(), &["--config", "run.toml", "regress"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn report_with_no_analyses_writes_only_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "out = \"out\"\n[corpus]\npath = \"absent.jsonl\"\n");
    ok(&cautious(dir.path(), &["--config", "run.toml", "report"]));
    let files = snapshot(&dir.path().join("out"));
    assert_eq!(files.keys().collect::<Vec<_>>(), vec!["manifest.json"]);
    let m: RunManifest = serde_json::from_slice(&files["manifest.json"]).unwrap();
    assert!(m.stages["report"].outputs.is_empty());
}

#[test]
fn rerunning_a_stage_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    ok(&cautious(dir.path(), &["--config", "run.toml", "synth"]));
    ok(&cautious(dir.path(), &["--config", "run.toml", "psw"]));
    let first = snapshot(dir.path());
    ok(&cautious(dir.path(), &["--config", "run.toml", "psw"]));
    assert_eq!(first, snapshot(dir.path()));
}

#[test]
fn seed_flag_changes_the_synthetic_corpus() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    ok(&cautious(dir.path(), &["--config", "run.toml", "synth"]));
    let a = std::fs::read(dir.path().join("data/papers.jsonl")).unwrap();
    ok(&cautious(dir.path(), &["--config", "run.toml", "--seed", "12", "synth"]));
    let b = std::fs::read(dir.path().join("data/papers.jsonl")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn sweep_over_splits_emits_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace("authors = 160", "authors = 300")
        .replace("splits = [2, 3, 4]", "splits = [2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15]")
        .replace("mode = \"group\"\neffect = 0.2\nfuture_group = false", "mode = \"linear\"\nep = 0.3\ned = -0.25");
    write_config(dir.path(), &text);
    ok(&cautious(dir.path(), &["--config", "run.toml", "synth"]));
    ok(&cautious(dir.path(), &["--config", "run.toml", "sweep", "--dimension", "split"]));
    let mut r = csv::Reader::from_path(dir.path().join("out/sweep_split.csv")).unwrap();
    let headers = r.headers().unwrap().clone();
    let ep = headers.iter().position(|h| h == "ep_coef").unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 14);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[1], (i + 2).to_string());
        let coef: f64 = row[ep].parse().unwrap();
        assert!(coef > 0.0, "split {}: EP coefficient {coef}", i + 2);
    }
}

#[test]
fn marginal_series_is_affine_with_the_fitted_slope() {
    let corpus = synthesize(&SynthConfig {
        authors: 200,
        seed: 3,
        outcome: OutcomeModel::Linear { ep: 0.3, ed: -0.25 },
        ..SynthConfig::default()
    })
    .unwrap();
    let config = RunConfig::default();
    let graph = cautious_core::TopicGraph::build(config.graph.kind, &corpus.corpus, corpus.corpus.codes(), None);
    let provider = cautious_core::DistanceProvider::new(&graph, config.graph.metric);
    let rows = cautious_core::metrics::analysis_rows(
        &corpus.corpus,
        corpus.corpus.codes(),
        &provider,
        &config.analysis,
    );
    let table = rows_table(&rows.rows);
    for spec in [ModelSpec::S3, ModelSpec::S4] {
        let fit = run_model_table(&table, spec, &ModelOptions::default()).unwrap();
        for column in ["ep_past", "ed_past"] {
            let Some(_) = fit.design.column_index(column) else { continue };
            let slope = fit.result.coef_of(column).unwrap();
            let series = marginal_series(&fit, column, 11).unwrap();
            assert_eq!(series.len(), 11);
            for w in series.windows(2) {
                let [x0, y0, lo0, hi0] = w[0];
                let [x1, y1, _, _] = w[1];
                assert!(((y1 - y0) - slope * (x1 - x0)).abs() < 1e-12);
                assert!(lo0 <= y0 && y0 <= hi0);
            }
        }
    }
}
