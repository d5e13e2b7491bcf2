//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any check fails that is not listed in `KNOWN_UNATTAINABLE`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use chrono::{Duration, NaiveDate};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use cautious_cli::commands::run_sweep;
use cautious_cli::config::SweepDimension;
use cautious_cli::pipeline::Inputs;
use cautious_cli::RunConfig;
use cautious_core::causal::{
    log_to_percent, null_author_shuffle, null_paper_shuffle, psw, Arm, Estimand, WeightConfig,
};
use cautious_core::corpus::synth::{
    generate_careers, synthesize, MediatorSpec, OutcomeModel, Planter, SynthConfig, Synthetic,
};
use cautious_core::metrics::{analysis_rows, ed, ep, LookbackWindow, PaperDistanceMode, SplitPoint};
use cautious_core::stats::{
    bootstrap_model, kruskal_wallis, ks_two_sample, logistic_fit, mediation, ols_fit, rows_table, run_model_table,
    sigmoid, DesignMatrix, ModelOptions, ModelSpec, Table, Term,
};
use cautious_core::topicgraph::weighted_overlap;
use cautious_core::{
    AuthorAnalysisRow, CodeScheme, Corpus, DistanceMetric, DistanceProvider, EligibilityFilter, GraphKind, Paper,
    TopicGraph,
};

/// Checks that cannot pass as stated; they are reported as FAIL but do not
/// fail the run.
const KNOWN_UNATTAINABLE: &[&str] = &["log_to_percent(0.1738) = 0.1898 +- 1e-6"];

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

fn base_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 1).unwrap()
}

fn paper(id: String, day: i64, authors: Vec<String>, codes: Vec<String>) -> Paper {
    Paper {
        paper_id: id,
        date: base_date() + Duration::days(day),
        authors,
        codes,
        refs: vec![],
        institutions: None,
        covariates: BTreeMap::new(),
    }
}

fn corpus_of(papers: Vec<Paper>) -> Corpus {
    let filter = EligibilityFilter {
        min_papers: 1,
        ..EligibilityFilter::default()
    };
    Corpus::from_papers(papers, &CodeScheme::default(), &filter).unwrap()
}

fn random_codes(rng: &mut StdRng, areas: u32, topics: u32) -> Vec<String> {
    if rng.random_bool(0.05) {
        return Vec::new();
    }
    let n = rng.random_range(1..=4);
    (0..n)
        .map(|_| format!("{}.{:02}", rng.random_range(10..10 + areas), rng.random_range(0..topics)))
        .collect()
}

fn topic(code: &str) -> String {
    code.replace('.', "")
}

fn area(code: &str) -> String {
    topic(code)[..2].to_string()
}

/// Co-occurrence weights, strengths and distances from plain string maps.
struct GraphOracle {
    adj: HashMap<String, BTreeMap<String, f64>>,
    strength: HashMap<String, u32>,
    dist: HashMap<(String, String), f64>,
}

impl GraphOracle {
    fn new<'a>(papers: impl Iterator<Item = &'a Vec<String>>) -> Self {
        let mut adj: HashMap<String, BTreeMap<String, f64>> = HashMap::new();
        let mut strength: HashMap<String, u32> = HashMap::new();
        for codes in papers {
            let set: BTreeSet<String> = codes.iter().map(|c| topic(c)).collect();
            let n = set.len();
            if n < 2 {
                continue;
            }
            for a in &set {
                *strength.entry(a.clone()).or_default() += 1;
                for b in &set {
                    if a != b {
                        *adj.entry(a.clone()).or_default().entry(b.clone()).or_insert(0.0) += 1.0 / (n - 1) as f64;
                    }
                }
            }
        }
        Self {
            adj,
            strength,
            dist: HashMap::new(),
        }
    }

    fn weight(&self, a: &str, b: &str) -> f64 {
        self.adj.get(a).and_then(|m| m.get(b)).copied().unwrap_or(0.0)
    }

    fn strength(&self, a: &str) -> f64 {
        self.strength.get(a).copied().unwrap_or(0) as f64
    }

    fn overlap(&self, a: &str, b: &str) -> f64 {
        let empty = BTreeMap::new();
        let na = self.adj.get(a).unwrap_or(&empty);
        let nb = self.adj.get(b).unwrap_or(&empty);
        let shared: f64 = na
            .keys()
            .filter(|k| nb.contains_key(*k))
            .map(|k| (self.weight(a, k) + self.weight(k, b)) / 2.0)
            .sum();
        if shared == 0.0 {
            return 0.0;
        }
        shared / (self.strength(a) + self.strength(b) - 2.0 * self.weight(a, b) - shared)
    }

    fn distance(&mut self, a: &str, b: &str) -> f64 {
        if a == b {
            return 0.0;
        }
        let key = (a.to_string(), b.to_string());
        if let Some(&d) = self.dist.get(&key) {
            return d;
        }
        let d = 1.0 - self.overlap(a, b);
        self.dist.insert(key, d);
        d
    }
}

/// A career as (day, codes) in chronological order.
type Career = Vec<(i64, Vec<String>)>;

fn lookback(career: &Career, pos: usize, window: LookbackWindow) -> Vec<usize> {
    match window {
        LookbackWindow::All => (0..pos).collect(),
        LookbackWindow::Papers(j) => (pos.saturating_sub(j)..pos).collect(),
        LookbackWindow::Years(k) => (0..pos)
            .filter(|&q| {
                let back = career[pos].0 - career[q].0;
                back > 0 && back as f64 <= k as f64 * 365.25
            })
            .collect(),
    }
}

fn oracle_ep(career: &Career, window: LookbackWindow) -> Option<f64> {
    let l = career.len();
    if l < 2 {
        return None;
    }
    let explored = (1..l)
        .filter(|&pos| {
            let mut seen = BTreeSet::new();
            for q in lookback(career, pos, window) {
                for c in &career[q].1 {
                    seen.insert(area(c));
                }
            }
            career[pos].1.iter().any(|c| !seen.contains(&area(c)))
        })
        .count();
    Some(explored as f64 / (l - 1) as f64)
}

fn oracle_ed(career: &Career, oracle: &mut GraphOracle, window: LookbackWindow, hausdorff: bool) -> Option<f64> {
    let mut per_paper = Vec::new();
    for pos in 1..career.len() {
        let mut past = BTreeSet::new();
        for q in lookback(career, pos, window) {
            for c in &career[q].1 {
                past.insert(topic(c));
            }
        }
        let now: BTreeSet<String> = career[pos].1.iter().map(|c| topic(c)).collect();
        if past.is_empty() || now.is_empty() {
            continue;
        }
        let d = if hausdorff {
            let mut worst = f64::NEG_INFINITY;
            for t in &now {
                let mut best = f64::INFINITY;
                for k in &past {
                    best = best.min(oracle.distance(t, k));
                }
                worst = worst.max(best);
            }
            worst
        } else {
            let mut sum = 0.0;
            for t in &now {
                for k in &past {
                    sum += oracle.distance(t, k);
                }
            }
            sum / (now.len() * past.len()) as f64
        };
        per_paper.push(d);
    }
    (!per_paper.is_empty()).then(|| per_paper.iter().sum::<f64>() / per_paper.len() as f64)
}

fn criterion_1() -> Vec<Check> {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let mut careers: Vec<Career> = Vec::new();
    let mut papers = Vec::new();
    for a in 0..500 {
        let len = rng.random_range(1..=30);
        let mut day = 0;
        let mut career = Vec::new();
        for k in 0..len {
            day += rng.random_range(1..400);
            let codes = random_codes(&mut rng, 8, 6);
            papers.push(paper(format!("a{a:03}p{k:02}"), day, vec![format!("author{a:03}")], codes.clone()));
            career.push((day, codes));
        }
        careers.push(career);
    }
    let mut oracle = GraphOracle::new(careers.iter().flatten().map(|(_, c)| c));
    let corpus = corpus_of(papers);
    let view = corpus.codes();
    let graph = TopicGraph::build(GraphKind::Cooccurrence, &corpus, view, None);
    let provider = DistanceProvider::new(&graph, DistanceMetric::WeightedOverlap);
    let windows = [LookbackWindow::Papers(5), LookbackWindow::Years(3), LookbackWindow::All];
    let (mut ep_mismatch, mut ed_worst, mut ed_definedness, mut compared) = (0, 0.0f64, 0, 0);
    for (a, career) in careers.iter().enumerate() {
        let ids = &corpus.career(&format!("author{a:03}")).unwrap().papers;
        for &w in &windows {
            compared += 1;
            if ep(&corpus, view, ids, w) != oracle_ep(career, w) {
                ep_mismatch += 1;
            }
            for (mode, hausdorff) in [(PaperDistanceMode::Mean, false), (PaperDistanceMode::Hausdorff, true)] {
                match (ed(&corpus, view, ids, w, &provider, mode), oracle_ed(career, &mut oracle, w, hausdorff)) {
                    (Some(g), Some(o)) => ed_worst = ed_worst.max((g - o).abs()),
                    (None, None) => {}
                    _ => ed_definedness += 1,
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    vec![
        check("EP exact", ep_mismatch == 0, format!("{ep_mismatch} mismatches in {compared} career-windows")),
        check(
            "ED within 1e-12",
            ed_worst <= 1e-12 && ed_definedness == 0,
            format!("max |diff| {ed_worst:.1e}, {ed_definedness} definedness mismatches"),
        ),
        check("runtime < 10 s", elapsed < 10.0, format!("{elapsed:.2} s")),
    ]
}

fn criterion_2() -> Vec<Check> {
    let mut rng = StdRng::seed_from_u64(2);
    let (mut strength_bad, mut sum_worst, mut nodes) = (0, 0.0f64, 0);
    for c in 0..100 {
        let n = rng.random_range(5..60);
        let papers: Vec<Paper> = (0..n)
            .map(|i| paper(format!("c{c}p{i}"), i, vec![format!("x{}", i % 7)], random_codes(&mut rng, 6, 5)))
            .collect();
        let oracle = GraphOracle::new(papers.iter().map(|p| &p.codes));
        let corpus = corpus_of(papers);
        let g = TopicGraph::build(GraphKind::Cooccurrence, &corpus, corpus.codes(), None);
        for (i, key) in g.nodes().iter().enumerate() {
            nodes += 1;
            let s = g.strength(i as u32);
            if s != oracle.strength(key) || s.fract() != 0.0 {
                strength_bad += 1;
            }
            let sum: f64 = (0..g.node_count() as u32).map(|j| g.weight(i as u32, j)).sum();
            sum_worst = sum_worst.max((sum - s).abs());
        }
    }
    let small = |specs: &[&[&str]]| {
        corpus_of(
            specs
                .iter()
                .enumerate()
                .map(|(i, codes)| paper(format!("p{i}"), i as i64, vec!["a".into()], codes.iter().map(|c| c.to_string()).collect()))
                .collect(),
        )
    };
    let overlap = |c: &Corpus, a: &str, b: &str| {
        let g = TopicGraph::build(GraphKind::Cooccurrence, c, c.codes(), None);
        weighted_overlap(&g, g.node_id(a).unwrap(), g.node_id(b).unwrap())
    };
    let disjoint = overlap(&small(&[&["aa", "bb"], &["cc", "dd"]]), "aa", "cc");
    let identical = overlap(&small(&[&["ii", "kk"], &["jj", "kk"], &["ii", "mm"], &["jj", "mm"]]), "ii", "jj");
    let path = overlap(&small(&[&["ii", "kk"], &["jj", "kk"]]), "ii", "jj");
    vec![
        check(
            "strength equals multi-topic paper count",
            strength_bad == 0,
            format!("{strength_bad} of {nodes} nodes differ; max |sum_j w_ij - s_i| {sum_worst:.1e}"),
        ),
        check("disjoint O = 0", disjoint == 0.0, format!("O = {disjoint}")),
        check("identical neighbourhoods O = 1", identical == 1.0, format!("O = {identical}")),
        check("path graph O = 1", path == 1.0, format!("O = {path}")),
    ]
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

fn loglik(x: &[f64], y: &[f64], b0: f64, b1: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let eta = b0 + b1 * xi;
            let softplus = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
            yi * eta - softplus
        })
        .sum()
}

/// Grid refinement search for the two-parameter logistic MLE.
fn grid_mle(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mut best = (0.0, 0.0);
    let mut value = loglik(x, y, 0.0, 0.0);
    let mut step = 1.0;
    while step > 1e-10 {
        let mut moved = false;
        for d0 in [-1.0, 0.0, 1.0] {
            for d1 in [-1.0, 0.0, 1.0] {
                let cand = (best.0 + d0 * step, best.1 + d1 * step);
                let v = loglik(x, y, cand.0, cand.1);
                if v > value {
                    best = cand;
                    value = v;
                    moved = true;
                }
            }
        }
        if !moved {
            step /= 2.0;
        }
    }
    best
}

fn criterion_3() -> Vec<Check> {
    let mut rng = StdRng::seed_from_u64(3);
    let mut ols_worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(20..120);
        let k = rng.random_range(1..5);
        let cols: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 1.0 + cols.iter().map(|c| 0.7 * c[i]).sum::<f64>() + rng.random_range(-1.0..1.0))
            .collect();
        let mut t = Table::new(n);
        let mut terms = Vec::new();
        for (j, c) in cols.iter().enumerate() {
            t.add_complete(&format!("x{j}"), c);
            terms.push(Term::num(&format!("x{j}")));
        }
        t.add_complete("y", &y);
        let fit = ols_fit(&DesignMatrix::build(&t, "y", &terms).unwrap(), None).unwrap();
        let p = k + 1;
        let row = |i: usize| -> Vec<f64> { std::iter::once(1.0).chain(cols.iter().map(|c| c[i])).collect() };
        let mut xtx = vec![vec![0.0; p]; p];
        let mut xty = vec![0.0; p];
        for i in 0..n {
            let r = row(i);
            for a in 0..p {
                xty[a] += r[a] * y[i];
                for b in 0..p {
                    xtx[a][b] += r[a] * r[b];
                }
            }
        }
        let want = solve(xtx, xty);
        for (g, w) in fit.coef.iter().zip(&want) {
            ols_worst = ols_worst.max((g - w).abs() / w.abs().max(1.0));
        }
    }
    let mut logit_worst = 0.0f64;
    let mut fits = 0;
    while fits < 20 {
        let n = rng.random_range(40..120);
        let (b0, b1) = (rng.random_range(-1.0..1.0), rng.random_range(-1.5..1.5));
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = x.iter().map(|&xi| f64::from(u8::from(rng.random_bool(sigmoid(b0 + b1 * xi))))).collect();
        let mut t = Table::new(n);
        t.add_complete("x", &x);
        t.add_complete("y", &y);
        let Ok(fit) = logistic_fit(&DesignMatrix::build(&t, "y", &[Term::num("x")]).unwrap(), None) else {
            continue;
        };
        let (g0, g1) = grid_mle(&x, &y);
        logit_worst = logit_worst.max((fit.coef[0] - g0).abs()).max((fit.coef[1] - g1).abs());
        fits += 1;
    }
    let ks = ks_two_sample(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap().d;
    let kw = kruskal_wallis(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap().h;
    vec![
        check("OLS vs normal equations <= 1e-8", ols_worst <= 1e-8, format!("max rel diff {ols_worst:.1e} over 50 fits")),
        check("logistic vs grid MLE <= 1e-4", logit_worst <= 1e-4, format!("max diff {logit_worst:.1e} over 20 fits")),
        check("K-S D = 1/3", (ks - 1.0 / 3.0).abs() <= 1e-12, format!("D = {ks}")),
        check("K-W H = 2.4", (kw - 2.4).abs() <= 1e-12, format!("H = {kw}")),
    ]
}

fn criterion_4() -> Vec<Check> {
    let start = Instant::now();
    let base = SynthConfig {
        authors: 5000,
        ..SynthConfig::default()
    };
    let planter = Planter::new(generate_careers(&base).unwrap()).unwrap();
    let provider = DistanceProvider::new(planter.graph(), DistanceMetric::WeightedOverlap);
    let (mut signs, mut inside, mut covered, mut total) = (0, 0, 0, 0);
    let mut failures = Vec::new();
    for split in 2..=15u32 {
        let mut cfg = base.clone();
        cfg.analysis.split = SplitPoint::CareerYears(split);
        let s = planter.plant(&cfg).unwrap();
        let rows = analysis_rows(&s.corpus, s.corpus.codes(), &provider, &cfg.analysis);
        let fit = run_model_table(&rows_table(&rows.rows), ModelSpec::S4, &ModelOptions::default()).unwrap();
        let boot = bootstrap_model(&fit, 200, 7);
        let r = &fit.result;
        for (name, planted) in [("ep_past", 0.30), ("ed_past", -0.25)] {
            total += 1;
            let coef = r.coef_of(name).unwrap();
            let p = r.p_of(name).unwrap();
            let ci = boot.interval(name).unwrap();
            if coef.signum() == f64::signum(planted) && p < 0.01 {
                signs += 1;
            } else {
                failures.push(format!("split {split} {name}: coef {coef:.3} p {p:.1e}"));
            }
            if ci.contains(coef) {
                inside += 1;
            }
            if ci.contains(planted) {
                covered += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    vec![
        check(
            "signs with p < 0.01 at splits 2..15",
            signs == total,
            format!("{signs}/{total}{}", if failures.is_empty() { String::new() } else { format!(" ({})", failures.join("; ")) }),
        ),
        check("estimate inside bootstrap CI", inside == total, format!("{inside}/{total}")),
        check("planted value inside bootstrap CI (>= 26/28)", covered >= 26, format!("{covered}/{total}")),
        check("runtime < 2 min at 5,000 authors", elapsed < 120.0, format!("{elapsed:.1} s")),
    ]
}

struct Planted {
    synthetic: Synthetic,
    config: SynthConfig,
    graph: TopicGraph,
}

fn planted_group_corpus() -> Planted {
    let config = SynthConfig {
        authors: 1000,
        outcome: OutcomeModel::Group {
            effect: 0.17,
            future_group: false,
        },
        ..SynthConfig::default()
    };
    let synthetic = synthesize(&config).unwrap();
    let graph = TopicGraph::build(GraphKind::Cooccurrence, &synthetic.corpus, synthetic.corpus.codes(), None);
    Planted {
        synthetic,
        config,
        graph,
    }
}

fn a_vs_d(rows: &[AuthorAnalysisRow]) -> cautious_core::Result<cautious_core::causal::ArmEffect> {
    let est = psw(
        rows,
        &Arm::four_groups(),
        3,
        None,
        &cautious_core::causal::default_covariates(false),
        "logcit_future",
        &WeightConfig {
            estimand: Estimand::Ate,
            ..WeightConfig::default()
        },
    )?;
    Ok(est.effect("A").cloned().expect("arm A"))
}

fn criterion_5(p: &Planted) -> Vec<Check> {
    let provider = DistanceProvider::new(&p.graph, DistanceMetric::WeightedOverlap);
    let rows = analysis_rows(&p.synthetic.corpus, p.synthetic.corpus.codes(), &provider, &p.config.analysis);
    let e = a_vs_d(&rows.rows).unwrap();
    let pct = log_to_percent(0.1738);
    vec![
        check(
            "planted 0.17 inside ATE CI",
            e.ci_contains(0.17),
            format!("ATE {:.4} CI [{:.4}, {:.4}]", e.estimate, e.ci_lower, e.ci_upper),
        ),
        check("CI excludes 0", e.ci_excludes_zero(), format!("p {:.1e}", e.p)),
        check(
            "log_to_percent(0.1738) = 0.1898 +- 1e-6",
            (pct - 0.1898).abs() <= 1e-6,
            format!("exp(0.1738) - 1 = {pct:.6}, off by {:.1e}", (pct - 0.1898).abs()),
        ),
    ]
}

fn criterion_6(p: &Planted) -> Vec<Check> {
    let corpus = &p.synthetic.corpus;
    let provider = DistanceProvider::new(&p.graph, DistanceMetric::WeightedOverlap);
    let rows = analysis_rows(corpus, corpus.codes(), &provider, &p.config.analysis).rows;
    let observed = a_vs_d(&rows).unwrap().estimate.abs();
    let replicates = 200;

    let mut author_exceed = 0;
    let mut author_failed = 0;
    let mut multiset_ok = true;
    let sorted = |rs: &[AuthorAnalysisRow]| {
        let mut v: Vec<u64> = rs.iter().map(|r| r.logcit_future.to_bits()).collect();
        v.sort_unstable();
        v
    };
    let original = sorted(&rows);
    for i in 0..replicates {
        let shuffled = null_author_shuffle(&rows, "logcit_future", 1000 + i).unwrap();
        multiset_ok &= sorted(&shuffled) == original;
        match a_vs_d(&shuffled) {
            Ok(e) if e.estimate.abs() >= observed => author_exceed += 1,
            Ok(_) => {}
            Err(_) => author_failed += 1,
        }
    }

    let yearly = |c: &Corpus| {
        let mut m: BTreeMap<(String, i32), usize> = BTreeMap::new();
        for p in c.papers() {
            for a in &p.authors {
                *m.entry((a.clone(), p.year())).or_default() += 1;
            }
        }
        m
    };
    let original_degrees = yearly(corpus);
    let mut paper_exceed = 0;
    let mut paper_failed = 0;
    let mut degrees_ok = true;
    for i in 0..replicates {
        let (shuffled, _) = null_paper_shuffle(corpus, 5000 + i, 10).unwrap();
        degrees_ok &= yearly(&shuffled) == original_degrees;
        degrees_ok &= shuffled
            .papers()
            .iter()
            .zip(corpus.papers())
            .all(|(a, b)| a.authors.len() == b.authors.len() && a.codes == b.codes);
        let rows = analysis_rows(&shuffled, shuffled.codes(), &provider, &p.config.analysis).rows;
        match a_vs_d(&rows) {
            Ok(e) if e.estimate.abs() >= observed => paper_exceed += 1,
            Ok(_) => {}
            Err(_) => paper_failed += 1,
        }
    }
    let limit = replicates as usize / 50;
    vec![
        check(
            "author shuffles exceeding observed <= 2%",
            author_exceed <= limit && author_failed == 0,
            format!("{author_exceed}/{replicates} exceed |ATE| {observed:.4}, {author_failed} failed"),
        ),
        check(
            "paper shuffles exceeding observed <= 2%",
            paper_exceed <= limit && paper_failed == 0,
            format!("{paper_exceed}/{replicates} exceed, {paper_failed} failed"),
        ),
        check(
            "outcome multiset preserved",
            multiset_ok,
            format!("{replicates} author shuffles compared"),
        ),
        check(
            "author-year and paper degrees preserved",
            degrees_ok,
            format!("{replicates} paper shuffles compared"),
        ),
    ]
}

fn criterion_7() -> Vec<Check> {
    let (a, b) = (0.5, 0.3);
    let config = SynthConfig {
        authors: 1500,
        mediator: Some(MediatorSpec {
            name: "novelty".into(),
            a,
            b,
            noise_sd: 0.1,
        }),
        ..SynthConfig::default()
    };
    let s = synthesize(&config).unwrap();
    let view = s.corpus.codes();
    let graph = TopicGraph::build(GraphKind::Cooccurrence, &s.corpus, view, None);
    let provider = DistanceProvider::new(&graph, DistanceMetric::WeightedOverlap);
    let rows = analysis_rows(&s.corpus, view, &provider, &config.analysis);
    let table = rows_table(&rows.rows);
    let options = ModelOptions {
        extras: vec!["past.ext.novelty".into()],
        ..ModelOptions::default()
    };
    let base = run_model_table(&table, ModelSpec::S4, &ModelOptions::default()).unwrap().result;
    let mut checks = Vec::new();
    for spec in [ModelSpec::S10, ModelSpec::S11] {
        let r = run_model_table(&table, spec, &options).unwrap().result;
        let mut ok = true;
        let mut detail = Vec::new();
        for name in ["ep_past", "ed_past"] {
            let (c, p) = (r.coef_of(name).unwrap(), r.p_of(name).unwrap());
            ok &= p < 0.05 && c.signum() == base.coef_of(name).unwrap().signum();
            detail.push(format!("{name} {c:.3} (p {p:.1e})"));
        }
        checks.push(check(format!("{spec} keeps EP/ED significant with S4 signs"), ok, detail.join(", ")));
    }
    let m = mediation(
        &table,
        "ep_past",
        "past.ext.novelty",
        "logcit_future",
        &[Term::num("logcit_past"), Term::num("ed_past")],
        500,
        3,
        30,
    )
    .unwrap();
    checks.push(check(
        "ACME + ADE = total exactly",
        m.acme + m.ade == m.total && m.acme == m.a * m.b,
        format!("{} + {} = {}", m.acme, m.ade, m.total),
    ));
    let ci = m.acme_ci.unwrap();
    checks.push(check(
        "planted a*b inside ACME bootstrap CI",
        ci.contains(a * b),
        format!("a*b {:.3}, ACME {:.4} CI [{:.4}, {:.4}]", a * b, m.acme, ci.lower, ci.upper),
    ));
    checks
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn criterion_8() -> Vec<Check> {
    let s = synthesize(&SynthConfig {
        authors: 300,
        seed: 8,
        ..SynthConfig::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    s.corpus.write_jsonl(&dir.path().join("papers.jsonl")).unwrap();
    let text = r#"
        seed = 8
        [corpus]
        path = "papers.jsonl"
        [psw]
        [sweep]
        windows = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15]
        years = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15]
        digits = ["2-2", "2-4", "4-4", "4-6", "2-6"]
    "#;
    let mut config = RunConfig::from_toml(text).unwrap();
    config.base_dir = dir.path().to_path_buf();
    let inputs = Inputs::load(&config).unwrap();
    let dims = [SweepDimension::Window, SweepDimension::Digits, SweepDimension::DistanceMode];
    let mut runs = Vec::new();
    for out in ["a", "b"] {
        config.out = dir.path().join(out);
        for d in dims {
            run_sweep(&config, &inputs, d).unwrap();
        }
        runs.push(snapshot(&config.out));
    }
    let mut complete = true;
    let mut counts = Vec::new();
    for (d, expected) in dims.iter().zip([30, 5, 2]) {
        let bytes = &runs[0][&format!("sweep_{}.csv", d.name())];
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        let idx = r.headers().unwrap().iter().position(|h| h == "ep_coef").unwrap();
        let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
        complete &= rows.len() == expected && rows.iter().all(|row| !row[idx].is_empty());
        counts.push(format!("{} {}", d.name(), rows.len()));
    }

    let corpus = &inputs.corpus;
    let view = corpus.codes();
    let provider = inputs.provider(&config);
    let (mut equal, mut compared) = (true, 0);
    for c in corpus.careers() {
        let l = c.papers.len();
        let all_ep = ep(corpus, view, &c.papers, LookbackWindow::All);
        for mode in [PaperDistanceMode::Mean, PaperDistanceMode::Hausdorff] {
            let all_ed = ed(corpus, view, &c.papers, LookbackWindow::All, &provider, mode);
            for j in [l - 1, l, l + 5] {
                let w = LookbackWindow::Papers(j.max(1));
                compared += 1;
                equal &= ep(corpus, view, &c.papers, w) == all_ep;
                equal &= ed(corpus, view, &c.papers, w, &provider, mode).map(f64::to_bits) == all_ed.map(f64::to_bits);
            }
        }
    }
    vec![
        check(
            "J, K, digit and Hausdorff sweeps run end to end",
            complete,
            counts.join(", "),
        ),
        check("sweeps deterministic", runs[0] == runs[1], format!("{} files compared", runs[0].len())),
        check("Papers(J >= L-1) equals All exactly", equal, format!("{compared} career-window pairs")),
    ]
}

const PIPELINE: &str = r#"
seed = 9
out = "out"

[corpus]
path = "data/papers.jsonl"

[analysis.split]
mode = "career_years"
value = 4

[synth]
authors = 300

[synth.outcome]
mode = "group"
effect = 0.17
future_group = false

[regress]
models = ["S3", "S4", "S5", "S6", "S8"]
bootstrap = 50

[psm]

[psw]

[null]
replicates = 10

[mediation]
bootstrap = 50

[[mediation.items]]
treatment = "ep_past"
mediator = "past.team_size"

[sweep]
dimensions = ["split", "window", "quantile", "digits", "distance_mode"]
splits = [2, 4, 6]
windows = [3, 5]
years = [2]
quantiles = [50, 40]

[report]
analyses = ["correlations", "marginal", "ate", "thresholds", "trajectories", "cohorts", "transitions", "stability", "drastic", "mediation"]
ate_splits = [2, 4]
thresholds = [50, 40]
max_year = 6
cohorts = [[1985, 1992], [1993, 1999]]
snapshots = ["2000-01-01", "2004-01-01"]
periods = [["1985-01-01", "1999-12-31"], ["2000-01-01", "2040-12-31"]]
"#;

fn pipeline(threads: &str) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), PIPELINE).unwrap();
    for cmd in ["synth", "run"] {
        let out = Command::new(env!("CARGO_BIN_EXE_cautious"))
            .current_dir(dir.path())
            .args(["--config", "run.toml", "--threads", threads, cmd])
            .output()
            .unwrap();
        if !out.status.success() {
            return Err(format!("`{cmd}` failed: {}", String::from_utf8_lossy(&out.stderr).trim()));
        }
    }
    Ok(snapshot(dir.path()))
}

fn criterion_9() -> Vec<Check> {
    let runs: Result<Vec<_>, String> = ["1", "1", "8"].iter().map(|t| pipeline(t)).collect();
    match runs {
        Err(e) => vec![check("full pipeline runs", false, e)],
        Ok(runs) => {
            let same = |a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>| {
                let diff: Vec<&String> = a.keys().filter(|k| b.get(*k) != a.get(*k)).collect();
                (diff.is_empty() && a.len() == b.len(), format!("{} files, differing: {diff:?}", a.len()))
            };
            let (runs_same, d1) = same(&runs[0], &runs[1]);
            let (threads_same, d2) = same(&runs[0], &runs[2]);
            vec![
                check("byte-identical across two runs", runs_same, d1),
                check("byte-identical across --threads 1 and 8", threads_same, d2),
            ]
        }
    }
}

fn main() {
    let start = Instant::now();
    let mut unexpected = 0;
    let mut passed = 0;
    let mut run = |n: usize, title: &str, checks: Vec<Check>| {
        let pass = checks.iter().all(|c| c.pass);
        passed += pass as usize;
        let details: Vec<String> = checks
            .iter()
            .map(|c| format!("{}{}: {}", if c.pass { "" } else { "FAILED " }, c.name, c.detail))
            .collect();
        println!("criterion {n} [{title}]: {} | {}", if pass { "PASS" } else { "FAIL" }, details.join(" | "));
        unexpected += checks
            .iter()
            .filter(|c| !c.pass && !KNOWN_UNATTAINABLE.contains(&c.name.as_str()))
            .count();
    };
    run(1, "metric oracles", criterion_1());
    run(2, "graph formula checks", criterion_2());
    run(3, "estimator oracles", criterion_3());
    run(4, "planted-effect recovery", criterion_4());
    let planted = planted_group_corpus();
    run(5, "PSW calibration", criterion_5(&planted));
    run(6, "null models", criterion_6(&planted));
    run(7, "confounder battery", criterion_7());
    run(8, "robustness sweeps", criterion_8());
    run(9, "determinism", criterion_9());
    println!(
        "acceptance: {passed}/9 criteria pass; {unexpected} unexpected failing checks; known unattainable: {KNOWN_UNATTAINABLE:?} ({:.0} s)",
        start.elapsed().as_secs_f64()
    );
    if unexpected > 0 {
        std::process::exit(1);
    }
}
