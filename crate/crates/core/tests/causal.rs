//! Matching, weighting, null models, perturbation and mediation.

use std::collections::BTreeMap;

use cautious_core::causal::{
    log_to_percent, null_author_shuffle, null_paper_shuffle, perturb_gaussian, psm_table, psw_table, Arm,
    Estimand, MatchConfig, WeightConfig,
};
use cautious_core::corpus::synth::{synthesize, SynthConfig, Synthetic};
use cautious_core::metrics::analysis_rows;
use cautious_core::stats::{mediation, Table, Term};
use cautious_core::{AuthorAnalysisRow, DistanceMetric, DistanceProvider, GraphKind, Group, TopicGraph};
use proptest::prelude::*;

fn synthetic() -> Synthetic {
    synthesize(&SynthConfig {
        seed: 11,
        authors: 120,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn rows(s: &Synthetic) -> Vec<AuthorAnalysisRow> {
    let view = s.corpus.codes();
    let graph = TopicGraph::build(GraphKind::Cooccurrence, &s.corpus, view, None);
    let provider = DistanceProvider::new(&graph, DistanceMetric::WeightedOverlap);
    analysis_rows(&s.corpus, view, &provider, &SynthConfig::default().analysis).rows
}

#[test]
fn psm_hand_case() {
    let x = [1.0, 2.0, 1.0, 2.0, 5.0];
    let y = [3.0, 5.0, 2.0, 3.0, 9.0];
    let treated = vec![Some(true), Some(true), Some(false), Some(false), Some(false)];
    let mut t = Table::new(5);
    t.add_complete("x", &x);
    t.add_complete("y", &y);
    t.ids = ["t1", "t2", "c1", "c2", "c3"].iter().map(|s| s.to_string()).collect();
    let config = MatchConfig {
        caliper_sd: 1e-6,
        ..MatchConfig::default()
    };
    let r = psm_table(&t, &treated, &[Term::num("x")], "y", &config).unwrap();
    let mut pairs: Vec<(String, String)> = r.pairs.iter().map(|p| (p.treated_id.clone(), p.control_id.clone())).collect();
    pairs.sort();
    assert_eq!(pairs, vec![("t1".into(), "c1".into()), ("t2".into(), "c2".into())]);
    assert!((r.att - 1.5).abs() < 1e-12);
    assert_eq!(r.unmatched_control, 1);
}

#[test]
fn psm_against_clone_is_zero() {
    let x: Vec<f64> = (0..10).map(|i| (i % 5) as f64).collect();
    let y: Vec<f64> = (0..10).map(|i| ((i % 5) * 2) as f64).collect();
    let treated: Vec<Option<bool>> = (0..10).map(|i| Some(i < 5)).collect();
    let mut t = Table::new(10);
    t.add_complete("x", &x);
    t.add_complete("y", &y);
    let config = MatchConfig {
        caliper_sd: 1e-6,
        ..MatchConfig::default()
    };
    let r = psm_table(&t, &treated, &[Term::num("x")], "y", &config).unwrap();
    assert_eq!(r.pairs.len(), 5);
    assert_eq!(r.att, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn uniform_propensities_give_mean_difference(
        data in prop::collection::vec((any::<bool>(), -5.0f64..5.0), 6..60)
    ) {
        prop_assume!(data.iter().filter(|d| d.0).count() >= 2 && data.iter().filter(|d| !d.0).count() >= 2);
        let n = data.len();
        let y: Vec<f64> = data.iter().map(|d| d.1).collect();
        let mut t = Table::new(n);
        t.add_complete("c", &vec![1.0; n]);
        t.add_complete("y", &y);
        t.add_categorical("group", data.iter().map(|d| Some(if d.0 { "A" } else { "D" }.to_string())).collect());
        let mean = |flag: bool| {
            let v: Vec<f64> = data.iter().filter(|d| d.0 == flag).map(|d| d.1).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let diff = mean(true) - mean(false);
        let arms = vec![Arm::group(Group::D), Arm::group(Group::A)];
        for (estimand, treated) in [(Estimand::Ate, None), (Estimand::Att, Some(1))] {
            let config = WeightConfig { estimand, trim_percentile: None, ..WeightConfig::default() };
            let r = psw_table(&t, "group", &arms, 0, treated, &[Term::num("c")], "y", &config).unwrap();
            prop_assert!((r.effects[0].estimate - diff).abs() < 1e-9);
            prop_assert!(r.effects[0].ci_lower <= r.effects[0].estimate && r.effects[0].estimate <= r.effects[0].ci_upper);
        }
    }

    #[test]
    fn mediation_effects_decompose(
        data in prop::collection::vec((-3.0f64..3.0, -1.0f64..1.0, -1.0f64..1.0), 20..60),
        a in -1.0f64..1.0,
        b in -1.0f64..1.0,
    ) {
        let n = data.len();
        let t: Vec<f64> = data.iter().map(|d| d.0).collect();
        let m: Vec<f64> = data.iter().map(|d| a * d.0 + d.1).collect();
        let y: Vec<f64> = data.iter().zip(&m).map(|(d, &mi)| 0.5 * d.0 + b * mi + d.2).collect();
        let mut tab = Table::new(n);
        tab.add_complete("t", &t);
        tab.add_complete("m", &m);
        tab.add_complete("y", &y);
        let r = mediation(&tab, "t", "m", "y", &[], 20, 3, 10).unwrap();
        prop_assert_eq!(r.acme + r.ade, r.total);
        prop_assert!((r.acme - r.a * r.b).abs() <= 1e-12 * r.acme.abs().max(1.0));
    }
}

#[test]
fn mediation_with_inert_mediator_has_no_indirect_effect() {
    let n = 400;
    let t: Vec<f64> = (0..n).map(|i| ((i * 7) % 11) as f64 / 5.0).collect();
    let m: Vec<f64> = (0..n).map(|i| 0.8 * t[i] + ((i * 13) % 17) as f64 / 8.0).collect();
    let y: Vec<f64> = (0..n).map(|i| 0.6 * t[i] + ((i * 5) % 7) as f64 / 3.0).collect();
    let mut tab = Table::new(n);
    tab.add_complete("t", &t);
    tab.add_complete("m", &m);
    tab.add_complete("y", &y);
    let r = mediation(&tab, "t", "m", "y", &[], 200, 5, 10).unwrap();
    assert!(r.acme.abs() < 0.05, "acme {}", r.acme);
    assert!(r.acme_ci.unwrap().contains(0.0));
    assert!((r.total - 0.6).abs() < 0.05);
}

#[test]
fn log_percent_translation() {
    assert!((log_to_percent(0.1738) - 0.1898).abs() < 1e-4);
    assert_eq!(log_to_percent(0.0), 0.0);
}

#[test]
fn author_shuffle_only_permutes_outcome() {
    let s = synthetic();
    let rows = rows(&s);
    assert!(rows.len() > 50);
    let shuffled = null_author_shuffle(&rows, "logcit_future", 4).unwrap();
    let mut before: Vec<f64> = rows.iter().map(|r| r.logcit_future).collect();
    let mut after: Vec<f64> = shuffled.iter().map(|r| r.logcit_future).collect();
    assert_ne!(before, after);
    before.sort_by(f64::total_cmp);
    after.sort_by(f64::total_cmp);
    assert_eq!(before, after);
    for (a, b) in rows.iter().zip(&shuffled) {
        let mut b = b.clone();
        b.logcit_future = a.logcit_future;
        assert_eq!(*a, b);
    }
    assert_eq!(shuffled, null_author_shuffle(&rows, "logcit_future", 4).unwrap());
}

#[test]
fn paper_shuffle_preserves_degrees() {
    let s = synthetic();
    let (shuffled, report) = null_paper_shuffle(&s.corpus, 9, 5).unwrap();
    assert!(report.accepted > 0);
    let yearly = |c: &cautious_core::Corpus| {
        let mut m: BTreeMap<(String, i32), usize> = BTreeMap::new();
        for p in c.papers() {
            for a in &p.authors {
                *m.entry((a.clone(), p.year())).or_default() += 1;
            }
        }
        m
    };
    assert_eq!(yearly(&s.corpus), yearly(&shuffled));
    let mut changed = 0;
    for p in shuffled.papers() {
        let orig = s.corpus.paper(s.corpus.paper_index(&p.paper_id).unwrap());
        assert_eq!(p.authors.len(), orig.authors.len());
        assert_eq!(p.codes, orig.codes);
        let mut dedup = p.authors.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), p.authors.len());
        if p.authors != orig.authors {
            changed += 1;
        }
    }
    assert!(changed > 0);
    let (again, _) = null_paper_shuffle(&s.corpus, 9, 5).unwrap();
    assert_eq!(again.papers(), shuffled.papers());
}

#[test]
fn perturbation_touches_one_column() {
    let s = synthetic();
    let rows = rows(&s);
    assert_eq!(perturb_gaussian(&rows, "ep_past", 0.0, 1).unwrap(), rows);
    let noisy = perturb_gaussian(&rows, "ep_past", 0.1, 1).unwrap();
    let mut moved = 0;
    for (a, b) in rows.iter().zip(&noisy) {
        if a.ep_past != b.ep_past {
            moved += 1;
        }
        let mut b = b.clone();
        b.ep_past = a.ep_past;
        assert_eq!(*a, b);
    }
    assert_eq!(moved, rows.len());
    assert!(perturb_gaussian(&rows, "ep_past", -1.0, 1).is_err());
}
