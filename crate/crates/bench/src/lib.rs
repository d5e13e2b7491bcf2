//! Shared fixtures for the benchmarks.

use cautious_core::corpus::synth::{synthesize, OutcomeModel, SynthConfig};
use cautious_core::metrics::{analysis_rows, AnalysisConfig};
use cautious_core::{AuthorAnalysisRow, Corpus, DistanceMetric, DistanceProvider, GraphKind, TopicGraph};

/// A synthetic corpus with a planted group effect.
pub fn corpus(authors: usize) -> Corpus {
    let cfg = SynthConfig {
        authors,
        seed: 42,
        outcome: OutcomeModel::Group { effect: 0.17, future_group: false },
        ..SynthConfig::default()
    };
    synthesize(&cfg).expect("synthetic corpus").corpus
}

pub fn graph(corpus: &Corpus) -> TopicGraph {
    TopicGraph::build(GraphKind::Cooccurrence, corpus, corpus.codes(), None)
}

/// Analysis rows under the default analysis settings.
pub fn rows(corpus: &Corpus) -> Vec<AuthorAnalysisRow> {
    let g = graph(corpus);
    let d = DistanceProvider::new(&g, DistanceMetric::WeightedOverlap);
    analysis_rows(corpus, corpus.codes(), &d, &AnalysisConfig::default()).rows
}
