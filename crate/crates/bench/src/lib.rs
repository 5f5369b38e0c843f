//! Shared fixtures for the benchmarks.

use cmaug::corpus::{generate_synthetic, Corpus, GenConfig};
use cmaug::metrics::ScoreMatrix;
use cmaug::rng::stream_rng;
use cmaug::trainer::{Featurizer, FeaturizerConfig};
use rand::Rng as _;

pub fn corpus(samples: usize) -> Corpus {
    generate_synthetic(
        &GenConfig {
            samples,
            ..GenConfig::default()
        },
        0,
    )
    .expect("valid config")
}

pub fn featurizer(corpus: &Corpus) -> Featurizer {
    Featurizer::new(
        corpus.class_table(),
        corpus.feature_dim(),
        &FeaturizerConfig::default(),
        0,
    )
    .expect("valid config")
}

/// Uniform random square score matrix.
pub fn scores(n: usize) -> ScoreMatrix {
    let mut rng = stream_rng(0, 99);
    ScoreMatrix::new(n, n, (0..n * n).map(|_| rng.random::<f64>()).collect())
}
