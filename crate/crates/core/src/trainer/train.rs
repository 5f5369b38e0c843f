use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::encoder::DualEncoder;
use super::featurizer::{Featurizer, FeaturizerConfig};
use super::loss::{contrastive_loss, BatchItem, Mining};
use crate::augment::{AugmentConfig, Augmenter};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, EvalConfig, MetricReport, ScoreMatrix};
use crate::rng::{augment_rng, stream, stream_rng};
use crate::selection::CandidateIndex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Plain SGD step size on the batch-mean loss.
    pub learning_rate: f64,
    pub margin: f64,
    pub mining: Mining,
    pub embed_dim: usize,
    #[serde(default)]
    pub featurizer: FeaturizerConfig,
    #[serde(default)]
    pub augment: AugmentConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 64,
            learning_rate: 0.05,
            margin: 0.2,
            mining: Mining::HardestNegative,
            embed_dim: 32,
            featurizer: FeaturizerConfig::default(),
            augment: AugmentConfig::default(),
            eval: EvalConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs must be positive"));
        }
        if self.batch_size < 2 {
            return Err(Error::config("batch_size must be at least 2"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be positive"));
        }
        if !(self.margin.is_finite() && self.margin > 0.0) {
            return Err(Error::config("margin must be positive"));
        }
        if self.embed_dim == 0 {
            return Err(Error::config("embed_dim must be positive"));
        }
        self.mining.validate()?;
        self.augment.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean per-pair loss over the epoch.
    pub loss: f64,
    pub augmented: usize,
    pub validation: Option<MetricReport>,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub encoder: DualEncoder,
    pub featurizer: Featurizer,
    pub log: Vec<EpochLog>,
}

impl TrainedModel {
    pub fn evaluate(&self, corpus: &Corpus, config: &EvalConfig) -> Result<MetricReport> {
        evaluate_model(&self.encoder, &self.featurizer, corpus, config)
    }
}

/// Train a dual encoder with SGD over shuffled mini-batches. Every sample
/// passes through the augmenter (which fires with probability `chi`) before
/// encoding. Deterministic given `config.seed`; the returned weights are
/// rounded to f32, the checkpoint precision.
pub fn train(corpus: &Corpus, config: &TrainConfig, validation: Option<&Corpus>) -> Result<TrainedModel> {
    config.validate()?;
    if corpus.len() < 2 {
        return Err(Error::config("training corpus needs at least two samples"));
    }
    let featurizer = Featurizer::new(
        corpus.class_table(),
        corpus.feature_dim(),
        &config.featurizer,
        config.seed,
    )?;
    let index = CandidateIndex::build(corpus, config.augment.criterion);
    let augmenter = Augmenter::new(corpus, &index, &featurizer, &config.augment)?;

    let mut encoder = DualEncoder::random(
        corpus.feature_dim(),
        featurizer.text_dim(),
        config.embed_dim,
        &mut stream_rng(config.seed, stream::ENCODER_INIT),
    );
    let mut shuffle_rng = stream_rng(config.seed, stream::SHUFFLE);
    let mut mining_rng = stream_rng(config.seed, stream::MINING);
    let mut order: Vec<u32> = (0..corpus.len() as u32).collect();
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        let mut seen = 0usize;
        let mut augmented = 0usize;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            if chunk.len() < 2 {
                continue;
            }
            let first_slot = b * config.batch_size;
            let pairs: Vec<_> = chunk
                .par_iter()
                .enumerate()
                .map(|(k, &id)| {
                    let mut rng = augment_rng(config.seed, epoch as u64, (first_slot + k) as u64);
                    augmenter.augment(id, &mut rng)
                })
                .collect();
            augmented += pairs.iter().filter(|p| p.was_augmented).count();
            // Mixed pairs keep the anchor's own annotation for mining.
            let items: Vec<BatchItem<'_>> = pairs
                .iter()
                .map(|p| BatchItem {
                    video: &p.video_feat,
                    text: &p.text_feat,
                    annotation: &corpus.sample(p.sample).annotation,
                })
                .collect();
            let out = contrastive_loss(&encoder, &items, config.mining, config.margin, &mut mining_rng)?;
            if !out.loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss {} at epoch {epoch}, batch {b} (first sample {})",
                    out.loss, chunk[0]
                )));
            }
            let step = config.learning_rate / items.len() as f64;
            for (p, g) in encoder.params_mut().zip(out.grads.params()) {
                *p -= step * g;
            }
            if !encoder.is_finite() {
                return Err(Error::Numeric(format!("weights diverged at epoch {epoch}, batch {b}")));
            }
            total += out.loss;
            seen += chunk.len();
        }
        let validation = match validation {
            Some(v) => Some(evaluate_model(&encoder, &featurizer, v, &config.eval)?),
            None => None,
        };
        log.push(EpochLog {
            epoch,
            loss: total / seen.max(1) as f64,
            augmented,
            validation,
        });
    }

    encoder.round_to_f32();
    Ok(TrainedModel {
        encoder,
        featurizer,
        log,
    })
}

/// One embedding per sample.
pub type Embeddings = Vec<Vec<f64>>;

/// Unit `(video, text)` embeddings of every sample.
pub fn encode_corpus(
    encoder: &DualEncoder,
    featurizer: &Featurizer,
    corpus: &Corpus,
) -> Result<(Embeddings, Embeddings)> {
    let videos = corpus
        .samples()
        .par_iter()
        .map(|s| encoder.encode_video(&featurizer.video(&s.video_feat)?))
        .collect::<Result<Vec<_>>>()?;
    let texts = corpus
        .samples()
        .par_iter()
        .map(|s| encoder.encode_text(&featurizer.text(&s.caption_tokens)))
        .collect::<Result<Vec<_>>>()?;
    Ok((videos, texts))
}

/// Cosine similarities of each query embedding against each gallery embedding.
pub fn score_matrix(queries: &[Vec<f64>], gallery: &[Vec<f64>]) -> ScoreMatrix {
    ScoreMatrix::from_embeddings(queries, gallery)
}

/// Text-to-video scores `[caption i][video j]` over a corpus.
pub fn corpus_scores(encoder: &DualEncoder, featurizer: &Featurizer, corpus: &Corpus) -> Result<ScoreMatrix> {
    let (videos, texts) = encode_corpus(encoder, featurizer, corpus)?;
    Ok(score_matrix(&texts, &videos))
}

pub fn evaluate_model(
    encoder: &DualEncoder,
    featurizer: &Featurizer,
    corpus: &Corpus,
    config: &EvalConfig,
) -> Result<MetricReport> {
    let scores = corpus_scores(encoder, featurizer, corpus)?;
    Ok(evaluate(&scores, &corpus.annotations(), config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_split, GenConfig};

    fn quick() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            batch_size: 16,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn identical_seeds_give_identical_weights() {
        let (train_set, _) = generate_split(
            &GenConfig {
                samples: 120,
                ..GenConfig::default()
            },
            3,
            0,
        )
        .unwrap();
        let config = TrainConfig {
            augment: AugmentConfig {
                chi: 0.5,
                ..Default::default()
            },
            ..quick()
        };
        let a = train(&train_set, &config, None).unwrap();
        let b = train(&train_set, &config, None).unwrap();
        assert_eq!(a.encoder, b.encoder);
        assert_eq!(a.log, b.log);
        let c = train(&train_set, &TrainConfig { seed: 1, ..config }, None).unwrap();
        assert_ne!(a.encoder, c.encoder);
    }

    #[test]
    fn weights_are_f32_representable() {
        let (train_set, _) = generate_split(
            &GenConfig {
                samples: 40,
                ..GenConfig::default()
            },
            3,
            0,
        )
        .unwrap();
        let model = train(&train_set, &quick(), None).unwrap();
        assert!(model.encoder.params().all(|&p| f64::from(p as f32) == p));
    }

    #[test]
    fn validation_reports_are_logged() {
        let (train_set, test_set) = generate_split(
            &GenConfig {
                samples: 60,
                ..GenConfig::default()
            },
            3,
            20,
        )
        .unwrap();
        let model = train(&train_set, &quick(), Some(&test_set)).unwrap();
        assert_eq!(model.log.len(), 3);
        assert!(model.log.iter().all(|e| e.validation.is_some()));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let (train_set, _) = generate_split(
            &GenConfig {
                samples: 20,
                ..GenConfig::default()
            },
            3,
            0,
        )
        .unwrap();
        for bad in [
            TrainConfig { margin: 0.0, ..quick() },
            TrainConfig {
                batch_size: 1,
                ..quick()
            },
            TrainConfig {
                mining: Mining::RelevanceAwareNegative { threshold: 2.0 },
                ..quick()
            },
        ] {
            assert!(matches!(train(&train_set, &bad, None), Err(Error::Config(_))));
        }
    }

    #[test]
    fn score_matrix_matches_pairwise_loop() {
        let q = vec![vec![0.6, 0.8], vec![1.0, 0.0], vec![0.0, -1.0]];
        let g = vec![vec![0.0, 1.0], vec![0.8, 0.6]];
        let m = score_matrix(&q, &g);
        assert_eq!((m.rows(), m.cols()), (3, 2));
        for (i, qi) in q.iter().enumerate() {
            for (j, gj) in g.iter().enumerate() {
                let expected: f64 = qi.iter().zip(gj).map(|(a, b)| a * b).sum();
                assert_eq!(m.get(i, j), expected);
            }
        }
        let sym = score_matrix(&q, &q);
        for i in 0..3 {
            assert!((sym.get(i, i) - 1.0).abs() < 1e-12);
            for j in 0..3 {
                assert_eq!(sym.get(i, j), sym.get(j, i));
            }
        }
        assert_eq!(score_matrix(&q[..1], &g[..1]).rows(), 1);
    }
}
