use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::{ClassKind, SemanticClassTable};
use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng, Rng};
use crate::semantics::Lexicon;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeaturizerConfig {
    /// Dimension of the frozen text features.
    pub text_dim: usize,
    /// Norm of the per-token offset from its class direction.
    pub synonym_spread: f64,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        FeaturizerConfig {
            text_dim: 600,
            synonym_spread: 0.25,
        }
    }
}

/// Frozen backbone stand-in: `f` passes video features through, `g` mean-pools
/// fixed random embeddings of the caption's class-bearing tokens.
///
/// Each class owns a random unit direction; each surface form adds its own
/// random offset of norm `synonym_spread`, so synonyms are close but not
/// identical.
#[derive(Debug, Clone)]
pub struct Featurizer {
    video_dim: usize,
    text_dim: usize,
    lexicon: Lexicon,
    verbs: Vec<Vec<Vec<f64>>>,
    nouns: Vec<Vec<Vec<f64>>>,
}

fn gaussian_unit(rng: &mut Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

impl Featurizer {
    pub fn new(table: &SemanticClassTable, video_dim: usize, config: &FeaturizerConfig, seed: u64) -> Result<Self> {
        if config.text_dim == 0 {
            return Err(Error::config("text_dim must be positive"));
        }
        if !(config.synonym_spread.is_finite() && config.synonym_spread >= 0.0) {
            return Err(Error::config("synonym_spread must be finite and non-negative"));
        }
        let lexicon = Lexicon::from_table(table)?;
        let mut rng = stream_rng(seed, stream::TEXT_TABLE);
        let mut embed = |classes: &[Vec<String>]| -> Vec<Vec<Vec<f64>>> {
            classes
                .iter()
                .map(|forms| {
                    let center = gaussian_unit(&mut rng, config.text_dim);
                    forms
                        .iter()
                        .map(|_| {
                            let offset = gaussian_unit(&mut rng, config.text_dim);
                            center
                                .iter()
                                .zip(&offset)
                                .map(|(c, o)| c + config.synonym_spread * o)
                                .collect()
                        })
                        .collect()
                })
                .collect()
        };
        let verbs = embed(table.verbs());
        let nouns = embed(table.nouns());
        Ok(Featurizer {
            video_dim,
            text_dim: config.text_dim,
            lexicon,
            verbs,
            nouns,
        })
    }

    pub fn video_dim(&self) -> usize {
        self.video_dim
    }

    pub fn text_dim(&self) -> usize {
        self.text_dim
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    /// `f(v)`: the corpus feature, widened to f64.
    pub fn video(&self, feat: &[f32]) -> Result<Vec<f64>> {
        if feat.len() != self.video_dim {
            return Err(Error::DimensionMismatch {
                expected: self.video_dim,
                actual: feat.len(),
            });
        }
        Ok(feat.iter().map(|&x| f64::from(x)).collect())
    }

    /// `g(q)`: mean embedding of the caption's lexicon matches. Captions
    /// without any match map to the zero vector.
    pub fn text<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        let mut out = vec![0.0; self.text_dim];
        let matches = self.lexicon.segment(tokens);
        if matches.is_empty() {
            return out;
        }
        for m in &matches {
            let table = match m.kind {
                ClassKind::Verb => &self.verbs,
                ClassKind::Noun => &self.nouns,
            };
            for (o, x) in out.iter_mut().zip(&table[m.class as usize][m.form]) {
                *o += x;
            }
        }
        let scale = 1.0 / matches.len() as f64;
        out.iter_mut().for_each(|o| *o *= scale);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, GenConfig};

    #[test]
    fn deterministic_and_mean_pooled() {
        let corpus = generate_synthetic(
            &GenConfig {
                samples: 20,
                ..GenConfig::default()
            },
            1,
        )
        .unwrap();
        let config = FeaturizerConfig::default();
        let a = Featurizer::new(corpus.class_table(), 64, &config, 5).unwrap();
        let b = Featurizer::new(corpus.class_table(), 64, &config, 5).unwrap();
        let s = &corpus.samples()[0];
        assert_eq!(a.text(&s.caption_tokens), b.text(&s.caption_tokens));
        assert_eq!(a.text(&s.caption_tokens).len(), config.text_dim);

        let verb = &corpus.class_table().verbs()[0][0];
        let noun = &corpus.class_table().nouns()[0][0];
        let alone_v = a.text(&[verb.as_str()]);
        let alone_n: Vec<&str> = noun.split(' ').collect();
        let alone_n = a.text(&alone_n);
        let mut both: Vec<&str> = vec![verb.as_str(), "unknownword"];
        both.extend(noun.split(' '));
        let pooled = a.text(&both);
        for k in 0..config.text_dim {
            assert!((pooled[k] - 0.5 * (alone_v[k] + alone_n[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn unmatched_caption_is_zero_and_video_dims_checked() {
        let corpus = generate_synthetic(
            &GenConfig {
                samples: 10,
                ..GenConfig::default()
            },
            1,
        )
        .unwrap();
        let f = Featurizer::new(corpus.class_table(), 64, &FeaturizerConfig::default(), 5).unwrap();
        assert!(f.text(&["qqqq"]).iter().all(|&x| x == 0.0));
        assert!(f.video(&[0.0; 3]).is_err());
        assert_eq!(f.video(&[1.5; 64]).unwrap()[0], 1.5);
    }
}
