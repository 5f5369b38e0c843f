//! Procedural corpus with class-conditional video features.
//!
//! Each verb and noun class owns a unit-norm prototype in feature space. A
//! sample's video feature is its verb prototype plus the mean of its noun
//! prototypes, plus isotropic Gaussian noise. Captions follow the
//! `verb noun [noun]` template with synonyms drawn uniformly per class.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Annotation, ClassId, Corpus, PairedSample, SemanticClassTable, Split};
use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenConfig {
    pub verb_classes: usize,
    pub noun_classes: usize,
    pub synonyms_per_class: usize,
    pub samples: usize,
    pub feature_dim: usize,
    pub noise_sigma: f64,
    /// Fraction of noun surface tokens that span two words.
    #[serde(default = "default_multiword_fraction")]
    pub multiword_fraction: f64,
}

fn default_multiword_fraction() -> f64 {
    0.2
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            verb_classes: 20,
            noun_classes: 40,
            synonyms_per_class: 3,
            samples: 2000,
            feature_dim: 64,
            noise_sigma: 0.1,
            multiword_fraction: default_multiword_fraction(),
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.verb_classes < 2 {
            return Err(Error::config("verb_classes must be at least 2"));
        }
        if self.noun_classes < 2 {
            return Err(Error::config("noun_classes must be at least 2"));
        }
        if self.synonyms_per_class < 1 {
            return Err(Error::config("synonyms_per_class must be at least 1"));
        }
        if self.samples < 10 {
            return Err(Error::config("samples must be at least 10"));
        }
        if self.feature_dim < 8 {
            return Err(Error::config("feature_dim must be at least 8"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::config("noise_sigma must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&self.multiword_fraction) {
            return Err(Error::config("multiword_fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Per-class prototype vectors, regenerable from `(config, seed)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prototypes {
    pub verbs: Vec<Vec<f64>>,
    pub nouns: Vec<Vec<f64>>,
}

impl Prototypes {
    pub fn generate(config: &GenConfig, seed: u64) -> Self {
        let mut rng = stream_rng(seed, stream::PROTOTYPES);
        let mut draw =
            |count: usize| -> Vec<Vec<f64>> { (0..count).map(|_| unit_vector(&mut rng, config.feature_dim)).collect() };
        let verbs = draw(config.verb_classes);
        let nouns = draw(config.noun_classes);
        Prototypes { verbs, nouns }
    }

    /// Noise-free feature: verb prototypes plus the mean of noun prototypes.
    pub fn clean_feature(&self, annotation: &Annotation) -> Vec<f64> {
        let dim = self.verbs[0].len();
        let mut out = vec![0.0; dim];
        for v in annotation.verbs.iter() {
            for (o, p) in out.iter_mut().zip(&self.verbs[v as usize]) {
                *o += p;
            }
        }
        let scale = 1.0 / annotation.nouns.len() as f64;
        for n in annotation.nouns.iter() {
            for (o, p) in out.iter_mut().zip(&self.nouns[n as usize]) {
                *o += scale * p;
            }
        }
        out
    }
}

fn unit_vector(rng: &mut Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

const ONSETS: &[&str] = &[
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "sh",
];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

/// Fresh pronounceable pseudo-words, unique across the whole lexicon so
/// captions never contain accidental multi-word matches.
struct WordSource {
    rng: Rng,
    used: HashSet<String>,
}

impl WordSource {
    fn next(&mut self) -> String {
        loop {
            let syllables = self.rng.random_range(2..=3);
            let word: String = (0..syllables)
                .map(|_| {
                    format!(
                        "{}{}",
                        ONSETS.choose(&mut self.rng).unwrap(),
                        VOWELS.choose(&mut self.rng).unwrap()
                    )
                })
                .collect();
            if self.used.insert(word.clone()) {
                return word;
            }
        }
    }
}

fn generate_class_table(config: &GenConfig, seed: u64) -> SemanticClassTable {
    let mut words = WordSource {
        rng: stream_rng(seed, stream::LEXICON),
        used: HashSet::new(),
    };
    let verbs = (0..config.verb_classes)
        .map(|_| (0..config.synonyms_per_class).map(|_| words.next()).collect())
        .collect();
    let nouns = (0..config.noun_classes)
        .map(|_| {
            (0..config.synonyms_per_class)
                .map(|_| {
                    if words.rng.random_bool(config.multiword_fraction) {
                        format!("{} {}", words.next(), words.next())
                    } else {
                        words.next()
                    }
                })
                .collect()
        })
        .collect();
    SemanticClassTable::new(verbs, nouns).expect("generated tokens are unique")
}

struct SampleDraws<'a> {
    config: &'a GenConfig,
    table: &'a SemanticClassTable,
    prototypes: &'a Prototypes,
    rng: Rng,
    noise: Normal<f64>,
}

impl SampleDraws<'_> {
    fn draw(&mut self, id: u32) -> PairedSample {
        let rng = &mut self.rng;
        let verb = rng.random_range(0..self.config.verb_classes) as ClassId;
        let noun_count = rng.random_range(1..=2);
        let nouns: Vec<ClassId> = rand::seq::index::sample(rng, self.config.noun_classes, noun_count)
            .into_iter()
            .map(|n| n as ClassId)
            .collect();

        let mut caption = vec![self.table.verbs()[verb as usize].choose(rng).unwrap().clone()];
        for &n in &nouns {
            caption.push(self.table.nouns()[n as usize].choose(rng).unwrap().clone());
        }
        let caption_tokens = caption.iter().flat_map(|t| t.split(' ')).map(str::to_owned).collect();

        let annotation = Annotation::new(vec![verb], nouns).expect("nonempty by construction");
        let video_feat = self
            .prototypes
            .clean_feature(&annotation)
            .into_iter()
            .map(|x| (x + self.noise.sample(rng)) as f32)
            .collect();
        PairedSample {
            id,
            caption_tokens,
            video_feat,
            annotation,
        }
    }
}

/// Generate a training corpus. Pure function of `(config, seed)`.
pub fn generate_synthetic(config: &GenConfig, seed: u64) -> Result<Corpus> {
    Ok(generate_split(config, seed, 0)?.0)
}

/// Generate a training corpus of `config.samples` and a test corpus of
/// `test_samples` sharing the same classes and prototypes. The training
/// half is identical to [`generate_synthetic`].
pub fn generate_split(config: &GenConfig, seed: u64, test_samples: usize) -> Result<(Corpus, Corpus)> {
    config.validate()?;
    let table = generate_class_table(config, seed);
    let prototypes = Prototypes::generate(config, seed);
    let mut draws = SampleDraws {
        config,
        table: &table,
        prototypes: &prototypes,
        rng: stream_rng(seed, stream::SAMPLES),
        noise: Normal::new(0.0, config.noise_sigma).map_err(|e| Error::config(e.to_string()))?,
    };
    let train: Vec<_> = (0..config.samples as u32).map(|id| draws.draw(id)).collect();
    let test: Vec<_> = (0..test_samples as u32).map(|id| draws.draw(id)).collect();
    Ok((
        Corpus::new(train, table.clone(), config.feature_dim, Split::Train)?,
        Corpus::new(test, table, config.feature_dim, Split::Test)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::Lexicon;
    use std::collections::HashMap;

    fn small() -> GenConfig {
        GenConfig {
            verb_classes: 2,
            noun_classes: 2,
            synonyms_per_class: 2,
            samples: 10,
            feature_dim: 8,
            noise_sigma: 0.0,
            multiword_fraction: 0.5,
        }
    }

    #[test]
    fn rejects_invalid_dimensions() {
        for bad in [
            GenConfig {
                verb_classes: 1,
                ..small()
            },
            GenConfig {
                noun_classes: 1,
                ..small()
            },
            GenConfig {
                synonyms_per_class: 0,
                ..small()
            },
            GenConfig { samples: 9, ..small() },
            GenConfig {
                feature_dim: 4,
                ..small()
            },
            GenConfig {
                noise_sigma: -0.1,
                ..small()
            },
        ] {
            assert!(matches!(generate_synthetic(&bad, 7), Err(Error::Config(_))));
        }
    }

    #[test]
    fn noiseless_duplicates_share_features() {
        let corpus = generate_synthetic(&small(), 7).unwrap();
        assert_eq!(corpus.len(), 10);
        let mut by_classes: HashMap<&Annotation, &Vec<f32>> = HashMap::new();
        for s in corpus.samples() {
            if let Some(prev) = by_classes.insert(&s.annotation, &s.video_feat) {
                assert_eq!(prev, &s.video_feat);
            }
        }
        // 10 draws over at most 2 * 3 class combinations must collide.
        assert!(by_classes.len() < 10);
    }

    #[test]
    fn noiseless_features_are_prototype_sums() {
        let config = GenConfig { samples: 50, ..small() };
        let corpus = generate_synthetic(&config, 11).unwrap();
        let protos = Prototypes::generate(&config, 11);
        for s in corpus.samples() {
            let expected: Vec<f32> = protos.clean_feature(&s.annotation).iter().map(|&x| x as f32).collect();
            assert_eq!(s.video_feat, expected);
        }
        for p in protos.verbs.iter().chain(&protos.nouns) {
            let norm: f64 = p.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let config = GenConfig {
            noise_sigma: 0.3,
            samples: 40,
            ..small()
        };
        assert_eq!(
            generate_synthetic(&config, 7).unwrap(),
            generate_synthetic(&config, 7).unwrap()
        );
        assert_ne!(
            generate_synthetic(&config, 7).unwrap(),
            generate_synthetic(&config, 8).unwrap()
        );
    }

    #[test]
    fn split_train_half_matches_plain_generation() {
        let config = GenConfig {
            noise_sigma: 0.1,
            samples: 30,
            ..small()
        };
        let (train, test) = generate_split(&config, 3, 12).unwrap();
        assert_eq!(train, generate_synthetic(&config, 3).unwrap());
        assert_eq!(test.len(), 12);
        assert_eq!(test.split(), Split::Test);
        assert_eq!(test.class_table(), train.class_table());
        assert_eq!(test.samples()[0].id, 0);
    }

    #[test]
    fn captions_follow_template_and_match_lexicon() {
        let config = GenConfig {
            verb_classes: 6,
            noun_classes: 9,
            samples: 300,
            ..small()
        };
        let corpus = generate_synthetic(&config, 5).unwrap();
        let lexicon = Lexicon::from_table(corpus.class_table()).unwrap();
        for s in corpus.samples() {
            let n = s.annotation.nouns.len();
            assert!((1..=2).contains(&n));
            assert_eq!(s.annotation.verbs.len(), 1);
            assert_eq!(lexicon.act(&s.caption_tokens), s.annotation.verbs);
            assert_eq!(lexicon.ent(&s.caption_tokens), s.annotation.nouns);
        }
        let multiword = corpus
            .class_table()
            .nouns()
            .iter()
            .flatten()
            .filter(|t| t.contains(' '))
            .count();
        assert!(multiword > 0);
    }
}
