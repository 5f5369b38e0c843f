//! Feature-space multimodal augmentation.
//!
//! With probability `chi` a training pair is augmented: a fair coin picks
//! actions or entities, a class of that kind is drawn from the sample, a
//! same-class partner is drawn from the candidate index, and the two frozen
//! features are blended with a convex weight `lambda`. Video and caption
//! draw their class, partner and `lambda` independently but share the coin.
//!
//! Two comparison baselines reuse the same gate: Gaussian noise on the video
//! feature, and synonym replacement on the caption tokens.

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::{ClassId, ClassKind, Corpus, PairedSample, SampleId};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::selection::{CandidateIndex, Criterion};
use crate::semantics::Lexicon;
use crate::trainer::Featurizer;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaMode {
    Beta { alpha: f64, beta: f64 },
    Fixed(f64),
}

impl Default for LambdaMode {
    fn default() -> Self {
        LambdaMode::Beta { alpha: 1.0, beta: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Video,
    Text,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    #[default]
    None,
    NoiseInjection {
        sigma: f64,
    },
    SynonymReplacement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentConfig {
    /// Per-sample augmentation probability.
    pub chi: f64,
    #[serde(default)]
    pub lambda: LambdaMode,
    pub criterion: Criterion,
    pub target: Target,
    #[serde(default)]
    pub baseline: Baseline,
    /// Drop the anchor itself from its candidate sets.
    #[serde(default = "yes")]
    pub exclude_self: bool,
}

fn yes() -> bool {
    true
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            chi: 0.0,
            lambda: LambdaMode::default(),
            criterion: Criterion::Fine,
            target: Target::Joint,
            baseline: Baseline::None,
            exclude_self: true,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.chi) {
            return Err(Error::config(format!("chi must lie in [0, 1], got {}", self.chi)));
        }
        match self.lambda {
            LambdaMode::Beta { alpha, beta }
                if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) =>
            {
                return Err(Error::config("beta parameters must be positive and finite"));
            }
            LambdaMode::Fixed(x) if !(0.0..=1.0).contains(&x) => {
                return Err(Error::config(format!("fixed lambda must lie in [0, 1], got {x}")));
            }
            _ => {}
        }
        if let Baseline::NoiseInjection { sigma } = self.baseline {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return Err(Error::config("noise sigma must be finite and non-negative"));
            }
        }
        Ok(())
    }

    pub fn applies_to_video(&self) -> bool {
        matches!(self.target, Target::Video | Target::Joint)
    }

    pub fn applies_to_text(&self) -> bool {
        matches!(self.target, Target::Text | Target::Joint)
    }
}

/// Which kind of class drives the substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "V")]
    Actions,
    #[serde(rename = "N")]
    Entities,
}

impl Branch {
    pub fn kind(self) -> ClassKind {
        match self {
            Branch::Actions => ClassKind::Verb,
            Branch::Entities => ClassKind::Noun,
        }
    }
}

/// Outcome for one modality of a mixing step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum HalfOutcome {
    Mixed {
        class: ClassId,
        partner: SampleId,
        lambda: f64,
    },
    NoCandidates {
        class: ClassId,
    },
    Disabled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replacement {
    /// Index of the first replaced caption word.
    pub position: usize,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixRecord {
    Mix {
        branch: Branch,
        video: HalfOutcome,
        text: HalfOutcome,
    },
    Noise {
        sigma: f64,
    },
    Synonym {
        replacement: Option<Replacement>,
    },
}

/// Possibly augmented frozen features of one training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPair {
    pub sample: SampleId,
    pub video_feat: Vec<f64>,
    pub text_feat: Vec<f64>,
    pub was_augmented: bool,
    pub mix_record: Option<MixRecord>,
}

/// Convex combination `lambda * a + (1 - lambda) * b`.
pub fn convex_mix(a: &[f64], b: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::config(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    // lambda = 1 and lambda = 0 must reproduce the endpoints exactly.
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| lambda * x + (1.0 - lambda) * y)
        .collect())
}

/// Video fusion of two frozen video features.
pub fn mix_mu(vbar: &[f64], wbar: &[f64], lambda: f64) -> Result<Vec<f64>> {
    convex_mix(vbar, wbar, lambda)
}

/// Text fusion of two frozen caption features.
pub fn mix_rho(qbar: &[f64], dbar: &[f64], lambda: f64) -> Result<Vec<f64>> {
    convex_mix(qbar, dbar, lambda)
}

pub fn sample_lambda(mode: LambdaMode, rng: &mut Rng) -> f64 {
    match mode {
        LambdaMode::Fixed(x) => x,
        LambdaMode::Beta { alpha, beta } => Beta::new(alpha, beta)
            .expect("validated beta parameters")
            .sample(rng)
            .clamp(0.0, 1.0),
    }
}

/// `feat + N(0, sigma^2)` per coordinate.
pub fn noise_injection(feat: &[f64], sigma: f64, rng: &mut Rng) -> Vec<f64> {
    if sigma == 0.0 {
        return feat.to_vec();
    }
    let normal = Normal::new(0.0, sigma).expect("non-negative sigma");
    feat.iter().map(|&x| x + normal.sample(rng)).collect()
}

/// Replace one class-bearing token by a different surface form of its class.
///
/// The token is drawn uniformly among those whose class has at least two
/// forms; if there is none the caption comes back unchanged.
pub fn synonym_replacement(tokens: &[String], lexicon: &Lexicon, rng: &mut Rng) -> (Vec<String>, Option<Replacement>) {
    let table = lexicon.table();
    let replaceable: Vec<_> = lexicon
        .segment(tokens)
        .into_iter()
        .filter(|m| table.classes(m.kind)[m.class as usize].len() > 1)
        .collect();
    let Some(m) = replaceable.choose(rng) else {
        return (tokens.to_vec(), None);
    };
    let forms = &table.classes(m.kind)[m.class as usize];
    let mut pick = rng.random_range(0..forms.len() - 1);
    if pick >= m.form {
        pick += 1;
    }
    let to = &forms[pick];
    let mut out = Vec::with_capacity(tokens.len() + 2);
    out.extend_from_slice(&tokens[..m.start]);
    out.extend(to.split(' ').map(str::to_owned));
    out.extend_from_slice(&tokens[m.start + m.len..]);
    let replacement = Replacement {
        position: m.start,
        from: tokens[m.start..m.start + m.len].join(" "),
        to: to.clone(),
    };
    (out, Some(replacement))
}

/// Augmentation engine over a corpus, with featurized inputs cached.
///
/// The engine is immutable; each caller brings its own rng stream, so
/// parallel workers stay reproducible.
pub struct Augmenter<'a> {
    corpus: &'a Corpus,
    index: &'a CandidateIndex,
    featurizer: &'a Featurizer,
    config: AugmentConfig,
    video: Vec<Vec<f64>>,
    text: Vec<Vec<f64>>,
}

impl<'a> Augmenter<'a> {
    pub fn new(
        corpus: &'a Corpus,
        index: &'a CandidateIndex,
        featurizer: &'a Featurizer,
        config: &AugmentConfig,
    ) -> Result<Self> {
        config.validate()?;
        if index.mode() != config.criterion {
            return Err(Error::config(format!(
                "candidate index built for {:?} but augmentation asks for {:?}",
                index.mode(),
                config.criterion
            )));
        }
        if index.len() != corpus.len() {
            return Err(Error::config("candidate index was built for a different corpus"));
        }
        let video = corpus
            .samples()
            .iter()
            .map(|s| featurizer.video(&s.video_feat))
            .collect::<Result<_>>()?;
        let text = corpus
            .samples()
            .iter()
            .map(|s| featurizer.text(&s.caption_tokens))
            .collect();
        Ok(Augmenter {
            corpus,
            index,
            featurizer,
            config: config.clone(),
            video,
            text,
        })
    }

    pub fn config(&self) -> &AugmentConfig {
        &self.config
    }

    /// Frozen features `(f(v), g(q))` of a sample.
    pub fn embedded(&self, id: SampleId) -> (&[f64], &[f64]) {
        (&self.video[id as usize], &self.text[id as usize])
    }

    pub fn augment(&self, id: SampleId, rng: &mut Rng) -> AugmentedPair {
        let (vbar, qbar) = self.embedded(id);
        let mut out = AugmentedPair {
            sample: id,
            video_feat: vbar.to_vec(),
            text_feat: qbar.to_vec(),
            was_augmented: false,
            mix_record: None,
        };

        let p = rng.random::<f64>() * 100.0;
        if p <= (1.0 - self.config.chi) * 100.0 {
            return out;
        }
        out.was_augmented = true;

        let record = match self.config.baseline {
            Baseline::NoiseInjection { sigma } => {
                out.video_feat = noise_injection(vbar, sigma, rng);
                MixRecord::Noise { sigma }
            }
            Baseline::SynonymReplacement => {
                let sample = self.corpus.sample(id);
                let (tokens, replacement) = synonym_replacement(&sample.caption_tokens, self.featurizer.lexicon(), rng);
                if replacement.is_some() {
                    out.text_feat = self.featurizer.text(&tokens);
                }
                MixRecord::Synonym { replacement }
            }
            Baseline::None => {
                let branch = if rng.random_bool(0.5) {
                    Branch::Actions
                } else {
                    Branch::Entities
                };
                let video = if self.config.applies_to_video() {
                    self.mix_half(id, branch, &self.video, rng, &mut out.video_feat)
                } else {
                    HalfOutcome::Disabled
                };
                let text = if self.config.applies_to_text() {
                    self.mix_half(id, branch, &self.text, rng, &mut out.text_feat)
                } else {
                    HalfOutcome::Disabled
                };
                MixRecord::Mix { branch, video, text }
            }
        };
        out.mix_record = Some(record);
        out
    }

    fn mix_half(
        &self,
        id: SampleId,
        branch: Branch,
        feats: &[Vec<f64>],
        rng: &mut Rng,
        dest: &mut Vec<f64>,
    ) -> HalfOutcome {
        let kind = branch.kind();
        let class = *self
            .index
            .annotation(id)
            .classes(kind)
            .as_slice()
            .choose(rng)
            .expect("annotations are nonempty");
        let candidates = self.index.candidates(kind, class, id, self.config.exclude_self);
        let Some(&partner) = candidates.choose(rng) else {
            return HalfOutcome::NoCandidates { class };
        };
        let lambda = sample_lambda(self.config.lambda, rng);
        *dest = convex_mix(&feats[id as usize], &feats[partner as usize], lambda).expect("featurizer keeps dims fixed");
        HalfOutcome::Mixed { class, partner, lambda }
    }
}

/// One-shot form of [`Augmenter::augment`].
pub fn augment_pair(
    sample: &PairedSample,
    corpus: &Corpus,
    index: &CandidateIndex,
    featurizer: &Featurizer,
    config: &AugmentConfig,
    rng: &mut Rng,
) -> Result<AugmentedPair> {
    Ok(Augmenter::new(corpus, index, featurizer, config)?.augment(sample.id, rng))
}
