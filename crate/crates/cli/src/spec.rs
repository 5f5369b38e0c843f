use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cmaug::augment::{AugmentConfig, Baseline, LambdaMode, Target};
use cmaug::corpus::{generate_split, load_corpus, Corpus, GenConfig, Split};
use cmaug::selection::Criterion;
use cmaug::trainer::{Mining, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

/// Where the train and test corpora come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CorpusSource {
    /// Generate both splits in memory. Without a fixed `seed`, each run seed
    /// generates its own corpus.
    Generate {
        config: GenConfig,
        test_samples: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    /// A directory written by `gen`.
    Dir(PathBuf),
}

/// Augmentation setups compared by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    None,
    VideoFine,
    VideoCoarse,
    VideoFixedLambda,
    VideoNoise,
    TextFeature,
    TextSynonym,
    Joint,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::None,
        Variant::VideoFine,
        Variant::VideoCoarse,
        Variant::VideoFixedLambda,
        Variant::VideoNoise,
        Variant::TextFeature,
        Variant::TextSynonym,
        Variant::Joint,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::None => "none",
            Variant::VideoFine => "video-fine",
            Variant::VideoCoarse => "video-coarse",
            Variant::VideoFixedLambda => "video-fixed-lambda",
            Variant::VideoNoise => "video-noise",
            Variant::TextFeature => "text-feature",
            Variant::TextSynonym => "text-synonym",
            Variant::Joint => "joint",
        }
    }

    /// The augmentation config of this variant at augmentation chance `chi`.
    /// Only `video-fine` and `video-coarse` pin the selection criterion; the
    /// others keep the one in `base`.
    pub fn augment(self, base: &AugmentConfig, chi: f64, noise_sigma: f64) -> AugmentConfig {
        let mut config = AugmentConfig {
            chi,
            baseline: Baseline::None,
            ..base.clone()
        };
        match self {
            Variant::None => config.chi = 0.0,
            Variant::VideoFine => {
                config.target = Target::Video;
                config.criterion = Criterion::Fine;
            }
            Variant::VideoCoarse => {
                config.target = Target::Video;
                config.criterion = Criterion::Coarse;
            }
            Variant::VideoFixedLambda => {
                config.target = Target::Video;
                config.lambda = LambdaMode::Fixed(0.5);
            }
            Variant::VideoNoise => {
                config.target = Target::Video;
                config.baseline = Baseline::NoiseInjection { sigma: noise_sigma };
            }
            Variant::TextFeature => config.target = Target::Text,
            Variant::TextSynonym => {
                config.target = Target::Text;
                config.baseline = Baseline::SynonymReplacement;
            }
            Variant::Joint => config.target = Target::Joint,
        }
        config
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| CliError::config(format!("variant: unknown name {s:?}")))
    }
}

/// Short mining names used on the command line and in CSV output.
pub fn parse_mining(s: &str) -> Result<Mining> {
    match s {
        "random" => Ok(Mining::RandomNegative),
        "hardest" => Ok(Mining::HardestNegative),
        "ran" => Ok(Mining::ran()),
        "ranp" => Ok(Mining::ranp()),
        _ => Err(CliError::config(format!(
            "mining: unknown name {s:?} (random, hardest, ran, ranp)"
        ))),
    }
}

pub fn mining_label(mining: &Mining) -> &'static str {
    match mining {
        Mining::RandomNegative => "random",
        Mining::HardestNegative => "hardest",
        Mining::RelevanceAwareNegative { .. } => "ran",
        Mining::RelevanceAwarePositive { .. } => "ranp",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub corpus: CorpusSource,
    /// Base training setup. `seed` is replaced by each entry of `seeds`.
    pub train: TrainConfig,
    /// Augmentation chances swept by `sweep`.
    pub chi: Vec<f64>,
    pub variants: Vec<Variant>,
    pub mining: Vec<Mining>,
    /// Noise level of the `video-noise` variant.
    pub noise_sigma: f64,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    pub workers: usize,
    /// Present for explicitness; resuming is not supported.
    #[serde(default)]
    pub resume_from: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            corpus: CorpusSource::Generate {
                config: GenConfig::default(),
                test_samples: 500,
                seed: None,
            },
            train: TrainConfig::default(),
            chi: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            variants: vec![Variant::None, Variant::Joint],
            mining: vec![Mining::HardestNegative],
            noise_sigma: 0.1,
            seeds: vec![0],
            out: PathBuf::from("runs"),
            workers: 1,
            resume_from: None,
        }
    }
}

/// Command-line values that take precedence over the spec file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub chi: Option<Vec<f64>>,
    pub variants: Option<Vec<Variant>>,
    pub mining: Option<Vec<Mining>>,
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    /// Load `path`, or the defaults when absent, then apply overrides and
    /// validate.
    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut spec = match path {
            Some(p) => ExperimentSpec::load(p)?,
            None => ExperimentSpec::default(),
        };
        spec.apply(overrides);
        spec.validate()?;
        Ok(spec)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if !o.seeds.is_empty() {
            self.seeds = o.seeds.clone();
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(chi) = &o.chi {
            self.chi = chi.clone();
        }
        if let Some(v) = &o.variants {
            self.variants = v.clone();
        }
        if let Some(m) = &o.mining {
            self.mining = m.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.resume_from {
            return Err(CliError::config(format!(
                "resume_from: resuming from a checkpoint is not supported ({})",
                p.display()
            )));
        }
        if self.seeds.is_empty() {
            return Err(CliError::config("seeds: at least one seed is required"));
        }
        if self.chi.is_empty() {
            return Err(CliError::config("chi: at least one value is required"));
        }
        if let Some(c) = self.chi.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(CliError::config(format!("chi: values must lie in [0, 1], got {c}")));
        }
        if self.variants.is_empty() {
            return Err(CliError::config("variants: at least one variant is required"));
        }
        if self.mining.is_empty() {
            return Err(CliError::config("mining: at least one strategy is required"));
        }
        for m in &self.mining {
            m.validate().map_err(|e| CliError::from(e).context("mining"))?;
        }
        if self.workers == 0 {
            return Err(CliError::config("workers: must be positive"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(CliError::config("noise_sigma: must be finite and non-negative"));
        }
        if let CorpusSource::Generate { config, .. } = &self.corpus {
            config
                .validate()
                .map_err(|e| CliError::from(e).context("corpus.generate.config"))?;
        }
        self.train.validate().map_err(|e| CliError::from(e).context("train"))
    }

    /// Train and test corpora for run seed `seed`.
    pub fn corpora(&self, seed: u64) -> Result<(Corpus, Corpus)> {
        match &self.corpus {
            CorpusSource::Generate {
                config,
                test_samples,
                seed: fixed,
            } => {
                if *test_samples == 0 {
                    return Err(CliError::config("corpus.generate.test_samples: must be positive"));
                }
                Ok(generate_split(config, fixed.unwrap_or(seed), *test_samples)?)
            }
            CorpusSource::Dir(dir) => {
                let train = load_corpus(dir, Split::Train)?;
                let test = load_corpus(dir, Split::Test)?;
                if train.feature_dim() != test.feature_dim() || train.class_table() != test.class_table() {
                    return Err(CliError::config(format!(
                        "corpus: splits in {} disagree",
                        dir.display()
                    )));
                }
                Ok((train, test))
            }
        }
    }

    /// Point `train.augment` at a single setup for commands that do one
    /// run per seed. Takes at most one chi and one variant.
    pub fn narrow_augment(&mut self, o: &Overrides) -> Result<()> {
        if let Some(chi) = &o.chi {
            let [c] = chi.as_slice() else {
                return Err(CliError::config("chi: this command takes a single value"));
            };
            self.train.augment.chi = *c;
        }
        if let Some(v) = &o.variants {
            let [v] = v.as_slice() else {
                return Err(CliError::config("variant: this command takes a single variant"));
            };
            self.train.augment = v.augment(&self.train.augment, self.train.augment.chi, self.noise_sigma);
        }
        if let Some(m) = &o.mining {
            let [m] = m.as_slice() else {
                return Err(CliError::config("mining: this command takes a single strategy"));
            };
            self.train.mining = *m;
        }
        self.validate()
    }

    /// Training config of one run.
    pub fn run_config(&self, seed: u64, mining: Mining, augment: AugmentConfig) -> TrainConfig {
        TrainConfig {
            seed,
            mining,
            augment,
            ..self.train.clone()
        }
    }
}
