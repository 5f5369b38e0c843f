#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use cmaug::corpus::GenConfig;
use cmaug_cli::{CorpusSource, ExperimentSpec};

/// A spec small enough to train in well under a second.
pub fn tiny_spec(out: &Path) -> ExperimentSpec {
    let mut spec = ExperimentSpec {
        corpus: CorpusSource::Generate {
            config: GenConfig {
                samples: 120,
                verb_classes: 4,
                noun_classes: 6,
                feature_dim: 16,
                ..GenConfig::default()
            },
            test_samples: 40,
            seed: None,
        },
        out: out.to_path_buf(),
        ..ExperimentSpec::default()
    };
    spec.train.epochs = 3;
    spec.train.batch_size = 16;
    spec.train.featurizer.text_dim = 32;
    spec
}

pub fn write_spec(spec: &ExperimentSpec, path: &Path) {
    std::fs::write(path, serde_json::to_string_pretty(spec).unwrap()).unwrap();
}

pub fn cmaug(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmaug")).args(args).output().unwrap()
}

pub fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
