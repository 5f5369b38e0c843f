use std::fs;
use std::path::{Path, PathBuf};

use cmaug::augment::{Augmenter, MixRecord};
use cmaug::corpus::{save_corpus, Corpus};
use cmaug::metrics::MetricReport;
use cmaug::rng::augment_rng;
use cmaug::selection::CandidateIndex;
use cmaug::trainer::{self, evaluate_model, Checkpoint, Featurizer, Mining, TrainConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::spec::{mining_label, CorpusSource, ExperimentSpec, Variant};
use crate::{CliError, Result};

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, text)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let io_err = |e: csv::Error| CliError::io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io_err)?;
    for row in rows {
        w.serialize(row).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::config(format!("workers: {e}")))
}

/// The default spec as pretty JSON, with every field spelled out.
pub fn print_config() -> String {
    serde_json::to_string_pretty(&ExperimentSpec::default()).expect("serializable")
}

/// Write train and test corpora for every seed. One seed writes straight
/// into `out`; several seeds write into `out/seed-{N}`.
pub fn gen(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    if let CorpusSource::Dir(_) = spec.corpus {
        return Err(CliError::config("corpus: gen needs a generate source, not a directory"));
    }
    let mut dirs = Vec::with_capacity(spec.seeds.len());
    for &seed in &spec.seeds {
        let dir = if spec.seeds.len() == 1 {
            spec.out.clone()
        } else {
            spec.out.join(format!("seed-{seed}"))
        };
        let (train, test) = spec.corpora(seed)?;
        save_corpus(&train, &dir)?;
        save_corpus(&test, &dir)?;
        dirs.push(dir);
    }
    Ok(dirs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LogRow {
    seed: u64,
    epoch: usize,
    loss: f64,
}

pub fn checkpoint_path(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("checkpoint-seed{seed}.ckpt"))
}

/// Train one model per seed with `spec.train`; writes one checkpoint per
/// seed and `train_log.csv`.
pub fn train(spec: &ExperimentSpec) -> Result<Vec<PathBuf>> {
    create_dir(&spec.out)?;
    let runs: Vec<(u64, TrainConfig)> = spec
        .seeds
        .iter()
        .map(|&seed| {
            (
                seed,
                TrainConfig {
                    seed,
                    ..spec.train.clone()
                },
            )
        })
        .collect();
    let models = pool(spec.workers)?.install(|| {
        runs.par_iter()
            .map(|(seed, config)| {
                let (corpus, _) = spec.corpora(*seed)?;
                trainer::train(&corpus, config, None).map_err(|e| CliError::from(e).context(&format!("seed {seed}")))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut log = Vec::new();
    let mut paths = Vec::with_capacity(runs.len());
    for ((seed, config), model) in runs.iter().zip(models) {
        let path = checkpoint_path(&spec.out, *seed);
        Checkpoint::new(model.encoder, config).save(&path)?;
        paths.push(path);
        log.extend(model.log.iter().map(|e| LogRow {
            seed: *seed,
            epoch: e.epoch,
            loss: e.loss,
        }));
    }
    write_csv(&spec.out.join("train_log.csv"), &log)?;
    write_json(&spec.out.join("spec.json"), spec)?;
    Ok(paths)
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub report: MetricReport,
    pub path: PathBuf,
}

/// Evaluate a checkpoint on a test corpus: the test split of `corpus_dir`
/// when given, otherwise the spec's test corpus for the checkpoint's seed.
/// Writes `metrics.json` into `out`.
pub fn eval(checkpoint: &Path, corpus_dir: Option<&Path>, spec: &ExperimentSpec, out: &Path) -> Result<EvalOutcome> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let config = &ckpt.header.config;
    let test: Corpus = match corpus_dir {
        Some(dir) => cmaug::corpus::load_corpus(dir, cmaug::Split::Test)?,
        None => spec.corpora(config.seed)?.1,
    };
    if test.feature_dim() != ckpt.header.video_dim {
        return Err(CliError::config(format!(
            "corpus: feature dim {} does not match checkpoint video dim {}",
            test.feature_dim(),
            ckpt.header.video_dim
        )));
    }
    let featurizer = Featurizer::new(test.class_table(), test.feature_dim(), &config.featurizer, config.seed)?;
    if featurizer.text_dim() != ckpt.header.text_dim {
        return Err(CliError::config("featurizer: text dim does not match the checkpoint"));
    }
    let report = evaluate_model(&ckpt.encoder, &featurizer, &test, &config.eval)?;
    create_dir(out)?;
    let path = out.join("metrics.json");
    write_json(&path, &report)?;
    Ok(EvalOutcome { report, path })
}

/// Human-readable table of a report in percent with one decimal.
pub fn summary(report: &MetricReport) -> String {
    let mut s = format!(
        "{:<5}{:>7}{:>7}{:>7}{:>7}{:>7}\n",
        "", "nDCG", "mAP", "R@1", "R@5", "R@10"
    );
    for (name, d) in [("t2v", &report.t2v), ("v2t", &report.v2t), ("t-v", &report.t_v)] {
        s.push_str(&format!(
            "{name:<5}{:>7.1}{:>7.1}{:>7.1}{:>7.1}{:>7.1}\n",
            100.0 * d.ndcg,
            100.0 * d.map,
            100.0 * d.r1,
            100.0 * d.r5,
            100.0 * d.r10
        ));
    }
    s.push_str(&format!("Rsum {:.1}\n", report.rsum));
    s
}

/// One sweep result row. Metrics are in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub chi: f64,
    pub seed: u64,
    pub variant: Variant,
    pub mining: String,
    #[serde(rename = "nDCG_t2v")]
    pub ndcg_t2v: f64,
    #[serde(rename = "nDCG_v2t")]
    pub ndcg_v2t: f64,
    #[serde(rename = "nDCG_avg")]
    pub ndcg_avg: f64,
    #[serde(rename = "mAP_t2v")]
    pub map_t2v: f64,
    #[serde(rename = "mAP_v2t")]
    pub map_v2t: f64,
    #[serde(rename = "mAP_avg")]
    pub map_avg: f64,
    #[serde(rename = "Rsum")]
    pub rsum: f64,
}

/// Full result of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub chi: f64,
    pub seed: u64,
    pub variant: Variant,
    pub mining: Mining,
    pub report: MetricReport,
}

impl SweepCell {
    pub fn row(&self) -> SweepRow {
        let r = &self.report;
        SweepRow {
            chi: self.chi,
            seed: self.seed,
            variant: self.variant,
            mining: mining_label(&self.mining).to_owned(),
            ndcg_t2v: 100.0 * r.t2v.ndcg,
            ndcg_v2t: 100.0 * r.v2t.ndcg,
            ndcg_avg: 100.0 * r.t_v.ndcg,
            map_t2v: 100.0 * r.t2v.map,
            map_v2t: 100.0 * r.v2t.map,
            map_avg: 100.0 * r.t_v.map,
            rsum: r.rsum,
        }
    }
}

/// Train and evaluate every (chi, variant, mining, seed) cell; writes
/// `sweep.csv` and `sweep.json` in grid order.
pub fn sweep(spec: &ExperimentSpec) -> Result<Vec<SweepCell>> {
    create_dir(&spec.out)?;
    let corpora: Vec<(Corpus, Corpus)> = spec.seeds.iter().map(|&s| spec.corpora(s)).collect::<Result<_>>()?;
    let mut grid = Vec::new();
    for &chi in &spec.chi {
        for &variant in &spec.variants {
            for &mining in &spec.mining {
                for k in 0..spec.seeds.len() {
                    grid.push((chi, variant, mining, k));
                }
            }
        }
    }
    let cells = pool(spec.workers)?.install(|| {
        grid.par_iter()
            .map(|&(chi, variant, mining, k)| {
                let seed = spec.seeds[k];
                let augment = variant.augment(&spec.train.augment, chi, spec.noise_sigma);
                let config = spec.run_config(seed, mining, augment);
                let (train, test) = &corpora[k];
                let context = || {
                    format!(
                        "cell chi={chi} variant={variant} mining={} seed={seed}",
                        mining_label(&mining)
                    )
                };
                let model = trainer::train(train, &config, None).map_err(|e| CliError::from(e).context(&context()))?;
                let report = model
                    .evaluate(test, &config.eval)
                    .map_err(|e| CliError::from(e).context(&context()))?;
                Ok(SweepCell {
                    chi,
                    seed,
                    variant,
                    mining,
                    report,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let rows: Vec<SweepRow> = cells.iter().map(SweepCell::row).collect();
    write_csv(&spec.out.join("sweep.csv"), &rows)?;
    write_json(&spec.out.join("sweep.json"), &cells)?;
    write_json(&spec.out.join("spec.json"), spec)?;
    Ok(cells)
}

/// One audited augmentation call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpRecord {
    pub seed: u64,
    pub call: u64,
    pub sample: u32,
    pub was_augmented: bool,
    pub record: Option<MixRecord>,
}

/// Run `count` augmentation calls per seed over the training corpus with
/// `spec.train.augment`, cycling through the samples, and write their mix
/// records to `augment_dump.jsonl`.
pub fn augment_dump(spec: &ExperimentSpec, count: u64) -> Result<(PathBuf, Vec<DumpRecord>)> {
    create_dir(&spec.out)?;
    let config = &spec.train.augment;
    let mut records = Vec::new();
    for &seed in &spec.seeds {
        let (corpus, _) = spec.corpora(seed)?;
        if corpus.is_empty() {
            return Err(CliError::config("corpus: training split is empty"));
        }
        let featurizer = Featurizer::new(corpus.class_table(), corpus.feature_dim(), &spec.train.featurizer, seed)?;
        let index = CandidateIndex::build(&corpus, config.criterion);
        let augmenter = Augmenter::new(&corpus, &index, &featurizer, config)?;
        let n = corpus.len() as u64;
        records.par_extend((0..count).into_par_iter().map(|call| {
            let sample = (call % n) as u32;
            let pair = augmenter.augment(sample, &mut augment_rng(seed, 0, call));
            DumpRecord {
                seed,
                call,
                sample,
                was_augmented: pair.was_augmented,
                record: pair.mix_record,
            }
        }));
    }
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(r).expect("serializable"));
        text.push('\n');
    }
    let path = spec.out.join("augment_dump.jsonl");
    write_file(&path, text)?;
    Ok((path, records))
}
