use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cmaug_cli::{CliError, ExperimentSpec, Overrides, Variant};

#[derive(Parser)]
#[command(name = "cmaug", version, about = "Cross-modal feature augmentation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus (train and test splits).
    Gen(Common),
    /// Train one model per seed.
    Train(Common),
    /// Evaluate a checkpoint on a test corpus.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Corpus directory; defaults to the spec's test corpus.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Train and evaluate every chi x variant x mining x seed cell.
    Sweep(Common),
    /// Record the mix decisions of augmentation calls as JSON lines.
    AugmentDump {
        #[command(flatten)]
        common: Common,
        /// Number of calls per seed.
        #[arg(long, default_value_t = 1000)]
        count: u64,
    },
    /// Print the default experiment spec.
    PrintConfig,
}

#[derive(Args)]
struct Common {
    /// Experiment spec (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run seed; repeat for several.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated augmentation chances.
    #[arg(long, value_delimiter = ',')]
    chi: Option<Vec<f64>>,
    /// Comma-separated variants.
    #[arg(long = "variant", value_delimiter = ',')]
    variants: Option<Vec<String>>,
    /// Comma-separated mining strategies: random, hardest, ran, ranp.
    #[arg(long, value_delimiter = ',')]
    mining: Option<Vec<String>>,
}

impl Common {
    fn overrides(&self) -> Result<Overrides, CliError> {
        Ok(Overrides {
            seeds: self.seeds.clone(),
            out: self.out.clone(),
            workers: self.workers,
            chi: self.chi.clone(),
            variants: self
                .variants
                .as_ref()
                .map(|v| v.iter().map(|s| s.parse::<Variant>()).collect())
                .transpose()?,
            mining: self
                .mining
                .as_ref()
                .map(|v| v.iter().map(|s| cmaug_cli::parse_mining(s)).collect())
                .transpose()?,
        })
    }

    fn spec(&self) -> Result<ExperimentSpec, CliError> {
        ExperimentSpec::resolve(self.config.as_deref(), &self.overrides()?)
    }

    fn single_run_spec(&self) -> Result<ExperimentSpec, CliError> {
        let mut spec = self.spec()?;
        spec.narrow_augment(&self.overrides()?)?;
        Ok(spec)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen(c) => {
            for dir in cmaug_cli::gen(&c.spec()?)? {
                println!("wrote {}", dir.display());
            }
        }
        Command::Train(c) => {
            for path in cmaug_cli::train(&c.single_run_spec()?)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Eval {
            common,
            checkpoint,
            corpus,
        } => {
            let spec = common.spec()?;
            let out = match &common.out {
                Some(out) => out.clone(),
                None => checkpoint.parent().map(PathBuf::from).unwrap_or_default(),
            };
            let outcome = cmaug_cli::eval(&checkpoint, corpus.as_deref(), &spec, &out)?;
            print!("{}", cmaug_cli::summary(&outcome.report));
            println!("wrote {}", outcome.path.display());
        }
        Command::Sweep(c) => {
            let spec = c.spec()?;
            let cells = cmaug_cli::sweep(&spec)?;
            println!("wrote {} rows to {}", cells.len(), spec.out.join("sweep.csv").display());
        }
        Command::AugmentDump { common, count } => {
            let (path, records) = cmaug_cli::augment_dump(&common.single_run_spec()?, count)?;
            let augmented = records.iter().filter(|r| r.was_augmented).count();
            println!(
                "wrote {} records ({augmented} augmented) to {}",
                records.len(),
                path.display()
            );
        }
        Command::PrintConfig => println!("{}", cmaug_cli::print_config()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
