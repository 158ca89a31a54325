use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use gaffect::ensemble::FullImageMode;
use gaffect::error::Category;
use gaffect::io::{load_bundle, load_manifest, save_bundle, Config, Manifest, Split};
use gaffect::pipeline::{
    check_dims, evaluate_records, fit_weights, load_records, predict_records, predictions_csv,
    train_ensemble,
};
use gaffect::synth::{self, SynthConfig};
use gaffect::{Aggregation, EnsembleModel, Error, EvalReport, Result};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_MODEL: u8 = 3;

/// Group-level emotion recognition: face forests fused with a whole-image score.
#[derive(Parser)]
#[command(name = "gaffect", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the synthetic fixture (train.toml, validation.toml and their files).
    Synth {
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Use the heavy-tailed per-face noise preset.
        #[arg(long)]
        heavy_tail: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Train the five face forests on a train manifest and write a bundle.
    Train {
        #[command(flatten)]
        io: ManifestBundle,
        #[command(flatten)]
        common: Common,
    },
    /// Estimate ensemble weights on a validation manifest and store them in the bundle.
    Weights {
        #[command(flatten)]
        io: ManifestBundle,
        #[command(flatten)]
        common: Common,
    },
    /// Write fused scores and labels as CSV.
    Predict {
        #[command(flatten)]
        io: ManifestBundle,
        /// CSV destination (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Predict and score against gold labels; writes report.json and report.txt.
    Eval {
        #[command(flatten)]
        io: ManifestBundle,
        /// Report directory (defaults to the bundle directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the table for a saved report.json.
    Report {
        /// Path to report.json.
        report: PathBuf,
    },
}

#[derive(Args)]
struct ManifestBundle {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    bundle: PathBuf,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Treat missing referenced files as errors.
    #[arg(long)]
    strict: bool,
    #[arg(long, value_parser = parse_mode)]
    fullimage_mode: Option<FullImageMode>,
    #[arg(long, value_parser = parse_aggregation)]
    aggregate: Option<Aggregation>,
}

fn parse_mode(s: &str) -> std::result::Result<FullImageMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_aggregation(s: &str) -> std::result::Result<Aggregation, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Common {
    fn config(&self) -> Result<Config> {
        let mut config = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(agg) = self.aggregate {
            config.aggregation = agg;
        }
        if let Some(mode) = self.fullimage_mode {
            config.fullimage_mode = mode;
        }
        Ok(config)
    }

    /// Flags given on the command line win over what the bundle recorded.
    fn apply(&self, model: &mut EnsembleModel) {
        if let Some(agg) = self.aggregate {
            model.aggregation = agg;
        }
        if let Some(mode) = self.fullimage_mode {
            model.fullimage_mode = mode;
        }
    }

    fn manifest(&self, path: &Path, expect: &[Split]) -> Result<Manifest> {
        let manifest = load_manifest(path, self.strict)?;
        if !expect.contains(&manifest.split) {
            warn!("{} is a {} manifest", path.display(), manifest.split);
        }
        Ok(manifest)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Synth { out, heavy_tail, common } => {
            let config = common.config()?;
            let mut cfg = if heavy_tail {
                SynthConfig::heavy_tailed()
            } else {
                config.synth.clone()
            };
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            let written = synth::generate(&cfg, &out)?;
            println!("{}", written.train_manifest.display());
            println!("{}", written.validation_manifest.display());
        }
        Command::Train { io, common } => {
            let config = common.config()?;
            let manifest = common.manifest(&io.manifest, &[Split::Train])?;
            let records = load_records(&manifest, common.strict)?;
            info!("{} training images", records.len());
            let bundle = train_ensemble(&records, &config)?;
            save_bundle(&io.bundle, &bundle)?;
            println!("bundle written to {}", io.bundle.display());
        }
        Command::Weights { io, common } => {
            let mut bundle = load_bundle(&io.bundle)?;
            common.apply(&mut bundle.model);
            let manifest = common.manifest(&io.manifest, &[Split::Validation])?;
            check_dims(&bundle.model, &manifest)?;
            let records = load_records(&manifest, common.strict)?;
            fit_weights(&mut bundle, &records)?;
            save_bundle(&io.bundle, &bundle)?;
            for slot in bundle.model.slots() {
                println!("{:<16} {:.4}", slot.id.tag(), slot.weight);
            }
        }
        Command::Predict { io, out, common } => {
            let mut bundle = load_bundle(&io.bundle)?;
            common.apply(&mut bundle.model);
            let manifest = common.manifest(&io.manifest, &[Split::Train, Split::Validation, Split::Test])?;
            check_dims(&bundle.model, &manifest)?;
            let records = load_records(&manifest, common.strict)?;
            let csv = predictions_csv(&predict_records(&bundle.model, &records)?);
            match out {
                Some(path) => write_file(&path, &csv)?,
                None => {
                    let _ = std::io::stdout().write_all(csv.as_bytes());
                }
            }
        }
        Command::Eval { io, out, common } => {
            let mut bundle = load_bundle(&io.bundle)?;
            common.apply(&mut bundle.model);
            let manifest = common.manifest(&io.manifest, &[Split::Validation, Split::Train])?;
            check_dims(&bundle.model, &manifest)?;
            let records = load_records(&manifest, common.strict)?;
            let report = evaluate_records(&bundle.model, &records)?;
            let dir = out.unwrap_or(io.bundle);
            fs::create_dir_all(&dir).map_err(|source| Error::Io {
                path: dir.clone(),
                source,
            })?;
            let table = report.to_table();
            write_file(&dir.join("report.json"), &report.to_json())?;
            write_file(&dir.join("report.txt"), &table)?;
            print!("{table}");
        }
        Command::Report { report } => {
            let text = fs::read_to_string(&report).map_err(|source| Error::Io {
                path: report.clone(),
                source,
            })?;
            print!("{}", EvalReport::from_json(&text)?.to_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = match e.category() {
                Category::Data => (EXIT_DATA, "data error"),
                Category::Model => (EXIT_MODEL, "model error"),
            };
            eprintln!("gaffect: {kind}: {e}");
            ExitCode::from(code)
        }
    }
}
