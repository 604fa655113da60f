//! Command-line entry point wiring the modules into reproducible
//! experiments: `preprocess`, `train`, `translate`, `evaluate`.
//!
//! Every command reads an optional `key = value` config file; command-line
//! flags override file values. All randomness flows from one `seed` key.

mod commands;
mod config;

pub use commands::{
    cmd_evaluate, cmd_preprocess, cmd_train, cmd_translate, read_document_lines,
    write_document_lines,
};
pub use config::RunConfig;

use crate::Result;
use clap::{Args, Parser, Subcommand};
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "nmt-isg",
    about = "Document-context neural machine translation with an inter-sentence gate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build vocabularies and the (before-x, x, y) tuple store from a
    /// parallel document corpus.
    Preprocess(Common),
    /// Train a model with minibatch Adadelta.
    Train(TrainArgs),
    /// Translate a document-structured source file with beam search.
    Translate(TranslateArgs),
    /// Score translations: BLEU, coherence, attention entropy.
    Evaluate(Common),
}

#[derive(Args)]
struct Common {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root random seed recorded into every artifact.
    #[arg(long)]
    seed: Option<u64>,
    /// Model variant: baseline or isg.
    #[arg(long)]
    mode: Option<String>,
    /// Beam width.
    #[arg(long)]
    width: Option<usize>,
    /// Ablation: null, zgate0, or rv.
    #[arg(long)]
    ablate: Option<String>,
    /// Extra `key=value` overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Warm-start checkpoint; a baseline checkpoint under `--mode isg`
    /// runs the pretraining hand-off.
    #[arg(long)]
    init_from: Option<PathBuf>,
}

#[derive(Args)]
struct TranslateArgs {
    #[command(flatten)]
    common: Common,
    /// Feed `before_x ‖ x` to a baseline model instead of gating.
    #[arg(long)]
    concat_baseline: bool,
}

impl Common {
    fn into_config(self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        for pair in &self.set {
            let (k, v) = pair.split_once('=').ok_or_else(|| {
                crate::Error::Config(format!("--set {pair:?}: expected KEY=VALUE"))
            })?;
            config.set(k.trim(), v.trim());
        }
        if let Some(seed) = self.seed {
            config.set("seed", &seed.to_string());
        }
        if let Some(mode) = &self.mode {
            config.set("mode", mode);
        }
        if let Some(width) = self.width {
            config.set("width", &width.to_string());
        }
        if let Some(ablate) = &self.ablate {
            config.set("ablate", ablate);
        }
        Ok(config)
    }
}

/// Parses arguments and runs one command. The first element of `args` is
/// the program name, as in `std::env::args`.
pub fn run_args<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| crate::Error::Config(e.to_string()))?;
    match cli.command {
        Command::Preprocess(common) => cmd_preprocess(&common.into_config()?),
        Command::Train(args) => {
            let mut config = args.common.into_config()?;
            if let Some(p) = &args.init_from {
                config.set("init_from", &p.display().to_string());
            }
            cmd_train(&config)
        }
        Command::Translate(args) => {
            let mut config = args.common.into_config()?;
            if args.concat_baseline {
                config.set("concat_baseline", "true");
            }
            cmd_translate(&config)
        }
        Command::Evaluate(common) => cmd_evaluate(&common.into_config()?),
    }
}

/// Binary entry point; returns the process exit code.
pub fn main() -> i32 {
    match run_args(std::env::args_os()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
