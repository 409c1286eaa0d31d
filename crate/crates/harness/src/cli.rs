//! Command-line interface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use tmplfuzz_core::engine::ExecOptions;
use tmplfuzz_core::runtime::DEFAULT_BUDGET;

#[derive(Debug, Parser)]
#[command(name = "tmplfuzz", version, about = "Format-aware fuzzing with binary templates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct TemplateArgs {
    /// Bundled template name (mini, pnglite) or path to a template file.
    #[arg(long, short = 't')]
    pub template: String,
    /// Byte budget for generated and parsed files.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub max_size: usize,
    /// Disable evil decisions.
    #[arg(long)]
    pub no_evil: bool,
}

impl TemplateArgs {
    pub fn exec_options(&self) -> ExecOptions {
        ExecOptions {
            budget: self.max_size,
            evil: !self.no_evil,
            ..ExecOptions::default()
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate files from random decisions or from a seed file.
    Generate {
        #[command(flatten)]
        t: TemplateArgs,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// Generate one file from this seed instead of random decisions.
        #[arg(long)]
        seed: Option<PathBuf>,
        /// Output directory (or output file with --seed; stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse files and write their seeds and parse trees.
    Parse {
        #[command(flatten)]
        t: TemplateArgs,
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Directory for .seed and .tree.json files (default: next to each input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regenerate the file for a seed and optionally run a target on it.
    Replay {
        #[command(flatten)]
        t: TemplateArgs,
        #[arg(long)]
        seed: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value_t = 1000)]
        timeout_ms: u64,
    },
    /// Apply random smart mutations to a corpus.
    Mutate {
        #[command(flatten)]
        t: TemplateArgs,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 10)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        #[arg(long, default_value = "mutations")]
        out: PathBuf,
    },
    /// Feed generated or mutated inputs to a target and keep crashes.
    Fuzz {
        #[command(flatten)]
        t: TemplateArgs,
        /// Target command; `{}` is replaced by an input path, otherwise stdin is used.
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 1000)]
        count: u64,
        /// Stop after this many seconds even if --count is not reached.
        #[arg(long)]
        duration_secs: Option<u64>,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        #[arg(long, default_value_t = 1000)]
        timeout_ms: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Seed corpus for smart mutations.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value = "fuzz-out")]
        out: PathBuf,
        /// Stop at the first crash or timeout.
        #[arg(long)]
        stop_on_crash: bool,
    },
    /// Check parse/regenerate round trips on a corpus and on random seeds.
    Roundtrip {
        #[command(flatten)]
        t: TemplateArgs,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
    },
    /// Measure which input declarations random generation reaches.
    Coverage {
        #[command(flatten)]
        t: TemplateArgs,
        #[arg(long, default_value_t = 1000)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check files with the independent oracle of a bundled template.
    Verify {
        #[command(flatten)]
        t: TemplateArgs,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}
