mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use kusuoka::Backend;

/// Exit codes.
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;
pub const EXIT_USAGE: u8 = 64;
pub const EXIT_CONFIG: u8 = 65;

#[derive(Parser, Debug)]
#[command(
    name = "kusuoka",
    version,
    about = "Kusuoka measures from matrix restriction systems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Built-in system: sg, sg2..sg6, or bernoulli:p1,p2,...
    #[arg(long, conflicts_with = "input")]
    pub builtin: Option<String>,
    /// System definition file (JSON).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub backend: Option<Backend>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest number of words any single level may enumerate.
    #[arg(long = "budget-k")]
    pub budget_k: Option<u64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check both fixed-point equations and the energy form.
    Validate(WithCommon),
    /// Spectral radius of M off the identity.
    Theta1 {
        #[command(flatten)]
        common: Common,
        /// Also report Schatten-p contraction constants (comma-separated; `inf` allowed).
        #[arg(long, value_delimiter = ',')]
        p: Vec<String>,
    },
    /// Irreducibility constant c_k.
    Ck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    Theta2 {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        kmax: usize,
    },
    /// Measures of all cylinders of a given length.
    Measure {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Approximants ν([x]_n)/ν([Tx]_{n-1}) of the g-function.
    Gfun {
        #[command(flatten)]
        common: Common,
        /// A single prefix; without it every prefix of length --depth is listed.
        #[arg(long)]
        word: Option<String>,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        length: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Correlation gaps ν(α ∩ T^{-(n+|α|)}β) − ν(α)ν(β) against d·θ₁^n.
    Correlate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        beta: String,
        #[arg(long, default_value_t = 12)]
        nmax: usize,
    },
    MixingBound {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 12)]
        nmax: usize,
    },
    /// Restriction system of the generalized gasket SG_n.
    Gasket {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
    },
    /// Compare Q∘𝓛^k∘Φ with L^k on a cylinder function.
    Dilation {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Cylinder function file {"depth": k, "values": {word: value}}.
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        level: Option<usize>,
    },
    /// Decay of the martingale parts of QG for random graded G.
    Qdecay {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 6)]
        jmax: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Every computed constant for one system as a single JSON document.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2)]
        kmax: usize,
        #[arg(long, default_value_t = 12)]
        nmax: usize,
    },
    /// Turn raw restriction maps into a valid system.
    Renormalize(WithCommon),
}

#[derive(Args, Debug)]
pub struct WithCommon {
    #[command(flatten)]
    pub common: Common,
}

fn init_threads() {
    if let Some(n) = std::env::var("KUSUOKA_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        if n > 0 {
            // a second initialization only happens in tests; ignore it
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
                | ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand => EXIT_USAGE,
                _ => EXIT_CONFIG,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_threads();
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
