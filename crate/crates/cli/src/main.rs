use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;

/// Reed-Muller code lab: decoding, boosting, reconstruction, spectra and bounds.
#[derive(Debug, Parser)]
#[command(name = "rmboost", version)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Record wall-clock time in CSV output (otherwise wall_ms is 0).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DecoderArg {
    Exit,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FloorArg {
    One,
    Unique,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a polynomial given by its monomial masks; prints the codeword in hex.
    Encode {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        r: u32,
        /// Comma-separated monomial masks (bit j-1 set means x_j appears).
        #[arg(long, value_delimiter = ',', default_values_t = Vec::<u64>::new())]
        monomials: Vec<u64>,
    },
    /// Send a hex word through a channel.
    Transmit {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        word: String,
        #[arg(long)]
        channel: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Bit error of the exit (or full) MAP decoder at 0^m, one CSV row per channel.
    ExitError {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        r: u32,
        /// Channel spec such as bsc:0.1; repeat the flag for a sweep.
        #[arg(long, required = true)]
        channel: Vec<String>,
        #[arg(long, value_enum, default_value_t = Mode::Mc)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = DecoderArg::Exit)]
        decoder: DecoderArg,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Paired Monte Carlo of sunflower boosting against a single petal.
    Boost {
        #[arg(long)]
        m_under: u32,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        m_over: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        eps: f64,
        /// Petal count (default: every petal of the construction).
        #[arg(long)]
        petals: Option<usize>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Build a sunflower and print kernel and petal bases as hex rows.
    Sunflower {
        #[arg(long)]
        m_under: u32,
        #[arg(long)]
        m: u32,
        #[arg(long)]
        m_over: u32,
    },
    /// List-decoding reconstruction of random codewords; one JSON record per trial.
    Reconstruct {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, value_enum, default_value_t = FloorArg::One)]
        floor: FloorArg,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Grid-boosted reconstruction; one JSON record per trial.
    GridReconstruct {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 1.0)]
        c_prime: f64,
        #[arg(long, default_value_t = 1.0)]
        final_scale: f64,
        #[arg(long, value_enum, default_value_t = FloorArg::One)]
        floor: FloorArg,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Biased Fourier coefficients of Q as CSV.
    Fourier {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        r: u32,
        /// Kernel dimension; defaults to m.
        #[arg(long)]
        m_under: Option<u32>,
        #[arg(long)]
        eps: f64,
    },
    /// Evaluate one closed-form bound.
    Bounds {
        #[arg(long)]
        name: String,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        d: Option<u64>,
        #[arg(long)]
        p_e: Option<f64>,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        gap: Option<u32>,
        #[arg(long)]
        m: Option<u32>,
        #[arg(long)]
        r: Option<u32>,
        #[arg(long)]
        l: Option<u32>,
        #[arg(long)]
        rate_gap: Option<f64>,
    },
    /// Exit and full-observation accuracy for a code above capacity.
    Converse {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        channel: String,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the invariant suite; with --out also write a small exit-error sweep CSV.
    Verify,
}

/// Failures mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    Lib(rmboost::Error),
    Io(std::io::Error),
    Checks(usize),
}

impl From<rmboost::Error> for CliError {
    fn from(e: rmboost::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Checks(_) => 1,
            CliError::Lib(rmboost::Error::Parameter(_)) => 2,
            CliError::Lib(rmboost::Error::Feasibility { .. }) => 3,
            CliError::Lib(rmboost::Error::Io(_)) | CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
            CliError::Checks(n) => write!(f, "{n} check(s) failed"),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(rmboost::Error::Parameter("--threads must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| rmboost::Error::Parameter(e.to_string()))?;
    }
    let guards = rmboost::Guards::from_env()?;
    let ctx = commands::Context {
        guards,
        timing: cli.timing,
        to_file: cli.out.is_some(),
    };
    let (text, status) = commands::dispatch(&cli.command, &ctx);
    match &cli.out {
        Some(path) => std::fs::write(path, &text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    status
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rmboost: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
