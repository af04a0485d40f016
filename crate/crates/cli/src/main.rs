mod alpha;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] mathieu_core::Error),

    #[error("{0}")]
    Io(String),

    /// A check that cannot fail on a correct build did fail.
    #[error("invariant failure: {0}")]
    Invariant(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use mathieu_core::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Core(E::InvalidInput(_) | E::NonFinite(_)) => 2,
            CliError::Core(_) | CliError::Invariant(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "mathieu", version, about = "Spectral experiments for the almost Mathieu operator")]
pub struct Cli {
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct OutArgs {
    /// Output path, `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,

    /// Manifest path. Defaults to `<out>.manifest.json`, or standard error
    /// when writing to standard output.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct OperatorArgs {
    #[arg(long)]
    pub lambda: f64,
    /// Decimal, `p/q`, `golden`, `silver`, `liouville:B:D` or `rapid:B:D`.
    #[arg(long)]
    pub alpha: String,
    #[arg(long, default_value_t = 0.0)]
    pub omega: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Arithmetic class of a frequency over a finite range.
    #[command(allow_negative_numbers = true)]
    Classify {
        #[arg(long)]
        alpha: String,
        /// Scan `1 <= n <= N`.
        #[arg(long, default_value_t = 1000)]
        n: u64,
        #[arg(long, default_value_t = 0.1)]
        c: f64,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// Convergents tested for `liouville:` and `rapid:` expressions.
        #[arg(long, default_value_t = 8)]
        k_max: usize,
        /// Partial quotients expanded before the scan; a float whose
        /// expansion ends within this depth is reported rational.
        #[arg(long, default_value_t = 20)]
        depth: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Renormalized `n`-step transfer matrix.
    #[command(allow_negative_numbers = true)]
    Transfer {
        #[command(flatten)]
        op: OperatorArgs,
        #[arg(long)]
        energy: f64,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Phase-averaged Lyapunov exponent over an energy grid (CSV).
    #[command(allow_negative_numbers = true)]
    Lyapunov {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        alpha: String,
        /// `a:b:n`, n points from a to b inclusive.
        #[arg(long, allow_hyphen_values = true)]
        energy_grid: String,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        /// Phase grid size.
        #[arg(long, default_value_t = 256)]
        grid: usize,
        /// Product length for the subharmonic margin.
        #[arg(long, default_value_t = 100)]
        herman_steps: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Bands and gaps of a rational frequency.
    #[command(allow_negative_numbers = true)]
    Bands {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        q: u64,
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        #[arg(long)]
        csv: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Bands for every `p/q` with `q <= qmax` (CSV).
    #[command(allow_negative_numbers = true)]
    Butterfly {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        qmax: u64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Integrated density of states by eigenvalue counting (CSV).
    #[command(allow_negative_numbers = true)]
    Ids {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        alpha: String,
        /// Box size.
        #[arg(long)]
        n: usize,
        /// `a:b:m`, m energies from a to b inclusive.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value_t = 0.0, conflicts_with = "phase_grid")]
        omega: f64,
        /// Average over this many phases instead of a single `--omega`.
        #[arg(long)]
        phase_grid: Option<usize>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Eigenpairs of a finite box with exponential decay fits.
    #[command(allow_negative_numbers = true)]
    Localize {
        #[command(flatten)]
        op: OperatorArgs,
        /// Box size; sites `-n/2 ..` .
        #[arg(long)]
        n: usize,
        /// `a:b`, energies in `[a, b)`.
        #[arg(long, allow_hyphen_values = true)]
        window: String,
        /// Include eigenvectors in the report.
        #[arg(long)]
        vectors: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Gordon's three-block inequality on random periodic potentials, or the
    /// AMO potential's repetition defects.
    #[command(allow_negative_numbers = true)]
    GordonCheck {
        #[arg(long, value_enum, default_value_t = GordonMode::Inequality)]
        mode: GordonMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 20)]
        p_max: usize,
        #[arg(long, required_if_eq("mode", "potential"))]
        lambda: Option<f64>,
        #[arg(long, required_if_eq("mode", "potential"))]
        alpha: Option<String>,
        #[arg(long, default_value_t = 0.0)]
        omega: f64,
        /// Comma-separated periods; defaults to the convergent denominators.
        #[arg(long, value_delimiter = ',')]
        q: Vec<u64>,
        #[arg(long, default_value_t = 10.0)]
        c: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Reflection defects of the potential about centers `m`.
    #[command(allow_negative_numbers = true)]
    JsCheck {
        #[command(flatten)]
        op: OperatorArgs,
        /// Comma-separated centers.
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<i64>,
        #[arg(long, default_value_t = 50)]
        n: u64,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Dual solutions and reducing conjugations from localized eigenvectors.
    #[command(allow_negative_numbers = true)]
    Duality {
        #[command(flatten)]
        op: OperatorArgs,
        /// Box size for the eigenvectors, which are taken at phase 0.
        #[arg(long, default_value_t = 201)]
        n: usize,
        /// Keep eigenvectors peaked within this distance of the origin.
        #[arg(long, default_value_t = 2)]
        radius: i64,
        /// ... and carrying their weight within this distance.
        #[arg(long, default_value_t = 40)]
        spread: i64,
        /// Dual sites `|n| <= dual_n` checked.
        #[arg(long, default_value_t = 50)]
        dual_n: i64,
        /// Compare dual energies with approximant band edges.
        #[arg(long)]
        probe_gap: bool,
        /// Hausdorff tolerance of the approximant spectrum.
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the acceptance checks.
    #[command(allow_negative_numbers = true)]
    Verify {
        #[arg(long, value_enum, default_value_t = ProfileArg::Quick)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 20240607)]
        seed: u64,
        /// Comma-separated check ids; all by default.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<u8>,
        /// Fault injected to exercise the harness.
        #[arg(long, value_enum, default_value_t = MutationArg::None)]
        mutation: MutationArg,
        /// Treat statistical misses as failures.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum GordonMode {
    Inequality,
    Potential,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProfileArg {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MutationArg {
    None,
    TransferSign,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
