mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

/// Degree dynamics, Green potentials, equilibrium measures and ergodic
/// diagnostics for rational maps of projective space.
///
/// Exit codes: 0 success, 2 usage or input error, 3 a requested check
/// failed, 4 numerical failure.
#[derive(Parser, Debug)]
#[command(name = "greenlab", version)]
pub struct Cli {
    /// Root seed of every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Working precision in bits; 53 is native double.
    #[arg(long, global = true, env = "GREENLAB_PRECISION", default_value_t = 53)]
    pub precision: u32,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Directory for output files and manifest.json.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the built-in maps or print one as JSON.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Exact degrees of the iterates, optionally with a Monte-Carlo λ_q.
    Degrees {
        /// Catalog label (`henon:c=-6,delta=1/2`) or path to a map JSON file.
        map: String,
        #[arg(long = "N", default_value_t = 6)]
        n: usize,
        /// Exit with code 3 unless deg f^n = d^n for every tested n.
        #[arg(long)]
        require_stable: bool,
        /// Also estimate λ_q(f) by Monte Carlo.
        #[arg(long)]
        q: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Green-potential partial sums G_N at sample points.
    Green {
        map: String,
        #[arg(long = "N", default_value_t = 40)]
        n: usize,
        /// Number of FS-uniform points.
        #[arg(long, default_value_t = 100)]
        points: usize,
        /// Use a 10 x 10 real affine grid on [-R, R]^2 instead (P^2 only).
        #[arg(long, value_name = "R")]
        grid: Option<f64>,
    },
    /// Hypothesis series and the (H) check.
    Hypothesis {
        map: String,
        #[arg(long, value_enum, default_value = "h")]
        kind: HypothesisKind,
        /// Number of series terms.
        #[arg(long = "N", default_value_t = 10)]
        n: usize,
        /// Levels n of μ_n for the (H) check.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
        n_list: Vec<usize>,
        /// Samples per level (H) or per term (weak series).
        #[arg(long = "M", default_value_t = 1000)]
        m: usize,
        #[arg(long, default_value_t = 1)]
        l: usize,
        /// Exit with code 3 unless the verdict is a pass.
        #[arg(long)]
        require_pass: bool,
    },
    /// Sample ν_n or μ_n and integrate observables.
    Measure {
        map: String,
        #[arg(long, value_enum, default_value = "mu")]
        which: Which,
        #[arg(long, default_value_t = 1)]
        l: usize,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long = "M", default_value_t = 1000)]
        m: usize,
        #[arg(long, value_enum, default_value = "auto")]
        method: Method,
        /// Observable expression or builtin name; repeatable.
        #[arg(long = "observable", default_values = ["one", "log_alg_dist"])]
        observables: Vec<String>,
        /// Also write the cloud as CSV.
        #[arg(long)]
        dump: bool,
    },
    /// Lyapunov exponents along μ-typical orbits.
    Lyapunov {
        map: String,
        #[arg(long, default_value_t = 200)]
        orbits: usize,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        qr_period: usize,
        /// Level of the μ_n cloud when the map has no symbolic coding.
        #[arg(long, default_value_t = 4)]
        n: usize,
    },
    /// Dynamical-ball entropy estimate.
    Entropy {
        map: String,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long = "M", default_value_t = 100_000)]
        m: usize,
        #[arg(long, default_value_t = 200)]
        probes: usize,
        #[arg(long = "C0", default_value_t = 10.0)]
        c0: f64,
        /// |lim I_n|; estimated with a short (H) check when omitted.
        #[arg(long = "L")]
        big_l: Option<f64>,
        /// Radius constant K; calibrated when omitted.
        #[arg(long = "K")]
        k_const: Option<f64>,
        /// Radius exponent p; calibrated when omitted.
        #[arg(long)]
        p: Option<f64>,
        /// Block length of the dynamical balls.
        #[arg(long, default_value_t = 1)]
        block: usize,
    },
    /// Correlations C_n of two observables under the dynamics.
    Mixing {
        map: String,
        #[arg(long, default_value = "cos_arg")]
        phi: String,
        #[arg(long, default_value = "cos_arg")]
        psi: String,
        #[arg(long = "N", default_value_t = 10)]
        n: usize,
        #[arg(long = "M", default_value_t = 100_000)]
        m: usize,
    },
    /// Build f_B0 = B0 ∘ f and verify the contraction certificate.
    Contract {
        map: String,
        /// Contraction factor, a rational such as 1/1000.
        #[arg(long, default_value = "1/1000")]
        lambda: String,
        #[arg(long, default_value_t = 1)]
        s: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 20)]
        orbit: usize,
        /// Conjugate by the built-in P^3 coordinate change first.
        #[arg(long)]
        p3_coordinates: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum CatalogAction {
    List,
    Show { label: String },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum HypothesisKind {
    Strong,
    Weak,
    H,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Which {
    Nu,
    Mu,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Method {
    Auto,
    Importance,
    Crofton,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let start = Instant::now();
    match commands::run(&cli, start) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
