//! `recoil`: simulate, fit and reduce photon-recoil spectra, then carry h/m
//! through the constants chain.
//!
//! Exit codes:
//!
//! | code | stage |
//! |------|-------|
//! | 0 | success |
//! | 2 | command-line usage |
//! | 3 | input files (config, world, registry, budget, QED, manifests) |
//! | 4 | writing outputs |
//! | 5 | simulate |
//! | 6 | fit |
//! | 7 | reduce |
//! | 8 | budget |
//! | 9 | constants (α, h/m_u, N_A·h, a_e, comparisons) |
//! | 10 | series statistics |
//! | 11 | Monte-Carlo |

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::StageError;

#[derive(Parser, Debug)]
#[command(name = "recoil", version, about = "Photon-recoil h/m simulation and reduction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Output directory; a manifest.json is written into it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct ConstantsArgs {
    /// Constants registry JSON (default: bundled CODATA 2010 values).
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// Rb mass entry to use: bradley1999, mount2010 or mean.
    #[arg(long, default_value = "mean")]
    pub rb_mass: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate the four spectra of one determination.
    Simulate {
        /// Interferometer config JSON (default: bundled).
        #[arg(long)]
        config: Option<PathBuf>,
        /// World truth JSON (default: bundled).
        #[arg(long)]
        world: Option<PathBuf>,
        /// Master seed (default: the world file's rng_seed).
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Fit the central fringe of one spectrum.
    Fit {
        /// Spectrum CSV with columns delta_hz,ratio.
        #[arg(long)]
        spectrum: PathBuf,
        /// JSON sidecar with the spectrum's config (default: the CSV path with .json).
        #[arg(long)]
        sidecar: Option<PathBuf>,
        /// Starting center in Hz instead of the envelope-based guess.
        #[arg(long)]
        initial_guess: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Reduce a four-spectrum set to h/m.
    Reduce {
        /// Set manifest JSON listing spectra or centers.
        #[arg(long)]
        set: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print the error budget and optionally apply it to an uncorrected 1/α.
    Budget {
        /// Error budget JSON (default: bundled).
        #[arg(long)]
        budget: Option<PathBuf>,
        #[arg(long)]
        alpha_inv: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// 1/α, h/m_u and N_A·h from a value of h/m_Rb.
    Alpha {
        /// h/m_Rb in m² s⁻¹.
        #[arg(long)]
        h_over_m: f64,
        #[arg(long, default_value_t = 0.0)]
        h_over_m_sigma: f64,
        #[command(flatten)]
        constants: ConstantsArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the theoretical electron anomaly with experiment.
    Ae {
        #[arg(long)]
        alpha_inv: f64,
        #[arg(long, default_value_t = 0.0)]
        alpha_inv_sigma: f64,
        /// QED coefficient JSON (default: bundled).
        #[arg(long)]
        qed: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Pairwise comparison of determinations of 1/α and h/m_u.
    Compare {
        /// Determinations JSON (default: bundled published values).
        #[arg(long)]
        determinations: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Weighted mean, χ² and autocorrelation of a series.
    Acf {
        /// CSV with columns value,sigma.
        #[arg(long)]
        series: PathBuf,
        #[arg(long, default_value_t = 20)]
        max_lag: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Reduce a set and run the full constants chain.
    Pipeline {
        /// Set manifest JSON.
        #[arg(long)]
        set: PathBuf,
        /// Error budget JSON (default: bundled).
        #[arg(long)]
        budget: Option<PathBuf>,
        /// Report the statistical uncertainty only.
        #[arg(long)]
        no_budget: bool,
        /// QED coefficient JSON (default: bundled).
        #[arg(long)]
        qed: Option<PathBuf>,
        /// Determinations to compare against (default: bundled).
        #[arg(long)]
        determinations: Option<PathBuf>,
        #[command(flatten)]
        constants: ConstantsArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Repeat simulated determinations and summarise coverage and statistics.
    Montecarlo {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        world: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 100)]
        runs: u64,
        #[arg(long, default_value_t = 20)]
        max_lag: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    match commands::run(cli.command, &args[1..]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(StageError { stage, source }) => {
            eprintln!("error [{}]: {source}", stage.name());
            ExitCode::from(stage.code())
        }
    }
}
