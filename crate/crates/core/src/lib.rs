//! Simulation and data reduction for photon-recoil measurements of h/m with
//! Bloch oscillations in a Ramsey-Bordé atom interferometer, and the chain
//! from h/m to the fine-structure constant, h/m_u, N_A·h and the electron
//! anomaly.
//!
//! The pipeline, in order:
//!
//! - [`sim`]: synthetic fringe spectra for each of the four sign configurations
//! - [`fit`]: central-fringe fits with covariance-based uncertainties
//! - [`reduction`]: four-spectrum reduction to h/m with gravity and level-shift cancellation
//! - [`systematics`]: effective wave-vector of a Gaussian beam and the error budget
//! - [`constants`]: α, h/m_u, N_A·h, a_e and cross-lab comparisons
//! - [`stats`]: weighted mean, χ² and autocorrelation of a series of determinations

pub mod config;
pub mod constants;
pub mod error;
pub mod fit;
pub mod fringe;
pub mod io;
pub mod montecarlo;
pub mod quantity;
pub mod reduction;
pub mod registry;
pub mod sim;
pub mod stats;
pub mod systematics;

pub use config::{InterferometerConfig, WorldTruth};
pub use error::{Error, Result};
pub use fit::{fit_central_fringe, initial_guess, FringeFit};
pub use quantity::{Quantity, Unit};
pub use reduction::{reduce_set, HOverMResult, SpectrumSet};
pub use registry::ConstantsRegistry;
pub use sim::{simulate_spectrum, true_center, Spectrum};
