//! Prints the noise amplitude that gives a 0.14 Hz mean center uncertainty.

use recoil_core::montecarlo::{calibrate_noise, fit_coverage, mean_center_sigma};
use recoil_core::{InterferometerConfig, WorldTruth};

fn main() {
    let world = WorldTruth::default_world();
    let config = InterferometerConfig::default_config();
    let amp = calibrate_noise(&world, &config, 0.14, 1, 1000).expect("calibration");
    let w = WorldTruth { noise_amplitude: amp, ..world };
    let sigma = mean_center_sigma(&w, &config, 2, 1000).expect("check");
    let cov = fit_coverage(&w, &config, 3, 1000).expect("coverage");
    println!("noise_amplitude = {amp:.6}");
    println!("mean sigma      = {sigma:.4} Hz");
    println!("coverage ratio  = {:.3} (within 1σ: {:.3}, failed {})", cov.ratio(), cov.within_one_sigma, cov.n_failed);
}
