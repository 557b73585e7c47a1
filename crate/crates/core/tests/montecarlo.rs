use recoil_core::fit::{fit_central_fringe, initial_guess};
use recoil_core::montecarlo::{determination_coverage, fit_coverage, mean_center_sigma};
use recoil_core::sim::{derive_seed, simulate_spectrum, true_center};
use recoil_core::{InterferometerConfig, WorldTruth};

#[test]
fn initial_guess_within_half_fringe() {
    let cfg = InterferometerConfig::default_config();
    let half = 0.5 * cfg.fringe_period();
    let mut inside = 0;
    for i in 0..500 {
        let c = &cfg.four_spectrum_set()[i % 4];
        let w = WorldTruth { rng_seed: derive_seed(77, i as u64), ..WorldTruth::default_world() };
        let s = simulate_spectrum(&w, c, c.scan_span_hz).unwrap();
        if (initial_guess(&s).unwrap() - true_center(&w, c).unwrap()).abs() < half {
            inside += 1;
        }
    }
    assert!(inside >= 495, "{inside}/500");
}

#[test]
fn calibrated_noise_gives_table_uncertainty() {
    let cfg = InterferometerConfig::default_config();
    let sigma = mean_center_sigma(&WorldTruth::default_world(), &cfg, 21, 400).unwrap();
    assert!((0.13..=0.16).contains(&sigma), "{sigma}");
}

#[test]
fn fit_sigma_scales_with_noise() {
    let cfg = InterferometerConfig::default_config();
    let base = WorldTruth::default_world();
    let s1 = mean_center_sigma(&base, &cfg, 31, 300).unwrap();
    let s2 = mean_center_sigma(&WorldTruth { noise_amplitude: 2.0 * base.noise_amplitude, ..base }, &cfg, 31, 300).unwrap();
    assert!((s2 / s1 / 2.0 - 1.0).abs() < 0.05, "{}", s2 / s1);
}

#[test]
fn fit_coverage_ratio() {
    let cfg = InterferometerConfig::default_config();
    for c in cfg.four_spectrum_set() {
        let cov = fit_coverage(&WorldTruth::default_world(), &c, 41, 1000).unwrap();
        assert_eq!(cov.n_failed, 0);
        assert!((0.8..=1.2).contains(&cov.ratio()), "{}", cov.ratio());
    }
}

#[test]
fn determination_coverage_is_nominal() {
    // 100 runs: the one-sigma fraction is binomial around 68.3 % with a 4.7 % spread
    let (runs, s) = determination_coverage(&WorldTruth::default_world(), &InterferometerConfig::default_config(), 1, 100);
    println!("within one sigma: {:.2} (ratio {:.3})", s.within_one_sigma, s.ratio());
    assert_eq!(runs.len(), 100);
    assert_eq!(s.n_failed, 0);
    assert!(s.within_one_sigma >= 0.683 - 2.58 * 0.0465, "{}", s.within_one_sigma);
    assert!((0.8..=1.2).contains(&s.ratio()));
}

#[test]
fn wrong_guess_does_not_pull_fit() {
    let cfg = InterferometerConfig::default_config();
    let w = WorldTruth::default_world();
    let s = simulate_spectrum(&w, &cfg, cfg.scan_span_hz).unwrap();
    let truth = true_center(&w, &cfg).unwrap();
    let free = fit_central_fringe(&s, None).unwrap();
    let pulled = fit_central_fringe(&s, Some(truth + 2.0 * cfg.fringe_period())).unwrap();
    assert!((free.center.value - truth).abs() < 1.0);
    assert!((pulled.center.value - free.center.value).abs() < 1e-6);
}
