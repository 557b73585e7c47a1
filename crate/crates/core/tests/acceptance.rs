//! Acceptance checks. Each test prints one PASS/FAIL line before asserting.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use recoil_core::constants::{alpha_from_h_over_m, compare_a_e, h_over_mu_from_alpha, DeterminationsFile, QedSeries};
use recoil_core::fit::fit_central_fringe;
use recoil_core::fringe::FringeModel;
use recoil_core::montecarlo::{determination_runs, fit_coverage, mean_center_sigma};
use recoil_core::quantity::Quantity;
use recoil_core::reduction::{reduce_set, SetEntry, SpectrumSet};
use recoil_core::sim::{derive_seed, simulate_spectrum, Spectrum, SpectrumPoint};
use recoil_core::stats::series_stats;
use recoil_core::systematics::{apply_budget, k_effective, BeamGeometry, ErrorBudget};
use recoil_core::{ConstantsRegistry, FringeFit, InterferometerConfig, WorldTruth};

// Written to the raw stdout handle so the line shows even when output is captured.
fn report(id: u32, name: &str, ok: bool, detail: &str, elapsed: Duration) {
    let _ = writeln!(
        std::io::stdout(),
        "criterion {id} [{name}]: {} ({detail}; {:.2} s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
}

const TABLE1: [(f64, f64); 4] = [
    (15567824.42, 0.15),
    (-15567822.07, 0.16),
    (-14612062.24, 0.13),
    (14612067.77, 0.16),
];

fn table1_set() -> SpectrumSet {
    let cfg = InterferometerConfig::default_config();
    let entries = cfg
        .four_spectrum_set()
        .into_iter()
        .zip(TABLE1)
        .map(|(c, (center, sigma))| SetEntry { fit: FringeFit::from_center(center, sigma, &c), config: c })
        .collect();
    SpectrumSet::new("table-1", "", entries).unwrap()
}

#[test]
fn criterion_1_budget_arithmetic() {
    let t0 = Instant::now();
    let s = ErrorBudget::default_budget().summary().unwrap();
    let total_ok = (s.total - 6.61).abs() < 0.005 && format!("{:.1}", s.total) == "6.6";
    let sum_ok = (s.correction_sum - (-26.4)).abs() < 1e-9 && format!("{:.1}", s.correction_sum) == "-26.4";
    let elapsed = t0.elapsed();
    let ok = total_ok && sum_ok && elapsed < Duration::from_secs(1);
    report(1, "budget arithmetic", ok, &format!("total {:.3} -> {:.1}, corrections {:.1}", s.total, s.total, s.correction_sum), elapsed);
    assert!(ok);
}

#[test]
fn criterion_2_constants_round_trip() {
    let t0 = Instant::now();
    let reg = ConstantsRegistry::default_registry();
    let one = Quantity::dimensionless(1.0, 0.0);
    let mut worst: f64 = 0.0;
    for d in DeterminationsFile::default_file().determinations {
        let h = h_over_mu_from_alpha(&d.alpha_inv, &reg).unwrap();
        let a = alpha_from_h_over_m(&d.h_over_mu, &one, &reg).unwrap();
        let r1 = (h.value / d.h_over_mu.value - 1.0).abs();
        let r2 = (a.value / d.alpha_inv.value - 1.0).abs();
        println!("  {:<9} alpha->h/m_u {r1:.2e}   h/m_u->alpha {r2:.2e}", d.label);
        worst = worst.max(r1).max(r2);
    }
    let elapsed = t0.elapsed();
    let ok = worst < 1e-10 && elapsed < Duration::from_secs(1);
    report(2, "constants round trip", ok, &format!("worst relative mismatch {worst:.2e}"), elapsed);
    assert!(ok);
}

#[test]
fn criterion_3_result_reproduction() {
    let t0 = Instant::now();
    let set = table1_set();
    let h = reduce_set(&set).unwrap().h_over_m;
    let rel = (h.value / 4.59141e-9 - 1.0).abs();

    let reg = ConstantsRegistry::default_registry();
    let raw = alpha_from_h_over_m(&h, &reg.ar_rb, &reg).unwrap();
    let budget = ErrorBudget::default_budget();
    let corrected = apply_budget(&raw, &budget).unwrap();
    let rel_sigma = corrected.relative_sigma() / 1e-10;
    let sigma_ok = format!("{rel_sigma:.1}") == "6.6";
    let alpha_ok = (corrected.value / 137.036 - 1.0).abs() < 0.01;
    let elapsed = t0.elapsed();
    let ok = rel < 0.01 && sigma_ok && alpha_ok;
    report(
        3,
        "result reproduction",
        ok,
        &format!("h/m = {:.6e} ({:.2e} from target), 1/alpha = {:.6}, sigma {rel_sigma:.2}e-10", h.value, rel, corrected.value),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_4_qed_comparison() {
    let t0 = Instant::now();
    let alpha_inv = Quantity::dimensionless(137.035999044, 0.000000090);
    let c = compare_a_e(&alpha_inv, &QedSeries::default_series()).unwrap();
    let d = c.difference * 1e12;
    let s = c.sigma * 1e12;
    let ok = (d - (-1.09)).abs() <= 0.10 && (s - 0.83).abs() <= 0.05;
    report(
        4,
        "QED comparison",
        ok,
        &format!("a_e(Exp) - a_e(Theory) = {d:.3}({s:.3})e-12, alpha-only sigma {:.3}e-12", c.sigma_alpha_only * 1e12),
        t0.elapsed(),
    );
    assert!(ok);
}

fn random_world(rng: &mut ChaCha8Rng) -> WorldTruth {
    WorldTruth {
        h_over_m_true: 4.59e-9 * rng.random_range(0.9..1.1),
        g: rng.random_range(0.0..20.0),
        bias_direction_independent: rng.random_range(-40.0..40.0),
        bias_sel_meas_asymmetry: rng.random_range(-5.0..5.0),
        noise_amplitude: 0.0,
        rng_seed: rng.random(),
    }
}

fn reduce_world(world: &WorldTruth, cfg: &InterferometerConfig) -> f64 {
    let entries = cfg
        .four_spectrum_set()
        .into_iter()
        .enumerate()
        .map(|(j, c)| {
            let w = WorldTruth { rng_seed: derive_seed(world.rng_seed, j as u64), ..world.clone() };
            let fit = fit_central_fringe(&simulate_spectrum(&w, &c, c.scan_span_hz).unwrap(), None).unwrap();
            SetEntry { config: c, fit }
        })
        .collect();
    reduce_set(&SpectrumSet::new("w", "", entries).unwrap()).unwrap().h_over_m.value
}

fn shifted(s: &Spectrum, delta: f64) -> Spectrum {
    let points = s.points.iter().map(|p| SpectrumPoint { delta_hz: p.delta_hz + delta, ratio: p.ratio }).collect();
    Spectrum { points, ..s.clone() }
}

#[test]
fn criterion_5_cancellation_properties() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = InterferometerConfig::default_config();
    let period = cfg.fringe_period();

    let mut worst_g: f64 = 0.0;
    let mut worst_b: f64 = 0.0;
    for _ in 0..100 {
        let w = random_world(&mut rng);
        let base = reduce_world(&w, &cfg);
        let g2 = WorldTruth { g: w.g + rng.random_range(-5.0..5.0), ..w.clone() };
        let b2 = WorldTruth {
            bias_direction_independent: w.bias_direction_independent + rng.random_range(-period..period),
            ..w.clone()
        };
        worst_g = worst_g.max((reduce_world(&g2, &cfg) / base - 1.0).abs());
        worst_b = worst_b.max((reduce_world(&b2, &cfg) / base - 1.0).abs());
    }

    // translation equivariance on spectra with centers of order 10³ Hz
    let mut worst_shift: f64 = 0.0;
    let small = InterferometerConfig { n_bloch: 0, ..cfg.clone() };
    for i in 0..100 {
        let w = WorldTruth {
            bias_direction_independent: rng.random_range(-2000.0..2000.0),
            noise_amplitude: if i % 2 == 0 { 0.0 } else { 0.0138 },
            rng_seed: rng.random(),
            ..WorldTruth::default_world()
        };
        let s = simulate_spectrum(&w, &small, small.scan_span_hz).unwrap();
        let delta = rng.random_range(-500.0..500.0);
        let f0 = fit_central_fringe(&s, None).unwrap().center.value;
        let f1 = fit_central_fringe(&shifted(&s, delta), None).unwrap().center.value;
        worst_shift = worst_shift.max((f1 - f0 - delta).abs());
    }

    // quantity round trips
    let reg = ConstantsRegistry::default_registry();
    let one = Quantity::dimensionless(1.0, 0.0);
    let mut worst_q: f64 = 0.0;
    for _ in 0..1000 {
        let a = Quantity::dimensionless(rng.random_range(1.0..1000.0), rng.random_range(0.0..1e-3));
        let b = Quantity::dimensionless(rng.random_range(1.0..1000.0), rng.random_range(0.0..1e-3));
        let back = a.mul(&b).unwrap().div(&b).unwrap();
        worst_q = worst_q.max((back.value / a.value - 1.0).abs());
        let alpha_inv = Quantity::dimensionless(rng.random_range(100.0..200.0), 0.0);
        let h = h_over_mu_from_alpha(&alpha_inv, &reg).unwrap();
        let again = alpha_from_h_over_m(&h, &one, &reg).unwrap();
        worst_q = worst_q.max((again.value / alpha_inv.value - 1.0).abs());
    }

    let elapsed = t0.elapsed();
    let ok = worst_g < 1e-12 && worst_b < 1e-12 && worst_shift < 1e-9 && worst_q < 1e-12 && elapsed < Duration::from_secs(60);
    report(
        5,
        "cancellation properties",
        ok,
        &format!("g {worst_g:.1e}, bias {worst_b:.1e}, shift {worst_shift:.1e} Hz, round trip {worst_q:.1e}"),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn criterion_6_statistical_suite() {
    let t0 = Instant::now();
    let world = WorldTruth::default_world();
    let cfg = InterferometerConfig::default_config();

    let n_seeds = 20;
    let max_lag = 20;
    let mut chi2_in = 0;
    let mut lags_in = 0usize;
    let mut lags_total = 0usize;
    for seed in 0..n_seeds {
        let runs = determination_runs(&world, &cfg, 1000 + seed, 170);
        assert!(runs.iter().all(|r| r.error.is_none()));
        let values: Vec<Quantity> = runs.iter().map(|r| Quantity::with_unit(r.value, r.sigma, "m^2 s^-1")).collect();
        let st = series_stats(&values, max_lag).unwrap();
        if (0.7..=1.3).contains(&st.chi2_per_dof) {
            chi2_in += 1;
        }
        for p in st.acf.unwrap().iter().filter(|p| p.lag > 0) {
            lags_total += 1;
            if p.value.abs() <= st.sigma_bands.1 {
                lags_in += 1;
            }
        }
    }
    let chi2_frac = chi2_in as f64 / n_seeds as f64;
    let lag_frac = lags_in as f64 / lags_total as f64;
    // 99.9% binomial band around the nominal 95% rate
    let half = 3.29 * (0.95 * 0.05 / lags_total as f64).sqrt();
    let acf_ok = (lag_frac - 0.95).abs() <= half;

    let cov = fit_coverage(&world, &cfg, 6, 1000).unwrap();
    let sigma = mean_center_sigma(&world, &cfg, 7, 200).unwrap();

    let elapsed = t0.elapsed();
    let ok = chi2_frac >= 0.95
        && acf_ok
        && cov.n_failed == 0
        && (0.8..=1.2).contains(&cov.ratio())
        && (sigma / 0.14 - 1.0).abs() <= 0.3
        && elapsed < Duration::from_secs(300);
    report(
        6,
        "statistical suite",
        ok,
        &format!(
            "chi2 in band for {:.0}% of seeds, acf lags in band {:.1}% (expected 95 ± {:.1}), coverage ratio {:.3}, mean center sigma {sigma:.3} Hz",
            100.0 * chi2_frac,
            100.0 * lag_frac,
            100.0 * half,
            cov.ratio()
        ),
        elapsed,
    );
    assert!(ok);
}

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

/// k − (2/k)·[1/w² − r²/w⁴ + k²r²/(4R²)] in exact rational arithmetic.
fn k_eff_exact(k: f64, w: f64, r: f64, big_r: Option<f64>) -> f64 {
    let (k, w, r) = (rat(k), rat(w), rat(r));
    let two = BigRational::from_integer(BigInt::from(2));
    let four = BigRational::from_integer(BigInt::from(4));
    let w2 = &w * &w;
    let r2 = &r * &r;
    let mut bracket = w2.recip() - &r2 / (&w2 * &w2);
    if let Some(big_r) = big_r {
        let big_r = rat(big_r);
        bracket += &k * &k * &r2 / (four * &big_r * &big_r);
    }
    let out = &k - two / &k * bracket;
    assert!(!out.is_zero());
    out.to_f64().unwrap()
}

#[test]
fn criterion_7_k_effective() {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for i in 0..10 {
        for j in 0..10 {
            for l in 0..10 {
                let k = 2.0 * PI / (770e-9 + 2e-9 * i as f64);
                let w = 1e-5 * 2.5f64.powi(j);
                let r = 0.3 * w * l as f64 / 9.0;
                let big_r = match (i + j + l) % 3 {
                    0 => None,
                    1 => Some(5.0 * 3f64.powi(l as i32)),
                    _ => Some(-20.0 * 2f64.powi(j as i32)),
                };
                let geom = BeamGeometry { k, waist: w, cloud_radius: r, curvature_radius: big_r };
                let got = k_effective(&geom).unwrap();
                let want = k_eff_exact(k, w, r, big_r);
                worst = worst.max((got / want - 1.0).abs());
                count += 1;
            }
        }
    }
    let plane = [7.9e6, 8.052877645726879e6, 8.2e6].iter().all(|&k| {
        k_effective(&BeamGeometry { k, waist: f64::INFINITY, cloud_radius: 1e-3, curvature_radius: None }).unwrap() == k
    });
    let elapsed = t0.elapsed();
    let ok = count == 1000 && worst <= 1e-14 && plane;
    report(7, "k_eff correctness", ok, &format!("{count} points, worst relative {worst:.1e}, plane-wave exact: {plane}"), elapsed);
    assert!(ok);
}

#[test]
fn fringe_model_is_shared() {
    // the simulator and the fitter evaluate the same closed form
    let cfg = InterferometerConfig::default_config();
    let m = FringeModel::from_config(&cfg);
    assert_eq!(m.at_offset(0.0), 0.5 * (1.0 - cfg.contrast));
}
