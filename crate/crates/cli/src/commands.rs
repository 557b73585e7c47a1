use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use recoil_core::config::{InterferometerConfig, WorldTruth};
use recoil_core::constants::{
    alpha_from_h_over_m, compare_a_e, compare_determinations, na_h, AeComparison, ComparisonReport, Determination,
    DeterminationsFile, QedSeries,
};
use recoil_core::fit::fit_central_fringe_with;
use recoil_core::fringe::FringeModel;
use recoil_core::io::{self, RunManifest};
use recoil_core::montecarlo::determination_coverage;
use recoil_core::quantity::{concise, Quantity};
use recoil_core::reduction::{cancellation_report, reduce_set, ManifestEntry, SetEntry, SetManifest, SpectrumSet};
use recoil_core::registry::{ConstantsRegistry, RbMass};
use recoil_core::sim::{derive_seed, simulate_spectrum, Spectrum};
use recoil_core::stats::series_stats;
use recoil_core::systematics::{apply_budget, ErrorBudget, BUDGET_UNIT};
use recoil_core::{Error, FringeFit};

use crate::{Command, ConstantsArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Input,
    Output,
    Simulate,
    Fit,
    Reduce,
    Budget,
    Constants,
    Stats,
    MonteCarlo,
}

impl Stage {
    pub fn code(self) -> u8 {
        match self {
            Stage::Input => 3,
            Stage::Output => 4,
            Stage::Simulate => 5,
            Stage::Fit => 6,
            Stage::Reduce => 7,
            Stage::Budget => 8,
            Stage::Constants => 9,
            Stage::Stats => 10,
            Stage::MonteCarlo => 11,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Input => "input",
            Stage::Output => "output",
            Stage::Simulate => "simulate",
            Stage::Fit => "fit",
            Stage::Reduce => "reduce",
            Stage::Budget => "budget",
            Stage::Constants => "constants",
            Stage::Stats => "stats",
            Stage::MonteCarlo => "montecarlo",
        }
    }
}

#[derive(Debug)]
pub struct StageError {
    pub stage: Stage,
    pub source: Error,
}

type CliResult<T> = std::result::Result<T, StageError>;

trait Tag<T> {
    fn at(self, stage: Stage) -> CliResult<T>;
}

impl<T> Tag<T> for recoil_core::Result<T> {
    fn at(self, stage: Stage) -> CliResult<T> {
        self.map_err(|source| StageError { stage, source })
    }
}

fn fail(stage: Stage, msg: String) -> StageError {
    StageError { stage, source: Error::InvalidConfig(msg) }
}

/// Collects outputs of one command and writes the manifest last.
struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path) -> Self {
        Output { dir: dir.to_path_buf(), files: Vec::new() }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(PathBuf::from(name));
        self.dir.join(name)
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let p = self.path(name);
        io::write_json(&p, value).at(Stage::Output)
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> CliResult<()> {
        let p = self.path(name);
        io::write_csv(&p, rows).at(Stage::Output)
    }

    fn text(&mut self, name: &str, text: &str) -> CliResult<()> {
        let p = self.path(name);
        io::write_text(&p, text).at(Stage::Output)
    }

    fn finish(self, command: &str, args: &[String], config_paths: Vec<PathBuf>, seed: Option<u64>) -> CliResult<()> {
        RunManifest {
            command: command.into(),
            args: args.to_vec(),
            config_paths,
            seed,
            output_dir: self.dir,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs: self.files,
        }
        .write()
        .map(|_| ())
        .at(Stage::Output)
    }
}

fn load_config(path: &Option<PathBuf>) -> CliResult<InterferometerConfig> {
    let cfg = match path {
        Some(p) => io::read_json(p).at(Stage::Input)?,
        None => InterferometerConfig::default_config(),
    };
    cfg.validate().at(Stage::Input)?;
    Ok(cfg)
}

fn load_world(path: &Option<PathBuf>) -> CliResult<WorldTruth> {
    let w = match path {
        Some(p) => io::read_json(p).at(Stage::Input)?,
        None => WorldTruth::default_world(),
    };
    w.validate().at(Stage::Input)?;
    Ok(w)
}

fn load_registry(args: &ConstantsArgs) -> CliResult<ConstantsRegistry> {
    let choice: RbMass = args.rb_mass.parse().at(Stage::Input)?;
    match &args.registry {
        Some(p) => ConstantsRegistry::load(p, choice).at(Stage::Input),
        None => ConstantsRegistry::from_json_str(recoil_core::registry::DEFAULT_REGISTRY_JSON, choice).at(Stage::Input),
    }
}

fn load_budget(path: &Option<PathBuf>) -> CliResult<ErrorBudget> {
    let b = match path {
        Some(p) => ErrorBudget::load(p).at(Stage::Input)?,
        None => ErrorBudget::default_budget(),
    };
    b.validate().at(Stage::Input)?;
    Ok(b)
}

fn load_qed(path: &Option<PathBuf>) -> CliResult<QedSeries> {
    match path {
        Some(p) => QedSeries::load(p).at(Stage::Input),
        None => Ok(QedSeries::default_series()),
    }
}

fn load_determinations(path: &Option<PathBuf>) -> CliResult<DeterminationsFile> {
    match path {
        Some(p) => DeterminationsFile::load(p).at(Stage::Input),
        None => Ok(DeterminationsFile::default_file()),
    }
}

fn given(paths: &[&Option<PathBuf>]) -> Vec<PathBuf> {
    paths.iter().filter_map(|p| (*p).clone()).collect()
}

fn spectrum_name(cfg: &InterferometerConfig) -> String {
    let s = |v: i64| if v > 0 { 'p' } else { 'm' };
    format!("spectrum_n{}_r{}", s(cfg.sign_n() as i64), s(cfg.raman_direction as i64))
}

/// Errors reading files are input errors; everything else belongs to the fit.
fn input_or(stage: Stage) -> impl Fn(Error) -> StageError {
    move |source| {
        let stage = match source {
            Error::Io { .. } | Error::Json { .. } | Error::Csv { .. } | Error::InvalidSpectrum(_) | Error::InvalidConfig(_) => {
                Stage::Input
            }
            _ => stage,
        };
        StageError { stage, source }
    }
}

#[derive(Serialize)]
struct CurveRow {
    delta_hz: f64,
    data: f64,
    model: f64,
}

fn fit_curve(s: &Spectrum, fit: &FringeFit) -> Vec<CurveRow> {
    let m = FringeModel {
        t_ramsey: s.config.t_ramsey,
        envelope_tau: fit.envelope_tau,
        contrast: fit.contrast,
        level: fit.offset,
    };
    s.points
        .iter()
        .map(|p| CurveRow { delta_hz: p.delta_hz, data: p.ratio, model: m.at_offset(p.delta_hz - fit.center.value) })
        .collect()
}

/// Reads each manifest entry, fitting spectra where given.
fn resolve_set(path: &Path) -> CliResult<(SpectrumSet, Vec<Option<Spectrum>>)> {
    let manifest = SetManifest::load(path).at(Stage::Input)?;
    let mut entries = Vec::new();
    let mut spectra = Vec::new();
    for e in &manifest.entries {
        match e {
            ManifestEntry::Spectrum { spectrum_csv, sidecar } => {
                let s = Spectrum::read(&io::resolve(path, spectrum_csv), &io::resolve(path, sidecar)).at(Stage::Input)?;
                let fit = fit_central_fringe_with(&s, None, &Default::default()).map_err(input_or(Stage::Fit))?;
                entries.push(SetEntry { config: s.config.clone(), fit });
                spectra.push(Some(s));
            }
            ManifestEntry::Center { config, center_hz, sigma_hz } => {
                entries.push(SetEntry { config: config.clone(), fit: FringeFit::from_center(*center_hz, *sigma_hz, config) });
                spectra.push(None);
            }
        }
    }
    let set = SpectrumSet::new(manifest.label, manifest.timestamp, entries).at(Stage::Reduce)?;
    Ok((set, spectra))
}

fn reduce_outputs(out: &mut Output, set: &SpectrumSet, spectra: &[Option<Spectrum>]) -> CliResult<Quantity> {
    let fits: Vec<&SetEntry> = set.entries.iter().collect();
    out.json("fits.json", &fits)?;
    for (e, s) in set.entries.iter().zip(spectra) {
        if let Some(s) = s {
            out.csv(&format!("curve_{}.csv", spectrum_name(&e.config)), &fit_curve(s, &e.fit))?;
        }
    }
    let res = reduce_set(set).at(Stage::Reduce)?;
    let cancel = cancellation_report(set).at(Stage::Reduce)?;
    out.json("h_over_m.json", &serde_json::json!({
        "label": set.label,
        "h_over_m": res.h_over_m,
        "hbar_over_m": res.hbar_over_m,
    }))?;
    out.json("cancellation.json", &cancel)?;
    Ok(res.h_over_m)
}

#[derive(Deserialize)]
struct SeriesRow {
    value: f64,
    sigma: f64,
}

#[derive(Serialize)]
struct AcfRow {
    lag: usize,
    acf: f64,
    one_sigma: f64,
    two_sigma: f64,
}

fn acf_rows(st: &recoil_core::stats::SeriesStats) -> Vec<AcfRow> {
    st.acf
        .iter()
        .flatten()
        .map(|p| AcfRow { lag: p.lag, acf: p.value, one_sigma: st.sigma_bands.0, two_sigma: st.sigma_bands.1 })
        .collect()
}

fn comparison_outputs(out: &mut Output, rep: &ComparisonReport) -> CliResult<()> {
    out.json("comparison.json", rep)?;
    out.csv("pairs.csv", &rep.pairs)?;
    out.csv("ladder.csv", &rep.rows)
}

#[derive(Serialize)]
struct PipelineRecord {
    label: String,
    h_over_m: Quantity,
    alpha_inv_raw: Quantity,
    alpha_inv: Quantity,
    alpha_inv_concise: String,
    relative_uncertainty_1e10: f64,
    budget_applied: bool,
    h_over_mu: Quantity,
    na_h: Quantity,
    a_e: AeComparison,
    registry: String,
    rb_mass: RbMass,
}

pub fn run(command: Command, args: &[String]) -> CliResult<()> {
    match command {
        Command::Simulate { config, world, seed, common } => {
            let cfg = load_config(&config)?;
            let w = load_world(&world)?;
            let master = seed.unwrap_or(w.rng_seed);
            let mut out = Output::new(&common.out);
            let mut entries = Vec::new();
            for (j, c) in cfg.four_spectrum_set().into_iter().enumerate() {
                let wj = WorldTruth { rng_seed: derive_seed(master, j as u64), ..w.clone() };
                let s = simulate_spectrum(&wj, &c, c.scan_span_hz).at(Stage::Simulate)?;
                let name = spectrum_name(&c);
                let (csv, side) = (format!("{name}.csv"), format!("{name}.json"));
                let (pc, ps) = (out.path(&csv), out.path(&side));
                s.write(&pc, &ps).at(Stage::Output)?;
                entries.push(ManifestEntry::Spectrum { spectrum_csv: csv.into(), sidecar: side.into() });
            }
            let set = SetManifest { label: format!("simulated-seed-{master}"), timestamp: String::new(), entries };
            out.json("set.json", &set)?;
            out.finish("simulate", args, given(&[&config, &world]), Some(master))
        }

        Command::Fit { spectrum, sidecar, initial_guess, common } => {
            let side = sidecar.clone().unwrap_or_else(|| spectrum.with_extension("json"));
            let s = Spectrum::read(&spectrum, &side).at(Stage::Input)?;
            let fit = fit_central_fringe_with(&s, initial_guess, &Default::default()).map_err(input_or(Stage::Fit))?;
            let mut out = Output::new(&common.out);
            out.json("fit.json", &fit)?;
            out.csv("curve.csv", &fit_curve(&s, &fit))?;
            out.finish("fit", args, vec![spectrum, side], None)?;
            println!("center = {} Hz (converged: {})", concise(fit.center.value, fit.center.sigma, 2), fit.converged);
            if !fit.converged {
                return Err(StageError { stage: Stage::Fit, source: Error::UnconvergedFit { index: 0 } });
            }
            Ok(())
        }

        Command::Reduce { set, common } => {
            let (resolved, spectra) = resolve_set(&set)?;
            let mut out = Output::new(&common.out);
            let h = reduce_outputs(&mut out, &resolved, &spectra)?;
            out.finish("reduce", args, vec![set], None)?;
            println!("h/m = {:e} ± {:e} m^2 s^-1", h.value, h.sigma);
            Ok(())
        }

        Command::Budget { budget, alpha_inv, common } => {
            let b = load_budget(&budget)?;
            let table = b.to_table().at(Stage::Budget)?;
            let mut out = Output::new(&common.out);
            out.text("budget.txt", &table)?;
            out.json("budget_summary.json", &b.summary().at(Stage::Budget)?)?;
            if let Some(a) = alpha_inv {
                let raw = Quantity::new(a, 0.0, Default::default()).at(Stage::Input)?;
                let corrected = apply_budget(&raw, &b).at(Stage::Budget)?;
                out.json("alpha_inv_corrected.json", &corrected)?;
                println!("1/alpha = {}", concise(corrected.value, corrected.sigma, 2));
            }
            out.finish("budget", args, given(&[&budget]), None)?;
            print!("{table}");
            Ok(())
        }

        Command::Alpha { h_over_m, h_over_m_sigma, constants, common } => {
            let reg = load_registry(&constants)?;
            let h = Quantity::new(h_over_m, h_over_m_sigma, "m^2 s^-1".parse().at(Stage::Input)?).at(Stage::Input)?;
            let alpha_inv = alpha_from_h_over_m(&h, &reg.ar_rb, &reg).at(Stage::Constants)?;
            let h_over_mu = h.mul(&reg.ar_rb).at(Stage::Constants)?;
            let nah = na_h(&h_over_mu, &reg).at(Stage::Constants)?;
            let mut out = Output::new(&common.out);
            out.json("constants.json", &serde_json::json!({
                "h_over_m": h,
                "alpha_inv": alpha_inv,
                "alpha_inv_concise": concise(alpha_inv.value, alpha_inv.sigma, 2),
                "h_over_mu": h_over_mu,
                "na_h": nah,
                "registry": reg.source_label,
                "rb_mass": reg.rb_mass,
            }))?;
            out.finish("alpha", args, given(&[&constants.registry]), None)?;
            println!("1/alpha = {}", concise(alpha_inv.value, alpha_inv.sigma, 2));
            println!("h/m_u   = {:e} ± {:e} m^2 s^-1", h_over_mu.value, h_over_mu.sigma);
            println!("N_A h   = {:e} ± {:e} J s mol^-1", nah.value, nah.sigma);
            Ok(())
        }

        Command::Ae { alpha_inv, alpha_inv_sigma, qed, common } => {
            let series = load_qed(&qed)?;
            let a = Quantity::new(alpha_inv, alpha_inv_sigma, Default::default()).at(Stage::Input)?;
            let c = compare_a_e(&a, &series).at(Stage::Constants)?;
            let mut out = Output::new(&common.out);
            out.json("ae.json", &c)?;
            out.finish("ae", args, given(&[&qed]), None)?;
            println!(
                "a_e(Exp) - a_e(Theory) = {:.3}({:.3}) x 1e-12   [alpha only: {:.3}]",
                c.difference * 1e12,
                c.sigma * 1e12,
                c.sigma_alpha_only * 1e12
            );
            Ok(())
        }

        Command::Compare { determinations, common } => {
            let file = load_determinations(&determinations)?;
            let rep = compare_determinations(&file.determinations).at(Stage::Constants)?;
            let mut out = Output::new(&common.out);
            comparison_outputs(&mut out, &rep)?;
            out.finish("compare", args, given(&[&determinations]), None)?;
            for p in &rep.pairs {
                println!("{:<10} - {:<10} {:<10} {:+.3e} ({:.2} sigma)", p.a, p.b, p.quantity, p.difference, p.n_sigma);
            }
            Ok(())
        }

        Command::Acf { series, max_lag, common } => {
            let rows: Vec<SeriesRow> = io::read_csv(&series).at(Stage::Input)?;
            let values = rows
                .iter()
                .map(|r| Quantity::new(r.value, r.sigma, Default::default()))
                .collect::<recoil_core::Result<Vec<_>>>()
                .at(Stage::Input)?;
            let st = series_stats(&values, max_lag).at(Stage::Stats)?;
            let mut out = Output::new(&common.out);
            out.json("stats.json", &st)?;
            out.csv("acf.csv", &acf_rows(&st))?;
            out.finish("acf", args, vec![series], None)?;
            println!("n = {}, chi2/(n-1) = {:.3}", st.n, st.chi2_per_dof);
            Ok(())
        }

        Command::Pipeline { set, budget, no_budget, qed, determinations, constants, common } => {
            let reg = load_registry(&constants)?;
            let b = if no_budget { None } else { Some(load_budget(&budget)?) };
            let series = load_qed(&qed)?;
            let dets = load_determinations(&determinations)?;

            let (resolved, spectra) = resolve_set(&set)?;
            let mut out = Output::new(&common.out);
            let h = reduce_outputs(&mut out, &resolved, &spectra)?;

            let alpha_raw = alpha_from_h_over_m(&h, &reg.ar_rb, &reg).at(Stage::Constants)?;
            out.json("alpha_inv_raw.json", &alpha_raw)?;
            // α ∝ (h/m)^½
            let stat_rel = 0.5 * h.relative_sigma();
            let alpha_inv = match &b {
                Some(b) => {
                    let mut b = b.clone();
                    if b.statistical.is_none() {
                        b.statistical = Some(stat_rel / BUDGET_UNIT);
                    }
                    if b.external.is_none() {
                        let ext = (alpha_raw.relative_sigma().powi(2) - stat_rel.powi(2)).max(0.0).sqrt();
                        b.external = Some(ext / BUDGET_UNIT);
                    }
                    out.text("budget.txt", &b.to_table().at(Stage::Budget)?)?;
                    out.json("budget_summary.json", &b.summary().at(Stage::Budget)?)?;
                    apply_budget(&alpha_raw, &b).at(Stage::Budget)?
                }
                None => Quantity::new(alpha_raw.value, alpha_raw.value * stat_rel, alpha_raw.unit.clone()).at(Stage::Constants)?,
            };

            let det = Determination::from_alpha_inv(&resolved.label, alpha_inv.clone(), "this pipeline run", &reg)
                .at(Stage::Constants)?;
            let nah = na_h(&det.h_over_mu, &reg).at(Stage::Constants)?;
            let ae = compare_a_e(&alpha_inv, &series).at(Stage::Constants)?;
            out.json("ae.json", &ae)?;

            let mut all = dets.determinations.clone();
            all.push(det.clone());
            let rep = compare_determinations(&all).at(Stage::Constants)?;
            comparison_outputs(&mut out, &rep)?;

            let record = PipelineRecord {
                label: resolved.label.clone(),
                h_over_m: h,
                alpha_inv_concise: concise(alpha_inv.value, alpha_inv.sigma, 2),
                relative_uncertainty_1e10: alpha_inv.relative_sigma() / BUDGET_UNIT,
                alpha_inv_raw: alpha_raw,
                alpha_inv,
                budget_applied: b.is_some(),
                h_over_mu: det.h_over_mu,
                na_h: nah,
                a_e: ae,
                registry: reg.source_label.clone(),
                rb_mass: reg.rb_mass,
            };
            out.json("record.json", &record)?;
            let paths = given(&[&Some(set), &budget, &qed, &determinations, &constants.registry]);
            out.finish("pipeline", args, paths, None)?;
            println!("h/m     = {:e} ± {:e} m^2 s^-1", record.h_over_m.value, record.h_over_m.sigma);
            println!("1/alpha = {}  [{:.2} x 1e-10]", record.alpha_inv_concise, record.relative_uncertainty_1e10);
            println!("a_e(Exp) - a_e(Theory) = {:.3}({:.3}) x 1e-12", record.a_e.difference * 1e12, record.a_e.sigma * 1e12);
            Ok(())
        }

        Command::Montecarlo { config, world, seed, runs, max_lag, common } => {
            let cfg = load_config(&config)?;
            let w = load_world(&world)?;
            if runs < 2 {
                return Err(fail(Stage::Input, format!("need at least 2 runs, got {runs}")));
            }
            let master = seed.unwrap_or(w.rng_seed);
            let (results, summary) = determination_coverage(&w, &cfg, master, runs);
            let mut out = Output::new(&common.out);
            out.csv("runs.csv", &results)?;
            let ok: Vec<Quantity> = results
                .iter()
                .filter(|r| r.error.is_none())
                .map(|r| Quantity::with_unit(r.value, r.sigma, "m^2 s^-1"))
                .collect();
            let stats = if ok.len() >= 2 { Some(series_stats(&ok, max_lag.min(ok.len() - 1)).at(Stage::Stats)?) } else { None };
            if let Some(st) = &stats {
                out.csv("acf.csv", &acf_rows(st))?;
            }
            out.json("summary.json", &serde_json::json!({ "coverage": summary, "ratio": summary.ratio(), "series": stats }))?;
            out.finish("montecarlo", args, given(&[&config, &world]), Some(master))?;
            println!(
                "{} runs, {} failed: within 1 sigma {:.3}, scatter/sigma {:.3}",
                runs, summary.n_failed, summary.within_one_sigma, summary.ratio()
            );
            if summary.n_failed > 0 {
                return Err(fail(Stage::MonteCarlo, format!("{} of {runs} runs failed", summary.n_failed)));
            }
            Ok(())
        }
    }
}
