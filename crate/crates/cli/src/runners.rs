//! One function per subcommand. Each computes a typed report and, given an
//! output directory, writes its CSV and JSON files.

use std::f64::consts::SQRT_2;
use std::io::Write;

use modal_homodyne::modes::{gram_schmidt, make_mode, ModeKind, Overlap, TemporalMode, TimeGrid};
use modal_homodyne::povm::{coherent_moments, single_photon_pdf, XGrid};
use modal_homodyne::sampler::{empirical_distributions, gated_modes, ClickSampler};
use modal_homodyne::snr::{
    bound_sweep, design_filter, eta_f_cw_estimate, eta_f_of, filtering_gain_db, gaussian_gate, gaussian_overlap_sq,
    heterodyne_sql_snr, photons_per_interval, sigma_from_fwhm, snr_filtered, snr_unfiltered, to_db,
    tophat_filtered_snr_on_grid, write_sweep_csv, BoundSweepRow, FilterSpec, HeterodyneParams, PulseProfile,
};
use modal_homodyne::states::{CoherentAmplitude, SignalState};
use modal_homodyne::stats::{ks_test, KsOutcome, Moments};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::{
    AppendixIConfig, Fig3Config, Fig5Config, ModesConfig, SampleConfig, TophatConfig, ValidateConfig,
};
use crate::{CliError, OutDir};

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}

fn csv_err(e: std::io::Error) -> CliError {
    CliError::Io(e)
}

// ---------------------------------------------------------------- fig3

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig3Row {
    pub gamma: f64,
    /// Unfiltered mismatch SNR.
    pub snr_total_db: f64,
    /// Filtered SNR at the configured `eta_f`.
    pub snr_filtered_db: f64,
    pub gain_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig3Summary {
    pub signal_photons: f64,
    pub lo_photons: f64,
    pub photon_ratio: f64,
    pub eta_f: f64,
    pub design_gamma: f64,
    pub design_gain_db: f64,
    pub gain_at_max_gamma_db: f64,
    pub n_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Report {
    pub rows: Vec<Fig3Row>,
    pub bounds: Vec<BoundSweepRow>,
    pub summary: Fig3Summary,
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

pub fn fig3(cfg: &Fig3Config) -> Result<Fig3Report, CliError> {
    require(0.0 < cfg.gamma_min && cfg.gamma_min < cfg.gamma_max && cfg.gamma_max <= 1.0, || {
        format!("fig3: need 0 < gamma_min < gamma_max <= 1, got {} and {}", cfg.gamma_min, cfg.gamma_max)
    })?;
    require(cfg.n_gamma >= 1, || "fig3: n_gamma must be positive".into())?;
    require((0.0..=1.0).contains(&cfg.eta_f), || format!("fig3: eta_f {} outside [0, 1]", cfg.eta_f))?;
    require((0.0..=1.0).contains(&cfg.design_gamma), || {
        format!("fig3: design_gamma {} outside [0, 1]", cfg.design_gamma)
    })?;
    for (name, v) in [("p_s", cfg.p_s), ("p_lo", cfg.p_lo), ("interval", cfg.interval), ("nu", cfg.nu)] {
        require(v.is_finite() && v > 0.0, || format!("fig3: {name} must be positive, got {v}"))?;
    }

    let alpha2 = photons_per_interval(cfg.p_s, cfg.interval, cfg.nu);
    let beta2 = photons_per_interval(cfg.p_lo, cfg.interval, cfg.nu);
    let alpha = CoherentAmplitude::real(alpha2.sqrt());
    let beta = beta2.sqrt();

    let mut gammas = log_spaced(cfg.gamma_min, cfg.gamma_max, cfg.n_gamma);
    gammas.push(cfg.design_gamma);
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();

    let rows = gammas
        .iter()
        .map(|&g| {
            let ov = Overlap::real(g)?;
            Ok(Fig3Row {
                gamma: g,
                snr_total_db: to_db(snr_unfiltered(alpha, beta, ov)?),
                snr_filtered_db: to_db(snr_filtered(alpha, beta, ov, cfg.eta_f)?),
                gain_db: filtering_gain_db(alpha2 / beta2, ov, cfg.eta_f)?,
            })
        })
        .collect::<Result<Vec<_>, modal_homodyne::Error>>()?;
    let bounds = bound_sweep(alpha2, beta2, &gammas, cfg.eta_f)?;

    let design = rows.iter().find(|r| r.gamma == cfg.design_gamma).expect("design gamma inserted");
    let summary = Fig3Summary {
        signal_photons: alpha2,
        lo_photons: beta2,
        photon_ratio: alpha2 / beta2,
        eta_f: cfg.eta_f,
        design_gamma: cfg.design_gamma,
        design_gain_db: design.gain_db,
        gain_at_max_gamma_db: rows.last().expect("nonempty sweep").gain_db,
        n_rows: rows.len(),
    };
    Ok(Fig3Report { rows, bounds, summary })
}

pub fn write_fig3(report: &Fig3Report, out: &OutDir) -> Result<(), CliError> {
    let mut w = out.writer("fig3.csv")?;
    writeln!(w, "gamma,snr_total_db,snr_filtered_db,gain_db")?;
    for r in &report.rows {
        writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e}", r.gamma, r.snr_total_db, r.snr_filtered_db, r.gain_db)?;
    }
    w.flush()?;
    let mut w = out.writer("fig3_bounds.csv")?;
    write_sweep_csv(&report.bounds, &mut w).map_err(csv_err)?;
    w.flush()?;
    out.json("fig3.json", &report.summary)
}

// ---------------------------------------------------------------- fig5

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig5Curve {
    pub gamma: f64,
    pub file: String,
    pub total_mass: f64,
    pub mean: f64,
    pub variance: f64,
    /// Grid location of the density maximum on `x >= 0`.
    pub peak_x: f64,
    /// `max |P(x) - P(-x)|` over the grid.
    pub asymmetry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig5Report {
    pub beta: f64,
    pub curves: Vec<Fig5Curve>,
    #[serde(skip)]
    pub tables: Vec<modal_homodyne::povm::DifferenceDistribution>,
}

pub fn fig5(cfg: &Fig5Config) -> Result<Fig5Report, CliError> {
    require(cfg.gammas.iter().all(|g| (0.0..=1.0).contains(g)), || {
        format!("fig5: every gamma must lie in [0, 1], got {:?}", cfg.gammas)
    })?;
    require(cfg.beta.is_finite() && cfg.beta > 0.0, || format!("fig5: beta must be positive, got {}", cfg.beta))?;
    require((cfg.x_min + cfg.x_max).abs() < 1e-12, || "fig5: x range must be symmetric".into())?;
    let grid = XGrid::new(cfg.x_min, cfg.x_max, cfg.n_x).map_err(|e| CliError::Config(e.to_string()))?;

    let mut curves = Vec::new();
    let mut tables = Vec::new();
    for (i, &g) in cfg.gammas.iter().enumerate() {
        let dist = single_photon_pdf(Overlap::real(g)?, cfg.beta, Some(grid))?;
        let p = dist.density();
        let n = p.len();
        let asymmetry = (0..n).map(|k| (p[k] - p[n - 1 - k]).abs()).fold(0.0, f64::max);
        let (peak_x, _) = grid
            .points()
            .zip(p)
            .filter(|(x, _)| *x >= 0.0)
            .fold((0.0, f64::MIN), |best, (x, &v)| if v > best.1 { (x, v) } else { best });
        curves.push(Fig5Curve {
            gamma: g,
            file: format!("fig5_{i}.csv"),
            total_mass: dist.total_mass(),
            mean: dist.mean(),
            variance: dist.variance(),
            peak_x,
            asymmetry,
        });
        tables.push(dist);
    }
    Ok(Fig5Report { beta: cfg.beta, curves, tables })
}

pub fn write_fig5(report: &Fig5Report, out: &OutDir) -> Result<(), CliError> {
    for (c, d) in report.curves.iter().zip(&report.tables) {
        let mut w = out.writer(&c.file)?;
        d.write_csv(&mut w)?;
        w.flush()?;
    }
    out.json("fig5.json", report)
}

// ---------------------------------------------------------- appendix-i

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SqlEntry {
    pub set: String,
    pub profile: PulseProfile,
    pub gamma_sq: f64,
    pub snr_linear: f64,
    pub snr_db: f64,
    pub reported_db: Option<f64>,
    pub realized_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateEntry {
    pub k: f64,
    /// `k sigma / T`.
    pub eta_f_estimate: f64,
    /// Grid integral of `xi_perp` over the `+/- k sigma` gate.
    pub eta_f_exact: f64,
    pub gain_db: f64,
    pub gain_exact_db: f64,
    pub reported_gain_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixIReport {
    pub sql: Vec<SqlEntry>,
    pub gate_set: String,
    pub sigma: f64,
    pub gate_gamma_sq: f64,
    pub photon_ratio: f64,
    pub gates: Vec<GateEntry>,
    pub reported_eta_f: Option<f64>,
    pub realized_gain_db: Option<f64>,
}

pub fn appendix_i(cfg: &AppendixIConfig, grid_points: Option<usize>) -> Result<AppendixIReport, CliError> {
    require(cfg.gate_set < cfg.sets.len(), || {
        format!("appendix_i: gate_set {} out of range for {} sets", cfg.gate_set, cfg.sets.len())
    })?;
    require(cfg.pulse_fwhm > 0.0, || "appendix_i: pulse_fwhm must be positive".into())?;
    let mut sql = Vec::new();
    for set in &cfg.sets {
        for (profile, reported) in [
            (PulseProfile::Sech, set.reported_sech_db),
            (PulseProfile::Gaussian, set.reported_gaussian_db),
        ] {
            let params = HeterodyneParams { profile, ..set.params };
            let r = heterodyne_sql_snr(&params)?;
            sql.push(SqlEntry {
                set: set.name.clone(),
                profile,
                gamma_sq: r.gamma_sq,
                snr_linear: r.linear,
                snr_db: r.db,
                reported_db: reported,
                realized_db: set.realized_db,
            });
        }
    }

    let base = &cfg.sets[cfg.gate_set];
    let t = base.params.t_rep;
    let sigma = sigma_from_fwhm(cfg.pulse_fwhm);
    let gamma_sq = gaussian_overlap_sq(sigma, t)?;
    let ratio = base.params.p_s / base.params.p_lo;
    let overlap = Overlap::real(gamma_sq.sqrt())?;

    let grid = TimeGrid::new(t, grid_points.unwrap_or(cfg.grid_points))?;
    let lo = make_mode(&ModeKind::GaussianRoot { center: t / 2.0, sigma, phase: 0.0 }, grid)?;
    let cw = make_mode(&ModeKind::Cw { phase: 0.0 }, grid)?;
    let basis = gram_schmidt(&lo, &cw)?;

    let gates = cfg
        .cutoffs
        .iter()
        .map(|c| {
            let estimate = eta_f_cw_estimate(c.k, sigma, t);
            let gate = gaussian_gate(&lo, t / 2.0, sigma, c.k)?;
            let exact = eta_f_of(&gate, basis.xi_perp())?;
            Ok(GateEntry {
                k: c.k,
                eta_f_estimate: estimate,
                eta_f_exact: exact,
                gain_db: filtering_gain_db(ratio, overlap, estimate)?,
                gain_exact_db: filtering_gain_db(ratio, overlap, exact)?,
                reported_gain_db: c.reported_gain_db,
            })
        })
        .collect::<Result<Vec<_>, modal_homodyne::Error>>()?;

    Ok(AppendixIReport {
        sql,
        gate_set: base.name.clone(),
        sigma,
        gate_gamma_sq: gamma_sq,
        photon_ratio: ratio,
        gates,
        reported_eta_f: cfg.reported_eta_f,
        realized_gain_db: cfg.realized_gain_db,
    })
}

pub fn write_appendix_i(report: &AppendixIReport, out: &OutDir) -> Result<(), CliError> {
    out.json("appendix_i.json", report)
}

// -------------------------------------------------------------- tophat

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TophatRow {
    pub t0: f64,
    pub t1: f64,
    pub gamma: f64,
    pub gamma_analytic: f64,
    pub eta_lo: f64,
    pub eta_s: f64,
    pub snr: f64,
    pub snr_large_lo: f64,
    /// `4 Re(gamma alpha)^2`.
    pub ideal: f64,
    /// `snr / (ideal / eta_lo) - 1`.
    pub large_lo_deviation: f64,
}

pub fn tophat(cfg: &TophatConfig, seed: u64, grid_points: Option<usize>) -> Result<Vec<TophatRow>, CliError> {
    let n = grid_points.unwrap_or(cfg.grid_points);
    let grid = TimeGrid::new(cfg.interval, n).map_err(|e| CliError::Config(e.to_string()))?;
    let mut pairs: Vec<[f64; 2]> = cfg.pairs.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cfg.n_random {
        // bin edges keep the sampled top-hats exact
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        let (k0, k1) = (a.min(b), a.max(b) + 1);
        let dt = grid.dt();
        pairs.push([k0 as f64 * dt, k1 as f64 * dt]);
    }
    let alpha = CoherentAmplitude::real(cfg.alpha);
    pairs
        .iter()
        .map(|&[t0, t1]| {
            let r = tophat_filtered_snr_on_grid(alpha, cfg.beta, t0, t1, grid)?;
            let ideal = 4.0 * (r.gamma * cfg.alpha).powi(2);
            Ok(TophatRow {
                t0,
                t1,
                gamma: r.gamma,
                gamma_analytic: (t1 - t0) / (t1 * (cfg.interval - t0)).sqrt(),
                eta_lo: r.eta_lo,
                eta_s: r.eta_s,
                snr: r.snr,
                snr_large_lo: r.snr_large_lo,
                ideal,
                large_lo_deviation: r.snr / (ideal / r.eta_lo) - 1.0,
            })
        })
        .collect::<Result<Vec<_>, modal_homodyne::Error>>()
        .map_err(CliError::from)
}

pub fn write_tophat(rows: &[TophatRow], out: &OutDir) -> Result<(), CliError> {
    let mut w = out.writer("tophat.csv")?;
    writeln!(w, "t0,t1,gamma,gamma_analytic,eta_lo,eta_s,snr,snr_large_lo,ideal,large_lo_deviation")?;
    for r in rows {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t0, r.t1, r.gamma, r.gamma_analytic, r.eta_lo, r.eta_s, r.snr, r.snr_large_lo, r.ideal, r.large_lo_deviation
        )?;
    }
    w.flush()?;
    Ok(())
}

// -------------------------------------------------------------- sample

struct SamplerSetup {
    lo: TemporalMode,
    signal: TemporalMode,
    gate: FilterSpec,
}

fn build_modes(modes: &ModesConfig, grid_points: Option<usize>) -> Result<SamplerSetup, CliError> {
    match modes {
        ModesConfig::Gated { bins, lo_bins, gamma, eta_f } => {
            let grid = TimeGrid::new(1.0, grid_points.unwrap_or(*bins)).map_err(|e| CliError::Config(e.to_string()))?;
            let m = gated_modes(grid, *lo_bins, *gamma, *eta_f).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(SamplerSetup { lo: m.lo, signal: m.signal, gate: m.gate })
        }
        ModesConfig::Explicit { interval, grid_points: n, lo, signal, tail_fraction } => {
            let grid = TimeGrid::new(*interval, grid_points.unwrap_or(*n)).map_err(|e| CliError::Config(e.to_string()))?;
            let lo = make_mode(lo, grid).map_err(|e| CliError::Config(e.to_string()))?;
            let signal = make_mode(signal, grid).map_err(|e| CliError::Config(e.to_string()))?;
            let gate = design_filter(&lo, *tail_fraction, grid.dt())?;
            Ok(SamplerSetup { lo, signal, gate })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleReport {
    pub seed: u64,
    pub shots: usize,
    pub gamma: [f64; 2],
    pub eta_f: f64,
    pub gate_lo_preserving: bool,
    pub unfiltered: modal_homodyne::EmpiricalStats,
    pub filtered: modal_homodyne::EmpiricalStats,
    pub predicted_unfiltered: Prediction,
    pub predicted_filtered_snr_db: f64,
    pub record_files: Vec<String>,
}

pub fn sample(cfg: &SampleConfig, seed: u64, shots: Option<usize>, grid_points: Option<usize>) -> Result<(SampleReport, Vec<modal_homodyne::ClickRecord>), CliError> {
    let shots = shots.unwrap_or(cfg.shots);
    require(shots >= modal_homodyne::sampler::MIN_SHOTS, || {
        format!("sample: need at least {} shots, got {shots}", modal_homodyne::sampler::MIN_SHOTS)
    })?;
    require(cfg.beta > 0.0, || format!("sample: beta must be positive, got {}", cfg.beta))?;
    let setup = build_modes(&cfg.modes, grid_points)?;
    let alpha = Complex64::new(cfg.alpha[0], cfg.alpha[1]);
    let signal = SignalState::Coherent { re: alpha.re, im: alpha.im };
    let sampler = ClickSampler::new(&signal, &setup.signal, cfg.beta, &setup.lo)?;
    let grid = *setup.lo.grid();
    let filters = [FilterSpec::constant(grid, 1.0), setup.gate.clone()];
    let mut stats = empirical_distributions(&sampler, &filters, cfg.beta, shots, seed)?;
    let filtered = stats.pop().expect("two filters");
    let unfiltered = stats.pop().expect("two filters");

    let basis = gram_schmidt(&setup.lo, &setup.signal)?;
    let ov = basis.overlap();
    let eta_f = eta_f_of(&setup.gate, basis.xi_perp())?;
    let amp = CoherentAmplitude(alpha);
    let (mean, variance) = coherent_moments(amp, cfg.beta, ov);
    let records: Vec<_> = (0..cfg.dump_records as u64).map(|i| sampler.record(seed, i)).collect();
    Ok((
        SampleReport {
            seed,
            shots,
            gamma: [ov.value().re, ov.value().im],
            eta_f,
            gate_lo_preserving: setup.gate.lo_preserving(),
            unfiltered,
            filtered,
            predicted_unfiltered: Prediction { mean, variance, snr_db: to_db(snr_unfiltered(amp, cfg.beta, ov)?) },
            predicted_filtered_snr_db: to_db(snr_filtered(amp, cfg.beta, ov, eta_f)?),
            record_files: (0..records.len()).map(|i| format!("record_{i}.csv")).collect(),
        },
        records,
    ))
}

pub fn write_sample(report: &SampleReport, records: &[modal_homodyne::ClickRecord], out: &OutDir) -> Result<(), CliError> {
    for (name, rec) in report.record_files.iter().zip(records) {
        let mut w = out.writer(name)?;
        rec.write_csv(&mut w)?;
        w.flush()?;
    }
    out.json("sample.json", report)
}

// ------------------------------------------------------------ validate

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub expected: f64,
    /// Allowed `|observed - expected|`, or the significance level for KS checks.
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn within(name: &str, observed: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            expected,
            tolerance,
            pass: (observed - expected).abs() <= tolerance,
        }
    }

    fn ks(name: &str, ks: KsOutcome, significance: f64) -> Self {
        Self {
            name: name.into(),
            observed: ks.p_value,
            expected: ks.statistic,
            tolerance: significance,
            pass: ks.passes(significance),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateReport {
    pub seed: u64,
    pub shots: usize,
    pub filtered_shots: usize,
    pub checks: Vec<Check>,
}

impl ValidateReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn normal_ks(samples: &mut [f64], mean: f64, variance: f64) -> KsOutcome {
    let law = Normal::new(mean, variance.sqrt()).expect("positive variance");
    ks_test(samples, |x| law.cdf(x))
}

pub fn validate(cfg: &ValidateConfig, seed: u64, shots: Option<usize>) -> Result<ValidateReport, CliError> {
    let shots = shots.unwrap_or(cfg.shots);
    require(shots >= 10_000, || format!("validate: need at least 10000 shots, got {shots}"))?;
    require(cfg.filtered_shots >= 10_000, || "validate: filtered_shots must be at least 10000".into())?;
    let mut checks = Vec::new();
    let beta = cfg.lo_photons.sqrt();
    let alpha = cfg.signal_photons.sqrt();

    // matched modes: N(sqrt(2) alpha, 1/2) up to the small LO-mode counting term
    let small = TimeGrid::new(1.0, 8)?;
    let cw = make_mode(&ModeKind::Cw { phase: 0.0 }, small)?;
    let matched_alpha = 5.0;
    let sampler = ClickSampler::new(&SignalState::Coherent { re: matched_alpha, im: 0.0 }, &cw, beta, &cw)?;
    let all = FilterSpec::constant(small, 1.0);
    let mut st = modal_homodyne::empirical_distribution(&sampler, &all, beta, shots, seed)?;
    let ks = normal_ks(&mut st.samples, SQRT_2 * matched_alpha, 0.5);
    checks.push(Check::ks("matched_ks", ks, cfg.significance));

    // mismatched design point
    let modes = gated_modes(TimeGrid::new(1.0, 16)?, 4, cfg.gamma, cfg.eta_f)?;
    let signal = SignalState::Coherent { re: alpha, im: 0.0 };
    let sampler = ClickSampler::new(&signal, &modes.signal, beta, &modes.lo)?;
    let all = FilterSpec::constant(*modes.lo.grid(), 1.0);
    let mut st = modal_homodyne::empirical_distribution(&sampler, &all, beta, shots, seed.wrapping_add(1))?;
    let ov = Overlap::real(cfg.gamma)?;
    let amp = CoherentAmplitude::real(alpha);
    let (mean, var) = coherent_moments(amp, beta, ov);
    checks.push(Check::within("design_mean", st.mean, mean, 5.0 * st.mean_se));
    checks.push(Check::within("design_variance", st.variance, var, 5.0 * st.variance_se));
    let ks = normal_ks(&mut st.samples, mean, var);
    checks.push(Check::ks("design_ks", ks, cfg.significance));

    let filtered = modal_homodyne::empirical_distribution(&sampler, &modes.gate, beta, cfg.filtered_shots, seed.wrapping_add(2))?;
    let want = to_db(snr_filtered(amp, beta, ov, cfg.eta_f)?);
    checks.push(Check::within("filtered_snr_db", filtered.snr_db, want, cfg.snr_tolerance_db));

    let counts = sampler.map_shots(shots, seed.wrapping_add(3), |r| r.total_counts() as f64);
    let m = Moments::of(&counts);
    let total = cfg.signal_photons + cfg.lo_photons;
    checks.push(Check::within("photon_budget", m.mean, total, 5.0 * m.mean_se()));

    let coarse = sampler.coarsen(2)?;
    let fine = st;
    let c = modal_homodyne::empirical_distribution(&coarse, &FilterSpec::constant(*coarse.grid(), 1.0), beta, shots, seed.wrapping_add(4))?;
    checks.push(Check::within("coarse_mean", c.mean, fine.mean, 3.0 * c.mean_se.hypot(fine.mean_se)));
    checks.push(Check::within("coarse_variance", c.variance, fine.variance, 3.0 * c.variance_se.hypot(fine.variance_se)));

    Ok(ValidateReport { seed, shots, filtered_shots: cfg.filtered_shots, checks })
}

pub fn write_validate(report: &ValidateReport, out: &OutDir) -> Result<(), CliError> {
    out.json("validate.json", report)
}
