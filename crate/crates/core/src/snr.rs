//! SNR bounds for coherent signals, temporal filters and the heterodyne
//! shot-noise calculator for comb measurements.
//!
//! All SNRs are power ratios `mu^2 / sigma^2`; decibels are `10 log10`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::{inner_product, make_mode, ModeKind, Overlap, TemporalMode, TimeGrid};
use crate::states::CoherentAmplitude;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Time-bandwidth product of a transform-limited sech^2 pulse.
pub const SECH_TBP: f64 = 0.315;
/// Ratio of the sech^2 intensity FWHM to the sech width parameter.
pub const SECH_FWHM_PER_TAU: f64 = 1.76;
/// Time-bandwidth product of a transform-limited Gaussian pulse.
pub const GAUSSIAN_TBP: f64 = 0.441;

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Mean photons delivered by `power` watts over `interval` seconds.
pub fn photons_per_interval(power: f64, interval: f64, nu: f64) -> f64 {
    power * interval / (PLANCK * nu)
}

fn check_eta_f(eta_f: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta_f) {
        Ok(())
    } else {
        Err(Error::invalid("eta_f", format!("must lie in [0, 1], got {eta_f}")))
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("beta", format!("LO amplitude must be positive, got {beta}")))
    }
}

/// Unfiltered SNR `4 beta^2 Re(gamma alpha)^2 / (beta^2 + (1 - |gamma|^2)|alpha|^2)`.
pub fn snr_unfiltered(alpha: CoherentAmplitude, beta: f64, overlap: Overlap) -> Result<f64> {
    check_beta(beta)?;
    let b2 = beta * beta;
    let re = (overlap.value() * alpha.value()).re;
    Ok(4.0 * b2 * re * re / (b2 + (1.0 - overlap.norm_sqr()) * alpha.value().norm_sqr()))
}

/// Achievable SNR behind a filter with inefficiency `eta_f`:
/// `4 beta^2 Re(gamma alpha)^2 / (beta^2 + eta_f |alpha|^2)`.
pub fn snr_filtered(alpha: CoherentAmplitude, beta: f64, overlap: Overlap, eta_f: f64) -> Result<f64> {
    check_beta(beta)?;
    check_eta_f(eta_f)?;
    let b2 = beta * beta;
    let re = (overlap.value() * alpha.value()).re;
    Ok(4.0 * b2 * re * re / (b2 + eta_f * alpha.value().norm_sqr()))
}

/// `|beta|^2 >> |gamma alpha|^2`, taken as a factor of ten.
pub fn large_lo_holds(alpha: CoherentAmplitude, beta: f64, overlap: Overlap) -> bool {
    beta * beta >= 10.0 * (overlap.value() * alpha.value()).norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrBounds {
    pub conventional: f64,
    pub achievable: f64,
    pub ideal: f64,
}

/// Conventional (`eta_f = 1`), achievable and ideal (`4 Re(gamma alpha)^2`) SNRs.
pub fn bound_ordering(alpha: CoherentAmplitude, beta: f64, overlap: Overlap, eta_f: f64) -> Result<SnrBounds> {
    let re = (overlap.value() * alpha.value()).re;
    Ok(SnrBounds {
        conventional: snr_filtered(alpha, beta, overlap, 1.0)?,
        achievable: snr_filtered(alpha, beta, overlap, eta_f)?,
        ideal: 4.0 * re * re,
    })
}

/// `10 log10[(1 + r (1 - |gamma|^2)) / (1 + r eta_f)]`, `r = |alpha|^2 / |beta|^2`.
pub fn filtering_gain_db(alpha2_over_beta2: f64, gamma: Overlap, eta_f: f64) -> Result<f64> {
    if !(alpha2_over_beta2 >= 0.0 && alpha2_over_beta2.is_finite()) {
        return Err(Error::invalid("ratio", format!("|alpha|^2/|beta|^2 must be >= 0, got {alpha2_over_beta2}")));
    }
    check_eta_f(eta_f)?;
    let r = alpha2_over_beta2;
    Ok(to_db((1.0 + r * (1.0 - gamma.norm_sqr())) / (1.0 + r * eta_f)))
}

/// Real temporal weights `f(t)` applied to the difference photocurrent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterSpec {
    grid: TimeGrid,
    weights: Vec<f64>,
    lo_preserving: bool,
    excluded_lo_fraction: f64,
}

impl FilterSpec {
    /// `f = c` everywhere. Only `c = 1` leaves the LO mode unchanged.
    pub fn constant(grid: TimeGrid, c: f64) -> Self {
        Self {
            grid,
            weights: vec![c; grid.n_points()],
            lo_preserving: c == 1.0,
            excluded_lo_fraction: if c == 0.0 { 1.0 } else { 0.0 },
        }
    }

    /// Arbitrary weights, assessed against `xi_lo`.
    pub fn from_weights(weights: Vec<f64>, xi_lo: &TemporalMode) -> Result<Self> {
        let grid = *xi_lo.grid();
        if weights.len() != grid.n_points() {
            return Err(Error::invalid(
                "weights",
                format!("expected {} weights, got {}", grid.n_points(), weights.len()),
            ));
        }
        let mut spec = Self {
            grid,
            weights,
            lo_preserving: false,
            excluded_lo_fraction: 0.0,
        };
        spec.excluded_lo_fraction = spec.lost_lo_fraction(xi_lo)?;
        spec.lo_preserving = spec.lo_residual(xi_lo)? <= 1e-8;
        Ok(spec)
    }

    /// Indicator of `[t0, t1]` (bins whose midpoint lies inside).
    pub fn gate(xi_lo: &TemporalMode, t0: f64, t1: f64) -> Result<Self> {
        let weights = xi_lo
            .grid()
            .times()
            .map(|t| if t >= t0 && t <= t1 { 1.0 } else { 0.0 })
            .collect();
        Self::from_weights(weights, xi_lo)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn lo_preserving(&self) -> bool {
        self.lo_preserving
    }

    /// Share of the LO norm `sum |xi_LO|^2 dt` removed by the filter.
    pub fn excluded_lo_fraction(&self) -> f64 {
        self.excluded_lo_fraction
    }

    /// `max_k |f_k - 1| |xi_LO,k|` scaled by `sqrt(dt)`, zero for an exactly
    /// LO-preserving filter.
    pub fn lo_residual(&self, xi_lo: &TemporalMode) -> Result<f64> {
        self.grid.ensure_same(xi_lo.grid())?;
        let sdt = self.grid.dt().sqrt();
        Ok(self
            .weights
            .iter()
            .zip(xi_lo.samples())
            .map(|(f, z)| (f - 1.0).abs() * z.norm() * sdt)
            .fold(0.0, f64::max))
    }

    fn lost_lo_fraction(&self, xi_lo: &TemporalMode) -> Result<f64> {
        self.grid.ensure_same(xi_lo.grid())?;
        Ok(self
            .weights
            .iter()
            .zip(xi_lo.samples())
            .filter(|(f, _)| **f == 0.0)
            .map(|(_, z)| z.norm_sqr())
            .sum::<f64>()
            * self.grid.dt())
    }
}

/// Binary filter keeping bins where `|xi_LO|^2 >= p / dtau` (and `xi_LO != 0`).
pub fn design_filter(xi_lo: &TemporalMode, p: f64, dtau: f64) -> Result<FilterSpec> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid("p", format!("tail fraction must lie in [0, 1), got {p}")));
    }
    if !(dtau.is_finite() && dtau > 0.0) {
        return Err(Error::invalid("dtau", format!("must be positive, got {dtau}")));
    }
    let threshold = p / dtau;
    let weights: Vec<f64> = xi_lo
        .samples()
        .iter()
        .map(|z| {
            let i = z.norm_sqr();
            if i > 0.0 && i >= threshold {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let grid = *xi_lo.grid();
    let mut spec = FilterSpec {
        grid,
        weights,
        lo_preserving: false,
        excluded_lo_fraction: 0.0,
    };
    spec.excluded_lo_fraction = spec.lost_lo_fraction(xi_lo)?;
    spec.lo_preserving = spec.excluded_lo_fraction <= p;
    Ok(spec)
}

/// Gate of `mu +/- k sigma` around a Gaussian LO pulse.
pub fn gaussian_gate(xi_lo: &TemporalMode, center: f64, sigma: f64, k: f64) -> Result<FilterSpec> {
    FilterSpec::gate(xi_lo, center - k * sigma, center + k * sigma)
}

/// `eta_f = sum |f_k|^2 |xi_perp,k|^2 dt`.
pub fn eta_f_of(filter: &FilterSpec, xi_perp: &TemporalMode) -> Result<f64> {
    filter.grid.ensure_same(xi_perp.grid())?;
    Ok(filter
        .weights
        .iter()
        .zip(xi_perp.samples())
        .map(|(f, z)| f * f * z.norm_sqr())
        .sum::<f64>()
        * filter.grid.dt())
}

/// Standard deviation of a Gaussian intensity profile with the given FWHM.
pub fn sigma_from_fwhm(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * 2f64.ln()).sqrt())
}

/// CW-signal estimate `eta_f ~ k sigma / T` for a `k sigma` cutoff.
pub fn eta_f_cw_estimate(k: f64, sigma: f64, interval: f64) -> f64 {
    k * sigma / interval
}

/// Top-hat signal on `(0, t1)` and top-hat LO on `(t0, T)`, gated to `(t0, t1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TophatSnr {
    pub gamma: f64,
    pub eta_lo: f64,
    pub eta_s: f64,
    /// `4 Re(gamma alpha beta)^2 / (eta_lo beta^2 + eta_s |alpha|^2)`.
    pub snr: f64,
    /// Strong-LO limit `4 Re(gamma alpha)^2 / eta_lo`.
    pub snr_large_lo: f64,
}

pub fn tophat_filtered_snr(alpha: CoherentAmplitude, beta: f64, t0: f64, t1: f64, interval: f64) -> Result<TophatSnr> {
    check_beta(beta)?;
    if !(0.0 <= t0 && t0 < t1 && t1 <= interval) {
        return Err(Error::invalid(
            "tophat",
            format!("need 0 <= t0 < t1 <= T, got t0 = {t0}, t1 = {t1}, T = {interval}"),
        ));
    }
    let gamma = (t1 - t0) / (t1 * (interval - t0)).sqrt();
    tophat_snr_with_gamma(alpha, beta, gamma, t0, t1, interval)
}

/// Same as [`tophat_filtered_snr`] with `gamma` taken from sampled modes.
pub fn tophat_filtered_snr_on_grid(
    alpha: CoherentAmplitude,
    beta: f64,
    t0: f64,
    t1: f64,
    grid: TimeGrid,
) -> Result<TophatSnr> {
    check_beta(beta)?;
    let interval = grid.t_end();
    let signal = make_mode(&ModeKind::Tophat { t0: 0.0, t1, phase: 0.0 }, grid)?;
    let lo = make_mode(&ModeKind::Tophat { t0, t1: interval, phase: 0.0 }, grid)?;
    let gamma = inner_product(&lo, &signal)?;
    tophat_snr_with_gamma(alpha, beta, gamma.re, t0, t1, interval)
}

fn tophat_snr_with_gamma(
    alpha: CoherentAmplitude,
    beta: f64,
    gamma: f64,
    t0: f64,
    t1: f64,
    interval: f64,
) -> Result<TophatSnr> {
    let eta_lo = (t1 - t0) / (interval - t0);
    let eta_s = (t1 - t0) / t1;
    let signal = (alpha.value() * gamma * beta).re;
    let re = (alpha.value() * gamma).re;
    Ok(TophatSnr {
        gamma,
        eta_lo,
        eta_s,
        snr: 4.0 * signal * signal / (eta_lo * beta * beta + eta_s * alpha.value().norm_sqr()),
        snr_large_lo: 4.0 * re * re / eta_lo,
    })
}

/// Sech width parameter of a transform-limited pulse with bandwidth `delta_nu`.
pub fn sech_tau_from_bandwidth(delta_nu: f64) -> f64 {
    SECH_TBP / (SECH_FWHM_PER_TAU * delta_nu)
}

/// `|gamma|^2 = pi^2 tau / (2T)` between a CW signal and a sech LO pulse.
pub fn sech_overlap_sq(tau: f64, interval: f64) -> Result<f64> {
    if !(tau > 0.0 && interval > 0.0) {
        return Err(Error::invalid("tau", "pulse width and interval must be positive"));
    }
    let g2 = PI * PI * tau / (2.0 * interval);
    if g2 > 1.0 {
        return Err(Error::invalid(
            "tau",
            format!("|gamma|^2 = {g2} > 1: pulse too long for the interval"),
        ));
    }
    Ok(g2)
}

/// Intensity standard deviation of a transform-limited Gaussian pulse.
pub fn gaussian_sigma_from_bandwidth(delta_nu: f64) -> f64 {
    sigma_from_fwhm(GAUSSIAN_TBP / delta_nu)
}

/// `|gamma|^2 = sqrt(8 pi) sigma / T` between a CW signal and a Gaussian-root LO.
pub fn gaussian_overlap_sq(sigma: f64, interval: f64) -> Result<f64> {
    if !(sigma > 0.0 && interval > 0.0) {
        return Err(Error::invalid("sigma", "pulse width and interval must be positive"));
    }
    let g2 = (8.0 * PI).sqrt() * sigma / interval;
    if g2 > 1.0 {
        return Err(Error::invalid(
            "sigma",
            format!("|gamma|^2 = {g2} > 1: pulse too long for the interval"),
        ));
    }
    Ok(g2)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseProfile {
    #[default]
    Sech,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeterodyneParams {
    /// Optical frequency, Hz.
    pub nu: f64,
    /// Repetition period, s.
    pub t_rep: f64,
    /// Comb optical bandwidth, Hz.
    pub delta_nu: f64,
    pub eta_q: f64,
    /// Total comb (LO) power, W.
    pub p_lo: f64,
    /// CW signal power, W.
    pub p_s: f64,
    pub n_teeth: u32,
    /// Resolution bandwidth, Hz.
    pub bandwidth: f64,
    #[serde(default)]
    pub profile: PulseProfile,
    #[serde(default)]
    pub gamma_sq: Option<f64>,
}

impl HeterodyneParams {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("nu", self.nu),
            ("t_rep", self.t_rep),
            ("delta_nu", self.delta_nu),
            ("p_lo", self.p_lo),
            ("p_s", self.p_s),
            ("bandwidth", self.bandwidth),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.eta_q > 0.0 && self.eta_q <= 1.0) {
            return Err(Error::invalid("eta_q", format!("must lie in (0, 1], got {}", self.eta_q)));
        }
        if self.n_teeth == 0 {
            return Err(Error::invalid("n_teeth", "must be positive"));
        }
        Ok(())
    }

    /// `|gamma|^2` from the pulse profile unless overridden.
    pub fn overlap_sq(&self) -> Result<f64> {
        if let Some(g2) = self.gamma_sq {
            return Overlap::real(g2.sqrt()).map(|o| o.norm_sqr());
        }
        match self.profile {
            PulseProfile::Sech => sech_overlap_sq(sech_tau_from_bandwidth(self.delta_nu), self.t_rep),
            PulseProfile::Gaussian => gaussian_overlap_sq(gaussian_sigma_from_bandwidth(self.delta_nu), self.t_rep),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SqlSnr {
    pub gamma_sq: f64,
    pub linear: f64,
    pub db: f64,
}

/// Shot-noise-limited heterodyne SNR with noise taken only in the LO mode:
///
/// `2 (eta e / h nu)^2 (P_LO / n) P_s / [e (eta e / h nu) (P_LO + |gamma|^2 P_s) B]`.
pub fn heterodyne_sql_snr(params: &HeterodyneParams) -> Result<SqlSnr> {
    params.validate()?;
    let gamma_sq = params.overlap_sq()?;
    let responsivity = params.eta_q * ELEMENTARY_CHARGE / (PLANCK * params.nu);
    let signal = 2.0 * responsivity * responsivity * (params.p_lo / params.n_teeth as f64) * params.p_s;
    let noise = ELEMENTARY_CHARGE * responsivity * (params.p_lo + gamma_sq * params.p_s) * params.bandwidth;
    let linear = signal / noise;
    Ok(SqlSnr {
        gamma_sq,
        linear,
        db: to_db(linear),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSweepRow {
    pub gamma: f64,
    pub snr_conventional_db: f64,
    pub snr_achievable_db: f64,
    pub snr_ideal_db: f64,
    /// Achievable SNR over the unfiltered mismatch SNR, dB.
    pub gain_db: f64,
}

/// Bounds for real overlaps `gammas` at fixed photon numbers, in input order.
pub fn bound_sweep(alpha_sq: f64, beta_sq: f64, gammas: &[f64], eta_f: f64) -> Result<Vec<BoundSweepRow>> {
    let alpha = CoherentAmplitude(Complex64::new(alpha_sq.sqrt(), 0.0));
    let beta = beta_sq.sqrt();
    gammas
        .par_iter()
        .map(|&g| {
            let ov = Overlap::real(g)?;
            let b = bound_ordering(alpha, beta, ov, eta_f)?;
            Ok(BoundSweepRow {
                gamma: g,
                snr_conventional_db: to_db(b.conventional),
                snr_achievable_db: to_db(b.achievable),
                snr_ideal_db: to_db(b.ideal),
                gain_db: filtering_gain_db(alpha_sq / beta_sq, ov, eta_f)?,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: std::io::Write>(rows: &[BoundSweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "gamma,snr_conventional_db,snr_achievable_db,snr_ideal_db,gain_db")?;
    for r in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.gamma, r.snr_conventional_db, r.snr_achievable_db, r.snr_ideal_db, r.gain_db
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::gram_schmidt;

    fn amp(a: f64) -> CoherentAmplitude {
        CoherentAmplitude::real(a)
    }

    #[test]
    fn unfiltered_limits() {
        let g = Overlap::new(Complex64::from_polar(1.0, 0.3)).unwrap();
        let a = CoherentAmplitude(Complex64::new(2.0, -0.5));
        let re = (g.value() * a.value()).re;
        assert!((snr_unfiltered(a, 5.0, g).unwrap() - 4.0 * re * re).abs() < 1e-12);
        assert_eq!(snr_unfiltered(amp(0.0), 5.0, Overlap::real(0.3).unwrap()).unwrap(), 0.0);
        assert_eq!(snr_unfiltered(amp(3.0), 5.0, Overlap::real(0.0).unwrap()).unwrap(), 0.0);
        assert!(snr_unfiltered(amp(3.0), 0.0, Overlap::real(0.5).unwrap()).is_err());
    }

    #[test]
    fn small_overlap_approaches_conventional_form() {
        let g = Overlap::real(1e-4).unwrap();
        let (a, b) = (amp(30.0), 1000.0);
        let conventional = 4.0 * b * b * (1e-4f64 * 30.0).powi(2) / (b * b + 900.0);
        let got = snr_unfiltered(a, b, g).unwrap();
        assert!((got / conventional - 1.0).abs() < 1e-8);
    }

    #[test]
    fn filtered_endpoints() {
        let g = Overlap::real(0.1).unwrap();
        let (a, b) = (amp(40.0), 8.0);
        let conventional = 4.0 * 64.0 * 16.0 / (64.0 + 1600.0);
        assert!((snr_filtered(a, b, g, 1.0).unwrap() - conventional).abs() < 1e-12);
        assert!((snr_filtered(a, b, g, 0.0).unwrap() - 64.0).abs() < 1e-12);
        assert!(snr_filtered(a, b, g, 1.5).is_err());
        assert!(snr_filtered(a, b, g, -0.1).is_err());
    }

    #[test]
    fn fig3_design_point_gain() {
        // |alpha|^2 / |beta|^2 = 2 mW / 100 uW
        let r: f64 = 20.0;
        let oracle = 10.0 * ((1.0 + r * (1.0 - 1e-4)) / (1.0 + r * 1e-3)).log10();
        let got = filtering_gain_db(r, Overlap::real(1e-2).unwrap(), 1e-3).unwrap();
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - 13.0).abs() < 0.5);
    }

    #[test]
    fn gain_vanishes_for_noop_filter() {
        let g = Overlap::real(0.3).unwrap();
        assert!(filtering_gain_db(17.0, g, 1.0 - 0.09).unwrap().abs() < 1e-12);
        assert!(filtering_gain_db(-1.0, g, 0.5).is_err());
    }

    #[test]
    fn tophat_cases() {
        let t = tophat_filtered_snr(amp(3.0), 50.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!((t.eta_lo, t.eta_s, t.gamma), (1.0, 1.0, 1.0));
        let unf = snr_unfiltered(amp(3.0), 50.0, Overlap::real(1.0).unwrap()).unwrap();
        assert!((t.snr - 4.0 * 2500.0 * 9.0 / (2500.0 + 9.0)).abs() < 1e-9);
        assert!((t.snr_large_lo - unf).abs() < 1e-12);

        let t = tophat_filtered_snr(amp(3.0), 50.0, 0.2, 0.4, 1.0).unwrap();
        assert!((t.eta_lo - 0.25).abs() < 1e-15);
        assert!((t.eta_s - 0.5).abs() < 1e-15);

        // eta_lo = 1/2 doubles the ideal bound
        let t = tophat_filtered_snr(amp(3.0), 50.0, 0.5, 0.75, 1.0).unwrap();
        let ideal = 4.0 * (t.gamma * 3.0).powi(2);
        assert!((t.eta_lo - 0.5).abs() < 1e-15);
        assert!((t.snr_large_lo / ideal - 2.0).abs() < 1e-12);

        assert!(tophat_filtered_snr(amp(3.0), 50.0, 0.5, 0.5, 1.0).is_err());
    }

    #[test]
    fn sech_overlap_values() {
        let t = 10e-9;
        assert!((sech_overlap_sq(2.0 * t / (PI * PI), t).unwrap() - 1.0).abs() < 1e-15);
        assert!(sech_overlap_sq(2.1 * t / (PI * PI), t).is_err());
        let tau = sech_tau_from_bandwidth(32e9);
        assert_eq!(tau, 0.315 / (1.76 * 32e9));
        let g2 = sech_overlap_sq(tau, t).unwrap();
        assert!((g2 - 2.76e-3).abs() < 0.01e-3, "{g2}");
    }

    #[test]
    fn design_filter_on_tophat_is_indicator() {
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let lo = make_mode(&ModeKind::Tophat { t0: 0.3, t1: 0.6, phase: 0.2 }, grid).unwrap();
        let f = design_filter(&lo, 0.0, grid.dt()).unwrap();
        assert!(f.lo_preserving());
        assert_eq!(f.excluded_lo_fraction(), 0.0);
        assert!(f.lo_residual(&lo).unwrap() <= 1e-8);
        for (t, w) in grid.times().zip(f.weights()) {
            assert_eq!(*w, if t > 0.3 && t < 0.6 { 1.0 } else { 0.0 });
        }
        // CW signal: eta_f is the off-LO share of xi_perp
        let s = make_mode(&ModeKind::Cw { phase: 0.0 }, grid).unwrap();
        let basis = gram_schmidt(&lo, &s).unwrap();
        assert!(eta_f_of(&f, basis.xi_perp()).unwrap() < 1e-12);
    }

    #[test]
    fn design_filter_reports_excess_exclusion() {
        let grid = TimeGrid::new(1.0, 4096).unwrap();
        let lo = make_mode(&ModeKind::GaussianRoot { center: 0.5, sigma: 0.02, phase: 0.0 }, grid).unwrap();
        let f = design_filter(&lo, 1e-3, grid.dt()).unwrap();
        assert!(f.excluded_lo_fraction() > 1e-3);
        assert!(!f.lo_preserving());
        assert!(design_filter(&lo, 1.0, grid.dt()).is_err());
        assert!(design_filter(&lo, 0.1, 0.0).is_err());
    }

    #[test]
    fn eta_f_trivial_filters() {
        let grid = TimeGrid::new(1.0, 512).unwrap();
        let lo = make_mode(&ModeKind::Tophat { t0: 0.0, t1: 0.25, phase: 0.0 }, grid).unwrap();
        let s = make_mode(&ModeKind::Tophat { t0: 0.5, t1: 1.0, phase: 0.0 }, grid).unwrap();
        let basis = gram_schmidt(&lo, &s).unwrap();
        let all = FilterSpec::constant(grid, 1.0);
        assert!((eta_f_of(&all, basis.xi_perp()).unwrap() - 1.0).abs() < 1e-12);
        let gate = design_filter(&lo, 0.0, grid.dt()).unwrap();
        assert_eq!(eta_f_of(&gate, basis.xi_perp()).unwrap(), 0.0);
        let other = FilterSpec::constant(TimeGrid::new(1.0, 256).unwrap(), 1.0);
        assert!(eta_f_of(&other, basis.xi_perp()).is_err());
    }

    #[test]
    fn gaussian_gate_matches_cw_estimate() {
        // direct quadrature oracle: a +/-5 sigma gate around the LO pulse
        let t = 1.0;
        let sigma = 2e-3;
        let grid = TimeGrid::new(t, 1 << 16).unwrap();
        let lo = make_mode(&ModeKind::GaussianRoot { center: 0.5, sigma, phase: 0.0 }, grid).unwrap();
        let s = make_mode(&ModeKind::Cw { phase: 0.0 }, grid).unwrap();
        let basis = gram_schmidt(&lo, &s).unwrap();
        let gate = gaussian_gate(&lo, 0.5, sigma, 5.0).unwrap();
        let eta = eta_f_of(&gate, basis.xi_perp()).unwrap();
        let estimate = eta_f_cw_estimate(5.0, sigma, t);
        assert!((eta / estimate - 1.0).abs() < 0.05, "{eta} vs {estimate}");
    }

    #[test]
    fn heterodyne_rejects_bad_params() {
        let mut p = HeterodyneParams {
            nu: 193e12,
            t_rep: 10e-9,
            delta_nu: 32e9,
            eta_q: 0.76,
            p_lo: 6e-9,
            p_s: 2.8e-3,
            n_teeth: 320,
            bandwidth: 170e3,
            profile: PulseProfile::Sech,
            gamma_sq: None,
        };
        assert!(heterodyne_sql_snr(&p).is_ok());
        p.eta_q = 1.2;
        assert!(heterodyne_sql_snr(&p).is_err());
        p.eta_q = 0.76;
        p.n_teeth = 0;
        assert!(heterodyne_sql_snr(&p).is_err());
    }

    #[test]
    fn heterodyne_override_and_scaling() {
        let p = HeterodyneParams {
            nu: 193e12,
            t_rep: 10e-9,
            delta_nu: 32e9,
            eta_q: 0.5,
            p_lo: 1e-6,
            p_s: 1e-3,
            n_teeth: 100,
            bandwidth: 1e5,
            profile: PulseProfile::Gaussian,
            gamma_sq: Some(0.0),
        };
        let r = heterodyne_sql_snr(&p).unwrap();
        // with no signal shot noise: 2 eta (P_LO / n) P_s / (h nu P_LO B)
        let want = 2.0 * 0.5 * 1e-3 / (100.0 * PLANCK * 193e12 * 1e5);
        assert!((r.linear / want - 1.0).abs() < 1e-12);
        assert_eq!(r.gamma_sq, 0.0);
    }

    #[test]
    fn sweep_rows_in_order() {
        let gammas = [1e-4, 1e-2, 0.5, 0.999];
        let rows = bound_sweep(2e5, 1e4, &gammas, 1e-3).unwrap();
        assert_eq!(rows.iter().map(|r| r.gamma).collect::<Vec<_>>(), gammas);
        for r in &rows {
            assert!(r.snr_conventional_db <= r.snr_achievable_db + 1e-12);
            assert!(r.snr_achievable_db <= r.snr_ideal_db + 1e-12);
        }
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }
}
