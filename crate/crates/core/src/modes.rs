//! Temporal mode functions sampled on a uniform grid over the detection
//! interval `(0, T)`.
//!
//! Every mode is stored as midpoint samples `xi_k = xi((k + 1/2) dt)` so that
//! the inner product is the rectangle rule `sum_k conj(f_k) g_k dt`. The same
//! bins are reused by the click sampler, which keeps the mode model and the
//! detector model on identical discretizations.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};

/// Norm loss above which a pulse counts as clipped by the interval edges.
pub const CLIP_TOLERANCE: f64 = 1e-6;

/// Gram-Schmidt refuses overlaps with `|gamma| >= 1 - MATCH_EPSILON`.
pub const MATCH_EPSILON: f64 = 1e-6;

const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_end: f64,
    n_points: usize,
}

impl TimeGrid {
    pub const DEFAULT_POINTS: usize = 4096;

    pub fn new(t_end: f64, n_points: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::invalid("t_end", format!("must be positive, got {t_end}")));
        }
        if n_points < 2 {
            return Err(Error::invalid("n_points", format!("need at least 2, got {n_points}")));
        }
        Ok(Self { t_end, n_points })
    }

    pub fn t_start(&self) -> f64 {
        0.0
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_points as f64
    }

    /// Midpoint of bin `k`.
    pub fn time(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dt()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |k| self.time(k))
    }

    /// Grid with `factor` adjacent bins merged into one.
    pub fn coarsen(&self, factor: usize) -> Result<TimeGrid> {
        if factor == 0 || !self.n_points.is_multiple_of(factor) {
            return Err(Error::invalid(
                "factor",
                format!("{factor} does not divide {} bins", self.n_points),
            ));
        }
        TimeGrid::new(self.t_end, self.n_points / factor)
    }

    pub(crate) fn ensure_same(&self, other: &TimeGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }
}

impl std::fmt::Display for TimeGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(0, {:e}) with {} bins", self.t_end, self.n_points)
    }
}

/// Pulse envelope used by pulse trains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum PulseShape {
    /// `sqrt` of a normal density with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// `sech(t / tau) / sqrt(2 tau)`.
    Sech { tau: f64 },
}

impl PulseShape {
    fn amplitude(&self, dt: f64) -> f64 {
        match *self {
            PulseShape::Gaussian { sigma } => {
                (2.0 * PI * sigma * sigma).powf(-0.25) * (-dt * dt / (4.0 * sigma * sigma)).exp()
            }
            PulseShape::Sech { tau } => 1.0 / ((dt / tau).cosh() * (2.0 * tau).sqrt()),
        }
    }

    /// Fraction of `|xi|^2` lying inside `(lo, hi)` relative to the center.
    fn contained(&self, lo: f64, hi: f64) -> f64 {
        match *self {
            PulseShape::Gaussian { sigma } => {
                let s = sigma * std::f64::consts::SQRT_2;
                0.5 * (erf(hi / s) - erf(lo / s))
            }
            PulseShape::Sech { tau } => 0.5 * ((hi / tau).tanh() - (lo / tau).tanh()),
        }
    }

    fn validate(&self) -> Result<()> {
        let (name, w) = match *self {
            PulseShape::Gaussian { sigma } => ("sigma", sigma),
            PulseShape::Sech { tau } => ("tau", tau),
        };
        if w.is_finite() && w > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(name, format!("pulse width must be positive, got {w}")))
        }
    }
}

/// Mode definitions as they appear in experiment configs: `{kind, params}`.
///
/// `GaussianRoot` takes `sigma` as the standard deviation of the intensity
/// profile `|xi|^2`; the field amplitude itself has width `sqrt(2) sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum ModeKind {
    Cw {
        #[serde(default)]
        phase: f64,
    },
    GaussianRoot {
        center: f64,
        sigma: f64,
        #[serde(default)]
        phase: f64,
    },
    SechRoot {
        center: f64,
        tau: f64,
        #[serde(default)]
        phase: f64,
    },
    Tophat {
        t0: f64,
        t1: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Pulses centered at `(m + 1/2) period`, one per period of the interval.
    PulseTrain {
        pulse: PulseShape,
        period: f64,
        #[serde(default)]
        phases: Vec<f64>,
    },
    /// Raw `(re, im)` samples, one per bin; normalized on construction.
    Samples { values: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemporalMode {
    grid: TimeGrid,
    samples: Vec<Complex64>,
    clipped_norm: f64,
}

impl TemporalMode {
    /// Normalizes `samples` so that `sum |xi_k|^2 dt = 1`.
    pub fn from_samples(grid: TimeGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(Error::invalid(
                "samples",
                format!("expected {} samples, got {}", grid.n_points(), samples.len()),
            ));
        }
        if samples.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("samples", "non-finite sample"));
        }
        let norm_sq: f64 = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dt();
        if norm_sq.is_nan() || norm_sq <= f64::MIN_POSITIVE {
            return Err(Error::Unnormalizable);
        }
        let scale = norm_sq.sqrt().recip();
        Ok(Self {
            grid,
            samples: samples.into_iter().map(|z| z * scale).collect(),
            clipped_norm: 0.0,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// Fraction of the analytic pulse norm that falls outside `(0, T)`.
    pub fn clipped_norm(&self) -> f64 {
        self.clipped_norm
    }

    pub fn is_clipped(&self) -> bool {
        self.clipped_norm > CLIP_TOLERANCE
    }

    pub fn norm_sqr(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dt()
    }

    /// Copy multiplied by the global phase `e^{i theta}`.
    pub fn with_global_phase(&self, theta: f64) -> TemporalMode {
        let rot = Complex64::from_polar(1.0, theta);
        TemporalMode {
            grid: self.grid,
            samples: self.samples.iter().map(|z| z * rot).collect(),
            clipped_norm: self.clipped_norm,
        }
    }

    /// Grid L2 distance `||self - other||`.
    pub fn distance(&self, other: &TemporalMode) -> Result<f64> {
        self.grid.ensure_same(&other.grid)?;
        let sq: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((sq * self.grid.dt()).sqrt())
    }
}

/// `<f, g> = sum_k conj(f_k) g_k dt`.
pub fn inner_product(f: &TemporalMode, g: &TemporalMode) -> Result<Complex64> {
    f.grid.ensure_same(&g.grid)?;
    let sum: Complex64 = f
        .samples
        .iter()
        .zip(&g.samples)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(sum * f.grid.dt())
}

pub fn make_mode(kind: &ModeKind, grid: TimeGrid) -> Result<TemporalMode> {
    let t_end = grid.t_end();
    let (samples, clipped_norm) = match kind {
        ModeKind::Cw { phase } => {
            let z = Complex64::from_polar(1.0, *phase);
            (vec![z; grid.n_points()], 0.0)
        }
        ModeKind::GaussianRoot { center, sigma, phase } => {
            let shape = PulseShape::Gaussian { sigma: *sigma };
            single_pulse(&grid, shape, *center, *phase)?
        }
        ModeKind::SechRoot { center, tau, phase } => {
            let shape = PulseShape::Sech { tau: *tau };
            single_pulse(&grid, shape, *center, *phase)?
        }
        ModeKind::Tophat { t0, t1, phase } => {
            if !(0.0 <= *t0 && t0 < t1 && *t1 <= t_end) {
                return Err(Error::invalid(
                    "tophat",
                    format!("need 0 <= t0 < t1 <= T, got t0 = {t0}, t1 = {t1}, T = {t_end}"),
                ));
            }
            let z = Complex64::from_polar(1.0, *phase);
            let samples = grid
                .times()
                .map(|t| if t > *t0 && t < *t1 { z } else { Complex64::new(0.0, 0.0) })
                .collect();
            (samples, 0.0)
        }
        ModeKind::PulseTrain { pulse, period, phases } => {
            pulse.validate()?;
            let count = t_end / period;
            let n_pulses = count.round();
            if !(period.is_finite() && *period > 0.0) || n_pulses < 1.0 || (count - n_pulses).abs() > 1e-9 * count
            {
                return Err(Error::invalid(
                    "period",
                    format!("repetition period {period} must divide T = {t_end}"),
                ));
            }
            let n_pulses = n_pulses as usize;
            if !phases.is_empty() && phases.len() != n_pulses {
                return Err(Error::invalid(
                    "phases",
                    format!("expected {n_pulses} per-pulse phases, got {}", phases.len()),
                ));
            }
            let centers: Vec<f64> = (0..n_pulses).map(|m| (m as f64 + 0.5) * period).collect();
            let rotations: Vec<Complex64> = (0..n_pulses)
                .map(|m| Complex64::from_polar(1.0, phases.get(m).copied().unwrap_or(0.0)))
                .collect();
            let samples = grid
                .times()
                .map(|t| {
                    centers
                        .iter()
                        .zip(&rotations)
                        .map(|(c, r)| r * pulse.amplitude(t - c))
                        .sum::<Complex64>()
                })
                .collect();
            let clipped = centers
                .iter()
                .map(|c| 1.0 - pulse.contained(-c, t_end - c))
                .sum::<f64>()
                / n_pulses as f64;
            (samples, clipped)
        }
        ModeKind::Samples { values } => (
            values.iter().map(|[re, im]| Complex64::new(*re, *im)).collect(),
            0.0,
        ),
    };
    let mut mode = TemporalMode::from_samples(grid, samples)?;
    mode.clipped_norm = clipped_norm.max(0.0);
    Ok(mode)
}

fn single_pulse(grid: &TimeGrid, shape: PulseShape, center: f64, phase: f64) -> Result<(Vec<Complex64>, f64)> {
    shape.validate()?;
    if !center.is_finite() {
        return Err(Error::invalid("center", "must be finite"));
    }
    let rot = Complex64::from_polar(1.0, phase);
    let samples = grid.times().map(|t| rot * shape.amplitude(t - center)).collect();
    let clipped = 1.0 - shape.contained(-center, grid.t_end() - center);
    Ok((samples, clipped))
}

/// Complex mode overlap `gamma = <xi_LO, xi_S>` with `|gamma| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap(Complex64);

impl Overlap {
    pub fn new(gamma: Complex64) -> Result<Self> {
        let mag = gamma.norm();
        if !mag.is_finite() || mag > 1.0 + 1e-12 {
            return Err(Error::invalid("gamma", format!("|gamma| = {mag} exceeds 1")));
        }
        if mag > 1.0 {
            return Ok(Self(gamma / mag));
        }
        Ok(Self(gamma))
    }

    pub fn real(gamma: f64) -> Result<Self> {
        Self::new(Complex64::new(gamma, 0.0))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_sqr()
    }

    /// `sqrt(1 - |gamma|^2)`, the amplitude weight of the perpendicular mode.
    pub fn perp_weight(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0).sqrt()
    }
}

/// Orthonormal pair `(xi_LO, xi_perp)` spanning the signal mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    xi_lo: TemporalMode,
    xi_perp: TemporalMode,
    gamma: Complex64,
}

impl ModeBasis {
    pub fn xi_lo(&self) -> &TemporalMode {
        &self.xi_lo
    }

    pub fn xi_perp(&self) -> &TemporalMode {
        &self.xi_perp
    }

    pub fn gamma(&self) -> Complex64 {
        self.gamma
    }

    pub fn overlap(&self) -> Overlap {
        Overlap(self.gamma)
    }

    pub fn grid(&self) -> &TimeGrid {
        self.xi_lo.grid()
    }

    /// `xi_S` rebuilt as `gamma xi_LO + sqrt(1 - |gamma|^2) xi_perp`.
    pub fn reconstruct_signal(&self) -> TemporalMode {
        let w = self.overlap().perp_weight();
        let samples = self
            .xi_lo
            .samples
            .iter()
            .zip(&self.xi_perp.samples)
            .map(|(lo, perp)| self.gamma * lo + perp * w)
            .collect();
        TemporalMode {
            grid: self.xi_lo.grid,
            samples,
            clipped_norm: 0.0,
        }
    }
}

/// Builds `xi_perp = (xi_S - gamma xi_LO) / sqrt(1 - |gamma|^2)`.
pub fn gram_schmidt(xi_lo: &TemporalMode, xi_s: &TemporalMode) -> Result<ModeBasis> {
    for mode in [xi_lo, xi_s] {
        let n = mode.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::invalid("mode", format!("not normalized: norm^2 = {n}")));
        }
    }
    let gamma = inner_product(xi_lo, xi_s)?;
    let mag = gamma.norm();
    if mag >= 1.0 - MATCH_EPSILON {
        return Err(Error::ModeMatched { magnitude: mag });
    }
    let scale = (1.0 - gamma.norm_sqr()).sqrt().recip();
    let samples = xi_s
        .samples
        .iter()
        .zip(&xi_lo.samples)
        .map(|(s, lo)| (s - gamma * lo) * scale)
        .collect();
    let xi_perp = TemporalMode {
        grid: xi_lo.grid,
        samples,
        clipped_norm: 0.0,
    };
    Ok(ModeBasis {
        xi_lo: xi_lo.clone(),
        xi_perp,
        gamma,
    })
}
