//! Probability law of the scaled difference variable `x = (n - m) / (sqrt(2) beta)`.
//!
//! The total POVM is a convolution of a quadrature measurement in `xi_LO` with
//! an intensity-like measurement in `xi_perp`, so every distribution here is
//! built as `lo_law (*) perp_law`:
//!
//! * the LO-mode law is a quadrature density (normal for coherent input,
//!   squared Hermite functions for Fock input);
//! * the perpendicular-mode law is a symmetric lattice of atoms at
//!   `(2j - w) / (sqrt(2) beta)` with binomial weights, or its Gaussian limit
//!   once the mode holds enough photons.

use std::f64::consts::{PI, SQRT_2};
use std::io::{self, Write};

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::modes::Overlap;
use crate::states::{decompose_coherent, decompose_fock, CoherentAmplitude, DEFAULT_FOCK_CUTOFF};

/// Coherent perpendicular laws switch from exact atoms to the Gaussian limit
/// at `|alpha_perp|^2 >= GAUSSIAN_THRESHOLD`.
pub const GAUSSIAN_THRESHOLD: f64 = 100.0;

/// Poisson tail mass dropped when expanding a coherent perpendicular law.
pub const POISSON_TAIL: f64 = 1e-12;

/// Atoms lighter than this do not widen the required x range.
const NEGLIGIBLE_WEIGHT: f64 = 1e-15;

/// Distance past the classical turning point where a Fock density is
/// treated as zero.
const FOCK_TAIL_MARGIN: f64 = 4.0;

/// Half-width, in standard deviations, that a grid must cover.
const COVER_SIGMAS: f64 = 8.0;

/// Uniform grid `min, min + dx, ..., max` for the difference variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XGrid {
    min: f64,
    max: f64,
    n_points: usize,
}

impl Default for XGrid {
    fn default() -> Self {
        Self {
            min: -8.0,
            max: 8.0,
            n_points: 4096,
        }
    }
}

impl XGrid {
    pub fn new(min: f64, max: f64, n_points: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::invalid("x_grid", format!("need min < max, got [{min}, {max}]")));
        }
        if n_points < 3 {
            return Err(Error::invalid("x_grid", "need at least 3 points"));
        }
        Ok(Self { min, max, n_points })
    }

    /// Default grid widened so that it contains `[lo, hi]`.
    pub fn covering(lo: f64, hi: f64) -> Self {
        let d = Self::default();
        Self {
            min: d.min.min(lo),
            max: d.max.max(hi),
            n_points: d.n_points,
        }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dx(&self) -> f64 {
        (self.max - self.min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.max
        } else {
            self.min + i as f64 * self.dx()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    /// Trapezoid rule over the grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_points);
        let inner: f64 = values[1..values.len() - 1].iter().sum();
        self.dx() * (inner + 0.5 * (values[0] + values[values.len() - 1]))
    }

    fn ensure_covers(&self, lo: f64, hi: f64) -> Result<()> {
        if lo < self.min || hi > self.max {
            Err(Error::GridCoverage {
                min: self.min,
                max: self.max,
                need_min: lo,
                need_max: hi,
            })
        } else {
            Ok(())
        }
    }
}

/// Point mass of a discrete law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// State of the LO mode as seen by the quadrature measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoModeState {
    /// Coherent amplitude `gamma alpha` (LO phase already folded in).
    Coherent(Complex64),
    Fock(usize),
}

/// State of the perpendicular mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerpModeState {
    Coherent(Complex64),
    Fock(usize),
}

/// Quadrature law of `Q(xi_LO) = (A + A^dag) / sqrt(2)`; vacuum variance 1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureLaw {
    Normal { mean: f64, variance: f64 },
    Fock { n: usize },
}

impl QuadratureLaw {
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            QuadratureLaw::Normal { mean, variance } => normal_pdf(x, mean, variance),
            QuadratureLaw::Fock { n } => {
                let psi = hermite_function(n, x);
                psi * psi
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            QuadratureLaw::Normal { mean, .. } => mean,
            QuadratureLaw::Fock { .. } => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            QuadratureLaw::Normal { variance, .. } => variance,
            QuadratureLaw::Fock { n } => n as f64 + 0.5,
        }
    }

    /// Interval outside which the density is negligible.
    fn support(&self) -> (f64, f64) {
        match *self {
            QuadratureLaw::Normal { mean, variance } => {
                let h = COVER_SIGMAS * variance.sqrt();
                (mean - h, mean + h)
            }
            QuadratureLaw::Fock { n } => {
                // classical turning point plus a tail margin
                let h = (2.0 * n as f64 + 1.0).sqrt() + FOCK_TAIL_MARGIN;
                (-h, h)
            }
        }
    }

    /// Smallest length scale of the density.
    fn resolution(&self) -> f64 {
        match *self {
            QuadratureLaw::Normal { variance, .. } => variance.sqrt(),
            QuadratureLaw::Fock { n } => 0.5 / (n as f64 + 1.0).sqrt(),
        }
    }
}

pub fn lo_quadrature_law(state: LoModeState) -> QuadratureLaw {
    match state {
        LoModeState::Coherent(a) => QuadratureLaw::Normal {
            mean: SQRT_2 * a.re,
            variance: 0.5,
        },
        LoModeState::Fock(n) => QuadratureLaw::Fock { n },
    }
}

pub fn lo_quadrature_pdf(state: LoModeState, grid: &XGrid) -> Vec<f64> {
    let law = lo_quadrature_law(state);
    grid.points().map(|x| law.pdf(x)).collect()
}

/// Law of the perpendicular-mode contribution `v` to `x`. Mean zero in every
/// representation.
#[derive(Debug, Clone, PartialEq)]
pub enum PerpLaw {
    Atoms(Vec<Atom>),
    Gaussian { variance: f64 },
}

impl PerpLaw {
    pub fn mean(&self) -> f64 {
        match self {
            PerpLaw::Atoms(atoms) => atoms.iter().map(|a| a.location * a.weight).sum(),
            PerpLaw::Gaussian { .. } => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            PerpLaw::Atoms(atoms) => {
                let m = self.mean();
                atoms.iter().map(|a| (a.location - m).powi(2) * a.weight).sum()
            }
            PerpLaw::Gaussian { variance } => *variance,
        }
    }

    pub fn total_weight(&self) -> f64 {
        match self {
            PerpLaw::Atoms(atoms) => atoms.iter().map(|a| a.weight).sum(),
            PerpLaw::Gaussian { .. } => 1.0,
        }
    }

    fn extent(&self) -> f64 {
        match self {
            PerpLaw::Atoms(atoms) => atoms
                .iter()
                .filter(|a| a.weight > NEGLIGIBLE_WEIGHT)
                .map(|a| a.location.abs())
                .fold(0.0, f64::max),
            PerpLaw::Gaussian { variance } => COVER_SIGMAS * variance.sqrt(),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta.is_finite() && beta > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("beta", format!("LO amplitude must be positive, got {beta}")))
    }
}

/// Atoms of `w` perpendicular photons split 50/50 over the two detectors:
/// `v = (2j - w) / (sqrt(2) beta)` with weight `C(w, j) / 2^w`.
pub fn binomial_atoms(w: usize, beta: f64) -> Result<Vec<Atom>> {
    check_beta(beta)?;
    let scale = 1.0 / (SQRT_2 * beta);
    let ln_half_w = w as f64 * std::f64::consts::LN_2;
    Ok((0..=w)
        .map(|j| Atom {
            location: (2.0 * j as f64 - w as f64) * scale,
            weight: (ln_binomial(w, j) - ln_half_w).exp(),
        })
        .collect())
}

/// Exact lattice law of a coherent perpendicular mode: Poisson mixture over
/// the photon number `w` of the binomial atoms, truncated at tail mass
/// [`POISSON_TAIL`].
pub fn coherent_atoms(alpha_perp: Complex64, beta: f64) -> Result<Vec<Atom>> {
    check_beta(beta)?;
    let lambda = alpha_perp.norm_sqr();
    if lambda == 0.0 {
        return Ok(vec![Atom { location: 0.0, weight: 1.0 }]);
    }
    let ln_lambda = lambda.ln();
    let mut pmf = Vec::new();
    let mut cumulative = 0.0;
    let mut w = 0usize;
    loop {
        let p = (w as f64 * ln_lambda - lambda - ln_gamma(w as f64 + 1.0)).exp();
        pmf.push(p);
        cumulative += p;
        if w as f64 > lambda && 1.0 - cumulative < POISSON_TAIL {
            break;
        }
        w += 1;
    }
    let w_max = pmf.len() - 1;
    // index k + w_max holds the atom at k / (sqrt(2) beta), k = r - s
    let mut weights = vec![0.0; 2 * w_max + 1];
    for (w, p) in pmf.iter().enumerate() {
        let ln_half_w = w as f64 * std::f64::consts::LN_2;
        for j in 0..=w {
            let k = 2 * j + w_max - w;
            weights[k] += p * (ln_binomial(w, j) - ln_half_w).exp();
        }
    }
    let scale = 1.0 / (SQRT_2 * beta);
    Ok(weights
        .into_iter()
        .enumerate()
        .filter(|(_, wt)| *wt > 0.0)
        .map(|(k, weight)| Atom {
            location: (k as f64 - w_max as f64) * scale,
            weight,
        })
        .collect())
}

pub fn perp_law(state: PerpModeState, beta: f64) -> Result<PerpLaw> {
    check_beta(beta)?;
    match state {
        PerpModeState::Fock(w) => binomial_atoms(w, beta).map(PerpLaw::Atoms),
        PerpModeState::Coherent(a) => {
            let photons = a.norm_sqr();
            if photons >= GAUSSIAN_THRESHOLD {
                Ok(PerpLaw::Gaussian {
                    variance: photons / (2.0 * beta * beta),
                })
            } else {
                coherent_atoms(a, beta).map(PerpLaw::Atoms)
            }
        }
    }
}

/// Mixed continuous/atomic law over `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DifferenceDistribution {
    grid: XGrid,
    density: Vec<f64>,
    atoms: Vec<Atom>,
    beta: f64,
    source: String,
    large_lo_violated: bool,
}

impl DifferenceDistribution {
    fn continuous(grid: XGrid, density: Vec<f64>, beta: f64, source: impl Into<String>) -> Self {
        Self {
            grid,
            density,
            atoms: Vec::new(),
            beta,
            source: source.into(),
            large_lo_violated: false,
        }
    }

    pub fn grid(&self) -> &XGrid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Set when `|beta|^2 < 10 |gamma alpha|^2`, outside the strong-LO regime
    /// the quadrature law assumes.
    pub fn large_lo_violated(&self) -> bool {
        self.large_lo_violated
    }

    pub fn total_mass(&self) -> f64 {
        self.grid.integrate(&self.density) + self.atoms.iter().map(|a| a.weight).sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        let xs: Vec<f64> = self.grid.points().zip(&self.density).map(|(x, p)| x * p).collect();
        self.grid.integrate(&xs) + self.atoms.iter().map(|a| a.location * a.weight).sum::<f64>()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let xs: Vec<f64> = self
            .grid
            .points()
            .zip(&self.density)
            .map(|(x, p)| (x - m).powi(2) * p)
            .collect();
        self.grid.integrate(&xs) + self.atoms.iter().map(|a| (a.location - m).powi(2) * a.weight).sum::<f64>()
    }

    /// L1 distance between the continuous parts on a shared grid.
    pub fn l1_distance(&self, other: &DifferenceDistribution) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::invalid("grid", "distributions live on different x grids"));
        }
        let diff: Vec<f64> = self
            .density
            .iter()
            .zip(&other.density)
            .map(|(a, b)| (a - b).abs())
            .collect();
        Ok(self.grid.integrate(&diff))
    }

    /// `x,density` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,density")?;
        for (x, p) in self.grid.points().zip(&self.density) {
            writeln!(out, "{x:.16e},{p:.16e}")?;
        }
        Ok(())
    }

    /// Atoms and metadata that do not fit the CSV table.
    pub fn sidecar(&self) -> DistributionSidecar<'_> {
        DistributionSidecar {
            source: &self.source,
            beta: self.beta,
            x_min: self.grid.min,
            x_max: self.grid.max,
            n_points: self.grid.n_points,
            atoms: &self.atoms,
            total_mass: self.total_mass(),
            mean: self.mean(),
            variance: self.variance(),
            large_lo_violated: self.large_lo_violated,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DistributionSidecar<'a> {
    pub source: &'a str,
    pub beta: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    pub atoms: &'a [Atom],
    pub total_mass: f64,
    pub mean: f64,
    pub variance: f64,
    pub large_lo_violated: bool,
}

/// `lo (*) perp` evaluated on `grid`.
///
/// Atoms shift the LO density exactly. A Gaussian kernel is integrated with
/// the trapezoid rule over whichever factor is narrower, at one eighth of its
/// length scale.
pub fn convolve(lo: &QuadratureLaw, perp: &PerpLaw, grid: &XGrid, beta: f64) -> Result<DifferenceDistribution> {
    check_beta(beta)?;
    let (lo_min, lo_max) = lo.support();
    let ext = perp.extent();
    match perp {
        PerpLaw::Atoms(_) => grid.ensure_covers(lo_min - ext, lo_max + ext)?,
        PerpLaw::Gaussian { .. } => {
            // widths of independent smooth factors add in quadrature
            let c = 0.5 * (lo_min + lo_max);
            let h = (0.25 * (lo_max - lo_min).powi(2) + ext * ext).sqrt();
            grid.ensure_covers(c - h, c + h)?
        }
    }

    let density = match perp {
        PerpLaw::Atoms(atoms) => grid
            .points()
            .map(|x| atoms.iter().map(|a| a.weight * lo.pdf(x - a.location)).sum())
            .collect(),
        PerpLaw::Gaussian { variance } => gaussian_smear(lo, *variance, grid),
    };
    Ok(DifferenceDistribution::continuous(*grid, density, beta, "convolution"))
}

fn gaussian_smear(lo: &QuadratureLaw, variance: f64, grid: &XGrid) -> Vec<f64> {
    if variance == 0.0 {
        return grid.points().map(|x| lo.pdf(x)).collect();
    }
    let sigma = variance.sqrt();
    if sigma <= lo.resolution() {
        // integrate over the kernel variable
        let h = sigma / 8.0;
        let half = (12.0 * sigma / h).ceil() as i64;
        let nodes: Vec<(f64, f64)> = (-half..=half)
            .map(|k| {
                let v = k as f64 * h;
                (v, normal_pdf(v, 0.0, variance) * h)
            })
            .collect();
        grid.points()
            .map(|x| nodes.iter().map(|(v, w)| w * lo.pdf(x - v)).sum())
            .collect()
    } else {
        // integrate over the LO variable; lo(u_k) is shared by every x
        let h = lo.resolution() / 8.0;
        let (a, b) = lo.support();
        let n = ((b - a) / h).ceil() as usize;
        let h = (b - a) / n as f64;
        let nodes: Vec<(f64, f64)> = (0..=n)
            .map(|k| {
                let u = a + k as f64 * h;
                (u, lo.pdf(u) * h)
            })
            .collect();
        grid.points()
            .map(|x| nodes.iter().map(|(u, w)| w * normal_pdf(x - u, 0.0, variance)).sum())
            .collect()
    }
}

/// Closed-form law for a coherent signal:
/// `N(sqrt(2) Re(gamma alpha), 1/2 + |alpha|^2 (1 - |gamma|^2) / (2 beta^2))`.
pub fn coherent_total_pdf(
    alpha: CoherentAmplitude,
    beta: f64,
    overlap: Overlap,
    grid: Option<XGrid>,
) -> Result<DifferenceDistribution> {
    check_beta(beta)?;
    let (mean, variance) = coherent_moments(alpha, beta, overlap);
    let h = COVER_SIGMAS * variance.sqrt();
    let grid = grid.unwrap_or_else(|| XGrid::covering(mean - h, mean + h));
    let density = grid.points().map(|x| normal_pdf(x, mean, variance)).collect();
    let mut dist = DifferenceDistribution::continuous(grid, density, beta, "coherent closed form");
    dist.large_lo_violated = beta * beta < 10.0 * (overlap.value() * alpha.value()).norm_sqr();
    Ok(dist)
}

/// Mean and variance of the closed-form coherent law.
pub fn coherent_moments(alpha: CoherentAmplitude, beta: f64, overlap: Overlap) -> (f64, f64) {
    let a = alpha.value();
    let mean = SQRT_2 * (overlap.value() * a).re;
    let variance = 0.5 + a.norm_sqr() * (1.0 - overlap.norm_sqr()) / (2.0 * beta * beta);
    (mean, variance)
}

/// Coherent law assembled from its parts: decompose, per-mode laws, convolve.
pub fn coherent_pipeline_pdf(
    alpha: CoherentAmplitude,
    beta: f64,
    overlap: Overlap,
    grid: Option<XGrid>,
) -> Result<DifferenceDistribution> {
    let parts = decompose_coherent(alpha, overlap);
    let lo = lo_quadrature_law(LoModeState::Coherent(parts.alpha_lo));
    let perp = perp_law(PerpModeState::Coherent(parts.alpha_perp), beta)?;
    let grid = grid.unwrap_or_else(|| {
        let (a, b) = lo.support();
        let e = perp.extent();
        XGrid::covering(a - e, b + e)
    });
    let mut dist = convolve(&lo, &perp, &grid, beta)?;
    dist.source = "coherent pipeline".into();
    dist.large_lo_violated = beta * beta < 10.0 * parts.alpha_lo.norm_sqr();
    Ok(dist)
}

/// Single-photon signal:
/// `P(x) = [4|g|^2 x^2 e^{-x^2} + (1-|g|^2)(e^{-(x-d)^2} + e^{-(x+d)^2})] / (2 sqrt(pi))`
/// with `d = 1 / (sqrt(2) beta)`.
pub fn single_photon_pdf(overlap: Overlap, beta: f64, grid: Option<XGrid>) -> Result<DifferenceDistribution> {
    check_beta(beta)?;
    let d = 1.0 / (SQRT_2 * beta);
    let reach = d + QuadratureLaw::Fock { n: 1 }.support().1;
    let grid = grid.unwrap_or_else(|| XGrid::covering(-reach, reach));
    let g2 = overlap.norm_sqr();
    let norm = 1.0 / (2.0 * PI.sqrt());
    let density = grid
        .points()
        .map(|x| {
            norm * (4.0 * g2 * x * x * (-x * x).exp()
                + (1.0 - g2) * ((-(x - d).powi(2)).exp() + (-(x + d).powi(2)).exp()))
        })
        .collect();
    Ok(DifferenceDistribution::continuous(grid, density, beta, "single photon closed form"))
}

/// Fock signal `|n>` in `xi_S`: sum over the diagonal branches
/// `|c_j|^2 (Fock-j quadrature law (*) binomial atoms of n - j photons)`.
/// Cross terms vanish because the perpendicular POVM is diagonal in Fock space.
pub fn fock_total_pdf(n: usize, overlap: Overlap, beta: f64, grid: Option<XGrid>) -> Result<DifferenceDistribution> {
    check_beta(beta)?;
    let state = decompose_fock(n, overlap, DEFAULT_FOCK_CUTOFF)?;
    let reach = QuadratureLaw::Fock { n }.support().1 + n as f64 / (SQRT_2 * beta);
    let grid = grid.unwrap_or_else(|| XGrid::covering(-reach, reach));
    let mut density = vec![0.0; grid.n_points()];
    for (j, k, p) in state.populations() {
        let branch = convolve(&QuadratureLaw::Fock { n: j }, &PerpLaw::Atoms(binomial_atoms(k, beta)?), &grid, beta)?;
        for (acc, d) in density.iter_mut().zip(&branch.density) {
            *acc += p * d;
        }
    }
    Ok(DifferenceDistribution::continuous(grid, density, beta, format!("fock n = {n}")))
}

pub fn normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let z = x - mean;
    (-z * z / (2.0 * variance)).exp() / (2.0 * PI * variance).sqrt()
}

/// Normalized Hermite function `psi_n(x)`, so that `psi_n^2` is the
/// quadrature density `H_n(x)^2 e^{-x^2} / (2^n n! sqrt(pi))`.
pub fn hermite_function(n: usize, x: f64) -> f64 {
    let mut prev = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if n == 0 {
        return prev;
    }
    let mut cur = SQRT_2 * x * prev;
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}
