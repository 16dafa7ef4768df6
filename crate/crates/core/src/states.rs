//! Signal and LO states and their decomposition into the `(xi_LO, xi_perp)`
//! basis.
//!
//! A coherent signal `|alpha>` in `xi_S` factorizes into
//! `|gamma alpha>_LO (x) |sqrt(1-|gamma|^2) alpha>_perp`. A Fock state `|n>` in
//! `xi_S` expands binomially over the two modes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modes::Overlap;

/// Default per-mode Fock cutoff.
pub const DEFAULT_FOCK_CUTOFF: usize = 32;

/// Signal amplitude `alpha`, `|alpha|^2` photons on average in `(0, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentAmplitude(pub Complex64);

impl CoherentAmplitude {
    pub fn real(alpha: f64) -> Self {
        Self(Complex64::new(alpha, 0.0))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }
}

/// LO amplitude `beta`, real and positive: the LO phase is the reference and
/// any time-dependent phase lives in `xi_LO`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LoAmplitude(f64);

impl LoAmplitude {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_finite() && beta > 0.0 {
            Ok(Self(beta))
        } else {
            Err(Error::invalid("beta", format!("LO amplitude must be positive, got {beta}")))
        }
    }

    /// Accepts a complex `beta` only when it is already real and positive.
    pub fn from_complex(beta: Complex64) -> Result<Self> {
        if beta.im != 0.0 {
            return Err(Error::invalid(
                "beta",
                "complex LO amplitude; fold the LO phase into xi_LO instead",
            ));
        }
        Self::new(beta.re)
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn photons(&self) -> f64 {
        self.0 * self.0
    }
}

/// Mean photon numbers split over the LO mode and the perpendicular mode.
pub trait PhotonNumbers {
    fn mean_photons_lo(&self) -> f64;

    fn mean_photons_perp(&self) -> f64;

    fn mean_photons(&self) -> f64 {
        self.mean_photons_lo() + self.mean_photons_perp()
    }
}

pub fn mean_photons(state: &impl PhotonNumbers) -> f64 {
    state.mean_photons()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposedCoherent {
    pub alpha_lo: Complex64,
    pub alpha_perp: Complex64,
    pub overlap: Overlap,
}

pub fn decompose_coherent(alpha: CoherentAmplitude, overlap: Overlap) -> DecomposedCoherent {
    DecomposedCoherent {
        alpha_lo: overlap.value() * alpha.0,
        alpha_perp: alpha.0 * overlap.perp_weight(),
        overlap,
    }
}

impl PhotonNumbers for DecomposedCoherent {
    fn mean_photons_lo(&self) -> f64 {
        self.alpha_lo.norm_sqr()
    }

    fn mean_photons_perp(&self) -> f64 {
        self.alpha_perp.norm_sqr()
    }
}

/// Pure state in the two-mode Fock basis; `amplitude(j, k)` multiplies
/// `|j>_LO |k>_perp`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeFockState {
    overlap: Overlap,
    n_max: usize,
    amplitudes: Vec<Complex64>,
}

impl TwoModeFockState {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn overlap(&self) -> Overlap {
        self.overlap
    }

    pub fn amplitude(&self, j: usize, k: usize) -> Complex64 {
        if j > self.n_max || k > self.n_max {
            return Complex64::new(0.0, 0.0);
        }
        self.amplitudes[j * (self.n_max + 1) + k]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Nonzero `(j, k, |c_jk|^2)` entries in row-major order.
    pub fn populations(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let width = self.n_max + 1;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(move |(idx, c)| (idx / width, idx % width, c.norm_sqr()))
    }
}

impl PhotonNumbers for TwoModeFockState {
    fn mean_photons_lo(&self) -> f64 {
        self.populations().map(|(j, _, p)| j as f64 * p).sum()
    }

    fn mean_photons_perp(&self) -> f64 {
        self.populations().map(|(_, k, p)| k as f64 * p).sum()
    }
}

/// `c[j][n-j] = sqrt(C(n, j)) gamma^j (1 - |gamma|^2)^((n-j)/2)`.
pub fn decompose_fock(n: usize, overlap: Overlap, n_max: usize) -> Result<TwoModeFockState> {
    if n > n_max {
        return Err(Error::Truncation { n, n_max });
    }
    let width = n_max + 1;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); width * width];
    let gamma = overlap.value();
    let perp = overlap.perp_weight();
    let mut binom = 1.0f64;
    for j in 0..=n {
        if j > 0 {
            binom = binom * (n - j + 1) as f64 / j as f64;
        }
        let amp = gamma.powu(j as u32) * perp.powi((n - j) as i32) * binom.sqrt();
        amplitudes[j * width + (n - j)] = amp;
    }
    Ok(TwoModeFockState {
        overlap,
        n_max,
        amplitudes,
    })
}

/// Signal states supported by the analytic measurement laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalState {
    Coherent { re: f64, #[serde(default)] im: f64 },
    Fock { n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecomposedState {
    Coherent(DecomposedCoherent),
    Fock(TwoModeFockState),
}

impl SignalState {
    pub fn decompose(&self, overlap: Overlap) -> Result<DecomposedState> {
        match *self {
            SignalState::Coherent { re, im } => Ok(DecomposedState::Coherent(decompose_coherent(
                CoherentAmplitude(Complex64::new(re, im)),
                overlap,
            ))),
            SignalState::Fock { n } => {
                decompose_fock(n, overlap, DEFAULT_FOCK_CUTOFF).map(DecomposedState::Fock)
            }
        }
    }
}

impl PhotonNumbers for DecomposedState {
    fn mean_photons_lo(&self) -> f64 {
        match self {
            DecomposedState::Coherent(c) => c.mean_photons_lo(),
            DecomposedState::Fock(f) => f.mean_photons_lo(),
        }
    }

    fn mean_photons_perp(&self) -> f64 {
        match self {
            DecomposedState::Coherent(c) => c.mean_photons_perp(),
            DecomposedState::Fock(f) => f.mean_photons_perp(),
        }
    }
}
