//! Monte Carlo click records for a coherent signal mixed with a coherent LO
//! on a balanced beamsplitter.
//!
//! Each output port sees a coherent field, so the counts in every time bin
//! are independent Poisson draws with means
//! `I1 = |alpha xi_S + beta xi_LO|^2 dt / 2` and
//! `I2 = |alpha xi_S - beta xi_LO|^2 dt / 2`.

use std::f64::consts::SQRT_2;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modes::{TemporalMode, TimeGrid};
use crate::snr::{to_db, FilterSpec};
use crate::states::SignalState;
use crate::stats::{compensated_sum, Moments};

/// Smallest batch accepted by [`empirical_distribution`].
pub const MIN_SHOTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClickRecord {
    grid: TimeGrid,
    n1: Vec<u64>,
    n2: Vec<u64>,
    seed: u64,
}

impl ClickRecord {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn n1(&self) -> &[u64] {
        &self.n1
    }

    pub fn n2(&self) -> &[u64] {
        &self.n2
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn total_counts(&self) -> u64 {
        self.n1.iter().chain(&self.n2).sum()
    }

    /// Record with `factor` adjacent bins summed.
    pub fn coarsen(&self, factor: usize) -> Result<ClickRecord> {
        let grid = self.grid.coarsen(factor)?;
        let merge = |v: &[u64]| v.chunks(factor).map(|c| c.iter().sum()).collect();
        Ok(ClickRecord {
            grid,
            n1: merge(&self.n1),
            n2: merge(&self.n2),
            seed: self.seed,
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "bin_index,n1,n2")?;
        for (k, (a, b)) in self.n1.iter().zip(&self.n2).enumerate() {
            writeln!(out, "{k},{a},{b}")?;
        }
        Ok(())
    }
}

/// Per-bin Poisson means for both detectors, fixed for a batch.
#[derive(Debug, Clone)]
pub struct ClickSampler {
    grid: TimeGrid,
    mean1: Vec<f64>,
    mean2: Vec<f64>,
    draw1: Vec<Option<Poisson<f64>>>,
    draw2: Vec<Option<Poisson<f64>>>,
}

fn poisson_table(means: &[f64]) -> Result<Vec<Option<Poisson<f64>>>> {
    means
        .iter()
        .map(|&m| {
            if m == 0.0 {
                Ok(None)
            } else {
                Poisson::new(m)
                    .map(Some)
                    .map_err(|e| Error::invalid("intensity", format!("bad Poisson mean {m}: {e}")))
            }
        })
        .collect()
}

impl ClickSampler {
    /// Coherent signal `alpha` in `xi_s` and LO of real amplitude `beta >= 0`
    /// in `xi_lo`. Fock signals are rejected.
    pub fn new(signal: &SignalState, xi_s: &TemporalMode, beta: f64, xi_lo: &TemporalMode) -> Result<Self> {
        let alpha = match *signal {
            SignalState::Coherent { re, im } => Complex64::new(re, im),
            SignalState::Fock { .. } => {
                return Err(Error::UnsupportedState("click sampling covers coherent signals only"))
            }
        };
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::invalid("beta", format!("LO amplitude must be >= 0, got {beta}")));
        }
        let grid = *xi_s.grid();
        if grid != *xi_lo.grid() {
            return Err(Error::GridMismatch {
                left: grid.to_string(),
                right: xi_lo.grid().to_string(),
            });
        }
        let dt = grid.dt();
        let (mean1, mean2): (Vec<f64>, Vec<f64>) = xi_s
            .samples()
            .iter()
            .zip(xi_lo.samples())
            .map(|(s, l)| {
                let a = alpha * s;
                let b = l * beta;
                ((a + b).norm_sqr() * dt / 2.0, (a - b).norm_sqr() * dt / 2.0)
            })
            .unzip();
        Self::from_means(grid, mean1, mean2)
    }

    fn from_means(grid: TimeGrid, mean1: Vec<f64>, mean2: Vec<f64>) -> Result<Self> {
        Ok(Self {
            draw1: poisson_table(&mean1)?,
            draw2: poisson_table(&mean2)?,
            grid,
            mean1,
            mean2,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Expected `sum n1 + sum n2`.
    pub fn expected_total(&self) -> f64 {
        compensated_sum(self.mean1.iter().chain(&self.mean2).copied())
    }

    /// Sampler whose bins are the sums of `factor` adjacent bins.
    pub fn coarsen(&self, factor: usize) -> Result<ClickSampler> {
        let grid = self.grid.coarsen(factor)?;
        let merge = |v: &[f64]| v.chunks(factor).map(|c| c.iter().sum()).collect();
        Self::from_means(grid, merge(&self.mean1), merge(&self.mean2))
    }

    /// One record drawn from `ChaCha8(seed)` on stream `shot`.
    pub fn record(&self, seed: u64, shot: u64) -> ClickRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shot);
        let draw = |table: &[Option<Poisson<f64>>], rng: &mut ChaCha8Rng| {
            table
                .iter()
                .map(|d| d.as_ref().map_or(0, |p| p.sample(rng) as u64))
                .collect::<Vec<u64>>()
        };
        let n1 = draw(&self.draw1, &mut rng);
        let n2 = draw(&self.draw2, &mut rng);
        ClickRecord {
            grid: self.grid,
            n1,
            n2,
            seed,
        }
    }

    /// `f(record(seed, shot))` for every shot, in shot order.
    pub fn map_shots<T, F>(&self, n_shots: usize, seed: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&ClickRecord) -> T + Sync,
    {
        (0..n_shots as u64)
            .into_par_iter()
            .map(|shot| f(&self.record(seed, shot)))
            .collect()
    }
}

pub fn sample_record(
    signal: &SignalState,
    xi_s: &TemporalMode,
    beta: f64,
    xi_lo: &TemporalMode,
    seed: u64,
) -> Result<ClickRecord> {
    Ok(ClickSampler::new(signal, xi_s, beta, xi_lo)?.record(seed, 0))
}

/// `x = sum_k f_k (n1_k - n2_k) / (sqrt(2) beta)`.
pub fn reduce_record(record: &ClickRecord, filter: &FilterSpec, beta: f64) -> Result<f64> {
    if record.grid != *filter.grid() {
        return Err(Error::GridMismatch {
            left: record.grid.to_string(),
            right: filter.grid().to_string(),
        });
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid("beta", format!("LO amplitude must be positive, got {beta}")));
    }
    let diff = compensated_sum(
        filter
            .weights()
            .iter()
            .zip(record.n1.iter().zip(&record.n2))
            .map(|(f, (a, b))| f * (*a as f64 - *b as f64)),
    );
    Ok(diff / (SQRT_2 * beta))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalStats {
    #[serde(skip)]
    pub samples: Vec<f64>,
    pub n_shots: usize,
    pub mean: f64,
    pub variance: f64,
    pub mean_se: f64,
    pub variance_se: f64,
    pub snr: f64,
    pub snr_db: f64,
}

impl EmpiricalStats {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let m = Moments::of(&samples);
        let snr = m.mean * m.mean / m.variance;
        Self {
            n_shots: samples.len(),
            mean: m.mean,
            variance: m.variance,
            mean_se: m.mean_se(),
            variance_se: m.variance_se(),
            snr,
            snr_db: to_db(snr),
            samples,
        }
    }
}

/// Filtered outcomes of `n_shots` independent records. Shot `i` uses RNG
/// stream `i` of `seed`, so the result does not depend on scheduling.
pub fn empirical_distribution(
    sampler: &ClickSampler,
    filter: &FilterSpec,
    beta: f64,
    n_shots: usize,
    seed: u64,
) -> Result<EmpiricalStats> {
    Ok(empirical_distributions(sampler, std::slice::from_ref(filter), beta, n_shots, seed)?
        .pop()
        .expect("one filter"))
}

/// Several filters applied to the same records.
pub fn empirical_distributions(
    sampler: &ClickSampler,
    filters: &[FilterSpec],
    beta: f64,
    n_shots: usize,
    seed: u64,
) -> Result<Vec<EmpiricalStats>> {
    if n_shots < MIN_SHOTS {
        return Err(Error::invalid("n_shots", format!("need at least {MIN_SHOTS}, got {n_shots}")));
    }
    for f in filters {
        if f.grid() != sampler.grid() {
            return Err(Error::GridMismatch {
                left: sampler.grid().to_string(),
                right: f.grid().to_string(),
            });
        }
    }
    let per_shot = sampler.map_shots(n_shots, seed, |rec| {
        filters
            .iter()
            .map(|f| reduce_record(rec, f, beta))
            .collect::<Result<Vec<f64>>>()
    });
    let mut columns = vec![Vec::with_capacity(n_shots); filters.len()];
    for row in per_shot {
        for (col, x) in columns.iter_mut().zip(row?) {
            col.push(x);
        }
    }
    Ok(columns.into_iter().map(EmpiricalStats::from_samples).collect())
}

/// Coarse test modes with an exactly known filter inefficiency.
///
/// The LO is flat on the first `lo_bins` bins. `xi_perp` alternates in sign
/// on those bins, carrying weight `eta_f` there and `1 - eta_f` spread flat
/// over the rest, so it is orthogonal to the LO and the LO gate passes
/// exactly `eta_f` of it.
#[derive(Debug, Clone)]
pub struct GatedModes {
    pub lo: TemporalMode,
    pub signal: TemporalMode,
    pub perp: TemporalMode,
    pub gate: FilterSpec,
    pub eta_f: f64,
}

pub fn gated_modes(grid: TimeGrid, lo_bins: usize, gamma: f64, eta_f: f64) -> Result<GatedModes> {
    let n = grid.n_points();
    if lo_bins == 0 || !lo_bins.is_multiple_of(2) || lo_bins >= n {
        return Err(Error::invalid(
            "lo_bins",
            format!("need an even count below {n}, got {lo_bins}"),
        ));
    }
    if !(0.0..1.0).contains(&eta_f) {
        return Err(Error::invalid("eta_f", format!("must lie in [0, 1), got {eta_f}")));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::invalid("gamma", format!("must lie in [0, 1), got {gamma}")));
    }
    let dt = grid.dt();
    let on = (eta_f / (lo_bins as f64 * dt)).sqrt();
    let off = ((1.0 - eta_f) / ((n - lo_bins) as f64 * dt)).sqrt();
    let lo_level = (lo_bins as f64 * dt).sqrt().recip();
    let lo_raw: Vec<Complex64> = (0..n)
        .map(|k| Complex64::new(if k < lo_bins { lo_level } else { 0.0 }, 0.0))
        .collect();
    let perp_raw: Vec<Complex64> = (0..n)
        .map(|k| {
            let v = if k < lo_bins {
                if k % 2 == 0 {
                    on
                } else {
                    -on
                }
            } else {
                off
            };
            Complex64::new(v, 0.0)
        })
        .collect();
    let w = (1.0 - gamma * gamma).sqrt();
    let signal_raw = lo_raw.iter().zip(&perp_raw).map(|(l, p)| l * gamma + p * w).collect();
    let lo = TemporalMode::from_samples(grid, lo_raw)?;
    let gate = FilterSpec::gate(&lo, 0.0, lo_bins as f64 * dt)?;
    Ok(GatedModes {
        perp: TemporalMode::from_samples(grid, perp_raw)?,
        signal: TemporalMode::from_samples(grid, signal_raw)?,
        lo,
        gate,
        eta_f,
    })
}
