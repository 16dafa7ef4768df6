//! Measurement statistics of homodyne detection with temporally mismatched
//! signal and local-oscillator modes.
//!
//! The signal mode is split into the LO mode and its orthogonal complement;
//! the LO-mode part is read out as a quadrature while the complement adds
//! photon-number noise. On top of that sit SNR bounds for temporal filters
//! and a Poisson click sampler used as an independent check.

pub mod error;
pub mod modes;
pub mod povm;
pub mod sampler;
pub mod snr;
pub mod states;
pub mod stats;

pub use error::{Error, Result};
pub use modes::{gram_schmidt, inner_product, make_mode, ModeBasis, ModeKind, Overlap, PulseShape, TemporalMode, TimeGrid};
pub use povm::{coherent_total_pdf, fock_total_pdf, single_photon_pdf, DifferenceDistribution, XGrid};
pub use sampler::{empirical_distribution, reduce_record, sample_record, ClickRecord, ClickSampler, EmpiricalStats};
pub use snr::{bound_ordering, design_filter, eta_f_of, snr_filtered, snr_unfiltered, FilterSpec};
pub use states::{CoherentAmplitude, LoAmplitude, SignalState};
