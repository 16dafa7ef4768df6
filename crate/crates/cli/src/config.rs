//! Versioned JSON experiment configuration. Every section is optional and
//! falls back to the built-in defaults; unknown keys are rejected.

use std::path::Path;

use modal_homodyne::modes::ModeKind;
use modal_homodyne::snr::{HeterodyneParams, PulseProfile};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub fig3: Fig3Config,
    #[serde(default)]
    pub fig5: Fig5Config,
    #[serde(default)]
    pub appendix_i: AppendixIConfig,
    #[serde(default)]
    pub tophat: TophatConfig,
    #[serde(default)]
    pub sample: SampleConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
}

fn default_seed() -> u64 {
    20_240_101
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: SCHEMA_VERSION,
            seed: default_seed(),
            fig3: Fig3Config::default(),
            fig5: Fig5Config::default(),
            appendix_i: AppendixIConfig::default(),
            tophat: TophatConfig::default(),
            sample: SampleConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        if cfg.version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported config version {}, expected {SCHEMA_VERSION}",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Mismatch sweep of the filtering bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig3Config {
    /// Signal power, W.
    pub p_s: f64,
    /// LO power, W.
    pub p_lo: f64,
    /// Measurement interval, s.
    pub interval: f64,
    /// Optical frequency, Hz.
    pub nu: f64,
    pub eta_f: f64,
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub n_gamma: usize,
    /// Overlap reported in the summary and inserted into the sweep.
    pub design_gamma: f64,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Self {
            p_s: 2e-3,
            p_lo: 100e-6,
            interval: 10e-9,
            nu: 193e12,
            eta_f: 1e-3,
            gamma_min: 1e-4,
            gamma_max: 1.0,
            n_gamma: 200,
            design_gamma: 1e-2,
        }
    }
}

/// Single-photon difference distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Fig5Config {
    pub beta: f64,
    pub gammas: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
}

impl Default for Fig5Config {
    fn default() -> Self {
        Self {
            beta: 1.0,
            gammas: vec![0.0, 0.5, std::f64::consts::FRAC_1_SQRT_2, 1.0],
            x_min: -6.0,
            x_max: 6.0,
            n_x: 2401,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSet {
    pub name: String,
    /// Evaluated for both pulse profiles; `profile` here is ignored.
    pub params: HeterodyneParams,
    /// Published predictions and measurements, dB, carried as annotations.
    #[serde(default)]
    pub reported_sech_db: Option<f64>,
    #[serde(default)]
    pub reported_gaussian_db: Option<f64>,
    #[serde(default)]
    pub realized_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateCutoff {
    /// Gate half-width in standard deviations of the LO intensity.
    pub k: f64,
    #[serde(default)]
    pub reported_gain_db: Option<f64>,
}

/// Dual-comb shot-noise estimates and gate inefficiencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AppendixIConfig {
    pub sets: Vec<ExperimentSet>,
    /// Index into `sets` whose powers and interval feed the gate estimates.
    pub gate_set: usize,
    /// Intensity FWHM of the LO pulse, s.
    pub pulse_fwhm: f64,
    pub cutoffs: Vec<GateCutoff>,
    #[serde(default)]
    pub reported_eta_f: Option<f64>,
    #[serde(default)]
    pub realized_gain_db: Option<f64>,
    /// Time bins for the exact gate integral.
    pub grid_points: usize,
}

impl Default for AppendixIConfig {
    fn default() -> Self {
        let base = HeterodyneParams {
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
        let later = HeterodyneParams {
            delta_nu: 12e9,
            eta_q: 0.7,
            p_lo: 1.74e-6,
            p_s: 0.5e-3,
            n_teeth: 120,
            bandwidth: 100e3,
            ..base
        };
        Self {
            sets: vec![
                ExperimentSet {
                    name: "2013".into(),
                    params: base,
                    reported_sech_db: Some(54.5),
                    reported_gaussian_db: Some(54.2),
                    realized_db: Some(36.9),
                },
                ExperimentSet {
                    name: "2015".into(),
                    params: later,
                    reported_sech_db: Some(78.6),
                    reported_gaussian_db: Some(78.5),
                    realized_db: Some(68.3),
                },
            ],
            gate_set: 0,
            pulse_fwhm: 60e-12,
            cutoffs: vec![
                GateCutoff { k: 5.0, reported_gain_db: Some(18.8) },
                GateCutoff { k: 3.0, reported_gain_db: Some(20.8) },
            ],
            reported_eta_f: Some(1.3e-2),
            realized_gain_db: Some(20.0),
            grid_points: 1 << 16,
        }
    }
}

/// Top-hat signal on `(0, t1)` and top-hat LO on `(t0, T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TophatConfig {
    pub alpha: f64,
    pub beta: f64,
    pub interval: f64,
    /// Explicit `(t0, t1)` pairs. `n_random` more are drawn on bin edges.
    pub pairs: Vec<[f64; 2]>,
    pub n_random: usize,
    pub grid_points: usize,
}

impl Default for TophatConfig {
    fn default() -> Self {
        Self {
            alpha: 10.0,
            beta: 1e6,
            interval: 1.0,
            pairs: vec![[0.0, 1.0], [0.2, 0.4], [0.5, 0.75]],
            n_random: 20,
            grid_points: 4000,
        }
    }
}

/// How the sampler's modes are built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "modes", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModesConfig {
    /// Coarse modes with an exactly known LO-gate inefficiency.
    Gated { bins: usize, lo_bins: usize, gamma: f64, eta_f: f64 },
    /// Arbitrary modes on `(0, interval)`, gated by the LO threshold filter.
    Explicit {
        interval: f64,
        grid_points: usize,
        lo: ModeKind,
        signal: ModeKind,
        #[serde(default)]
        tail_fraction: f64,
    },
}

/// Monte Carlo batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    pub modes: ModesConfig,
    pub alpha: [f64; 2],
    pub beta: f64,
    pub shots: usize,
    /// Raw click records written as CSV.
    pub dump_records: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            modes: ModesConfig::Gated { bins: 16, lo_bins: 4, gamma: 1e-2, eta_f: 1e-3 },
            alpha: [2e5f64.sqrt(), 0.0],
            beta: 100.0,
            shots: 100_000,
            dump_records: 0,
        }
    }
}

/// Sampler-versus-analytic checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    pub shots: usize,
    pub filtered_shots: usize,
    pub lo_photons: f64,
    pub signal_photons: f64,
    pub gamma: f64,
    pub eta_f: f64,
    pub significance: f64,
    pub snr_tolerance_db: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            shots: 100_000,
            filtered_shots: 1_000_000,
            lo_photons: 1e4,
            signal_photons: 2e5,
            gamma: 1e-2,
            eta_f: 1e-3,
            significance: 1e-3,
            snr_tolerance_db: 0.3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"version": 1}"#).unwrap();
        assert_eq!(cfg, ExperimentConfig { seed: default_seed(), ..ExperimentConfig::default() });
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"version": 1, "colour": 3}"#),
            Err(CliError::Config(_))
        ));
        assert!(ExperimentConfig::from_json(r#"{"version": 1, "fig3": {"p_sig": 1}}"#).is_err());
    }

    #[test]
    fn version_checked() {
        assert!(ExperimentConfig::from_json(r#"{"version": 2}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{}"#).is_err());
    }

    #[test]
    fn round_trip() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn explicit_modes_parse() {
        let text = r#"{"version": 1, "sample": {"modes": {"modes": "explicit", "interval": 1.0,
            "grid_points": 64, "lo": {"kind": "tophat", "params": {"t0": 0.0, "t1": 0.5}},
            "signal": {"kind": "cw", "params": {}}}}}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert!(matches!(cfg.sample.modes, ModesConfig::Explicit { grid_points: 64, .. }));
    }
}
