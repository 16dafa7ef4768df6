use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modal_homodyne_cli::config::ExperimentConfig;
use modal_homodyne_cli::{db2, runners, CliError, OutDir, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "modal-homodyne", version, about = "Mismatched-mode homodyne experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config (schema version 1); defaults are used when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV and JSON files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    shots: Option<usize>,
    /// Time bins for grid-based computations.
    #[arg(long, global = true)]
    grid_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Filtering bounds versus mode overlap.
    Fig3,
    /// Single-photon difference distributions.
    Fig5,
    /// Dual-comb shot-noise SNRs and gate estimates.
    AppendixI,
    /// Top-hat modes that beat the filtered bound.
    Tophat,
    /// Monte Carlo click records and their statistics.
    Sample,
    /// Sampler checks against the analytic laws.
    Validate,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let opts = RunOptions { seed: cli.seed, shots: cli.shots, grid_points: cli.grid_points };
    let seed = opts.seed.unwrap_or(cfg.seed);
    let out = OutDir::create(&cli.out)?;
    match cli.command {
        Command::Fig3 => {
            let r = runners::fig3(&cfg.fig3)?;
            runners::write_fig3(&r, &out)?;
            let s = &r.summary;
            println!(
                "fig3: |alpha|^2/|beta|^2 = {:.3}, gain at gamma = {} and eta_f = {}: {}",
                s.photon_ratio, s.design_gamma, s.eta_f, db2(s.design_gain_db)
            );
        }
        Command::Fig5 => {
            let r = runners::fig5(&cfg.fig5)?;
            runners::write_fig5(&r, &out)?;
            for c in &r.curves {
                println!("fig5: gamma = {:.4}, mass = {:.8}, peak at x = {:.3}", c.gamma, c.total_mass, c.peak_x);
            }
        }
        Command::AppendixI => {
            let r = runners::appendix_i(&cfg.appendix_i, opts.grid_points)?;
            runners::write_appendix_i(&r, &out)?;
            for e in &r.sql {
                println!("appendix-i: {} {:?}: SQL SNR {}", e.set, e.profile, db2(e.snr_db));
            }
            for g in &r.gates {
                println!(
                    "appendix-i: {} sigma gate: eta_f = {:.3e} (grid {:.3e}), gain {}",
                    g.k, g.eta_f_estimate, g.eta_f_exact, db2(g.gain_db)
                );
            }
        }
        Command::Tophat => {
            let rows = runners::tophat(&cfg.tophat, seed, opts.grid_points)?;
            runners::write_tophat(&rows, &out)?;
            let worst = rows.iter().map(|r| r.large_lo_deviation.abs()).fold(0.0, f64::max);
            println!("tophat: {} pairs, worst relative deviation from the large-LO limit {worst:.2e}", rows.len());
        }
        Command::Sample => {
            let (r, records) = runners::sample(&cfg.sample, seed, opts.shots, opts.grid_points)?;
            runners::write_sample(&r, &records, &out)?;
            println!(
                "sample: {} shots, unfiltered SNR {} (predicted {}), filtered SNR {} (predicted {})",
                r.shots,
                db2(r.unfiltered.snr_db),
                db2(r.predicted_unfiltered.snr_db),
                db2(r.filtered.snr_db),
                db2(r.predicted_filtered_snr_db)
            );
            if !r.gate_lo_preserving {
                eprintln!("sample: warning: the gate removes more LO weight than the tail fraction allows; the filtered prediction assumes an intact LO mode");
            }
        }
        Command::Validate => {
            let r = runners::validate(&cfg.validate, seed, opts.shots)?;
            runners::write_validate(&r, &out)?;
            for c in &r.checks {
                println!("validate: {:<16} {}", c.name, if c.pass { "pass" } else { "FAIL" });
            }
            if !r.passed() {
                let failed: Vec<_> = r.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
                return Err(CliError::Statistical(failed.join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
