use modal_homodyne::modes::{Overlap, TimeGrid};
use modal_homodyne::povm::coherent_moments;
use modal_homodyne::sampler::{empirical_distribution, empirical_distributions, gated_modes, ClickSampler, GatedModes};
use modal_homodyne::snr::{snr_filtered, to_db, FilterSpec};
use modal_homodyne::states::{CoherentAmplitude, SignalState};
use modal_homodyne::stats::{ks_test, Moments};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

const LO_PHOTONS: f64 = 1e4;
const SIGNAL_PHOTONS: f64 = 2e5;
const GAMMA: f64 = 1e-2;
const ETA_F: f64 = 1e-3;

fn design() -> (GatedModes, ClickSampler) {
    let modes = gated_modes(TimeGrid::new(1.0, 16).unwrap(), 4, GAMMA, ETA_F).unwrap();
    let signal = SignalState::Coherent { re: SIGNAL_PHOTONS.sqrt(), im: 0.0 };
    let sampler = ClickSampler::new(&signal, &modes.signal, LO_PHOTONS.sqrt(), &modes.lo).unwrap();
    (modes, sampler)
}

fn closed_form() -> (f64, f64) {
    coherent_moments(CoherentAmplitude::real(SIGNAL_PHOTONS.sqrt()), LO_PHOTONS.sqrt(), Overlap::real(GAMMA).unwrap())
}

#[test]
fn unfiltered_moments_and_ks() {
    let (modes, sampler) = design();
    let all = FilterSpec::constant(*modes.lo.grid(), 1.0);
    let mut st = empirical_distribution(&sampler, &all, LO_PHOTONS.sqrt(), 100_000, 1).unwrap();
    let (mean, var) = closed_form();
    assert!((st.mean - mean).abs() < 5.0 * st.mean_se, "mean {} vs {mean}", st.mean);
    assert!((st.variance - var).abs() < 5.0 * st.variance_se, "variance {} vs {var}", st.variance);
    let law = Normal::new(mean, var.sqrt()).unwrap();
    let ks = ks_test(&mut st.samples, |x| law.cdf(x));
    assert!(ks.passes(1e-3), "{ks:?}");
}

#[test]
fn filtered_snr_matches_bound() {
    let (modes, sampler) = design();
    let beta = LO_PHOTONS.sqrt();
    let st = empirical_distribution(&sampler, &modes.gate, beta, 1_000_000, 2).unwrap();
    let want = snr_filtered(CoherentAmplitude::real(SIGNAL_PHOTONS.sqrt()), beta, Overlap::real(GAMMA).unwrap(), ETA_F).unwrap();
    assert!((st.snr_db - to_db(want)).abs() < 0.3, "{} dB vs {} dB", st.snr_db, to_db(want));
    // variance tends to 1/2 + eta_f |alpha|^2 / (2 beta^2) up to the |gamma alpha|^2 LO-mode term
    let var = 0.5 + SIGNAL_PHOTONS * (ETA_F + GAMMA * GAMMA * (1.0 - ETA_F)) / (2.0 * LO_PHOTONS);
    assert!((st.variance - var).abs() < 5.0 * st.variance_se);
}

#[test]
fn total_counts_match_photon_budget() {
    let (_, sampler) = design();
    let counts = sampler.map_shots(20_000, 3, |r| r.total_counts() as f64);
    let m = Moments::of(&counts);
    let want = SIGNAL_PHOTONS + LO_PHOTONS;
    assert!((sampler.expected_total() - want).abs() < 1e-6 * want);
    assert!((m.mean - want).abs() < 5.0 * m.mean_se(), "{} vs {want}", m.mean);
}

#[test]
fn vacuum_signal_has_no_mean() {
    let (modes, _) = design();
    let beta = LO_PHOTONS.sqrt();
    let s = ClickSampler::new(&SignalState::Coherent { re: 0.0, im: 0.0 }, &modes.signal, beta, &modes.lo).unwrap();
    let st = empirical_distribution(&s, &FilterSpec::constant(*modes.lo.grid(), 1.0), beta, 50_000, 4).unwrap();
    assert!(st.mean.abs() < 4.0 * st.mean_se);
    assert!((st.variance - 0.5).abs() < 5.0 * st.variance_se);
    let counts = s.map_shots(5_000, 5, |r| r.n1().iter().sum::<u64>() as f64);
    let m = Moments::of(&counts);
    assert!((m.mean - LO_PHOTONS / 2.0).abs() < 5.0 * m.mean_se());
}

#[test]
fn coarse_graining_preserves_statistics() {
    let (modes, fine) = design();
    let beta = LO_PHOTONS.sqrt();
    let coarse = fine.coarsen(2).unwrap();
    let a = empirical_distribution(&fine, &FilterSpec::constant(*fine.grid(), 1.0), beta, 100_000, 6).unwrap();
    let b = empirical_distribution(&coarse, &FilterSpec::constant(*coarse.grid(), 1.0), beta, 100_000, 7).unwrap();
    assert_eq!(coarse.grid().n_points(), modes.lo.grid().n_points() / 2);
    let se_mean = a.mean_se.hypot(b.mean_se);
    let se_var = a.variance_se.hypot(b.variance_se);
    assert!((a.mean - b.mean).abs() < 3.0 * se_mean);
    assert!((a.variance - b.variance).abs() < 3.0 * se_var);
}

#[test]
fn batches_are_reproducible() {
    let (modes, sampler) = design();
    let filters = [FilterSpec::constant(*modes.lo.grid(), 1.0), modes.gate.clone()];
    let a = empirical_distributions(&sampler, &filters, LO_PHOTONS.sqrt(), 2_000, 8).unwrap();
    let b = empirical_distributions(&sampler, &filters, LO_PHOTONS.sqrt(), 2_000, 8).unwrap();
    assert_eq!(a, b);
    assert_eq!(sampler.record(8, 17), sampler.record(8, 17));
}

#[test]
fn random_configurations_agree_with_closed_form() {
    // the closed form drops the |gamma alpha|^2 counting noise of the LO mode;
    // keeping it a hundredth of the LO keeps that bias below KS resolution
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..10 {
        let gamma: f64 = rng.random_range(0.02..0.6);
        let perp: f64 = rng.random_range(100.0..5e4);
        let alpha2 = perp / (1.0 - gamma * gamma);
        let beta2 = (100.0 * gamma * gamma * alpha2).max(1e3) * rng.random_range(1.0..4.0);
        let modes = gated_modes(TimeGrid::new(1.0, 8).unwrap(), 2, gamma, 0.5).unwrap();
        let signal = SignalState::Coherent { re: alpha2.sqrt(), im: 0.0 };
        let sampler = ClickSampler::new(&signal, &modes.signal, beta2.sqrt(), &modes.lo).unwrap();
        let mut st = empirical_distribution(&sampler, &FilterSpec::constant(*modes.lo.grid(), 1.0), beta2.sqrt(), 100_000, 100 + i)
            .unwrap();
        let (mean, var) = coherent_moments(CoherentAmplitude::real(alpha2.sqrt()), beta2.sqrt(), Overlap::real(gamma).unwrap());
        let law = Normal::new(mean, var.sqrt()).unwrap();
        let ks = ks_test(&mut st.samples, |x| law.cdf(x));
        assert!(ks.passes(1e-3), "config {i}: gamma {gamma}, |alpha|^2 {alpha2}, |beta|^2 {beta2}: {ks:?}");
    }
}
