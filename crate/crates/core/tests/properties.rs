use std::f64::consts::PI;

use modal_homodyne::modes::{gram_schmidt, inner_product, Overlap, TemporalMode, TimeGrid};
use modal_homodyne::povm::{
    coherent_moments, coherent_pipeline_pdf, coherent_total_pdf, convolve, lo_quadrature_law, perp_law,
    single_photon_pdf, LoModeState, PerpModeState, XGrid,
};
use modal_homodyne::snr::{
    bound_ordering, filtering_gain_db, snr_filtered, snr_unfiltered, tophat_filtered_snr,
};
use modal_homodyne::states::{decompose_coherent, decompose_fock, CoherentAmplitude, PhotonNumbers};
use num_complex::Complex64;
use proptest::prelude::*;

const N: usize = 64;

fn grid() -> TimeGrid {
    TimeGrid::new(1.0, N).unwrap()
}

fn mode_strategy() -> impl Strategy<Value = TemporalMode> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), N)
        .prop_filter("nonzero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| {
            let s = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            TemporalMode::from_samples(grid(), s).unwrap()
        })
}

fn pair_strategy() -> impl Strategy<Value = (TemporalMode, TemporalMode)> {
    (mode_strategy(), mode_strategy())
        .prop_filter("not mode matched", |(a, b)| inner_product(a, b).unwrap().norm() < 0.999)
}

fn overlap_strategy() -> impl Strategy<Value = Overlap> {
    (0.0f64..=1.0, -PI..PI).prop_map(|(m, p)| Overlap::new(Complex64::from_polar(m, p)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modes_are_normalized(m in mode_strategy()) {
        prop_assert!((m.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn basis_invariants((lo, s) in pair_strategy()) {
        let b = gram_schmidt(&lo, &s).unwrap();
        prop_assert!(inner_product(b.xi_lo(), b.xi_perp()).unwrap().norm() < 1e-10);
        prop_assert!((b.xi_perp().norm_sqr() - 1.0).abs() < 1e-10);
        prop_assert!(b.reconstruct_signal().distance(&s).unwrap() <= 1e-8);
        prop_assert!((b.gamma() - inner_product(&lo, &s).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn gram_schmidt_idempotent((lo, s) in pair_strategy()) {
        let b = gram_schmidt(&lo, &s).unwrap();
        let again = gram_schmidt(&lo, b.xi_perp()).unwrap();
        prop_assert!(again.gamma().norm() < 1e-10);
        prop_assert!(again.xi_perp().distance(b.xi_perp()).unwrap() < 1e-9);
    }

    #[test]
    fn joint_phase_invariance((lo, s) in pair_strategy(), theta in -PI..PI) {
        let b = gram_schmidt(&lo, &s).unwrap();
        let r = gram_schmidt(&lo.with_global_phase(theta), &s.with_global_phase(theta)).unwrap();
        prop_assert!((b.gamma().norm() - r.gamma().norm()).abs() < 1e-12);
        for (x, y) in b.xi_perp().samples().iter().zip(r.xi_perp().samples()) {
            prop_assert!((x.norm() - y.norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn coherent_photons_add_up(re in -50.0f64..50.0, im in -50.0f64..50.0, ov in overlap_strategy()) {
        let alpha = CoherentAmplitude(Complex64::new(re, im));
        let d = decompose_coherent(alpha, ov);
        let total = alpha.value().norm_sqr();
        prop_assert!((d.mean_photons() - total).abs() <= 1e-8 * total.max(1e-300));
        prop_assert!((d.alpha_lo - ov.value() * alpha.value()).norm() < 1e-12);
    }

    #[test]
    fn fock_photons_add_up(n in 0usize..=32, ov in overlap_strategy()) {
        let s = decompose_fock(n, ov, 32).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        if n > 0 {
            prop_assert!((s.mean_photons() - n as f64).abs() <= 1e-8 * n as f64);
        }
        prop_assert!((s.mean_photons_lo() - n as f64 * ov.norm_sqr()).abs() < 1e-9);
    }

    #[test]
    fn bounds_are_ordered(
        re in -1e3f64..1e3, im in -1e3f64..1e3,
        ov in overlap_strategy(), beta in 1e-2f64..1e3, eta in 0.0f64..=1.0,
    ) {
        let alpha = CoherentAmplitude(Complex64::new(re, im));
        let b = bound_ordering(alpha, beta, ov, eta).unwrap();
        let tol = 1e-12 * b.ideal.max(1e-300);
        prop_assert!(b.conventional <= b.achievable + tol);
        prop_assert!(b.achievable <= b.ideal + tol);
        // eta_f = 1 - |gamma|^2 reproduces the unfiltered mismatch SNR
        let unf = snr_unfiltered(alpha, beta, ov).unwrap();
        let at_perp = snr_filtered(alpha, beta, ov, 1.0 - ov.norm_sqr()).unwrap();
        prop_assert!((unf - at_perp).abs() <= 1e-12 * unf.max(1e-300));
    }

    #[test]
    fn gain_is_nonnegative_for_useful_filters(
        r in 0.0f64..1e4, g in 0.0f64..1.0, frac in 0.0f64..=1.0,
    ) {
        let ov = Overlap::real(g).unwrap();
        let eta = frac * (1.0 - g * g);
        prop_assert!(filtering_gain_db(r, ov, eta).unwrap() >= -1e-12);
    }

    #[test]
    fn tophat_large_lo_limit(a in 0.01f64..0.98, b in 0.01f64..0.98, alpha in 0.5f64..50.0) {
        let (t0, t1) = (a.min(b), a.max(b) + 0.01);
        let tr = tophat_filtered_snr(CoherentAmplitude::real(alpha), 1e6, t0, t1, 1.0).unwrap();
        let ideal = 4.0 * (tr.gamma * alpha).powi(2);
        prop_assert!((tr.snr_large_lo * tr.eta_lo / ideal - 1.0).abs() < 1e-12);
        prop_assert!((tr.snr / tr.snr_large_lo - 1.0).abs() < 1e-6);
    }

    #[test]
    fn single_photon_normalized(g in 0.0f64..=1.0, beta in 0.3f64..20.0) {
        let d = single_photon_pdf(Overlap::real(g).unwrap(), beta, None).unwrap();
        prop_assert!((d.total_mass() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn convolution_adds_moments(
        re in -3.0f64..3.0, w in 0usize..12, beta in 0.5f64..5.0,
    ) {
        let lo = lo_quadrature_law(LoModeState::Coherent(Complex64::new(re, 0.0)));
        let perp = perp_law(PerpModeState::Fock(w), beta).unwrap();
        let e = 10.0 + w as f64 / beta;
        let out = convolve(&lo, &perp, &XGrid::new(2f64.sqrt() * re - e, 2f64.sqrt() * re + e, 8001).unwrap(), beta).unwrap();
        prop_assert!((out.total_mass() - 1.0).abs() < 1e-9);
        prop_assert!((out.mean() - lo.mean()).abs() < 1e-8);
        prop_assert!((out.variance() - lo.variance() - perp.variance()).abs() < 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn pipeline_matches_closed_form(
        g in 0.0f64..0.95, phase in -PI..PI, alpha_phase in -PI..PI,
        perp_photons in 100.0f64..1e4, lo_scale in 1.0f64..100.0,
    ) {
        let ov = Overlap::new(Complex64::from_polar(g, phase)).unwrap();
        let alpha2 = perp_photons / (1.0 - g * g);
        let alpha = CoherentAmplitude(Complex64::from_polar(alpha2.sqrt(), alpha_phase));
        let beta = (10.0 * g * g * alpha2).max(1.0).sqrt() * lo_scale.sqrt();
        let (mean, var) = coherent_moments(alpha, beta, ov);
        let h = 9.0 * var.sqrt();
        let grid = XGrid::new(mean - h, mean + h, 4096).unwrap();
        let closed = coherent_total_pdf(alpha, beta, ov, Some(grid)).unwrap();
        let piped = coherent_pipeline_pdf(alpha, beta, ov, Some(grid)).unwrap();
        prop_assert!(!closed.large_lo_violated());
        prop_assert!(closed.l1_distance(&piped).unwrap() < 1e-6);
    }
}
