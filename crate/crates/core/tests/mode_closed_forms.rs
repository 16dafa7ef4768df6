use std::f64::consts::PI;

use modal_homodyne::modes::{gram_schmidt, inner_product, make_mode, ModeKind, TemporalMode, TimeGrid};
use num_complex::Complex64;

const T: f64 = 1.0;

fn cw_and_pulse(n: usize, sigma: f64, phase: f64) -> (TemporalMode, TemporalMode) {
    let grid = TimeGrid::new(T, n).unwrap();
    let lo = make_mode(&ModeKind::GaussianRoot { center: T / 2.0, sigma, phase: 0.0 }, grid).unwrap();
    let s = make_mode(&ModeKind::Cw { phase }, grid).unwrap();
    (lo, s)
}

#[test]
fn cw_overlap_with_contained_pulse() {
    let sigma = 0.05 * T;
    let phase = 0.7;
    let (lo, s) = cw_and_pulse(4096, sigma, phase);
    assert!(!lo.is_clipped());
    let gamma = inner_product(&lo, &s).unwrap();
    let want = Complex64::from_polar((8.0 * PI * sigma * sigma / (T * T)).powf(0.25), phase);
    assert!((gamma - want).norm() / want.norm() < 1e-4, "{gamma} vs {want}");
}

#[test]
fn perpendicular_mode_of_cw_signal() {
    let sigma = 0.05 * T;
    let phase = -1.1;
    let (lo, s) = cw_and_pulse(4096, sigma, phase);
    let basis = gram_schmidt(&lo, &s).unwrap();
    let mu = T / 2.0;
    let norm = (T - sigma * (8.0 * PI).sqrt()).sqrt().recip();
    let rot = Complex64::from_polar(1.0, phase);
    let closed: Vec<Complex64> = lo
        .grid()
        .times()
        .map(|t| rot * norm * (1.0 - 2f64.sqrt() * (-(t - mu).powi(2) / (4.0 * sigma * sigma)).exp()))
        .collect();
    let dt = lo.grid().dt();
    let diff: f64 = basis
        .xi_perp()
        .samples()
        .iter()
        .zip(&closed)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        * dt;
    assert!(diff.sqrt() < 1e-4, "L2 distance {}", diff.sqrt());
    let worst = basis
        .xi_perp()
        .samples()
        .iter()
        .zip(&closed)
        .map(|(a, b)| (a - b).norm() / norm)
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "max relative deviation {worst}");
}

#[test]
fn overlap_converges_at_second_order() {
    // a wide pulse reaches the interval edges, so the midpoint error is O(dt^2)
    let gamma = |n| {
        let (lo, s) = cw_and_pulse(n, 0.2 * T, 0.0);
        inner_product(&lo, &s).unwrap().re
    };
    let (g1, g2, g3) = (gamma(64), gamma(128), gamma(256));
    let ratio = (g1 - g2) / (g2 - g3);
    assert!((ratio - 4.0).abs() < 0.1, "refinement ratio {ratio}");
}

#[test]
fn reconstruction_residual_for_sech_pair() {
    let grid = TimeGrid::new(T, 2048).unwrap();
    let lo = make_mode(&ModeKind::SechRoot { center: 0.4, tau: 0.03, phase: 0.5 }, grid).unwrap();
    let s = make_mode(&ModeKind::GaussianRoot { center: 0.45, sigma: 0.08, phase: -0.2 }, grid).unwrap();
    let basis = gram_schmidt(&lo, &s).unwrap();
    assert!(basis.reconstruct_signal().distance(&s).unwrap() <= 1e-8);
    assert!(inner_product(basis.xi_lo(), basis.xi_perp()).unwrap().norm() < 1e-12);
}
