mod common;

use common::ledgers::{pows, M};
use proptest::prelude::*;
use rotamp::ensembles::Prior;
use rotamp::quadrature::fine_normal_rule;
use rotamp::spectra::SpectralLaw;
use rotamp::state_evolution::*;

const DELTA_STAR: f64 = 0.97364218130581;

fn beta_square() -> SpectralLaw {
    SpectralLaw::beta_mean0_var1(1.0, 2.0)
}

fn beta_rect() -> SpectralLaw {
    SpectralLaw::beta_secondmoment1(1.0, 2.0)
}

fn three_point() -> Prior {
    let a = 2f64.sqrt();
    Prior::AtomicSigned { values: vec![-a, 0.0, a], weights: vec![0.25, 0.5, 0.25] }
}

fn skewed() -> Prior {
    Prior::AtomicSigned { values: vec![-2.0, 0.5], weights: vec![0.2, 0.8] }
}

fn priors() -> Vec<Prior> {
    vec![Prior::Rademacher {}, Prior::StandardGaussian {}, three_point(), skewed()]
}

#[test]
fn first_step_values() {
    let cum = beta_square().cumulants(8);
    let se = se_pca_symmetric(&Prior::Rademacher {}, &cum, 2.5, 0.3, 1).unwrap();
    assert!((se.mu[0] - 0.75).abs() <= 1e-15);
    assert!((se.sigma[(0, 0)] - cum.kappa(2)).abs() <= 1e-12);

    let rc = beta_rect().rect_cumulants(0.5, 8);
    let se = se_pca_rect(&Prior::Rademacher {}, &Prior::Rademacher {}, &rc, 0.5, 1.5, 0.3, 1).unwrap();
    assert!((se.nu[0] - 0.45).abs() <= 1e-15);
    assert!((se.omega.as_ref().unwrap()[(0, 0)] - 0.5 * rc.kappa_even(1)).abs() <= 1e-12);
}

#[test]
fn gaussian_noise_se_collapses() {
    let cum = SpectralLaw::Semicircle {}.cumulants(16);
    let se = se_pca_symmetric(&Prior::Rademacher {}, &cum, 1.8, 0.3, 8).unwrap();
    for t in 0..8 {
        assert!((se.sigma[(t, t)] - se.delta[(t, t)]).abs() <= 1e-12, "t = {}", t + 1);
    }

    let mp = SpectralLaw::MarchenkoPastur { gamma: 0.5 }.rect_cumulants(0.5, 16);
    let se = se_pca_rect(&Prior::Rademacher {}, &three_point(), &mp, 0.5, 1.5, 0.3, 6).unwrap();
    let (om, g) = (se.omega.as_ref().unwrap(), se.gamma_overlap.as_ref().unwrap());
    for t in 0..6 {
        assert!((se.sigma[(t, t)] - g[(t, t)]).abs() <= 1e-12);
        assert!((om[(t, t)] - 0.5 * se.delta[(t, t)]).abs() <= 1e-12);
    }
}

#[test]
fn sigma_matches_double_sum() {
    for (alpha, prior) in [(2.5, Prior::Rademacher {}), (1.7, three_point()), (3.0, skewed())] {
        let t = 7;
        let cum = beta_square().cumulants(2 * t);
        let se = se_pca_symmetric(&prior, &cum, alpha, 0.3, t).unwrap();
        let delta = se.delta.view((0, 0), (t, t)).into_owned();
        let mut phi = M::zeros(t, t);
        for s in 1..t {
            phi[(s, s - 1)] = se.deriv_u[s - 1];
        }
        let p = pows(&phi, t);
        let pt: Vec<M> = p.iter().map(|m| m.transpose()).collect();
        let mut sigma = M::zeros(t, t);
        for j in 0..t {
            for k in 0..t {
                sigma += &p[j] * &delta * &pt[k] * cum.kappa(j + k + 2);
            }
        }
        assert!((sigma - &se.sigma).amax() <= 1e-10);
        for (s, m) in se.mu.iter().enumerate() {
            assert!((m - alpha * se.overlap_u[s]).abs() <= 1e-15);
        }
    }
}

fn check_overlap_matrix(d: &M, overlaps: &[f64], first: usize) {
    let eig = d.clone().symmetric_eigen().eigenvalues.min();
    assert!(eig >= -1e-9, "min eigenvalue {eig}");
    for a in 0..d.nrows() {
        for b in 0..d.ncols() {
            assert!(d[(a, b)].abs() <= (d[(a, a)] * d[(b, b)]).sqrt() + 1e-12);
        }
    }
    for t in first..d.nrows() {
        assert!((d[(t, t)] - overlaps[t]).abs() <= 1e-9, "t = {t}");
    }
}

#[test]
fn bayes_overlaps_are_consistent() {
    let cum = beta_square().cumulants(24);
    for prior in priors() {
        let se = se_pca_symmetric(&prior, &cum, 2.5, 0.3, 12).unwrap();
        check_overlap_matrix(&se.delta, &se.overlap_u, 1);
    }
    let rc = beta_rect().rect_cumulants(0.5, 16);
    for prior in priors() {
        let se = se_pca_rect(&prior, &Prior::Rademacher {}, &rc, 0.5, 1.5, 0.3, 8).unwrap();
        check_overlap_matrix(&se.delta, &se.overlap_u, 1);
        check_overlap_matrix(se.gamma_overlap.as_ref().unwrap(), &se.overlap_v, 0);
    }
}

fn increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

#[test]
fn predictions_increase_toward_fixed_point() {
    let cum = beta_square().cumulants(120);
    let se = se_pca_symmetric(&Prior::Rademacher {}, &cum, 2.5, 0.3, 11).unwrap();
    assert!(increasing(&se.overlap_u));
    let fp = fixed_point_symmetric(&Prior::Rademacher {}, &cum, 2.5).unwrap();
    assert!((fp.delta_star - DELTA_STAR).abs() <= 1e-9);
    assert!(se.overlap_u.iter().all(|&x| x < fp.delta_star));

    let rc = beta_rect().rect_cumulants(0.5, 120);
    let se = se_pca_rect(&Prior::Rademacher {}, &Prior::Rademacher {}, &rc, 0.5, 1.5, 0.3, 6).unwrap();
    assert!(increasing(&se.overlap_u));
    assert!(increasing(&se.overlap_v));
    let fp = fixed_point_rect(&Prior::Rademacher {}, &Prior::Rademacher {}, &rc, 0.5, 1.5).unwrap();
    assert!((fp.delta_star - 0.99386888).abs() <= 1e-7);
    assert!((fp.gamma_star.unwrap() - 0.94716747).abs() <= 1e-7);
    assert!(se.overlap_u.iter().all(|&x| x < fp.delta_star));
    assert!(se.overlap_v.iter().all(|&x| x < fp.gamma_star.unwrap()));
}

#[test]
fn long_run_reaches_fixed_point() {
    let cum = beta_square().cumulants(120);
    let se = se_pca_symmetric(&Prior::Rademacher {}, &cum, 2.5, 0.3, 60).unwrap();
    let fp = fixed_point_symmetric(&Prior::Rademacher {}, &cum, 2.5).unwrap();
    assert!((se.delta[(60, 60)] - fp.delta_star).abs() <= 1e-4);

    let rc = beta_rect().rect_cumulants(0.5, 120);
    let se = se_pca_rect(&Prior::Rademacher {}, &Prior::Rademacher {}, &rc, 0.5, 1.5, 0.3, 60).unwrap();
    let fp = fixed_point_rect(&Prior::Rademacher {}, &Prior::Rademacher {}, &rc, 0.5, 1.5).unwrap();
    assert!((se.delta[(60, 60)] - fp.delta_star).abs() <= 1e-4);
    assert!((se.gamma_overlap.as_ref().unwrap()[(59, 59)] - fp.gamma_star.unwrap()).abs() <= 1e-4);
}

#[test]
fn gaussian_semicircle_fixed_points() {
    let cum = SpectralLaw::Semicircle {}.cumulants(16);
    for alpha in [1.5, 2.0, 4.0] {
        let fp = fixed_point_symmetric(&Prior::StandardGaussian {}, &cum, alpha).unwrap();
        assert!((fp.delta_star - (1.0 - 1.0 / (alpha * alpha))).abs() <= 1e-8);
        assert!(fp.residual <= 1e-8);
    }
}

#[test]
fn baselines_agree_across_formulas() {
    let law = beta_square();
    for alpha in [2.5, 3.0, 4.0] {
        let a = pca_baseline_symmetric(&law, alpha).unwrap();
        let b = pca_baseline_symmetric_series(&law.cumulants(120), alpha).unwrap();
        assert!((a - b).abs() <= 1e-8, "alpha = {alpha}: {a} vs {b}");
        assert!(a > 0.0 && a <= 1.0);
    }
    let a = pca_baseline_symmetric(&law, 2.5).unwrap();
    assert!((a - 0.68613995853921).abs() <= 1e-9);

    let cases = [
        (beta_rect(), 0.5, vec![1.5, 3.0]),
        (SpectralLaw::MarchenkoPastur { gamma: 0.5 }, 0.5, vec![1.5, 3.0]),
        (beta_rect(), 1.0, vec![3.0]),
    ];
    for (law, gamma, alphas) in cases {
        for alpha in alphas {
            let (d1, g1) = pca_baseline_rect(&law, gamma, alpha).unwrap();
            let (d2, g2) = pca_baseline_rect_series(&law.rect_cumulants(gamma, 120), alpha).unwrap();
            assert!((d1 - d2).abs() <= 1e-8 && (g1 - g2).abs() <= 1e-8, "{d1} {d2} {g1} {g2}");
            assert!(d1 > 0.0 && d1 <= 1.0 && g1 > 0.0 && g1 <= 1.0);
            if gamma == 1.0 {
                assert!((d1 - g1).abs() <= 1e-10);
            }
        }
    }
    let (d, g) = pca_baseline_rect(&beta_rect(), 0.5, 1.5).unwrap();
    assert!((d - 0.69994529867).abs() <= 1e-9);
    assert!((g - 0.62277187995).abs() <= 1e-9);
}

#[test]
fn bayes_amp_dominates_pca() {
    let cum = beta_square().cumulants(120);
    let fp = fixed_point_symmetric(&Prior::Rademacher {}, &cum, 2.5).unwrap();
    assert!(fp.delta_star >= fp.delta_pca.unwrap() + 1e-3);
    let fp = fixed_point_symmetric(&Prior::StandardGaussian {}, &cum, 2.5).unwrap();
    assert!((fp.delta_star - fp.delta_pca.unwrap()).abs() <= 1e-6);

    let rc = beta_rect().rect_cumulants(0.5, 120);
    for alpha in [1.5, 3.0] {
        let r = Prior::Rademacher {};
        let fp = fixed_point_rect(&r, &r, &rc, 0.5, alpha).unwrap();
        let product = fp.delta_pca.unwrap() * fp.gamma_pca.unwrap();
        assert!(fp.delta_star * fp.gamma_star.unwrap() >= product + 1e-3);
        let (d, g, s, o) = (fp.delta_star, fp.gamma_star.unwrap(), fp.sigma_star, fp.omega_star.unwrap());
        assert!((fp.x_star.unwrap() - alpha * alpha * d * g * (1.0 - d) * (1.0 - g) / (0.5 * s * o)).abs() <= 1e-10);
        assert!(fp.residual <= 1e-8);

        let n = Prior::StandardGaussian {};
        let fp = fixed_point_rect(&n, &n, &rc, 0.5, alpha).unwrap();
        assert!((fp.delta_star - fp.delta_pca.unwrap()).abs() <= 1e-6);
        assert!((fp.gamma_star.unwrap() - fp.gamma_pca.unwrap()).abs() <= 1e-6);
    }
}

/// `1 - E[tanh(s + sqrt(s) Z)]` by composite Simpson on `[-12, 12]`.
fn rademacher_mmse_oracle(s: f64) -> f64 {
    let (a, b, n) = (-12.0, 12.0, 20_000);
    let h = (b - a) / n as f64;
    let g = |z: f64| (s + s.sqrt() * z).tanh() * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let inner: f64 = (1..n).map(|i| g(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    1.0 - (g(a) + g(b) + inner) * h / 3.0
}

#[test]
fn mmse_values() {
    for prior in priors() {
        assert!((mmse(&prior, 0.0) - 1.0).abs() <= 1e-12);
    }
    assert!((mmse(&Prior::StandardGaussian {}, 3.0) - 0.25).abs() <= 1e-12);
    for s in [0.5, 1.0, 4.0, 9.0] {
        let o = rademacher_mmse_oracle(s);
        let q = mmse(&Prior::Rademacher {}, s);
        assert!((q - o).abs() <= 1e-4, "s = {s}: {q} vs {o}");
        let fine = mmse_with(&Prior::Rademacher {}, s, fine_normal_rule());
        assert!((fine - o).abs() <= 1e-9, "s = {s}: {fine} vs {o}");
    }
    assert!((mmse(&Prior::Rademacher {}, 4.0) - 0.068597).abs() <= 1e-4);
}

#[test]
fn mmse_bound_and_monotonicity() {
    let grid = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    for prior in priors() {
        let vals: Vec<f64> = grid.iter().map(|&s| mmse(&prior, s)).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        for (&s, &v) in grid.iter().zip(&vals) {
            assert!(v >= -1e-12 && v <= 1f64.min(1.0 / (1.0 + s)) + 1e-12);
            if matches!(prior, Prior::StandardGaussian {}) {
                assert!((v - 1.0 / (1.0 + s)).abs() <= 1e-12);
            }
        }
    }
    assert!(1.0 / 5.0 - mmse(&Prior::Rademacher {}, 4.0) >= 1e-3);
}

/// Five-point central difference.
fn stencil(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

proptest! {
    #[test]
    fn posterior_mean_derivative(idx in 0usize..4, mu in 0.2f64..3.0, s2 in 0.3f64..3.0, f in -4.0f64..4.0) {
        let eta = PosteriorMean::new(&priors()[idx], mu, s2).unwrap();
        let d = eta.deriv(f);
        let fd = stencil(|x| eta.eval(x), f, 1e-3);
        prop_assert!((d - fd).abs() <= 1e-6 * d.abs().max(1e-3), "{} vs {}", d, fd);
        prop_assert!((posterior_mean_deriv(&priors()[idx], f, mu, s2).unwrap() - d).abs() <= 1e-15);
    }

    #[test]
    fn mmse_below_linear_risk(idx in 0usize..4, s in 0.0f64..30.0) {
        let v = mmse(&priors()[idx], s);
        prop_assert!(v <= 1.0 / (1.0 + s) + 1e-12);
        prop_assert!(mmse(&priors()[idx], s + 0.1) <= v + 1e-12);
    }
}
