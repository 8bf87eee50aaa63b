//! One PASS/FAIL line per acceptance criterion; every tolerance is pinned here.

mod common;

use common::ledgers::{gaussian_specialization, rect_identities, symmetric_identities};
use common::nc::{self, rat, to_f64};
use common::stats::normal_pvalue;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotamp::amp_engine::{run_symmetric_amp, CumulantSource, FnDenoiser, Memory, RunOptions};
use rotamp::cli::{simulate, ExperimentConfig};
use rotamp::ensembles::{build_symmetric_instance, Prior, RotationKind, SpectrumInput};
use rotamp::freeprob::*;
use rotamp::spectra::{SamplingMode, SpectralLaw};
use rotamp::state_evolution::*;
use serde_json::json;
use std::time::Instant;

const ROUND_TRIP_TOL: f64 = 1e-10;
const ENUMERATION_TOL: f64 = 1e-12;
const IDENTITY_TOL: f64 = 1e-10;
const GAUSSIAN_TOL: f64 = 1e-12;
const BAND: f64 = 0.02;
const CLOSED_FORM_TOL: f64 = 1e-8;
const DERIV_TOL: f64 = 1e-5;
const MMSE_GAP: f64 = 1e-3;
const KS_LEVEL: f64 = 0.01;
const KS_MIN_PASS: usize = 18;
const LONG_RUN_TOL: f64 = 1e-4;

type Verdict = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

/// Round-trip error of `back` against `x`, relative to the largest magnitude in `x` or the
/// intermediate `mid`.
fn round_trip_err(x: &[f64], mid: &[f64], back: &[f64]) -> f64 {
    let scale = x.iter().chain(mid).fold(1.0f64, |m, v| m.max(v.abs()));
    x.iter().zip(back).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let k: usize = rng.random_range(1..=12);
        let x: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let gamma = rng.random_range(0.1..3.0);
        let kh = k.div_ceil(2);
        let xh = &x[..kh];
        let c = free_cumulants_from_moments(&x);
        let m = moments_from_free_cumulants(&x);
        let rc = rect_cumulants_from_moments(xh, gamma);
        let rm = rect_moments_from_cumulants(xh, gamma);
        worst = worst
            .max(round_trip_err(&x, &c, &moments_from_free_cumulants(&c)))
            .max(round_trip_err(&x, &m, &free_cumulants_from_moments(&m)))
            .max(round_trip_err(xh, &rc, &rect_moments_from_cumulants(&rc, gamma)))
            .max(round_trip_err(xh, &rm, &rect_cumulants_from_moments(&rm, gamma)));
    }
    ensure(worst <= ROUND_TRIP_TOL, format!("round trip error {worst:.2e}"))?;

    let sc = SpectralLaw::Semicircle {}.cumulants(12).cumulants;
    ensure(sc.iter().enumerate().all(|(i, &c)| c == if i == 1 { 1.0 } else { 0.0 }), format!("semicircle {sc:?}"))?;
    for gamma in [0.25, 0.5, 1.0] {
        let mp = SpectralLaw::MarchenkoPastur { gamma }.rect_cumulants(gamma, 6).cumulants;
        ensure(mp.iter().enumerate().all(|(i, &c)| c == if i == 0 { 1.0 } else { 0.0 }), format!("MP({gamma}) {mp:?}"))?;
    }

    let mut enum_worst: f64 = 0.0;
    let rel = |got: f64, exact: &BigRational| {
        let e = to_f64(exact);
        (got - e).abs() / e.abs().max(1.0)
    };
    for seed in 0..3u64 {
        let mut r = ChaCha8Rng::seed_from_u64(100 + seed);
        let kappa: Vec<BigRational> = (0..16).map(|_| rat(r.random_range(-8..=8), r.random_range(1..=8))).collect();
        let kf: Vec<f64> = kappa.iter().map(to_f64).collect();
        let sq = partial_moment_coeffs(&kf, 8, 8).map_err(|e| e.to_string())?;
        let gamma = rat(1 + seed as i64, 3);
        let rt = rect_partial_moment_coeffs(&kf, to_f64(&gamma), 8, 7).map_err(|e| e.to_string())?;
        for k in 1..=8 {
            for j in 0..=8 - k {
                enum_worst = enum_worst
                    .max(rel(sq.get(k, j).unwrap(), &nc::square_coefficient(&kappa, k, j)))
                    .max(rel(rt.get(k, j).unwrap(), &nc::rect_coefficient(&kappa, &gamma, k, j, false)))
                    .max(rel(rt.get_bar(k, j).unwrap(), &nc::rect_coefficient(&kappa, &gamma, k, j, true)));
            }
        }
    }
    ensure(enum_worst <= ENUMERATION_TOL, format!("enumeration error {enum_worst:.2e}"))?;
    Ok(format!("round trip {worst:.1e}, enumeration {enum_worst:.1e}"))
}

fn criterion_2() -> Verdict {
    let mut worst = (0.0f64, "");
    for seed in 0..50u64 {
        let t = 1 + seed as usize % 6;
        for (name, e) in symmetric_identities(seed, t).into_iter().chain(rect_identities(1000 + seed, t)) {
            if !(e <= worst.0) {
                worst = (e, name);
            }
        }
    }
    ensure(worst.0 <= IDENTITY_TOL, format!("{}: {:.2e}", worst.1, worst.0))?;
    Ok(format!("50 + 50 ledgers, worst {:.1e} ({})", worst.0, worst.1))
}

fn criterion_3() -> Verdict {
    let worst = (0..50u64).map(|s| gaussian_specialization(s, 1 + s as usize % 6)).fold(0.0, f64::max);
    ensure(worst <= GAUSSIAN_TOL, format!("gap {worst:.2e}"))?;
    Ok(format!("worst gap {worst:.1e}"))
}

fn config(value: serde_json::Value) -> Result<ExperimentConfig, String> {
    ExperimentConfig::from_json(&value.to_string()).map_err(|e| e.to_string())
}

fn band_check(label: &str, pred: &[f64], mean: &[f64]) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for (t, (p, m)) in pred.iter().zip(mean).enumerate() {
        let gap = (p - m).abs();
        println!("    {label} t={:2}  se={p:.5}  mean={m:.5}  gap={gap:.5}", t + 1);
        worst = worst.max(gap);
    }
    ensure(worst <= BAND, format!("{label} gap {worst:.4}"))?;
    Ok(worst)
}

fn criterion_4() -> Verdict {
    let law = SpectralLaw::beta_mean0_var1(1.0, 2.0);
    let cfg = config(json!({
        "kind": "symmetric", "n": 2000, "alpha": 2.5, "epsilon": 0.3, "law": law,
        "sampling": "quantile", "steps": 11, "replicates": 100, "seed": 2024,
    }))?;
    let (se, sim) = simulate(&cfg).map_err(|f| format!("{f:?}"))?;
    ensure(sim.completed() == 100, format!("{} of 100 replicates finished", sim.completed()))?;
    let summary = sim.summary();
    let mean: Vec<f64> = summary.iter().map(|s| s.mean_u.unwrap()).collect();
    let worst = band_check("u", &se.overlap_u[1..], &mean)?;
    let fp = fixed_point_symmetric(&Prior::Rademacher {}, &law.cumulants(120), 2.5).map_err(|e| e.to_string())?;
    let pca = pca_baseline_symmetric(&law, 2.5).map_err(|e| e.to_string())?;
    let last = mean[10];
    ensure((last - fp.delta_star).abs() <= BAND, format!("final mean {last:.4} vs Delta* {:.4}", fp.delta_star))?;
    ensure(fp.delta_star > pca, format!("Delta* {} <= Delta_PCA {pca}", fp.delta_star))?;
    Ok(format!("max gap {worst:.4}, final {last:.4} vs Delta* {:.4}, Delta_PCA {pca:.4}", fp.delta_star))
}

fn criterion_5() -> Verdict {
    let law = SpectralLaw::beta_secondmoment1(1.0, 2.0);
    let cfg = config(json!({
        "kind": "rectangular", "m": 2000, "n": 4000, "alpha": 1.5, "epsilon": 0.3, "law": law,
        "sampling": "quantile", "steps": 6, "replicates": 100, "seed": 2025,
    }))?;
    let (se, sim) = simulate(&cfg).map_err(|f| format!("{f:?}"))?;
    ensure(sim.completed() == 100, format!("{} of 100 replicates finished", sim.completed()))?;
    let summary = sim.summary();
    let mu: Vec<f64> = summary.iter().map(|s| s.mean_u.unwrap()).collect();
    let mv: Vec<f64> = summary.iter().map(|s| s.mean_v.unwrap()).collect();
    let wu = band_check("u", &se.overlap_u[1..], &mu)?;
    let wv = band_check("v", &se.overlap_v, &mv)?;
    let r = Prior::Rademacher {};
    let fp = fixed_point_rect(&r, &r, &law.rect_cumulants(0.5, 120), 0.5, 1.5).map_err(|e| e.to_string())?;
    let (dp, gp) = pca_baseline_rect(&law, 0.5, 1.5).map_err(|e| e.to_string())?;
    let (d, g) = (fp.delta_star, fp.gamma_star.unwrap());
    ensure((mu[5] - d).abs() <= BAND, format!("final u {:.4} vs Delta* {d:.4}", mu[5]))?;
    ensure((mv[5] - g).abs() <= BAND, format!("final v {:.4} vs Gamma* {g:.4}", mv[5]))?;
    ensure(d * g > dp * gp, format!("Delta*Gamma* {} <= {}", d * g, dp * gp))?;
    Ok(format!(
        "max gaps u {wu:.4} v {wv:.4}, final ({:.4}, {:.4}) vs ({d:.4}, {g:.4}), PCA ({dp:.4}, {gp:.4})",
        mu[5], mv[5]
    ))
}

fn criterion_6() -> Verdict {
    let sc = SpectralLaw::Semicircle {}.cumulants(16);
    let mut worst: f64 = 0.0;
    for alpha in [1.5, 2.0, 4.0] {
        let fp = fixed_point_symmetric(&Prior::StandardGaussian {}, &sc, alpha).map_err(|e| e.to_string())?;
        worst = worst.max((fp.delta_star - (1.0 - 1.0 / (alpha * alpha))).abs());
    }
    ensure(worst <= CLOSED_FORM_TOL, format!("Gaussian/semicircle fixed point off by {worst:.2e}"))?;

    let law = SpectralLaw::beta_mean0_var1(1.0, 2.0);
    let a = pca_baseline_symmetric(&law, 2.5).map_err(|e| e.to_string())?;
    let b = pca_baseline_symmetric_series(&law.cumulants(120), 2.5).map_err(|e| e.to_string())?;
    let sym = (a - b).abs();
    ensure(sym <= CLOSED_FORM_TOL, format!("symmetric baseline forms differ by {sym:.2e}"))?;

    let mut rect: f64 = 0.0;
    for law in [SpectralLaw::beta_secondmoment1(1.0, 2.0), SpectralLaw::MarchenkoPastur { gamma: 0.5 }] {
        let (d1, g1) = pca_baseline_rect(&law, 0.5, 1.5).map_err(|e| e.to_string())?;
        let (d2, g2) = pca_baseline_rect_series(&law.rect_cumulants(0.5, 120), 1.5).map_err(|e| e.to_string())?;
        rect = rect.max((d1 - d2).abs()).max((g1 - g2).abs());
    }
    ensure(rect <= CLOSED_FORM_TOL, format!("rectangular baseline forms differ by {rect:.2e}"))?;
    Ok(format!("fixed point {worst:.1e}, symmetric baseline {sym:.1e}, rectangular baseline {rect:.1e}"))
}

fn priors() -> Vec<Prior> {
    let a = 2f64.sqrt();
    vec![
        Prior::Rademacher {},
        Prior::StandardGaussian {},
        Prior::AtomicSigned { values: vec![-a, 0.0, a], weights: vec![0.25, 0.5, 0.25] },
        Prior::AtomicSigned { values: vec![-2.0, 0.5], weights: vec![0.2, 0.8] },
    ]
}

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut deriv: f64 = 0.0;
    for _ in 0..400 {
        let prior = &priors()[rng.random_range(0..4)];
        let eta = PosteriorMean::new(prior, rng.random_range(0.2..3.0), rng.random_range(0.3..3.0))
            .map_err(|e| e.to_string())?;
        let f = rng.random_range(-4.0..4.0);
        let h = 1e-3;
        let fd = (eta.eval(f - 2.0 * h) - 8.0 * eta.eval(f - h) + 8.0 * eta.eval(f + h) - eta.eval(f + 2.0 * h)) / (12.0 * h);
        let d = eta.deriv(f);
        deriv = deriv.max((d - fd).abs() / d.abs().max(1e-3));
    }
    ensure(deriv <= DERIV_TOL, format!("derivative error {deriv:.2e}"))?;

    let grid = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    for prior in priors() {
        let vals: Vec<f64> = grid.iter().map(|&s| mmse(&prior, s)).collect();
        ensure(vals.windows(2).all(|w| w[1] <= w[0] + 1e-12), format!("mmse not monotone for {prior:?}"))?;
        for (&s, &v) in grid.iter().zip(&vals) {
            ensure(v <= 1f64.min(1.0 / (1.0 + s)) + 1e-12, format!("mmse bound fails at s={s} for {prior:?}"))?;
            if matches!(prior, Prior::StandardGaussian {}) {
                ensure((v - 1.0 / (1.0 + s)).abs() <= 1e-12, format!("Gaussian mmse off at s={s}"))?;
            }
        }
    }
    let gap = 0.2 - mmse(&Prior::Rademacher {}, 4.0);
    ensure(gap >= MMSE_GAP, format!("Rademacher gap {gap:.2e}"))?;

    let law = SpectralLaw::beta_mean0_var1(1.0, 2.0);
    let cum = law.cumulants(4);
    let tanh = FnDenoiser { f: |x: &[f64]| x[0].tanh(), memory: Memory::Last };
    let mut ks_pass = 0;
    for seed in 0..20u64 {
        let spec = SpectrumInput::Law { law: law.clone(), mode: SamplingMode::Quantile };
        let inst = build_symmetric_instance(&spec, 2000, 2.5, &Prior::Rademacher {}, 0.3, 500 + seed, RotationKind::Householder)
            .map_err(|e| e.to_string())?;
        let opts = RunOptions::new(&cum, CumulantSource::Limit).with_signal(&inst.u_star, None);
        let traj = run_symmetric_amp(&inst, &inst.u1, &[&tanh], &opts).map_err(|e| e.to_string())?;
        let mu = inst.alpha * traj.overlaps[0].overlap_u.unwrap();
        let noise: Vec<f64> = traj.z[0].iter().zip(&inst.u_star).map(|(z, u)| z - mu * u).collect();
        let sd = (cum.kappa(2) * traj.ledger.delta[(0, 0)]).sqrt();
        if normal_pvalue(&noise, sd) >= KS_LEVEL {
            ks_pass += 1;
        }
    }
    ensure(ks_pass >= KS_MIN_PASS, format!("KS: {ks_pass}/20 seeds"))?;

    let cum = law.cumulants(120);
    let se = se_pca_symmetric(&Prior::Rademacher {}, &cum, 2.5, 0.3, 60).map_err(|e| e.to_string())?;
    let fp = fixed_point_symmetric(&Prior::Rademacher {}, &cum, 2.5).map_err(|e| e.to_string())?;
    let long = (se.delta[(60, 60)] - fp.delta_star).abs();
    ensure(long <= LONG_RUN_TOL, format!("long-run gap {long:.2e}"))?;
    Ok(format!("derivative {deriv:.1e}, mmse gap {gap:.3}, KS {ks_pass}/20, long run {long:.1e}"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Verdict); 7] = [
        ("cumulant calculus", criterion_1),
        ("matrix identities", criterion_2),
        ("Gaussian specialization", criterion_3),
        ("symmetric Monte Carlo vs state evolution", criterion_4),
        ("rectangular Monte Carlo vs state evolution", criterion_5),
        ("closed-form spot checks", criterion_6),
        ("property suite", criterion_7),
    ];
    let mut failed = vec![];
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = check();
        let secs = start.elapsed().as_secs_f64();
        match &verdict {
            Ok(detail) => println!("PASS {} {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                println!("FAIL {} {name}: {detail} [{secs:.1}s]", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
