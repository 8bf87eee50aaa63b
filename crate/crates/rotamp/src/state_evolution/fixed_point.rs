use super::denoiser::mmse_with;
use crate::amp_engine::LedgerKind;
use crate::ensembles::Prior;
use crate::error::{Error, Result};
use crate::freeprob::{
    cauchy_transform_deriv, cauchy_transform_inverse, CumulantKind, CumulantTable, RectTransforms,
};
use crate::quadrature::fine_normal_rule;
use crate::spectra::SpectralLaw;
use serde::{Deserialize, Serialize};

/// Damped Picard iteration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardOptions {
    /// Weight of the new iterate: `x <- (1 - damping) x + damping F(x)`.
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions { damping: 0.5, tol: 1e-10, max_iter: 10_000 }
    }
}

/// Solution of the PCA fixed-point equations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    pub kind: LedgerKind,
    pub delta_star: f64,
    pub sigma_star: f64,
    pub gamma_star: Option<f64>,
    pub omega_star: Option<f64>,
    pub x_star: Option<f64>,
    pub converged: bool,
    /// Largest absolute equation residual at the returned point.
    pub residual: f64,
    pub iterations: usize,
    /// Spectral-PCA overlap from the cumulant form, when it lies in `(0, 1]`.
    pub delta_pca: Option<f64>,
    pub gamma_pca: Option<f64>,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")))
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("aspect ratio must be positive, got {gamma}")))
    }
}

fn mmse_fine(prior: &Prior, s: f64) -> f64 {
    mmse_with(prior, s, fine_normal_rule())
}

/// Runs `x <- (1 - w) x + w F(x)` until `max |F(x) - x| <= tol`.
fn picard<const N: usize>(
    mut x: [f64; N],
    opts: &PicardOptions,
    map: impl Fn(&[f64; N]) -> Result<[f64; N]>,
) -> Result<([f64; N], f64, usize)> {
    let w = opts.damping;
    if !(w > 0.0 && w <= 1.0) {
        return Err(Error::InvalidArgument(format!("damping must lie in (0, 1], got {w}")));
    }
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let fx = map(&x)?;
        residual = x.iter().zip(&fx).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !residual.is_finite() {
            break;
        }
        if residual <= opts.tol {
            return Ok((fx, residual, it));
        }
        for (a, b) in x.iter_mut().zip(&fx) {
            *a = (1.0 - w) * *a + w * b;
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual })
}

fn series(v: Result<crate::freeprob::SeriesValue>) -> Result<f64> {
    Ok(v?.value)
}

fn in_unit(x: f64) -> Option<f64> {
    (x > 0.0 && x <= 1.0 + 1e-12).then_some(x)
}

/// Solves `1 - Delta = mmse(alpha^2 Delta^2 / Sigma)`, `Sigma = Delta R'(alpha Delta (1 - Delta) / Sigma)`
/// from `(1 - 1/alpha^2, kappa_2)`.
pub fn fixed_point_symmetric(prior: &Prior, cumulants: &CumulantTable, alpha: f64) -> Result<FixedPoint> {
    fixed_point_symmetric_with(prior, cumulants, alpha, &PicardOptions::default())
}

pub fn fixed_point_symmetric_with(
    prior: &Prior,
    cumulants: &CumulantTable,
    alpha: f64,
    opts: &PicardOptions,
) -> Result<FixedPoint> {
    prior.validate()?;
    check_alpha(alpha)?;
    cumulants.require(2)?;
    let map = |&[d, s]: &[f64; 2]| -> Result<[f64; 2]> {
        if !(s > 0.0) {
            return Err(Error::DegenerateNoise(s));
        }
        let d_new = 1.0 - mmse_fine(prior, alpha * alpha * d * d / s);
        let s_new = d * series(cumulants.r_transform_deriv(alpha * d * (1.0 - d) / s))?;
        Ok([d_new, s_new])
    };
    let start = [1.0 - 1.0 / (alpha * alpha), cumulants.kappa(2)];
    let ([d, s], _, iterations) = picard(start, opts, map)?;
    let [fd, fs] = map(&[d, s])?;
    let residual = (fd - d).abs().max((fs - s).abs());
    Ok(FixedPoint {
        kind: LedgerKind::Symmetric,
        delta_star: d,
        sigma_star: s,
        gamma_star: None,
        omega_star: None,
        x_star: None,
        converged: true,
        residual,
        iterations,
        delta_pca: pca_baseline_symmetric_series(cumulants, alpha).ok().and_then(in_unit),
        gamma_pca: None,
    })
}

/// `X = alpha^2 Delta Gamma (1 - Delta)(1 - Gamma) / (gamma Sigma Omega)`.
pub fn rect_x(alpha: f64, gamma: f64, d: f64, g: f64, s: f64, o: f64) -> f64 {
    alpha * alpha * d * g * (1.0 - d) * (1.0 - g) / (gamma * s * o)
}

/// Solves the five rectangular fixed-point equations from `Delta = Gamma = 1 - gamma/alpha^2`,
/// `Sigma = kappa_2`, `Omega = gamma kappa_2`, recomputing `X` from the others each sweep.
pub fn fixed_point_rect(
    prior_u: &Prior,
    prior_v: &Prior,
    cumulants: &CumulantTable,
    gamma: f64,
    alpha: f64,
) -> Result<FixedPoint> {
    fixed_point_rect_with(prior_u, prior_v, cumulants, gamma, alpha, &PicardOptions::default())
}

pub fn fixed_point_rect_with(
    prior_u: &Prior,
    prior_v: &Prior,
    cumulants: &CumulantTable,
    gamma: f64,
    alpha: f64,
    opts: &PicardOptions,
) -> Result<FixedPoint> {
    prior_u.validate()?;
    prior_v.validate()?;
    check_alpha(alpha)?;
    check_gamma(gamma)?;
    if cumulants.kind != CumulantKind::Rectangular {
        return Err(Error::InvalidArgument("rectangular fixed point needs rectangular cumulants".into()));
    }
    cumulants.require(1)?;
    let a2 = alpha * alpha;
    let map = |&[d, s, g, o]: &[f64; 4]| -> Result<[f64; 4]> {
        if !(s > 0.0) {
            return Err(Error::DegenerateNoise(s));
        }
        if !(o > 0.0) {
            return Err(Error::DegenerateNoise(o));
        }
        let x = rect_x(alpha, gamma, d, g, s, o);
        let rp = series(cumulants.r_transform_deriv(x))?;
        let st = series(cumulants.s_transform(x))?;
        Ok([
            1.0 - mmse_fine(prior_u, a2 * g * g / (gamma * gamma * s)),
            g * rp + a2 * d.powi(3) * (1.0 - g).powi(2) / (o * o) * st,
            1.0 - mmse_fine(prior_v, a2 * d * d / o),
            gamma * d * rp + a2 * g.powi(3) * (1.0 - d).powi(2) / (gamma * s * s) * st,
        ])
    };
    let init = 1.0 - gamma / a2;
    let k2 = cumulants.kappa_even(1);
    let start = [init, k2, init, gamma * k2];
    let (p, _, iterations) = picard(start, opts, map)?;
    let f = map(&p)?;
    let residual = p.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let [d, s, g, o] = p;
    let baseline = pca_baseline_rect_series(cumulants, alpha).ok();
    let (dp, gp) = match baseline {
        Some((dp, gp)) => (in_unit(dp), in_unit(gp)),
        None => (None, None),
    };
    Ok(FixedPoint {
        kind: LedgerKind::Rectangular,
        delta_star: d,
        sigma_star: s,
        gamma_star: Some(g),
        omega_star: Some(o),
        x_star: Some(rect_x(alpha, gamma, d, g, s, o)),
        converged: true,
        residual,
        iterations,
        delta_pca: dp.zip(gp).map(|p| p.0),
        gamma_pca: dp.zip(gp).map(|p| p.1),
    })
}

fn below_transition(e: Error) -> Error {
    match e {
        Error::InverseOutOfRange { target, max } => Error::BelowTransition(format!(
            "target {target} exceeds the transform's maximum {max} above the support"
        )),
        other => other,
    }
}

/// `Delta_PCA = -1 / (alpha^2 G'(G^{-1}(1/alpha)))`.
pub fn pca_baseline_symmetric(law: &SpectralLaw, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    law.validate()?;
    let z = cauchy_transform_inverse(law, 1.0 / alpha).map_err(below_transition)?;
    Ok(-1.0 / (alpha * alpha * cauchy_transform_deriv(law, z)?))
}

/// `Delta_PCA = 1 - R'(1/alpha) / alpha^2` from the cumulant series.
pub fn pca_baseline_symmetric_series(cumulants: &CumulantTable, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if cumulants.kind != CumulantKind::Square {
        return Err(Error::InvalidArgument("symmetric baseline needs square cumulants".into()));
    }
    Ok(1.0 - series(cumulants.r_transform_deriv(1.0 / alpha))? / (alpha * alpha))
}

/// `(Delta_PCA, Gamma_PCA)` from the D-transform of the singular-value law: with
/// `x = gamma/alpha^2` and `z = D^{-1}(x)`, `Delta = -2 x phi(z)/D'(z)` and
/// `Gamma = -2 x bar phi(z)/D'(z)`. For `gamma > 1` the transposed problem is solved.
pub fn pca_baseline_rect(law: &SpectralLaw, gamma: f64, alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    check_gamma(gamma)?;
    law.validate()?;
    if gamma > 1.0 {
        let (g, d) = pca_baseline_rect(law, 1.0 / gamma, alpha / gamma)?;
        return Ok((d, g));
    }
    let tr = RectTransforms::new(law, gamma);
    let x = gamma / (alpha * alpha);
    let z = tr.d_inverse(x).map_err(below_transition)?;
    let dd = tr.d_deriv(z)?;
    Ok((-2.0 * x * tr.phi(z)? / dd, -2.0 * x * tr.phi_bar(z)? / dd))
}

/// `(Delta_PCA, Gamma_PCA)` from the rectangular R-transform:
/// `Delta = (T(R) - x T'(R) R') / (1 + gamma R)` and `Gamma = (T(R) - x T'(R) R') / (1 + R)`
/// with `T(z) = (1 + z)(1 + gamma z)` and `x = gamma/alpha^2`.
pub fn pca_baseline_rect_series(cumulants: &CumulantTable, alpha: f64) -> Result<(f64, f64)> {
    check_alpha(alpha)?;
    let gamma = match (cumulants.kind, cumulants.gamma) {
        (CumulantKind::Rectangular, Some(g)) => g,
        _ => return Err(Error::InvalidArgument("rectangular baseline needs rectangular cumulants".into())),
    };
    if gamma > 1.0 {
        // The transpose has aspect ratio 1/gamma and rectangular cumulants gamma kappa_{2k}.
        let inner = CumulantTable::rect_from_cumulants(&cumulants.bar_cumulants, 1.0 / gamma);
        let inner = match cumulants.spectral_bound {
            Some(b) => inner.with_spectral_bound(b),
            None => inner,
        };
        let (g, d) = pca_baseline_rect_series(&inner, alpha / gamma)?;
        return Ok((d, g));
    }
    let x = gamma / (alpha * alpha);
    let r = series(cumulants.r_transform(x))?;
    let rp = series(cumulants.r_transform_deriv(x))?;
    let t = (1.0 + r) * (1.0 + gamma * r);
    let tp = (1.0 + gamma * r) + gamma * (1.0 + r);
    let num = t - x * tp * rp;
    Ok((num / (1.0 + gamma * r), num / (1.0 + r)))
}
