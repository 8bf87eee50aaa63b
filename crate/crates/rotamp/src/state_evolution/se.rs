use super::denoiser::{channel_expect, PosteriorMean};
use crate::amp_engine::{onsager_rectangular, onsager_symmetric, CumulantSource, LedgerKind, OnsagerLedger};
use crate::ensembles::Prior;
use crate::error::{Error, Result};
use crate::freeprob::CumulantTable;
use crate::quadrature::{fine_normal_rule, NormalRule};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::{json, Value};

/// State evolution of Bayes-AMP for spiked PCA.
///
/// Iterates are 1-based as in `U_1, U_2, ..`; `U_{t+1}` denoises `F_t` and (rectangular) `V_t`
/// denoises `G_t`.
#[derive(Debug, Clone)]
pub struct SeTrajectory {
    pub kind: LedgerKind,
    pub steps: usize,
    /// Means `mu_1..mu_T` of `F_t`.
    pub mu: Vec<f64>,
    /// Covariance of `F_1..F_T` (noise part).
    pub sigma: DMatrix<f64>,
    /// Means `nu_1..nu_T` of `G_t` (rectangular).
    pub nu: Vec<f64>,
    /// Covariance of `G_1..G_T` (rectangular).
    pub omega: Option<DMatrix<f64>>,
    /// `E[U_s U_t]` for `s, t = 1..T+1`.
    pub delta: DMatrix<f64>,
    /// `E[V_s V_t]` for `s, t = 1..T` (rectangular).
    pub gamma_overlap: Option<DMatrix<f64>>,
    /// `E[U_t U*]` for `t = 1..T+1`.
    pub overlap_u: Vec<f64>,
    /// `E[V_t V*]` for `t = 1..T` (rectangular).
    pub overlap_v: Vec<f64>,
    /// `E[u_t'(F_{t-1})]` for `t = 2..T+1`.
    pub deriv_u: Vec<f64>,
    /// `E[v_t'(G_t)]` for `t = 1..T` (rectangular).
    pub deriv_v: Vec<f64>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl SeTrajectory {
    pub fn to_json(&self) -> Value {
        json!({
            "kind": self.kind,
            "steps": self.steps,
            "mu": self.mu,
            "sigma": rows(&self.sigma),
            "nu": self.nu,
            "omega": self.omega.as_ref().map(rows),
            "delta": rows(&self.delta),
            "gamma_overlap": self.gamma_overlap.as_ref().map(rows),
            "overlap_u": self.overlap_u,
            "overlap_v": self.overlap_v,
            "deriv_u": self.deriv_u,
            "deriv_v": self.deriv_v,
        })
    }

    /// Predicted `(1/m) u_t^T u*` for `t = 1..T+1`.
    pub fn predicted_overlap_u(&self) -> &[f64] {
        &self.overlap_u
    }
}

/// `Pi` applied to a 2x2 covariance: the off-diagonal entry is clipped to `sqrt(a d)` in
/// absolute value, keeping its sign.
pub fn psd_pair(a: f64, b: f64, d: f64) -> f64 {
    b.signum() * b.abs().min((a * d).max(0.0).sqrt())
}

/// `E[eta_a(F_a) eta_b(F_b)]`, with `(F_a, F_b) = (mu_a, mu_b) U* + (Z_a, Z_b)` and noise
/// covariance `Pi([[var_a, cov], [cov, var_b]])`.
pub fn pair_expect(
    prior: &Prior,
    rule: &NormalRule,
    ea: &PosteriorMean,
    eb: &PosteriorMean,
    cov: f64,
) -> f64 {
    let (va, vb) = (ea.sigma2, eb.sigma2);
    let c = psd_pair(va, cov, vb);
    let Some((values, weights)) = prior.atoms() else {
        let ca = ea.mu / (va + ea.mu * ea.mu);
        let cb = eb.mu / (vb + eb.mu * eb.mu);
        return ca * cb * (ea.mu * eb.mu + c);
    };
    let (sa, sb) = (va.sqrt(), vb.sqrt());
    let rho = if sa * sb > 0.0 { c / (sa * sb) } else { 0.0 };
    let perp = (1.0 - rho * rho).max(0.0).sqrt();
    let mut total = 0.0;
    for (&u, &w) in values.iter().zip(&weights) {
        if w == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for (&x, &wx) in rule.nodes.iter().zip(&rule.weights) {
            let left = ea.eval(ea.mu * u + sa * x);
            let centre = eb.mu * u + sb * rho * x;
            let inner: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&y, &wy)| wy * eb.eval(centre + sb * perp * y))
                .sum();
            acc += wx * left * inner;
        }
        total += w * acc;
    }
    total
}

/// `(E[eta^2], E[U* eta], E[eta'])` in the channel of `eta`.
fn moments(prior: &Prior, rule: &NormalRule, eta: &PosteriorMean) -> (f64, f64, f64) {
    let (mu, var) = (eta.mu, eta.sigma2);
    let sq = channel_expect(prior, mu, var, rule, |_, f| eta.eval(f).powi(2));
    let cross = channel_expect(prior, mu, var, rule, |u, f| u * eta.eval(f));
    let d = channel_expect(prior, mu, var, rule, |_, f| eta.deriv(f));
    (sq, cross, d)
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::QuadratureFailure(format!("non-finite {what}")))
    }
}

fn check_inputs(alpha: f64, epsilon: f64, steps: usize) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha must be nonnegative, got {alpha}")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if steps == 0 {
        return Err(Error::InvalidArgument("state evolution needs at least one step".into()));
    }
    Ok(())
}

fn corner(m: &DMatrix<f64>, t: usize) -> DMatrix<f64> {
    m.view((0, 0), (t, t)).into_owned()
}

/// Fills row/column `t` of `overlap` (an iterate denoised by `eta`) against earlier iterates
/// `1..t-1` of the same family, with noise covariances `cov(b)`.
fn fill_pairs(
    overlap: &mut DMatrix<f64>,
    prior: &Prior,
    rule: &NormalRule,
    etas: &[PosteriorMean],
    eta: &PosteriorMean,
    offset: usize,
    cov: impl Fn(usize) -> f64 + Sync,
) -> Result<()> {
    let t = etas.len();
    let row: Vec<f64> = (0..t)
        .into_par_iter()
        .map(|b| pair_expect(prior, rule, &etas[b], eta, cov(b)))
        .collect();
    for (b, x) in row.into_iter().enumerate() {
        let x = finite(x, "pair overlap")?;
        overlap[(t + offset, b + offset)] = x;
        overlap[(b + offset, t + offset)] = x;
    }
    Ok(())
}

/// State evolution of symmetric Bayes-AMP with single-iterate posterior-mean denoisers,
/// started from `U_1 = eps U* + sqrt(1 - eps^2) G`.
pub fn se_pca_symmetric(
    prior: &Prior,
    cumulants: &CumulantTable,
    alpha: f64,
    epsilon: f64,
    steps: usize,
) -> Result<SeTrajectory> {
    prior.validate()?;
    check_inputs(alpha, epsilon, steps)?;
    cumulants.require(2 * steps)?;
    let rule = fine_normal_rule();
    let n = steps + 1;
    let mut delta = DMatrix::zeros(n, n);
    delta[(0, 0)] = 1.0;
    let mut phi = DMatrix::zeros(n, n);
    let mut overlap_u = vec![epsilon];
    let mut mu = vec![alpha * epsilon];
    let mut deriv_u = Vec::with_capacity(steps);
    let mut etas: Vec<PosteriorMean> = Vec::with_capacity(steps);
    let mut sigma = DMatrix::zeros(0, 0);
    for t in 1..=steps {
        let ledger = OnsagerLedger::symmetric(
            corner(&delta, t),
            corner(&phi, t),
            cumulants.clone(),
            CumulantSource::Limit,
        )?;
        let (_, s) = onsager_symmetric(&ledger)?;
        let eta = PosteriorMean::new(prior, mu[t - 1], finite(s[(t - 1, t - 1)], "sigma")?)?;
        let (sq, cross, d) = moments(prior, rule, &eta);
        delta[(t, t)] = finite(sq, "overlap")?;
        delta[(t, 0)] = epsilon * finite(cross, "overlap")?;
        delta[(0, t)] = delta[(t, 0)];
        phi[(t, t - 1)] = finite(d, "derivative")?;
        fill_pairs(&mut delta, prior, rule, &etas, &eta, 1, |b| s[(b, t - 1)])?;
        overlap_u.push(cross);
        deriv_u.push(d);
        if t < steps {
            mu.push(alpha * cross);
        }
        etas.push(eta);
        sigma = s;
    }
    Ok(SeTrajectory {
        kind: LedgerKind::Symmetric,
        steps,
        mu,
        sigma,
        nu: vec![],
        omega: None,
        delta,
        gamma_overlap: None,
        overlap_u,
        overlap_v: vec![],
        deriv_u,
        deriv_v: vec![],
    })
}

/// State evolution of rectangular Bayes-AMP: `V_t` denoises `G_t ~ nu_t V* + N(0, omega_tt)`
/// and `U_{t+1}` denoises `F_t ~ mu_t U* + N(0, sigma_tt)`.
pub fn se_pca_rect(
    prior_u: &Prior,
    prior_v: &Prior,
    cumulants: &CumulantTable,
    gamma: f64,
    alpha: f64,
    epsilon: f64,
    steps: usize,
) -> Result<SeTrajectory> {
    prior_u.validate()?;
    prior_v.validate()?;
    check_inputs(alpha, epsilon, steps)?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("aspect ratio must be positive, got {gamma}")));
    }
    cumulants.require(2 * steps)?;
    let rule = fine_normal_rule();
    let n = steps + 1;
    let mut delta = DMatrix::zeros(n, n);
    delta[(0, 0)] = 1.0;
    let mut phi = DMatrix::zeros(n, n);
    let mut gam = DMatrix::zeros(steps, steps);
    let mut psi = DMatrix::zeros(steps, steps);
    let (mut overlap_u, mut overlap_v) = (vec![epsilon], Vec::with_capacity(steps));
    let (mut mu, mut nu) = (Vec::with_capacity(steps), vec![alpha * epsilon]);
    let (mut deriv_u, mut deriv_v) = (Vec::with_capacity(steps), Vec::with_capacity(steps));
    let (mut eta_u, mut eta_v): (Vec<PosteriorMean>, Vec<PosteriorMean>) = (vec![], vec![]);
    let (mut sigma, mut omega) = (DMatrix::zeros(0, 0), DMatrix::zeros(0, 0));
    let ledger = |t: usize, g: DMatrix<f64>, p: DMatrix<f64>, d: &DMatrix<f64>, f: &DMatrix<f64>| {
        OnsagerLedger::rectangular(
            corner(d, t),
            corner(f, t),
            g,
            p,
            cumulants.clone(),
            gamma,
            CumulantSource::Limit,
        )
    };
    for t in 1..=steps {
        // Omega_t reads neither the last row of Gamma nor that of Psi.
        let mut g_pad = DMatrix::zeros(t, t);
        g_pad.view_mut((0, 0), (t - 1, t - 1)).copy_from(&corner(&gam, t - 1));
        let mut p_pad = DMatrix::zeros(t, t);
        p_pad.view_mut((0, 0), (t - 1, t - 1)).copy_from(&corner(&psi, t - 1));
        let om = onsager_rectangular(&ledger(t, g_pad, p_pad, &delta, &phi)?)?.omega;
        let ev = PosteriorMean::new(prior_v, nu[t - 1], finite(om[(t - 1, t - 1)], "omega")?)?;
        let (sq, cross, d) = moments(prior_v, rule, &ev);
        gam[(t - 1, t - 1)] = finite(sq, "overlap")?;
        psi[(t - 1, t - 1)] = finite(d, "derivative")?;
        fill_pairs(&mut gam, prior_v, rule, &eta_v, &ev, 0, |b| om[(b, t - 1)])?;
        overlap_v.push(cross);
        deriv_v.push(d);
        mu.push(alpha / gamma * cross);
        eta_v.push(ev);
        omega = om;

        let s = onsager_rectangular(&ledger(t, corner(&gam, t), corner(&psi, t), &delta, &phi)?)?.sigma;
        let eu = PosteriorMean::new(prior_u, mu[t - 1], finite(s[(t - 1, t - 1)], "sigma")?)?;
        let (sq, cross, d) = moments(prior_u, rule, &eu);
        delta[(t, t)] = finite(sq, "overlap")?;
        delta[(t, 0)] = epsilon * finite(cross, "overlap")?;
        delta[(0, t)] = delta[(t, 0)];
        phi[(t, t - 1)] = finite(d, "derivative")?;
        fill_pairs(&mut delta, prior_u, rule, &eta_u, &eu, 1, |b| s[(b, t - 1)])?;
        overlap_u.push(cross);
        deriv_u.push(d);
        if t < steps {
            nu.push(alpha * cross);
        }
        eta_u.push(eu);
        sigma = s;
    }
    Ok(SeTrajectory {
        kind: LedgerKind::Rectangular,
        steps,
        mu,
        sigma,
        nu,
        omega: Some(omega),
        delta,
        gamma_overlap: Some(gam),
        overlap_u,
        overlap_v,
        deriv_u,
        deriv_v,
    })
}
