//! General symmetric and rectangular AMP with cumulant-built Onsager corrections.

pub mod oracle;
mod run;

pub use run::{
    run_rect_amp, run_symmetric_amp, AmpTrajectory, Denoiser, FnDenoiser, LinearOperator,
    Memory, NoiseOperator, OverlapRecord, RunOptions, FD_STEP,
};

use crate::error::{Error, Result};
use crate::freeprob::CumulantTable;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Which cumulants drive the debiasing coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CumulantSource {
    /// Estimated from the observed spectrum with the top value removed.
    #[default]
    Empirical,
    /// Taken from the known limiting law.
    Limit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LedgerKind {
    Symmetric,
    Rectangular,
}

/// Per-iteration matrices `Delta, Phi` (and `Gamma, Psi` for rectangular runs).
#[derive(Debug, Clone)]
pub struct OnsagerLedger {
    pub kind: LedgerKind,
    pub delta: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub gamma_mat: Option<DMatrix<f64>>,
    pub psi: Option<DMatrix<f64>>,
    pub cumulants: CumulantTable,
    pub gamma: Option<f64>,
    pub source: CumulantSource,
}

/// `(A_T, B_T, Sigma_T, Omega_T)` of a rectangular ledger.
#[derive(Debug, Clone)]
pub struct RectOnsager {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    pub omega: DMatrix<f64>,
}

fn scale_of(m: &DMatrix<f64>) -> f64 {
    m.amax().max(1.0)
}

fn check_square(m: &DMatrix<f64>, t: usize, what: &str) -> Result<()> {
    if m.nrows() == t && m.ncols() == t {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!(
            "{what} is {}x{}, expected {t}x{t}",
            m.nrows(),
            m.ncols()
        )))
    }
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let tol = 1e-12 * scale_of(m);
    if (m - m.transpose()).amax() <= tol {
        Ok(())
    } else {
        Err(Error::ShapeMismatch(format!("{what} is not symmetric")))
    }
}

/// Requires every entry on or above diagonal `offset` to vanish (`offset = 0` strictly lower,
/// `offset = 1` lower with diagonal).
fn check_lower(m: &DMatrix<f64>, offset: usize, what: &str) -> Result<()> {
    for i in 0..m.nrows() {
        for j in (i + offset)..m.ncols() {
            if m[(i, j)] != 0.0 {
                return Err(Error::ShapeMismatch(format!(
                    "{what} has a nonzero entry at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// `P^0, .., P^{count-1}` for a nilpotent `P` of index at most its size; powers at or past the
/// size are left as zero without multiplying.
pub fn nilpotent_powers(p: &DMatrix<f64>, count: usize) -> Vec<DMatrix<f64>> {
    let t = p.nrows();
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        let next = match j {
            0 => DMatrix::identity(t, t),
            _ if j >= t.max(1) => DMatrix::zeros(t, t),
            _ => p * &out[j - 1],
        };
        out.push(next);
    }
    out
}

/// `Theta^(j) = sum_i Phi^i Delta (Phi^{j-i})^T` for `j = 0..=j_max`.
pub fn theta_matrices(
    delta: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    j_max: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let t = delta.nrows();
    check_square(delta, t, "Delta")?;
    check_square(phi, t, "Phi")?;
    check_symmetric(delta, "Delta")?;
    check_lower(phi, 0, "Phi")?;
    let pows = nilpotent_powers(phi, j_max + 1);
    let mut out: Vec<DMatrix<f64>> = Vec::with_capacity(j_max + 1);
    for j in 0..=j_max {
        let next = if j == 0 {
            delta.clone()
        } else if j + 1 >= 2 * t {
            DMatrix::zeros(t, t)
        } else {
            phi * &out[j - 1] + delta * pows[j].transpose()
        };
        out.push(next);
    }
    Ok(out)
}

/// Rectangular `Theta^(j)` (`p = Phi Psi`, inner term `Phi Gamma Phi^T`) or `Xi^(j)`
/// (`p = Psi Phi`, inner term `Psi Delta Psi^T`) through the shared recursion
/// `S^(j) = p S^(j-1) + base (p^T)^j + inner (p^T)^{j-1}`.
fn two_term_series(
    base: &DMatrix<f64>,
    inner: &DMatrix<f64>,
    p: &DMatrix<f64>,
    j_max: usize,
) -> Vec<DMatrix<f64>> {
    let pows = nilpotent_powers(p, j_max + 1);
    let mut out: Vec<DMatrix<f64>> = Vec::with_capacity(j_max + 1);
    for j in 0..=j_max {
        let next = if j == 0 {
            base.clone()
        } else {
            p * &out[j - 1] + base * pows[j].transpose() + inner * pows[j - 1].transpose()
        };
        out.push(next);
    }
    out
}

struct RectParts<'a> {
    delta: &'a DMatrix<f64>,
    phi: &'a DMatrix<f64>,
    gamma_mat: &'a DMatrix<f64>,
    psi: &'a DMatrix<f64>,
}

fn rect_parts<'a>(
    delta: &'a DMatrix<f64>,
    phi: &'a DMatrix<f64>,
    gamma_mat: &'a DMatrix<f64>,
    psi: &'a DMatrix<f64>,
) -> Result<RectParts<'a>> {
    let t = delta.nrows();
    check_square(delta, t, "Delta")?;
    check_square(phi, t, "Phi")?;
    check_square(gamma_mat, t, "Gamma")?;
    check_square(psi, t, "Psi")?;
    check_symmetric(delta, "Delta")?;
    check_symmetric(gamma_mat, "Gamma")?;
    check_lower(phi, 0, "Phi")?;
    check_lower(psi, 1, "Psi")?;
    Ok(RectParts { delta, phi, gamma_mat, psi })
}

/// Rectangular `Theta^(j)` for `j = 0..=j_max`.
pub fn rect_theta_matrices(
    delta: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    gamma_mat: &DMatrix<f64>,
    psi: &DMatrix<f64>,
    j_max: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let r = rect_parts(delta, phi, gamma_mat, psi)?;
    let inner = r.phi * r.gamma_mat * r.phi.transpose();
    Ok(two_term_series(r.delta, &inner, &(r.phi * r.psi), j_max))
}

/// `Xi^(j)` for `j = 0..=j_max`.
pub fn rect_xi_matrices(
    delta: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    gamma_mat: &DMatrix<f64>,
    psi: &DMatrix<f64>,
    j_max: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let r = rect_parts(delta, phi, gamma_mat, psi)?;
    let inner = r.psi * r.delta * r.psi.transpose();
    Ok(two_term_series(r.gamma_mat, &inner, &(r.psi * r.phi), j_max))
}

/// `X^(j) = sum_i (Psi Phi)^i (Psi Delta + Gamma Phi^T) ((Phi Psi)^T)^{j-i}`.
pub fn rect_x_matrices(
    delta: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    gamma_mat: &DMatrix<f64>,
    psi: &DMatrix<f64>,
    j_max: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let r = rect_parts(delta, phi, gamma_mat, psi)?;
    let g = r.psi * r.delta + r.gamma_mat * r.phi.transpose();
    let q = r.psi * r.phi;
    let pows = nilpotent_powers(&(r.phi * r.psi), j_max + 1);
    let mut out: Vec<DMatrix<f64>> = Vec::with_capacity(j_max + 1);
    for j in 0..=j_max {
        let head = &g * pows[j].transpose();
        out.push(if j == 0 { head } else { &q * &out[j - 1] + head });
    }
    Ok(out)
}

impl OnsagerLedger {
    pub fn symmetric(
        delta: DMatrix<f64>,
        phi: DMatrix<f64>,
        cumulants: CumulantTable,
        source: CumulantSource,
    ) -> Result<Self> {
        let t = delta.nrows();
        check_square(&delta, t, "Delta")?;
        check_square(&phi, t, "Phi")?;
        check_symmetric(&delta, "Delta")?;
        check_lower(&phi, 0, "Phi")?;
        Ok(OnsagerLedger {
            kind: LedgerKind::Symmetric,
            delta,
            phi,
            gamma_mat: None,
            psi: None,
            cumulants,
            gamma: None,
            source,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn rectangular(
        delta: DMatrix<f64>,
        phi: DMatrix<f64>,
        gamma_mat: DMatrix<f64>,
        psi: DMatrix<f64>,
        cumulants: CumulantTable,
        gamma: f64,
        source: CumulantSource,
    ) -> Result<Self> {
        rect_parts(&delta, &phi, &gamma_mat, &psi)?;
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("aspect ratio must be positive, got {gamma}")));
        }
        Ok(OnsagerLedger {
            kind: LedgerKind::Rectangular,
            delta,
            phi,
            gamma_mat: Some(gamma_mat),
            psi: Some(psi),
            cumulants,
            gamma: Some(gamma),
            source,
        })
    }

    /// Current iteration count `T`.
    pub fn t(&self) -> usize {
        self.delta.nrows()
    }

    /// The ledger restricted to its first `t` iterations.
    pub fn leading(&self, t: usize) -> Self {
        let cut = |m: &DMatrix<f64>| m.view((0, 0), (t, t)).into_owned();
        OnsagerLedger {
            kind: self.kind,
            delta: cut(&self.delta),
            phi: cut(&self.phi),
            gamma_mat: self.gamma_mat.as_ref().map(cut),
            psi: self.psi.as_ref().map(cut),
            cumulants: self.cumulants.clone(),
            gamma: self.gamma,
            source: self.source,
        }
    }

    fn rect(&self) -> Result<(RectParts<'_>, f64)> {
        match (&self.gamma_mat, &self.psi, self.gamma) {
            (Some(g), Some(p), Some(gamma)) if self.kind == LedgerKind::Rectangular => Ok((
                RectParts { delta: &self.delta, phi: &self.phi, gamma_mat: g, psi: p },
                gamma,
            )),
            _ => Err(Error::InvalidArgument("ledger is not rectangular".into())),
        }
    }

    fn expect_symmetric(&self) -> Result<()> {
        if self.kind == LedgerKind::Symmetric {
            Ok(())
        } else {
            Err(Error::InvalidArgument("ledger is not symmetric".into()))
        }
    }
}

/// `B_T = (sum_j kappa_{j+1} Phi^j)^T`; needs `kappa_1..kappa_T`.
pub fn onsager_b_symmetric(ledger: &OnsagerLedger) -> Result<DMatrix<f64>> {
    ledger.expect_symmetric()?;
    let t = ledger.t();
    ledger.cumulants.require(t)?;
    let mut b = DMatrix::zeros(t, t);
    for (j, p) in nilpotent_powers(&ledger.phi, t).iter().enumerate() {
        b += p * ledger.cumulants.kappa(j + 1);
    }
    Ok(b.transpose())
}

/// `(B_T, Sigma_T)` with `Sigma_T = sum_j kappa_{j+2} Theta^(j)`; needs `kappa_1..kappa_{2T}`.
pub fn onsager_symmetric(ledger: &OnsagerLedger) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    ledger.expect_symmetric()?;
    let t = ledger.t();
    ledger.cumulants.require(2 * t)?;
    let b = onsager_b_symmetric(ledger)?;
    let thetas = theta_matrices(&ledger.delta, &ledger.phi, (2 * t).saturating_sub(2))?;
    let mut sigma = DMatrix::zeros(t, t);
    for (j, th) in thetas.iter().enumerate() {
        sigma += th * ledger.cumulants.kappa(j + 2);
    }
    Ok((b, sigma))
}

/// `A_T = (sum_j kappa_{2(j+1)} Psi (Phi Psi)^j)^T`; needs `T` even cumulants.
pub fn onsager_a_rect(ledger: &OnsagerLedger) -> Result<DMatrix<f64>> {
    let (r, _) = ledger.rect()?;
    let t = ledger.t();
    ledger.cumulants.require(t)?;
    let mut a = DMatrix::zeros(t, t);
    for (j, p) in nilpotent_powers(&(r.phi * r.psi), t).iter().enumerate() {
        a += r.psi * p * ledger.cumulants.kappa_even(j + 1);
    }
    Ok(a.transpose())
}

/// `B_T = (gamma sum_j kappa_{2(j+1)} Phi (Psi Phi)^j)^T`; needs `T` even cumulants.
pub fn onsager_b_rect(ledger: &OnsagerLedger) -> Result<DMatrix<f64>> {
    let (r, gamma) = ledger.rect()?;
    let t = ledger.t();
    ledger.cumulants.require(t)?;
    let mut b = DMatrix::zeros(t, t);
    for (j, p) in nilpotent_powers(&(r.psi * r.phi), t).iter().enumerate() {
        b += r.phi * p * ledger.cumulants.kappa_even(j + 1);
    }
    Ok(b.transpose() * gamma)
}

/// `(A_T, B_T, Sigma_T, Omega_T)`; needs `2T` even cumulants `kappa_2..kappa_{4T}`.
pub fn onsager_rectangular(ledger: &OnsagerLedger) -> Result<RectOnsager> {
    let (r, gamma) = ledger.rect()?;
    let t = ledger.t();
    ledger.cumulants.require(2 * t)?;
    let a = onsager_a_rect(ledger)?;
    let b = onsager_b_rect(ledger)?;
    let xis = rect_xi_matrices(r.delta, r.phi, r.gamma_mat, r.psi, 2 * t - 1)?;
    let thetas = rect_theta_matrices(r.delta, r.phi, r.gamma_mat, r.psi, (2 * t).saturating_sub(2))?;
    let mut sigma = DMatrix::zeros(t, t);
    for (j, x) in xis.iter().enumerate() {
        sigma += x * ledger.cumulants.kappa_even(j + 1);
    }
    let mut omega = DMatrix::zeros(t, t);
    for (j, th) in thetas.iter().enumerate() {
        omega += th * ledger.cumulants.kappa_even(j + 1);
    }
    Ok(RectOnsager { a, b, sigma, omega: omega * gamma })
}
