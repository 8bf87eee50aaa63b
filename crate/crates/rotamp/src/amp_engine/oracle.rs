//! Partial-moment matrices and block matrices used to cross-check the engine.
//!
//! Everything here is computed directly from definitions; nothing in the AMP loop depends on it.

use super::{rect_theta_matrices, rect_x_matrices, rect_xi_matrices, theta_matrices, OnsagerLedger};
use crate::error::{Error, Result};
use crate::freeprob::PartialMomentTable;
use nalgebra::DMatrix;

/// `sum_j coeff(j) terms[j]`.
pub fn matrix_series(terms: &[DMatrix<f64>], coeff: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let (r, c) = terms.first().map_or((0, 0), |m| m.shape());
    let mut out = DMatrix::zeros(r, c);
    for (j, m) in terms.iter().enumerate() {
        let w = coeff(j);
        if w != 0.0 {
            out += m * w;
        }
    }
    out
}

/// `[[a, b], [c, d]]`.
pub fn block2(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> DMatrix<f64> {
    let (r0, c0) = a.shape();
    let (r1, c1) = d.shape();
    let mut out = DMatrix::zeros(r0 + r1, c0 + c1);
    out.view_mut((0, 0), (r0, c0)).copy_from(a);
    out.view_mut((0, c0), (r0, c1)).copy_from(b);
    out.view_mut((r0, 0), (r1, c0)).copy_from(c);
    out.view_mut((r0, c0), (r1, c1)).copy_from(d);
    out
}

/// `[[D, D M + F S], [F^T, F^T M + I]]`: `Upsilon` for `(Delta, Phi, B or A, Sigma)` and the
/// rectangular `T` for `(Gamma, Psi, B, Omega)`.
pub fn upsilon(
    d: &DMatrix<f64>,
    f: &DMatrix<f64>,
    m: &DMatrix<f64>,
    s: &DMatrix<f64>,
) -> DMatrix<f64> {
    let t = d.nrows();
    let ft = f.transpose();
    block2(d, &(d * m + f * s), &ft, &(&ft * m + DMatrix::identity(t, t)))
}

fn coeff(table: &PartialMomentTable, bar: bool, k: usize, j: usize) -> Result<f64> {
    let v = if bar { table.get_bar(k, j) } else { table.get(k, j) };
    v.ok_or_else(|| {
        Error::InsufficientCoefficients(format!(
            "{} coefficient ({k}, {j}) outside the table",
            if bar { "barred" } else { "plain" }
        ))
    })
}

/// `L^(k) = sum_j c_{k,j} Theta^(j)` for `k = 0..=k_max`.
pub fn partial_moment_matrices(
    ledger: &OnsagerLedger,
    table: &PartialMomentTable,
    k_max: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let t = ledger.t();
    let j_top = (2 * t).saturating_sub(2);
    let thetas = theta_matrices(&ledger.delta, &ledger.phi, j_top)?;
    (0..=k_max)
        .map(|k| {
            let cs = (0..=j_top).map(|j| coeff(table, false, k, j)).collect::<Result<Vec<_>>>()?;
            Ok(matrix_series(&thetas, |j| cs[j]))
        })
        .collect()
}

/// The four rectangular families, indexed by `k`: `h[k] = H^(2k)`, `i[k] = I^(2k+1)`,
/// `j[k] = J^(2k+1)`, `l[k] = L^(2k)`.
#[derive(Debug, Clone)]
pub struct RectPartialMoments {
    pub h: Vec<DMatrix<f64>>,
    pub i: Vec<DMatrix<f64>>,
    pub j: Vec<DMatrix<f64>>,
    pub l: Vec<DMatrix<f64>>,
}

/// Rectangular partial-moment matrices for `k = 0..=k_max`; needs coefficients through row
/// `2 k_max + 1` and column `2T - 1`.
pub fn rect_partial_moment_matrices(
    ledger: &OnsagerLedger,
    table: &PartialMomentTable,
    k_max: usize,
) -> Result<RectPartialMoments> {
    let (gamma_mat, psi) = match (&ledger.gamma_mat, &ledger.psi) {
        (Some(g), Some(p)) => (g, p),
        _ => return Err(Error::InvalidArgument("ledger is not rectangular".into())),
    };
    let t = ledger.t();
    let j_top = 2 * t - 1;
    let (d, f) = (&ledger.delta, &ledger.phi);
    let thetas = rect_theta_matrices(d, f, gamma_mat, psi, j_top)?;
    let xis = rect_xi_matrices(d, f, gamma_mat, psi, j_top)?;
    let xs = rect_x_matrices(d, f, gamma_mat, psi, j_top)?;
    let xts: Vec<_> = xs.iter().map(|x| x.transpose()).collect();
    let family = |terms: &[DMatrix<f64>], bar: bool, row: usize| -> Result<DMatrix<f64>> {
        let cs = (0..=j_top).map(|j| coeff(table, bar, row, j)).collect::<Result<Vec<_>>>()?;
        Ok(matrix_series(terms, |j| cs[j]))
    };
    let mut out = RectPartialMoments { h: vec![], i: vec![], j: vec![], l: vec![] };
    for k in 0..=k_max {
        out.h.push(family(&thetas, false, 2 * k)?);
        out.i.push(family(&xs, false, 2 * k + 1)?);
        out.j.push(family(&xts, true, 2 * k + 1)?);
        out.l.push(family(&xis, true, 2 * k)?);
    }
    Ok(out)
}
