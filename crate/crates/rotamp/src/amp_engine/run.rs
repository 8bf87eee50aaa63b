use super::{onsager_a_rect, onsager_b_rect, onsager_b_symmetric, CumulantSource, LedgerKind, OnsagerLedger};
use crate::ensembles::SpikedInstance;
use crate::error::{Error, Result};
use crate::freeprob::CumulantTable;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Step of the central finite difference used for black-box denoisers.
pub const FD_STEP: f64 = 1e-6;

/// Iterates abort once `||u||^2 / n` exceeds this.
const DIVERGENCE_LIMIT: f64 = 1e6;

/// Matrix-free operator `R^cols -> R^rows`.
pub trait LinearOperator: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>>;
}

fn check_len(x: &[f64], expected: usize) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got: x.len() })
    }
}

impl LinearOperator for DMatrix<f64> {
    fn rows(&self) -> usize {
        self.nrows()
    }

    fn cols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x, self.ncols())?;
        Ok((self * DVector::from_column_slice(x)).data.into())
    }

    fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(y, self.nrows())?;
        Ok((self.tr_mul(&DVector::from_column_slice(y))).data.into())
    }
}

/// The spiked data matrix `X`.
impl LinearOperator for SpikedInstance {
    fn rows(&self) -> usize {
        self.m
    }

    fn cols(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.apply_data_matrix(x)
    }

    fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.apply_data_matrix_transpose(y)
    }
}

/// The noise part `W` of an instance.
#[derive(Debug, Clone, Copy)]
pub struct NoiseOperator<'a>(pub &'a SpikedInstance);

impl LinearOperator for NoiseOperator<'_> {
    fn rows(&self) -> usize {
        self.0.m
    }

    fn cols(&self) -> usize {
        self.0.n
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.0.apply_noise(x)
    }

    fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.0.apply_noise_transpose(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Memory {
    /// Reads only the latest iterate.
    #[default]
    Last,
    /// Reads every previous iterate.
    Full,
}

/// Row-wise map from previous iterates (and side information) to the next iterate.
///
/// `args` holds the iterate arguments (only the latest under [`Memory::Last`], otherwise all of
/// them in order) followed by the row of side information, if any.
pub trait Denoiser: Send + Sync {
    fn memory(&self) -> Memory {
        Memory::Last
    }

    fn eval(&self, args: &[f64]) -> f64;

    /// Partial derivative in argument `s`; defaults to a central finite difference.
    fn partial(&self, args: &[f64], s: usize) -> f64 {
        let mut x = args.to_vec();
        let h = FD_STEP * args[s].abs().max(1.0);
        x[s] = args[s] + h;
        let up = self.eval(&x);
        x[s] = args[s] - h;
        let down = self.eval(&x);
        (up - down) / (2.0 * h)
    }
}

/// Black-box denoiser from a closure; derivatives by finite differences.
pub struct FnDenoiser<F> {
    pub f: F,
    pub memory: Memory,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Denoiser for FnDenoiser<F> {
    fn memory(&self) -> Memory {
        self.memory
    }

    fn eval(&self, args: &[f64]) -> f64 {
        (self.f)(args)
    }
}

/// Inputs shared by both runners besides the operator, initializer and denoisers.
#[derive(Debug, Clone)]
pub struct RunOptions<'a> {
    pub cumulants: &'a CumulantTable,
    pub source: CumulantSource,
    /// Signals used only for overlap records.
    pub u_star: Option<&'a [f64]>,
    pub v_star: Option<&'a [f64]>,
    /// Side information rows appended to the `u`- and `v`-denoiser arguments.
    pub side_u: Option<&'a DMatrix<f64>>,
    pub side_v: Option<&'a DMatrix<f64>>,
}

impl<'a> RunOptions<'a> {
    pub fn new(cumulants: &'a CumulantTable, source: CumulantSource) -> Self {
        RunOptions { cumulants, source, u_star: None, v_star: None, side_u: None, side_v: None }
    }

    pub fn with_signal(mut self, u_star: &'a [f64], v_star: Option<&'a [f64]>) -> Self {
        self.u_star = Some(u_star);
        self.v_star = v_star;
        self
    }
}

/// Overlaps of iterate `t` (1-based): `u_t` always, `v_t` on rectangular runs when it exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapRecord {
    pub t: usize,
    pub overlap_u: Option<f64>,
    pub norm_u: f64,
    pub overlap_v: Option<f64>,
    pub norm_v: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AmpTrajectory {
    pub kind: LedgerKind,
    /// `u_1..u_{T+1}`.
    pub u: Vec<Vec<f64>>,
    /// `z_1..z_T`.
    pub z: Vec<Vec<f64>>,
    /// `v_1..v_T` (rectangular).
    pub v: Vec<Vec<f64>>,
    /// `y_1..y_T` (rectangular).
    pub y: Vec<Vec<f64>>,
    pub overlaps: Vec<OverlapRecord>,
    /// Ledger of the last step (`T x T`), with empirical `Delta, Phi` (and `Gamma, Psi`).
    pub ledger: OnsagerLedger,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mean_dot(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / a.len() as f64
}

fn guard(x: &[f64], t: usize) -> Result<()> {
    let norm = mean_dot(x, x);
    if x.iter().all(|v| v.is_finite()) && norm <= DIVERGENCE_LIMIT {
        Ok(())
    } else {
        Err(Error::NonFiniteIterate { t })
    }
}

/// Applies `d` row-wise; returns the new iterate and the averaged partial derivatives with
/// respect to each of `iterates`.
fn denoise(
    d: &dyn Denoiser,
    iterates: &[Vec<f64>],
    side: Option<&DMatrix<f64>>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let t = iterates.len();
    let len = iterates[0].len();
    let first = match d.memory() {
        Memory::Last => t - 1,
        Memory::Full => 0,
    };
    let nargs = t - first;
    let k = match side {
        Some(s) if s.nrows() != len => {
            return Err(Error::DimensionMismatch { expected: len, got: s.nrows() })
        }
        Some(s) => s.ncols(),
        None => 0,
    };
    let mut args = vec![0.0; nargs + k];
    let mut out = vec![0.0; len];
    let mut deriv = vec![0.0; t];
    for (i, o) in out.iter_mut().enumerate() {
        for (a, it) in iterates[first..].iter().enumerate() {
            args[a] = it[i];
        }
        if let Some(s) = side {
            for c in 0..k {
                args[nargs + c] = s[(i, c)];
            }
        }
        *o = d.eval(&args);
        for a in 0..nargs {
            deriv[first + a] += d.partial(&args, a);
        }
    }
    deriv.iter_mut().for_each(|x| *x /= len as f64);
    Ok((out, deriv))
}

fn gram(vs: &[Vec<f64>]) -> DMatrix<f64> {
    let t = vs.len();
    let mut g = DMatrix::zeros(t, t);
    for a in 0..t {
        for b in 0..=a {
            let x = mean_dot(&vs[a], &vs[b]);
            g[(a, b)] = x;
            g[(b, a)] = x;
        }
    }
    g
}

fn corner(m: &DMatrix<f64>, t: usize) -> DMatrix<f64> {
    m.view((0, 0), (t, t)).into_owned()
}

fn record(t: usize, u: &[f64], v: Option<&[f64]>, opts: &RunOptions) -> OverlapRecord {
    OverlapRecord {
        t,
        overlap_u: opts.u_star.map(|s| mean_dot(u, s)),
        norm_u: mean_dot(u, u),
        overlap_v: v.and_then(|v| opts.v_star.map(|s| mean_dot(v, s))),
        norm_v: v.map(|v| mean_dot(v, v)),
    }
}

/// Runs `T = denoisers.len()` steps of
/// `z_t = W u_t - sum_{s<=t} b_{ts} u_s`, `u_{t+1} = u_{t+1}(z_1, .., z_t)`.
pub fn run_symmetric_amp(
    op: &dyn LinearOperator,
    u1: &[f64],
    denoisers: &[&dyn Denoiser],
    opts: &RunOptions,
) -> Result<AmpTrajectory> {
    let n = op.rows();
    check_len(u1, op.cols())?;
    check_len(u1, n)?;
    if let Some(s) = opts.u_star {
        check_len(s, n)?;
    }
    let t_max = denoisers.len();
    let mut phi = DMatrix::zeros(t_max + 1, t_max + 1);
    let mut u = vec![u1.to_vec()];
    let mut z: Vec<Vec<f64>> = Vec::with_capacity(t_max);
    let mut ledger = None;
    for (step, den) in denoisers.iter().enumerate() {
        let t = step + 1;
        let l = OnsagerLedger::symmetric(gram(&u), corner(&phi, t), opts.cumulants.clone(), opts.source)?;
        let b = onsager_b_symmetric(&l)?;
        let mut zt = op.apply(&u[step])?;
        for (s, us) in u.iter().enumerate() {
            let c = b[(s, step)];
            zt.iter_mut().zip(us).for_each(|(a, x)| *a -= c * x);
        }
        guard(&zt, t)?;
        z.push(zt);
        let (next, deriv) = denoise(*den, &z, opts.side_u)?;
        guard(&next, t)?;
        for (s, d) in deriv.iter().enumerate() {
            phi[(t, s)] = *d;
        }
        u.push(next);
        ledger = Some(l);
    }
    let ledger = match ledger {
        Some(l) => l,
        None => OnsagerLedger::symmetric(gram(&u), DMatrix::zeros(1, 1), opts.cumulants.clone(), opts.source)?,
    };
    let overlaps = u.iter().enumerate().map(|(i, x)| record(i + 1, x, None, opts)).collect();
    Ok(AmpTrajectory { kind: LedgerKind::Symmetric, u, z, v: vec![], y: vec![], overlaps, ledger })
}

/// Runs `T` steps of the rectangular iteration
/// `z_t = W^T u_t - sum_{s<t} b_{ts} v_s`, `v_t = v_t(z_1..z_t)`,
/// `y_t = W v_t - sum_{s<=t} a_{ts} u_s`, `u_{t+1} = u_{t+1}(y_1..y_t)`.
pub fn run_rect_amp(
    op: &dyn LinearOperator,
    u1: &[f64],
    denoisers_v: &[&dyn Denoiser],
    denoisers_u: &[&dyn Denoiser],
    gamma: f64,
    opts: &RunOptions,
) -> Result<AmpTrajectory> {
    let (m, n) = (op.rows(), op.cols());
    check_len(u1, m)?;
    if denoisers_u.len() != denoisers_v.len() {
        return Err(Error::InvalidArgument("need one u-denoiser per v-denoiser".into()));
    }
    if let Some(s) = opts.u_star {
        check_len(s, m)?;
    }
    if let Some(s) = opts.v_star {
        check_len(s, n)?;
    }
    let t_max = denoisers_v.len();
    let mut phi = DMatrix::zeros(t_max + 1, t_max + 1);
    let mut psi = DMatrix::zeros(t_max, t_max);
    let mut u = vec![u1.to_vec()];
    let (mut z, mut v, mut y): (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) = (vec![], vec![], vec![]);
    let mut ledger = None;
    for step in 0..t_max {
        let t = step + 1;
        let delta = gram(&u);
        let phi_t = corner(&phi, t);
        // Gamma and Psi rows for v_t are not known yet; B_t does not read them.
        let mut gamma_pad = DMatrix::zeros(t, t);
        gamma_pad.view_mut((0, 0), (step, step)).copy_from(&gram(&v));
        let psi_pad = {
            let mut p = corner(&psi, t);
            p.row_mut(step).fill(0.0);
            p
        };
        let l = OnsagerLedger::rectangular(
            delta.clone(),
            phi_t.clone(),
            gamma_pad,
            psi_pad,
            opts.cumulants.clone(),
            gamma,
            opts.source,
        )?;
        let b = onsager_b_rect(&l)?;
        let mut zt = op.apply_transpose(&u[step])?;
        for (s, vs) in v.iter().enumerate() {
            let c = b[(s, step)];
            zt.iter_mut().zip(vs).for_each(|(a, x)| *a -= c * x);
        }
        guard(&zt, t)?;
        z.push(zt);
        let (vt, dv) = denoise(denoisers_v[step], &z, opts.side_v)?;
        guard(&vt, t)?;
        for (s, d) in dv.iter().enumerate() {
            psi[(step, s)] = *d;
        }
        v.push(vt);

        let l = OnsagerLedger::rectangular(
            delta,
            phi_t,
            gram(&v),
            corner(&psi, t),
            opts.cumulants.clone(),
            gamma,
            opts.source,
        )?;
        let a = onsager_a_rect(&l)?;
        let mut yt = op.apply(&v[step])?;
        for (s, us) in u.iter().enumerate() {
            let c = a[(s, step)];
            yt.iter_mut().zip(us).for_each(|(acc, x)| *acc -= c * x);
        }
        guard(&yt, t)?;
        y.push(yt);
        let (next, du) = denoise(denoisers_u[step], &y, opts.side_u)?;
        guard(&next, t)?;
        for (s, d) in du.iter().enumerate() {
            phi[(t, s)] = *d;
        }
        u.push(next);
        ledger = Some(l);
    }
    let ledger = match ledger {
        Some(l) => l,
        None => {
            return Err(Error::InvalidArgument("rectangular run needs at least one step".into()))
        }
    };
    let overlaps = u
        .iter()
        .enumerate()
        .map(|(i, x)| record(i + 1, x, v.get(i).map(|w| w.as_slice()), opts))
        .collect();
    Ok(AmpTrajectory { kind: LedgerKind::Rectangular, u, z, v, y, overlaps, ledger })
}
