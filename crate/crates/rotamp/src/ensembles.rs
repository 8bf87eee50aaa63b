//! Rotationally invariant noise, signal priors and spiked instances.
//!
//! A symmetric instance is `X = (alpha/n) u* u*^T + O^T diag(lambda) O` and a rectangular
//! instance is `X = (alpha/m) u* v*^T + O^T Lambda Q` with `Lambda` the `m x n` diagonal
//! embedding of the singular values. Neither `W` nor `X` is ever formed densely.

use crate::error::{Error, Result};
use crate::freeprob::CumulantTable;
use crate::rng::{self, Stream};
use crate::spectra::{self, SamplingMode, SpectralLaw};
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Sign-fixed QR of an iid Gaussian matrix: an exactly Haar-distributed orthogonal matrix.
pub fn haar_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// How Haar rotations are generated and stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RotationKind {
    /// Dense sign-fixed QR, `O(dim^3)` to generate.
    Dense,
    /// Product of Householder reflectors with the same law, `O(dim^2)` to generate and apply.
    #[default]
    Householder,
}

/// `Q = H_1 H_2 ... H_{dim-1} D` with `H_k` a reflector acting on coordinates `k..dim`
/// and `D` a diagonal sign matrix.
#[derive(Debug, Clone)]
pub struct HouseholderProduct {
    dim: usize,
    /// Unit reflector vectors, the `k`-th of length `dim - k`, concatenated.
    vectors: Vec<f64>,
    signs: Vec<f64>,
}

impl HouseholderProduct {
    /// Samples the Householder factorization of the Q factor of an iid Gaussian matrix.
    pub fn sample<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut vectors = Vec::with_capacity(dim * (dim + 1) / 2);
        let mut signs = Vec::with_capacity(dim);
        for k in 0..dim.saturating_sub(1) {
            let len = dim - k;
            let start = vectors.len();
            vectors.extend((0..len).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let v = &mut vectors[start..];
            let x0 = v[0];
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let s = if x0 >= 0.0 { 1.0 } else { -1.0 };
            v[0] += s * norm;
            let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= vn);
            // The R diagonal is -s * norm; the sign fix multiplies the column by its sign.
            signs.push(-s);
        }
        if dim > 0 {
            signs.push(if rng.random::<bool>() { 1.0 } else { -1.0 });
        }
        HouseholderProduct { dim, vectors, signs }
    }

    fn reflect(&self, k: usize, offset: usize, y: &mut [f64]) {
        let len = self.dim - k;
        let v = &self.vectors[offset..offset + len];
        let tail = &mut y[k..];
        let d: f64 = v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
        let f = 2.0 * d;
        tail.iter_mut().zip(v).for_each(|(t, a)| *t -= f * a);
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = x.iter().zip(&self.signs).map(|(a, s)| a * s).collect();
        for (k, off) in self.offset_table().into_iter().rev() {
            self.reflect(k, off, &mut y);
        }
        y
    }

    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for (k, off) in self.offset_table() {
            self.reflect(k, off, &mut y);
        }
        y.iter_mut().zip(&self.signs).for_each(|(a, s)| *a *= s);
        y
    }

    fn offset_table(&self) -> Vec<(usize, usize)> {
        let mut off = 0;
        (0..self.dim.saturating_sub(1))
            .map(|k| {
                let o = off;
                off += self.dim - k;
                (k, o)
            })
            .collect()
    }
}

/// A Haar-distributed orthogonal matrix.
#[derive(Debug, Clone)]
pub enum Rotation {
    Dense(DMatrix<f64>),
    Householder(HouseholderProduct),
}

impl Rotation {
    pub fn sample<R: Rng + ?Sized>(dim: usize, kind: RotationKind, rng: &mut R) -> Self {
        match kind {
            RotationKind::Dense => Rotation::Dense(haar_orthogonal(dim, rng)),
            RotationKind::Householder => Rotation::Householder(HouseholderProduct::sample(dim, rng)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Rotation::Dense(q) => q.nrows(),
            Rotation::Householder(h) => h.dim,
        }
    }

    /// `Q x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Rotation::Dense(q) => dense_mul(q, x, false),
            Rotation::Householder(h) => h.apply(x),
        }
    }

    /// `Q^T x`.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Rotation::Dense(q) => dense_mul(q, x, true),
            Rotation::Householder(h) => h.apply_transpose(x),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Rotation::Dense(q) => q.clone(),
            Rotation::Householder(h) => {
                let n = h.dim;
                let mut q = DMatrix::zeros(n, n);
                let mut e = vec![0.0; n];
                for j in 0..n {
                    e[j] = 1.0;
                    let col = h.apply(&e);
                    e[j] = 0.0;
                    q.column_mut(j).copy_from_slice(&col);
                }
                q
            }
        }
    }
}

fn dense_mul(q: &DMatrix<f64>, x: &[f64], transpose: bool) -> Vec<f64> {
    let v = nalgebra::DVectorView::from_slice(x, x.len());
    let out = if transpose { q.tr_mul(&v) } else { q * v };
    out.as_slice().to_vec()
}

/// Prior of the signal entries; every variant has `E[U^2] = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", deny_unknown_fields)]
pub enum Prior {
    Rademacher {},
    AtomicSigned { values: Vec<f64>, weights: Vec<f64> },
    StandardGaussian {},
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        if let Prior::AtomicSigned { values, weights } = self {
            if values.is_empty() || values.len() != weights.len() {
                return Err(Error::InvalidArgument(
                    "prior atoms and weights must be nonempty and of equal length".into(),
                ));
            }
            if weights.iter().any(|w| !(*w >= 0.0)) || values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("prior weights must be nonnegative".into()));
            }
            if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument("prior weights must sum to 1".into()));
            }
        }
        let m2 = self.second_moment();
        if (m2 - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "prior second moment must be 1, got {m2}"
            )));
        }
        Ok(())
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            Prior::AtomicSigned { values, weights } => {
                values.iter().zip(weights).map(|(v, w)| w * v * v).sum()
            }
            _ => 1.0,
        }
    }

    /// Atoms and weights of a discrete prior.
    pub fn atoms(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Prior::Rademacher {} => Some((vec![-1.0, 1.0], vec![0.5, 0.5])),
            Prior::AtomicSigned { values, weights } => Some((values.clone(), weights.clone())),
            Prior::StandardGaussian {} => None,
        }
    }

    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Prior::Rademacher {} => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Prior::StandardGaussian {} => rng.sample(StandardNormal),
            Prior::AtomicSigned { values, weights } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, w) in values.iter().zip(weights) {
                    acc += w;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().unwrap()
            }
        }
    }
}

/// Spectrum of the noise: sampled from a law or given explicitly.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumInput {
    Law { law: SpectralLaw, mode: SamplingMode },
    Values(Vec<f64>),
}

impl SpectrumInput {
    fn realize(&self, len: usize, seed: u64) -> Result<Vec<f64>> {
        match self {
            SpectrumInput::Law { law, mode } => {
                let mut r = rng::stream(seed, Stream::Spectrum);
                spectra::sample_spectrum(law, len, &mut r, *mode)
            }
            SpectrumInput::Values(v) => {
                if v.len() != len {
                    return Err(Error::DimensionMismatch { expected: len, got: v.len() });
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Symmetric,
    Rectangular,
}

/// A realized spiked model.
///
/// Vectors `u` live in `R^m` and `v` in `R^n`; for symmetric instances `m = n`.
#[derive(Debug, Clone)]
pub struct SpikedInstance {
    pub kind: InstanceKind,
    pub m: usize,
    pub n: usize,
    pub alpha: f64,
    pub gamma: Option<f64>,
    pub u_star: Vec<f64>,
    pub v_star: Option<Vec<f64>>,
    /// Eigenvalues (symmetric, length `n`) or singular values (length `min(m, n)`).
    pub spectrum: Vec<f64>,
    /// `O` in `W = O^T Lambda O` or `W = O^T Lambda Q`.
    pub rotation_l: Rotation,
    /// `Q`, rectangular only.
    pub rotation_r: Option<Rotation>,
    pub epsilon: f64,
    pub u1: Vec<f64>,
    /// Factor that rescaled the iid draw of `u*` to norm `sqrt(m)`.
    pub rescale_u: f64,
    pub rescale_v: Option<f64>,
}

fn signal<R: Rng + ?Sized>(prior: &Prior, len: usize, rng: &mut R) -> Result<(Vec<f64>, f64)> {
    let mut x: Vec<f64> = (0..len).map(|_| prior.sample_one(rng)).collect();
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    if norm2 <= 0.0 {
        return Err(Error::InvalidArgument("signal draw is identically zero".into()));
    }
    let f = (len as f64 / norm2).sqrt();
    x.iter_mut().for_each(|v| *v *= f);
    Ok((x, f))
}

fn initialization(u_star: &[f64], epsilon: f64, seed: u64) -> Vec<f64> {
    let mut r = rng::stream(seed, Stream::Init);
    let c = (1.0 - epsilon * epsilon).max(0.0).sqrt();
    u_star
        .iter()
        .map(|u| epsilon * u + c * r.sample::<f64, _>(StandardNormal))
        .collect()
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1], got {epsilon}")))
    }
}

/// Builds `X = (alpha/n) u* u*^T + O^T diag(lambda) O`.
///
/// Sub-streams of `seed`: spectrum, left rotation, signal and initialization.
pub fn build_symmetric_instance(
    spectrum: &SpectrumInput,
    n: usize,
    alpha: f64,
    prior: &Prior,
    epsilon: f64,
    seed: u64,
    rotation: RotationKind,
) -> Result<SpikedInstance> {
    if n < 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    check_epsilon(epsilon)?;
    prior.validate()?;
    let lambda = spectrum.realize(n, seed)?;
    let o = Rotation::sample(n, rotation, &mut rng::stream(seed, Stream::RotationL));
    let (u_star, rescale_u) = signal(prior, n, &mut rng::stream(seed, Stream::Signal))?;
    let u1 = initialization(&u_star, epsilon, seed);
    Ok(SpikedInstance {
        kind: InstanceKind::Symmetric,
        m: n,
        n,
        alpha,
        gamma: None,
        u_star,
        v_star: None,
        spectrum: lambda,
        rotation_l: o,
        rotation_r: None,
        epsilon,
        u1,
        rescale_u,
        rescale_v: None,
    })
}

/// Builds `X = (alpha/m) u* v*^T + O^T Lambda Q` with `u* in R^m`, `v* in R^n`.
#[allow(clippy::too_many_arguments)]
pub fn build_rect_instance(
    spectrum: &SpectrumInput,
    m: usize,
    n: usize,
    alpha: f64,
    prior_u: &Prior,
    prior_v: &Prior,
    epsilon: f64,
    seed: u64,
    rotation: RotationKind,
) -> Result<SpikedInstance> {
    if m < 2 || n < 2 {
        return Err(Error::InvalidArgument("m and n must be at least 2".into()));
    }
    check_epsilon(epsilon)?;
    prior_u.validate()?;
    prior_v.validate()?;
    let lambda = spectrum.realize(m.min(n), seed)?;
    let o = Rotation::sample(m, rotation, &mut rng::stream(seed, Stream::RotationL));
    let q = Rotation::sample(n, rotation, &mut rng::stream(seed, Stream::RotationR));
    let mut sig = rng::stream(seed, Stream::Signal);
    let (u_star, rescale_u) = signal(prior_u, m, &mut sig)?;
    let (v_star, rescale_v) = signal(prior_v, n, &mut sig)?;
    let u1 = initialization(&u_star, epsilon, seed);
    Ok(SpikedInstance {
        kind: InstanceKind::Rectangular,
        m,
        n,
        alpha,
        gamma: Some(m as f64 / n as f64),
        u_star,
        v_star: Some(v_star),
        spectrum: lambda,
        rotation_l: o,
        rotation_r: Some(q),
        epsilon,
        u1,
        rescale_u,
        rescale_v: Some(rescale_v),
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_len(x: &[f64], expected: usize) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got: x.len() })
    }
}

impl SpikedInstance {
    fn right(&self) -> &Rotation {
        self.rotation_r.as_ref().unwrap_or(&self.rotation_l)
    }

    /// `W v` for `v in R^n`.
    pub fn apply_noise(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(v, self.n)?;
        let x = self.right().apply(v);
        let mut y = vec![0.0; self.m];
        for (i, l) in self.spectrum.iter().enumerate() {
            y[i] = l * x[i];
        }
        Ok(self.rotation_l.apply_transpose(&y))
    }

    /// `W^T u` for `u in R^m`.
    pub fn apply_noise_transpose(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(u, self.m)?;
        let x = self.rotation_l.apply(u);
        let mut y = vec![0.0; self.n];
        for (i, l) in self.spectrum.iter().enumerate() {
            y[i] = l * x[i];
        }
        Ok(self.right().apply_transpose(&y))
    }

    fn spike_scale(&self) -> f64 {
        self.alpha / self.m as f64
    }

    fn v_star_or_u(&self) -> &[f64] {
        self.v_star.as_deref().unwrap_or(&self.u_star)
    }

    /// `X v`.
    pub fn apply_data_matrix(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.apply_noise(v)?;
        let c = self.spike_scale() * dot(self.v_star_or_u(), v);
        y.iter_mut().zip(&self.u_star).for_each(|(a, u)| *a += c * u);
        Ok(y)
    }

    /// `X^T u`.
    pub fn apply_data_matrix_transpose(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.apply_noise_transpose(u)?;
        let c = self.spike_scale() * dot(&self.u_star, u);
        y.iter_mut().zip(self.v_star_or_u()).for_each(|(a, v)| *a += c * v);
        Ok(y)
    }

    /// Dense `W`; intended for small dimensions and tests.
    pub fn materialize_noise(&self) -> DMatrix<f64> {
        let o = self.rotation_l.to_dense();
        let q = self.right().to_dense();
        let mut lam = DMatrix::zeros(self.m, self.n);
        for (i, l) in self.spectrum.iter().enumerate() {
            lam[(i, i)] = *l;
        }
        o.transpose() * lam * q
    }

    /// Dense `X`; intended for small dimensions and tests.
    pub fn materialize_data(&self) -> DMatrix<f64> {
        let mut x = self.materialize_noise();
        let c = self.spike_scale();
        let v = self.v_star_or_u();
        for i in 0..self.m {
            for j in 0..self.n {
                x[(i, j)] += c * self.u_star[i] * v[j];
            }
        }
        x
    }

    /// Largest eigenvalue (symmetric) or singular value (rectangular) of `X`.
    pub fn top_spectral_value(&self) -> f64 {
        match self.kind {
            InstanceKind::Symmetric => {
                let w = self.rotation_l.apply(&self.u_star);
                secular_top(&self.spectrum, &w, self.spike_scale())
            }
            InstanceKind::Rectangular => self.rect_gram().top_eigenvalue().max(0.0).sqrt(),
        }
    }

    /// Moments of the spectrum of `X` with the top value removed: `m_1..m_K` normalized by
    /// `n` (symmetric) or `m_2..m_{2K}` normalized by `m` (rectangular).
    ///
    /// Computed exactly from the low-rank structure in the rotated basis, without an
    /// eigendecomposition.
    pub fn empirical_moments(&self, k_max: usize) -> Vec<f64> {
        match self.kind {
            InstanceKind::Symmetric => {
                let w = self.rotation_l.apply(&self.u_star);
                let c = self.spike_scale();
                let s: Vec<f64> = (0..k_max)
                    .map(|a| {
                        self.spectrum
                            .iter()
                            .zip(&w)
                            .map(|(l, wi)| wi * wi * l.powi(a as i32))
                            .sum::<f64>()
                    })
                    .collect();
                // det(I - zX)/det(I - zD) = 1 - c sum_a s_a z^(a+1).
                let mut f = vec![0.0; k_max + 1];
                f[0] = 1.0;
                for a in 0..k_max {
                    f[a + 1] = -c * s[a];
                }
                let top = secular_top(&self.spectrum, &w, c);
                let logf = log_series(&f);
                (1..=k_max)
                    .map(|k| {
                        let tr_d: f64 = self.spectrum.iter().map(|l| l.powi(k as i32)).sum();
                        let tr = tr_d - k as f64 * logf[k];
                        (tr - top.powi(k as i32)) / self.n as f64
                    })
                    .collect()
            }
            InstanceKind::Rectangular => {
                let g = self.rect_gram();
                let top = g.top_eigenvalue();
                let s = |p: &[f64], q: &[f64], a: usize| -> f64 {
                    g.d.iter()
                        .zip(p.iter().zip(q))
                        .map(|(d, (x, y))| x * y * d.powi(a as i32))
                        .sum()
                };
                let (c11, c12) = (g.c11, g.c12);
                // N(z) = I - z C S(z) with C = [[c11, c12], [c12, 0]].
                let mut n11 = vec![0.0; k_max + 1];
                let mut n12 = vec![0.0; k_max + 1];
                let mut n21 = vec![0.0; k_max + 1];
                let mut n22 = vec![0.0; k_max + 1];
                n11[0] = 1.0;
                n22[0] = 1.0;
                for a in 0..k_max {
                    let (saa, sap, spp) = (s(&g.a, &g.a, a), s(&g.a, &g.p, a), s(&g.p, &g.p, a));
                    n11[a + 1] = -(c11 * saa + c12 * sap);
                    n12[a + 1] = -(c11 * sap + c12 * spp);
                    n21[a + 1] = -(c12 * saa);
                    n22[a + 1] = -(c12 * sap);
                }
                let det = series_sub(&series_mul(&n11, &n22), &series_mul(&n12, &n21));
                let logf = log_series(&det);
                (1..=k_max)
                    .map(|k| {
                        let tr_d: f64 = g.d.iter().map(|d| d.powi(k as i32)).sum();
                        let tr = tr_d - k as f64 * logf[k];
                        (tr - top.powi(k as i32)) / self.m as f64
                    })
                    .collect()
            }
        }
    }

    /// Free cumulants of [`Self::empirical_moments`] (square or rectangular with `gamma = m/n`).
    pub fn empirical_cumulants(&self, k_max: usize) -> CumulantTable {
        let mom = self.empirical_moments(k_max);
        match self.kind {
            InstanceKind::Symmetric => CumulantTable::square_from_moments(&mom),
            InstanceKind::Rectangular => CumulantTable::rect_from_moments(&mom, self.m as f64 / self.n as f64),
        }
    }

    fn rect_gram(&self) -> RectGram {
        let a = self.rotation_l.apply(&self.u_star);
        let b = self.right().apply(self.v_star_or_u());
        let c = self.spike_scale();
        let mut d = vec![0.0; self.m];
        let mut p = vec![0.0; self.m];
        for (i, l) in self.spectrum.iter().enumerate() {
            d[i] = l * l;
            p[i] = l * b[i];
        }
        RectGram {
            c11: c * c * dot(&b, &b),
            c12: c,
            d,
            a,
            p,
        }
    }
}

/// `M = D + c11 a a^T + c12 (a p^T + p a^T)`: the rotated `X X^T` of a rectangular instance.
struct RectGram {
    c11: f64,
    c12: f64,
    d: Vec<f64>,
    a: Vec<f64>,
    p: Vec<f64>,
}

impl RectGram {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let (ax, px) = (dot(&self.a, x), dot(&self.p, x));
        let ca = self.c11 * ax + self.c12 * px;
        let cp = self.c12 * ax;
        x.iter()
            .enumerate()
            .map(|(i, xi)| self.d[i] * xi + ca * self.a[i] + cp * self.p[i])
            .collect()
    }

    /// Power iteration started from the spike direction.
    fn top_eigenvalue(&self) -> f64 {
        let mut x: Vec<f64> = self
            .a
            .iter()
            .zip(&self.d)
            .map(|(a, d)| a + 1e-3 * d.sqrt())
            .collect();
        let mut lambda = 0.0;
        for _ in 0..200_000 {
            let nx = dot(&x, &x).sqrt();
            if nx == 0.0 {
                return 0.0;
            }
            x.iter_mut().for_each(|v| *v /= nx);
            let y = self.apply(&x);
            let next = dot(&x, &y);
            let done = (next - lambda).abs() <= 1e-15 * next.abs().max(1e-300);
            lambda = next;
            x = y;
            if done {
                break;
            }
        }
        lambda
    }
}

/// Largest root of `1 = c sum_i w_i^2 / (x - lambda_i)`: top eigenvalue of `diag(lambda) + c w w^T`.
fn secular_top(lambda: &[f64], w: &[f64], c: f64) -> f64 {
    let lmax = lambda.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if c <= 0.0 {
        return lmax;
    }
    // f increases from -inf to 1 on (lmax, inf) and is nonnegative at the upper bracket.
    let f = |x: f64| 1.0 - c * lambda.iter().zip(w).map(|(l, wi)| wi * wi / (x - l)).sum::<f64>();
    let (mut lo, mut hi) = (lmax, lmax + c * dot(w, w) + 1e-12 * lmax.abs().max(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().min(b.len());
    (0..n).map(|k| (0..=k).map(|i| a[i] * b[k - i]).sum()).collect()
}

fn series_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Coefficients of `log f` for a power series with `f_0 = 1`.
fn log_series(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut p = vec![0.0; n];
    for k in 1..n {
        let mut s = k as f64 * f[k];
        for j in 1..k {
            s -= j as f64 * p[j] * f[k - j];
        }
        p[k] = s / k as f64;
    }
    p
}
