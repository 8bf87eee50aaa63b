//! Free-probability calculus.
//!
//! Square free cumulants satisfy `M(z) = 1 + z M(z) R(z M(z))` with
//! `M(z) = 1 + sum m_k z^k` and `R(z) = sum kappa_k z^(k-1)`. Rectangular free cumulants
//! with aspect ratio `gamma` satisfy `M(z) = R(z (gamma M(z) + 1)(M(z) + 1))` with
//! `M(z) = sum m_{2k} z^k` and `R(z) = sum kappa_{2k} z^k`.
//!
//! Conversions use power-series coefficient recursions in `O(K^3)` time.

mod transforms;

pub use transforms::{
    cauchy_transform, cauchy_transform_deriv, cauchy_transform_inverse, law_r_transform,
    law_r_transform_deriv, RectTransforms,
};

use crate::error::{Error, Result};
use num_traits::{One, Zero};
use std::ops::Sub;
use serde::{Deserialize, Serialize};

/// Square (symmetric matrix) or rectangular cumulants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CumulantKind {
    Square,
    Rectangular,
}

/// Moments together with their free cumulants.
///
/// Square tables store `m_1..m_K` and `kappa_1..kappa_K`. Rectangular tables store
/// `m_2, m_4, .., m_{2K}` and `kappa_2, .., kappa_{2K}` plus the barred sequences
/// `bar m_{2k} = gamma m_{2k}` and `bar kappa_{2k} = gamma kappa_{2k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantTable {
    pub kind: CumulantKind,
    pub gamma: Option<f64>,
    pub moments: Vec<f64>,
    pub cumulants: Vec<f64>,
    pub bar_moments: Vec<f64>,
    pub bar_cumulants: Vec<f64>,
    /// Bound `M` with `|Lambda| <= M`, used to certify series tails.
    pub spectral_bound: Option<f64>,
}

impl CumulantTable {
    pub fn square_from_moments(moments: &[f64]) -> Self {
        let cumulants = free_cumulants_from_moments(moments);
        Self::square(moments.to_vec(), cumulants)
    }

    pub fn square_from_cumulants(cumulants: &[f64]) -> Self {
        let moments = moments_from_free_cumulants(cumulants);
        Self::square(moments, cumulants.to_vec())
    }

    fn square(moments: Vec<f64>, cumulants: Vec<f64>) -> Self {
        CumulantTable {
            kind: CumulantKind::Square,
            gamma: None,
            moments,
            cumulants,
            bar_moments: Vec::new(),
            bar_cumulants: Vec::new(),
            spectral_bound: None,
        }
    }

    pub fn rect_from_moments(even_moments: &[f64], gamma: f64) -> Self {
        let cumulants = rect_cumulants_from_moments(even_moments, gamma);
        Self::rect(even_moments.to_vec(), cumulants, gamma)
    }

    pub fn rect_from_cumulants(even_cumulants: &[f64], gamma: f64) -> Self {
        let moments = rect_moments_from_cumulants(even_cumulants, gamma);
        Self::rect(moments, even_cumulants.to_vec(), gamma)
    }

    fn rect(moments: Vec<f64>, cumulants: Vec<f64>, gamma: f64) -> Self {
        let bar_moments = moments.iter().map(|m| gamma * m).collect();
        let bar_cumulants = cumulants.iter().map(|k| gamma * k).collect();
        CumulantTable {
            kind: CumulantKind::Rectangular,
            gamma: Some(gamma),
            moments,
            cumulants,
            bar_moments,
            bar_cumulants,
            spectral_bound: None,
        }
    }

    pub fn with_spectral_bound(mut self, bound: f64) -> Self {
        self.spectral_bound = Some(bound);
        self
    }

    pub fn len(&self) -> usize {
        self.cumulants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulants.is_empty()
    }

    /// Square `kappa_k` (`k >= 1`); `kappa_0 = 1` by convention.
    pub fn kappa(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.cumulants.get(k - 1).copied().unwrap_or(0.0)
        }
    }

    /// Rectangular `kappa_{2j}` (`j >= 1`); `kappa_0 = 1`.
    pub fn kappa_even(&self, j: usize) -> f64 {
        self.kappa(j)
    }

    /// Fails unless at least `needed` cumulants are stored.
    pub fn require(&self, needed: usize) -> Result<()> {
        if self.cumulants.len() < needed {
            Err(Error::InsufficientCumulants {
                needed,
                available: self.cumulants.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Truncated or extended copy holding exactly `k` cumulants (missing entries are zero).
    pub fn truncated(&self, k: usize) -> Self {
        let mut c = self.cumulants.clone();
        c.resize(k, 0.0);
        match self.kind {
            CumulantKind::Square => {
                Self::square_from_cumulants(&c).with_bound(self.spectral_bound)
            }
            CumulantKind::Rectangular => {
                Self::rect_from_cumulants(&c, self.gamma.unwrap_or(1.0)).with_bound(self.spectral_bound)
            }
        }
    }

    fn with_bound(mut self, b: Option<f64>) -> Self {
        self.spectral_bound = b;
        self
    }
}

/// Scalars the coefficient recursions run over.
pub trait Scalar: Clone + Zero + One + Sub<Output = Self> {}

impl<T: Clone + Zero + One + Sub<Output = T>> Scalar for T {}

/// Coefficients `[z^i] Q(z)^j` for `1 <= j <= K`, `0 <= i <= K`, filled as the
/// coefficients of `Q` become available. `Q` has zero constant term.
struct PowerTable<T> {
    p: Vec<Vec<T>>,
}

impl<T: Scalar> PowerTable<T> {
    fn new(k: usize) -> Self {
        PowerTable {
            p: vec![vec![T::zero(); k + 1]; k + 1],
        }
    }

    /// Sets `[z^d] Q = q` and completes `[z^d] Q^j` for every `j >= 2`.
    /// Requires all coefficients of `Q` below degree `d` to be set already.
    fn push(&mut self, d: usize, q: T) {
        self.p[1][d] = q;
        for j in 2..=d {
            let mut s = T::zero();
            for i in 1..=(d - j + 1) {
                s = s + self.p[1][i].clone() * self.p[j - 1][d - i].clone();
            }
            self.p[j][d] = s;
        }
    }

    /// `sum_{j in range} c_j [z^d] Q^j`.
    fn contract(&self, c: &[T], d: usize, j_end: usize) -> T {
        (1..j_end).fold(T::zero(), |acc, j| acc + c[j - 1].clone() * self.p[j][d].clone())
    }
}

/// Free cumulants `kappa_1..kappa_K` from moments `m_1..m_K`.
pub fn free_cumulants_from_moments(moments: &[f64]) -> Vec<f64> {
    free_cumulants_generic(moments)
}

/// Moments `m_1..m_K` from free cumulants `kappa_1..kappa_K`.
pub fn moments_from_free_cumulants(cumulants: &[f64]) -> Vec<f64> {
    moments_from_free_cumulants_generic(cumulants)
}

/// [`free_cumulants_from_moments`] over any [`Scalar`].
pub fn free_cumulants_generic<T: Scalar>(moments: &[T]) -> Vec<T> {
    let k_max = moments.len();
    let mut kappa = vec![T::zero(); k_max];
    let mut table = PowerTable::new(k_max);
    for k in 1..=k_max {
        // Q(z) = z M(z): [z^k] Q = m_{k-1}.
        let q = if k == 1 { T::one() } else { moments[k - 2].clone() };
        table.push(k, q);
        kappa[k - 1] = moments[k - 1].clone() - table.contract(&kappa, k, k);
    }
    kappa
}

/// [`moments_from_free_cumulants`] over any [`Scalar`].
pub fn moments_from_free_cumulants_generic<T: Scalar>(cumulants: &[T]) -> Vec<T> {
    let k_max = cumulants.len();
    let mut out: Vec<T> = Vec::with_capacity(k_max);
    let mut table = PowerTable::new(k_max);
    for k in 1..=k_max {
        let q = if k == 1 { T::one() } else { out[k - 2].clone() };
        table.push(k, q);
        out.push(table.contract(cumulants, k, k + 1));
    }
    out
}

/// `[z^d] Q` with `Q(z) = z (1 + (1+gamma) M(z) + gamma M(z)^2)` and `M` known up to degree `d-1`.
fn rect_q_coeff<T: Scalar>(m: &[T], gamma: &T, d: usize) -> T {
    // m[i] = [z^i] M, m[0] = 0.
    let e = d - 1;
    if e == 0 {
        return T::one();
    }
    let mut sq = T::zero();
    for i in 1..e {
        sq = sq + m[i].clone() * m[e - i].clone();
    }
    (T::one() + gamma.clone()) * m[e].clone() + gamma.clone() * sq
}

/// Rectangular free cumulants `kappa_2..kappa_{2K}` from `m_2..m_{2K}`.
pub fn rect_cumulants_from_moments(even_moments: &[f64], gamma: f64) -> Vec<f64> {
    rect_cumulants_generic(even_moments, &gamma)
}

/// Even moments `m_2..m_{2K}` from rectangular free cumulants `kappa_2..kappa_{2K}`.
pub fn rect_moments_from_cumulants(even_cumulants: &[f64], gamma: f64) -> Vec<f64> {
    rect_moments_generic(even_cumulants, &gamma)
}

/// [`rect_cumulants_from_moments`] over any [`Scalar`].
pub fn rect_cumulants_generic<T: Scalar>(even_moments: &[T], gamma: &T) -> Vec<T> {
    let k_max = even_moments.len();
    let mut kappa = vec![T::zero(); k_max];
    let mut table = PowerTable::new(k_max);
    let mut m = vec![T::zero()];
    for k in 1..=k_max {
        table.push(k, rect_q_coeff(&m, gamma, k));
        kappa[k - 1] = even_moments[k - 1].clone() - table.contract(&kappa, k, k);
        m.push(even_moments[k - 1].clone());
    }
    kappa
}

/// [`rect_moments_from_cumulants`] over any [`Scalar`].
pub fn rect_moments_generic<T: Scalar>(even_cumulants: &[T], gamma: &T) -> Vec<T> {
    let k_max = even_cumulants.len();
    let mut table = PowerTable::new(k_max);
    let mut m = vec![T::zero()];
    for k in 1..=k_max {
        table.push(k, rect_q_coeff(&m, gamma, k));
        m.push(table.contract(even_cumulants, k, k + 1));
    }
    m.split_off(1)
}

/// Partial-moment coefficients `c_{k,j}` (and `bar c_{k,j}` in the rectangular case).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialMomentTable {
    pub kind: CumulantKind,
    pub gamma: Option<f64>,
    /// `c[k][j]` for `0 <= k <= K`, `0 <= j <= J`.
    pub c: Vec<Vec<f64>>,
    pub c_bar: Option<Vec<Vec<f64>>>,
}

impl PartialMomentTable {
    pub fn get(&self, k: usize, j: usize) -> Option<f64> {
        self.c.get(k).and_then(|r| r.get(j)).copied()
    }

    pub fn get_bar(&self, k: usize, j: usize) -> Option<f64> {
        self.c_bar
            .as_ref()
            .and_then(|c| c.get(k))
            .and_then(|r| r.get(j))
            .copied()
    }

    pub fn k_max(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    pub fn j_max(&self) -> usize {
        self.c.first().map(|r| r.len().saturating_sub(1)).unwrap_or(0)
    }
}

/// Square coefficients `c_{k,j}`, `0 <= k <= k_max`, `0 <= j <= j_max`, from
/// `kappa_1..kappa_{k_max + j_max}`.
pub fn partial_moment_coeffs(
    cumulants: &[f64],
    k_max: usize,
    j_max: usize,
) -> Result<PartialMomentTable> {
    let needed = k_max + j_max;
    if cumulants.len() < needed {
        return Err(Error::InsufficientCumulants {
            needed,
            available: cumulants.len(),
        });
    }
    let kappa = |i: usize| if i == 0 { 1.0 } else { cumulants[i - 1] };
    // Row k is needed up to width j_max + (k_max - k).
    let mut row: Vec<f64> = (0..=needed).map(|j| if j == 0 { 1.0 } else { 0.0 }).collect();
    let mut c = vec![row[..=j_max].to_vec()];
    for k in 1..=k_max {
        let width = j_max + k_max - k;
        let next: Vec<f64> = (0..=width)
            .map(|j| (0..=j + 1).map(|m| row[m] * kappa(j + 1 - m)).sum())
            .collect();
        c.push(next[..=j_max].to_vec());
        row = next;
    }
    Ok(PartialMomentTable {
        kind: CumulantKind::Square,
        gamma: None,
        c,
        c_bar: None,
    })
}

/// Rectangular coefficients `c_{k,j}` and `bar c_{k,j}`, `0 <= k <= k_max`,
/// `0 <= j <= j_max`, from `kappa_2..kappa_{2L}` with `L >= (k_max + 1)/2 + j_max`.
pub fn rect_partial_moment_coeffs(
    even_cumulants: &[f64],
    gamma: f64,
    k_max: usize,
    j_max: usize,
) -> Result<PartialMomentTable> {
    let odd_rows = k_max.div_ceil(2);
    let needed = odd_rows + j_max;
    if even_cumulants.len() < needed {
        return Err(Error::InsufficientCumulants {
            needed,
            available: even_cumulants.len(),
        });
    }
    let kappa = |i: usize| if i == 0 { 1.0 } else { even_cumulants[i - 1] };
    let kappa_bar = |i: usize| if i == 0 { 1.0 } else { gamma * even_cumulants[i - 1] };
    let width0 = j_max + odd_rows;
    let mut row: Vec<f64> = (0..=width0).map(|j| if j == 0 { 1.0 } else { 0.0 }).collect();
    let mut row_bar = row.clone();
    let mut c = vec![row[..=j_max].to_vec()];
    let mut cb = vec![row_bar[..=j_max].to_vec()];
    for k in 1..=k_max {
        let width = row.len() - 1;
        let (next, next_bar) = if k % 2 == 1 {
            // Odd rows consume one extra column of the previous even row.
            let w = width - 1;
            let a: Vec<f64> = (0..=w)
                .map(|j| (0..=j + 1).map(|m| row[m] * kappa(j + 1 - m)).sum())
                .collect();
            let b: Vec<f64> = (0..=w)
                .map(|j| (0..=j + 1).map(|m| row_bar[m] * kappa_bar(j + 1 - m)).sum())
                .collect();
            (a, b)
        } else {
            let a: Vec<f64> = (0..=width)
                .map(|j| (0..=j).map(|m| row[m] * kappa_bar(j - m)).sum())
                .collect();
            let b: Vec<f64> = (0..=width)
                .map(|j| (0..=j).map(|m| row_bar[m] * kappa(j - m)).sum())
                .collect();
            (a, b)
        };
        c.push(next[..=j_max].to_vec());
        cb.push(next_bar[..=j_max].to_vec());
        row = next;
        row_bar = next_bar;
    }
    Ok(PartialMomentTable {
        kind: CumulantKind::Rectangular,
        gamma: Some(gamma),
        c,
        c_bar: Some(cb),
    })
}

/// Value of a truncated power series plus an estimate or bound of the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    /// Bound (certified) or estimate (heuristic) of the truncation error.
    pub tail: f64,
    /// True when the tail comes from the cumulant growth bound rather than a ratio test.
    pub certified: bool,
}

/// Series-tail tolerance below which a certified evaluation is reported as exact.
pub const SERIES_TOL: f64 = 1e-12;

#[derive(Clone, Copy)]
enum Series {
    R,
    RDeriv,
    S,
}

impl CumulantTable {
    /// `R(x)`: `sum kappa_k x^(k-1)` (square) or `sum kappa_{2k} x^k` (rectangular).
    pub fn r_transform(&self, x: f64) -> Result<SeriesValue> {
        self.series(Series::R, x)
    }

    /// `R'(x)`.
    pub fn r_transform_deriv(&self, x: f64) -> Result<SeriesValue> {
        self.series(Series::RDeriv, x)
    }

    /// `S(x) = (R(x)/x)'`, defined for rectangular tables.
    pub fn s_transform(&self, x: f64) -> Result<SeriesValue> {
        if self.kind == CumulantKind::Square {
            return Err(Error::InvalidArgument(
                "S-transform is defined for rectangular cumulants".into(),
            ));
        }
        self.series(Series::S, x)
    }

    /// Coefficients `a_i` of `x^i` and the growth bound `|a_i| <= poly(i) rho^(i + shift)`.
    fn coefficients(&self, which: Series) -> (Vec<f64>, usize) {
        let k = &self.cumulants;
        match (self.kind, which) {
            (CumulantKind::Square, Series::R) => (k.clone(), 1),
            (CumulantKind::Square, Series::RDeriv) | (CumulantKind::Rectangular, Series::RDeriv) => {
                let shift = if self.kind == CumulantKind::Square { 2 } else { 1 };
                let off = if self.kind == CumulantKind::Square { 1 } else { 0 };
                (
                    k.iter()
                        .enumerate()
                        .skip(off)
                        .map(|(i, &c)| c * (i + 1 - off) as f64)
                        .collect(),
                    shift,
                )
            }
            (CumulantKind::Rectangular, Series::R) => {
                let mut a = vec![0.0];
                a.extend_from_slice(k);
                (a, 0)
            }
            (_, Series::S) => (
                k.iter()
                    .enumerate()
                    .skip(1)
                    .map(|(i, &c)| c * i as f64)
                    .collect(),
                2,
            ),
        }
    }

    fn growth_rate(&self) -> Option<f64> {
        let m = self.spectral_bound?;
        Some(match self.kind {
            CumulantKind::Square => 16.0 * m,
            CumulantKind::Rectangular => self.gamma.unwrap_or(1.0).max(1.0) * (16.0 * m).powi(2),
        })
    }

    fn series(&self, which: Series, x: f64) -> Result<SeriesValue> {
        let (a, shift) = self.coefficients(which);
        let n = a.len();
        let mut value = 0.0;
        let mut p = 1.0;
        let mut terms = Vec::with_capacity(n);
        for &c in &a {
            value += c * p;
            terms.push((c * p).abs());
            p *= x;
        }
        if let Some(rho) = self.growth_rate() {
            let q = rho * x.abs();
            if q < 1.0 {
                let nf = n as f64;
                // sum_{i >= n} (i+1) q^i rho^shift covers every series kind.
                let tail = rho.powi(shift as i32) * q.powi(n as i32) * ((nf + 1.0) * (1.0 - q) + q)
                    / (1.0 - q).powi(2);
                if tail <= SERIES_TOL {
                    return Ok(SeriesValue {
                        value,
                        tail,
                        certified: true,
                    });
                }
            }
        }
        let tail = ratio_tail(&terms).ok_or(Error::RadiusExceeded {
            x,
            radius: self.growth_rate().map(|r| 1.0 / r).unwrap_or(0.0),
        })?;
        Ok(SeriesValue {
            value,
            tail,
            certified: false,
        })
    }
}

/// Ratio-test tail estimate from the magnitudes of the last terms; `None` when the
/// terms do not decrease geometrically.
fn ratio_tail(terms: &[f64]) -> Option<f64> {
    let n = terms.len();
    if n == 0 {
        return Some(0.0);
    }
    let w = (n / 2).clamp(1, 4);
    let recent = terms[n - w..].iter().cloned().fold(0.0, f64::max);
    if recent == 0.0 {
        return Some(0.0);
    }
    if n < 2 * w {
        return None;
    }
    let earlier = terms[n - 2 * w..n - w].iter().cloned().fold(0.0, f64::max);
    if earlier == 0.0 {
        return None;
    }
    let q = (recent / earlier).powf(1.0 / w as f64);
    if !(q < 1.0) {
        return None;
    }
    Some(recent * q / (1.0 - q).powi(2))
}
