//! Spectral laws, spectrum sampling and empirical moments.

use crate::error::{Error, Result};
use crate::freeprob::CumulantTable;
use crate::quadrature;
use rand::Rng;
use rand_distr::{Beta as BetaDist, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta as BetaLaw, ContinuousCDF};
use std::f64::consts::PI;

/// Absolute tolerance for law expectations, relative to the scale of the integrand.
const EXPECT_TOL: f64 = 1e-13;

/// Law of the eigenvalues (symmetric) or singular values (rectangular) of the noise.
///
/// Serialized as `{"variant": ..., "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", deny_unknown_fields)]
pub enum SpectralLaw {
    /// Semicircle on `[-2, 2]` (unit variance).
    Semicircle {},
    /// Singular values `s` of a unit-variance Marchenko–Pastur matrix with aspect ratio
    /// `gamma`: `s^2` follows the Marchenko–Pastur law (with an atom at zero when `gamma > 1`).
    MarchenkoPastur { gamma: f64 },
    /// `shift + scale * B` with `B ~ Beta(a, b)`.
    AffineBeta { a: f64, b: f64, shift: f64, scale: f64 },
    Atomic { values: Vec<f64>, weights: Vec<f64> },
    Empirical { samples: Vec<f64> },
}

/// Spectrum sampling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    Iid,
    /// Deterministic grid `q((i - 1/2)/n)`.
    #[default]
    Quantile,
}

fn beta_mean_var(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (a / s, a * b / (s * s * (s + 1.0)))
}

impl SpectralLaw {
    /// `Beta(a, b)` centered and scaled to mean 0 and variance 1.
    pub fn beta_mean0_var1(a: f64, b: f64) -> Self {
        let (mean, var) = beta_mean_var(a, b);
        let scale = 1.0 / var.sqrt();
        SpectralLaw::AffineBeta {
            a,
            b,
            shift: -mean * scale,
            scale,
        }
    }

    /// `Beta(a, b)` rescaled to second moment 1.
    pub fn beta_secondmoment1(a: f64, b: f64) -> Self {
        let m2 = a * (a + 1.0) / ((a + b) * (a + b + 1.0));
        SpectralLaw::AffineBeta {
            a,
            b,
            shift: 0.0,
            scale: 1.0 / m2.sqrt(),
        }
    }

    /// Checks parameters: positive shapes, weights summing to one, nonempty samples.
    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidArgument(s.to_string()));
        match self {
            SpectralLaw::Semicircle {} => Ok(()),
            SpectralLaw::MarchenkoPastur { gamma } => {
                if gamma.is_finite() && *gamma > 0.0 {
                    Ok(())
                } else {
                    bad("Marchenko-Pastur gamma must be positive")
                }
            }
            SpectralLaw::AffineBeta { a, b, shift, scale } => {
                if *a > 0.0 && *b > 0.0 && shift.is_finite() && scale.is_finite() && *scale != 0.0 {
                    Ok(())
                } else {
                    bad("AffineBeta needs a, b > 0 and a finite nonzero scale")
                }
            }
            SpectralLaw::Atomic { values, weights } => {
                let total: f64 = weights.iter().sum();
                if values.is_empty() || values.len() != weights.len() {
                    bad("Atomic law needs matching nonempty values and weights")
                } else if weights.iter().any(|w| *w < 0.0) || (total - 1.0).abs() > 1e-12 {
                    bad("Atomic weights must be nonnegative and sum to 1")
                } else {
                    Ok(())
                }
            }
            SpectralLaw::Empirical { samples } => {
                if samples.is_empty() || samples.iter().any(|x| !x.is_finite()) {
                    bad("Empirical law needs finite samples")
                } else {
                    Ok(())
                }
            }
        }
    }

    /// `(inf, sup)` of the support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            SpectralLaw::Semicircle {} => (-2.0, 2.0),
            SpectralLaw::MarchenkoPastur { gamma } => {
                let r = gamma.sqrt();
                let lo = if *gamma > 1.0 { 0.0 } else { (1.0 - r).abs() };
                (lo, 1.0 + r)
            }
            SpectralLaw::AffineBeta { shift, scale, .. } => {
                let (x, y) = (*shift, shift + scale);
                (x.min(y), x.max(y))
            }
            SpectralLaw::Atomic { values, weights } => values
                .iter()
                .zip(weights)
                .filter(|(_, w)| **w > 0.0)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| {
                    (lo.min(*v), hi.max(*v))
                }),
            SpectralLaw::Empirical { samples } => samples
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(*v), hi.max(*v))
                }),
        }
    }

    /// `sup |Lambda|`.
    pub fn support_bound(&self) -> f64 {
        let (lo, hi) = self.support();
        lo.abs().max(hi.abs())
    }

    /// `E[f(Lambda)]`; `scale` is a magnitude bound for `f` on the support, used to set the
    /// absolute quadrature tolerance.
    pub fn expect_scaled(&self, f: &dyn Fn(f64) -> f64, scale: f64) -> f64 {
        let tol = EXPECT_TOL * scale.max(1e-300);
        match self {
            SpectralLaw::Semicircle {} => quadrature::integrate(
                |t| {
                    let s = t.sin();
                    f(2.0 * t.cos()) * 2.0 / PI * s * s
                },
                0.0,
                PI,
                tol,
            ),
            SpectralLaw::MarchenkoPastur { gamma } => {
                let g = *gamma;
                let a = (1.0 - g.sqrt()).powi(2);
                let b = (1.0 + g.sqrt()).powi(2);
                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                let cont = quadrature::integrate(
                    |t| {
                        let x = c + h * t.cos();
                        if x <= 0.0 {
                            return 0.0;
                        }
                        let s = t.sin();
                        f(x.sqrt()) * h * h * s * s / (2.0 * PI * g * x)
                    },
                    0.0,
                    PI,
                    tol,
                );
                if g > 1.0 {
                    cont + (1.0 - 1.0 / g) * f(0.0)
                } else {
                    cont
                }
            }
            SpectralLaw::AffineBeta { a, b, shift, scale: sc } => {
                let (a, b) = (*a, *b);
                let lnorm = statrs::function::beta::ln_beta(a, b);
                quadrature::integrate(
                    |t| {
                        let x = 0.5 * (1.0 - t.cos());
                        let y = 0.5 * (1.0 + t.cos());
                        if x <= 0.0 && a < 1.0 || y <= 0.0 && b < 1.0 {
                            return 0.0;
                        }
                        let dens = ((a - 1.0) * x.ln() + (b - 1.0) * y.ln() - lnorm).exp();
                        let dens = if dens.is_finite() { dens } else { 0.0 };
                        f(shift + sc * x) * dens * 0.5 * t.sin()
                    },
                    0.0,
                    PI,
                    tol,
                )
            }
            SpectralLaw::Atomic { values, weights } => {
                values.iter().zip(weights).map(|(v, w)| w * f(*v)).sum()
            }
            SpectralLaw::Empirical { samples } => {
                samples.iter().map(|v| f(*v)).sum::<f64>() / samples.len() as f64
            }
        }
    }

    /// `E[f(Lambda)]` for `f` of order one on the support.
    pub fn expect(&self, f: &dyn Fn(f64) -> f64) -> f64 {
        self.expect_scaled(f, 1.0)
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        match self {
            SpectralLaw::Semicircle {} => {
                if x <= -2.0 {
                    0.0
                } else if x >= 2.0 {
                    1.0
                } else {
                    0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
                }
            }
            SpectralLaw::MarchenkoPastur { gamma } => {
                if x < lo {
                    return 0.0;
                }
                if x >= hi {
                    return 1.0;
                }
                let g = *gamma;
                let atom = if g > 1.0 { 1.0 - 1.0 / g } else { 0.0 };
                let a = (1.0 - g.sqrt()).powi(2);
                let b = (1.0 + g.sqrt()).powi(2);
                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                let xx = x * x;
                if xx <= a {
                    return atom;
                }
                let theta = ((xx - c) / h).clamp(-1.0, 1.0).acos();
                atom + quadrature::integrate(
                    |t| {
                        let y = c + h * t.cos();
                        if y <= 0.0 {
                            return 0.0;
                        }
                        let s = t.sin();
                        h * h * s * s / (2.0 * PI * g * y)
                    },
                    theta,
                    PI,
                    1e-14,
                )
            }
            SpectralLaw::AffineBeta { a, b, shift, scale } => {
                let beta = BetaLaw::new(*a, *b).expect("validated shapes");
                let u = (x - shift) / scale;
                let p = beta.cdf(u.clamp(0.0, 1.0));
                if *scale > 0.0 {
                    p
                } else {
                    1.0 - p
                }
            }
            SpectralLaw::Atomic { values, weights } => values
                .iter()
                .zip(weights)
                .filter(|(v, _)| **v <= x)
                .map(|(_, w)| w)
                .sum(),
            SpectralLaw::Empirical { samples } => {
                samples.iter().filter(|v| **v <= x).count() as f64 / samples.len() as f64
            }
        }
    }

    /// Quantile function `q(p) = inf {x : F(x) >= p}`.
    pub fn quantile(&self, p: f64) -> f64 {
        let p = p.clamp(0.0, 1.0);
        match self {
            SpectralLaw::AffineBeta { a, b, shift, scale } => {
                let beta = BetaLaw::new(*a, *b).expect("validated shapes");
                let u = if *scale > 0.0 { p } else { 1.0 - p };
                shift + scale * beta.inverse_cdf(u)
            }
            SpectralLaw::Atomic { values, weights } => {
                let mut idx: Vec<usize> = (0..values.len()).collect();
                idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
                let mut acc = 0.0;
                for &i in &idx {
                    acc += weights[i];
                    if acc >= p - 1e-15 && weights[i] > 0.0 {
                        return values[i];
                    }
                }
                values[*idx.last().unwrap()]
            }
            SpectralLaw::Empirical { samples } => {
                let mut s = samples.clone();
                s.sort_by(f64::total_cmp);
                let i = ((p * s.len() as f64).ceil() as usize).clamp(1, s.len());
                s[i - 1]
            }
            _ => {
                if let SpectralLaw::MarchenkoPastur { gamma } = self {
                    if *gamma > 1.0 && p <= 1.0 - 1.0 / gamma {
                        return 0.0;
                    }
                }
                let (mut lo, mut hi) = self.support();
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.cdf(mid) < p {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    /// Draws one value.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            SpectralLaw::Semicircle {} => loop {
                let x: f64 = rng.random_range(-1.0..1.0);
                let y: f64 = rng.random_range(-1.0..1.0);
                if x * x + y * y <= 1.0 {
                    return 2.0 * x;
                }
            },
            SpectralLaw::AffineBeta { a, b, shift, scale } => {
                let d = BetaDist::new(*a, *b).expect("validated shapes");
                shift + scale * d.sample(rng)
            }
            SpectralLaw::Atomic { values, weights } => {
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
            SpectralLaw::Empirical { samples } => samples[rng.random_range(0..samples.len())],
            SpectralLaw::MarchenkoPastur { .. } => self.quantile(rng.random()),
        }
    }

    /// Raw moments `E[Lambda^k]`, `k = 1..K`.
    pub fn moments(&self, k_max: usize) -> Vec<f64> {
        law_moments(self, k_max)
    }

    /// Square free cumulants `kappa_1..kappa_K` of this law as an eigenvalue law.
    pub fn cumulants(&self, k_max: usize) -> CumulantTable {
        let bound = self.support_bound();
        let table = match self {
            SpectralLaw::Semicircle {} => {
                let c: Vec<f64> = (1..=k_max).map(|k| if k == 2 { 1.0 } else { 0.0 }).collect();
                CumulantTable::square_from_cumulants(&c)
            }
            SpectralLaw::AffineBeta { a, b, shift, scale } => {
                let key = exact::Key::Square(exact::key_bits(&[*a, *b]));
                let kb = exact::cached(key, k_max, |k| {
                    exact::square_cumulants(&exact::fixed(&exact::beta_moments(*a, *b, k)))
                });
                let c: Vec<f64> = kb
                    .iter()
                    .enumerate()
                    .map(|(i, k)| {
                        if i == 0 {
                            shift + scale * k
                        } else {
                            scale.powi(i as i32 + 1) * k
                        }
                    })
                    .collect();
                let mut t = CumulantTable::square_from_cumulants(&c);
                t.moments = law_moments(self, k_max);
                t
            }
            SpectralLaw::Atomic { values, weights } => {
                let key = exact::Key::Square(exact::key_bits(&[values.as_slice(), weights].concat()));
                let c = exact::cached(key, k_max, |k| {
                    exact::square_cumulants(&exact::fixed(&exact::moments_of_atoms(values, weights, k)))
                });
                let mut t = CumulantTable::square_from_cumulants(&c);
                t.moments = law_moments(self, k_max);
                t
            }
            _ => CumulantTable::square_from_moments(&law_moments(self, k_max)),
        };
        table.with_spectral_bound(bound)
    }

    /// Rectangular free cumulants `kappa_2..kappa_{2K}` of `Lambda_m` for aspect ratio `gamma`,
    /// where this law describes the `min(m, n)` singular values; for `gamma > 1` the `m - n`
    /// zero singular values are mixed in.
    pub fn rect_cumulants(&self, gamma: f64, k_max: usize) -> CumulantTable {
        let bound = self.support_bound();
        let mix = if gamma > 1.0 { 1.0 / gamma } else { 1.0 };
        let exact_table = |c: Vec<f64>| {
            let mut t = CumulantTable::rect_from_cumulants(&c, gamma);
            t.moments = even_moments(self, k_max).iter().map(|m| m * mix).collect();
            t.bar_moments = t.moments.iter().map(|m| gamma * m).collect();
            t
        };
        let table = match self {
            SpectralLaw::MarchenkoPastur { gamma: g } if (g - gamma).abs() < 1e-15 => {
                let c: Vec<f64> = (1..=k_max).map(|k| if k == 1 { 1.0 } else { 0.0 }).collect();
                CumulantTable::rect_from_cumulants(&c, gamma)
            }
            SpectralLaw::AffineBeta { a, b, shift, scale } if *shift == 0.0 => {
                let key = exact::Key::Rect(exact::key_bits(&[*a, *b, gamma]));
                let kb = exact::cached(key, k_max, |k| {
                    let even: Vec<_> = exact::fixed(&exact::beta_moments(*a, *b, 2 * k))
                        .into_iter()
                        .skip(1)
                        .step_by(2)
                        .collect();
                    exact::rect_cumulants(&exact::zero_mixture(even, gamma), gamma)
                });
                let s2 = scale * scale;
                exact_table(kb.iter().enumerate().map(|(i, k)| s2.powi(i as i32 + 1) * k).collect())
            }
            SpectralLaw::AffineBeta { a, b, shift, scale } => {
                let key = exact::Key::Rect(exact::key_bits(&[*a, *b, *shift, *scale, gamma]));
                exact_table(exact::cached(key, k_max, |k| {
                    let raw = exact::affine_moments(&exact::beta_moments(*a, *b, 2 * k), *shift, *scale);
                    let even: Vec<_> = raw.into_iter().skip(1).step_by(2).collect();
                    exact::rect_cumulants(&exact::zero_mixture(even, gamma), gamma)
                }))
            }
            SpectralLaw::Atomic { values, weights } => {
                let key = exact::Key::Rect(exact::key_bits(&[values.as_slice(), weights, &[gamma]].concat()));
                exact_table(exact::cached(key, k_max, |k| {
                    let raw = exact::fixed(&exact::moments_of_atoms(values, weights, 2 * k));
                    let even: Vec<_> = raw.into_iter().skip(1).step_by(2).collect();
                    exact::rect_cumulants(&exact::zero_mixture(even, gamma), gamma)
                }))
            }
            _ => {
                let even: Vec<f64> = even_moments(self, k_max).iter().map(|m| m * mix).collect();
                CumulantTable::rect_from_moments(&even, gamma)
            }
        };
        table.with_spectral_bound(bound)
    }
}

/// Raw moments `E[B^k]`, `k = 1..K`, of `Beta(a, b)`.
pub fn beta_raw_moments(a: f64, b: f64, k_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_max);
    let mut m = 1.0;
    for i in 0..k_max {
        let i = i as f64;
        m *= (a + i) / (a + b + i);
        out.push(m);
    }
    out
}

/// High-precision arithmetic for the moment-to-cumulant maps.
///
/// The maps are badly conditioned at high order for laws whose moments decay slowly.
/// Laws with exactly representable moments are converted with [`BigRational`] inputs and
/// a [`Fixed`] recursion, then rounded once.
mod exact {
    use crate::freeprob;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, ToPrimitive, Zero};
    use std::collections::HashMap;
    use std::ops::{Add, Mul, Sub};
    use std::sync::{Mutex, OnceLock};

    const FRACTION_BITS: u64 = 512;

    /// Binary fixed point `n / 2^512`.
    #[derive(Debug, Clone, PartialEq)]
    pub struct Fixed(BigInt);

    impl Fixed {
        pub fn from_rational(x: &BigRational) -> Self {
            Fixed((x.numer() << FRACTION_BITS) / x.denom())
        }

        pub fn to_f64(&self) -> f64 {
            let bits = self.0.bits();
            let keep = 64u64;
            let (top, shift) = if bits > keep {
                (&self.0 >> (bits - keep), (bits - keep) as i64)
            } else {
                (self.0.clone(), 0)
            };
            let mantissa = top.to_f64().unwrap_or(f64::NAN);
            mantissa * 2f64.powi((shift - FRACTION_BITS as i64) as i32)
        }
    }

    impl Add for Fixed {
        type Output = Fixed;
        fn add(self, o: Fixed) -> Fixed {
            Fixed(self.0 + o.0)
        }
    }

    impl Sub for Fixed {
        type Output = Fixed;
        fn sub(self, o: Fixed) -> Fixed {
            Fixed(self.0 - o.0)
        }
    }

    impl Mul for Fixed {
        type Output = Fixed;
        fn mul(self, o: Fixed) -> Fixed {
            Fixed((self.0 * o.0) >> FRACTION_BITS)
        }
    }

    impl Zero for Fixed {
        fn zero() -> Self {
            Fixed(BigInt::zero())
        }
        fn is_zero(&self) -> bool {
            self.0.is_zero()
        }
    }

    impl One for Fixed {
        fn one() -> Self {
            Fixed(BigInt::one() << FRACTION_BITS)
        }
    }

    /// Even moments of `Lambda_m`: for `gamma > 1` the law gains an atom at zero of mass
    /// `1 - 1/gamma`.
    pub fn zero_mixture(even: Vec<Fixed>, gamma: f64) -> Vec<Fixed> {
        if gamma <= 1.0 {
            return even;
        }
        let w = Fixed::from_rational(&(BigRational::one() / rat(gamma)));
        even.into_iter().map(|m| m * w.clone()).collect()
    }

    pub fn rat(x: f64) -> BigRational {
        BigRational::from_float(x).expect("finite parameter")
    }

    /// `E[B^k]`, `k = 1..K`, for `B ~ Beta(a, b)`.
    pub fn beta_moments(a: f64, b: f64, k_max: usize) -> Vec<BigRational> {
        let (a, ab) = (rat(a), rat(a + b));
        let mut m = BigRational::one();
        (0..k_max)
            .map(|i| {
                let i = BigRational::from_integer(BigInt::from(i));
                m = &m * (&a + &i) / (&ab + &i);
                m.clone()
            })
            .collect()
    }

    /// Moments of `shift + scale X` from the moments of `X`.
    pub fn affine_moments(base: &[BigRational], shift: f64, scale: f64) -> Vec<Fixed> {
        let (s, c) = (Fixed::from_rational(&rat(shift)), Fixed::from_rational(&rat(scale)));
        let k_max = base.len();
        let mut s_pow = vec![Fixed::one()];
        let mut c_pow = vec![Fixed::one()];
        for _ in 0..k_max {
            s_pow.push(s_pow.last().unwrap().clone() * s.clone());
            c_pow.push(c_pow.last().unwrap().clone() * c.clone());
        }
        let base: Vec<Fixed> = std::iter::once(Fixed::one())
            .chain(base.iter().map(Fixed::from_rational))
            .collect();
        let mut binom = vec![BigInt::one()];
        (1..=k_max)
            .map(|k| {
                let mut next = vec![BigInt::one(); k + 1];
                for i in 1..k {
                    next[i] = &binom[i - 1] + &binom[i];
                }
                binom = next;
                (0..=k).fold(Fixed::zero(), |acc, i| {
                    let coeff = Fixed(binom[i].clone() << FRACTION_BITS);
                    acc + coeff * s_pow[k - i].clone() * c_pow[i].clone() * base[i].clone()
                })
            })
            .collect()
    }

    pub fn moments_of_atoms(values: &[f64], weights: &[f64], k_max: usize) -> Vec<BigRational> {
        let atoms: Vec<(BigRational, BigRational)> =
            values.iter().zip(weights).map(|(v, w)| (rat(*v), rat(*w))).collect();
        let mut powers: Vec<BigRational> = atoms.iter().map(|(_, w)| w.clone()).collect();
        (0..k_max)
            .map(|_| {
                let mut acc = BigRational::zero();
                for (p, (v, _)) in powers.iter_mut().zip(&atoms) {
                    *p = &*p * v;
                    acc += &*p;
                }
                acc
            })
            .collect()
    }

    #[derive(Hash, PartialEq, Eq)]
    pub enum Key {
        Square(Vec<u64>),
        Rect(Vec<u64>),
    }

    pub fn key_bits(xs: &[f64]) -> Vec<u64> {
        xs.iter().map(|x| x.to_bits()).collect()
    }

    /// Memoized evaluation; the cache keeps the longest sequence computed per key.
    pub fn cached(key: Key, k_max: usize, compute: impl FnOnce(usize) -> Vec<f64>) -> Vec<f64> {
        static CACHE: OnceLock<Mutex<HashMap<Key, Vec<f64>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(v) = cache.lock().unwrap().get(&key) {
            if v.len() >= k_max {
                return v[..k_max].to_vec();
            }
        }
        let v = compute(k_max);
        let mut guard = cache.lock().unwrap();
        let slot = guard.entry(key).or_default();
        if v.len() > slot.len() {
            *slot = v.clone();
        }
        v
    }

    pub fn fixed(xs: &[BigRational]) -> Vec<Fixed> {
        xs.iter().map(Fixed::from_rational).collect()
    }

    pub fn square_cumulants(moments: &[Fixed]) -> Vec<f64> {
        freeprob::free_cumulants_generic(moments)
            .iter()
            .map(Fixed::to_f64)
            .collect()
    }

    pub fn rect_cumulants(even_moments: &[Fixed], gamma: f64) -> Vec<f64> {
        let g = Fixed::from_rational(&rat(gamma));
        freeprob::rect_cumulants_generic(even_moments, &g)
            .iter()
            .map(Fixed::to_f64)
            .collect()
    }
}

fn catalan(j: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..j {
        c = c * 2.0 * (2.0 * i as f64 + 1.0) / (i as f64 + 2.0);
    }
    c
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Raw moments `m_1..m_K` of a law.
pub fn law_moments(law: &SpectralLaw, k_max: usize) -> Vec<f64> {
    match law {
        SpectralLaw::Semicircle {} => (1..=k_max)
            .map(|k| if k % 2 == 1 { 0.0 } else { catalan(k / 2) })
            .collect(),
        SpectralLaw::MarchenkoPastur { gamma } => (1..=k_max)
            .map(|k| {
                if k % 2 == 0 {
                    let j = k / 2;
                    (0..j)
                        .map(|r| binomial(j, r + 1) * binomial(j, r) / j as f64 * gamma.powi(r as i32))
                        .sum()
                } else {
                    let bound = law.support_bound().max(1.0).powi(k as i32);
                    law.expect_scaled(&|x| x.powi(k as i32), bound)
                }
            })
            .collect(),
        SpectralLaw::AffineBeta { a, b, shift, scale } => {
            if *shift == 0.0 {
                return beta_raw_moments(*a, *b, k_max)
                    .iter()
                    .enumerate()
                    .map(|(i, m)| scale.powi(i as i32 + 1) * m)
                    .collect();
            }
            // The binomial expansion cancels in floating point; it is summed exactly.
            exact::affine_moments(&exact::beta_moments(*a, *b, k_max), *shift, *scale)
                .iter()
                .map(exact::Fixed::to_f64)
                .collect()
        }
        SpectralLaw::Atomic { values, weights } => (1..=k_max)
            .map(|k| {
                values
                    .iter()
                    .zip(weights)
                    .map(|(v, w)| w * v.powi(k as i32))
                    .sum()
            })
            .collect(),
        SpectralLaw::Empirical { samples } => (1..=k_max)
            .map(|k| samples.iter().map(|v| v.powi(k as i32)).sum::<f64>() / samples.len() as f64)
            .collect(),
    }
}

/// Even moments `m_2..m_{2K}` of a singular-value law.
pub fn even_moments(law: &SpectralLaw, k_max: usize) -> Vec<f64> {
    law_moments(law, 2 * k_max).into_iter().skip(1).step_by(2).collect()
}

/// Samples `n` spectrum values.
pub fn sample_spectrum<R: Rng + ?Sized>(
    law: &SpectralLaw,
    n: usize,
    rng: &mut R,
    mode: SamplingMode,
) -> Result<Vec<f64>> {
    law.validate()?;
    match mode {
        SamplingMode::Iid => Ok((0..n).map(|_| law.sample_one(rng)).collect()),
        SamplingMode::Quantile => {
            if let SpectralLaw::Empirical { samples } = law {
                if n > samples.len() {
                    return Err(Error::QuantileUnavailable(format!(
                        "{n} quantiles requested from {} samples",
                        samples.len()
                    )));
                }
            }
            Ok((0..n)
                .map(|i| law.quantile((i as f64 + 0.5) / n as f64))
                .collect())
        }
    }
}

/// Moments `m_1..m_K` of an eigenvalue list with its largest entry removed, normalized by
/// `n`.
pub fn empirical_moments_excluding_top(eigs: &[f64], k_max: usize, n: usize) -> Result<Vec<f64>> {
    let rest = drop_largest(eigs)?;
    Ok((1..=k_max)
        .map(|k| rest.iter().map(|v| v.powi(k as i32)).sum::<f64>() / n as f64)
        .collect())
}

/// Even moments `m_2..m_{2K}` of singular values with the largest removed, normalized by `m`.
pub fn empirical_even_moments_excluding_top(
    svals: &[f64],
    k_max: usize,
    m: usize,
) -> Result<Vec<f64>> {
    let rest = drop_largest(svals)?;
    Ok((1..=k_max)
        .map(|k| rest.iter().map(|v| v.powi(2 * k as i32)).sum::<f64>() / m as f64)
        .collect())
}

fn drop_largest(values: &[f64]) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::TooFewEntries {
            needed: 2,
            got: values.len(),
        });
    }
    let top = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    Ok(values
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != top)
        .map(|(_, v)| *v)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn semicircle_moments() {
        assert_eq!(law_moments(&SpectralLaw::Semicircle {}, 6), vec![0.0, 1.0, 0.0, 2.0, 0.0, 5.0]);
        let q = SpectralLaw::Semicircle {}.expect(&|x| x.powi(4));
        assert!((q - 2.0).abs() < 1e-12);
    }

    #[test]
    fn beta_helpers() {
        let l = SpectralLaw::beta_mean0_var1(1.0, 2.0);
        let m = law_moments(&l, 2);
        assert!(m[0].abs() < 1e-14 && (m[1] - 1.0).abs() < 1e-13);
        if let SpectralLaw::AffineBeta { shift, scale, .. } = l {
            assert!((scale - 18f64.sqrt()).abs() < 1e-12);
            assert!((shift + 18f64.sqrt() / 3.0).abs() < 1e-12);
        }
        let r = SpectralLaw::beta_secondmoment1(1.0, 2.0);
        assert!((law_moments(&r, 2)[1] - 1.0).abs() < 1e-14);
        for k in 1..=8 {
            let q = l.expect(&|x| x.powi(k));
            assert!((q - law_moments(&l, 8)[k as usize - 1]).abs() < 1e-10);
        }
    }

    #[test]
    fn mp_moments_match_quadrature() {
        for g in [0.5, 1.0, 2.0] {
            let l = SpectralLaw::MarchenkoPastur { gamma: g };
            let m = law_moments(&l, 6);
            assert!((m[1] - 1.0).abs() < 1e-14);
            assert!((m[3] - (1.0 + g)).abs() < 1e-14);
            for k in [2, 4, 6] {
                let q = l.expect_scaled(&|x| x.powi(k), 10.0);
                assert!((q - m[k as usize - 1]).abs() < 1e-9, "g={g} k={k}");
            }
            assert!((l.expect(&|_| 1.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn atomic_and_quantiles() {
        let l = SpectralLaw::Atomic { values: vec![0.0], weights: vec![1.0] };
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        assert_eq!(sample_spectrum(&l, 5, &mut rng, SamplingMode::Quantile).unwrap(), vec![0.0; 5]);
        let r = SpectralLaw::Atomic { values: vec![-1.0, 1.0], weights: vec![0.5, 0.5] };
        assert_eq!(law_moments(&r, 4), vec![0.0, 1.0, 0.0, 1.0]);
        let s = sample_spectrum(&r, 4, &mut rng, SamplingMode::Quantile).unwrap();
        assert_eq!(s, vec![-1.0, -1.0, 1.0, 1.0]);
        let e = SpectralLaw::Empirical { samples: vec![1.0, 2.0] };
        assert!(matches!(
            sample_spectrum(&e, 3, &mut rng, SamplingMode::Quantile),
            Err(Error::QuantileUnavailable(_))
        ));
    }

    #[test]
    fn quantile_grid_moments() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for law in [
            SpectralLaw::beta_mean0_var1(1.0, 2.0),
            SpectralLaw::Semicircle {},
            SpectralLaw::MarchenkoPastur { gamma: 0.5 },
            SpectralLaw::beta_secondmoment1(1.0, 2.0),
        ] {
            let s = sample_spectrum(&law, 2000, &mut rng, SamplingMode::Quantile).unwrap();
            let m = law_moments(&law, 4);
            for k in 1..=4 {
                let e = s.iter().map(|v| v.powi(k)).sum::<f64>() / 2000.0;
                assert!((e - m[k as usize - 1]).abs() <= 0.02, "{law:?} k={k}");
            }
        }
    }

    #[test]
    fn iid_mp_second_moment() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let l = SpectralLaw::MarchenkoPastur { gamma: 0.5 };
        let s = sample_spectrum(&l, 10_000, &mut rng, SamplingMode::Iid).unwrap();
        let sq: Vec<f64> = s.iter().map(|v| v * v).collect();
        let mean = sq.iter().sum::<f64>() / 1e4;
        let var = sq.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 1e4;
        assert!((mean - 1.0).abs() <= 3.0 * (var / 1e4).sqrt());
    }

    #[test]
    fn excluding_top() {
        let m = empirical_moments_excluding_top(&[5.0, 1.0, -1.0, 1.0, -1.0], 2, 5).unwrap();
        assert_eq!(m[0], 0.0);
        let m = empirical_moments_excluding_top(&[3.0, 1.0, 0.0], 2, 3).unwrap();
        assert!((m[1] - 1.0 / 3.0).abs() < 1e-15);
        let m = empirical_even_moments_excluding_top(&[2.0, 1.0], 1, 2).unwrap();
        assert_eq!(m[0], 0.5);
        assert!(matches!(
            empirical_moments_excluding_top(&[1.0], 1, 1),
            Err(Error::TooFewEntries { .. })
        ));
    }

    #[test]
    fn law_json_shape() {
        let l = SpectralLaw::beta_mean0_var1(1.0, 2.0);
        let v = serde_json::to_value(&l).unwrap();
        assert_eq!(v["variant"], "AffineBeta");
        assert!(v["params"]["a"].is_number());
        let back: SpectralLaw = serde_json::from_value(v).unwrap();
        assert_eq!(back, l);
        let s: SpectralLaw = serde_json::from_str(r#"{"variant":"Semicircle","params":{}}"#).unwrap();
        assert_eq!(s, SpectralLaw::Semicircle {});
    }

    #[test]
    fn high_order_beta_cumulants() {
        // Reference values from an exact rational recursion.
        let c = SpectralLaw::beta_mean0_var1(1.0, 2.0).cumulants(80);
        for (k, want) in [(20, 773.0513619828463), (40, 488872532.05952734), (80, 1.1038022190628923e21)] {
            assert!((c.cumulants[k - 1] / want - 1.0).abs() < 1e-12, "k={k}");
        }
        // The affine route agrees with the direct one.
        let l = SpectralLaw::AffineBeta { a: 1.0, b: 2.0, shift: 0.25, scale: 1.5 };
        let direct = CumulantTable::square_from_moments(&l.moments(12));
        let c = l.cumulants(12);
        for k in 0..12 {
            assert!((c.cumulants[k] - direct.cumulants[k]).abs() < 1e-9 * direct.cumulants[k].abs().max(1.0));
        }
        let r = l.rect_cumulants(0.5, 8);
        let direct = CumulantTable::rect_from_moments(&even_moments(&l, 8), 0.5);
        for k in 0..8 {
            assert!((r.cumulants[k] - direct.cumulants[k]).abs() < 1e-9 * direct.cumulants[k].abs().max(1.0));
        }
    }
}
