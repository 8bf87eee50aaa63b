use crate::amp_engine::{Denoiser, Memory};
use crate::ensembles::Prior;
use crate::error::{Error, Result};
use crate::quadrature::{normal_rule, NormalRule};

/// Posterior mean of `U*` in the channel `F = mu U* + Z`, `Z ~ N(0, sigma2)`.
#[derive(Debug, Clone)]
pub struct PosteriorMean {
    kind: Kind,
    pub mu: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone)]
enum Kind {
    Rademacher,
    Gaussian,
    Atomic { values: Vec<f64>, log_weights: Vec<f64> },
}

impl PosteriorMean {
    pub fn new(prior: &Prior, mu: f64, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::DegenerateNoise(sigma2));
        }
        let kind = match prior {
            Prior::Rademacher {} => Kind::Rademacher,
            Prior::StandardGaussian {} => Kind::Gaussian,
            Prior::AtomicSigned { values, weights } => Kind::Atomic {
                values: values.clone(),
                log_weights: weights.iter().map(|w| w.ln()).collect(),
            },
        };
        Ok(PosteriorMean { kind, mu, sigma2 })
    }

    /// `(E[U* | F = f], Var[U* | F = f])`.
    pub fn mean_var(&self, f: f64) -> (f64, f64) {
        let (mu, s2) = (self.mu, self.sigma2);
        match &self.kind {
            Kind::Rademacher => {
                let e = (mu * f / s2).tanh();
                (e, 1.0 - e * e)
            }
            Kind::Gaussian => {
                let d = s2 + mu * mu;
                (mu * f / d, s2 / d)
            }
            Kind::Atomic { values, log_weights } => {
                let logit = |a: f64, lw: f64| lw + a * mu * (f - 0.5 * a * mu) / s2;
                let top = values
                    .iter()
                    .zip(log_weights)
                    .map(|(&a, &lw)| logit(a, lw))
                    .fold(f64::NEG_INFINITY, f64::max);
                let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
                for (&a, &lw) in values.iter().zip(log_weights) {
                    let e = (logit(a, lw) - top).exp();
                    z += e;
                    m1 += e * a;
                    m2 += e * a * a;
                }
                let mean = m1 / z;
                (mean, (m2 / z - mean * mean).max(0.0))
            }
        }
    }

    pub fn eval(&self, f: f64) -> f64 {
        self.mean_var(f).0
    }

    /// `d/df E[U* | F = f] = (mu / sigma2) Var[U* | F = f]`.
    pub fn deriv(&self, f: f64) -> f64 {
        self.mu / self.sigma2 * self.mean_var(f).1
    }
}

impl Denoiser for PosteriorMean {
    fn memory(&self) -> Memory {
        Memory::Last
    }

    fn eval(&self, args: &[f64]) -> f64 {
        PosteriorMean::eval(self, args[0])
    }

    fn partial(&self, args: &[f64], s: usize) -> f64 {
        if s == 0 {
            self.deriv(args[0])
        } else {
            0.0
        }
    }
}

pub fn posterior_mean(prior: &Prior, f: f64, mu: f64, sigma2: f64) -> Result<f64> {
    Ok(PosteriorMean::new(prior, mu, sigma2)?.eval(f))
}

pub fn posterior_mean_deriv(prior: &Prior, f: f64, mu: f64, sigma2: f64) -> Result<f64> {
    Ok(PosteriorMean::new(prior, mu, sigma2)?.deriv(f))
}

/// `E[g(U*, F)]` for `F = mu U* + sqrt(var) Z`, integrating `Z` with `rule` and `U*` exactly
/// (atomic priors) or with the same rule (Gaussian prior).
pub fn channel_expect(
    prior: &Prior,
    mu: f64,
    var: f64,
    rule: &NormalRule,
    mut g: impl FnMut(f64, f64) -> f64,
) -> f64 {
    let sd = var.max(0.0).sqrt();
    match prior.atoms() {
        Some((values, weights)) => values
            .iter()
            .zip(&weights)
            .map(|(&a, &w)| w * rule.expect(|z| g(a, mu * a + sd * z)))
            .sum(),
        None => rule.expect2(|u, z| g(u, mu * u + sd * z)),
    }
}

/// Bayes risk of the scalar channel at signal-to-noise ratio `s = mu^2 / sigma^2`,
/// integrated with the order-61 Gauss–Hermite rule.
pub fn mmse(prior: &Prior, s: f64) -> f64 {
    mmse_with(prior, s, normal_rule())
}

/// [`mmse`] with an explicit Gaussian rule.
pub fn mmse_with(prior: &Prior, s: f64, rule: &NormalRule) -> f64 {
    if s <= 0.0 {
        return prior.second_moment();
    }
    let eta = PosteriorMean::new(prior, s.sqrt(), 1.0).expect("unit noise");
    channel_expect(prior, s.sqrt(), 1.0, rule, |u, f| {
        let d = u - eta.eval(f);
        d * d
    })
}
