//! One-sample Kolmogorov-Smirnov test.

use statrs::distribution::{ContinuousCDF, Normal};

/// Asymptotic p-value of the KS statistic of `samples` against `cdf`, with the Stephens
/// small-sample correction.
pub fn ks_pvalue(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let d = x.iter().enumerate().fold(0.0f64, |d, (i, &v)| {
        let f = cdf(v);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    });
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let p: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    p.clamp(0.0, 1.0)
}

pub fn normal_pvalue(samples: &[f64], sd: f64) -> f64 {
    let law = Normal::new(0.0, sd).unwrap();
    ks_pvalue(samples, |x| law.cdf(x))
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}
