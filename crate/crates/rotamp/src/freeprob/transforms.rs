use crate::error::{Error, Result};
use crate::spectra::SpectralLaw;

/// Left end of the inversion bracket, measured from the supremum of the support.
const BRACKET_LO: f64 = 1e-9;
const BRACKET_HI: f64 = 1e6;
const INVERSE_TOL: f64 = 1e-12;

fn check_domain(law: &SpectralLaw, z: f64, sup: f64) -> Result<()> {
    let _ = law;
    if z.is_finite() && z > sup {
        Ok(())
    } else {
        Err(Error::OutOfDomain { z, sup })
    }
}

/// Cauchy transform `G(z) = E[1/(z - Lambda)]` for `z` above the support.
pub fn cauchy_transform(law: &SpectralLaw, z: f64) -> Result<f64> {
    let sup = law.support().1;
    check_domain(law, z, sup)?;
    let d = z - sup;
    let g = law.expect_scaled(&|x| 1.0 / (z - x), 1.0 / d);
    finite(g, "Cauchy transform")
}

/// `G'(z) = -E[1/(z - Lambda)^2]`.
pub fn cauchy_transform_deriv(law: &SpectralLaw, z: f64) -> Result<f64> {
    let sup = law.support().1;
    check_domain(law, z, sup)?;
    let d = z - sup;
    let g = -law.expect_scaled(&|x| 1.0 / ((z - x) * (z - x)), 1.0 / (d * d));
    finite(g, "Cauchy transform derivative")
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::QuadratureFailure(what.to_string()))
    }
}

/// Inverse of a decreasing function `f` on `(sup, infinity)` with `f -> 0` at infinity.
fn invert_decreasing(f: &dyn Fn(f64) -> Result<f64>, sup: f64, target: f64) -> Result<f64> {
    let mut lo = sup + BRACKET_LO;
    let top = f(lo)?;
    if !(target > 0.0 && target < top) {
        return Err(Error::InverseOutOfRange { target, max: top });
    }
    let mut hi = sup + BRACKET_HI;
    while f(hi)? > target {
        hi = sup + 10.0 * (hi - sup);
        if !hi.is_finite() {
            return Err(Error::InverseOutOfRange { target, max: top });
        }
    }
    while hi - lo > INVERSE_TOL * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `G^{-1}(x)` on the decreasing branch `z > sup support`.
pub fn cauchy_transform_inverse(law: &SpectralLaw, x: f64) -> Result<f64> {
    let sup = law.support().1;
    invert_decreasing(&|z| cauchy_transform(law, z), sup, x)
}

/// `R(x) = G^{-1}(x) - 1/x` evaluated through the law.
pub fn law_r_transform(law: &SpectralLaw, x: f64) -> Result<f64> {
    Ok(cauchy_transform_inverse(law, x)? - 1.0 / x)
}

/// `R'(x) = 1/G'(G^{-1}(x)) + 1/x^2` evaluated through the law.
pub fn law_r_transform_deriv(law: &SpectralLaw, x: f64) -> Result<f64> {
    let z = cauchy_transform_inverse(law, x)?;
    Ok(1.0 / cauchy_transform_deriv(law, z)? + 1.0 / (x * x))
}

/// Transforms of a singular-value law with aspect ratio `gamma`:
/// `phi(z) = E[z/(z^2 - Lambda^2)]`, `bar phi = gamma phi + (1-gamma)/z`,
/// `D = phi bar phi` and `T(z) = (1+z)(1+gamma z)`.
#[derive(Debug, Clone)]
pub struct RectTransforms<'a> {
    pub law: &'a SpectralLaw,
    pub gamma: f64,
}

impl<'a> RectTransforms<'a> {
    pub fn new(law: &'a SpectralLaw, gamma: f64) -> Self {
        RectTransforms { law, gamma }
    }

    fn sup(&self) -> f64 {
        self.law.support_bound()
    }

    pub fn phi(&self, z: f64) -> Result<f64> {
        let sup = self.sup();
        check_domain(self.law, z, sup)?;
        let d = z - sup;
        let v = self.law.expect_scaled(&|x| z / (z * z - x * x), 1.0 / d);
        finite(v, "phi")
    }

    pub fn phi_deriv(&self, z: f64) -> Result<f64> {
        let sup = self.sup();
        check_domain(self.law, z, sup)?;
        let d = z - sup;
        let v = -self.law.expect_scaled(
            &|x| {
                let q = z * z - x * x;
                (z * z + x * x) / (q * q)
            },
            1.0 / (d * d),
        );
        finite(v, "phi derivative")
    }

    pub fn phi_bar(&self, z: f64) -> Result<f64> {
        Ok(self.gamma * self.phi(z)? + (1.0 - self.gamma) / z)
    }

    pub fn phi_bar_deriv(&self, z: f64) -> Result<f64> {
        Ok(self.gamma * self.phi_deriv(z)? - (1.0 - self.gamma) / (z * z))
    }

    pub fn d(&self, z: f64) -> Result<f64> {
        Ok(self.phi(z)? * self.phi_bar(z)?)
    }

    pub fn d_deriv(&self, z: f64) -> Result<f64> {
        let (p, pb) = (self.phi(z)?, self.phi_bar(z)?);
        Ok(self.phi_deriv(z)? * pb + p * self.phi_bar_deriv(z)?)
    }

    /// `D^{-1}(x)` on the branch above the largest singular value.
    pub fn d_inverse(&self, x: f64) -> Result<f64> {
        invert_decreasing(&|z| self.d(z), self.sup(), x)
    }

    pub fn t(&self, z: f64) -> f64 {
        (1.0 + z) * (1.0 + self.gamma * z)
    }

    pub fn t_deriv(&self, z: f64) -> f64 {
        (1.0 + self.gamma * z) + self.gamma * (1.0 + z)
    }
}
