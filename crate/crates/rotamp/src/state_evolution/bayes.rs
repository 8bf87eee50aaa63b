use super::denoiser::PosteriorMean;
use super::se::SeTrajectory;
use crate::amp_engine::{run_rect_amp, run_symmetric_amp, AmpTrajectory, Denoiser, RunOptions};
use crate::ensembles::{InstanceKind, Prior, SpikedInstance};
use crate::error::{Error, Result};
use crate::freeprob::CumulantTable;
use crate::amp_engine::CumulantSource;

/// Bayes-AMP on a symmetric instance, with posterior-mean denoisers parametrized by `se`.
pub fn bayes_amp_symmetric(
    inst: &SpikedInstance,
    prior: &Prior,
    se: &SeTrajectory,
    cumulants: &CumulantTable,
    source: CumulantSource,
) -> Result<AmpTrajectory> {
    if inst.kind != InstanceKind::Symmetric {
        return Err(Error::InvalidArgument("instance is not symmetric".into()));
    }
    let dens = (0..se.steps)
        .map(|t| PosteriorMean::new(prior, se.mu[t], se.sigma[(t, t)]))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&dyn Denoiser> = dens.iter().map(|d| d as &dyn Denoiser).collect();
    let opts = RunOptions::new(cumulants, source).with_signal(&inst.u_star, None);
    run_symmetric_amp(inst, &inst.u1, &refs, &opts)
}

/// Bayes-AMP on a rectangular instance: `v_t` uses `(nu_t, omega_tt)` and `u_{t+1}` uses
/// `(mu_t, sigma_tt)`.
pub fn bayes_amp_rect(
    inst: &SpikedInstance,
    prior_u: &Prior,
    prior_v: &Prior,
    se: &SeTrajectory,
    cumulants: &CumulantTable,
    source: CumulantSource,
) -> Result<AmpTrajectory> {
    let (Some(gamma), Some(v_star), Some(omega)) = (inst.gamma, inst.v_star.as_deref(), se.omega.as_ref())
    else {
        return Err(Error::InvalidArgument("rectangular instance and trajectory required".into()));
    };
    let dv = (0..se.steps)
        .map(|t| PosteriorMean::new(prior_v, se.nu[t], omega[(t, t)]))
        .collect::<Result<Vec<_>>>()?;
    let du = (0..se.steps)
        .map(|t| PosteriorMean::new(prior_u, se.mu[t], se.sigma[(t, t)]))
        .collect::<Result<Vec<_>>>()?;
    let rv: Vec<&dyn Denoiser> = dv.iter().map(|d| d as &dyn Denoiser).collect();
    let ru: Vec<&dyn Denoiser> = du.iter().map(|d| d as &dyn Denoiser).collect();
    let opts = RunOptions::new(cumulants, source).with_signal(&inst.u_star, Some(v_star));
    run_rect_amp(inst, &inst.u1, &rv, &ru, gamma, &opts)
}
