//! Bayes-AMP state evolution for spiked PCA, fixed points and spectral baselines.

mod bayes;
mod denoiser;
mod fixed_point;
mod se;

pub use bayes::{bayes_amp_rect, bayes_amp_symmetric};
pub use denoiser::{
    channel_expect, mmse, mmse_with, posterior_mean, posterior_mean_deriv, PosteriorMean,
};
pub use fixed_point::{
    fixed_point_rect, fixed_point_rect_with, fixed_point_symmetric, fixed_point_symmetric_with,
    pca_baseline_rect, pca_baseline_rect_series, pca_baseline_symmetric,
    pca_baseline_symmetric_series, rect_x, FixedPoint, PicardOptions,
};
pub use se::{pair_expect, psd_pair, se_pca_rect, se_pca_symmetric, SeTrajectory};
