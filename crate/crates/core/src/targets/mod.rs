//! Concrete target distributions.

mod cox;
mod data;
mod gaussian;
mod logistic;
mod perturbed;

pub use cox::{cox_covariance, synthesize_cox, CoxModel, CoxParams, LATENT_LIMIT};
pub use data::{
    load_count_grid, load_cox_params, load_logistic_csv, write_logistic_csv, LogisticCsvOptions,
};
pub use gaussian::{
    bivariate_corr, neal_multivariate, GaussianCorrelatedTarget, GaussianDiagonalTarget,
};
pub use logistic::{logistic, softplus, synthesize_logistic, LogisticModel};
pub use perturbed::{Perturbation, PerturbedGaussianTarget};
