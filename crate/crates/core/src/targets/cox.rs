use nalgebra::{Cholesky, DMatrix, DVector};
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, EvalError, Result};
use crate::rng::RngState;

use super::perturbed::{Perturbation, PerturbedGaussianTarget};

/// Latent values above this abort evaluation instead of overflowing `exp`.
pub const LATENT_LIMIT: f64 = 700.0;

/// Prior parameters of the latent field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoxParams {
    pub sigma2: f64,
    pub beta: f64,
    /// Defaults to `log(Σ X) - σ²/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

/// `S[(i,k),(i',k')] = σ² exp(-√((i-i')² + (k-k')²) / (β d))` on a `d × d`
/// grid, cells indexed row-major (`i·d + k`).
pub fn cox_covariance(grid_side: usize, sigma2: f64, beta: f64) -> DMatrix<f64> {
    let d = grid_side;
    let n = d * d;
    let scale = beta * d as f64;
    DMatrix::from_fn(n, n, |a, b| {
        let di = (a / d) as f64 - (b / d) as f64;
        let dk = (a % d) as f64 - (b % d) as f64;
        sigma2 * (-(di * di + dk * dk).sqrt() / scale).exp()
    })
}

/// Log-Gaussian Cox process on a `d × d` grid, in whitened coordinates.
///
/// The latent log-intensity is `Y = C q + μ1` with `S = C Cᵀ` (lower
/// Cholesky factor), so `q ~ N(0, I)` a priori and the potential is
/// `½ qᵀq + f(q)`, `f(q) = m Σ exp(Y) - Xᵀ Y`, `m = 1/d²`.
#[derive(Debug, Clone)]
pub struct CoxModel {
    grid_side: usize,
    counts: Vec<u64>,
    counts_f: Vec<f64>,
    sigma2: f64,
    beta: f64,
    mu: f64,
    cell_area: f64,
    chol: DMatrix<f64>,
}

impl CoxModel {
    /// `counts` is row-major, length `d²`.
    pub fn new(grid_side: usize, counts: Vec<u64>, params: CoxParams) -> Result<Self> {
        validate_params(grid_side, &params)?;
        let chol = factor(grid_side, params.sigma2, params.beta)?;
        Self::from_factor(grid_side, counts, params, chol)
    }

    fn from_factor(
        grid_side: usize,
        counts: Vec<u64>,
        params: CoxParams,
        chol: DMatrix<f64>,
    ) -> Result<Self> {
        let n = grid_side * grid_side;
        if counts.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: counts.len(),
            });
        }
        let total: u64 = counts.iter().sum();
        let mu = match params.mu {
            Some(mu) if mu.is_finite() => mu,
            Some(mu) => {
                return Err(Error::Domain {
                    what: "mu",
                    value: mu,
                    interval: "finite reals".into(),
                })
            }
            None if total == 0 => {
                return Err(Error::Contract(
                    "all counts are zero: mu = log(sum X) - sigma2/2 is undefined; supply mu"
                        .into(),
                ))
            }
            None => (total as f64).ln() - params.sigma2 / 2.0,
        };
        Ok(Self {
            grid_side,
            counts_f: counts.iter().map(|&c| c as f64).collect(),
            counts,
            sigma2: params.sigma2,
            beta: params.beta,
            mu,
            cell_area: 1.0 / n as f64,
            chol,
        })
    }

    pub fn grid_side(&self) -> usize {
        self.grid_side
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `m = 1/d²`.
    pub fn cell_area(&self) -> f64 {
        self.cell_area
    }

    /// Lower Cholesky factor `C` of `S`; the whitening matrix is `L = C⁻¹`.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn params(&self) -> CoxParams {
        CoxParams {
            sigma2: self.sigma2,
            beta: self.beta,
            mu: Some(self.mu),
        }
    }

    /// `Y = L⁻¹ q + μ1 = C q + μ1`.
    pub fn latent(&self, q: &[f64]) -> Vec<f64> {
        let n = q.len();
        let c = self.chol.as_slice();
        let mut y = vec![self.mu; n];
        for (k, &qk) in q.iter().enumerate() {
            let col = &c[k * n..(k + 1) * n];
            for i in k..n {
                y[i] += col[i] * qk;
            }
        }
        y
    }

    /// `q = L (y - μ1)`, by forward substitution.
    pub fn whiten(&self, y: &[f64]) -> Vec<f64> {
        let rhs = DVector::from_iterator(y.len(), y.iter().map(|v| v - self.mu));
        self.chol
            .solve_lower_triangular(&rhs)
            .expect("Cholesky factor has a positive diagonal")
            .as_slice()
            .to_vec()
    }

    /// `L⁻ᵀ v = Cᵀ v`.
    fn apply_transpose(&self, v: &[f64], out: &mut [f64]) {
        let n = v.len();
        let c = self.chol.as_slice();
        for (k, o) in out.iter_mut().enumerate() {
            let col = &c[k * n..(k + 1) * n];
            *o = col[k..].iter().zip(&v[k..]).map(|(a, b)| a * b).sum();
        }
    }

    fn checked_latent(&self, q: &[f64]) -> Result<Vec<f64>, EvalError> {
        if let Some(i) = q.iter().position(|v| !v.is_finite()) {
            return Err(EvalError::NonFinite {
                quantity: "position",
                index: Some(i),
            });
        }
        let y = self.latent(q);
        let max_latent = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max_latent > LATENT_LIMIT {
            return Err(EvalError::Overflow {
                max_latent,
                limit: LATENT_LIMIT,
            });
        }
        Ok(y)
    }

    /// `max |L S Lᵀ - I|`, computed by two triangular solves.
    pub fn factor_residual(&self) -> f64 {
        let s = cox_covariance(self.grid_side, self.sigma2, self.beta);
        let a = self
            .chol
            .solve_lower_triangular(&s)
            .expect("positive diagonal");
        let b = self
            .chol
            .solve_lower_triangular(&a.transpose())
            .expect("positive diagonal");
        let n = s.nrows();
        (b - DMatrix::<f64>::identity(n, n)).amax()
    }

    /// The posterior as a sampling target, `U(q) = ½ qᵀq + f(q)`.
    pub fn into_target(self) -> PerturbedGaussianTarget<CoxModel> {
        PerturbedGaussianTarget::new(self, 1.0).expect("epsilon = 1 and dimension >= 1")
    }
}

impl Perturbation for CoxModel {
    fn dim(&self) -> usize {
        self.counts.len()
    }

    fn value(&self, q: &[f64]) -> Result<f64, EvalError> {
        let y = self.checked_latent(q)?;
        let f = y
            .iter()
            .zip(&self.counts_f)
            .map(|(yi, xi)| self.cell_area * yi.exp() - xi * yi)
            .sum();
        Ok(f)
    }

    fn gradient(&self, q: &[f64], grad: &mut [f64]) -> Result<(), EvalError> {
        let mut y = self.checked_latent(q)?;
        for (yi, xi) in y.iter_mut().zip(&self.counts_f) {
            *yi = self.cell_area * yi.exp() - xi;
        }
        self.apply_transpose(&y, grad);
        Ok(())
    }

    fn describe(&self) -> String {
        format!(
            "log-Gaussian Cox process, {0}x{0} grid, sigma2 = {1}, beta = {2}, mu = {3}",
            self.grid_side, self.sigma2, self.beta, self.mu
        )
    }
}

fn validate_params(grid_side: usize, params: &CoxParams) -> Result<()> {
    if grid_side == 0 {
        return Err(Error::Contract("grid side must be >= 1".into()));
    }
    for (what, value) in [("sigma2", params.sigma2), ("beta", params.beta)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Domain {
                what,
                value,
                interval: "(0, inf)".into(),
            });
        }
    }
    Ok(())
}

fn factor(grid_side: usize, sigma2: f64, beta: f64) -> Result<DMatrix<f64>> {
    let s = cox_covariance(grid_side, sigma2, beta);
    Cholesky::new(s).map(|c| c.l()).ok_or_else(|| {
        Error::Contract(format!(
            "latent covariance is not positive definite for d = {grid_side}, sigma2 = {sigma2}, beta = {beta}"
        ))
    })
}

/// Draws a latent field `Y = μ₀ + C z` with `μ₀ = log(intensity) - σ²/2`
/// and Poisson counts with means `m exp(Y)`, so the expected total count is
/// `intensity`. The returned model derives `μ` from the drawn counts.
pub fn synthesize_cox(
    seed: u64,
    grid_side: usize,
    sigma2: f64,
    beta: f64,
    intensity: f64,
) -> Result<CoxModel> {
    let params = CoxParams {
        sigma2,
        beta,
        mu: None,
    };
    validate_params(grid_side, &params)?;
    if !(intensity.is_finite() && intensity > 0.0) {
        return Err(Error::Domain {
            what: "intensity",
            value: intensity,
            interval: "(0, inf)".into(),
        });
    }
    let chol = factor(grid_side, sigma2, beta)?;
    let n = grid_side * grid_side;
    let m = 1.0 / n as f64;
    let mut rng = RngState::new(seed);
    let mut z = vec![0.0; n];
    rng.fill_standard_normal(&mut z);
    let field = &chol * DVector::from_vec(z);
    let mu0 = intensity.ln() - sigma2 / 2.0;
    let counts = field
        .iter()
        .map(|yi| {
            let lambda = m * (mu0 + yi).exp();
            let poisson = Poisson::new(lambda).map_err(|e| {
                Error::Contract(format!("cannot draw counts with mean {lambda}: {e}"))
            })?;
            Ok(poisson.sample(&mut rng) as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    CoxModel::from_factor(grid_side, counts, params, chol)
}
