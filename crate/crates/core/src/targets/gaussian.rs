use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, EvalError, Result};
use crate::rng::RngState;
use crate::types::{DiagonalMetric, TargetModel};

/// Independent Gaussian `N(0, diag(α₁², …, α_d²))`: `U(q) = ½ Σ q_j²/α_j²`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDiagonalTarget {
    alphas: Vec<f64>,
    precisions: Vec<f64>,
    kinetic: DiagonalMetric,
}

impl GaussianDiagonalTarget {
    /// `alphas` are standard deviations.
    pub fn new(alphas: Vec<f64>, kinetic: DiagonalMetric) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::Contract("target must have dimension >= 1".into()));
        }
        if let Some(j) = alphas.iter().position(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::Contract(format!(
                "alpha[{j}] must be finite and > 0, got {}",
                alphas[j]
            )));
        }
        if kinetic.dim() != alphas.len() {
            return Err(Error::DimensionMismatch {
                expected: alphas.len(),
                found: kinetic.dim(),
            });
        }
        let precisions = alphas.iter().map(|a| 1.0 / (a * a)).collect();
        Ok(Self {
            alphas,
            precisions,
            kinetic,
        })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// `σ_j = β_j / α_j`, the diagonal of `Σ = D_β^{1/2} D_α^{-1/2}`.
    pub fn sigma_scale(&self) -> Vec<f64> {
        self.kinetic
            .std_devs()
            .iter()
            .zip(&self.alphas)
            .map(|(b, a)| b / a)
            .collect()
    }
}

impl TargetModel for GaussianDiagonalTarget {
    fn dim(&self) -> usize {
        self.alphas.len()
    }

    fn potential(&self, q: &[f64]) -> Result<f64, EvalError> {
        Ok(0.5
            * q.iter()
                .zip(&self.precisions)
                .map(|(x, w)| x * x * w)
                .sum::<f64>())
    }

    fn gradient(&self, q: &[f64], grad: &mut [f64]) -> Result<(), EvalError> {
        for ((g, x), w) in grad.iter_mut().zip(q).zip(&self.precisions) {
            *g = x * w;
        }
        Ok(())
    }

    fn kinetic(&self) -> &DiagonalMetric {
        &self.kinetic
    }

    fn gaussian_structure(&self) -> Option<&GaussianDiagonalTarget> {
        Some(self)
    }

    fn exact_draw(&self, rng: &mut RngState) -> Option<Vec<f64>> {
        let mut z = vec![0.0; self.alphas.len()];
        rng.fill_standard_normal(&mut z);
        for (x, a) in z.iter_mut().zip(&self.alphas) {
            *x *= a;
        }
        Some(z)
    }
}

/// Neal's ill-conditioned Gaussian: `α_j = 1/j²`, `D_β = I`.
pub fn neal_multivariate(d: usize) -> Result<GaussianDiagonalTarget> {
    if d == 0 {
        return Err(Error::Contract("dimension must be >= 1".into()));
    }
    let alphas = (1..=d).map(|j| 1.0 / (j * j) as f64).collect();
    GaussianDiagonalTarget::new(alphas, DiagonalMetric::identity(d))
}

/// Correlated Gaussian `N(0, S)` with identity kinetic metric.
///
/// Keeps the spectral form `S = Vᵀ D_α V` (rows of `V` are eigenvectors,
/// eigenvalues ascending) so the target can be rewritten in decorrelated
/// coordinates `Q = V X`, where it becomes a [`GaussianDiagonalTarget`].
#[derive(Debug, Clone)]
pub struct GaussianCorrelatedTarget {
    covariance: DMatrix<f64>,
    v: DMatrix<f64>,
    eigenvalues: Vec<f64>,
    precision: DMatrix<f64>,
    kinetic: DiagonalMetric,
    decorrelated: GaussianDiagonalTarget,
}

impl GaussianCorrelatedTarget {
    pub fn new(covariance: DMatrix<f64>) -> Result<Self> {
        let d = covariance.nrows();
        if d == 0 || covariance.ncols() != d {
            return Err(Error::Contract(
                "covariance must be square with dimension >= 1".into(),
            ));
        }
        if covariance.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract("covariance has non-finite entries".into()));
        }
        let scale = covariance.amax().max(f64::MIN_POSITIVE);
        if (&covariance - covariance.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Contract("covariance is not symmetric".into()));
        }

        let eig = SymmetricEigen::new(covariance.clone());
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        if eigenvalues[0] <= 0.0 {
            return Err(Error::Contract(format!(
                "covariance is not positive definite (smallest eigenvalue {})",
                eigenvalues[0]
            )));
        }
        let mut v = DMatrix::zeros(d, d);
        for (row, &k) in order.iter().enumerate() {
            let col = eig.eigenvectors.column(k);
            let pivot = col.iamax();
            let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..d {
                v[(row, i)] = sign * col[i];
            }
        }
        let inv = DMatrix::from_diagonal(&DVector::from_iterator(
            d,
            eigenvalues.iter().map(|l| 1.0 / l),
        ));
        let precision = v.transpose() * inv * &v;
        let kinetic = DiagonalMetric::identity(d);
        let decorrelated = GaussianDiagonalTarget::new(
            eigenvalues.iter().map(|l| l.sqrt()).collect(),
            kinetic.clone(),
        )?;
        Ok(Self {
            covariance,
            v,
            eigenvalues,
            precision,
            kinetic,
            decorrelated,
        })
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Orthogonal `V` with `S = Vᵀ D_α V`; row `j` is the `j`-th eigenvector.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.v
    }

    /// Diagonal of `D_α` (variances), ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// The same distribution in coordinates `Q = V X`.
    pub fn decorrelated(&self) -> &GaussianDiagonalTarget {
        &self.decorrelated
    }

    /// `Q = V X`.
    pub fn to_decorrelated(&self, x: &[f64]) -> Vec<f64> {
        (&self.v * DVector::from_column_slice(x))
            .as_slice()
            .to_vec()
    }

    /// `X = Vᵀ Q`.
    pub fn from_decorrelated(&self, q: &[f64]) -> Vec<f64> {
        self.v
            .tr_mul(&DVector::from_column_slice(q))
            .as_slice()
            .to_vec()
    }
}

impl TargetModel for GaussianCorrelatedTarget {
    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn potential(&self, x: &[f64]) -> Result<f64, EvalError> {
        let xv = DVector::from_column_slice(x);
        Ok(0.5 * xv.dot(&(&self.precision * &xv)))
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) -> Result<(), EvalError> {
        let g = &self.precision * DVector::from_column_slice(x);
        grad.copy_from_slice(g.as_slice());
        Ok(())
    }

    fn kinetic(&self) -> &DiagonalMetric {
        &self.kinetic
    }

    fn exact_draw(&self, rng: &mut RngState) -> Option<Vec<f64>> {
        let q = self.decorrelated.exact_draw(rng)?;
        Some(self.from_decorrelated(&q))
    }
}

/// Bivariate Gaussian with unit variances and correlation `rho`.
pub fn bivariate_corr(rho: f64) -> Result<GaussianCorrelatedTarget> {
    if !(rho.is_finite() && rho.abs() < 1.0) {
        return Err(Error::Contract(format!(
            "correlation {rho} does not give a positive-definite covariance; need |rho| < 1"
        )));
    }
    GaussianCorrelatedTarget::new(DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]))
}
