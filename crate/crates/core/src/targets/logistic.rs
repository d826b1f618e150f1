use crate::error::{Error, EvalError, Result};
use crate::rng::RngState;

use super::perturbed::{Perturbation, PerturbedGaussianTarget};

/// `log(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `1 / (1 + e^{-z})` without overflow.
pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Bayesian logistic regression with prior `𝛃 ~ N(0, σ² I)`, sampled in the
/// whitened coordinates `q = 𝛃 / σ`:
///
/// `U(q) = ½ qᵀq + Σ_k log(1 + exp(σ x_kᵀ q)) - σ qᵀ Xᵀ Y`.
///
/// The design carries an intercept as its first column.
#[derive(Debug, Clone)]
pub struct LogisticModel {
    n: usize,
    cols: usize,
    design: Vec<f64>,
    labels: Vec<f64>,
    prior_sigma2: f64,
    sigma: f64,
}

impl LogisticModel {
    /// `covariates` holds one row per instance, without intercept. With
    /// `normalize`, each covariate is centred and scaled to unit sample
    /// standard deviation (constant columns are only centred).
    pub fn new(
        covariates: &[Vec<f64>],
        labels: &[u8],
        prior_sigma2: f64,
        normalize: bool,
    ) -> Result<Self> {
        let n = covariates.len();
        if n == 0 {
            return Err(Error::Contract(
                "logistic model needs at least one instance".into(),
            ));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(Error::Contract(format!(
                "label {i} is {}, expected 0 or 1",
                labels[i]
            )));
        }
        if !(prior_sigma2.is_finite() && prior_sigma2 > 0.0) {
            return Err(Error::Domain {
                what: "prior_sigma2",
                value: prior_sigma2,
                interval: "(0, inf)".into(),
            });
        }
        let d = covariates[0].len();
        for (i, row) in covariates.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Contract(format!(
                    "row {i} has {} covariates, expected {d}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Contract(format!(
                    "covariate ({i}, {j}) is not finite"
                )));
            }
        }

        let mut shift = vec![0.0; d];
        let mut scale = vec![1.0; d];
        if normalize {
            for j in 0..d {
                let mean = covariates.iter().map(|r| r[j]).sum::<f64>() / n as f64;
                let var = if n > 1 {
                    covariates
                        .iter()
                        .map(|r| (r[j] - mean).powi(2))
                        .sum::<f64>()
                        / (n - 1) as f64
                } else {
                    0.0
                };
                shift[j] = mean;
                if var > 0.0 {
                    scale[j] = var.sqrt();
                }
            }
        }

        let cols = d + 1;
        let mut design = Vec::with_capacity(n * cols);
        for row in covariates {
            design.push(1.0);
            design.extend(
                row.iter()
                    .enumerate()
                    .map(|(j, v)| (v - shift[j]) / scale[j]),
            );
        }
        Ok(Self {
            n,
            cols,
            design,
            labels: labels.iter().map(|&y| y as f64).collect(),
            prior_sigma2,
            sigma: prior_sigma2.sqrt(),
        })
    }

    pub fn n_instances(&self) -> usize {
        self.n
    }

    /// Number of covariates, excluding the intercept.
    pub fn n_covariates(&self) -> usize {
        self.cols - 1
    }

    pub fn prior_sigma2(&self) -> f64 {
        self.prior_sigma2
    }

    /// Row `k` of the design, intercept first.
    pub fn design_row(&self, k: usize) -> &[f64] {
        &self.design[k * self.cols..(k + 1) * self.cols]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// `𝛃 = σ q`.
    pub fn to_coefficients(&self, q: &[f64]) -> Vec<f64> {
        q.iter().map(|v| v * self.sigma).collect()
    }

    fn linear_predictor(&self, k: usize, q: &[f64]) -> f64 {
        self.sigma
            * self
                .design_row(k)
                .iter()
                .zip(q)
                .map(|(x, w)| x * w)
                .sum::<f64>()
    }

    pub fn into_target(self) -> PerturbedGaussianTarget<LogisticModel> {
        PerturbedGaussianTarget::new(self, 1.0).expect("epsilon = 1 and dimension >= 1")
    }
}

impl Perturbation for LogisticModel {
    fn dim(&self) -> usize {
        self.cols
    }

    fn value(&self, q: &[f64]) -> Result<f64, EvalError> {
        let f = (0..self.n)
            .map(|k| {
                let z = self.linear_predictor(k, q);
                softplus(z) - z * self.labels[k]
            })
            .sum::<f64>();
        if f.is_finite() {
            Ok(f)
        } else {
            Err(EvalError::NonFinite {
                quantity: "logistic potential",
                index: q.iter().position(|v| !v.is_finite()),
            })
        }
    }

    fn gradient(&self, q: &[f64], grad: &mut [f64]) -> Result<(), EvalError> {
        grad.fill(0.0);
        for k in 0..self.n {
            let r = self.sigma * (logistic(self.linear_predictor(k, q)) - self.labels[k]);
            for (g, x) in grad.iter_mut().zip(self.design_row(k)) {
                *g += r * x;
            }
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!(
            "Bayesian logistic regression, {} instances, {} covariates, prior variance {}",
            self.n,
            self.cols - 1,
            self.prior_sigma2
        )
    }
}

/// Synthetic data set: covariates `N(0, 1)`, intercept `-0.5`, slopes
/// uniform in `[-1, 1]`, labels drawn from the logistic model.
/// Returns `(covariate rows, labels)`.
pub fn synthesize_logistic(seed: u64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<u8>) {
    let mut rng = RngState::new(seed);
    let slopes: Vec<f64> = (0..d).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut x = vec![0.0; d];
        rng.fill_standard_normal(&mut x);
        let z = -0.5 + x.iter().zip(&slopes).map(|(a, b)| a * b).sum::<f64>();
        labels.push(u8::from(rng.uniform() < logistic(z)));
        rows.push(x);
    }
    (rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::TargetModel;

    #[test]
    fn stable_scalar_functions() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert_eq!(logistic(0.0), 0.5);
        assert_eq!(logistic(1000.0), 1.0);
        assert_eq!(logistic(-1000.0), 0.0);
    }

    #[test]
    fn origin_value() {
        let (rows, labels) = synthesize_logistic(1, 20, 2);
        let t = LogisticModel::new(&rows, &labels, 1.0, true)
            .unwrap()
            .into_target();
        let u = t.potential(&[0.0; 3]).unwrap();
        assert!((u - 20.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn saturation_limit() {
        let m = LogisticModel::new(&[vec![]], &[1], 1.0, false).unwrap();
        assert!(m.value(&[40.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (rows, labels) = synthesize_logistic(5, 20, 2);
        let t = LogisticModel::new(&rows, &labels, 2.0, true)
            .unwrap()
            .into_target();
        let mut rng = RngState::new(6);
        for _ in 0..10 {
            let q: Vec<f64> = (0..3).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
            let mut g = vec![0.0; 3];
            t.gradient(&q, &mut g).unwrap();
            for j in 0..3 {
                let mut qp = q.clone();
                let mut qm = q.clone();
                qp[j] += 1e-5;
                qm[j] -= 1e-5;
                let fd = (t.potential(&qp).unwrap() - t.potential(&qm).unwrap()) / 2e-5;
                assert!(
                    (fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1.0),
                    "{fd} vs {}",
                    g[j]
                );
            }
        }
    }

    #[test]
    fn normalization_and_intercept() {
        let (rows, labels) = synthesize_logistic(2, 50, 3);
        let m = LogisticModel::new(&rows, &labels, 1.0, true).unwrap();
        for j in 1..4 {
            let col: Vec<f64> = (0..50).map(|k| m.design_row(k)[j]).collect();
            let mean = col.iter().sum::<f64>() / 50.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 49.0;
            assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        }
        assert!((0..50).all(|k| m.design_row(k)[0] == 1.0));
    }

    #[test]
    fn invalid_inputs() {
        assert!(LogisticModel::new(&[vec![1.0]], &[2], 1.0, false).is_err());
        assert!(LogisticModel::new(&[vec![1.0], vec![1.0, 2.0]], &[0, 1], 1.0, false).is_err());
        assert!(LogisticModel::new(&[vec![1.0]], &[1], 0.0, false).is_err());
    }
}
