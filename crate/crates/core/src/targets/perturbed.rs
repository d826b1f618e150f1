use crate::error::{Error, EvalError, Result};
use crate::types::{DiagonalMetric, TargetModel};

/// A smooth perturbation `f` of the standard Gaussian potential.
pub trait Perturbation: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, q: &[f64]) -> Result<f64, EvalError>;

    /// Writes `∇f(q)` into `grad`.
    fn gradient(&self, q: &[f64], grad: &mut [f64]) -> Result<(), EvalError>;

    fn describe(&self) -> String;
}

/// `U(q) = ½ qᵀq + ε f(q)`, with identity kinetic metric unless given.
#[derive(Debug, Clone)]
pub struct PerturbedGaussianTarget<F> {
    epsilon: f64,
    f: F,
    kinetic: DiagonalMetric,
}

impl<F: Perturbation> PerturbedGaussianTarget<F> {
    pub fn new(f: F, epsilon: f64) -> Result<Self> {
        let d = f.dim();
        Self::with_kinetic(f, epsilon, DiagonalMetric::identity(d))
    }

    pub fn with_kinetic(f: F, epsilon: f64, kinetic: DiagonalMetric) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::Domain {
                what: "epsilon",
                value: epsilon,
                interval: "(0, 1]".into(),
            });
        }
        if f.dim() == 0 {
            return Err(Error::Contract(
                "perturbation must have dimension >= 1".into(),
            ));
        }
        if kinetic.dim() != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                found: kinetic.dim(),
            });
        }
        Ok(Self {
            epsilon,
            f,
            kinetic,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn perturbation(&self) -> &F {
        &self.f
    }

    pub fn describe(&self) -> String {
        format!("½qᵀq + {}·f, f = {}", self.epsilon, self.f.describe())
    }
}

impl<F: Perturbation> TargetModel for PerturbedGaussianTarget<F> {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn potential(&self, q: &[f64]) -> Result<f64, EvalError> {
        let base = 0.5 * q.iter().map(|x| x * x).sum::<f64>();
        Ok(base + self.epsilon * self.f.value(q)?)
    }

    fn gradient(&self, q: &[f64], grad: &mut [f64]) -> Result<(), EvalError> {
        self.f.gradient(q, grad)?;
        for (g, x) in grad.iter_mut().zip(q) {
            *g = x + self.epsilon * *g;
        }
        Ok(())
    }

    fn kinetic(&self) -> &DiagonalMetric {
        &self.kinetic
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quartic(usize);

    impl Perturbation for Quartic {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, q: &[f64]) -> Result<f64, EvalError> {
            Ok(q.iter().map(|x| 0.25 * x.powi(4)).sum())
        }
        fn gradient(&self, q: &[f64], grad: &mut [f64]) -> Result<(), EvalError> {
            for (g, x) in grad.iter_mut().zip(q) {
                *g = x.powi(3);
            }
            Ok(())
        }
        fn describe(&self) -> String {
            "Σ q⁴/4".into()
        }
    }

    #[test]
    fn potential_and_gradient_compose() {
        let t = PerturbedGaussianTarget::new(Quartic(2), 0.5).unwrap();
        let q = [1.0, 2.0];
        assert_eq!(t.potential(&q).unwrap(), 2.5 + 0.5 * (0.25 + 4.0));
        let mut g = [0.0; 2];
        t.gradient(&q, &mut g).unwrap();
        assert_eq!(g, [1.5, 6.0]);
    }

    #[test]
    fn epsilon_range() {
        assert!(PerturbedGaussianTarget::new(Quartic(1), 0.0).is_err());
        assert!(PerturbedGaussianTarget::new(Quartic(1), 1.5).is_err());
        assert!(PerturbedGaussianTarget::new(Quartic(1), 1.0).is_ok());
    }
}
