//! Phase-space state, kinetic metric, and the target contract.

use crate::error::{Error, EvalError, Result};
use crate::rng::RngState;
use crate::targets::GaussianDiagonalTarget;

/// Joint position/momentum state `(q, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl PhasePoint {
    /// Builds a state, rejecting empty, mismatched or non-finite vectors.
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::Contract(
                "phase point must have dimension >= 1".into(),
            ));
        }
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: q.len(),
                found: p.len(),
            });
        }
        if let Some(i) = q.iter().chain(p.iter()).position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!(
                "phase point entry {i} is not finite"
            )));
        }
        Ok(Self { q, p })
    }

    pub(crate) fn from_parts(q: Vec<f64>, p: Vec<f64>) -> Self {
        debug_assert_eq!(q.len(), p.len());
        Self { q, p }
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.q, self.p)
    }

    /// `(q, p) -> (q, -p)`.
    pub fn flip_momentum(&self) -> Self {
        Self {
            q: self.q.clone(),
            p: self.p.iter().map(|v| -v).collect(),
        }
    }
}

/// Diagonal covariance `D_β` (or `D_α`) stored as per-coordinate variances.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalMetric {
    variances: Vec<f64>,
}

impl DiagonalMetric {
    pub fn new(variances: Vec<f64>) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::Contract("metric must have dimension >= 1".into()));
        }
        if let Some(i) = variances.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Contract(format!(
                "metric variance {i} must be finite and > 0, got {}",
                variances[i]
            )));
        }
        Ok(Self { variances })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            variances: vec![1.0; dim.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.variances.len()
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    /// Standard deviations `β_i`.
    pub fn std_devs(&self) -> Vec<f64> {
        self.variances.iter().map(|v| v.sqrt()).collect()
    }

    /// `½ Σ p_i² / β_i²`.
    pub fn kinetic_energy(&self, p: &[f64]) -> f64 {
        0.5 * p
            .iter()
            .zip(&self.variances)
            .map(|(pi, v)| pi * pi / v)
            .sum::<f64>()
    }
}

/// Potential, kinetic and total energy of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HamiltonianValue {
    pub potential: f64,
    pub kinetic: f64,
    pub total: f64,
}

/// A distribution to sample, given by its potential `U = -log π + const`.
///
/// Implementations are immutable after construction and shared read-only
/// between chains.
pub trait TargetModel: Send + Sync {
    fn dim(&self) -> usize;

    fn potential(&self, q: &[f64]) -> Result<f64, EvalError>;

    /// Writes `∇U(q)` into `grad`.
    fn gradient(&self, q: &[f64], grad: &mut [f64]) -> Result<(), EvalError>;

    /// Momentum covariance `D_β`.
    fn kinetic(&self) -> &DiagonalMetric;

    /// The diagonal Gaussian this target *is*, when it is one.
    fn gaussian_structure(&self) -> Option<&GaussianDiagonalTarget> {
        None
    }

    /// An exact draw from the target, when one is available.
    fn exact_draw(&self, _rng: &mut RngState) -> Option<Vec<f64>> {
        None
    }
}

/// `H(q, p) = ½ pᵀ D_β⁻¹ p + U(q)`.
pub fn hamiltonian(target: &dyn TargetModel, state: &PhasePoint) -> Result<HamiltonianValue> {
    if state.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            found: state.dim(),
        });
    }
    let potential = target.potential(state.q())?;
    if !potential.is_finite() {
        return Err(EvalError::NonFinite {
            quantity: "potential",
            index: state.q().iter().position(|v| !v.is_finite()),
        }
        .into());
    }
    let kinetic = target.kinetic().kinetic_energy(state.p());
    Ok(HamiltonianValue {
        potential,
        kinetic,
        total: potential + kinetic,
    })
}

/// Draws `p ~ N(0, D_β)`.
pub fn draw_momentum(metric: &DiagonalMetric, rng: &mut RngState) -> Vec<f64> {
    let mut p = vec![0.0; metric.dim()];
    rng.fill_standard_normal(&mut p);
    for (pi, v) in p.iter_mut().zip(metric.variances()) {
        *pi *= v.sqrt();
    }
    p
}
