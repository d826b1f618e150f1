//! Phase-space maps used inside HMC.
//!
//! Sub-flows: the drift `φ^[P]_t: q ← q + t D_β⁻¹ p` and the kick
//! `φ^[Q]_t: p ← p - t ∇U(q)`.
//!
//! - Störmer-Verlet: `φ^[Q]_{h/2} ∘ φ^[P]_h ∘ φ^[Q]_{h/2}`, two gradients per step.
//! - Splitting family `Ψ_h^(b)`:
//!   `φ^[Q]_{bh} ∘ φ^[P]_{h/2} ∘ φ^[Q]_{(1-2b)h} ∘ φ^[P]_{h/2} ∘ φ^[Q]_{bh}`,
//!   three gradients per step. Kicks of adjacent steps are not fused, so
//!   every step is a self-contained reversible map.
//! - Scaled family: the same composition for a diagonal Gaussian, with the
//!   per-coordinate flows `dq/dt = Σ⁻¹ p` and `dp/dt = -Σ q`, run at
//!   `h = h_b`. It preserves `H` exactly for every coordinate at once.
//!
//! A three-step leapfrog competitor is Störmer-Verlet with `N` tripled.

use crate::error::{Error, EvalError, Result};
use crate::linear::step_size_hb;
use crate::targets::GaussianDiagonalTarget;
use crate::types::{hamiltonian, PhasePoint, TargetModel};

#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    StormerVerlet,
    SplitFamily {
        b: f64,
    },
    /// `sigma_scale` is the diagonal of `Σ`, `σ_j = β_j / α_j`.
    ScaledSplitFamily {
        b: f64,
        sigma_scale: Vec<f64>,
    },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::StormerVerlet => "stormer_verlet",
            Scheme::SplitFamily { .. } => "split_family",
            Scheme::ScaledSplitFamily { .. } => "scaled_split_family",
        }
    }

    pub fn b(&self) -> Option<f64> {
        match self {
            Scheme::StormerVerlet => None,
            Scheme::SplitFamily { b } | Scheme::ScaledSplitFamily { b, .. } => Some(*b),
        }
    }

    /// Force evaluations per step.
    pub fn gradient_evals_per_step(&self) -> usize {
        match self {
            Scheme::StormerVerlet => 2,
            _ => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorSpec {
    pub scheme: Scheme,
    pub h: f64,
    pub n_steps: usize,
}

impl IntegratorSpec {
    pub fn stormer_verlet(h: f64, n_steps: usize) -> Result<Self> {
        Self::checked(Scheme::StormerVerlet, h, n_steps)
    }

    pub fn split_family(b: f64, h: f64, n_steps: usize) -> Result<Self> {
        Self::checked(Scheme::SplitFamily { b }, h, n_steps)
    }

    /// Scaled family at its own step size `h_b(b)`.
    pub fn scaled_split_family(b: f64, sigma_scale: Vec<f64>, n_steps: usize) -> Result<Self> {
        let h = step_size_hb(b)?;
        Self::checked(Scheme::ScaledSplitFamily { b, sigma_scale }, h, n_steps)
    }

    /// Scaled family with `Σ` taken from the target.
    pub fn scaled_for(target: &GaussianDiagonalTarget, b: f64, n_steps: usize) -> Result<Self> {
        Self::scaled_split_family(b, target.sigma_scale(), n_steps)
    }

    fn checked(scheme: Scheme, h: f64, n_steps: usize) -> Result<Self> {
        let spec = Self { scheme, h, n_steps };
        spec.check()?;
        Ok(spec)
    }

    pub fn with_steps(&self, n_steps: usize) -> Self {
        Self {
            n_steps,
            ..self.clone()
        }
    }

    /// Checks the spec on its own, without reference to a target.
    pub fn check(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::Contract("number of steps N must be >= 1".into()));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::Domain {
                what: "h",
                value: self.h,
                interval: "(0, inf)".into(),
            });
        }
        match &self.scheme {
            Scheme::StormerVerlet => {}
            Scheme::SplitFamily { b } => check_family_b(*b)?,
            Scheme::ScaledSplitFamily { b, sigma_scale } => {
                let h_b = step_size_hb(*b)?;
                if self.h != h_b {
                    return Err(Error::Contract(format!(
                        "the scaled family runs at h_b = {h_b}, got h = {}",
                        self.h
                    )));
                }
                if let Some(j) = sigma_scale
                    .iter()
                    .position(|s| !(s.is_finite() && *s > 0.0))
                {
                    return Err(Error::Contract(format!(
                        "sigma_scale[{j}] must be finite and > 0, got {}",
                        sigma_scale[j]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Checks the spec against a target.
    pub fn validate(&self, target: &dyn TargetModel) -> Result<()> {
        self.check()?;
        if let Scheme::ScaledSplitFamily { sigma_scale, .. } = &self.scheme {
            if target.gaussian_structure().is_none() {
                return Err(Error::Contract(
                    "the scaled family is defined only for diagonal Gaussian targets".into(),
                ));
            }
            if sigma_scale.len() != target.dim() {
                return Err(Error::DimensionMismatch {
                    expected: target.dim(),
                    found: sigma_scale.len(),
                });
            }
        }
        Ok(())
    }
}

fn check_family_b(b: f64) -> Result<()> {
    if !b.is_finite() {
        return Err(Error::Domain {
            what: "b",
            value: b,
            interval: "finite reals".into(),
        });
    }
    if b == 0.0 || b == 0.5 {
        return Err(Error::DegenerateFamily(b));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub end_state: PhasePoint,
    /// `H(end) - H(start)`.
    pub delta_h: f64,
    /// Force evaluations: `2N` for Störmer-Verlet, `3N` for either family.
    pub n_gradient_evals: usize,
}

/// In-place stepper with a reusable gradient buffer.
struct Stepper<'a> {
    target: &'a dyn TargetModel,
    inv_var: Vec<f64>,
    grad: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(target: &'a dyn TargetModel) -> Self {
        Self {
            target,
            inv_var: target
                .kinetic()
                .variances()
                .iter()
                .map(|v| 1.0 / v)
                .collect(),
            grad: vec![0.0; target.dim()],
        }
    }

    fn drift(&self, q: &mut [f64], p: &[f64], t: f64) {
        for ((qi, pi), w) in q.iter_mut().zip(p).zip(&self.inv_var) {
            *qi += t * pi * w;
        }
    }

    fn kick(&mut self, q: &[f64], p: &mut [f64], t: f64) -> Result<(), EvalError> {
        self.target.gradient(q, &mut self.grad)?;
        if let Some(i) = self.grad.iter().position(|g| !g.is_finite()) {
            return Err(EvalError::NonFinite {
                quantity: "gradient",
                index: Some(i),
            });
        }
        for (pi, g) in p.iter_mut().zip(&self.grad) {
            *pi -= t * g;
        }
        Ok(())
    }

    fn step(
        &mut self,
        scheme: &Scheme,
        h: f64,
        q: &mut [f64],
        p: &mut [f64],
    ) -> Result<(), EvalError> {
        match scheme {
            Scheme::StormerVerlet => {
                self.kick(q, p, 0.5 * h)?;
                self.drift(q, p, h);
                self.kick(q, p, 0.5 * h)
            }
            Scheme::SplitFamily { b } => {
                self.kick(q, p, b * h)?;
                self.drift(q, p, 0.5 * h);
                self.kick(q, p, (1.0 - 2.0 * b) * h)?;
                self.drift(q, p, 0.5 * h);
                self.kick(q, p, b * h)
            }
            Scheme::ScaledSplitFamily { b, sigma_scale } => {
                scaled_step(q, p, *b, h, sigma_scale);
                Ok(())
            }
        }
    }
}

fn scaled_step(q: &mut [f64], p: &mut [f64], b: f64, h: f64, sigma: &[f64]) {
    let (outer, inner) = (b * h, (1.0 - 2.0 * b) * h);
    for ((qj, pj), s) in q.iter_mut().zip(p.iter_mut()).zip(sigma) {
        *pj -= outer * s * *qj;
        *qj += 0.5 * h * *pj / s;
        *pj -= inner * s * *qj;
        *qj += 0.5 * h * *pj / s;
        *pj -= outer * s * *qj;
    }
}

fn check_dim(target: &dyn TargetModel, state: &PhasePoint) -> Result<()> {
    if state.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            found: state.dim(),
        });
    }
    Ok(())
}

fn single_step(
    target: &dyn TargetModel,
    state: &PhasePoint,
    scheme: Scheme,
    h: f64,
) -> Result<PhasePoint> {
    let spec = IntegratorSpec {
        scheme,
        h,
        n_steps: 1,
    };
    spec.validate(target)?;
    check_dim(target, state)?;
    let (mut q, mut p) = state.clone().into_parts();
    Stepper::new(target).step(&spec.scheme, h, &mut q, &mut p)?;
    Ok(PhasePoint::from_parts(q, p))
}

/// One velocity Störmer-Verlet step.
pub fn stormer_verlet_step(
    target: &dyn TargetModel,
    state: &PhasePoint,
    h: f64,
) -> Result<PhasePoint> {
    single_step(target, state, Scheme::StormerVerlet, h)
}

/// One step of `Ψ_h^(b)`.
pub fn split_family_step(
    target: &dyn TargetModel,
    state: &PhasePoint,
    b: f64,
    h: f64,
) -> Result<PhasePoint> {
    single_step(target, state, Scheme::SplitFamily { b }, h)
}

/// One step of the scaled family at `h = h_b(b)`; `target` must be a
/// diagonal Gaussian.
pub fn scaled_split_family_step(
    target: &dyn TargetModel,
    state: &PhasePoint,
    b: f64,
    sigma_scale: &[f64],
) -> Result<PhasePoint> {
    let h = step_size_hb(b)?;
    single_step(
        target,
        state,
        Scheme::ScaledSplitFamily {
            b,
            sigma_scale: sigma_scale.to_vec(),
        },
        h,
    )
}

/// Applies the selected one-step map `N` times from `start`.
pub fn integrate(
    target: &dyn TargetModel,
    spec: &IntegratorSpec,
    start: &PhasePoint,
) -> Result<TrajectoryResult> {
    spec.validate(target)?;
    check_dim(target, start)?;
    let h0 = hamiltonian(target, start)?.total;
    let (mut q, mut p) = (start.q().to_vec(), start.p().to_vec());
    let mut stepper = Stepper::new(target);
    for _ in 0..spec.n_steps {
        stepper.step(&spec.scheme, spec.h, &mut q, &mut p)?;
    }
    let end_state = PhasePoint::from_parts(q, p);
    let h1 = hamiltonian(target, &end_state)?.total;
    if !h1.is_finite() {
        return Err(EvalError::NonFinite {
            quantity: "hamiltonian",
            index: None,
        }
        .into());
    }
    Ok(TrajectoryResult {
        end_state,
        delta_h: h1 - h0,
        n_gradient_evals: spec.n_steps * spec.scheme.gradient_evals_per_step(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{family_coefficients, sv_coefficients};
    use crate::targets::{bivariate_corr, neal_multivariate};
    use crate::types::DiagonalMetric;

    struct Free(DiagonalMetric);

    impl TargetModel for Free {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn potential(&self, _: &[f64]) -> Result<f64, EvalError> {
            Ok(0.0)
        }
        fn gradient(&self, _: &[f64], g: &mut [f64]) -> Result<(), EvalError> {
            g.fill(0.0);
            Ok(())
        }
        fn kinetic(&self) -> &DiagonalMetric {
            &self.0
        }
    }

    fn unit_oscillator() -> GaussianDiagonalTarget {
        GaussianDiagonalTarget::new(vec![1.0], DiagonalMetric::identity(1)).unwrap()
    }

    fn pt(q: &[f64], p: &[f64]) -> PhasePoint {
        PhasePoint::new(q.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn free_flight() {
        let t = Free(DiagonalMetric::new(vec![2.0, 0.5]).unwrap());
        let s = pt(&[1.0, -1.0], &[0.4, 0.3]);
        let expected = [1.0 + 0.1 * 0.4 / 2.0, -1.0 + 0.1 * 0.3 / 0.5];
        for out in [
            stormer_verlet_step(&t, &s, 0.1).unwrap(),
            split_family_step(&t, &s, 0.25, 0.1).unwrap(),
        ] {
            assert!((out.q()[0] - expected[0]).abs() < 1e-15);
            assert!((out.q()[1] - expected[1]).abs() < 1e-15);
            assert_eq!(out.p(), s.p());
        }
    }

    #[test]
    fn sv_oscillator_matches_linear_map() {
        let out = stormer_verlet_step(&unit_oscillator(), &pt(&[1.0], &[0.0]), 0.1).unwrap();
        let m = sv_coefficients(0.1, 1.0).unwrap().matrix();
        assert!((out.q()[0] - m[0][0]).abs() < 1e-15);
        assert!((out.p()[0] - m[1][0]).abs() < 1e-15);
        assert!((out.q()[0] - 0.995).abs() < 1e-15);
        assert!((out.p()[0] + 0.09975).abs() < 1e-15);
    }

    #[test]
    fn family_oscillator_matches_linear_map() {
        for (b, h, alpha, beta) in [
            (0.2, 0.8, 1.0, 1.0),
            (0.3, 1.4, 0.5, 2.0),
            (-0.1, 0.3, 2.0, 0.7),
        ] {
            let t = GaussianDiagonalTarget::new(
                vec![alpha],
                DiagonalMetric::new(vec![beta * beta]).unwrap(),
            )
            .unwrap();
            let s = pt(&[0.7], &[-0.4]);
            let out = split_family_step(&t, &s, b, h).unwrap();
            let m = family_coefficients(b, h / (alpha * beta), beta / alpha)
                .unwrap()
                .matrix();
            let q = m[0][0] * 0.7 + m[0][1] * -0.4;
            let p = m[1][0] * 0.7 + m[1][1] * -0.4;
            assert!((out.q()[0] - q).abs() < 1e-12 && (out.p()[0] - p).abs() < 1e-12);
        }
    }

    #[test]
    fn family_at_hb_preserves_energy() {
        let t = unit_oscillator();
        let s = pt(&[1.0], &[0.0]);
        let out = split_family_step(&t, &s, 0.25, step_size_hb(0.25).unwrap()).unwrap();
        let d = hamiltonian(&t, &out).unwrap().total - hamiltonian(&t, &s).unwrap().total;
        assert!(d.abs() <= 1e-13);
    }

    #[test]
    fn reversibility() {
        let t = bivariate_corr(0.7).unwrap();
        let s = pt(&[0.3, -1.2], &[0.8, 0.1]);
        for scheme in [Scheme::StormerVerlet, Scheme::SplitFamily { b: 0.21 }] {
            let spec = IntegratorSpec {
                scheme,
                h: 0.3,
                n_steps: 7,
            };
            let fwd = integrate(&t, &spec, &s).unwrap().end_state.flip_momentum();
            let back = integrate(&t, &spec, &fwd)
                .unwrap()
                .end_state
                .flip_momentum();
            for (a, b) in back
                .q()
                .iter()
                .chain(back.p())
                .zip(s.q().iter().chain(s.p()))
            {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scaled_family_preserves_energy() {
        let t = GaussianDiagonalTarget::new(vec![1.0, 0.25], DiagonalMetric::identity(2)).unwrap();
        let spec = IntegratorSpec::scaled_for(&t, 0.2008, 100).unwrap();
        let r = integrate(&t, &spec, &pt(&[0.5, -0.1], &[1.3, 0.4])).unwrap();
        assert!(r.delta_h.abs() <= 1e-12, "{}", r.delta_h);
        assert_eq!(r.n_gradient_evals, 300);
    }

    #[test]
    fn scaled_family_equals_family_on_unit_oscillator() {
        let t = unit_oscillator();
        let b = 0.22;
        let h = step_size_hb(b).unwrap();
        let mut a = pt(&[0.9], &[-0.3]);
        let mut c = a.clone();
        for _ in 0..50 {
            a = scaled_split_family_step(&t, &a, b, &[1.0]).unwrap();
            c = split_family_step(&t, &c, b, h).unwrap();
            assert!((a.q()[0] - c.q()[0]).abs() < 1e-12 && (a.p()[0] - c.p()[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn scaled_family_is_a_rotation() {
        let t = unit_oscillator();
        let b = 0.2008;
        let theta = family_coefficients(b, step_size_hb(b).unwrap(), 1.0)
            .unwrap()
            .p_h
            .acos();
        let n = 37;
        let spec = IntegratorSpec::scaled_split_family(b, vec![1.0], n).unwrap();
        let r = integrate(&t, &spec, &pt(&[1.0], &[0.5])).unwrap();
        let phi = n as f64 * theta;
        // Clockwise rotation in the (q, p) plane.
        let q = phi.cos() * 1.0 + phi.sin() * 0.5;
        let p = -phi.sin() * 1.0 + phi.cos() * 0.5;
        assert!((r.end_state.q()[0] - q).abs() < 1e-10 && (r.end_state.p()[0] - p).abs() < 1e-10);
    }

    #[test]
    fn scaled_family_needs_gaussian_target() {
        let t = Free(DiagonalMetric::identity(1));
        assert!(matches!(
            scaled_split_family_step(&t, &pt(&[0.0], &[1.0]), 0.22, &[1.0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn spec_validation() {
        assert!(IntegratorSpec::stormer_verlet(0.1, 0).is_err());
        assert!(IntegratorSpec::stormer_verlet(-0.1, 1).is_err());
        assert!(matches!(
            IntegratorSpec::split_family(0.5, 0.1, 1),
            Err(Error::DegenerateFamily(_))
        ));
        assert!(IntegratorSpec::scaled_split_family(0.3, vec![1.0], 1).is_err());
        assert!(IntegratorSpec::scaled_split_family(0.2, vec![0.0], 1).is_err());
    }

    #[test]
    fn sv_is_not_energy_preserving() {
        let t = bivariate_corr(0.95).unwrap();
        let spec = IntegratorSpec::stormer_verlet(0.005, 1000).unwrap();
        let r = integrate(&t, &spec, &pt(&[1.0, 0.8], &[0.3, -0.9])).unwrap();
        assert!(r.delta_h.abs() > 1e-14 && r.delta_h.abs() < 1e-3);
        assert_eq!(r.n_gradient_evals, 2000);
    }

    #[test]
    fn decorrelated_bivariate_is_exact() {
        let t = bivariate_corr(0.95).unwrap();
        let dec = t.decorrelated();
        let spec = IntegratorSpec::scaled_for(dec, 0.2008, 4).unwrap();
        let start = pt(&t.to_decorrelated(&[1.0, 0.8]), &[0.3, -0.9]);
        assert!(integrate(dec, &spec, &start).unwrap().delta_h.abs() <= 1e-11);
    }

    #[test]
    fn second_order_convergence() {
        let t = unit_oscillator();
        let t_star = 1.0;
        for scheme in [Scheme::StormerVerlet, Scheme::SplitFamily { b: 0.2 }] {
            let mut pts = Vec::new();
            for h in [0.2, 0.1, 0.05, 0.025] {
                let n = (t_star / h) as usize;
                let spec = IntegratorSpec {
                    scheme: scheme.clone(),
                    h,
                    n_steps: n,
                };
                let r = integrate(&t, &spec, &pt(&[1.0], &[0.0])).unwrap();
                let err = ((r.end_state.q()[0] - t_star.cos()).powi(2)
                    + (r.end_state.p()[0] + t_star.sin()).powi(2))
                .sqrt();
                pts.push((h.ln(), err.ln()));
            }
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / 4.0;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / 4.0;
            let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
                / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
            assert!(
                (slope - 2.0).abs() <= 0.2,
                "{} slope {slope}",
                scheme.name()
            );
        }
    }

    #[test]
    fn start_state_is_not_mutated() {
        let t = neal_multivariate(3).unwrap();
        let s = pt(&[0.1, 0.2, 0.3], &[1.0, 1.0, 1.0]);
        let copy = s.clone();
        integrate(&t, &IntegratorSpec::stormer_verlet(0.01, 5).unwrap(), &s).unwrap();
        assert_eq!(s, copy);
    }
}
