//! HMC drivers: fixed-integrator HMC and adaptive-`b` HMC.
//!
//! Each iteration draws `p ~ N(0, D_β)`, draws a path length `T*`
//! uniformly in `[base(1 - jitter), base(1 + jitter)]`, integrates
//! `N = max(1, round(T*/h))` steps and accepts iff `α > u`,
//! `α = min(1, exp(H₀ - H₁))`, `u ~ U(0, 1)`. A trajectory whose
//! evaluation fails counts as a rejection.
//!
//! The adaptive driver sets `b = b_min + factor`, `h = h_b(b)` and multiplies
//! `factor` by `red` after each rejection.

use crate::error::{Error, Result};
use crate::integrators::{integrate, IntegratorSpec, Scheme};
use crate::linear::{step_size_hb, B_MAX, B_MIN};
use crate::rng::RngState;
use crate::types::{draw_momentum, PhasePoint, TargetModel};

/// Redraws of `T*` allowed when a trajectory returns exactly to its start.
const MAX_PATH_REDRAWS: usize = 64;

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Initializer {
    #[default]
    Zero,
    /// Exact draw from the target; fails for targets without one.
    TargetDraw,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmcConfig {
    /// Total iterations `L`, burn-in included.
    pub n_samples: usize,
    pub burn_in: usize,
    pub t_star_base: f64,
    /// Half-width of the uniform `T*` window as a fraction of the base.
    pub t_star_jitter: f64,
    pub init: Initializer,
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_star_base.is_finite() && self.t_star_base > 0.0) {
            return Err(Error::Domain {
                what: "t_star_base",
                value: self.t_star_base,
                interval: "(0, inf)".into(),
            });
        }
        if !(0.0..1.0).contains(&self.t_star_jitter) {
            return Err(Error::Domain {
                what: "t_star_jitter",
                value: self.t_star_jitter,
                interval: "[0, 1)".into(),
            });
        }
        if self.n_samples > 0 && self.burn_in >= self.n_samples {
            return Err(Error::Contract(format!(
                "burn_in ({}) must be smaller than n_samples ({})",
                self.burn_in, self.n_samples
            )));
        }
        Ok(())
    }

    fn draw_t_star(&self, rng: &mut RngState) -> f64 {
        let w = self.t_star_jitter * self.t_star_base;
        rng.uniform_in(self.t_star_base - w, self.t_star_base + w)
    }
}

/// `N = max(1, round(T*/h))` and the realized path length `N h`.
pub fn choose_steps(t_star: f64, h: f64) -> Result<(usize, f64)> {
    for (what, v) in [("t_star", t_star), ("h", h)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain {
                what,
                value: v,
                interval: "(0, inf)".into(),
            });
        }
    }
    let n = ((t_star / h).round() as usize).max(1);
    Ok((n, n as f64 * h))
}

/// State of the adaptive-`b` rule.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveState {
    b_init: f64,
    red: f64,
    factor: f64,
    reset_factor_each_iter: bool,
    current_b: f64,
    current_h: f64,
    saturated: bool,
}

impl AdaptiveState {
    pub const DEFAULT_RED: f64 = 0.75;

    /// `b_init` in `(b_min, 1/4]`, `red` in `(0, 1)`.
    ///
    /// With `reset_factor_each_iter` the factor returns to `b_init - b_min`
    /// at the start of every iteration, so a reduction only lasts until the
    /// next iteration; by default reductions accumulate.
    pub fn new(b_init: f64, red: f64, reset_factor_each_iter: bool) -> Result<Self> {
        let h = step_size_hb(b_init)?;
        if !(red > 0.0 && red < 1.0) {
            return Err(Error::Domain {
                what: "red",
                value: red,
                interval: "(0, 1)".into(),
            });
        }
        Ok(Self {
            b_init,
            red,
            factor: b_init - B_MIN,
            reset_factor_each_iter,
            current_b: b_init,
            current_h: h,
            saturated: false,
        })
    }

    pub fn b_init(&self) -> f64 {
        self.b_init
    }

    pub fn b_min(&self) -> f64 {
        B_MIN
    }

    pub fn b_max(&self) -> f64 {
        B_MAX
    }

    pub fn red(&self) -> f64 {
        self.red
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn current_b(&self) -> f64 {
        self.current_b
    }

    pub fn current_h(&self) -> f64 {
        self.current_h
    }

    pub fn reset_factor_each_iter(&self) -> bool {
        self.reset_factor_each_iter
    }

    /// True once a further reduction would make `b` indistinguishable from
    /// `b_min` in floating point; `b` is then held fixed.
    pub fn saturated(&self) -> bool {
        self.saturated
    }

    fn set_factor(&mut self, factor: f64) -> bool {
        let b = B_MIN + factor;
        if b == self.current_b {
            return false;
        }
        match step_size_hb(b) {
            Ok(h) if h > 0.0 => {
                self.factor = factor;
                self.current_b = b;
                self.current_h = h;
                true
            }
            _ => {
                self.saturated = true;
                false
            }
        }
    }

    fn begin_iteration(&mut self) -> bool {
        self.reset_factor_each_iter && self.set_factor(self.b_init - B_MIN)
    }

    /// Applies `factor ← red · factor`; returns whether `b` changed.
    fn on_rejection(&mut self) -> bool {
        if self.saturated {
            return false;
        }
        self.set_factor(self.red * self.factor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptationEvent {
    /// Iteration index (0-based) from which `(b, h_b)` apply.
    pub iteration: usize,
    pub b: f64,
    pub h_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub dim: usize,
    pub burn_in: usize,
    pub initial: Vec<f64>,
    /// Row-major `L × d`; row `i` is the state after iteration `i`.
    pub samples: Vec<f64>,
    /// `H(end) - H(start)` per proposal; NaN where evaluation failed.
    pub delta_h: Vec<f64>,
    pub accepted: Vec<bool>,
    /// `b` used per iteration; `None` for Störmer-Verlet.
    pub b: Vec<Option<f64>>,
    pub h: Vec<f64>,
    pub n_steps: Vec<usize>,
    pub t_star: Vec<f64>,
    pub adaptation_trace: Vec<AdaptationEvent>,
    pub eval_errors: usize,
    pub n_gradient_evals: usize,
    pub seed: u64,
    pub stream: u64,
}

impl ChainOutput {
    fn new(dim: usize, burn_in: usize, initial: Vec<f64>, rng: &RngState, capacity: usize) -> Self {
        Self {
            dim,
            burn_in,
            initial,
            samples: Vec::with_capacity(capacity * dim),
            delta_h: Vec::with_capacity(capacity),
            accepted: Vec::with_capacity(capacity),
            b: Vec::with_capacity(capacity),
            h: Vec::with_capacity(capacity),
            n_steps: Vec::with_capacity(capacity),
            t_star: Vec::with_capacity(capacity),
            adaptation_trace: Vec::new(),
            eval_errors: 0,
            n_gradient_evals: 0,
            seed: rng.seed(),
            stream: rng.stream(),
        }
    }

    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    /// Post-burn-in rows.
    pub fn post_burn_in(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks(self.dim).skip(self.burn_in)
    }

    /// Post-burn-in trace of coordinate `j`.
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.post_burn_in().map(|row| row[j]).collect()
    }
}

fn initial_position(
    target: &dyn TargetModel,
    init: &Initializer,
    rng: &mut RngState,
) -> Result<Vec<f64>> {
    let d = target.dim();
    let q = match init {
        Initializer::Zero => vec![0.0; d],
        Initializer::TargetDraw => target.exact_draw(rng).ok_or_else(|| {
            Error::Contract("this target has no exact sampler; choose another initializer".into())
        })?,
        Initializer::Given(q) => {
            if q.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: q.len(),
                });
            }
            if q.iter().any(|v| !v.is_finite()) {
                return Err(Error::Contract("initial position is not finite".into()));
            }
            q.clone()
        }
    };
    Ok(q)
}

struct Proposal {
    end: Option<Vec<f64>>,
    delta_h: f64,
    t_star: f64,
    n_steps: usize,
    gradient_evals: usize,
}

/// One proposal with the path-length redraw loop: `T*` is drawn again
/// while the trajectory ends exactly where it started.
fn propose(
    target: &dyn TargetModel,
    cfg: &HmcConfig,
    scheme: &Scheme,
    h: f64,
    q: &[f64],
    rng: &mut RngState,
) -> Result<Proposal> {
    let p = draw_momentum(target.kinetic(), rng);
    let start = PhasePoint::from_parts(q.to_vec(), p);
    let mut gradient_evals = 0;
    let mut redraws = 0;
    loop {
        let t_star = cfg.draw_t_star(rng);
        let (n_steps, _) = choose_steps(t_star, h)?;
        let spec = IntegratorSpec {
            scheme: scheme.clone(),
            h,
            n_steps,
        };
        match integrate(target, &spec, &start) {
            Ok(traj) => {
                gradient_evals += traj.n_gradient_evals;
                redraws += 1;
                if traj.end_state == start && redraws < MAX_PATH_REDRAWS {
                    continue;
                }
                let delta_h = traj.delta_h;
                return Ok(Proposal {
                    end: Some(traj.end_state.into_parts().0),
                    delta_h,
                    t_star,
                    n_steps,
                    gradient_evals,
                });
            }
            Err(Error::Evaluation(_)) => {
                return Ok(Proposal {
                    end: None,
                    delta_h: f64::NAN,
                    t_star,
                    n_steps,
                    gradient_evals,
                })
            }
            Err(e) => return Err(e),
        }
    }
}

/// Metropolis step; always consumes one uniform.
fn metropolis(delta_h: f64, rng: &mut RngState) -> bool {
    let u = rng.uniform();
    if !delta_h.is_finite() {
        return false;
    }
    let alpha = (-delta_h).exp().min(1.0);
    alpha > u
}

fn run_chain(
    target: &dyn TargetModel,
    cfg: &HmcConfig,
    rng: &mut RngState,
    mut scheme_for: impl FnMut(usize, &mut ChainOutput) -> Result<(Scheme, f64)>,
    mut on_reject: impl FnMut(usize, &mut ChainOutput),
) -> Result<ChainOutput> {
    cfg.validate()?;
    let mut q = initial_position(target, &cfg.init, rng)?;
    let mut out = ChainOutput::new(target.dim(), cfg.burn_in, q.clone(), rng, cfg.n_samples);
    for i in 0..cfg.n_samples {
        let (scheme, h) = scheme_for(i, &mut out)?;
        let prop = propose(target, cfg, &scheme, h, &q, rng)?;
        let accept = metropolis(prop.delta_h, rng);
        if prop.end.is_none() {
            out.eval_errors += 1;
        }
        if accept {
            q = prop.end.expect("accepted proposals have an end state");
        }
        out.samples.extend_from_slice(&q);
        out.delta_h.push(prop.delta_h);
        out.accepted.push(accept);
        out.b.push(scheme.b());
        out.h.push(h);
        out.n_steps.push(prop.n_steps);
        out.t_star.push(prop.t_star);
        out.n_gradient_evals += prop.gradient_evals;
        if !accept {
            on_reject(i, &mut out);
        }
    }
    Ok(out)
}

/// Practical HMC with a fixed integrator. `spec.n_steps` is ignored: `N` is
/// chosen per iteration from the drawn `T*` and `spec.h`.
pub fn hmc_run(
    target: &dyn TargetModel,
    cfg: &HmcConfig,
    spec: &IntegratorSpec,
    rng: &mut RngState,
) -> Result<ChainOutput> {
    spec.validate(target)?;
    run_chain(
        target,
        cfg,
        rng,
        |_, _| Ok((spec.scheme.clone(), spec.h)),
        |_, _| {},
    )
}

/// Adaptive-`b` HMC with the splitting family. Requires `T* ≥ 3`.
///
/// Every change of `(b, h_b)` is appended to the adaptation trace; the first
/// entry is the starting value at iteration 0.
pub fn hmc_run_adaptive(
    target: &dyn TargetModel,
    cfg: &HmcConfig,
    adapt: &mut AdaptiveState,
    rng: &mut RngState,
) -> Result<ChainOutput> {
    if cfg.t_star_base < 3.0 {
        return Err(Error::Contract(format!(
            "adaptive HMC needs t_star_base >= 3, got {}",
            cfg.t_star_base
        )));
    }
    let state = std::cell::RefCell::new(adapt);
    let out = run_chain(
        target,
        cfg,
        rng,
        |i, out| {
            let mut a = state.borrow_mut();
            if (i == 0 || a.begin_iteration())
                && out.adaptation_trace.last().map(|e| e.b) != Some(a.current_b)
            {
                out.adaptation_trace.push(AdaptationEvent {
                    iteration: i,
                    b: a.current_b,
                    h_b: a.current_h,
                });
            }
            Ok((Scheme::SplitFamily { b: a.current_b }, a.current_h))
        },
        |i, out| {
            let mut a = state.borrow_mut();
            if a.on_rejection() {
                out.adaptation_trace.push(AdaptationEvent {
                    iteration: i + 1,
                    b: a.current_b,
                    h_b: a.current_h,
                });
            }
        },
    )?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::EvalError;
    use crate::targets::{neal_multivariate, GaussianDiagonalTarget};
    use crate::types::DiagonalMetric;

    fn cfg(n: usize, burn: usize, t: f64, jitter: f64) -> HmcConfig {
        HmcConfig {
            n_samples: n,
            burn_in: burn,
            t_star_base: t,
            t_star_jitter: jitter,
            init: Initializer::Zero,
        }
    }

    #[test]
    fn choose_steps_examples() {
        assert_eq!(choose_steps(5.0, 0.005).unwrap().0, 1000);
        assert_eq!(choose_steps(3.0, 2.8284).unwrap().0, 1);
        assert_eq!(choose_steps(1.0, 0.3).unwrap().0, 3);
        assert_eq!(choose_steps(0.1, 2.0).unwrap().0, 1);
        assert!((choose_steps(1.0, 0.3).unwrap().1 - 0.9).abs() < 1e-15);
        assert!(choose_steps(0.0, 1.0).is_err());
    }

    #[test]
    fn exact_integrator_accepts_everything() {
        let t = neal_multivariate(8).unwrap();
        let spec = IntegratorSpec::scaled_for(&t, 0.2008, 1).unwrap();
        let mut c = cfg(300, 50, 5.0, 0.4);
        c.init = Initializer::TargetDraw;
        let out = hmc_run(&t, &c, &spec, &mut RngState::new(1)).unwrap();
        assert!(out.accepted.iter().all(|&a| a));
        assert!(out.delta_h.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn empty_chain() {
        let t = neal_multivariate(2).unwrap();
        let spec = IntegratorSpec::stormer_verlet(0.1, 1).unwrap();
        let mut rng = RngState::new(3);
        let out = hmc_run(&t, &cfg(0, 0, 1.0, 0.0), &spec, &mut rng).unwrap();
        assert!(out.is_empty());
        assert_eq!(rng.word_position(), 0);
    }

    #[test]
    fn rejected_rows_repeat() {
        let t = neal_multivariate(4).unwrap();
        let spec = IntegratorSpec::stormer_verlet(0.45, 1).unwrap();
        let out = hmc_run(&t, &cfg(500, 0, 2.0, 0.2), &spec, &mut RngState::new(8)).unwrap();
        assert!(out.accepted.iter().any(|a| !a));
        for i in 0..out.len() {
            if !out.accepted[i] {
                let prev = if i == 0 {
                    &out.initial[..]
                } else {
                    out.sample(i - 1)
                };
                assert_eq!(out.sample(i), prev);
            }
        }
    }

    #[test]
    fn deterministic() {
        let t = neal_multivariate(3).unwrap();
        let spec = IntegratorSpec::split_family(0.21, 0.2, 1).unwrap();
        let c = cfg(200, 20, 1.5, 0.3);
        let a = hmc_run(&t, &c, &spec, &mut RngState::new(5)).unwrap();
        let b = hmc_run(&t, &c, &spec, &mut RngState::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn detailed_balance_smoke() {
        let t = GaussianDiagonalTarget::new(vec![1.0], DiagonalMetric::identity(1)).unwrap();
        let spec = IntegratorSpec::stormer_verlet(0.5, 1).unwrap();
        let out = hmc_run(&t, &cfg(20_000, 0, 2.0, 0.2), &spec, &mut RngState::new(12)).unwrap();
        let x = out.coordinate(0);
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let ess = crate::diagnostics::ess(&x).unwrap();
        assert!(mean.abs() <= 3.0 * (var / ess).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() <= 0.05, "var {var}");
    }

    /// Target whose every trajectory fails, forcing rejections.
    struct Failing(DiagonalMetric);

    impl TargetModel for Failing {
        fn dim(&self) -> usize {
            1
        }
        fn potential(&self, _: &[f64]) -> Result<f64, EvalError> {
            Ok(0.0)
        }
        fn gradient(&self, _: &[f64], _: &mut [f64]) -> Result<(), EvalError> {
            Err(EvalError::NonFinite {
                quantity: "gradient",
                index: Some(0),
            })
        }
        fn kinetic(&self) -> &DiagonalMetric {
            &self.0
        }
    }

    #[test]
    fn forced_rejections_decay_geometrically() {
        let t = Failing(DiagonalMetric::identity(1));
        let mut a = AdaptiveState::new(0.25, 0.75, false).unwrap();
        let f0 = a.factor();
        let out =
            hmc_run_adaptive(&t, &cfg(6, 0, 3.0, 0.0), &mut a, &mut RngState::new(2)).unwrap();
        assert_eq!(out.eval_errors, 6);
        assert!(out.accepted.iter().all(|a| !a));
        for (k, ev) in out.adaptation_trace.iter().enumerate() {
            let b = B_MIN + 0.75f64.powi(k as i32) * f0;
            assert!((ev.b - b).abs() < 1e-15);
            assert_eq!(ev.h_b, step_size_hb(ev.b).unwrap());
        }
        assert_eq!(out.adaptation_trace.len(), 7);
        assert!((a.factor() - 0.75f64.powi(6) * f0).abs() < 1e-16);
    }

    #[test]
    fn reset_mode_restores_b_init() {
        let t = Failing(DiagonalMetric::identity(1));
        let mut a = AdaptiveState::new(0.22, 0.75, true).unwrap();
        let out =
            hmc_run_adaptive(&t, &cfg(4, 0, 3.0, 0.0), &mut a, &mut RngState::new(2)).unwrap();
        assert!(out.b.iter().all(|b| *b == Some(0.22)));
    }

    #[test]
    fn no_rejection_keeps_b() {
        let t = neal_multivariate(1).unwrap();
        let mut a = AdaptiveState::new(B_MAX, 0.75, false).unwrap();
        let out =
            hmc_run_adaptive(&t, &cfg(100, 0, 3.0, 0.2), &mut a, &mut RngState::new(4)).unwrap();
        assert!(out.accepted.iter().all(|&x| x));
        assert_eq!(out.adaptation_trace.len(), 1);
        assert_eq!(a.current_b(), B_MAX);
    }

    #[test]
    fn adaptive_monotone_and_bookkept() {
        let t = neal_multivariate(10).unwrap();
        let mut a = AdaptiveState::new(B_MAX, 0.75, false).unwrap();
        let out =
            hmc_run_adaptive(&t, &cfg(400, 0, 3.0, 0.2), &mut a, &mut RngState::new(6)).unwrap();
        let rejections = out.accepted.iter().filter(|x| !**x).count();
        assert!(rejections > 0);
        assert_eq!(out.adaptation_trace.len(), rejections + 1);
        let bs: Vec<f64> = out.b.iter().map(|b| b.unwrap()).collect();
        assert!(bs.windows(2).all(|w| w[1] <= w[0]));
        assert!(bs.iter().all(|&b| b > B_MIN));
    }

    #[test]
    fn adaptive_requires_long_paths() {
        let t = neal_multivariate(1).unwrap();
        let mut a = AdaptiveState::new(0.22, 0.75, false).unwrap();
        assert!(hmc_run_adaptive(&t, &cfg(1, 0, 2.0, 0.0), &mut a, &mut RngState::new(1)).is_err());
        assert!(AdaptiveState::new(0.3, 0.75, false).is_err());
        assert!(AdaptiveState::new(0.22, 1.0, false).is_err());
    }
}
