//! C ABI for `splithmc`.
//!
//! Every function returns a [`ShmcStatus`]; results come back through out
//! pointers. Targets and chains are opaque heap handles released with their
//! `_free` function. On failure, `shmc_last_error` returns a message for the
//! calling thread that stays valid until that thread's next call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use splithmc::diagnostics::summarize;
use splithmc::linear::{
    b_presets, family_coefficients, stability_bound, step_size_hb, sv_coefficients,
    LinearMapCoefficients, PresetName,
};
use splithmc::targets::{
    bivariate_corr, load_logistic_csv, neal_multivariate, synthesize_cox, CoxModel,
    GaussianCorrelatedTarget, GaussianDiagonalTarget, LogisticCsvOptions, LogisticModel,
    PerturbedGaussianTarget,
};
use splithmc::{
    hmc_run, hmc_run_adaptive, integrate, AdaptiveState, ChainOutput, DiagonalMetric, Error,
    HmcConfig, Initializer, IntegratorSpec, PhasePoint, RngState, TargetModel,
};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShmcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    DimensionMismatch = 4,
    Evaluation = 5,
    Config = 6,
    Io = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ShmcStatus {
    match e {
        Error::Contract(_) | Error::DegenerateFamily { .. } => ShmcStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => ShmcStatus::DimensionMismatch,
        Error::Domain { .. } => ShmcStatus::Domain,
        Error::Evaluation(_) => ShmcStatus::Evaluation,
        Error::Config { .. } | Error::Parse { .. } => ShmcStatus::Config,
        Error::Io { .. } => ShmcStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status and a message.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ShmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ShmcStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            ShmcStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            ShmcStatus::Panic
        }
    }
}

fn out_ref<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller passes either null or a valid, writable pointer.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

fn in_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes either null or a valid pointer.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: the caller guarantees `len` readable values at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn slice_mut<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: the caller guarantees `len` writable values at `p`.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

/// Message for the last failed call on this thread; empty after success.
#[no_mangle]
pub extern "C" fn shmc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn shmc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Coefficients of the one-step linear map on a Gaussian test problem.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ShmcLinearMap {
    pub p_h: f64,
    pub q_h: f64,
    pub e_h: f64,
    pub sigma: f64,
    pub h_sigma: f64,
}

impl From<LinearMapCoefficients> for ShmcLinearMap {
    fn from(c: LinearMapCoefficients) -> Self {
        Self {
            p_h: c.p_h,
            q_h: c.q_h,
            e_h: c.e_h,
            sigma: c.sigma,
            h_sigma: c.h_sigma,
        }
    }
}

/// Energy-nullifying step size `h_b` for `b` in `(b_min, 1/4]`.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_step_size_hb(b: f64, out: *mut f64) -> ShmcStatus {
    guard(|| {
        *out_ref(out, "out")? = step_size_hb(b)?;
        Ok(())
    })
}

/// Upper end of the stability interval of the family at `b`.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_stability_bound(b: f64, out: *mut f64) -> ShmcStatus {
    guard(|| {
        *out_ref(out, "out")? = stability_bound(b)?;
        Ok(())
    })
}

/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_sv_coefficients(
    h_sigma: f64,
    sigma: f64,
    out: *mut ShmcLinearMap,
) -> ShmcStatus {
    guard(|| {
        *out_ref(out, "out")? = sv_coefficients(h_sigma, sigma)?.into();
        Ok(())
    })
}

/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_family_coefficients(
    b: f64,
    h_sigma: f64,
    sigma: f64,
    out: *mut ShmcLinearMap,
) -> ShmcStatus {
    guard(|| {
        *out_ref(out, "out")? = family_coefficients(b, h_sigma, sigma)?.into();
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShmcPreset {
    BMax = 0,
    BBcs = 1,
    BStab = 2,
    BMl = 3,
}

/// Preset `b` and its step size `h_b`.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_preset(preset: ShmcPreset, b: *mut f64, h_b: *mut f64) -> ShmcStatus {
    guard(|| {
        let name = match preset {
            ShmcPreset::BMax => PresetName::BMax,
            ShmcPreset::BBcs => PresetName::BBcs,
            ShmcPreset::BStab => PresetName::BStab,
            ShmcPreset::BMl => PresetName::BMl,
        };
        let p = b_presets()
            .into_iter()
            .find(|p| p.name == name)
            .expect("all presets listed");
        *out_ref(b, "b")? = p.b;
        *out_ref(h_b, "h_b")? = p.h_b;
        Ok(())
    })
}

enum Model {
    Diagonal(GaussianDiagonalTarget),
    Correlated {
        target: GaussianCorrelatedTarget,
        decorrelate: bool,
    },
    Cox(PerturbedGaussianTarget<CoxModel>),
    Logistic(PerturbedGaussianTarget<LogisticModel>),
}

/// Opaque target handle.
pub struct ShmcTarget {
    model: Model,
}

impl ShmcTarget {
    fn model(&self) -> &dyn TargetModel {
        match &self.model {
            Model::Diagonal(t) => t,
            Model::Correlated {
                target,
                decorrelate: true,
            } => target.decorrelated(),
            Model::Correlated {
                target,
                decorrelate: false,
            } => target,
            Model::Cox(t) => t,
            Model::Logistic(t) => t,
        }
    }

    fn gaussian(&self) -> Option<&GaussianDiagonalTarget> {
        match &self.model {
            Model::Diagonal(t) => Some(t),
            Model::Correlated {
                target,
                decorrelate: true,
            } => Some(target.decorrelated()),
            _ => None,
        }
    }
}

fn emit_target(out: *mut *mut ShmcTarget, model: Model) -> Result<(), Failure> {
    let slot = out_ref(out, "out")?;
    *slot = Box::into_raw(Box::new(ShmcTarget { model }));
    Ok(())
}

/// Gaussian with `α_j = 1/j²` and identity momentum metric.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_target_neal(dim: usize, out: *mut *mut ShmcTarget) -> ShmcStatus {
    guard(|| emit_target(out, Model::Diagonal(neal_multivariate(dim)?)))
}

/// Diagonal Gaussian with standard deviations `alphas`; `momentum_variances`
/// may be null for the identity metric.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_target_gaussian_diagonal(
    alphas: *const f64,
    momentum_variances: *const f64,
    dim: usize,
    out: *mut *mut ShmcTarget,
) -> ShmcStatus {
    guard(|| {
        let a = slice(alphas, dim, "alphas")?.to_vec();
        let metric = if momentum_variances.is_null() {
            DiagonalMetric::identity(dim)
        } else {
            DiagonalMetric::new(slice(momentum_variances, dim, "momentum_variances")?.to_vec())?
        };
        emit_target(
            out,
            Model::Diagonal(GaussianDiagonalTarget::new(a, metric)?),
        )
    })
}

/// Bivariate Gaussian with unit variances and correlation `rho`, sampled in
/// eigen-coordinates when `decorrelate` is set.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_target_bivariate(
    rho: f64,
    decorrelate: bool,
    out: *mut *mut ShmcTarget,
) -> ShmcStatus {
    guard(|| {
        let target = bivariate_corr(rho)?;
        emit_target(
            out,
            Model::Correlated {
                target,
                decorrelate,
            },
        )
    })
}

/// Synthetic log-Gaussian Cox process on a `grid_side × grid_side` grid.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_target_cox_synthetic(
    grid_side: usize,
    sigma2: f64,
    beta: f64,
    intensity: f64,
    data_seed: u64,
    out: *mut *mut ShmcTarget,
) -> ShmcStatus {
    guard(|| {
        let model = synthesize_cox(data_seed, grid_side, sigma2, beta, intensity)?;
        emit_target(out, Model::Cox(model.into_target()))
    })
}

/// Bayesian logistic regression from a CSV file (covariates, then a 0/1 label).
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_target_logistic_csv(
    path: *const c_char,
    has_header: bool,
    normalize: bool,
    prior_sigma2: f64,
    out: *mut *mut ShmcTarget,
) -> ShmcStatus {
    guard(|| {
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        // SAFETY: non-null and NUL-terminated by contract.
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| Error::Contract("path is not valid UTF-8".into()))?;
        let model = load_logistic_csv(
            path,
            &LogisticCsvOptions {
                has_header,
                normalize,
                prior_sigma2,
            },
        )?;
        emit_target(out, Model::Logistic(model.into_target()))
    })
}

/// Releases a target; null is ignored.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_target_free(target: *mut ShmcTarget) {
    if !target.is_null() {
        // SAFETY: produced by Box::into_raw in this library and not yet freed.
        drop(unsafe { Box::from_raw(target) });
    }
}

/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_target_dim(target: *const ShmcTarget, out: *mut usize) -> ShmcStatus {
    guard(|| {
        *out_ref(out, "out")? = in_ref(target, "target")?.model().dim();
        Ok(())
    })
}

fn check_dim(target: &ShmcTarget, dim: usize) -> Result<(), Failure> {
    let expected = target.model().dim();
    if dim != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: dim,
        }
        .into());
    }
    Ok(())
}

/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_target_potential(
    target: *const ShmcTarget,
    q: *const f64,
    dim: usize,
    out: *mut f64,
) -> ShmcStatus {
    guard(|| {
        let t = in_ref(target, "target")?;
        check_dim(t, dim)?;
        let q = slice(q, dim, "q")?;
        *out_ref(out, "out")? = t.model().potential(q).map_err(Error::from)?;
        Ok(())
    })
}

/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_target_gradient(
    target: *const ShmcTarget,
    q: *const f64,
    dim: usize,
    grad: *mut f64,
) -> ShmcStatus {
    guard(|| {
        let t = in_ref(target, "target")?;
        check_dim(t, dim)?;
        let q = slice(q, dim, "q")?;
        let g = slice_mut(grad, dim, "grad")?;
        t.model().gradient(q, g).map_err(Error::from)?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShmcScheme {
    StormerVerlet = 0,
    SplitFamily = 1,
    /// Runs at `h_b(b)` with the target's `Σ`; `h` is ignored.
    ScaledSplitFamily = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShmcIntegrator {
    pub scheme: ShmcScheme,
    /// Ignored by `StormerVerlet`.
    pub b: f64,
    pub h: f64,
}

fn build_spec(
    target: &ShmcTarget,
    i: &ShmcIntegrator,
    n_steps: usize,
) -> Result<IntegratorSpec, Failure> {
    let spec = match i.scheme {
        ShmcScheme::StormerVerlet => IntegratorSpec::stormer_verlet(i.h, n_steps)?,
        ShmcScheme::SplitFamily => IntegratorSpec::split_family(i.b, i.h, n_steps)?,
        ShmcScheme::ScaledSplitFamily => {
            let g = target.gaussian().ok_or_else(|| {
                Error::Contract("the scaled family needs a diagonal Gaussian target".into())
            })?;
            IntegratorSpec::scaled_for(g, i.b, n_steps)?
        }
    };
    spec.validate(target.model())?;
    Ok(spec)
}

/// Integrates `n_steps` from `(q, p)`, writing the end state and `ΔH`.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_integrate(
    target: *const ShmcTarget,
    integrator: *const ShmcIntegrator,
    n_steps: usize,
    q: *const f64,
    p: *const f64,
    dim: usize,
    q_out: *mut f64,
    p_out: *mut f64,
    delta_h: *mut f64,
) -> ShmcStatus {
    guard(|| {
        let t = in_ref(target, "target")?;
        check_dim(t, dim)?;
        let spec = build_spec(t, in_ref(integrator, "integrator")?, n_steps)?;
        let start = PhasePoint::new(slice(q, dim, "q")?.to_vec(), slice(p, dim, "p")?.to_vec())?;
        let r = integrate(t.model(), &spec, &start)?;
        slice_mut(q_out, dim, "q_out")?.copy_from_slice(r.end_state.q());
        slice_mut(p_out, dim, "p_out")?.copy_from_slice(r.end_state.p());
        *out_ref(delta_h, "delta_h")? = r.delta_h;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShmcInit {
    Zero = 0,
    TargetDraw = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShmcHmcConfig {
    /// Total iterations, burn-in included.
    pub n_samples: usize,
    pub burn_in: usize,
    pub t_star: f64,
    /// Half-width of the uniform `T*` window as a fraction of `t_star`.
    pub t_star_jitter: f64,
    pub init: ShmcInit,
}

impl From<&ShmcHmcConfig> for HmcConfig {
    fn from(c: &ShmcHmcConfig) -> Self {
        HmcConfig {
            n_samples: c.n_samples,
            burn_in: c.burn_in,
            t_star_base: c.t_star,
            t_star_jitter: c.t_star_jitter,
            init: match c.init {
                ShmcInit::Zero => Initializer::Zero,
                ShmcInit::TargetDraw => Initializer::TargetDraw,
            },
        }
    }
}

/// Opaque chain handle.
pub struct ShmcChain {
    output: ChainOutput,
    accepted: Vec<u8>,
}

fn emit_chain(out: *mut *mut ShmcChain, output: ChainOutput) -> Result<(), Failure> {
    let slot = out_ref(out, "out")?;
    let accepted = output.accepted.iter().map(|&a| u8::from(a)).collect();
    *slot = Box::into_raw(Box::new(ShmcChain { output, accepted }));
    Ok(())
}

/// Practical HMC with a fixed integrator; `N` is drawn per iteration from `T*`.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_run(
    target: *const ShmcTarget,
    config: *const ShmcHmcConfig,
    integrator: *const ShmcIntegrator,
    seed: u64,
    stream: u64,
    out: *mut *mut ShmcChain,
) -> ShmcStatus {
    guard(|| {
        let t = in_ref(target, "target")?;
        let cfg = HmcConfig::from(in_ref(config, "config")?);
        let spec = build_spec(t, in_ref(integrator, "integrator")?, 1)?;
        let mut rng = RngState::with_stream(seed, stream);
        emit_chain(out, hmc_run(t.model(), &cfg, &spec, &mut rng)?)
    })
}

/// Adaptive-`b` HMC starting from `b_init`, shrinking by `red` on rejection.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_run_adaptive(
    target: *const ShmcTarget,
    config: *const ShmcHmcConfig,
    b_init: f64,
    red: f64,
    reset_factor_each_iter: bool,
    seed: u64,
    stream: u64,
    out: *mut *mut ShmcChain,
) -> ShmcStatus {
    guard(|| {
        let t = in_ref(target, "target")?;
        let cfg = HmcConfig::from(in_ref(config, "config")?);
        let mut adapt = AdaptiveState::new(b_init, red, reset_factor_each_iter)?;
        let mut rng = RngState::with_stream(seed, stream);
        emit_chain(
            out,
            hmc_run_adaptive(t.model(), &cfg, &mut adapt, &mut rng)?,
        )
    })
}

/// Releases a chain; null is ignored.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_chain_free(chain: *mut ShmcChain) {
    if !chain.is_null() {
        // SAFETY: produced by Box::into_raw in this library and not yet freed.
        drop(unsafe { Box::from_raw(chain) });
    }
}

/// Number of iterations (rows) and the state dimension.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_chain_shape(
    chain: *const ShmcChain,
    len: *mut usize,
    dim: *mut usize,
) -> ShmcStatus {
    guard(|| {
        let c = in_ref(chain, "chain")?;
        *out_ref(len, "len")? = c.output.len();
        *out_ref(dim, "dim")? = c.output.dim;
        Ok(())
    })
}

/// Row-major `len × dim` samples, valid until the chain is freed.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_chain_samples(chain: *const ShmcChain) -> *const f64 {
    // SAFETY: null or a live handle by contract.
    unsafe { chain.as_ref() }.map_or(ptr::null(), |c| c.output.samples.as_ptr())
}

/// Per-iteration `ΔH` (`NaN` for evaluation failures), `len` values.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_chain_delta_h(chain: *const ShmcChain) -> *const f64 {
    // SAFETY: null or a live handle by contract.
    unsafe { chain.as_ref() }.map_or(ptr::null(), |c| c.output.delta_h.as_ptr())
}

/// Per-iteration acceptance flags (0 or 1), `len` values.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_chain_accepted(chain: *const ShmcChain) -> *const u8 {
    // SAFETY: null or a live handle by contract.
    unsafe { chain.as_ref() }.map_or(ptr::null(), |c| c.accepted.as_ptr())
}

/// Per-iteration step size, `len` values.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_chain_step_size(chain: *const ShmcChain) -> *const f64 {
    // SAFETY: null or a live handle by contract.
    unsafe { chain.as_ref() }.map_or(ptr::null(), |c| c.output.h.as_ptr())
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ShmcSummary {
    pub acceptance_rate: f64,
    pub mean_delta_h: f64,
    pub mean_abs_delta_h: f64,
    pub max_abs_delta_h: f64,
    pub ess_mean: f64,
    /// `ess_mean` divided by the post-burn-in length.
    pub ess_fraction: f64,
    pub mean_h: f64,
    pub ess_per_work: f64,
    pub n_gradient_evals: u64,
    pub eval_errors: u64,
}

/// Diagnostics over the iterations after `burn_in`.
///
/// # Safety
/// Pointers must be null or valid for the stated lengths; handles must
/// come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shmc_chain_summary(
    chain: *const ShmcChain,
    burn_in: usize,
    out: *mut ShmcSummary,
) -> ShmcStatus {
    guard(|| {
        let c = in_ref(chain, "chain")?;
        let s = summarize(&c.output, burn_in)?;
        *out_ref(out, "out")? = ShmcSummary {
            acceptance_rate: s.acceptance_rate,
            mean_delta_h: s.mean_delta_h,
            mean_abs_delta_h: s.mean_abs_delta_h,
            max_abs_delta_h: s.max_abs_delta_h,
            ess_mean: s.ess_mean,
            ess_fraction: s.ess_fraction,
            mean_h: s.mean_h,
            ess_per_work: s.ess_per_work,
            n_gradient_evals: s.n_gradient_evals as u64,
            eval_errors: s.eval_errors as u64,
        };
        Ok(())
    })
}
