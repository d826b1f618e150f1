//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrators::{IntegratorSpec, Scheme};
use crate::linear::{b_presets, step_size_hb, B_MAX};
use crate::sampler::{AdaptiveState, HmcConfig, Initializer};
use crate::targets::{
    bivariate_corr, load_count_grid, load_cox_params, load_logistic_csv, neal_multivariate,
    synthesize_cox, synthesize_logistic, CoxModel, GaussianCorrelatedTarget,
    GaussianDiagonalTarget, LogisticCsvOptions, LogisticModel, PerturbedGaussianTarget,
};
use crate::types::{DiagonalMetric, TargetModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub target: TargetConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<AdaptiveConfig>,
    pub hmc: HmcSection,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetConfig {
    /// `α_j = 1/j²`, identity kinetic metric.
    Neal { dim: usize },
    GaussianDiagonal {
        alphas: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        momentum_variances: Option<Vec<f64>>,
    },
    /// Unit variances with correlation `rho`; sampled in eigen-coordinates
    /// `Q = V X` when `decorrelate` is set.
    Bivariate {
        rho: f64,
        #[serde(default = "default_true")]
        decorrelate: bool,
    },
    /// Count grid CSV plus a JSON parameter file `{sigma2, beta, mu?}`.
    Cox { counts: PathBuf, params: PathBuf },
    CoxSynthetic {
        grid_side: usize,
        sigma2: f64,
        beta: f64,
        /// Expected total number of points.
        intensity: f64,
        data_seed: u64,
    },
    Logistic {
        data: PathBuf,
        #[serde(default)]
        has_header: bool,
        #[serde(default = "default_true")]
        normalize: bool,
        #[serde(default = "default_one")]
        prior_sigma2: f64,
    },
    LogisticSynthetic {
        n: usize,
        covariates: usize,
        data_seed: u64,
        #[serde(default = "default_one")]
        prior_sigma2: f64,
    },
}

fn default_true() -> bool {
    true
}

fn default_one() -> f64 {
    1.0
}

/// A numeric `b` or one of the preset names `b_max`, `b_BCS`, `b_stab`, `b_ML`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BValue {
    Value(f64),
    Preset(String),
}

impl BValue {
    pub fn resolve(&self) -> std::result::Result<f64, String> {
        match self {
            BValue::Value(b) => Ok(*b),
            BValue::Preset(name) => b_presets()
                .into_iter()
                .find(|p| p.name.as_str() == name)
                .map(|p| p.b)
                .ok_or_else(|| {
                    format!("unknown preset {name:?}; expected b_max, b_BCS, b_stab or b_ML")
                }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegratorConfig {
    StormerVerlet {
        h: f64,
    },
    /// `h` defaults to `h_b(b)`.
    SplitFamily {
        b: BValue,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<f64>,
    },
    /// Runs at `h_b(b)` with `Σ` taken from the target.
    ScaledSplitFamily {
        b: BValue,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveConfig {
    #[serde(default = "default_b_init")]
    pub b_init: BValue,
    #[serde(default = "default_red")]
    pub red: f64,
    #[serde(default)]
    pub reset_factor_each_iter: bool,
}

fn default_b_init() -> BValue {
    BValue::Value(B_MAX)
}

fn default_red() -> f64 {
    AdaptiveState::DEFAULT_RED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitConfig {
    /// Exact target draw when available, zero vector otherwise.
    Auto,
    Zero,
    TargetDraw,
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HmcSection {
    pub n_samples: usize,
    #[serde(default)]
    pub burn_in: usize,
    pub t_star: f64,
    #[serde(default)]
    pub t_star_jitter: f64,
    #[serde(default = "default_init")]
    pub init: InitConfig,
}

fn default_init() -> InitConfig {
    InitConfig::Auto
}

fn config_error(pointer: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: pointer.to_string(),
        message: message.into(),
    }
}

/// Parses a configuration, reporting the JSON pointer of the first error.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let mut pointer = String::new();
        for seg in e.path().iter() {
            use serde_path_to_error::Segment;
            match seg {
                Segment::Seq { index } => pointer.push_str(&format!("/{index}")),
                Segment::Map { key } => pointer.push_str(&format!("/{key}")),
                Segment::Enum { variant } => pointer.push_str(&format!("/{variant}")),
                Segment::Unknown => pointer.push_str("/?"),
            }
        }
        if pointer.is_empty() {
            pointer.push('/');
        }
        config_error(&pointer, e.inner().to_string())
    })
}

pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config { path: ptr, message } => Error::Config {
            path: format!("{}#{ptr}", path.display()),
            message,
        },
        other => other,
    })
}

/// A constructed target, in the coordinates it is sampled in.
pub enum BuiltTarget {
    Diagonal(GaussianDiagonalTarget),
    Correlated {
        target: GaussianCorrelatedTarget,
        decorrelate: bool,
    },
    Cox(PerturbedGaussianTarget<CoxModel>),
    Logistic(PerturbedGaussianTarget<LogisticModel>),
}

impl BuiltTarget {
    pub fn model(&self) -> &dyn TargetModel {
        match self {
            BuiltTarget::Diagonal(t) => t,
            BuiltTarget::Correlated {
                target,
                decorrelate: true,
            } => target.decorrelated(),
            BuiltTarget::Correlated {
                target,
                decorrelate: false,
            } => target,
            BuiltTarget::Cox(t) => t,
            BuiltTarget::Logistic(t) => t,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            BuiltTarget::Diagonal(_) => "gaussian_diagonal",
            BuiltTarget::Correlated { .. } => "gaussian_correlated",
            BuiltTarget::Cox(_) => "cox",
            BuiltTarget::Logistic(_) => "logistic",
        }
    }

    pub fn coordinates(&self) -> &'static str {
        match self {
            BuiltTarget::Correlated {
                decorrelate: true, ..
            } => "decorrelated",
            BuiltTarget::Cox(_) | BuiltTarget::Logistic(_) => "whitened",
            _ => "original",
        }
    }

    /// Known marginal standard deviations in the sampled coordinates.
    pub fn reference_sd(&self) -> Option<Vec<f64>> {
        match self {
            BuiltTarget::Diagonal(t) => Some(t.alphas().to_vec()),
            BuiltTarget::Correlated {
                target,
                decorrelate: true,
            } => Some(target.decorrelated().alphas().to_vec()),
            BuiltTarget::Correlated {
                target,
                decorrelate: false,
            } => {
                let s = target.covariance();
                Some((0..s.nrows()).map(|i| s[(i, i)].sqrt()).collect())
            }
            _ => None,
        }
    }

    pub fn cox(&self) -> Option<&CoxModel> {
        match self {
            BuiltTarget::Cox(t) => Some(t.perturbation()),
            _ => None,
        }
    }
}

fn relative(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Builds the target; relative data paths resolve against `base_dir`.
pub fn build_target(cfg: &TargetConfig, base_dir: &Path) -> Result<BuiltTarget> {
    let at = |e: Error| match e {
        Error::Contract(m) | Error::Config { message: m, .. } => config_error("/target", m),
        Error::Domain {
            what,
            value,
            interval,
        } => config_error(
            &format!("/target/{what}"),
            format!("{value} is outside {interval}"),
        ),
        other => other,
    };
    Ok(match cfg {
        TargetConfig::Neal { dim } => BuiltTarget::Diagonal(neal_multivariate(*dim).map_err(at)?),
        TargetConfig::GaussianDiagonal {
            alphas,
            momentum_variances,
        } => {
            let kinetic = match momentum_variances {
                Some(v) => DiagonalMetric::new(v.clone()).map_err(at)?,
                None => DiagonalMetric::identity(alphas.len()),
            };
            BuiltTarget::Diagonal(GaussianDiagonalTarget::new(alphas.clone(), kinetic).map_err(at)?)
        }
        TargetConfig::Bivariate { rho, decorrelate } => BuiltTarget::Correlated {
            target: bivariate_corr(*rho).map_err(at)?,
            decorrelate: *decorrelate,
        },
        TargetConfig::Cox { counts, params } => {
            let (d, counts) = load_count_grid(relative(base_dir, counts))?;
            let params = load_cox_params(relative(base_dir, params))?;
            BuiltTarget::Cox(CoxModel::new(d, counts, params).map_err(at)?.into_target())
        }
        TargetConfig::CoxSynthetic {
            grid_side,
            sigma2,
            beta,
            intensity,
            data_seed,
        } => BuiltTarget::Cox(
            synthesize_cox(*data_seed, *grid_side, *sigma2, *beta, *intensity)
                .map_err(at)?
                .into_target(),
        ),
        TargetConfig::Logistic {
            data,
            has_header,
            normalize,
            prior_sigma2,
        } => {
            let opts = LogisticCsvOptions {
                has_header: *has_header,
                normalize: *normalize,
                prior_sigma2: *prior_sigma2,
            };
            BuiltTarget::Logistic(
                load_logistic_csv(relative(base_dir, data), &opts)
                    .map_err(at)?
                    .into_target(),
            )
        }
        TargetConfig::LogisticSynthetic {
            n,
            covariates,
            data_seed,
            prior_sigma2,
        } => {
            let (rows, labels) = synthesize_logistic(*data_seed, *n, *covariates);
            BuiltTarget::Logistic(
                LogisticModel::new(&rows, &labels, *prior_sigma2, true)
                    .map_err(at)?
                    .into_target(),
            )
        }
    })
}

fn resolve_b(b: &BValue, pointer: &str) -> Result<f64> {
    b.resolve().map_err(|m| config_error(pointer, m))
}

/// Integrator for a fixed-scheme run, checked against the target.
pub fn build_integrator(cfg: &IntegratorConfig, target: &BuiltTarget) -> Result<IntegratorSpec> {
    let spec = match cfg {
        IntegratorConfig::StormerVerlet { h } => IntegratorSpec {
            scheme: Scheme::StormerVerlet,
            h: *h,
            n_steps: 1,
        },
        IntegratorConfig::SplitFamily { b, h } => {
            let b = resolve_b(b, "/integrator/b")?;
            let h = match h {
                Some(h) => *h,
                None => {
                    step_size_hb(b).map_err(|e| config_error("/integrator/b", e.to_string()))?
                }
            };
            IntegratorSpec {
                scheme: Scheme::SplitFamily { b },
                h,
                n_steps: 1,
            }
        }
        IntegratorConfig::ScaledSplitFamily { b } => {
            let b = resolve_b(b, "/integrator/b")?;
            let gaussian = target.model().gaussian_structure().ok_or_else(|| {
                config_error(
                    "/integrator/scheme",
                    "scaled_split_family needs a diagonal Gaussian target (use decorrelate for bivariate)",
                )
            })?;
            IntegratorSpec::scaled_for(gaussian, b, 1)
                .map_err(|e| config_error("/integrator/b", e.to_string()))?
        }
    };
    spec.validate(target.model())
        .map_err(|e| config_error("/integrator", e.to_string()))?;
    Ok(spec)
}

pub fn build_adaptive(cfg: &AdaptiveConfig) -> Result<AdaptiveState> {
    let b = resolve_b(&cfg.b_init, "/adaptive/b_init")?;
    AdaptiveState::new(b, cfg.red, cfg.reset_factor_each_iter).map_err(|e| {
        let ptr = match e {
            Error::Domain { what: "red", .. } => "/adaptive/red",
            _ => "/adaptive/b_init",
        };
        config_error(ptr, e.to_string())
    })
}

pub fn build_hmc(cfg: &HmcSection, target: &BuiltTarget, adaptive: bool) -> Result<HmcConfig> {
    let init = match &cfg.init {
        InitConfig::Auto => {
            let mut probe = crate::rng::RngState::new(0);
            if target.model().exact_draw(&mut probe).is_some() {
                Initializer::TargetDraw
            } else {
                Initializer::Zero
            }
        }
        InitConfig::Zero => Initializer::Zero,
        InitConfig::TargetDraw => {
            let mut probe = crate::rng::RngState::new(0);
            if target.model().exact_draw(&mut probe).is_none() {
                return Err(config_error(
                    "/hmc/init",
                    "this target has no exact sampler",
                ));
            }
            Initializer::TargetDraw
        }
        InitConfig::Given(q) => {
            if q.len() != target.model().dim() {
                return Err(config_error(
                    "/hmc/init/given",
                    format!("expected {} values, got {}", target.model().dim(), q.len()),
                ));
            }
            Initializer::Given(q.clone())
        }
    };
    let hmc = HmcConfig {
        n_samples: cfg.n_samples,
        burn_in: cfg.burn_in,
        t_star_base: cfg.t_star,
        t_star_jitter: cfg.t_star_jitter,
        init,
    };
    hmc.validate().map_err(|e| {
        let ptr = match &e {
            Error::Domain {
                what: "t_star_base",
                ..
            } => "/hmc/t_star",
            Error::Domain {
                what: "t_star_jitter",
                ..
            } => "/hmc/t_star_jitter",
            _ => "/hmc/burn_in",
        };
        config_error(ptr, e.to_string())
    })?;
    if adaptive && cfg.t_star < 3.0 {
        return Err(config_error(
            "/hmc/t_star",
            "adaptive runs need t_star >= 3",
        ));
    }
    Ok(hmc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_with_pointer() {
        let text = r#"{"target": {"kind": "neal", "dim": 4},
            "hmc": {"n_samples": 10, "t_star": 1.0, "bogus": 1}}"#;
        match parse_config(text) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "/hmc/bogus"),
            other => panic!("{other:?}"),
        }
        let text = r#"{"target": {"kind": "neal", "dim": 4, "rho": 1},
            "hmc": {"n_samples": 10, "t_star": 1.0}}"#;
        assert!(parse_config(text).is_err());
    }

    #[test]
    fn presets_resolve() {
        assert_eq!(BValue::Preset("b_max".into()).resolve().unwrap(), 0.25);
        assert!(BValue::Preset("b_foo".into()).resolve().is_err());
    }

    #[test]
    fn full_config_round_trip() {
        let text = r#"{
            "target": {"kind": "bivariate", "rho": 0.95},
            "integrator": {"scheme": "scaled_split_family", "b": "b_stab"},
            "hmc": {"n_samples": 100, "burn_in": 10, "t_star": 5, "t_star_jitter": 0.4, "init": {"given": [0, 0]}},
            "seed": 3
        }"#;
        let cfg = parse_config(text).unwrap();
        let target = build_target(&cfg.target, Path::new(".")).unwrap();
        let spec = build_integrator(cfg.integrator.as_ref().unwrap(), &target).unwrap();
        assert!((spec.h - 1.3433).abs() < 1e-3);
        build_hmc(&cfg.hmc, &target, false).unwrap();
        let again = parse_config(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn semantic_errors_point_at_fields() {
        let text = r#"{"target": {"kind": "neal", "dim": 4},
            "integrator": {"scheme": "scaled_split_family", "b": 0.3},
            "hmc": {"n_samples": 10, "t_star": 1.0}}"#;
        let cfg = parse_config(text).unwrap();
        let target = build_target(&cfg.target, Path::new(".")).unwrap();
        match build_integrator(cfg.integrator.as_ref().unwrap(), &target) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "/integrator/b"),
            other => panic!("{other:?}"),
        }
        let hmc = HmcSection {
            n_samples: 10,
            burn_in: 10,
            t_star: 1.0,
            t_star_jitter: 0.0,
            init: InitConfig::Zero,
        };
        assert!(matches!(
            build_hmc(&hmc, &target, false),
            Err(Error::Config { .. })
        ));
    }
}
