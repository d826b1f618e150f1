//! Post-chain metrics.
//!
//! All statistics use the post-burn-in part of the chain. Energy-error
//! statistics include every proposal, accepted or not; proposals whose
//! evaluation failed carry no energy error and are left out of them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampler::ChainOutput;
use crate::targets::CoxModel;

fn post_range(out: &ChainOutput, burn_in: usize) -> Result<std::ops::Range<usize>> {
    if burn_in >= out.len() {
        return Err(Error::Contract(format!(
            "burn-in {burn_in} leaves no iterations in a chain of length {}",
            out.len()
        )));
    }
    Ok(burn_in..out.len())
}

/// Fraction of accepted proposals after burn-in.
pub fn acceptance_rate(out: &ChainOutput, burn_in: usize) -> Result<f64> {
    let r = post_range(out, burn_in)?;
    let n = r.len();
    Ok(out.accepted[r].iter().filter(|&&a| a).count() as f64 / n as f64)
}

/// Effective sample size with Geyer's initial positive sequence.
///
/// Autocovariances are summed in adjacent pairs `γ_{2m} + γ_{2m+1}` until a
/// pair is non-positive; the result is clipped to `[1, n]`. A constant
/// series has ESS 1.
pub fn ess(series: &[f64]) -> Result<f64> {
    let n = series.len();
    if n < 10 {
        return Err(Error::Contract(format!(
            "ESS needs at least 10 values, got {n}"
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("ESS of a non-finite series".into()));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let autocov = |k: usize| -> f64 {
        centred[..n - k]
            .iter()
            .zip(&centred[k..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let gamma0 = autocov(0);
    if gamma0 <= 0.0 || gamma0 <= f64::EPSILON * f64::EPSILON * mean * mean {
        return Ok(1.0);
    }
    // tau = -γ0 + 2 Σ_m Γ_m, normalized by γ0.
    let mut sum = 0.0;
    let mut k = 0;
    while k + 1 < n {
        let pair = autocov(k) + autocov(k + 1);
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        k += 2;
    }
    let tau = (-gamma0 + 2.0 * sum) / gamma0;
    Ok((n as f64 / tau).clamp(1.0, n as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub mean: Vec<f64>,
    /// Sample standard deviation (denominator `n - 1`).
    pub sd: Vec<f64>,
}

pub fn posterior_summary(out: &ChainOutput, burn_in: usize) -> Result<PosteriorSummary> {
    let r = post_range(out, burn_in)?;
    let n = r.len();
    if n < 2 {
        return Err(Error::Contract(
            "posterior summary needs at least 2 post-burn-in rows".into(),
        ));
    }
    let d = out.dim;
    let mut mean = vec![0.0; d];
    for i in r.clone() {
        for (m, x) in mean.iter_mut().zip(out.sample(i)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for i in r {
        for ((v, x), m) in var.iter_mut().zip(out.sample(i)).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let sd = var.iter().map(|v| (v / (n - 1) as f64).sqrt()).collect();
    Ok(PosteriorSummary { mean, sd })
}

/// Per-cell posterior mean of the intensity `m exp(Y)`, `Y = L⁻¹ q + μ1`,
/// over the given whitened samples. Row-major `d × d`.
pub fn cox_intensity_map<'a>(
    samples: impl IntoIterator<Item = &'a [f64]>,
    model: &CoxModel,
) -> Result<Vec<f64>> {
    let n_cells = model.grid_side() * model.grid_side();
    let mut acc = vec![0.0; n_cells];
    let mut count = 0usize;
    for q in samples {
        if q.len() != n_cells {
            return Err(Error::DimensionMismatch {
                expected: n_cells,
                found: q.len(),
            });
        }
        for (a, y) in acc.iter_mut().zip(model.latent(q)) {
            *a += model.cell_area() * y.exp();
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::Contract(
            "intensity map needs at least one sample".into(),
        ));
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSummary {
    pub iterations: usize,
    pub burn_in: usize,
    pub post_burn_in: usize,
    pub acceptance_rate: f64,
    pub mean_delta_h: f64,
    pub mean_abs_delta_h: f64,
    pub max_abs_delta_h: f64,
    pub eval_errors: usize,
    pub ess_per_coordinate: Vec<f64>,
    /// Arithmetic mean of the per-coordinate ESS.
    pub ess_mean: f64,
    /// `ess_mean / post_burn_in`.
    pub ess_fraction: f64,
    /// Mean step size over post-burn-in iterations.
    pub mean_h: f64,
    /// `ess_mean × mean_h`.
    pub ess_per_work: f64,
    pub n_gradient_evals: usize,
    pub posterior_mean: Vec<f64>,
    pub posterior_sd: Vec<f64>,
}

pub fn summarize(out: &ChainOutput, burn_in: usize) -> Result<ChainSummary> {
    let r = post_range(out, burn_in)?;
    let n = r.len();
    let finite: Vec<f64> = out.delta_h[r.clone()]
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .collect();
    let nf = finite.len().max(1) as f64;
    let ess_per_coordinate = if n >= 10 {
        (0..out.dim)
            .map(|j| ess(&out.coordinate_from(j, burn_in)))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let ess_mean = if ess_per_coordinate.is_empty() {
        f64::NAN
    } else {
        ess_per_coordinate.iter().sum::<f64>() / ess_per_coordinate.len() as f64
    };
    let mean_h = out.h[r.clone()].iter().sum::<f64>() / n as f64;
    let post = if n >= 2 {
        posterior_summary(out, burn_in)?
    } else {
        PosteriorSummary {
            mean: out.sample(burn_in).to_vec(),
            sd: vec![f64::NAN; out.dim],
        }
    };
    Ok(ChainSummary {
        iterations: out.len(),
        burn_in,
        post_burn_in: n,
        acceptance_rate: acceptance_rate(out, burn_in)?,
        mean_delta_h: finite.iter().sum::<f64>() / nf,
        mean_abs_delta_h: finite.iter().map(|d| d.abs()).sum::<f64>() / nf,
        max_abs_delta_h: finite.iter().fold(0.0, |a, d| a.max(d.abs())),
        eval_errors: out.eval_errors,
        ess_fraction: ess_mean / n as f64,
        ess_per_coordinate,
        ess_mean,
        mean_h,
        ess_per_work: ess_mean * mean_h,
        n_gradient_evals: out.n_gradient_evals,
        posterior_mean: post.mean,
        posterior_sd: post.sd,
    })
}

impl ChainOutput {
    /// Trace of coordinate `j` from iteration `start` on.
    pub fn coordinate_from(&self, j: usize, start: usize) -> Vec<f64> {
        self.samples
            .chunks(self.dim)
            .skip(start)
            .map(|row| row[j])
            .collect()
    }
}
