//! Run artifacts. Floats are written with 17 significant digits and no
//! locale dependence.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::diagnostics::ChainSummary;
use crate::error::{Error, Result};
use crate::sampler::ChainOutput;

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::io(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

/// One row per iteration: coordinates, `delta_h`, `accepted`, `b`, `h`,
/// `n_steps`. `b` is empty for Störmer-Verlet.
pub fn chain_csv(out: &ChainOutput) -> String {
    let mut s = String::from("iteration");
    for j in 0..out.dim {
        let _ = write!(s, ",q{j}");
    }
    s.push_str(",delta_h,accepted,b,h,n_steps\n");
    for i in 0..out.len() {
        let _ = write!(s, "{i}");
        for v in out.sample(i) {
            s.push(',');
            s.push_str(&fmt_f64(*v));
        }
        let b = out.b[i].map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            s,
            ",{},{},{},{},{}",
            fmt_f64(out.delta_h[i]),
            u8::from(out.accepted[i]),
            b,
            fmt_f64(out.h[i]),
            out.n_steps[i]
        );
    }
    s
}

/// Per-coordinate table: `j, reference_sd, mean, sd, ess`.
pub fn coords_csv(summary: &ChainSummary, reference_sd: Option<&[f64]>) -> String {
    let mut s = String::from("j,reference_sd,mean,sd,ess\n");
    for j in 0..summary.posterior_mean.len() {
        let r = reference_sd.map(|r| fmt_f64(r[j])).unwrap_or_default();
        let ess = summary
            .ess_per_coordinate
            .get(j)
            .copied()
            .unwrap_or(f64::NAN);
        let _ = writeln!(
            s,
            "{j},{r},{},{},{}",
            fmt_f64(summary.posterior_mean[j]),
            fmt_f64(summary.posterior_sd[j]),
            fmt_f64(ess)
        );
    }
    s
}

pub fn adaptation_csv(out: &ChainOutput) -> String {
    let mut s = String::from("iteration,b,h_b\n");
    for ev in &out.adaptation_trace {
        let _ = writeln!(s, "{},{},{}", ev.iteration, fmt_f64(ev.b), fmt_f64(ev.h_b));
    }
    s
}

/// `d` rows of `d` values.
pub fn grid_csv(values: &[f64], side: usize) -> String {
    let mut s = String::new();
    for row in values.chunks(side) {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}
