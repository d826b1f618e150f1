//! `theory`: step-size and coefficient tables.

use std::fmt::Write as _;

use crate::linear::{
    b_presets, expected_delta, family_coefficients, stability_bound, step_size_hb,
};

use super::output::fmt_f64;

pub struct TheoryRow {
    pub label: String,
    pub b: f64,
}

pub const HEADER: &str =
    "label,b,h_b,p_h,q_h,e_h,stability_bound,det_residual,expected_delta,status";

/// One CSV line per row, coefficients evaluated at `h_σ = h_b(b)`.
/// Rows outside the admissible interval are flagged, not fatal.
pub fn table(rows: &[TheoryRow], sigma: f64, n_steps: usize) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for row in rows {
        let _ = write!(s, "{},{}", row.label, fmt_f64(row.b));
        let line = step_size_hb(row.b).and_then(|h| {
            let c = family_coefficients(row.b, h, sigma)?;
            let e = expected_delta(&c, n_steps)?;
            Ok(format!(
                ",{},{},{},{},{},{},{},ok",
                fmt_f64(h),
                fmt_f64(c.p_h),
                fmt_f64(c.q_h),
                fmt_f64(c.e_h),
                fmt_f64(stability_bound(row.b)?),
                fmt_f64(c.det_residual()),
                fmt_f64(e.expected_delta)
            ))
        });
        match line {
            Ok(l) => s.push_str(&l),
            Err(e) => {
                let _ = write!(s, ",,,,,,,,\"domain: {}\"", e.to_string().replace('"', "'"));
            }
        }
        s.push('\n');
    }
    s
}

pub fn preset_rows() -> Vec<TheoryRow> {
    b_presets()
        .into_iter()
        .map(|p| TheoryRow {
            label: p.name.as_str().into(),
            b: p.b,
        })
        .collect()
}
