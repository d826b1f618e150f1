//! `verify`: numerical self-check of the linear-map identities.

use crate::integrators::{integrate, IntegratorSpec, Scheme};
use crate::linear::{
    b_presets, energy_error_matrix, expected_delta, family_coefficients, multivariate_map_check,
    stability_bound, step_size_hb, sv_coefficients, PresetName, B_MAX, B_MIN,
};
use crate::targets::GaussianDiagonalTarget;
use crate::types::{DiagonalMetric, PhasePoint};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check {
        name,
        passed: worst <= tol,
        detail: format!("max deviation {worst:.3e} (tolerance {tol:.0e})"),
    }
}

fn b_grid(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|k| B_MIN + (B_MAX - B_MIN) * k as f64 / n as f64)
        .collect()
}

const SIGMAS: [f64; 3] = [0.1, 1.0, 10.0];

pub fn run_checks() -> Vec<Check> {
    let mut checks = Vec::new();

    let mut worst: f64 = 0.0;
    for i in 1..=40 {
        let hs = 0.1 * i as f64;
        for &s in &SIGMAS {
            worst = worst.max(sv_coefficients(hs, s).unwrap().det_residual().abs());
            for b in [0.1, 0.2, 0.25, 0.3] {
                worst = worst.max(family_coefficients(b, hs, s).unwrap().det_residual().abs());
            }
        }
    }
    checks.push(check("det_identity", worst, 1e-12));

    let mut e_worst: f64 = 0.0;
    let mut m_worst: f64 = 0.0;
    let mut stab_worst: f64 = f64::NEG_INFINITY;
    for b in b_grid(50) {
        let h = step_size_hb(b).unwrap();
        stab_worst = stab_worst.max(h - stability_bound(b).unwrap());
        for &s in &SIGMAS {
            let c = family_coefficients(b, h, s).unwrap();
            e_worst = e_worst.max(c.e_h.abs());
            let e = energy_error_matrix(&c, 1.0, s).unwrap();
            m_worst = m_worst.max(e.iter().flatten().fold(0.0, |a, v| a.max(v.abs())));
        }
    }
    checks.push(check("e_h_zero_at_h_b", e_worst, 1e-13));
    checks.push(check("energy_error_matrix_zero_at_h_b", m_worst, 1e-12));
    checks.push(Check {
        name: "h_b_within_stability_interval",
        passed: stab_worst <= 1e-12,
        detail: format!("max h_b - bound {stab_worst:.3e}"),
    });

    // One-step mean energy error: ½ tr(E D) against the closed form.
    let mut worst: f64 = 0.0;
    for (hs, alpha, beta) in [(0.2, 1.0, 1.0), (0.5, 1.0, 2.0), (1.1, 0.3, 0.9)] {
        let c = sv_coefficients(hs, beta / alpha).unwrap();
        let e = energy_error_matrix(&c, alpha, beta).unwrap();
        let trace = 0.5 * (e[0][0] * alpha * alpha + e[1][1] * beta * beta);
        let closed = expected_delta(&c, 1).unwrap().expected_delta;
        worst = worst.max((trace - closed).abs() / closed.max(1e-300));
    }
    checks.push(check("one_step_expected_energy_error", worst, 1e-10));

    let mut worst: f64 = 0.0;
    for i in 1..80 {
        let hs = 0.05 * i as f64;
        for &s in &SIGMAS {
            let mut sets = vec![sv_coefficients(hs, s).unwrap()];
            sets.extend([0.15, 0.21, 0.3].map(|b| family_coefficients(b, hs, s).unwrap()));
            for c in sets {
                if c.p_h.abs() < 1.0 - 1e-8 {
                    let a = expected_delta(&c, 4).unwrap();
                    let t = a.trig.map_or(f64::INFINITY, |t| t.expected_delta);
                    worst = worst.max((a.expected_delta - t).abs());
                }
            }
        }
    }
    checks.push(check("trigonometric_form", worst, 1e-10));

    let mut worst: f64 = 0.0;
    let alphas: Vec<f64> = (1..=256).map(|j| 1.0 / (j * j) as f64).collect();
    let betas = vec![1.0; 256];
    for b in b_grid(8) {
        worst = worst.max(multivariate_map_check(b, &alphas, &betas).unwrap());
    }
    checks.push(check("multivariate_energy_error_zero", worst, 1e-12));

    let presets = b_presets();
    let h = |n: PresetName| presets.iter().find(|p| p.name == n).unwrap().h_b;
    let worst = [
        (h(PresetName::BMax) - 2.828).abs() / 1e-3,
        (h(PresetName::BBcs) - 1.8612).abs() / 1e-3,
        (h(PresetName::BStab) - 1.3432).abs() / 1e-3,
        (h(PresetName::BMl) - 0.655).abs() / 2e-2,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    checks.push(Check {
        name: "preset_step_sizes",
        passed: worst <= 1.0,
        detail: format!("worst deviation {worst:.3} of tolerance"),
    });

    let mut worst: f64 = 0.0;
    for (scheme, hs, alpha) in [
        (Scheme::StormerVerlet, 0.3, 1.0),
        (Scheme::SplitFamily { b: 0.2 }, 0.9, 0.5),
        (Scheme::SplitFamily { b: 0.35 }, 1.7, 2.0),
    ] {
        let target = GaussianDiagonalTarget::new(vec![alpha], DiagonalMetric::identity(1)).unwrap();
        let n = 200;
        let c = match scheme {
            Scheme::StormerVerlet => sv_coefficients(hs / alpha, 1.0 / alpha).unwrap(),
            Scheme::SplitFamily { b } => family_coefficients(b, hs / alpha, 1.0 / alpha).unwrap(),
            _ => unreachable!(),
        };
        let m = c.power(n).matrix();
        let spec = IntegratorSpec {
            scheme,
            h: hs,
            n_steps: n,
        };
        let r = integrate(
            &target,
            &spec,
            &PhasePoint::new(vec![0.6], vec![-0.8]).unwrap(),
        )
        .unwrap();
        let q = m[0][0] * 0.6 - m[0][1] * 0.8;
        let p = m[1][0] * 0.6 - m[1][1] * 0.8;
        worst = worst
            .max((r.end_state.q()[0] - q).abs())
            .max((r.end_state.p()[0] - p).abs());
    }
    checks.push(check("integrator_matches_linear_map", worst, 1e-10));

    checks
}
