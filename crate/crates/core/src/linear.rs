//! Closed-form analysis of splitting maps on the Gaussian test problem.
//!
//! Applied to `dQ/dt = P/β²`, `dP/dt = -Q/α²`, every symplectic,
//! momentum-flip reversible integrator considered here acts as
//!
//! ```text
//!     [ p_h          e_h + q_h/σ ]
//! M = [                          ]     σ = β/α,  h_σ = h/(αβ)
//!     [ e_h - σ q_h  p_h         ]
//! ```
//!
//! with `det M = 1`. The coefficient `e_h` alone drives the energy error:
//! the map preserves `H` exactly iff `e_h = 0`. For the splitting family
//! `e_h ∝ R(b, h_σ)`, whose positive root in `h_σ` is the step size `h_b`.
//!
//! Everything in this module is a pure function of its inputs.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Lower end of the admissible `b` interval, `(3 - √5)/4`; excluded.
pub const B_MIN: f64 = 0.190_983_005_625_052_58;
/// Upper end of the admissible `b` interval; included.
pub const B_MAX: f64 = 0.25;
/// `b` recommended by Blanes, Casas and Sanz-Serna, `(3 - √3)/6`.
pub const B_BCS: f64 = 0.211_324_865_405_187_13;

const ROOT_TOL: f64 = 1e-12;

/// Coefficients of the one-step linear map on the Gaussian test problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearMapCoefficients {
    pub p_h: f64,
    pub q_h: f64,
    pub e_h: f64,
    pub sigma: f64,
    pub h_sigma: f64,
}

impl LinearMapCoefficients {
    /// The 2×2 map acting on `(Q, P)` in original units.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [
            [self.p_h, self.e_h + self.q_h / self.sigma],
            [self.e_h - self.sigma * self.q_h, self.p_h],
        ]
    }

    /// `p² - (e + q/σ)(e - σq) - 1`; zero for a symplectic map.
    pub fn det_residual(&self) -> f64 {
        let [[a, b], [c, d]] = self.matrix();
        a * d - b * c - 1.0
    }

    /// Complex unit-modulus eigenvalues, i.e. bounded trajectories.
    pub fn is_stable(&self) -> bool {
        self.p_h.abs() < 1.0
    }

    /// `N`-fold application, by Chebyshev recurrence: `M^N = U_{N-1} M - U_{N-2} I`.
    pub fn power(&self, n: usize) -> LinearMapCoefficients {
        let (u_prev, u_curr) = chebyshev_u_pair(self.p_h, n);
        LinearMapCoefficients {
            p_h: u_curr * self.p_h - u_prev,
            q_h: u_curr * self.q_h,
            e_h: u_curr * self.e_h,
            sigma: self.sigma,
            h_sigma: self.h_sigma * n as f64,
        }
    }
}

/// Returns `(U_{n-2}(x), U_{n-1}(x))` with `U_{-1} = 0`.
fn chebyshev_u_pair(x: f64, n: usize) -> (f64, f64) {
    let (mut prev, mut curr) = (0.0, 1.0);
    for _ in 1..n {
        let next = 2.0 * x * curr - prev;
        prev = curr;
        curr = next;
    }
    if n == 0 {
        // M^0 = I: U_{-1} = 0 and U_{-2} = -1.
        return (-1.0, 0.0);
    }
    (prev, curr)
}

fn check_positive(what: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            what,
            value,
            interval: "(0, inf)".into(),
        })
    }
}

/// Velocity Störmer-Verlet on the test problem.
pub fn sv_coefficients(h_sigma: f64, sigma: f64) -> Result<LinearMapCoefficients> {
    check_positive("h_sigma", h_sigma)?;
    check_positive("sigma", sigma)?;
    let s2 = sigma * sigma;
    let e_h = sigma * h_sigma.powi(3) / (4.0 * (s2 + 1.0));
    Ok(LinearMapCoefficients {
        p_h: 1.0 - 0.5 * h_sigma * h_sigma,
        q_h: h_sigma - sigma * e_h,
        e_h,
        sigma,
        h_sigma,
    })
}

/// The five-stage splitting family `Ψ_h^(b)` on the test problem.
pub fn family_coefficients(b: f64, h_sigma: f64, sigma: f64) -> Result<LinearMapCoefficients> {
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
    check_positive("h_sigma", h_sigma)?;
    check_positive("sigma", sigma)?;
    let h = h_sigma;
    let h2 = h * h;
    let s2 = sigma * sigma;
    let denom = 4.0 * (s2 + 1.0);
    let p_h = 1.0 - 0.5 * h2 + 0.25 * h2 * h2 * b * (1.0 - 2.0 * b);
    let q_h = s2 * b * b * (1.0 - 2.0 * b) / denom * h.powi(5)
        + (4.0 * s2 * b * b + 2.0 * b - 4.0 * b * s2 - 1.0) / denom * h.powi(3)
        + h;
    let e_h = h.powi(3) * sigma / denom * r_polynomial(b, h);
    Ok(LinearMapCoefficients {
        p_h,
        q_h,
        e_h,
        sigma,
        h_sigma,
    })
}

/// `R(b, h_σ) = 2h_σ²b³ - (4 + h_σ²)b² + 6b - 1`.
pub fn r_polynomial(b: f64, h_sigma: f64) -> f64 {
    let h2 = h_sigma * h_sigma;
    2.0 * h2 * b.powi(3) - (4.0 + h2) * b * b + 6.0 * b - 1.0
}

fn admissible(b: f64) -> Result<()> {
    if b.is_finite() && b > B_MIN && b <= B_MAX {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "b",
            value: b,
            interval: format!("({B_MIN}, {B_MAX}]"),
        })
    }
}

/// Scaled step `h_b = sqrt((4b² - 6b + 1) / (b²(2b - 1)))` that zeroes `e_h`.
///
/// Defined for `(3 - √5)/4 < b ≤ 1/4`; `h_b → 0` at the lower end and
/// `h_b = 2√2` at `b = 1/4`.
pub fn step_size_hb(b: f64) -> Result<f64> {
    admissible(b)?;
    Ok(hb_unchecked(b))
}

fn hb_unchecked(b: f64) -> f64 {
    ((4.0 * b * b - 6.0 * b + 1.0) / (b * b * (2.0 * b - 1.0))).sqrt()
}

/// Upper end of the family's stability interval in `h_σ`, for `0 < b < 1/2`.
pub fn stability_bound(b: f64) -> Result<f64> {
    if !(b > 0.0 && b < 0.5) {
        return Err(Error::Domain {
            what: "b",
            value: b,
            interval: "(0, 0.5)".into(),
        });
    }
    Ok((2.0 / b).sqrt().min((2.0 / (0.5 - b)).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetName {
    /// Largest admissible `b`, hence largest step.
    BMax,
    /// Blanes-Casas-Sanz-Serna value `(3 - √3)/6`.
    BBcs,
    /// Stability-motivated choice.
    BStab,
    /// Minimizer of the leading error term `k₃₁² + k₃₂²`.
    BMl,
}

impl PresetName {
    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::BMax => "b_max",
            PresetName::BBcs => "b_BCS",
            PresetName::BStab => "b_stab",
            PresetName::BMl => "b_ML",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BPreset {
    pub name: PresetName,
    pub b: f64,
    pub h_b: f64,
}

/// The condition solved for the `b_stab` preset:
/// `1 - h_b²/2 - (h_b⁴/4) b(1 - 2b)`.
///
/// This is the one-step trace with the sign of its quartic term reversed;
/// its root (`b ≈ 0.20080`, `h_b ≈ 1.3433`) is the catalogued `b_stab`.
/// The true trace `p_{h_b}` vanishes elsewhere, see [`trace_zero_b`].
pub fn stab_condition(b: f64) -> f64 {
    let h2 = hb_unchecked(b).powi(2);
    1.0 - 0.5 * h2 - 0.25 * h2 * h2 * b * (1.0 - 2.0 * b)
}

/// The `b` where `p_{h_b} = 0` exactly (`b ≈ 0.20395`).
pub fn trace_zero_b() -> f64 {
    bisect(family_trace_at_hb, B_MIN + 1e-9, B_MAX)
}

/// `p_h` of the family evaluated at `h_σ = h_b(b)`.
pub fn family_trace_at_hb(b: f64) -> f64 {
    let h2 = hb_unchecked(b).powi(2);
    1.0 - 0.5 * h2 + 0.25 * h2 * h2 * b * (1.0 - 2.0 * b)
}

/// Leading error coefficients `(k₃₁, k₃₂)` of the family.
pub fn leading_error_terms(b: f64) -> (f64, f64) {
    (
        (12.0 * b * b - 12.0 * b + 2.0) / 24.0,
        (1.0 - 6.0 * b) / 24.0,
    )
}

/// `b_stab`: root of [`stab_condition`] in the admissible interval.
pub fn b_stab() -> f64 {
    bisect(stab_condition, B_MIN + 1e-9, B_MAX)
}

/// `b_ML`: minimizer of `k₃₁² + k₃₂²` over the admissible interval.
pub fn b_ml() -> f64 {
    golden_section_min(
        |b| {
            let (k1, k2) = leading_error_terms(b);
            k1 * k1 + k2 * k2
        },
        B_MIN,
        B_MAX,
    )
}

/// The four classical choices of `b` with their step sizes.
pub fn b_presets() -> Vec<BPreset> {
    [
        (PresetName::BMax, B_MAX),
        (PresetName::BBcs, B_BCS),
        (PresetName::BStab, b_stab()),
        (PresetName::BMl, b_ml()),
    ]
    .into_iter()
    .map(|(name, b)| BPreset {
        name,
        b,
        h_b: hb_unchecked(b),
    })
    .collect()
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut f_lo = f(lo);
    debug_assert!(f_lo * f(hi) <= 0.0, "no sign change on bracket");
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > ROOT_TOL {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Energy-error matrix `E = Mᵀ D⁻¹ M - D⁻¹`, `D = diag(α², β²)`, so that
/// one step changes the energy by `½ Yᵀ E Y`.
pub fn energy_error_matrix(
    c: &LinearMapCoefficients,
    alpha: f64,
    beta: f64,
) -> Result<[[f64; 2]; 2]> {
    check_positive("alpha", alpha)?;
    check_positive("beta", beta)?;
    let sigma = beta / alpha;
    if ((c.sigma - sigma) / sigma).abs() > 1e-12 {
        return Err(Error::Contract(format!(
            "coefficients built for sigma = {} but beta/alpha = {sigma}",
            c.sigma
        )));
    }
    let (p, q, e) = (c.p_h, c.q_h, c.e_h);
    let (a2, b2) = (alpha * alpha, beta * beta);
    let off = (1.0 / a2 + 1.0 / b2) * e * p;
    Ok([
        [(p * p - 1.0) / a2 + (e / beta - q / alpha).powi(2), off],
        [off, (p * p - 1.0) / b2 + (e / alpha + q / beta).powi(2)],
    ])
}

/// Trigonometric form of the expected energy error (stable maps only).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigForm {
    /// `h_χ = arccos(p_h)`.
    pub h_chi: f64,
    pub chi_h: f64,
    pub rho_h: f64,
    /// `N sin²(h_χ) ρ(h)`.
    pub expected_delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectationAnalysis {
    pub n_steps: usize,
    /// `(N/2)(σ + 1/σ)² e_h²`.
    pub expected_delta: f64,
    /// Absent when `|p_h| ≥ 1`.
    pub trig: Option<TrigForm>,
}

/// Accumulated per-step expectation of the energy error over `N` steps,
/// each step taken from a Gaussian state `(Q, P) ~ N(0, diag(α², β²))`.
///
/// For `N = 1` this is the exact mean of `H(Y₁) - H(Y₀)`. For `N > 1` the
/// exact mean over a whole trajectory is [`trajectory_expected_delta`];
/// the two agree whenever `e_h = 0`.
pub fn expected_delta(c: &LinearMapCoefficients, n_steps: usize) -> Result<ExpectationAnalysis> {
    if n_steps == 0 {
        return Err(Error::Contract("n_steps must be >= 1".into()));
    }
    let n = n_steps as f64;
    let s = c.sigma + 1.0 / c.sigma;
    let expected = 0.5 * n * s * s * c.e_h * c.e_h;
    let trig = if c.is_stable() {
        let sin2 = 1.0 - c.p_h * c.p_h;
        let chi_h = (c.sigma * c.q_h - c.e_h) / sin2.sqrt();
        (chi_h != 0.0).then(|| {
            let chi_tilde = c.sigma / chi_h;
            let rho_h = 0.5 * (chi_tilde - 1.0 / chi_tilde).powi(2);
            TrigForm {
                h_chi: c.p_h.acos(),
                chi_h,
                rho_h,
                expected_delta: n * sin2 * rho_h,
            }
        })
    } else {
        None
    };
    Ok(ExpectationAnalysis {
        n_steps,
        expected_delta: expected,
        trig,
    })
}

/// Exact mean of `H(Y_N) - H(Y₀)` for `Y₀ ~ N(0, diag(α², β²))` and
/// `Y_N = M^N Y₀`: `½(σ + 1/σ)² e_h² U_{N-1}(p_h)²`.
///
/// In the stable regime `U_{N-1}(p_h) = sin(N h_χ) / sin(h_χ)`.
pub fn trajectory_expected_delta(c: &LinearMapCoefficients, n_steps: usize) -> Result<f64> {
    if n_steps == 0 {
        return Err(Error::Contract("n_steps must be >= 1".into()));
    }
    let (_, u) = chebyshev_u_pair(c.p_h, n_steps);
    let s = c.sigma + 1.0 / c.sigma;
    Ok(0.5 * s * s * c.e_h * c.e_h * u * u)
}

/// Multivariate energy-error matrix in whitened coordinates.
///
/// Assembles the `2d × 2d` block map
/// `[[P, E + Σ⁻¹Q], [E - ΣQ, P]]` from per-coordinate coefficients and
/// returns `M̃ᵀM̃ - I` with `M̃ = D^{-1/2} M D^{1/2}`, `D = diag(D_α, D_β)`.
/// This equals `D^{1/2} (Mᵀ D⁻¹ M - D⁻¹) D^{1/2}`: the same energy-error
/// quadratic form expressed for unit-variance coordinates, so its size does
/// not scale with `1/α_j²`.
pub fn multivariate_energy_error(
    coeffs: &[LinearMapCoefficients],
    alphas: &[f64],
    betas: &[f64],
) -> Result<DMatrix<f64>> {
    let d = coeffs.len();
    if alphas.len() != d || betas.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: alphas.len().max(betas.len()),
        });
    }
    let mut m = DMatrix::<f64>::zeros(2 * d, 2 * d);
    let mut sd = vec![0.0; 2 * d];
    for (j, c) in coeffs.iter().enumerate() {
        let [[a, b], [cc, dd]] = c.matrix();
        m[(j, j)] = a;
        m[(j, d + j)] = b;
        m[(d + j, j)] = cc;
        m[(d + j, d + j)] = dd;
        sd[j] = alphas[j];
        sd[d + j] = betas[j];
    }
    let whitened = DMatrix::from_fn(2 * d, 2 * d, |i, k| m[(i, k)] * sd[k] / sd[i]);
    Ok(whitened.transpose() * &whitened - DMatrix::identity(2 * d, 2 * d))
}

/// Largest entry of the whitened multivariate energy-error matrix for the
/// family at `h_σ = h_b(b)` on `d` oscillators with the given `α_j`, `β_j`.
pub fn multivariate_map_check(b: f64, alphas: &[f64], betas: &[f64]) -> Result<f64> {
    let h_b = step_size_hb(b)?;
    if alphas.len() != betas.len() {
        return Err(Error::DimensionMismatch {
            expected: alphas.len(),
            found: betas.len(),
        });
    }
    let coeffs = alphas
        .iter()
        .zip(betas)
        .map(|(&a, &bt)| {
            check_positive("alpha", a)?;
            check_positive("beta", bt)?;
            family_coefficients(b, h_b, bt / a)
        })
        .collect::<Result<Vec<_>>>()?;
    let e = multivariate_energy_error(&coeffs, alphas, betas)?;
    Ok(e.amax())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn b_min_constant() {
        assert!(close(B_MIN, (3.0 - 5f64.sqrt()) / 4.0, 1e-16));
        assert!(close(B_BCS, (3.0 - 3f64.sqrt()) / 6.0, 1e-16));
    }

    #[test]
    fn sv_examples() {
        let c = sv_coefficients(2.0, 1.0).unwrap();
        assert_eq!(c.p_h, -1.0);
        let c = sv_coefficients(0.1, 1.0).unwrap();
        assert!(close(c.p_h, 0.995, 1e-15));
        assert!(close(c.e_h, 0.000125, 1e-15));
        assert!(close(c.q_h, 0.099875, 1e-15));
        assert!(sv_coefficients(0.0, 1.0).is_err());
        assert!(sv_coefficients(1.0, -1.0).is_err());
    }

    #[test]
    fn family_examples() {
        let c = family_coefficients(0.25, 1.0, 1.0).unwrap();
        assert!(close(c.p_h, 0.53125, 1e-15));
        for sigma in [0.1, 1.0, 10.0] {
            let c = family_coefficients(0.22, step_size_hb(0.22).unwrap(), sigma).unwrap();
            assert!(c.e_h.abs() <= 1e-13, "e_h = {}", c.e_h);
        }
        assert!(matches!(
            family_coefficients(0.0, 1.0, 1.0),
            Err(Error::DegenerateFamily(_))
        ));
        assert!(matches!(
            family_coefficients(0.5, 1.0, 1.0),
            Err(Error::DegenerateFamily(_))
        ));
    }

    /// Brute-force product of the five sub-flow matrices.
    fn composed_family(b: f64, h: f64, alpha: f64, beta: f64) -> [[f64; 2]; 2] {
        let kick = |t: f64| [[1.0, 0.0], [-t / (alpha * alpha), 1.0]];
        let drift = |t: f64| [[1.0, t / (beta * beta)], [0.0, 1.0]];
        let mul = |a: [[f64; 2]; 2], b: [[f64; 2]; 2]| {
            [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ]
        };
        let mut m = kick(b * h);
        m = mul(drift(h / 2.0), m);
        m = mul(kick((1.0 - 2.0 * b) * h), m);
        m = mul(drift(h / 2.0), m);
        mul(kick(b * h), m)
    }

    #[test]
    fn family_matrix_matches_composition() {
        for &(b, hs, alpha, beta) in &[
            (0.2, 0.7, 1.0, 1.0),
            (0.25, 1.3, 0.5, 2.0),
            (0.1, 2.2, 3.0, 0.25),
            (0.4, 0.05, 1.0, 7.0),
            (-0.3, 1.5, 2.0, 2.0),
        ] {
            let c = family_coefficients(b, hs, beta / alpha).unwrap();
            let m = c.matrix();
            let brute = composed_family(b, hs * alpha * beta, alpha, beta);
            for i in 0..2 {
                for k in 0..2 {
                    assert!(
                        close(m[i][k], brute[i][k], 1e-12 * (1.0 + brute[i][k].abs())),
                        "b={b} hs={hs} entry ({i},{k}): {} vs {}",
                        m[i][k],
                        brute[i][k]
                    );
                }
            }
        }
    }

    #[test]
    fn r_polynomial_examples() {
        let b = (3.0 - 5f64.sqrt()) / 4.0;
        assert!(close(r_polynomial(b, 0.0), 0.0, 1e-15));
        assert!(close(
            r_polynomial(0.22, step_size_hb(0.22).unwrap()),
            0.0,
            1e-13
        ));
        assert!(close(r_polynomial(0.25, 1.0), 0.21875, 1e-15));
    }

    #[test]
    fn hb_examples() {
        assert!(close(step_size_hb(0.25).unwrap(), 2f64.sqrt() * 2.0, 1e-15));
        assert!(close(step_size_hb(B_BCS).unwrap(), 1.8612, 1e-4));
        assert!(close(step_size_hb(0.2008).unwrap(), 1.3432, 1e-3));
        assert!(step_size_hb(B_MIN + 1e-12).unwrap() < 1e-4);
        assert!(step_size_hb(B_MIN).is_err());
        assert!(step_size_hb(0.2500001).is_err());
        assert!(step_size_hb(f64::NAN).is_err());
    }

    #[test]
    fn stability_bound_holds_and_is_tight_at_quarter() {
        for k in 1..=200 {
            let b = B_MIN + (B_MAX - B_MIN) * k as f64 / 200.0;
            let hb = step_size_hb(b).unwrap();
            assert!(hb <= stability_bound(b).unwrap() + 1e-12);
        }
        assert!(close(
            step_size_hb(0.25).unwrap(),
            stability_bound(0.25).unwrap(),
            1e-12
        ));
    }

    #[test]
    fn presets_match_independent_roots() {
        // Reference roots computed with an independent bracketing solver
        // (Brent) and bounded scalar minimization.
        let presets = b_presets();
        let get = |n| presets.iter().find(|p| p.name == n).unwrap();
        assert!(close(
            get(PresetName::BStab).b,
            0.200_804_546_203_741_4,
            1e-10
        ));
        assert!(close(
            get(PresetName::BStab).h_b,
            1.343_276_080_630_357,
            1e-8
        ));
        assert!(close(get(PresetName::BMl).b, 0.193_183_327_7, 1e-9));
        assert!(close(get(PresetName::BMl).h_b, 0.654_860_4, 1e-6));
        assert!(close(trace_zero_b(), 0.203_947_945_777_144_84, 1e-10));
        assert_eq!(get(PresetName::BMax).h_b, step_size_hb(0.25).unwrap());
        for p in &presets {
            assert!(p.b > B_MIN && p.b <= B_MAX);
        }
    }

    #[test]
    fn b_ml_by_grid_scan() {
        let f = |b: f64| {
            let (k1, k2) = leading_error_terms(b);
            k1 * k1 + k2 * k2
        };
        let n = 200_000;
        let best = (0..=n)
            .map(|i| B_MIN + (B_MAX - B_MIN) * i as f64 / n as f64)
            .min_by(|a, b| f(*a).total_cmp(&f(*b)))
            .unwrap();
        assert!(close(b_ml(), best, 1e-6));
    }

    #[test]
    fn det_identity_everywhere() {
        for i in 1..=40 {
            let hs = 0.1 * i as f64;
            for sigma in [0.1, 0.5, 1.0, 3.0, 10.0] {
                assert!(sv_coefficients(hs, sigma).unwrap().det_residual().abs() <= 1e-12);
                for b in [-0.2, 0.1, 0.2, 0.25, 0.3, 0.45] {
                    let c = family_coefficients(b, hs, sigma).unwrap();
                    let scale = 1.0 + c.matrix().iter().flatten().map(|v| v * v).sum::<f64>();
                    assert!(
                        c.det_residual().abs() <= 1e-12 * scale,
                        "b={b} hs={hs} s={sigma}"
                    );
                }
            }
        }
    }

    #[test]
    fn energy_error_matrix_vanishes_at_hb() {
        for k in 1..=20 {
            let b = B_MIN + (B_MAX - B_MIN) * k as f64 / 20.0;
            for (alpha, beta) in [(1.0, 1.0), (0.5, 2.0), (3.0, 0.7)] {
                let c = family_coefficients(b, step_size_hb(b).unwrap(), beta / alpha).unwrap();
                let e = energy_error_matrix(&c, alpha, beta).unwrap();
                let scale = 1.0 / (alpha * alpha) + 1.0 / (beta * beta);
                for v in e.iter().flatten() {
                    assert!(v.abs() <= 1e-12 * scale.max(1.0), "b={b} entry {v}");
                }
            }
        }
    }

    #[test]
    fn energy_error_matrix_sv_offdiagonal() {
        let c = sv_coefficients(0.5, 1.0).unwrap();
        let e = energy_error_matrix(&c, 1.0, 1.0).unwrap();
        assert!(close(e[0][1], 2.0 * c.e_h * c.p_h, 1e-15));
        assert_eq!(e[0][1], e[1][0]);
        assert!(energy_error_matrix(&c, 1.0, 2.0).is_err());
    }

    #[test]
    fn energy_error_matrix_matches_direct_product() {
        let (alpha, beta) = (0.8, 1.7);
        let c = family_coefficients(0.3, 1.1, beta / alpha).unwrap();
        let m = c.matrix();
        let dinv = [1.0 / (alpha * alpha), 1.0 / (beta * beta)];
        let e = energy_error_matrix(&c, alpha, beta).unwrap();
        for i in 0..2 {
            for k in 0..2 {
                let direct = m[0][i] * dinv[0] * m[0][k] + m[1][i] * dinv[1] * m[1][k]
                    - if i == k { dinv[i] } else { 0.0 };
                assert!(close(e[i][k], direct, 1e-13));
            }
        }
    }

    /// `E[½ Y₀ᵀ A Y₀] = ½ tr(A D)` for `Y₀ ~ N(0, D)`.
    fn trace_expectation(a: [[f64; 2]; 2], alpha: f64, beta: f64) -> f64 {
        0.5 * (a[0][0] * alpha * alpha + a[1][1] * beta * beta)
    }

    #[test]
    fn one_step_expectation_matches_trace_oracle() {
        for (hs, alpha, beta) in [(0.3, 1.0, 1.0), (1.0, 0.5, 1.0), (1.7, 2.0, 0.3)] {
            let c = sv_coefficients(hs, beta / alpha).unwrap();
            let e = energy_error_matrix(&c, alpha, beta).unwrap();
            let analysis = expected_delta(&c, 1).unwrap();
            let oracle = trace_expectation(e, alpha, beta);
            assert!(close(
                analysis.expected_delta,
                oracle,
                1e-12 * oracle.max(1.0)
            ));
        }
    }

    #[test]
    fn expected_delta_examples() {
        let c = sv_coefficients(0.2, 1.0).unwrap();
        assert!(close(
            expected_delta(&c, 5).unwrap().expected_delta,
            1e-5,
            1e-17
        ));
        let c = sv_coefficients(1.0, 2.0).unwrap();
        assert!(close(c.e_h, 0.1, 1e-15));
        assert!(close(
            expected_delta(&c, 1).unwrap().expected_delta,
            0.03125,
            1e-15
        ));
        let b = 0.21;
        let c = family_coefficients(b, step_size_hb(b).unwrap(), 1.0).unwrap();
        assert!(expected_delta(&c, 7).unwrap().expected_delta < 1e-28);
        assert!(expected_delta(&c, 0).is_err());
    }

    #[test]
    fn trig_form_agrees_in_stable_regime() {
        for i in 1..60 {
            let hs = 0.05 * i as f64;
            for sigma in [0.2, 1.0, 4.0] {
                let mut sets = vec![sv_coefficients(hs, sigma).unwrap()];
                for b in [0.15, 0.2, 0.25, 0.35] {
                    sets.push(family_coefficients(b, hs, sigma).unwrap());
                }
                for c in sets {
                    let a = expected_delta(&c, 3).unwrap();
                    if c.p_h.abs() < 1.0 - 1e-8 {
                        let t = a.trig.expect("stable map has a trig form");
                        assert!(close(a.expected_delta, t.expected_delta, 1e-10));
                    } else {
                        assert!(a.trig.is_none());
                    }
                }
            }
        }
    }

    #[test]
    fn trajectory_expectation_matches_trace_oracle() {
        // Exact mean over N steps from ½ tr((M^N)ᵀ D⁻¹ M^N D) - 1.
        for (hs, sigma, n) in [(0.2, 1.0, 5), (0.5, 1.0, 2), (1.3, 0.4, 9), (2.5, 1.0, 4)] {
            let c = sv_coefficients(hs, sigma).unwrap();
            let mut mn = [[1.0, 0.0], [0.0, 1.0]];
            let m = c.matrix();
            for _ in 0..n {
                mn = [
                    [
                        m[0][0] * mn[0][0] + m[0][1] * mn[1][0],
                        m[0][0] * mn[0][1] + m[0][1] * mn[1][1],
                    ],
                    [
                        m[1][0] * mn[0][0] + m[1][1] * mn[1][0],
                        m[1][0] * mn[0][1] + m[1][1] * mn[1][1],
                    ],
                ];
            }
            let alpha = 1.0;
            let beta = sigma;
            let d = [alpha * alpha, beta * beta];
            let mut tr = 0.0;
            for k in 0..2 {
                for i in 0..2 {
                    tr += mn[i][k] * mn[i][k] * d[k] / d[i];
                }
            }
            let oracle = 0.5 * tr - 1.0;
            let got = trajectory_expected_delta(&c, n).unwrap();
            assert!(
                close(got, oracle, 1e-12 * oracle.abs().max(1.0)),
                "{got} vs {oracle}"
            );
        }
        let c = sv_coefficients(0.4, 1.3).unwrap();
        assert!(close(
            trajectory_expected_delta(&c, 1).unwrap(),
            expected_delta(&c, 1).unwrap().expected_delta,
            1e-18
        ));
    }

    #[test]
    fn power_matches_repeated_product() {
        let c = family_coefficients(0.3, 0.9, 1.4).unwrap();
        let p = c.power(6).matrix();
        let m = c.matrix();
        let mut acc = [[1.0, 0.0], [0.0, 1.0]];
        for _ in 0..6 {
            acc = [
                [
                    m[0][0] * acc[0][0] + m[0][1] * acc[1][0],
                    m[0][0] * acc[0][1] + m[0][1] * acc[1][1],
                ],
                [
                    m[1][0] * acc[0][0] + m[1][1] * acc[1][0],
                    m[1][0] * acc[0][1] + m[1][1] * acc[1][1],
                ],
            ];
        }
        for i in 0..2 {
            for k in 0..2 {
                assert!(close(p[i][k], acc[i][k], 1e-12));
            }
        }
    }

    #[test]
    fn multivariate_check_examples() {
        let e = multivariate_map_check(0.25, &[1.0, 0.25, 1.0 / 9.0], &[1.0; 3]).unwrap();
        assert!(e <= 1e-12, "{e}");
        let alphas: Vec<f64> = (1..=256).map(|j| 1.0 / (j * j) as f64).collect();
        let e = multivariate_map_check(0.2008, &alphas, &vec![1.0; 256]).unwrap();
        assert!(e <= 1e-12, "{e}");
        assert!(multivariate_map_check(0.3, &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn multivariate_reduces_to_univariate() {
        let (alpha, beta) = (0.6, 1.9);
        let c = sv_coefficients(0.8, beta / alpha).unwrap();
        let e2 = energy_error_matrix(&c, alpha, beta).unwrap();
        let m = multivariate_energy_error(&[c], &[alpha], &[beta]).unwrap();
        let sd = [alpha, beta];
        for i in 0..2 {
            for k in 0..2 {
                assert!(close(m[(i, k)], e2[i][k] * sd[i] * sd[k], 1e-14));
            }
        }
    }
}
