//! Effective dimensionality `N(λ) = Tr[(T + λI)^{-1} T] = Σ t_n / (t_n + λ)`.
//!
//! For a spectrum that follows `t_n = β n^{-b}` exactly, the infinite sum is
//! evaluated as an explicit head `n < M` plus an Euler–Maclaurin tail. The
//! tail integral is `∫_M^∞ β/(β + λx^b) dx`, which after `u = x (λ/β)^{1/b}`
//! becomes a scaled `∫_U^∞ du / (1 + u^b)`; that piece is computed by
//! quadrature on `[U, 2]` and a convergent alternating series beyond `2`, so
//! no step relies on the closed form `(π/b)/sin(π/b)`.
//!
//! The same module carries the closed-form bounds:
//!
//! * [`corrected_bound`]: `Q λ^{-1/b}`, a valid upper bound.
//! * [`claimed_bound`]: `β b/(b−1) λ^{-1/b}`, the historical bound. It is
//!   **not** an upper bound in general and is kept only for comparison.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{require_positive, Error, Result};
use crate::quadrature;
use crate::spectral::{pi_over_b_ratio, DecayModel, Spectrum};

/// Tolerance used when callers do not supply one.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Value of `N(λ)` together with a bound on how much it may undershoot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffDimResult {
    /// Lower estimate; the true value lies in `[value, value + truncation_error_bound]`.
    pub value: f64,
    pub truncation_error_bound: f64,
    /// Number of eigenvalue terms summed explicitly.
    pub terms_summed: usize,
}

/// Bernoulli numbers `B_2, B_4, …, B_24`.
pub(crate) const BERNOULLI_EVEN: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

const INITIAL_HEAD: usize = 32;
const MAX_HEAD: usize = 1 << 24;

/// Exact `N(λ)` for a spectrum.
///
/// With a decay model the full infinite series `Σ_{n≥1} β/(β + λ n^b)` is
/// evaluated (stored eigenvalues are not consulted); without one only the
/// stored eigenvalues are summed and the reported error is zero.
pub fn effective_dimension_exact(spectrum: &Spectrum, lambda: f64, tol: f64) -> Result<EffDimResult> {
    require_positive("lambda", lambda)?;
    require_positive("tol", tol)?;
    match spectrum.decay_model() {
        Some(model) => effective_dimension_model(model, lambda, tol),
        None => {
            let value = spectrum
                .eigenvalues()
                .iter()
                .rev()
                .map(|t| t / (t + lambda))
                .sum();
            Ok(EffDimResult {
                value,
                truncation_error_bound: 0.0,
                terms_summed: spectrum.len(),
            })
        }
    }
}

/// `N(λ)` for the infinite spectrum `t_n = β n^{-b}`.
///
/// `tol` is an absolute tolerance, except that it is floored at about
/// `1e3·ε·N(λ)` when `N(λ)` is so large that `tol` is below its resolution.
pub fn effective_dimension_model(model: DecayModel, lambda: f64, tol: f64) -> Result<EffDimResult> {
    let model = DecayModel::new(model.beta, model.b)?;
    require_positive("lambda", lambda)?;
    require_positive("tol", tol)?;

    let mut head_len = INITIAL_HEAD;
    loop {
        if let Some((estimate, err)) = try_model_sum(model, lambda, head_len, tol)? {
            return Ok(EffDimResult {
                value: (estimate - err).max(0.0),
                truncation_error_bound: 2.0 * err,
                terms_summed: head_len - 1,
            });
        }
        if head_len >= MAX_HEAD {
            return Err(Error::Quadrature(format!(
                "tail expansion did not reach tol={tol:e} (beta={}, b={}, lambda={lambda:e})",
                model.beta, model.b
            )));
        }
        head_len *= 4;
    }
}

/// Sum with an explicit head `1..head_len` and an Euler–Maclaurin tail from
/// `head_len`. Returns `None` if the asymptotic tail terms do not get small
/// enough, in which case the head has to be lengthened.
fn try_model_sum(model: DecayModel, lambda: f64, head_len: usize, tol: f64) -> Result<Option<(f64, f64)>> {
    let DecayModel { beta, b } = model;
    let ratio = lambda / beta;
    let f = |x: f64| 1.0 / (1.0 + ratio * x.powf(b));

    let head: f64 = (1..head_len).rev().map(|n| f(n as f64)).sum();
    let m = head_len as f64;

    // Taylor coefficients (in t, x = m(1 + t)) of s(x) = ratio·x^b and of
    // g = 1/(1 + s); g_k / m^k = f^{(k)}(m) / k!.
    let order = 2 * BERNOULLI_EVEN.len();
    let scale = ratio * m.powf(b);
    let mut s = vec![0.0; order];
    let mut binom = 1.0;
    for (k, sk) in s.iter_mut().enumerate() {
        if k > 0 {
            binom *= (b - (k as f64 - 1.0)) / k as f64;
        }
        *sk = scale * binom;
    }
    let a0 = 1.0 + s[0];
    let mut g = vec![0.0; order];
    g[0] = 1.0 / a0;
    for k in 1..order {
        let acc: f64 = (1..=k).map(|i| s[i] * g[k - i]).sum();
        g[k] = -acc / a0;
    }

    let (integral, integral_err) = tail_integral(beta, b, lambda, m, tol)?;
    let mut tail = integral + 0.5 * g[0];
    let target = 1e-3 * tol;
    let mut last = f64::INFINITY;
    let mut converged = false;
    for (j, bern) in BERNOULLI_EVEN.iter().enumerate() {
        let k = 2 * j + 1;
        let term = bern / (2.0 * (j + 1) as f64) * g[k] / m.powi(k as i32);
        if term.abs() > last {
            break;
        }
        tail -= term;
        last = term.abs();
        if last <= target.max(1e-17 * (head + tail).abs()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Ok(None);
    }

    let estimate = head + tail;
    let rounding = f64::EPSILON * (head_len as f64 * head + 16.0 * tail.abs());
    let err = last + integral_err + rounding;
    if 2.0 * err > resolution_floor(tol, estimate) {
        return Ok(None);
    }
    Ok(Some((estimate, err)))
}

/// An absolute `tol` finer than the value's own floating-point resolution
/// cannot be met; the effective target is floored there.
fn resolution_floor(tol: f64, value: f64) -> f64 {
    tol.max(1024.0 * f64::EPSILON * value.abs())
}

/// `∫_m^∞ β/(β + λ x^b) dx` with an absolute error estimate.
fn tail_integral(beta: f64, b: f64, lambda: f64, m: f64, tol: f64) -> Result<(f64, f64)> {
    let ratio = lambda / beta;
    let scale = ratio.powf(-1.0 / b);
    let u0 = m * ratio.powf(1.0 / b);
    let (value, err) = unit_tail_integral(b, u0, 1e-4 * tol / scale)?;
    Ok((scale * value, scale * err))
}

/// `∫_u^∞ dv / (1 + v^b)` for `b > 1`, `u ≥ 0`.
pub(crate) fn unit_tail_integral(b: f64, u: f64, abs_tol: f64) -> Result<(f64, f64)> {
    const SPLIT: f64 = 2.0;
    if u >= SPLIT {
        return Ok(power_tail_series(b, u));
    }
    let q = quadrature::integrate(
        |v| 1.0 / (1.0 + v.powf(b)),
        u,
        SPLIT,
        abs_tol.max(1e-300),
        1e-14,
    )?;
    let (series, series_err) = power_tail_series(b, SPLIT);
    Ok((q.value + series, q.abs_error + series_err))
}

/// `∫_u^∞ dv/(1+v^b) = Σ_{k≥0} (−1)^k u^{1−b(k+1)} / (b(k+1) − 1)` for `u > 1`.
fn power_tail_series(b: f64, u: f64) -> (f64, f64) {
    debug_assert!(u > 1.0);
    let inv_ub = u.powf(-b);
    let mut power = u.powf(1.0 - b);
    let mut sum = 0.0;
    let mut sign = 1.0;
    let mut k = 0usize;
    loop {
        let term = power / (b * (k + 1) as f64 - 1.0);
        sum += sign * term;
        power *= inv_ub;
        let next = power / (b * (k + 2) as f64 - 1.0);
        if next <= 1e-17 * sum.abs() || k > 10_000 {
            return (sum, next + 2.0 * f64::EPSILON * sum.abs());
        }
        sign = -sign;
        k += 1;
    }
}

fn require_finite_b(b: f64) -> Result<()> {
    if b.is_infinite() && b > 0.0 {
        return Err(Error::invalid(
            "b",
            "bound form requires finite b; for b = inf use Q = beta directly",
        ));
    }
    if !(b.is_finite() && b > 1.0) {
        return Err(Error::invalid("b", format!("decay exponent must satisfy b > 1, got {b}")));
    }
    Ok(())
}

/// Corrected upper bound `N(λ) ≤ β^{1/b} (π/b)/sin(π/b) λ^{-1/b}`.
pub fn corrected_bound(beta: f64, b: f64, lambda: f64) -> Result<f64> {
    require_positive("beta", beta)?;
    require_finite_b(b)?;
    require_positive("lambda", lambda)?;
    Ok(beta.powf(1.0 / b) * pi_over_b_ratio(b) * lambda.powf(-1.0 / b))
}

/// Historical bound `(β b/(b−1)) λ^{-1/b}`.
///
/// This is **incorrect** as an upper bound on `N(λ)` (it falls below the true
/// value for small `β`); it exists only to reproduce comparisons against it.
pub fn claimed_bound(beta: f64, b: f64, lambda: f64) -> Result<f64> {
    require_positive("beta", beta)?;
    require_finite_b(b)?;
    require_positive("lambda", lambda)?;
    Ok(beta * b / (b - 1.0) * lambda.powf(-1.0 / b))
}

/// Closed form of `∫₀^∞ dτ / (β + τ^b) = β^{(1−b)/b} (π/b)/sin(π/b)`.
pub fn integral_value(beta: f64, b: f64) -> Result<f64> {
    require_positive("beta", beta)?;
    require_finite_b(b)?;
    Ok(beta.powf((1.0 - b) / b) * pi_over_b_ratio(b))
}

/// `∫₀^∞ dτ/(β + τ^b) − b/(b−1)`. Positive values are counterexamples to the
/// inequality `∫₀^∞ dτ/(β + τ^b) ≤ b/(b−1)`.
pub fn wrong_inequality_gap(beta: f64, b: f64) -> Result<f64> {
    Ok(integral_value(beta, b)? - b / (b - 1.0))
}

/// Closed-form `β* = ((b−1)/b · (π/b)/sin(π/b))^{b/(b−1)}`: the gap is
/// positive exactly for `β < β*`.
pub fn counterexample_threshold(b: f64) -> Result<f64> {
    require_finite_b(b)?;
    Ok(((b - 1.0) / b * pi_over_b_ratio(b)).powf(b / (b - 1.0)))
}

/// Root of [`wrong_inequality_gap`] in `β`, located by bisection on `ln β`.
pub fn counterexample_threshold_bisection(b: f64) -> Result<f64> {
    require_finite_b(b)?;
    let gap = |log_beta: f64| wrong_inequality_gap(log_beta.exp(), b);
    // gap decreases in β: +∞ as β → 0, −b/(b−1) as β → ∞
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    while gap(lo)? <= 0.0 {
        lo -= 8.0;
        if lo < -700.0 {
            return Err(Error::Quadrature("no positive gap found while bracketing".into()));
        }
    }
    while gap(hi)? > 0.0 {
        hi += 8.0;
        if hi > 700.0 {
            return Err(Error::Quadrature("no negative gap found while bracketing".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// One row of the bound comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub lambda: f64,
    pub exact: f64,
    pub corrected: f64,
    pub claimed: f64,
}

/// Exact `N(λ)`, the corrected bound and the historical bound over a grid of `λ`.
/// Rows come back in grid order.
pub fn bound_comparison_table(beta: f64, b: f64, lambda_grid: &[f64], tol: f64) -> Result<Vec<BoundRow>> {
    if lambda_grid.is_empty() {
        return Err(Error::invalid("lambda_grid", "grid must contain at least one value"));
    }
    let model = DecayModel::new(beta, b)?;
    lambda_grid
        .par_iter()
        .map(|&lambda| {
            Ok(BoundRow {
                lambda,
                exact: effective_dimension_model(model, lambda, tol)?.value,
                corrected: corrected_bound(beta, b, lambda)?,
                claimed: claimed_bound(beta, b, lambda)?,
            })
        })
        .collect()
}

/// Logarithmically spaced grid from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    require_positive("lambda_min", lo)?;
    require_positive("lambda_max", hi)?;
    if points == 0 {
        return Err(Error::invalid("points", "must be at least 1"));
    }
    if hi < lo {
        return Err(Error::invalid("lambda_max", "must be >= lambda_min"));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, z) = (lo.ln(), hi.ln());
    let step = (z - a) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| match i {
            0 => lo,
            i if i + 1 == points => hi,
            i => (a + step * i as f64).exp(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::polynomial_spectrum;
    use std::f64::consts::PI;

    // Σ_{n≥1} a²/(a² + n²) = (π a coth(π a) − 1)/2
    fn coth_oracle(a: f64) -> f64 {
        (PI * a / (PI * a).tanh() - 1.0) / 2.0
    }

    fn brute_force(beta: f64, b: f64, lambda: f64, n: usize) -> f64 {
        (1..=n).rev().map(|k| beta / (beta + lambda * (k as f64).powf(b))).sum()
    }

    #[test]
    fn single_eigenvalue() {
        let s = Spectrum::from_eigenvalues(vec![1.0]).unwrap();
        let r = effective_dimension_exact(&s, 1.0, DEFAULT_TOL).unwrap();
        assert_eq!(r.value, 0.5);
        assert_eq!(r.truncation_error_bound, 0.0);
        assert_eq!(r.terms_summed, 1);
    }

    #[test]
    fn matches_coth_closed_form() {
        // β=0.1, b=2, λ=1e-3 ⇒ a = 10
        let s = polynomial_spectrum(0.1, 2.0, 1).unwrap();
        let r = effective_dimension_exact(&s, 1e-3, 1e-6).unwrap();
        let oracle = coth_oracle(10.0);
        assert!((oracle - 15.2080).abs() < 1e-4);
        assert!(r.value <= oracle + 1e-12 && oracle <= r.value + r.truncation_error_bound + 1e-12);
        assert!((r.value - oracle).abs() < 1e-9);

        let r = effective_dimension_model(DecayModel::new(1.0, 2.0).unwrap(), 1.0, DEFAULT_TOL).unwrap();
        assert!((r.value - coth_oracle(1.0)).abs() < 1e-9);
        assert!((r.value - 1.0767).abs() < 1e-4);
    }

    #[test]
    fn matches_brute_force_with_integral_tail() {
        // brute force to 10^7 terms, remaining tail bracketed by integrals
        let (beta, b, lambda) = (0.1, 2.0, 1e-3);
        let n = 10_000_000usize;
        let partial = brute_force(beta, b, lambda, n);
        let upper_tail = beta / lambda / (n as f64); // ∫_n^∞ β/(λx²)
        let r = effective_dimension_model(DecayModel::new(beta, b).unwrap(), lambda, 1e-9).unwrap();
        assert!(r.value >= partial - 1e-9);
        assert!(r.value <= partial + upper_tail + 1e-9);
    }

    #[test]
    fn heavy_tail_and_steep_decay() {
        for &(beta, b, lambda) in &[(10.0, 1.05, 1e-6), (1e-3, 20.0, 1.0), (10.0, 20.0, 1e-6), (1.0, 3.0, 1e-3)] {
            let r = effective_dimension_model(DecayModel::new(beta, b).unwrap(), lambda, 1e-9).unwrap();
            let ub = corrected_bound(beta, b, lambda).unwrap();
            assert!(r.value <= ub, "{beta} {b} {lambda}: {} > {ub}", r.value);
            assert!(ub - r.value <= 1.0 + 1e-9);
            assert!(r.truncation_error_bound <= resolution_floor(1e-9, r.value));
        }
    }

    #[test]
    fn moderate_case_against_brute_force_b3() {
        // b = 3 tail beyond 2e6 terms is below β/(2λ n²) ≈ 1e-10
        let (beta, b, lambda) = (1.0, 3.0, 1e-3);
        let partial = brute_force(beta, b, lambda, 2_000_000);
        let r = effective_dimension_model(DecayModel::new(beta, b).unwrap(), lambda, 1e-10).unwrap();
        assert!((r.value - partial).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_arguments() {
        let s = polynomial_spectrum(1.0, 2.0, 4).unwrap();
        assert!(effective_dimension_exact(&s, 0.0, 1e-9).is_err());
        assert!(effective_dimension_exact(&s, -1.0, 1e-9).is_err());
        assert!(effective_dimension_exact(&s, 1.0, 0.0).is_err());
        assert!(effective_dimension_model(DecayModel { beta: 1.0, b: 1.0 }, 1.0, 1e-9).is_err());
    }

    #[test]
    fn bound_examples() {
        assert!((corrected_bound(0.1, 2.0, 1e-3).unwrap() - 15.7080).abs() < 1e-4);
        let expected = PI / (3.0 * (PI / 3.0).sin()) * 10.0;
        assert!((corrected_bound(1.0, 3.0, 1e-3).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 12.0920).abs() < 1e-4);
        assert!((corrected_bound(1.0, 2.0, 1.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(corrected_bound(1.0, f64::INFINITY, 1.0).is_err());

        assert!((claimed_bound(0.1, 2.0, 1e-3).unwrap() - 0.2 * 10f64.powf(1.5)).abs() < 1e-12);
        assert!((claimed_bound(1.0, 3.0, 1e-3).unwrap() - 15.0).abs() < 1e-12);
        assert_eq!(claimed_bound(1.0, 2.0, 1.0).unwrap(), 2.0);
        assert!(claimed_bound(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn integral_examples() {
        assert!((integral_value(1.0, 2.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((integral_value(1.0, 4.0).unwrap() - 1.110721).abs() < 1e-6);
        assert!((integral_value(0.1, 2.0).unwrap() - 4.96729).abs() < 1e-5);
        assert!(integral_value(1.0, 1.0).is_err());
        assert!(integral_value(1.0, 0.5).is_err());
    }

    #[test]
    fn unit_tail_integral_agrees_with_closed_form_from_zero() {
        for &b in &[1.1, 1.5, 2.0, 3.0, 7.5, 20.0] {
            let (v, _) = unit_tail_integral(b, 0.0, 1e-14).unwrap();
            assert!((v / pi_over_b_ratio(b) - 1.0).abs() < 1e-12, "b={b}");
        }
    }

    #[test]
    fn gap_examples() {
        assert!((wrong_inequality_gap(0.1, 2.0).unwrap() - 2.96729).abs() < 1e-5);
        assert!((wrong_inequality_gap(1.0, 2.0).unwrap() - (PI / 2.0 - 2.0)).abs() < 1e-12);
        let threshold = (PI / 4.0).powi(2);
        assert!(wrong_inequality_gap(threshold, 2.0).unwrap().abs() < 1e-10);
    }

    #[test]
    fn thresholds_agree() {
        for &b in &[1.05, 1.5, 2.0, 3.0, 5.0] {
            let closed = counterexample_threshold(b).unwrap();
            let bisected = counterexample_threshold_bisection(b).unwrap();
            assert!(((closed - bisected) / closed).abs() < 1e-8, "b={b}");
        }
        assert!((counterexample_threshold(2.0).unwrap() - 0.61685).abs() < 1e-5);
    }

    #[test]
    fn table_examples() {
        let rows = bound_comparison_table(0.1, 2.0, &[1e-3], DEFAULT_TOL).unwrap();
        let r = rows[0];
        assert!((r.exact - 15.208).abs() < 1e-3);
        assert!((r.corrected - 15.708).abs() < 1e-3);
        assert!((r.claimed - 6.325).abs() < 1e-3);
        assert!(r.claimed < r.exact && r.exact < r.corrected);

        let r = bound_comparison_table(1.0, 2.0, &[1.0], DEFAULT_TOL).unwrap()[0];
        assert!((r.exact - 1.0767).abs() < 1e-4);
        assert!(r.exact < r.corrected && r.corrected < r.claimed);
        assert_eq!(r.claimed, 2.0);

        assert!(bound_comparison_table(1.0, 2.0, &[], DEFAULT_TOL).is_err());
    }

    #[test]
    fn table_preserves_grid_order() {
        let grid = log_grid(1e-5, 1.0, 17).unwrap();
        let rows = bound_comparison_table(0.3, 2.5, &grid, DEFAULT_TOL).unwrap();
        assert_eq!(rows.iter().map(|r| r.lambda).collect::<Vec<_>>(), grid);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-4, 1e-1, 4).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], 1e-4);
        assert_eq!(g[3], 1e-1);
        assert!((g[1] - 1e-3).abs() < 1e-15);
        assert_eq!(log_grid(1e-3, 1.0, 1).unwrap(), vec![1e-3]);
        assert!(log_grid(1.0, 1e-3, 3).is_err());
    }
}
