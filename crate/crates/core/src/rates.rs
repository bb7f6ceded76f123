//! The high-probability excess-risk bound for KRR and the regularization
//! schedules that turn it into the rate `ℓ^{-bc/(bc+1)}`.
//!
//! With probability at least `1 − η`,
//!
//! ```text
//! E[f_z^λ] − E[f_H] ≤ C_η ( Rλ^c + κ²R λ^{c−2}/ℓ² + κR λ^{c−1}/ℓ + κM² λ^{-1}/ℓ² + Σ²Q λ^{-1/b}/ℓ )
//! ```
//!
//! provided `ℓ ≥ 2 C_η κ Q λ^{-(b+1)/b}` and `λ ≤ ‖T‖` (checked against the
//! lower bound `α ≤ ‖T‖`). Violated conditions are reported as flags so the
//! bound can still be tabulated outside its validity region.

use serde::Serialize;

use crate::error::{require_positive, Error, Result};
use crate::spectral::{DecayExponent, PriorParams};

/// Leading factor of the confidence constant `C_η = 96 ln²(6/η)`.
pub const C_ETA_FACTOR: f64 = 96.0;

/// `C_η = 96 ln²(6/η)`.
///
/// The probability statement needs `η ∈ (0, 1)`, but the expression is
/// accepted on all of `(0, 6)` where `ln(6/η) > 0`; for `η ≥ 1` the guarantee
/// is vacuous while the constant is still well defined.
pub fn c_eta(eta: f64) -> Result<f64> {
    validate_eta(eta)?;
    let log = (6.0 / eta).ln();
    Ok(C_ETA_FACTOR * log * log)
}

fn validate_eta(eta: f64) -> Result<()> {
    if eta.is_finite() && eta > 0.0 && eta < 6.0 {
        Ok(())
    } else {
        Err(Error::invalid("eta", format!("confidence level must lie in (0, 6), got {eta}")))
    }
}

/// The five terms of the risk bound with validity flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundBreakdown {
    /// `R λ^c`
    pub term_approx: f64,
    /// `κ² R λ^{c−2} / ℓ²`
    pub term_b: f64,
    /// `κ R λ^{c−1} / ℓ`
    pub term_a: f64,
    /// `κ M² λ^{-1} / ℓ²`
    pub term_noise_m: f64,
    /// `Σ² Q λ^{-1/b} / ℓ`
    pub term_effdim: f64,
    pub total: f64,
    pub c_eta: f64,
    /// `ℓ ≥ 2 C_η κ Q λ^{-(b+1)/b}`
    pub sample_size_ok: bool,
    /// `λ ≤ α`
    pub lambda_ok: bool,
    /// Right-hand side of the sample-size condition.
    pub required_ell: f64,
}

impl BoundBreakdown {
    pub fn terms(&self) -> [f64; 5] {
        [
            self.term_approx,
            self.term_b,
            self.term_a,
            self.term_noise_m,
            self.term_effdim,
        ]
    }

    pub fn valid(&self) -> bool {
        self.sample_size_ok && self.lambda_ok
    }
}

/// Evaluates the risk bound at `(λ, ℓ, η)`.
///
/// `ell` is real-valued so the bound can be explored between integers; it
/// must be at least 1.
pub fn risk_bound(params: &PriorParams, lambda: f64, ell: f64, eta: f64) -> Result<BoundBreakdown> {
    params.validate()?;
    require_positive("lambda", lambda)?;
    validate_ell(ell)?;
    let c_eta = c_eta(eta)?;
    let q = params.q()?;
    let PriorParams {
        c, r, kappa, m, sigma, ..
    } = *params;

    let term_approx = r * lambda.powf(c);
    let term_b = kappa * kappa * r * lambda.powf(c - 2.0) / (ell * ell);
    let term_a = kappa * r * lambda.powf(c - 1.0) / ell;
    let term_noise_m = kappa * m * m / (lambda * ell * ell);
    let term_effdim = sigma * sigma * q * lambda.powf(-params.b.reciprocal()) / ell;
    let total = c_eta * (term_approx + term_b + term_a + term_noise_m + term_effdim);

    let required_ell = min_ell_for_condition(params, lambda, eta)?;
    Ok(BoundBreakdown {
        term_approx,
        term_b,
        term_a,
        term_noise_m,
        term_effdim,
        total,
        c_eta,
        sample_size_ok: ell >= required_ell,
        lambda_ok: lambda <= params.alpha,
        required_ell,
    })
}

fn validate_ell(ell: f64) -> Result<()> {
    if ell.is_finite() && ell >= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("ell", format!("sample size must be >= 1, got {ell}")))
    }
}

/// `2 C_η κ Q λ^{-(b+1)/b}`, the smallest sample size for which the bound
/// holds at `λ`. For `b = ∞` the exponent is `1`.
pub fn min_ell_for_condition(params: &PriorParams, lambda: f64, eta: f64) -> Result<f64> {
    params.validate()?;
    require_positive("lambda", lambda)?;
    let q = params.q()?;
    let exponent = 1.0 + params.b.reciprocal();
    Ok(2.0 * c_eta(eta)? * params.kappa * q * lambda.powf(-exponent))
}

fn finite_b(b: f64) -> Result<f64> {
    DecayExponent::Finite(b).validated()?;
    Ok(b)
}

fn validate_c(c: f64) -> Result<()> {
    if c.is_finite() && (1.0..=2.0).contains(&c) {
        Ok(())
    } else {
        Err(Error::invalid("c", format!("source degree must satisfy 1 <= c <= 2, got {c}")))
    }
}

/// Regularization schedule:
/// `λ_ℓ = ℓ^{-b/(bc+1)}` for `c > 1`, and `λ_ℓ = (ln ℓ / ℓ)^{b/(b+1)}` for `c = 1`.
pub fn lambda_schedule(b: f64, c: f64, ell: f64) -> Result<f64> {
    let b = finite_b(b)?;
    validate_c(c)?;
    validate_ell(ell)?;
    if c > 1.0 {
        Ok(ell.powf(-b / (b * c + 1.0)))
    } else {
        if ell < 2.0 {
            return Err(Error::invalid("ell", "the c = 1 schedule needs ell >= 2 (log ell > 0)"));
        }
        Ok((ell.ln() / ell).powf(b / (b + 1.0)))
    }
}

/// Sample-size threshold `ℓ_η` from which the schedule satisfies the
/// sample-size condition:
/// `(2 C_η κ Q)^{(bc+1)/(b(c−1))}` for `c > 1`, `exp(2 C_η κ Q)` for `c = 1`.
pub fn min_sample_size(params: &PriorParams, eta: f64) -> Result<f64> {
    params.validate()?;
    let b = params
        .b
        .finite()
        .ok_or_else(|| Error::invalid("b", "schedules are defined for finite b"))?;
    let k = 2.0 * c_eta(eta)? * params.kappa * params.q()?;
    Ok(threshold_from_constant(k, b, params.c))
}

/// `ℓ_η` as a function of the combined constant `k = 2 C_η κ Q`.
pub fn threshold_from_constant(k: f64, b: f64, c: f64) -> f64 {
    if c > 1.0 {
        k.powf((b * c + 1.0) / (b * (c - 1.0)))
    } else {
        k.exp()
    }
}

/// `bc/(bc+1)`, the exponent of the excess-risk rate (`b/(b+1)` at `c = 1`,
/// where the rate also carries a `(ln ℓ)^{b/(b+1)}` factor).
pub fn rate_exponent(b: f64, c: f64) -> Result<f64> {
    let b = finite_b(b)?;
    validate_c(c)?;
    Ok(b * c / (b * c + 1.0))
}

/// How much each subleading exponent numerator exceeds `bc`:
/// `(3bc − 2b + 2 − bc, 2bc − b + 1 − bc, 2bc − b + 2 − bc)`.
/// All three are positive for `b > 1, c ≥ 1`.
pub fn dominance_margins(b: f64, c: f64) -> Result<[f64; 3]> {
    let b = finite_b(b)?;
    validate_c(c)?;
    let bc = b * c;
    Ok([
        3.0 * bc - 2.0 * b + 2.0 - bc,
        2.0 * bc - b + 1.0 - bc,
        2.0 * bc - b + 2.0 - bc,
    ])
}

/// `η_τ = 6 exp(−√(τ / (192 D)))`, the confidence level at which the bound
/// reaches `τ ℓ^{-bc/(bc+1)}`; inverse of `τ = 2 C_η D`.
pub fn eta_tau(tau: f64, d_const: f64) -> Result<f64> {
    require_positive("tau", tau)?;
    require_positive("D", d_const)?;
    Ok(6.0 * (-(tau / (2.0 * C_ETA_FACTOR * d_const)).sqrt()).exp())
}

/// `τ = 2 C_η D`.
pub fn tau_for_eta(eta: f64, d_const: f64) -> Result<f64> {
    require_positive("D", d_const)?;
    Ok(2.0 * c_eta(eta)? * d_const)
}
