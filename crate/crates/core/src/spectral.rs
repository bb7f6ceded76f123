//! Eigenvalue spectra of the kernel integral operator and the constant `Q`
//! that controls the effective-dimension bound `N(λ) ≤ Q λ^{-1/b}`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};

/// Polynomial decay exponent `b` of the eigenvalue rule `t_n ≤ β n^{-b}`.
///
/// `Infinite` is a distinct case, not a large number: the value of `Q` at
/// `b = ∞` is `β`, which is not the limit of the finite-`b` formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecayExponent {
    Finite(f64),
    Infinite,
}

impl DecayExponent {
    /// Checks `b > 1` for finite exponents.
    pub fn validated(self) -> Result<Self> {
        match self {
            DecayExponent::Finite(b) if b.is_finite() && b > 1.0 => Ok(self),
            DecayExponent::Finite(b) => Err(Error::invalid(
                "b",
                format!("decay exponent must satisfy b > 1 (trace must be summable), got {b}"),
            )),
            DecayExponent::Infinite => Ok(self),
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            DecayExponent::Finite(b) => Some(b),
            DecayExponent::Infinite => None,
        }
    }

    /// `1/b`, which is `0` for `b = ∞`.
    pub fn reciprocal(self) -> f64 {
        match self {
            DecayExponent::Finite(b) => 1.0 / b,
            DecayExponent::Infinite => 0.0,
        }
    }
}

impl fmt::Display for DecayExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecayExponent::Finite(b) => write!(f, "{b}"),
            DecayExponent::Infinite => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for DecayExponent {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(DecayExponent::Infinite),
            other => other
                .parse::<f64>()
                .map(DecayExponent::Finite)
                .map_err(|e| format!("not a number or `inf`: {e}")),
        }
    }
}

/// Generating rule `t_n = β n^{-b}` attached to a [`Spectrum`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayModel {
    pub beta: f64,
    pub b: f64,
}

impl DecayModel {
    pub fn new(beta: f64, b: f64) -> Result<Self> {
        require_positive("beta", beta)?;
        DecayExponent::Finite(b).validated()?;
        Ok(Self { beta, b })
    }

    #[inline]
    pub fn eigenvalue(&self, n: usize) -> f64 {
        self.beta * (n as f64).powf(-self.b)
    }
}

/// A truncated, nonincreasing sequence of strictly positive operator
/// eigenvalues `t_1 ≥ t_2 ≥ …`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    decay_model: Option<DecayModel>,
}

impl Spectrum {
    /// Wraps an explicit list of eigenvalues (no decay model, so nothing is
    /// assumed about the tail).
    pub fn from_eigenvalues(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::invalid("eigenvalues", "spectrum must be nonempty"));
        }
        if let Some(bad) = eigenvalues.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(Error::invalid(
                "eigenvalues",
                format!("eigenvalues must be finite and strictly positive, got {bad}"),
            ));
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("eigenvalues", "eigenvalues must be nonincreasing"));
        }
        Ok(Self {
            eigenvalues,
            decay_model: None,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn decay_model(&self) -> Option<DecayModel> {
        self.decay_model
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// `t_n = β n^{-b}` for `n = 1..=n_max`, tagged with its decay model.
pub fn polynomial_spectrum(beta: f64, b: f64, n_max: usize) -> Result<Spectrum> {
    let model = DecayModel::new(beta, b)?;
    if n_max == 0 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    let eigenvalues = (1..=n_max).map(|n| model.eigenvalue(n)).collect();
    Ok(Spectrum {
        eigenvalues,
        decay_model: Some(model),
    })
}

/// `(π/b) / sin(π/b)`, the value of `∫₀^∞ du / (1 + u^b)`.
pub(crate) fn pi_over_b_ratio(b: f64) -> f64 {
    let x = PI / b;
    x / x.sin()
}

/// The constant `Q` in `N(λ) ≤ Q λ^{-1/b}`:
/// `β^{1/b} (π/b)/sin(π/b)` for finite `b`, and `β` for `b = ∞`.
pub fn q_constant(beta: f64, b: DecayExponent) -> Result<f64> {
    require_positive("beta", beta)?;
    match b.validated()? {
        DecayExponent::Finite(b) => Ok(beta.powf(1.0 / b) * pi_over_b_ratio(b)),
        DecayExponent::Infinite => Ok(beta),
    }
}

/// Parameters `(b, c, β, α, R, κ, M, Σ)` of the prior family `P(b, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorParams {
    pub b: DecayExponent,
    /// Source-condition degree, `1 ≤ c ≤ 2`.
    pub c: f64,
    pub beta: f64,
    /// Lower bound on the operator norm `‖T‖`.
    pub alpha: f64,
    /// Source-condition radius.
    pub r: f64,
    /// Kernel bound, `k(x, x) ≤ κ²`.
    pub kappa: f64,
    pub m: f64,
    pub sigma: f64,
}

impl PriorParams {
    pub fn validate(&self) -> Result<()> {
        self.b.validated()?;
        if !(self.c.is_finite() && (1.0..=2.0).contains(&self.c)) {
            return Err(Error::invalid(
                "c",
                format!("source degree must satisfy 1 <= c <= 2, got {}", self.c),
            ));
        }
        require_positive("beta", self.beta)?;
        require_positive("alpha", self.alpha)?;
        require_positive("R", self.r)?;
        require_positive("kappa", self.kappa)?;
        require_positive("M", self.m)?;
        require_positive("Sigma", self.sigma)?;
        Ok(())
    }

    pub fn q(&self) -> Result<f64> {
        q_constant(self.beta, self.b)
    }
}
