//! A concrete member of the prior family `P(b, c)`.
//!
//! Inputs are uniform on `[0, 1]` and the kernel is the Mercer expansion
//!
//! ```text
//! k(x, y) = Σ_{n=1}^{N} μ_n φ_n(x) φ_n(y),   φ_n(x) = √2 cos(nπx),   μ_n = β n^{-b}
//! ```
//!
//! The `φ_n` are orthonormal in `L²([0,1])`, so the integral operator has
//! eigenvalues exactly `μ_n`. The truncated model is itself a member of the
//! family, since eigenvalues beyond `N` are zero and `0 ≤ β n^{-b}`.
//!
//! The target is `f_H = Σ θ_n φ_n` with `θ_n` chosen so the source condition
//! `Σ θ_n² μ_n^{-c} ≤ R` holds with equality, and the noise is uniform so that
//! it is both bounded (`M = σ√3`) and of variance `σ²`.
//!
//! Nothing here is prescribed by the theory beyond membership in the family;
//! the basis, target shape and noise law are constructive choices.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::effdim::BERNOULLI_EVEN;
use crate::error::{require_positive, Error, Result};
use crate::krr::{self, FittedModel, Kernel};
use crate::spectral::DecayModel;

pub const DEFAULT_N_MODES: usize = 512;
pub const DEFAULT_DELTA: f64 = 0.1;

/// `φ_n(x) = √2 cos(nπx)`.
#[inline]
pub fn basis(n: usize, x: f64) -> f64 {
    std::f64::consts::SQRT_2 * (n as f64 * PI * x).cos()
}

/// Riemann zeta `ζ(s)` for `s > 1` by Euler–Maclaurin summation.
pub fn riemann_zeta(s: f64) -> Result<f64> {
    if !(s.is_finite() && s > 1.0) {
        return Err(Error::invalid("s", format!("zeta needs s > 1, got {s}")));
    }
    const HEAD: usize = 16;
    let m = HEAD as f64;
    let head: f64 = (1..HEAD).rev().map(|n| (n as f64).powf(-s)).sum();
    let mut tail = m.powf(1.0 - s) / (s - 1.0) + 0.5 * m.powf(-s);
    // rising factorial s(s+1)…(s+2j−2) / (2j)!
    let mut rising = s;
    let mut factorial = 2.0;
    for (j, bern) in BERNOULLI_EVEN.iter().take(8).enumerate() {
        if j > 0 {
            let k = 2 * j as u32;
            rising *= (s + k as f64 - 1.0) * (s + k as f64);
            factorial *= (k + 1) as f64 * (k + 2) as f64;
        }
        tail += bern / factorial * rising * m.powf(-s - (2 * j + 1) as f64);
    }
    Ok(head + tail)
}

/// Truncated spectral kernel with eigenvalues `μ_n = β n^{-b}`, `n ≤ N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralKernelModel {
    pub beta: f64,
    pub b: f64,
    pub n_modes: usize,
    mu: Vec<f64>,
}

pub fn build_model(beta: f64, b: f64, n_modes: usize) -> Result<SpectralKernelModel> {
    let decay = DecayModel::new(beta, b)?;
    if n_modes == 0 {
        return Err(Error::invalid("n_modes", "must be at least 1"));
    }
    Ok(SpectralKernelModel {
        beta,
        b,
        n_modes,
        mu: (1..=n_modes).map(|n| decay.eigenvalue(n)).collect(),
    })
}

impl SpectralKernelModel {
    /// Operator eigenvalues `μ_1, …, μ_N`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.mu
    }

    pub fn decay_model(&self) -> DecayModel {
        DecayModel {
            beta: self.beta,
            b: self.b,
        }
    }

    /// `κ = √(2βζ(b))`, which bounds `√k(x, x)` for every truncation.
    pub fn kappa(&self) -> f64 {
        (2.0 * self.beta * riemann_zeta(self.b).expect("b > 1 checked at construction")).sqrt()
    }

    /// `2 Σ_{n ≤ N} μ_n = k(0, 0)`, the exact sup of the truncated diagonal.
    pub fn truncated_sup_diag(&self) -> f64 {
        2.0 * self.mu.iter().rev().sum::<f64>()
    }

    /// `[φ_1(x), …, φ_N(x)]`.
    pub fn features(&self, x: f64) -> Vec<f64> {
        (1..=self.n_modes).map(|n| basis(n, x)).collect()
    }

    /// `ℓ × N` matrix of `φ_n(x_i)`.
    pub fn feature_matrix(&self, xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(xs.len(), self.n_modes, |i, n| basis(n + 1, xs[i]))
    }

    /// Gram matrix through the factorization `K = Φ diag(μ) Φᵀ`.
    /// The upper triangle is mirrored so the result is exactly symmetric.
    pub fn gram(&self, xs: &[f64]) -> Result<DMatrix<f64>> {
        if xs.is_empty() {
            return Err(Error::invalid("xs", "need at least one input"));
        }
        let mut weighted = self.feature_matrix(xs);
        for (n, mut col) in weighted.column_iter_mut().enumerate() {
            col *= self.mu[n].sqrt();
        }
        let mut k = &weighted * weighted.transpose();
        let l = xs.len();
        for j in 0..l {
            for i in (j + 1)..l {
                k[(i, j)] = k[(j, i)];
            }
        }
        Ok(k)
    }

    /// Fits KRR on a dataset with this kernel.
    pub fn fit(&self, data: &Dataset, lambda: f64) -> Result<FittedModel> {
        let k = self.gram(&data.xs)?;
        FittedModel::from_gram(&k, &data.xs, &data.ys, lambda)
    }

    /// Coefficients `c_n = μ_n Σ_i α_i φ_n(x_i)` of a fitted model in the basis.
    pub fn expansion(&self, fitted: &FittedModel) -> Result<Vec<f64>> {
        if fitted.coefficients.len() != fitted.training_inputs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} training inputs",
                fitted.coefficients.len(),
                fitted.training_inputs.len()
            )));
        }
        let phi = self.feature_matrix(&fitted.training_inputs);
        let alpha = DVector::from_column_slice(&fitted.coefficients);
        let proj = phi.transpose() * alpha;
        Ok(proj.iter().zip(&self.mu).map(|(p, mu)| mu * p).collect())
    }
}

impl Kernel for SpectralKernelModel {
    fn eval(&self, x: f64, y: f64) -> f64 {
        self.mu
            .iter()
            .enumerate()
            .rev()
            .map(|(i, mu)| mu * basis(i + 1, x) * basis(i + 1, y))
            .sum()
    }

    fn sup_diag(&self) -> f64 {
        self.truncated_sup_diag()
    }
}

/// `f_H = Σ θ_n φ_n` with source degree `c` and radius `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetFunction {
    pub theta: Vec<f64>,
    pub c: f64,
    pub r: f64,
}

impl TargetFunction {
    pub fn eval(&self, x: f64) -> f64 {
        self.theta
            .iter()
            .enumerate()
            .rev()
            .map(|(i, t)| t * basis(i + 1, x))
            .sum()
    }

    /// `Σ θ_n² μ_n^{-c}`; the source condition requires this to be `≤ R`.
    pub fn source_norm(&self, model: &SpectralKernelModel) -> f64 {
        self.theta
            .iter()
            .zip(model.eigenvalues())
            .map(|(t, mu)| t * t * mu.powf(-self.c))
            .sum()
    }

    /// `‖f_H‖²_{L²} = Σ θ_n²`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.theta.iter().map(|t| t * t).sum()
    }
}

/// `θ_n = s μ_n^{c/2} n^{-(1+δ)/2} σ_n` with random signs `σ_n` and
/// `s = √(R / Σ_{n≤N} n^{-(1+δ)})`, so `Σ θ_n² μ_n^{-c} = R`.
pub fn make_target(model: &SpectralKernelModel, c: f64, r: f64, delta: f64, seed: u64) -> Result<TargetFunction> {
    if !(c.is_finite() && (1.0..=2.0).contains(&c)) {
        return Err(Error::invalid("c", format!("source degree must satisfy 1 <= c <= 2, got {c}")));
    }
    require_positive("R", r)?;
    require_positive("delta", delta)?;
    let weights: Vec<f64> = (1..=model.n_modes).map(|n| (n as f64).powf(-(1.0 + delta))).collect();
    let norm: f64 = weights.iter().rev().sum();
    let s = (r / norm).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta = model
        .eigenvalues()
        .iter()
        .zip(&weights)
        .map(|(mu, w)| {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            sign * s * mu.powf(c / 2.0) * w.sqrt()
        })
        .collect();
    Ok(TargetFunction { theta, c, r })
}

/// An i.i.d. sample `z = ((x_i, y_i))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub seed: u64,
    /// `M = σ√3`, the almost-sure bound on `|y − f_H(x)|`.
    pub noise_bound: f64,
    pub noise_std: f64,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

/// Draws `x_i ~ U[0,1]` and `y_i = f_H(x_i) + ε_i` with `ε_i ~ U[−σ√3, σ√3]`.
/// Deterministic in `seed`.
pub fn sample_dataset(
    model: &SpectralKernelModel,
    target: &TargetFunction,
    sigma: f64,
    ell: usize,
    seed: u64,
) -> Result<Dataset> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::invalid("sigma", format!("noise std must be >= 0, got {sigma}")));
    }
    if ell == 0 {
        return Err(Error::invalid("ell", "must be at least 1"));
    }
    if target.theta.len() != model.n_modes {
        return Err(Error::DimensionMismatch(format!(
            "target has {} coefficients, model has {} modes",
            target.theta.len(),
            model.n_modes
        )));
    }
    let bound = sigma * 3f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..ell).map(|_| rng.gen::<f64>()).collect();
    let noise: Vec<f64> = (0..ell)
        .map(|_| if bound > 0.0 { rng.gen_range(-bound..=bound) } else { 0.0 })
        .collect();
    // f_H on all inputs at once: Φ θ
    let phi = model.feature_matrix(&xs);
    let clean = phi * DVector::from_column_slice(&target.theta);
    let ys = clean.iter().zip(&noise).map(|(f, e)| f + e).collect();
    Ok(Dataset {
        xs,
        ys,
        seed,
        noise_bound: bound,
        noise_std: sigma,
    })
}

/// `‖f_z − f_H‖²_{L²(ρ_X)} = Σ_n (c_n − θ_n)²`, exact for the truncated model.
pub fn exact_excess_risk(model: &SpectralKernelModel, target: &TargetFunction, fitted: &FittedModel) -> Result<f64> {
    if target.theta.len() != model.n_modes {
        return Err(Error::DimensionMismatch(format!(
            "target has {} coefficients, model has {} modes",
            target.theta.len(),
            model.n_modes
        )));
    }
    let coeffs = model.expansion(fitted)?;
    Ok(coeffs
        .iter()
        .zip(&target.theta)
        .map(|(c, t)| (c - t) * (c - t))
        .sum())
}

/// Convenience for callers that want `krr::gram_matrix` semantics with this kernel.
pub fn gram_by_evaluation(model: &SpectralKernelModel, xs: &[f64]) -> Result<DMatrix<f64>> {
    krr::gram_matrix(model, xs)
}
