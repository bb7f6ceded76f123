//! Kernel ridge regression on a finite sample.
//!
//! The regularized system is `(K + ℓλI) α = y`, which matches the operator
//! normalization `T ≈ K/ℓ`: the `λ` passed here is the same `λ` that appears
//! in the risk bound and in `N(λ)`.

use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{require_positive, Error, Result};

/// A symmetric positive-semidefinite kernel on scalar inputs.
pub trait Kernel: Sync {
    fn eval(&self, x: f64, y: f64) -> f64;

    /// An upper bound on `k(x, x)` over the input domain (`κ²`).
    fn sup_diag(&self) -> f64;
}

/// Kernel backed by a plain function.
#[derive(Clone)]
pub struct FnKernel<F> {
    f: F,
    sup_diag: f64,
}

impl<F> FnKernel<F>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    pub fn new(f: F, sup_diag: f64) -> Self {
        Self { f, sup_diag }
    }
}

impl<F> Kernel for FnKernel<F>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    fn eval(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }

    fn sup_diag(&self) -> f64 {
        self.sup_diag
    }
}

/// `K[i][j] = k(x_i, x_j)`. The upper triangle is evaluated and mirrored, so
/// the result is exactly symmetric.
pub fn gram_matrix<K: Kernel + ?Sized>(kernel: &K, xs: &[f64]) -> Result<DMatrix<f64>> {
    let n = xs.len();
    if n == 0 {
        return Err(Error::invalid("xs", "need at least one input"));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| kernel.eval(xs[i], xs[j])).collect())
        .collect();
    let mut k = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, v) in row.into_iter().enumerate() {
            let j = i + offset;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

fn check_square(k: &DMatrix<f64>) -> Result<usize> {
    if k.nrows() != k.ncols() || k.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "Gram matrix must be square and nonempty, got {}x{}",
            k.nrows(),
            k.ncols()
        )));
    }
    Ok(k.nrows())
}

/// Solves `(K + ℓλI) α = y` by Cholesky factorization.
///
/// If the factorization fails (possible only through round-off), a jitter of
/// `1e-12·trace(K)/ℓ` is added to the diagonal once and a warning is logged.
pub fn krr_fit(k: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<DVector<f64>> {
    let n = check_square(k)?;
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} targets for a {n}x{n} Gram matrix",
            y.len()
        )));
    }
    require_positive("lambda", lambda)?;

    let shift = n as f64 * lambda;
    let mut system = k.clone();
    for i in 0..n {
        system[(i, i)] += shift;
    }
    let rhs = DVector::from_column_slice(y);
    if let Some(chol) = system.clone().cholesky() {
        return Ok(chol.solve(&rhs));
    }

    let jitter = 1e-12 * k.trace() / n as f64;
    warn!("Cholesky failed for ell={n}, lambda={lambda:e}; retrying with diagonal jitter {jitter:e}");
    for i in 0..n {
        system[(i, i)] += jitter;
    }
    system
        .cholesky()
        .map(|chol| chol.solve(&rhs))
        .ok_or_else(|| Error::Factorization(format!("K + ell*lambda*I not positive definite (ell={n}, lambda={lambda:e})")))
}

/// `Σ_i α_i k(x_i, x)`.
pub fn krr_predict<K: Kernel + ?Sized>(kernel: &K, xs: &[f64], alpha: &[f64], x: f64) -> Result<f64> {
    if xs.len() != alpha.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for {} training inputs",
            alpha.len(),
            xs.len()
        )));
    }
    Ok(xs.iter().zip(alpha).map(|(xi, a)| a * kernel.eval(*xi, x)).sum())
}

/// A fitted estimator `f(x) = Σ_i α_i k(x_i, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub coefficients: Vec<f64>,
    pub training_inputs: Vec<f64>,
    pub lambda: f64,
    pub ell: usize,
}

impl FittedModel {
    /// Fits from a precomputed Gram matrix of `xs`.
    pub fn from_gram(k: &DMatrix<f64>, xs: &[f64], ys: &[f64], lambda: f64) -> Result<Self> {
        if xs.len() != k.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} inputs for a {}x{} Gram matrix",
                xs.len(),
                k.nrows(),
                k.ncols()
            )));
        }
        let alpha = krr_fit(k, ys, lambda)?;
        Ok(Self {
            coefficients: alpha.as_slice().to_vec(),
            training_inputs: xs.to_vec(),
            lambda,
            ell: xs.len(),
        })
    }

    pub fn fit<K: Kernel + ?Sized>(kernel: &K, xs: &[f64], ys: &[f64], lambda: f64) -> Result<Self> {
        let k = gram_matrix(kernel, xs)?;
        Self::from_gram(&k, xs, ys, lambda)
    }

    pub fn predict<K: Kernel + ?Sized>(&self, kernel: &K, x: f64) -> f64 {
        self.training_inputs
            .iter()
            .zip(&self.coefficients)
            .map(|(xi, a)| a * kernel.eval(*xi, x))
            .sum()
    }
}

/// `Tr[(K/ℓ)(K/ℓ + λI)^{-1}] = Σ μ_i/(μ_i + λ)` over the eigenvalues `μ_i` of
/// `K/ℓ`. Round-off negatives in the spectrum are clamped to zero.
pub fn empirical_effective_dimension(k: &DMatrix<f64>, lambda: f64) -> Result<f64> {
    let n = check_square(k)?;
    require_positive("lambda", lambda)?;
    let eig = normalized_spectrum(k)?;
    debug_assert_eq!(eig.len(), n);
    Ok(eig.iter().map(|&mu| {
        let mu = mu.max(0.0);
        mu / (mu + lambda)
    }).sum())
}

/// Eigenvalues of `K/ℓ` in decreasing order.
pub fn normalized_spectrum(k: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = check_square(k)?;
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::Factorization("Gram matrix has non-finite entries".into()));
    }
    let scaled = k / n as f64;
    let mut eig: Vec<f64> = scaled.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psd(n: usize, rank: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, rank, |_, _| rng.gen_range(-1.0..1.0));
        let k = &a * a.transpose();
        (&k + k.transpose()) * 0.5
    }

    fn rbf() -> FnKernel<impl Fn(f64, f64) -> f64 + Sync + Clone> {
        FnKernel::new(|x: f64, y: f64| (-(x - y) * (x - y) / 0.5).exp(), 1.0)
    }

    #[test]
    fn gram_examples() {
        let one = FnKernel::new(|_, _| 1.0, 1.0);
        assert_eq!(gram_matrix(&one, &[0.1, 0.7]).unwrap(), DMatrix::from_element(2, 2, 1.0));
        let lin = FnKernel::new(|x, y| x * y, 4.0);
        assert_eq!(
            gram_matrix(&lin, &[1.0, 2.0]).unwrap(),
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0])
        );
        let k = gram_matrix(&rbf(), &[0.3]).unwrap();
        assert_eq!(k, DMatrix::from_element(1, 1, 1.0));
        assert!(gram_matrix(&rbf(), &[]).is_err());
    }

    #[test]
    fn gram_is_exactly_symmetric() {
        // a kernel that is only symmetric up to round-off
        let k = FnKernel::new(|x: f64, y: f64| (x.sin() * y.cos() + y.sin() * x.cos()) / 3.0 + x * y, 2.0);
        let xs: Vec<f64> = (0..37).map(|i| i as f64 * 0.173).collect();
        let g = gram_matrix(&k, &xs).unwrap();
        assert_eq!(g, g.transpose());
    }

    #[test]
    fn fit_examples() {
        let alpha = krr_fit(&DMatrix::identity(2, 2), &[1.0, 1.0], 0.5).unwrap();
        assert!(alpha.iter().all(|a| (a - 0.5).abs() < 1e-15));
        let y = [3.0, -1.0, 2.5];
        let alpha = krr_fit(&DMatrix::zeros(3, 3), &y, 1.0).unwrap();
        for (a, yi) in alpha.iter().zip(y) {
            assert!((a - yi / 3.0).abs() < 1e-15);
        }
        assert!(krr_fit(&DMatrix::identity(2, 2), &[1.0], 0.5).is_err());
        assert!(krr_fit(&DMatrix::identity(2, 2), &[1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn fit_matches_direct_inverse() {
        let k = random_psd(5, 3, 11);
        let y = [0.3, -1.2, 0.8, 2.0, -0.4];
        let lambda = 0.07;
        let alpha = krr_fit(&k, &y, lambda).unwrap();
        let system = &k + DMatrix::identity(5, 5) * (5.0 * lambda);
        let oracle = system.try_inverse().unwrap() * DVector::from_column_slice(&y);
        assert!((&alpha - &oracle).amax() < 1e-10);
        let residual = (&system_of(&k, lambda) * &alpha - DVector::from_column_slice(&y)).norm();
        assert!(residual <= 1e-8 * DVector::from_column_slice(&y).norm());
    }

    fn system_of(k: &DMatrix<f64>, lambda: f64) -> DMatrix<f64> {
        let n = k.nrows();
        k + DMatrix::identity(n, n) * (n as f64 * lambda)
    }

    #[test]
    fn predict_examples() {
        let k = rbf();
        assert_eq!(krr_predict(&k, &[0.1, 0.4], &[0.0, 0.0], 0.3).unwrap(), 0.0);
        let three = FnKernel::new(|_, _| 3.0, 3.0);
        assert_eq!(krr_predict(&three, &[0.2], &[2.0], 0.9).unwrap(), 6.0);
        assert!(krr_predict(&k, &[0.1], &[1.0, 2.0], 0.0).is_err());

        let xs = [0.05, 0.3, 0.62, 0.9];
        let alpha = [1.5, -0.3, 0.7, 2.2];
        let direct: f64 = (0..4).map(|i| alpha[i] * (-(xs[i] - 0.41f64).powi(2) / 0.5).exp()).sum();
        assert!((krr_predict(&k, &xs, &alpha, 0.41).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn interpolation_limit() {
        let xs = [0.0, 0.25, 0.5, 0.75, 1.0];
        let ys = [1.0, -0.5, 0.2, 0.9, -1.1];
        // Laplace kernel: strictly positive definite and well conditioned
        let k = FnKernel::new(|x: f64, y: f64| (-(x - y).abs()).exp(), 1.0);
        let model = FittedModel::fit(&k, &xs, &ys, 1e-12).unwrap();
        for (x, y) in xs.iter().zip(ys) {
            assert!((model.predict(&k, *x) - y).abs() < 1e-4);
        }
    }

    #[test]
    fn effective_dimension_examples() {
        let v = empirical_effective_dimension(&DMatrix::identity(4, 4), 0.25).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        assert_eq!(empirical_effective_dimension(&DMatrix::zeros(3, 3), 0.1).unwrap(), 0.0);
        assert!(empirical_effective_dimension(&DMatrix::identity(2, 2), 0.0).is_err());
    }

    #[test]
    fn effective_dimension_matches_trace_oracle() {
        // Tr[K (K + ℓλI)^{-1}] through an explicit inverse, no eigensolver
        for seed in 0..5 {
            let k = random_psd(8, 5, seed);
            let lambda = 0.03 * (seed + 1) as f64;
            let inv = system_of(&k, lambda).try_inverse().unwrap();
            let oracle = (&k * inv).trace();
            let got = empirical_effective_dimension(&k, lambda).unwrap();
            assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
        }
    }

    proptest! {
        #[test]
        fn effective_dimension_monotone_and_bounded(seed in 0u64..1000, l1 in 1e-4f64..1.0, f in 1.0f64..50.0) {
            let k = random_psd(6, 6, seed);
            let a = empirical_effective_dimension(&k, l1).unwrap();
            let b = empirical_effective_dimension(&k, l1 * f).unwrap();
            prop_assert!((0.0..6.0).contains(&a));
            prop_assert!(b <= a + 1e-12);
        }

        #[test]
        fn fit_is_permutation_equivariant(seed in 0u64..1000, lambda in 1e-3f64..1.0) {
            let n = 6;
            let k = random_psd(n, 4, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let perm: Vec<usize> = {
                let mut p: Vec<usize> = (0..n).collect();
                p.rotate_left((seed as usize) % n);
                p.swap(0, n - 1);
                p
            };
            let kp = DMatrix::from_fn(n, n, |i, j| k[(perm[i], perm[j])]);
            let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
            let a = krr_fit(&k, &y, lambda).unwrap();
            let ap = krr_fit(&kp, &yp, lambda).unwrap();
            for i in 0..n {
                prop_assert!((ap[i] - a[perm[i]]).abs() < 1e-9);
            }
        }
    }
}
