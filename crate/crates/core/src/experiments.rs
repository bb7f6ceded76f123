//! Monte Carlo checks of the learning rate and of `N̂(λ) → N(λ)`.
//!
//! A sweep draws one dataset per `(ℓ, repetition)` cell from the synthetic
//! model, fits KRR with `λ = λ_ℓ`, and records the exact excess risk. Cell
//! seeds are derived from the master seed, `ℓ` and the repetition index only,
//! so cells can run in any order (or in parallel) and the records are a pure
//! function of the configuration.
//!
//! A finite simulation can only be *consistent* with `ℓ^{-bc/(bc+1)}`; the
//! guarantee itself is a limit statement and is not checked here.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effdim::{self, DEFAULT_TOL};
use crate::error::{require_positive, Error, Result};
use crate::krr;
use crate::rates;
use crate::spectral::Spectrum;
use crate::synth::{self, SpectralKernelModel};

/// How per-`ℓ` risks are combined before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Median,
    Mean,
}

impl Aggregate {
    pub fn apply(self, values: &[f64]) -> f64 {
        match self {
            Aggregate::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregate::Median => {
                let mut v = values.to_vec();
                v.sort_by(f64::total_cmp);
                let n = v.len();
                if n % 2 == 1 {
                    v[n / 2]
                } else {
                    0.5 * (v[n / 2 - 1] + v[n / 2])
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Aggregate::Median => "median",
            Aggregate::Mean => "mean",
        }
    }
}

impl std::str::FromStr for Aggregate {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "median" => Ok(Aggregate::Median),
            "mean" => Ok(Aggregate::Mean),
            other => Err(format!("expected `median` or `mean`, got `{other}`")),
        }
    }
}

/// Everything a rate sweep depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub beta: f64,
    pub b: f64,
    pub c: f64,
    /// Source-condition radius of the target.
    pub r: f64,
    pub sigma: f64,
    pub n_modes: usize,
    pub delta: f64,
    pub ell_grid: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            b: 2.0,
            c: 2.0,
            r: 1.0,
            sigma: 0.1,
            n_modes: synth::DEFAULT_N_MODES,
            delta: synth::DEFAULT_DELTA,
            ell_grid: vec![64, 128, 256, 512, 1024, 2048],
            repetitions: 20,
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        synth::build_model(self.beta, self.b, self.n_modes)?;
        if !(self.c.is_finite() && (1.0..=2.0).contains(&self.c)) {
            return Err(Error::invalid("c", format!("source degree must satisfy 1 <= c <= 2, got {}", self.c)));
        }
        require_positive("R", self.r)?;
        require_positive("delta", self.delta)?;
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::invalid("sigma", format!("noise std must be >= 0, got {}", self.sigma)));
        }
        if self.ell_grid.is_empty() {
            return Err(Error::invalid("ell_grid", "grid must contain at least one sample size"));
        }
        let min_ell = if self.c > 1.0 { 1 } else { 2 };
        if let Some(bad) = self.ell_grid.iter().find(|&&l| l < min_ell) {
            return Err(Error::invalid("ell_grid", format!("sample size {bad} below {min_ell}")));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions", "must be at least 1"));
        }
        Ok(())
    }
}

/// One `(ℓ, repetition)` measurement. Field order is the on-disk order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateExperimentRecord {
    pub ell: usize,
    pub repetition: usize,
    pub lambda: f64,
    pub excess_risk: f64,
    pub seed: u64,
    pub b: f64,
    pub c: f64,
    pub beta: f64,
    pub sigma: f64,
    pub n_modes: usize,
    pub delta: f64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of cell `(ℓ, repetition)` under `master`.
pub fn cell_seed(master: u64, ell: usize, repetition: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ ell as u64) ^ repetition as u64)
}

/// Seed of the target's random signs; fixed per master seed so every cell
/// samples from the same distribution.
pub fn target_seed(master: u64) -> u64 {
    splitmix64(master ^ 0x7a72_6765_7473_6565)
}

fn run_cell(
    config: &SweepConfig,
    model: &SpectralKernelModel,
    target: &synth::TargetFunction,
    ell: usize,
    repetition: usize,
) -> Result<RateExperimentRecord> {
    let seed = cell_seed(config.seed, ell, repetition);
    let lambda = rates::lambda_schedule(config.b, config.c, ell as f64)?;
    let data = synth::sample_dataset(model, target, config.sigma, ell, seed)?;
    let fitted = model.fit(&data, lambda)?;
    let excess_risk = synth::exact_excess_risk(model, target, &fitted)?;
    Ok(RateExperimentRecord {
        ell,
        repetition,
        lambda,
        excess_risk,
        seed,
        b: config.b,
        c: config.c,
        beta: config.beta,
        sigma: config.sigma,
        n_modes: config.n_modes,
        delta: config.delta,
    })
}

/// Runs every cell and returns records sorted by `(ℓ, repetition)`.
pub fn rate_sweep(config: &SweepConfig) -> Result<Vec<RateExperimentRecord>> {
    config.validate()?;
    let model = synth::build_model(config.beta, config.b, config.n_modes)?;
    let target = synth::make_target(&model, config.c, config.r, config.delta, target_seed(config.seed))?;

    let mut ells = config.ell_grid.clone();
    ells.sort_unstable();
    ells.dedup();
    let cells: Vec<(usize, usize)> = ells
        .iter()
        .flat_map(|&ell| (0..config.repetitions).map(move |rep| (ell, rep)))
        .collect();

    // largest cells first keeps the pool busy; output order is restored below
    let mut schedule: Vec<usize> = (0..cells.len()).collect();
    schedule.sort_by_key(|&i| std::cmp::Reverse(cells[i].0));
    let mut results: Vec<(usize, RateExperimentRecord)> = schedule
        .into_par_iter()
        .map(|i| {
            let (ell, repetition) = cells[i];
            run_cell(config, &model, &target, ell, repetition)
                .map(|r| (i, r))
                .map_err(|e| Error::Cell {
                    ell,
                    repetition,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    results.sort_by_key(|(i, _)| *i);
    Ok(results.into_iter().map(|(_, r)| r).collect())
}

/// Least-squares fit of `ln y = intercept + slope · ln x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// Standard error of the slope (`NaN` with two points).
    pub slope_std_error: f64,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(Error::invalid("points", "need at least two points"));
    }
    if let Some((x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::invalid("points", format!("coordinates must be positive, got ({x}, {y})")));
    }
    let n = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let syy: f64 = logs.iter().map(|(_, y)| (y - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("points", "all x values coincide"));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = logs.iter().map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let slope_std_error = if points.len() > 2 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(PowerLawFit {
        slope,
        intercept,
        r_squared,
        n_points: points.len(),
        slope_std_error,
    })
}

/// Fitted slope against the predicted `−bc/(bc+1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryComparison {
    pub aggregate: Aggregate,
    pub fitted_slope: f64,
    pub theoretical_slope: f64,
    /// `fitted_slope − theoretical_slope`
    pub difference: f64,
    pub fit: PowerLawFit,
    /// Aggregated risk per `ℓ`, including the burn-in points.
    pub curve: Vec<(usize, f64)>,
    pub burn_in: usize,
    /// At `c = 1` the rate carries an unresolved `(ln ℓ)^{b/(b+1)}` factor.
    pub log_factor_caveat: bool,
}

/// Smallest `ℓ` values skipped when fitting.
pub const DEFAULT_BURN_IN: usize = 2;

/// Aggregates risks per `ℓ`, drops the `burn_in` smallest `ℓ`, and fits a
/// power law to the rest.
pub fn compare_with_theory(
    records: &[RateExperimentRecord],
    b: f64,
    c: f64,
    aggregate: Aggregate,
    burn_in: usize,
) -> Result<TheoryComparison> {
    let theoretical_slope = -rates::rate_exponent(b, c)?;
    let mut sorted: Vec<&RateExperimentRecord> = records.iter().collect();
    sorted.sort_by(|x, y| x.ell.cmp(&y.ell).then(x.repetition.cmp(&y.repetition)));
    let mut curve: Vec<(usize, f64)> = Vec::new();
    for group in sorted.chunk_by(|x, y| x.ell == y.ell) {
        let risks: Vec<f64> = group.iter().map(|r| r.excess_risk).collect();
        curve.push((group[0].ell, aggregate.apply(&risks)));
    }
    let fitted: Vec<(f64, f64)> = curve.iter().skip(burn_in).map(|&(l, r)| (l as f64, r)).collect();
    if fitted.len() < 2 {
        return Err(Error::invalid(
            "ell_grid",
            format!(
                "{} distinct sample sizes leave fewer than two points after excluding {burn_in}",
                curve.len()
            ),
        ));
    }
    let fit = fit_power_law(&fitted)?;
    Ok(TheoryComparison {
        aggregate,
        fitted_slope: fit.slope,
        theoretical_slope,
        difference: fit.slope - theoretical_slope,
        fit,
        curve,
        burn_in,
        log_factor_caveat: c <= 1.0,
    })
}

/// Per-`λ` comparison of empirical and operator effective dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffDimConvergenceRow {
    pub lambda: f64,
    pub mean_empirical: f64,
    pub min_empirical: f64,
    pub max_empirical: f64,
    /// `N(λ)` of the untruncated spectrum `β n^{-b}`.
    pub theoretical: f64,
    /// `N(λ)` of the model's truncated spectrum.
    pub truncated: f64,
    pub corrected_bound: f64,
}

/// Averages `N̂(λ)` over `reps` independent uniform designs of size `ell`.
pub fn effdim_convergence_experiment(
    model: &SpectralKernelModel,
    lambda_grid: &[f64],
    ell: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<EffDimConvergenceRow>> {
    if lambda_grid.is_empty() {
        return Err(Error::invalid("lambda_grid", "grid must contain at least one value"));
    }
    for &lambda in lambda_grid {
        require_positive("lambda", lambda)?;
    }
    if ell == 0 || reps == 0 {
        return Err(Error::invalid("ell", "ell and reps must be at least 1"));
    }
    let zero = synth::TargetFunction {
        theta: vec![0.0; model.n_modes],
        c: 1.0,
        r: 1.0,
    };
    let spectra: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let data = synth::sample_dataset(model, &zero, 0.0, ell, cell_seed(seed, ell, rep))?;
            krr::normalized_spectrum(&model.gram(&data.xs)?)
        })
        .collect::<Result<_>>()?;
    let truncated = Spectrum::from_eigenvalues(model.eigenvalues().to_vec())?;

    lambda_grid
        .iter()
        .map(|&lambda| {
            let values: Vec<f64> = spectra
                .iter()
                .map(|eig| eig.iter().map(|&mu| {
                    let mu = mu.max(0.0);
                    mu / (mu + lambda)
                }).sum())
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            Ok(EffDimConvergenceRow {
                lambda,
                mean_empirical: mean,
                min_empirical: values.iter().copied().fold(f64::INFINITY, f64::min),
                max_empirical: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                theoretical: effdim::effective_dimension_model(model.decay_model(), lambda, DEFAULT_TOL)?.value,
                truncated: effdim::effective_dimension_exact(&truncated, lambda, DEFAULT_TOL)?.value,
                corrected_bound: effdim::corrected_bound(model.beta, model.b, lambda)?,
            })
        })
        .collect()
}

/// Writes one JSON object per line in the record's field order.
pub fn write_records(path: &Path, records: &[RateExperimentRecord]) -> std::io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_records(path: &Path) -> std::io::Result<Vec<RateExperimentRecord>> {
    let reader = BufReader::new(File::open(path)?);
    reader
        .lines()
        .filter(|l| l.as_ref().map(|s| !s.trim().is_empty()).unwrap_or(true))
        .map(|line| serde_json::from_str(&line?).map_err(std::io::Error::other))
        .collect()
}

#[derive(Serialize)]
struct ReportRow {
    aggregate: &'static str,
    fitted_slope: f64,
    theoretical_slope: f64,
    difference: f64,
    intercept: f64,
    r_squared: f64,
    slope_std_error: f64,
    n_points: usize,
    burn_in: usize,
    log_factor_caveat: bool,
}

/// Writes one CSV row per comparison, with a header.
pub fn write_report(path: &Path, comparisons: &[TheoryComparison]) -> Result<()> {
    let io = |e: csv::Error| Error::invalid("report", e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for c in comparisons {
        w.serialize(ReportRow {
            aggregate: c.aggregate.name(),
            fitted_slope: c.fitted_slope,
            theoretical_slope: c.theoretical_slope,
            difference: c.difference,
            intercept: c.fit.intercept,
            r_squared: c.fit.r_squared,
            slope_std_error: c.fit.slope_std_error,
            n_points: c.fit.n_points,
            burn_in: c.burn_in,
            log_factor_caveat: c.log_factor_caveat,
        })
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::invalid("report", e.to_string()))
}
