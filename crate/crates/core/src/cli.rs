//! The `effdim` command line.
//!
//! Exit codes: `0` success, `2` usage or validation error, `1` numerical
//! failure. Every command validates its inputs before computing, and file
//! outputs are written only after all values have been computed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::RunConfig;
use crate::effdim::{self, DEFAULT_TOL};
use crate::error::Error;
use crate::experiments::{self, Aggregate};
use crate::rates;
use crate::spectral::{DecayExponent, DecayModel, PriorParams};
use crate::synth;

/// b used by `bounds-figure` when none is given; the reference figure does
/// not state its b.
pub const FIGURE_DEFAULT_B: f64 = 2.0;

#[derive(Debug, Parser)]
#[command(name = "effdim", version, about = "Effective dimension bounds and rate checks for kernel ridge regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact N(λ) for t_n = β n^-b with the corrected and historical bounds
    Effdim(EffdimArgs),
    /// CSV of (lambda, exact, corrected, claimed) over a logarithmic λ grid
    BoundsFigure(FigureArgs),
    /// Five-term risk bound with its validity conditions
    RiskBound(RiskArgs),
    /// Regularization schedule λ_ℓ, rate exponent and sample-size threshold
    Schedule(ScheduleArgs),
    /// Run a rate sweep from a config file and fit the excess-risk slope
    Simulate(SimulateArgs),
    /// Threshold β* below which ∫ dτ/(β+τ^b) ≤ b/(b−1) fails
    Counterexample(CounterexampleArgs),
    /// Empirical N̂(λ) of sampled Gram matrices against N(λ)
    Convergence(ConvergenceArgs),
}

#[derive(Debug, Args)]
pub struct EffdimArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Print a CSV header and row instead of the text summary
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 61)]
    pub points: usize,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RiskArgs {
    /// Decay exponent (`inf` allowed)
    #[arg(long)]
    pub b: DecayExponent,
    #[arg(long)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long = "R", alias = "r", default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long = "M", alias = "m", default_value_t = 1.0)]
    pub m: f64,
    #[arg(long = "Sigma", alias = "noise-sigma", default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub ell: f64,
    #[arg(long)]
    pub eta: f64,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub c: f64,
    #[arg(long)]
    pub ell: f64,
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `records_path` from the config
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Overrides `report_path` from the config
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub b: f64,
    /// β at which to report the gap
    #[arg(long, default_value_t = 0.1)]
    pub witness: f64,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 2.0)]
    pub b: f64,
    #[arg(long, default_value_t = synth::DEFAULT_N_MODES)]
    pub n_modes: usize,
    #[arg(long, default_value_t = 2000)]
    pub ell: usize,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.003,0.01,0.03,0.1")]
    pub lambda_grid: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError {
            code: if e.is_validation() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError {
        code: 1,
        message: format!("cannot write {}: {e}", path.display()),
    }
}

type CliResult = std::result::Result<(), CliError>;

/// Parses arguments and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli.command, &mut out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn run(command: Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Effdim(a) => cmd_effdim(&a, out),
        Command::BoundsFigure(a) => cmd_bounds_figure(&a, out),
        Command::RiskBound(a) => cmd_risk_bound(&a, out),
        Command::Schedule(a) => cmd_schedule(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Counterexample(a) => cmd_counterexample(&a, out),
        Command::Convergence(a) => cmd_convergence(&a, out),
    }
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        writeln!($out, $($arg)*).map_err(|e| CliError { code: 1, message: e.to_string() })?
    };
}

fn cmd_effdim(a: &EffdimArgs, out: &mut dyn Write) -> CliResult {
    let model = DecayModel::new(a.beta, a.b)?;
    let corrected = effdim::corrected_bound(a.beta, a.b, a.lambda)?;
    let claimed = effdim::claimed_bound(a.beta, a.b, a.lambda)?;
    let exact = effdim::effective_dimension_model(model, a.lambda, a.tol)?;
    if a.csv {
        say!(out, "beta,b,lambda,exact,corrected,claimed,corrected_minus_exact,exact_minus_claimed");
        say!(
            out,
            "{},{},{},{},{},{},{},{}",
            a.beta,
            a.b,
            a.lambda,
            exact.value,
            corrected,
            claimed,
            corrected - exact.value,
            exact.value - claimed
        );
    } else {
        say!(
            out,
            "beta={} b={} lambda={}: exact N={} (+{:.1e}) corrected={} claimed={} corrected-exact={} exact-claimed={}",
            a.beta,
            a.b,
            a.lambda,
            exact.value,
            exact.truncation_error_bound,
            corrected,
            claimed,
            corrected - exact.value,
            exact.value - claimed
        );
    }
    Ok(())
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn cmd_bounds_figure(a: &FigureArgs, out: &mut dyn Write) -> CliResult {
    let b = a.b.unwrap_or(FIGURE_DEFAULT_B);
    let grid = effdim::log_grid(a.lambda_min, a.lambda_max, a.points)?;
    let rows = effdim::bound_comparison_table(a.beta, b, &grid, a.tol)?;
    write_csv(&a.out, &rows)?;
    let note = if a.b.is_none() { " (default b; reference figure leaves b unstated)" } else { "" };
    say!(out, "wrote {} rows to {} for beta={} b={}{note}", rows.len(), a.out.display(), a.beta, b);
    Ok(())
}

fn cmd_risk_bound(a: &RiskArgs, out: &mut dyn Write) -> CliResult {
    let params = PriorParams {
        b: a.b,
        c: a.c,
        beta: a.beta,
        alpha: a.alpha,
        r: a.r,
        kappa: a.kappa,
        m: a.m,
        sigma: a.sigma,
    };
    let br = rates::risk_bound(&params, a.lambda, a.ell, a.eta)?;
    say!(out, "term_approx  R*lambda^c                 = {}", br.term_approx);
    say!(out, "term_b       kappa^2 R lambda^(c-2)/l^2 = {}", br.term_b);
    say!(out, "term_a       kappa R lambda^(c-1)/l     = {}", br.term_a);
    say!(out, "term_noise_m kappa M^2 / (lambda l^2)   = {}", br.term_noise_m);
    say!(out, "term_effdim  Sigma^2 Q lambda^(-1/b)/l  = {}", br.term_effdim);
    say!(out, "c_eta = {}", br.c_eta);
    say!(out, "total = {}", br.total);
    say!(out, "sample_size_ok = {} (ell={} required {})", br.sample_size_ok, a.ell, br.required_ell);
    say!(out, "lambda_ok = {} (lambda={} alpha={})", br.lambda_ok, a.lambda, a.alpha);
    Ok(())
}

fn cmd_schedule(a: &ScheduleArgs, out: &mut dyn Write) -> CliResult {
    let params = PriorParams {
        b: DecayExponent::Finite(a.b),
        c: a.c,
        beta: a.beta,
        alpha: a.alpha,
        r: 1.0,
        kappa: a.kappa,
        m: 1.0,
        sigma: 1.0,
    };
    params.validate()?;
    let lambda = rates::lambda_schedule(a.b, a.c, a.ell)?;
    let exponent = rates::rate_exponent(a.b, a.c)?;
    let threshold = rates::min_sample_size(&params, a.eta)?;
    let required = rates::min_ell_for_condition(&params, lambda, a.eta)?;
    say!(out, "lambda_ell = {lambda}");
    say!(out, "rate_exponent = {exponent}");
    say!(out, "ell_eta = {threshold}");
    say!(
        out,
        "sample_size_condition = {} (ell={} required {})",
        a.ell >= required,
        a.ell,
        required
    );
    say!(out, "lambda_le_alpha = {}", lambda <= a.alpha);
    if a.c <= 1.0 {
        say!(out, "note: at c = 1 the rate carries an extra (log ell)^(b/(b+1)) factor");
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> CliResult {
    if !a.config.exists() {
        return Err(CliError {
            code: 2,
            message: format!("config file {} not found", a.config.display()),
        });
    }
    let mut cfg = RunConfig::from_file(&a.config)?;
    cfg.apply_env()?;
    cfg.validate()?;
    let records_path = a.records.clone().unwrap_or_else(|| cfg.records_path.clone());
    let report_path = a.report.clone().unwrap_or_else(|| cfg.report_path.clone());

    let records = experiments::rate_sweep(&cfg.sweep)?;
    let (b, c) = (cfg.sweep.b, cfg.sweep.c);
    let primary = experiments::compare_with_theory(&records, b, c, cfg.aggregate, cfg.burn_in)?;
    let other_kind = match cfg.aggregate {
        Aggregate::Median => Aggregate::Mean,
        Aggregate::Mean => Aggregate::Median,
    };
    let other = experiments::compare_with_theory(&records, b, c, other_kind, cfg.burn_in)?;

    experiments::write_records(&records_path, &records).map_err(|e| io_error(&records_path, e))?;
    experiments::write_report(&report_path, &[primary.clone(), other])?;

    for (ell, risk) in &primary.curve {
        say!(out, "ell={ell:>6} {} excess risk = {risk}", primary.aggregate.name());
    }
    say!(
        out,
        "fitted slope = {} (theory {}, difference {}, r^2 {}, {} points after excluding {})",
        primary.fitted_slope,
        primary.theoretical_slope,
        primary.difference,
        primary.fit.r_squared,
        primary.fit.n_points,
        primary.burn_in
    );
    if primary.log_factor_caveat {
        say!(out, "note: c = 1 fit ignores the (log ell)^(b/(b+1)) factor");
    }
    say!(out, "records: {}  report: {}", records_path.display(), report_path.display());
    Ok(())
}

fn cmd_counterexample(a: &CounterexampleArgs, out: &mut dyn Write) -> CliResult {
    let closed = effdim::counterexample_threshold(a.b)?;
    let bisected = effdim::counterexample_threshold_bisection(a.b)?;
    let gap = effdim::wrong_inequality_gap(a.witness, a.b)?;
    say!(out, "b = {}", a.b);
    say!(out, "threshold beta* (bisection)   = {bisected}");
    say!(out, "threshold beta* (closed form) = {closed}");
    say!(out, "relative difference           = {:e}", ((bisected - closed) / closed).abs());
    say!(
        out,
        "witness beta = {}: integral - b/(b-1) = {} ({})",
        a.witness,
        gap,
        if gap > 0.0 { "inequality violated" } else { "inequality holds" }
    );
    Ok(())
}

fn cmd_convergence(a: &ConvergenceArgs, out: &mut dyn Write) -> CliResult {
    let model = synth::build_model(a.beta, a.b, a.n_modes)?;
    let rows = experiments::effdim_convergence_experiment(&model, &a.lambda_grid, a.ell, a.reps, a.seed)?;
    if let Some(path) = &a.out {
        write_csv(path, &rows)?;
    }
    say!(out, "lambda,mean_empirical,min_empirical,max_empirical,theoretical,truncated,corrected_bound");
    for r in &rows {
        say!(
            out,
            "{},{},{},{},{},{},{}",
            r.lambda,
            r.mean_empirical,
            r.min_empirical,
            r.max_empirical,
            r.theoretical,
            r.truncated,
            r.corrected_bound
        );
    }
    Ok(())
}
