//! The `sweep` subcommand: one scenario run per grid value.

use std::fmt::Write as _;

use delaystab::analysis::spectral_report;
use delaystab::constants::c_zero;
use delaystab::{check_small_gain, estimate_observability, State};
use rayon::prelude::*;

use crate::config::{ModelKind, ProfileSpec, ScenarioConfig};
use crate::error::CliError;
use crate::run::execute;

pub const THREADS_VAR: &str = "DELAYSTAB_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    /// Delay-feedback norm: the delayed damping becomes the constant `C2^2`.
    C2,
    Tau,
    Xi,
    Dt,
    /// Constant instantaneous damping (the gain `k` for wave1d-boundary).
    B1,
}

#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub param: SweepParam,
    pub grid: Vec<f64>,
    /// Observability constant; estimated per row when absent.
    pub c_obs: Option<f64>,
    pub t_horizon: f64,
    pub samples: usize,
    pub seed: u64,
    pub n_rho: usize,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub mu_hat: Option<f64>,
    pub abscissa: f64,
    pub c2: f64,
    pub c_hat: f64,
    pub small_gain: bool,
    /// Observed order against the next two grid values (dt sweeps only).
    pub eoc: Option<f64>,
    final_state: State,
}

/// `DELAYSTAB_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("{THREADS_VAR} must be a positive integer, got '{s}'"))),
        },
    }
}

/// `config` with the swept parameter set to `value`.
pub fn apply(config: &ScenarioConfig, param: SweepParam, value: f64) -> Result<ScenarioConfig, CliError> {
    let mut c = config.clone();
    let boundary = c.model == ModelKind::Wave1dBoundary;
    match param {
        SweepParam::C2 => {
            if !(value >= 0.0) {
                return Err(CliError::Config(format!("C2 must be nonnegative, got {value}")));
            }
            let profile = Some(ProfileSpec::Constant { value: value * value });
            if boundary {
                c.b = profile;
            } else {
                c.b2 = profile;
            }
        }
        SweepParam::Tau => c.tau = value,
        SweepParam::Xi => c.xi = value,
        SweepParam::Dt => c.dt = value,
        SweepParam::B1 => {
            if boundary {
                c.k = Some(value);
            } else {
                c.b1 = Some(ProfileSpec::Constant { value });
            }
        }
    }
    Ok(c)
}

fn compute_row(config: &ScenarioConfig, settings: &SweepSettings, value: f64) -> Result<SweepRow, CliError> {
    let cfg = apply(config, settings.param, value)?;
    let outcome = execute(&cfg)?;
    let sys = &outcome.model.system;
    let abscissa = spectral_report(sys, settings.n_rho)?.abscissa;
    let c2 = sys.b2_norm();
    let c_hat = match settings.c_obs {
        Some(c) => c,
        None => {
            estimate_observability(&sys.without_delay(), settings.t_horizon, settings.samples, settings.seed, cfg.dt)?
                .c_hat
        }
    };
    let small_gain = c_hat.is_finite()
        && check_small_gain(cfg.xi, c2, settings.t_horizon, c_zero(c_hat, settings.t_horizon, cfg.xi, c2)?);
    Ok(SweepRow {
        value,
        mu_hat: outcome.decay.ok().map(|d| d.mu_hat),
        abscissa,
        c2,
        c_hat,
        small_gain,
        eoc: None,
        final_state: outcome.simulation.final_state,
    })
}

fn distance(a: &State, b: &State) -> f64 {
    a.u.iter()
        .zip(&b.u)
        .chain(a.v.iter().zip(&b.v))
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Rows are computed concurrently (at most `settings.threads` at a time) and
/// returned in grid order.
pub fn sweep(config: &ScenarioConfig, settings: &SweepSettings) -> Result<Vec<SweepRow>, CliError> {
    if settings.grid.is_empty() {
        return Err(CliError::Config("sweep grid is empty".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = settings.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<SweepRow, CliError>> = pool.install(|| {
        settings
            .grid
            .par_iter()
            .map(|&v| compute_row(config, settings, v))
            .collect()
    });
    let mut rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    if settings.param == SweepParam::Dt {
        for i in 0..rows.len().saturating_sub(2) {
            let e1 = distance(&rows[i].final_state, &rows[i + 1].final_state);
            let e2 = distance(&rows[i + 1].final_state, &rows[i + 2].final_state);
            let ratio = rows[i].value / rows[i + 1].value;
            rows[i].eoc = Some((e1 / e2).ln() / ratio.ln());
        }
    }
    Ok(rows)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let name = match param {
        SweepParam::C2 => "c2",
        SweepParam::Tau => "tau",
        SweepParam::Xi => "xi",
        SweepParam::Dt => "dt",
        SweepParam::B1 => "b1",
    };
    let mut out = format!("{name},mu_hat,abscissa,C2,c_hat,small_gain,eoc\n");
    for r in rows {
        writeln!(
            out,
            "{:.16e},{},{:.16e},{:.16e},{:.16e},{},{}",
            r.value,
            opt(r.mu_hat),
            r.abscissa,
            r.c2,
            r.c_hat,
            r.small_gain,
            opt(r.eoc)
        )
        .expect("writing to a String cannot fail");
    }
    out
}
