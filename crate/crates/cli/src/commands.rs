use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use delaystab::analysis::{fit_decay_with, spectral_report, DEFAULT_ENVELOPE_BLOCKS};
use delaystab::constants::{c_zero, h};
use delaystab::{beta_threshold, estimate_observability, DecayConstants};

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::run::{decay_json, read_trace_csv, run_to_dir, write_file};
use crate::sweep::{sweep, sweep_csv, threads_from_env, SweepParam, SweepSettings};

const LOWER_BOUND_NOTE: &str =
    "note: c_hat is a lower bound (finite ensemble); thresholds derived from it may be optimistic";

#[derive(Debug, Parser)]
#[command(name = "delaystab", version, about = "Stability laboratory for delayed damping")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a scenario; writes trace.csv and report.json.
    Run {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Decay constants C0, K, mu_tilde, mu for given (c, T, xi, C2).
    Constants {
        #[arg(long)]
        c: f64,
        #[arg(long = "T")]
        t_horizon: f64,
        #[arg(long)]
        xi: f64,
        #[arg(long = "C2", default_value_t = 0.0)]
        c2: f64,
    },
    /// Small-gain threshold beta solving 2 xi beta^2 T = h(C0(beta)).
    Beta {
        #[arg(long)]
        c: f64,
        #[arg(long = "T")]
        t_horizon: f64,
        #[arg(long)]
        xi: f64,
    },
    /// Ensemble estimate of the observability constant of the undelayed system.
    Observability {
        config: PathBuf,
        #[arg(long = "T")]
        t_horizon: f64,
        #[arg(long, default_value_t = 32)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Time step (defaults to the config's dt).
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Spectral abscissa of the discretized generator.
    Spectrum {
        config: PathBuf,
        /// Transport grid points (defaults to the config's n_rho, else 21).
        #[arg(long)]
        n_rho: Option<usize>,
        /// Also list all eigenvalues.
        #[arg(long)]
        eigenvalues: bool,
    },
    /// Envelope fit of the E column of a trace file.
    Fit {
        trace: PathBuf,
        #[arg(long, num_args = 2, value_names = ["T0", "T1"])]
        window: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_ENVELOPE_BLOCKS)]
        blocks: usize,
    },
    /// Run a scenario over a parameter grid; writes sweep.csv.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
        /// Observability constant; estimated for every row when omitted.
        #[arg(long)]
        c_obs: Option<f64>,
        #[arg(long = "T", default_value_t = 4.0)]
        t_horizon: f64,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 21)]
        n_rho: usize,
    },
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Reports go to `out`, diagnostics to `err`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::Config(format!("bad grid value '{s}'")))
        })
        .collect()
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Run { config, out: dir } => {
            let cfg = ScenarioConfig::load(&config)?;
            let outcome = run_to_dir(&cfg, &dir)?;
            match &outcome.decay {
                Ok(d) => writeln!(out, "mu_hat = {}  k_hat = {}  r_squared = {}", d.mu_hat, d.k_hat, d.r_squared),
                Err(msg) => writeln!(out, "fit skipped: {msg}"),
            }
            .map_err(io)?;
            writeln!(out, "wrote {} and {}", dir.join("trace.csv").display(), dir.join("report.json").display())
                .map_err(io)
        }
        Command::Constants {
            c,
            t_horizon,
            xi,
            c2,
        } => {
            let d = DecayConstants::compute(c, t_horizon, xi, c2)?;
            writeln!(
                out,
                "C0 = {}\nK = {}\nmu_tilde = {}\nmu = {}\nstable = {}",
                d.c_zero, d.big_k, d.mu_tilde, d.mu_effective, d.stable
            )
            .map_err(io)
        }
        Command::Beta { c, t_horizon, xi } => {
            let b = beta_threshold(c, t_horizon, xi)?;
            let c0 = c_zero(c, t_horizon, xi, b.beta)?;
            writeln!(
                out,
                "beta = {}\nresidual = {:e}\niterations = {}\nC0(beta) = {}\nh(C0(beta)) = {}",
                b.beta,
                b.residual,
                b.iterations,
                c0,
                h(c0)
            )
            .map_err(io)
        }
        Command::Observability {
            config,
            t_horizon,
            samples,
            seed,
            dt,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let model = cfg.build_model()?;
            let est = estimate_observability(
                &model.system.without_delay(),
                t_horizon,
                samples,
                seed,
                dt.unwrap_or(cfg.dt),
            )?;
            writeln!(
                out,
                "c_hat = {}\nT = {}\nn_samples = {}\nobservable = {}\n{LOWER_BOUND_NOTE}",
                est.c_hat,
                est.t_horizon,
                est.n_samples,
                est.is_observable()
            )
            .map_err(io)
        }
        Command::Spectrum {
            config,
            n_rho,
            eigenvalues,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let model = cfg.build_model()?;
            let n_rho = n_rho.or(cfg.n_rho).unwrap_or(21);
            let report = spectral_report(&model.system, n_rho)?;
            writeln!(
                out,
                "dimension = {}\nn_rho = {}\nabscissa = {}",
                report.eigenvalues.len(),
                n_rho,
                report.abscissa
            )
            .map_err(io)?;
            if eigenvalues {
                let mut ev = report.eigenvalues.clone();
                ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
                for z in ev {
                    writeln!(out, "{:.16e} {:.16e}", z.re, z.im).map_err(io)?;
                }
            }
            Ok(())
        }
        Command::Fit {
            trace,
            window,
            blocks,
        } => {
            let text = std::fs::read_to_string(&trace).map_err(|source| CliError::Io {
                path: trace.clone(),
                source,
            })?;
            let tr = read_trace_csv(&text)?;
            let rows = tr.rows();
            let window = match window.as_deref() {
                Some([a, b]) => (*a, *b),
                _ => (rows[0].t, rows[rows.len() - 1].t),
            };
            let d = fit_decay_with(&tr, window, blocks)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&decay_json(&d)).expect("serializes")).map_err(io)
        }
        Command::Sweep {
            config,
            param,
            grid,
            out: path,
            c_obs,
            t_horizon,
            samples,
            seed,
            n_rho,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let settings = SweepSettings {
                param,
                grid: parse_grid(&grid)?,
                c_obs,
                t_horizon,
                samples,
                seed,
                n_rho,
                threads: threads_from_env()?,
            };
            let rows = sweep(&cfg, &settings)?;
            write_file(&path, &sweep_csv(param, &rows))?;
            if c_obs.is_none() {
                writeln!(out, "{LOWER_BOUND_NOTE}").map_err(io)?;
            }
            writeln!(out, "wrote {} rows to {}", rows.len(), path.display()).map_err(io)
        }
    }
}
