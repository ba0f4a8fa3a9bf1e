//! The `run` subcommand: simulate a scenario and write `trace.csv` and `report.json`.

use std::fmt::Write as _;
use std::path::Path;

use delaystab::integrator::max_energy_increase;
use delaystab::{fit_decay, simulate, DecayEstimate, EnergyTrace, Model, Simulation};
use serde_json::json;

use crate::config::ScenarioConfig;
use crate::error::CliError;

pub const TRACE_HEADER: &str = "t,E,E_S,E_delay,P_b1,P_b2_now,P_b2_delayed";

pub struct RunOutcome {
    pub model: Model,
    pub simulation: Simulation,
    /// Fit failures (too short a window, zero energy) are reported, not fatal.
    pub decay: Result<DecayEstimate, String>,
}

pub fn execute(config: &ScenarioConfig) -> Result<RunOutcome, CliError> {
    let model = config.build_model()?;
    let init = config.initial_state(&model)?;
    let f0 = config.history(&model, &init)?;
    let simulation = simulate(
        &model.system,
        &init,
        f0,
        config.t_final,
        config.scheme(),
        config.mechanism(),
    )?;
    let decay = fit_decay(&simulation.trace, config.fit_window()).map_err(|e| e.to_string());
    Ok(RunOutcome {
        model,
        simulation,
        decay,
    })
}

/// CSV with 17 significant digits per value, enough to round-trip every `f64`.
pub fn trace_csv(trace: &EnergyTrace) -> String {
    let mut out = String::with_capacity(128 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for row in trace.rows() {
        let e = &row.energy;
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            row.t, e.e_total, e.e_standard, e.e_delay, e.p_b1, e.p_b2_now, e.p_b2_delayed
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn decay_json(d: &DecayEstimate) -> serde_json::Value {
    json!({
        "mu_hat": d.mu_hat,
        "k_hat": d.k_hat,
        "r_squared": d.r_squared,
        "window": [d.window.0, d.window.1],
        "envelope_points": d.envelope_points,
    })
}

pub fn report_json(config: &ScenarioConfig, outcome: &RunOutcome) -> String {
    let sys = &outcome.model.system;
    let trace = &outcome.simulation.trace;
    let rows = trace.rows();
    let mut report = json!({
        "config": config,
        "summary": {
            "steps": rows.len() - 1,
            "n_dof": sys.n_dof(),
            "m1": sys.m1(),
            "m2": sys.m2(),
            "b2_norm": sys.b2_norm(),
            "e_initial": rows[0].energy.e_total,
            "e_final": rows[rows.len() - 1].energy.e_total,
            "max_energy_increase": if rows.len() > 1 { max_energy_increase(trace) } else { 0.0 },
        },
    });
    match &outcome.decay {
        Ok(d) => report["decay"] = decay_json(d),
        Err(msg) => {
            report["decay"] = serde_json::Value::Null;
            report["fit_error"] = json!(msg);
        }
    }
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    text
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs `config` and writes `trace.csv` and `report.json` into `out_dir`.
pub fn run_to_dir(config: &ScenarioConfig, out_dir: &Path) -> Result<RunOutcome, CliError> {
    let outcome = execute(config)?;
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    write_file(&out_dir.join("trace.csv"), &trace_csv(&outcome.simulation.trace))?;
    write_file(&out_dir.join("report.json"), &report_json(config, &outcome))?;
    Ok(outcome)
}

/// Parses the `t` and `E` columns of a trace written by [`trace_csv`].
pub fn read_trace_csv(text: &str) -> Result<EnergyTrace, CliError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Config("empty trace file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let (it, ie) = match (cols.iter().position(|c| *c == "t"), cols.iter().position(|c| *c == "E")) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(CliError::Config("trace header needs columns 't' and 'E'".into())),
    };
    let mut samples = Vec::new();
    for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Result<f64, CliError> {
            fields
                .get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| CliError::Config(format!("trace line {}: bad value in column {i}", k + 2)))
        };
        samples.push((parse(it)?, parse(ie)?));
    }
    if samples.len() < 2 {
        return Err(CliError::Config("trace needs at least two rows".into()));
    }
    let dt = samples[1].0 - samples[0].0;
    Ok(EnergyTrace::from_total(dt, samples)?)
}
