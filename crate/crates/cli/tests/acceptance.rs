//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::Instant;

use delaystab::analysis::spectral_report;
use delaystab::constants::{c_zero, decay_k, decay_mu_tilde, h};
use delaystab::integrator::{slack_constant, verify_dissipation};
use delaystab::models::build_wave1d_interior;
use delaystab::{
    beta_threshold, check_small_gain, estimate_observability, simulate, DampingProfile, DecayConstants, EnergyTrace,
    Mechanism, SchemeParams, SemiDiscreteSystem, State, TransportField,
};
use delaystab_cli::config::ScenarioConfig;
use delaystab_cli::run::{execute, run_to_dir, trace_csv};
use nalgebra::DMatrix;
use serde_json::{json, Value};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn config(value: Value) -> ScenarioConfig {
    ScenarioConfig::from_json(&value.to_string()).expect("acceptance config is valid")
}

fn constant(value: f64) -> Value {
    json!({"kind": "constant", "value": value})
}

// 1. Conservation oracle.
fn conservation() -> Verdict {
    let cfg = config(json!({
        "model": "wave1d-interior", "n": 200, "tau": 0.1, "xi": 2.0, "dt": 1e-3, "t_final": 20.0,
        "b1": constant(0.0), "b2": constant(0.0),
        "init": {"kind": "eigenmode", "index": 1},
    }));
    let out = execute(&cfg).unwrap();
    let rows = out.simulation.trace.rows();
    let e0 = rows[0].energy.e_standard;
    let worst = rows
        .iter()
        .map(|r| (r.energy.e_standard / e0 - 1.0).abs())
        .fold(0.0, f64::max);
    verdict(worst <= 1e-8, format!("max |E_S/E_S(0) - 1| = {worst:.3e} over {} steps", rows.len() - 1))
}

// 2. Buffer and exact-shift transport give byte-identical traces.
fn mechanism_equivalence() -> Verdict {
    let cases = [
        json!({
            "model": "wave1d-interior", "n": 40, "tau": 1.0, "xi": 2.0, "dt": 0.01, "t_final": 10.0,
            "b1": constant(1.0), "b2": constant(0.09),
            "init": {"kind": "random", "seed": 11}, "f0": {"kind": "match-initial"},
        }),
        json!({
            "model": "beam1d-clamped", "n": 30, "tau": 0.25, "xi": 1.5, "dt": 0.005, "t_final": 5.0,
            "b1": {"kind": "indicator", "value": 2.0, "support": [0.1, 0.5]},
            "b2": {"kind": "indicator", "value": 0.5, "support": [0.3, 0.9]},
            "init": {"kind": "eigenmode", "index": 2}, "mode": "auxiliary",
        }),
        json!({
            "model": "wave1d-boundary", "n": 30, "tau": 0.5, "xi": 3.0, "dt": 0.01, "t_final": 5.0,
            "k": 0.5, "b": constant(0.2),
            "init": {"kind": "random", "seed": 5}, "f0": {"kind": "zero"},
        }),
    ];
    let mut identical = 0;
    for case in &cases {
        let mut transport = case.clone();
        transport["mechanism"] = json!("transport");
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_to_dir(&config(case.clone()), a.path()).unwrap();
        run_to_dir(&config(transport), b.path()).unwrap();
        let fa = std::fs::read(a.path().join("trace.csv")).unwrap();
        let fb = std::fs::read(b.path().join("trace.csv")).unwrap();
        if fa == fb {
            identical += 1;
        }
    }
    verdict(
        identical == cases.len(),
        format!("{identical}/{} configs byte-identical", cases.len()),
    )
}

fn dissipative_config(xi: f64, seed: u64, dt: f64, mode: &str) -> ScenarioConfig {
    config(json!({
        "model": "wave1d-interior", "n": 50, "tau": 1.0, "xi": xi, "dt": dt, "t_final": 10.0,
        "b1": constant(1.0), "b2": constant(0.3),
        "init": {"kind": "random", "seed": seed}, "f0": {"kind": "match-initial"},
        "mode": mode,
    }))
}

/// `max_k [E_k - E_0 - sum_{j<k} dt (b_j + b_{j+1})/2]`
fn accumulated_defect(trace: &EnergyTrace, bounds: &[f64]) -> f64 {
    let rows = trace.rows();
    let dt = trace.dt();
    let mut acc = 0.0;
    let mut worst = 0.0f64;
    for k in 1..rows.len() {
        acc += 0.5 * dt * (bounds[k - 1] + bounds[k]);
        worst = worst.max(rows[k].energy.e_total - rows[0].energy.e_total - acc);
    }
    worst
}

const XIS: [f64; 3] = [1.5, 2.0, 5.0];
const SEEDS: [u64; 3] = [1, 2, 3];
const DT_LEVELS: [f64; 2] = [1e-2, 5e-3];

// 3. Auxiliary energy is nonincreasing; accumulated bound holds up to O(dt).
fn auxiliary_monotonicity() -> Verdict {
    let mut worst_rise = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for xi in XIS {
        for seed in SEEDS {
            let mut defects = Vec::new();
            for dt in DT_LEVELS {
                let out = execute(&dissipative_config(xi, seed, dt, "auxiliary")).unwrap();
                let trace = &out.simulation.trace;
                let f0 = trace.rows()[0].energy.e_total;
                for w in trace.rows().windows(2) {
                    let rise = (w[1].energy.e_total - w[0].energy.e_total) / f0;
                    worst_rise = worst_rise.max(rise);
                    if rise > 1e-12 {
                        failures.push(format!("xi={xi} seed={seed} dt={dt}: F rises by {rise:.2e} F(0)"));
                        break;
                    }
                }
                defects.push((accumulated_defect(trace, &out.simulation.bounds), f0));
            }
            let c = defects[0].0.max(0.0) / DT_LEVELS[0];
            let (fine, f0) = defects[1];
            if fine > c * DT_LEVELS[1] + 1e-12 * f0 {
                failures.push(format!(
                    "xi={xi} seed={seed}: accumulated defect {fine:.3e} exceeds C dt = {:.3e}",
                    c * DT_LEVELS[1]
                ));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("9 runs x 2 levels; max (F_(k+1) - F_k)/F(0) = {worst_rise:.3e}")
    } else {
        failures.join("; ")
    };
    verdict(failures.is_empty(), detail)
}

// 4. Plain energy derivative stays below the dissipation bound plus C dt.
fn plain_inequality() -> Verdict {
    let mut failures = Vec::new();
    let mut worst_c = 0.0f64;
    for xi in XIS {
        for seed in SEEDS {
            let runs: Vec<_> = DT_LEVELS
                .iter()
                .map(|&dt| execute(&dissipative_config(xi, seed, dt, "plain")).unwrap())
                .collect();
            let floor = |trace: &EnergyTrace| 1e-12 * trace.rows()[0].energy.e_total;
            let coarse = &runs[0].simulation;
            let probe = verify_dissipation(&coarse.trace, &coarse.bounds, 0.0, floor(&coarse.trace)).unwrap();
            let c = slack_constant(&probe, DT_LEVELS[0]);
            worst_c = worst_c.max(c);
            let fine = &runs[1].simulation;
            let report = verify_dissipation(&fine.trace, &fine.bounds, c, floor(&fine.trace)).unwrap();
            if report.violations > 0 {
                failures.push(format!(
                    "xi={xi} seed={seed}: {} violations (max {:.3e} over slack)",
                    report.violations, report.max_violation
                ));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("zero violations at dt = {}; largest C = {worst_c:.3e}", DT_LEVELS[1])
    } else {
        failures.join("; ")
    };
    verdict(failures.is_empty(), detail)
}

// 5. Constants.
fn constants_suite() -> Verdict {
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };
    check(c_zero(1.0, 2.0, 2.0, 0.0).unwrap() == 2.0, "C0(1,2,2,0) = 2");
    check(decay_k(2.0) == 1.5, "K(2) = 1.5");
    check((decay_mu_tilde(2.0, 2.0) - 1.5f64.ln() / 4.0).abs() <= 1e-14, "mu_tilde(2,2) = ln(1.5)/4");
    let e = std::f64::consts::E;
    check((h(1.0 / (e - 1.0)) - 1.0 / e).abs() <= 1e-12, "h(1/(e-1)) = 1/e");
    for c0 in [0.7, 2.0, 5.0176, 40.0] {
        for t in [0.5, 2.0, 4.0] {
            let v = decay_k(c0) * (-2.0 * t * decay_mu_tilde(c0, t)).exp();
            check((v - 1.0).abs() <= 1e-12, "K exp(-2 T mu_tilde) = 1");
        }
    }
    let b = beta_threshold(1.0, 2.0, 2.0).unwrap();
    let residual = 2.0 * 2.0 * b.beta * b.beta * 2.0 - h(c_zero(1.0, 2.0, 2.0, b.beta).unwrap());
    check(residual.abs() <= 1e-12, "beta residual <= 1e-12");
    check(b.beta > 0.13 && b.beta < 0.14, "beta in (0.13, 0.14)");
    let gain = |c2: f64| check_small_gain(2.0, c2, 2.0, c_zero(1.0, 2.0, 2.0, c2).unwrap());
    check(gain(b.beta * (1.0 - 1e-6)) && !gain(b.beta * (1.0 + 1e-6)), "small-gain flips across beta");
    let detail = if failures.is_empty() {
        format!("beta(1,2,2) = {:.12}, residual {residual:.1e}", b.beta)
    } else {
        format!("failed: {}", failures.join(", "))
    };
    verdict(failures.is_empty(), detail)
}

const OBS_SEED: u64 = 20_240_601;

struct SmallGainSetup {
    config: ScenarioConfig,
    c_hat: f64,
    beta_hat: f64,
    constants: DecayConstants,
}

/// Criterion 6 scenario at observability horizon `t_horizon`.
fn small_gain_setup(t_horizon: f64) -> SmallGainSetup {
    let (n, xi, dt, tau) = (40, 2.0, 0.01, 1.0);
    let undelayed = build_wave1d_interior(n, 1.0, &DampingProfile::Constant(1.0), &DampingProfile::zero(), tau, xi)
        .unwrap()
        .system;
    let c_hat = estimate_observability(&undelayed, t_horizon, 32, OBS_SEED, dt).unwrap().c_hat;
    let beta_hat = beta_threshold(c_hat, t_horizon, xi).unwrap().beta;
    let c2 = 0.5 * beta_hat;
    let config = config(json!({
        "model": "wave1d-interior", "n": n, "tau": tau, "xi": xi, "dt": dt, "t_final": 20.0,
        "b1": constant(1.0), "b2": constant(c2 * c2),
        "init": {"kind": "random", "seed": OBS_SEED}, "f0": {"kind": "match-initial"},
    }));
    let constants = DecayConstants::compute(c_hat, t_horizon, xi, c2).unwrap();
    SmallGainSetup {
        config,
        c_hat,
        beta_hat,
        constants,
    }
}

/// Largest `E(t) / (K exp(-mu t) E(0))` over the trace.
fn envelope_ratio(trace: &EnergyTrace, constants: &DecayConstants) -> f64 {
    let e0 = trace.rows()[0].energy.e_total;
    trace
        .rows()
        .iter()
        .map(|r| r.energy.e_total / (constants.envelope(r.t) * e0))
        .fold(0.0, f64::max)
}

// 6. Stabilization below the small-gain threshold.
fn small_gain_stabilization() -> Verdict {
    let setup = small_gain_setup(4.0);
    let out = execute(&setup.config).unwrap();
    let mu_hat = out.decay.as_ref().map(|d| d.mu_hat).unwrap_or(f64::NAN);
    let abscissa = spectral_report(&out.model.system, 21).unwrap().abscissa;
    let mut ratio = envelope_ratio(&out.simulation.trace, &setup.constants);
    let mut note = String::new();
    if ratio > 1.0 {
        // c_hat is only a lower bound; refine the horizon before failing.
        let refined = small_gain_setup(8.0);
        let out8 = execute(&refined.config).unwrap();
        let r8 = envelope_ratio(&out8.simulation.trace, &refined.constants);
        note = format!("; FINDING: envelope exceeded at T=4 (ratio {ratio:.3}), T=8 ratio {r8:.3}");
        ratio = r8;
    }
    let pass = mu_hat > 0.0 && abscissa < 0.0 && ratio <= 1.0;
    verdict(
        pass,
        format!(
            "c_hat = {:.4}, beta_hat = {:.4}, C2 = {:.4}, mu_hat = {mu_hat:.4}, abscissa = {abscissa:.4}, \
             mu_explicit = {:.3e}, max E/envelope = {ratio:.3e}{note}",
            setup.c_hat, setup.beta_hat, setup.constants.c2, setup.constants.mu_effective
        ),
    )
}

// 7. Delay-induced instability of the undamped loop.
fn delay_instability() -> Verdict {
    let mut found = Vec::new();
    let mut lines = Vec::new();
    for tau in [0.5, 1.0, 2.0] {
        let cfg = config(json!({
            "model": "wave1d-interior", "n": 20, "tau": tau, "xi": 2.0, "dt": 0.01, "t_final": 30.0,
            "b1": constant(0.0), "b2": constant(1.0),
            "init": {"kind": "eigenmode", "index": 1},
        }));
        let out = execute(&cfg).unwrap();
        let rows = out.simulation.trace.rows();
        let growth = rows[rows.len() - 1].energy.e_total / rows[0].energy.e_total;
        let abscissa = spectral_report(&out.model.system, 41).unwrap().abscissa;
        lines.push(format!("tau={tau}: abscissa {abscissa:.3}, E(T)/E(0) {growth:.2e}"));
        if abscissa > 0.0 && growth > 10.0 {
            found.push(tau);
        }
    }
    verdict(!found.is_empty(), format!("unstable at tau {found:?} ({})", lines.join("; ")))
}

// 8. Fitted decay rate against the spectral abscissa.
fn spectral_consistency() -> Verdict {
    let base = |model: &str, n: usize, tau: f64, dt: f64, t_final: f64| {
        json!({
            "model": model, "n": n, "tau": tau, "xi": 2.0, "dt": dt, "t_final": t_final,
            "init": {"kind": "eigenmode", "index": 1}, "f0": {"kind": "match-initial"},
        })
    };
    let with = |mut v: Value, extra: Value| {
        for (k, x) in extra.as_object().unwrap() {
            v[k] = x.clone();
        }
        v
    };
    let cases = [
        ("wave b1=1", with(base("wave1d-interior", 40, 1.0, 0.01, 20.0), json!({"b1": constant(1.0), "b2": constant(0.0)}))),
        ("wave b1=0.5 delayed", with(base("wave1d-interior", 40, 0.5, 0.01, 30.0), json!({"b1": constant(0.5), "b2": constant(0.01)}))),
        ("wave b1=2 delayed", with(base("wave1d-interior", 40, 1.0, 0.01, 12.0), json!({"b1": constant(2.0), "b2": constant(0.1)}))),
        ("beam hinged b1=1", with(base("beam1d-hinged", 30, 1.0, 0.002, 20.0), json!({"b1": constant(1.0), "b2": constant(0.0)}))),
        ("beam hinged b1=1.5 delayed", with(base("beam1d-hinged", 30, 0.5, 0.002, 15.0), json!({"b1": constant(1.5), "b2": constant(0.05)}))),
        ("beam clamped b1=0.8 delayed", with(base("beam1d-clamped", 30, 1.0, 0.002, 20.0), json!({"b1": constant(0.8), "b2": constant(0.02)}))),
    ];
    let mut ok = 0;
    let mut lines = Vec::new();
    for (name, case) in &cases {
        let out = execute(&config(case.clone())).unwrap();
        let mu_hat = out.decay.as_ref().map(|d| d.mu_hat).unwrap_or(f64::NAN);
        let alpha = spectral_report(&out.model.system, 21).unwrap().abscissa;
        let rel = (mu_hat - 2.0 * alpha.abs()).abs() / (2.0 * alpha.abs());
        let pass = alpha < 0.0 && rel < 0.15;
        if pass {
            ok += 1;
        }
        lines.push(format!("{name}: mu_hat {mu_hat:.4} vs 2|alpha| {:.4} (rel {rel:.3})", 2.0 * alpha.abs()));
    }
    verdict(ok == cases.len(), format!("{ok}/{} within 15%: {}", cases.len(), lines.join("; ")))
}

fn eoc(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

// 9. Observed orders of the Newmark scheme and the upwind transport.
fn scheme_order() -> Verdict {
    // u'' + c u' + lambda u = 0 with u(0) = 1, u'(0) = 0.
    let (lambda, c, t_end) = (4.0, 0.2f64, 5.0);
    let sys = SemiDiscreteSystem::new(
        DMatrix::from_element(1, 1, lambda),
        DMatrix::from_element(1, 1, c.sqrt()),
        DMatrix::zeros(1, 0),
        1.0,
        2.0,
    )
    .unwrap();
    let omega = (lambda - 0.25 * c * c).sqrt();
    let exact = (-0.5 * c * t_end).exp() * ((omega * t_end).cos() + 0.5 * c / omega * (omega * t_end).sin());
    let scalar_err: Vec<f64> = [0.02, 0.01, 0.005]
        .iter()
        .map(|&dt| {
            let init = State::new(0.0, vec![1.0], vec![0.0]);
            let f0 = vec![vec![]; (1.0 / dt) as usize + 1];
            let sim = simulate(&sys, &init, f0, t_end, SchemeParams::new(dt), Mechanism::Buffer).unwrap();
            (sim.final_state.u[0] - exact).abs()
        })
        .collect();

    // Undamped wave eigenmode: u(t) = cos(sqrt(lambda_1) t) phi_1, error in
    // the energy norm.
    let model = build_wave1d_interior(50, 1.0, &DampingProfile::zero(), &DampingProfile::zero(), 0.1, 2.0).unwrap();
    let (lam1, phi) = model.system.lowest_modes(1).pop().unwrap();
    let t_end = 2.0;
    let wave_err: Vec<f64> = [0.02f64, 0.01, 0.005]
        .iter()
        .map(|&dt| {
            let init = model.eigenmode_state(1).unwrap();
            let f0 = vec![vec![]; (0.1 / dt).round() as usize + 1];
            let sim = simulate(&model.system, &init, f0, t_end, SchemeParams::new(dt), Mechanism::Buffer).unwrap();
            let omega = lam1.sqrt();
            let (cu, cv) = ((omega * t_end).cos(), -omega * (omega * t_end).sin());
            let s = &sim.final_state;
            let du: Vec<f64> = s.u.iter().zip(&phi).map(|(u, p)| u - cu * p).collect();
            let dv: f64 = s.v.iter().zip(&phi).map(|(v, p)| (v - cv * p).powi(2)).sum();
            let au = model.system.apply_stiffness(&du);
            (du.iter().zip(&au).map(|(a, b)| a * b).sum::<f64>() + dv).sqrt()
        })
        .collect();

    // tau z_t + z_rho = 0 with inflow sin(t): the tail is sin(t - tau).
    let (tau, t_end) = (1.0, 3.0);
    let transport_err: Vec<f64> = [21usize, 41, 81]
        .iter()
        .map(|&m| {
            let dt = 0.5 * tau / (m - 1) as f64;
            let f0: Vec<Vec<f64>> = (0..m).map(|i| vec![(-tau + i as f64 * tau / (m - 1) as f64).sin()]).collect();
            let mut field = TransportField::from_history(&f0, m, tau).unwrap();
            let steps = (t_end / dt).round() as usize;
            let mut worst = 0.0f64;
            for k in 1..=steps {
                let t = k as f64 * dt;
                field.step_transport(&[t.sin()], dt).unwrap();
                worst = worst.max((field.tail()[0] - (t - tau).sin()).abs());
            }
            worst
        })
        .collect();

    let (s, w, t) = (eoc(&scalar_err), eoc(&wave_err), eoc(&transport_err));
    let second = |v: &[f64]| v.iter().all(|x| (1.8..=2.2).contains(x));
    let first = |v: &[f64]| v.iter().all(|x| (0.8..=1.2).contains(x));
    verdict(
        second(&s) && second(&w) && first(&t),
        format!("scalar EOC {s:.3?}, wave EOC {w:.3?}, transport EOC {t:.3?}"),
    )
}

// 10. Reproducibility of criterion 6 outputs.
fn determinism() -> Verdict {
    let files = |dir: &std::path::Path| {
        let setup = small_gain_setup(4.0);
        run_to_dir(&setup.config, dir).unwrap();
        (
            std::fs::read(dir.join("trace.csv")).unwrap(),
            std::fs::read(dir.join("report.json")).unwrap(),
        )
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ta, ra) = files(a.path());
    let (tb, rb) = files(b.path());
    let in_memory = {
        let cfg = small_gain_setup(4.0).config;
        trace_csv(&execute(&cfg).unwrap().simulation.trace).into_bytes()
    };
    let pass = ta == tb && ra == rb && ta == in_memory;
    verdict(pass, format!("trace.csv {} bytes, report.json {} bytes", ta.len(), ra.len()))
}

fn main() {
    // (name, check, time budget in seconds)
    type Criterion = (&'static str, fn() -> Verdict, Option<f64>);
    let criteria: [Criterion; 10] = [
        ("conservation oracle", conservation, Some(5.0)),
        ("mechanism equivalence", mechanism_equivalence, Some(10.0)),
        ("auxiliary energy monotonicity", auxiliary_monotonicity, Some(30.0)),
        ("plain dissipation inequality", plain_inequality, Some(30.0)),
        ("decay constants", constants_suite, Some(1.0)),
        ("stabilization under small delay gain", small_gain_stabilization, Some(60.0)),
        ("delay-induced instability", delay_instability, Some(30.0)),
        ("spectral/time-domain consistency", spectral_consistency, Some(120.0)),
        ("scheme order", scheme_order, Some(30.0)),
        ("determinism", determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = run();
        let secs = start.elapsed().as_secs_f64();
        let in_time = limit.is_none_or(|l| secs < l);
        let pass = v.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = limit.map(|l| format!(" / {l} s")).unwrap_or_default();
        println!(
            "{} criterion {:2} ({name}): {} [{secs:.2} s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
