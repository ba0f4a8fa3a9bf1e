//! Newmark time stepping for the delayed system and its auxiliary variant.
//!
//! Stiffness and instantaneous damping are implicit; the delayed term is
//! explicit data read from the delay line. With `beta = 1/4, gamma = 1/2`
//! (average acceleration) the scheme conserves `E_S` exactly in the
//! undamped limit, so any change of energy is attributable to the feedback.

use nalgebra::DMatrix;

use crate::delay::{steps_per_delay, DelayHistory, DelayLine, HistoryBuffer, TransportField};
use crate::error::{Error, Result};
use crate::linalg::{BandedCholesky, CsrMatrix};
use crate::system::{
    aux_dissipation_bound, dissipation_bound, total_energy, EnergyTrace, SemiDiscreteSystem, State,
};

/// `Plain` integrates the delayed problem; `Auxiliary` adds the damping
/// `xi B2 B2* v`, whose energy `F` is nonincreasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Plain,
    Auxiliary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    pub dt: f64,
    pub newmark_beta: f64,
    pub newmark_gamma: f64,
    pub mode: Mode,
}

impl SchemeParams {
    /// Average-acceleration Newmark in plain mode.
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            newmark_beta: 0.25,
            newmark_gamma: 0.5,
            mode: Mode::Plain,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::config(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.newmark_gamma >= 0.5) {
            return Err(Error::config(format!(
                "newmark gamma must be at least 1/2, got {}",
                self.newmark_gamma
            )));
        }
        if !(self.newmark_beta >= 0.0) {
            return Err(Error::config(format!(
                "newmark beta must be nonnegative, got {}",
                self.newmark_beta
            )));
        }
        Ok(())
    }
}

/// State plus the acceleration carried by the Newmark recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    pub state: State,
    pub accel: Vec<f64>,
    step: u64,
}

/// A factored Newmark stepper for one system and one set of scheme parameters.
#[derive(Debug, Clone)]
pub struct Newmark<'a> {
    sys: &'a SemiDiscreteSystem,
    params: SchemeParams,
    damping: CsrMatrix,
    factor: BandedCholesky,
}

impl<'a> Newmark<'a> {
    pub fn new(sys: &'a SemiDiscreteSystem, params: SchemeParams) -> Result<Self> {
        params.validate()?;
        let n = sys.n_dof();
        let mut damping: DMatrix<f64> = sys.b1_map() * sys.b1_map().transpose();
        if params.mode == Mode::Auxiliary {
            damping += sys.xi() * (sys.b2_map() * sys.b2_map().transpose());
        }
        let (dt, beta, gamma) = (params.dt, params.newmark_beta, params.newmark_gamma);
        let system_matrix = DMatrix::<f64>::identity(n, n)
            + gamma * dt * &damping
            + beta * dt * dt * sys.stiffness();
        let factor = BandedCholesky::factor(&system_matrix)?;
        Ok(Self {
            sys,
            params,
            damping: CsrMatrix::from_dense(&damping),
            factor,
        })
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    /// `out = -A u - D v - B2 delayed`
    fn force(&self, u: &[f64], v: &[f64], delayed: &[f64], out: &mut [f64]) {
        self.sys.stiffness_csr().mul_vec(u, out);
        out.iter_mut().for_each(|x| *x = -*x);
        self.damping.mul_vec_add(-1.0, v, out);
        if !delayed.is_empty() {
            self.sys.b2_csr().mul_vec_add(-1.0, delayed, out);
        }
    }

    /// Consistent initial acceleration for `state` with delayed sample `delayed`.
    pub fn start(&self, state: State, delayed: &[f64]) -> Result<Kinematics> {
        self.sys.check_state(&state)?;
        if delayed.len() != self.sys.m2() {
            return Err(Error::usage(format!(
                "delayed sample has length {}, expected {}",
                delayed.len(),
                self.sys.m2()
            )));
        }
        let mut accel = vec![0.0; self.sys.n_dof()];
        self.force(&state.u, &state.v, delayed, &mut accel);
        Ok(Kinematics {
            state,
            accel,
            step: 0,
        })
    }

    /// One step to `t + dt`; `delayed_next` is `B2* u'(t + dt - tau)`.
    pub fn step(&self, kin: &mut Kinematics, delayed_next: &[f64]) {
        let n = self.sys.n_dof();
        let SchemeParams {
            dt,
            newmark_beta: beta,
            newmark_gamma: gamma,
            ..
        } = self.params;
        let (u, v, a) = (&kin.state.u, &kin.state.v, &kin.accel);
        let mut u_pred = vec![0.0; n];
        let mut v_pred = vec![0.0; n];
        for i in 0..n {
            u_pred[i] = u[i] + dt * v[i] + dt * dt * (0.5 - beta) * a[i];
            v_pred[i] = v[i] + dt * (1.0 - gamma) * a[i];
        }
        let mut a_new = vec![0.0; n];
        self.force(&u_pred, &v_pred, delayed_next, &mut a_new);
        self.factor.solve_in_place(&mut a_new);
        for i in 0..n {
            u_pred[i] += beta * dt * dt * a_new[i];
            v_pred[i] += gamma * dt * a_new[i];
        }
        kin.step += 1;
        kin.state = State::new(kin.step as f64 * dt, u_pred, v_pred);
        kin.accel = a_new;
    }
}

/// Convenience single step that factors the system matrix on every call.
pub fn step(
    sys: &SemiDiscreteSystem,
    kin: &mut Kinematics,
    delayed_next: &[f64],
    params: SchemeParams,
) -> Result<()> {
    let stepper = Newmark::new(sys, params)?;
    stepper.step(kin, delayed_next);
    Ok(())
}

/// How the delayed trace is produced during a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mechanism {
    #[default]
    Buffer,
    /// Upwind transport on `n_rho` points; `None` selects the exact-shift grid
    /// `n_rho = tau / dt + 1`.
    Transport { n_rho: Option<usize> },
}

#[derive(Debug, Clone, Default)]
pub struct SimulationOptions {
    /// Keep every `k`-th state (0 keeps none).
    pub snapshot_every: usize,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub trace: EnergyTrace,
    /// Dissipation bound (plain) or auxiliary bound at every trace row.
    pub bounds: Vec<f64>,
    pub final_state: State,
    pub snapshots: Vec<State>,
}

fn build_delay_line(
    sys: &SemiDiscreteSystem,
    f0: Vec<Vec<f64>>,
    dt: f64,
    mechanism: Mechanism,
) -> Result<DelayLine> {
    let tau = sys.tau();
    if f0.iter().any(|s| s.len() != sys.m2()) {
        return Err(Error::usage(format!(
            "initial history samples must have length m2 = {}",
            sys.m2()
        )));
    }
    match mechanism {
        Mechanism::Buffer => Ok(DelayLine::Buffer(HistoryBuffer::init(f0, dt, tau)?)),
        Mechanism::Transport { n_rho } => {
            let cap = steps_per_delay(dt, tau)? + 1;
            if f0.len() != cap {
                return Err(Error::usage(format!(
                    "initial history needs {cap} samples on [-tau, 0], got {}",
                    f0.len()
                )));
            }
            let m_rho = n_rho.unwrap_or(cap);
            let field = TransportField::from_history(&f0, m_rho, tau)?;
            let nu = field.cfl(dt);
            if nu > 1.0 + 1e-9 {
                return Err(Error::config(format!(
                    "transport grid with {m_rho} points gives CFL number {nu} > 1"
                )));
            }
            Ok(DelayLine::Transport { field, dt })
        }
    }
}

/// Integrates on `[0, t_final]` from `init` with history `f0`.
///
/// `f0` holds `B2* u'` at `-tau, -tau + dt, ..., 0`. The sample at `t = 0` is
/// replaced by `B2* init.v`, since the history prescribes the trace only on
/// the open interval `(-tau, 0)`.
pub fn simulate(
    sys: &SemiDiscreteSystem,
    init: &State,
    f0: Vec<Vec<f64>>,
    t_final: f64,
    params: SchemeParams,
    mechanism: Mechanism,
) -> Result<Simulation> {
    simulate_with(sys, init, f0, t_final, params, mechanism, &SimulationOptions::default())
}

pub fn simulate_with(
    sys: &SemiDiscreteSystem,
    init: &State,
    f0: Vec<Vec<f64>>,
    t_final: f64,
    params: SchemeParams,
    mechanism: Mechanism,
    options: &SimulationOptions,
) -> Result<Simulation> {
    params.validate()?;
    sys.check_state(init)?;
    let dt = params.dt;
    let ratio = t_final / dt;
    if !(t_final >= 0.0) || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::config(format!(
            "t_final = {t_final} must be a nonnegative multiple of dt = {dt}"
        )));
    }
    let n_steps = ratio.round() as u64;

    let stepper = Newmark::new(sys, params)?;
    let mut line = build_delay_line(sys, f0, dt, mechanism)?;
    let mut current = sys.b2_adjoint(&init.v);
    line.replace_current(&current);

    let start = State::new(0.0, init.u.clone(), init.v.clone());
    let mut kin = stepper.start(start, line.delayed())?;

    let bound = |s: &State, d: &[f64]| match params.mode {
        Mode::Plain => dissipation_bound(sys, s, d),
        Mode::Auxiliary => aux_dissipation_bound(sys, s, d),
    };

    let mut trace = EnergyTrace::new(dt);
    let mut bounds = Vec::with_capacity(n_steps as usize + 1);
    let mut snapshots = Vec::new();
    let mut record = |kin: &Kinematics, line: &DelayLine, trace: &mut EnergyTrace| -> Result<()> {
        let e = total_energy(sys, &kin.state, line)?;
        if !e.e_total.is_finite() {
            return Err(Error::numerical(format!(
                "energy became non-finite at t = {}",
                kin.state.t
            )));
        }
        trace.push(kin.state.t, e)?;
        bounds.push(bound(&kin.state, line.delayed())?);
        if options.snapshot_every > 0 && kin.step.is_multiple_of(options.snapshot_every as u64) {
            snapshots.push(kin.state.clone());
        }
        Ok(())
    };

    record(&kin, &line, &mut trace)?;
    let mut delayed_next = vec![0.0; sys.m2()];
    for _ in 0..n_steps {
        line.peek_next(&mut delayed_next)?;
        stepper.step(&mut kin, &delayed_next);
        sys.b2_adjoint_into(&kin.state.v, &mut current);
        line.advance(&current)?;
        debug_assert_eq!(line.delayed(), delayed_next.as_slice());
        record(&kin, &line, &mut trace)?;
    }

    Ok(Simulation {
        trace,
        bounds,
        final_state: kin.state,
        snapshots,
    })
}

/// Outcome of comparing the discrete energy derivative with a bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationReport {
    /// `max_k [(E_{k+1} - E_k)/dt - (b_k + b_{k+1})/2]`
    pub max_excess: f64,
    /// Largest excess beyond the allowed slack (negative when none).
    pub max_violation: f64,
    pub violations: usize,
    pub slack: f64,
    /// Largest positive discrete derivative observed (0 if the energy never grows).
    pub max_growth_rate: f64,
}

/// Checks `(E_{k+1} - E_k)/dt <= bound + slack` with `slack = c_slack * dt + floor`.
///
/// The bound on step `k -> k+1` is the average of its values at both ends,
/// which matches the second-order accuracy of the difference quotient.
pub fn verify_dissipation(
    trace: &EnergyTrace,
    bounds: &[f64],
    c_slack: f64,
    floor: f64,
) -> Result<DissipationReport> {
    if trace.len() < 2 {
        return Err(Error::usage("dissipation check needs at least 2 trace rows"));
    }
    if bounds.len() != trace.len() {
        return Err(Error::usage(format!(
            "{} bounds for {} trace rows",
            bounds.len(),
            trace.len()
        )));
    }
    let dt = trace.dt();
    let slack = c_slack * dt + floor;
    let rows = trace.rows();
    let mut report = DissipationReport {
        max_excess: f64::NEG_INFINITY,
        max_violation: f64::NEG_INFINITY,
        violations: 0,
        slack,
        max_growth_rate: 0.0,
    };
    for k in 0..rows.len() - 1 {
        let deriv = (rows[k + 1].energy.e_total - rows[k].energy.e_total) / dt;
        let excess = deriv - 0.5 * (bounds[k] + bounds[k + 1]);
        report.max_excess = report.max_excess.max(excess);
        report.max_violation = report.max_violation.max(excess - slack);
        report.max_growth_rate = report.max_growth_rate.max(deriv);
        if excess > slack {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// Slack constant `C` from a run at step `dt`: `max(max_excess, 0) / dt`.
pub fn slack_constant(report: &DissipationReport, dt: f64) -> f64 {
    report.max_excess.max(0.0) / dt
}

/// Largest single-step increase `max_k (E_{k+1} - E_k)` of the total energy.
pub fn max_energy_increase(trace: &EnergyTrace) -> f64 {
    trace
        .rows()
        .windows(2)
        .map(|w| w[1].energy.e_total - w[0].energy.e_total)
        .fold(f64::NEG_INFINITY, f64::max)
}
