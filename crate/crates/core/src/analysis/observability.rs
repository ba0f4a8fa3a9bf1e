use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::{simulate, Mechanism, SchemeParams};
use crate::rng::SplitMix64;
use crate::system::{standard_energy, SemiDiscreteSystem, State};

/// `c_hat = max E_S(0) / int_0^T |B1* w_t|^2 dt` over a finite ensemble.
///
/// This is a lower bound for the true observability constant (a supremum
/// over all initial data), so any small-gain threshold derived from it may be
/// optimistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservabilityEstimate {
    /// `f64::INFINITY` when some member produced no observation at all.
    pub c_hat: f64,
    pub t_horizon: f64,
    pub n_samples: usize,
    pub is_lower_bound: bool,
}

impl ObservabilityEstimate {
    pub fn is_observable(&self) -> bool {
        self.c_hat.is_finite()
    }
}

/// Initial datum `index` of the observability ensemble, normalized to `E_S = 1`.
///
/// Even indices `2k` are the `(k+1)`-th stiffness eigenmode (as displacement);
/// odd indices are uniform random displacement and velocity drawn from
/// `SplitMix64(seed + index)`. Members do not depend on the ensemble size.
pub fn ensemble_member(
    sys: &SemiDiscreteSystem,
    modes: &[(f64, Vec<f64>)],
    index: usize,
    seed: u64,
) -> Result<State> {
    let n = sys.n_dof();
    let mut state = if index.is_multiple_of(2) {
        let (_, mode) = modes
            .get(index / 2)
            .ok_or_else(|| Error::usage(format!("ensemble needs eigenmode {}", index / 2 + 1)))?;
        State::new(0.0, mode.clone(), vec![0.0; n])
    } else {
        let mut rng = SplitMix64::new(seed.wrapping_add(index as u64));
        let u = (0..n).map(|_| rng.next_symmetric()).collect();
        let v = (0..n).map(|_| rng.next_symmetric()).collect();
        State::new(0.0, u, v)
    };
    let e = standard_energy(sys, &state)?;
    let scale = 1.0 / e.sqrt();
    state.u.iter_mut().chain(state.v.iter_mut()).for_each(|x| *x *= scale);
    Ok(state)
}

/// Simulates the damped system `w'' + A w + B1 B1* w' = 0` from every
/// ensemble member up to `t_horizon` and returns the largest ratio
/// `E_S(0) / int_0^T |B1* w'|^2`, with the integral by the trapezoid rule.
pub fn estimate_observability(
    sys: &SemiDiscreteSystem,
    t_horizon: f64,
    n_samples: usize,
    seed: u64,
    dt: f64,
) -> Result<ObservabilityEstimate> {
    if sys.m2() > 0 && sys.b2_norm() > 0.0 {
        return Err(Error::usage(
            "observability is estimated on the system without delayed feedback (B2 = 0)",
        ));
    }
    if n_samples == 0 {
        return Err(Error::usage("observability ensemble is empty"));
    }
    // A delay-free system still needs a history window; use the time step.
    let sys = SemiDiscreteSystem::new(
        sys.stiffness().clone(),
        sys.b1_map().clone(),
        nalgebra::DMatrix::zeros(sys.n_dof(), 0),
        dt,
        sys.xi(),
    )?;
    let n_modes = n_samples.div_ceil(2).min(sys.n_dof());
    let modes = sys.lowest_modes(n_modes);
    let params = SchemeParams::new(dt);

    let ratios: Vec<Result<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let init = ensemble_member(&sys, &modes, i, seed)?;
            let sim = simulate(&sys, &init, vec![vec![]; 2], t_horizon, params, Mechanism::Buffer)?;
            let p: Vec<f64> = sim.trace.rows().iter().map(|r| r.energy.p_b1).collect();
            let integral = dt * (p.iter().sum::<f64>() - 0.5 * (p[0] + p[p.len() - 1]));
            Ok(if integral > 0.0 {
                1.0 / integral
            } else {
                f64::INFINITY
            })
        })
        .collect();
    let mut c_hat = 0.0f64;
    for r in ratios {
        c_hat = c_hat.max(r?);
    }
    Ok(ObservabilityEstimate {
        c_hat,
        t_horizon,
        n_samples,
        is_lower_bound: true,
    })
}
