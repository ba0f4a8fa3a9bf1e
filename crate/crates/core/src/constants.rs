//! Explicit exponential-decay constants and the small-gain threshold for the
//! delay feedback.
//!
//! Inputs are the observability constant `c` of the undelayed damped system
//! on a horizon `T`, the energy weight `xi > 1` and the delay-feedback norm
//! `C2 = ||B2||`. The auxiliary energy satisfies `F(t) <= K exp(-mu_tilde t) F(0)`
//! with
//!
//! ```text
//! C0       = max{ 2c, (32 c T C2^2 + xi)/(xi - 1), 32 c C2^2 T xi^2/(xi - 1) }
//! K        = (C0 + 1)/C0
//! mu_tilde = ln((C0 + 1)/C0) / (2T)
//! ```
//!
//! and the delayed problem decays at rate `mu = mu_tilde - K xi C2^2` whenever
//! that number is positive. `T` must exceed both the delay and the minimal
//! observability time; neither check is possible here, so it is the caller's
//! responsibility.

use crate::error::{Error, Result};

fn check_xi(xi: f64) -> Result<()> {
    if !(xi > 1.0) || !xi.is_finite() {
        return Err(Error::domain(format!("xi must exceed 1, got {xi}")));
    }
    Ok(())
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::domain(format!("{name} must be positive, got {value}")));
    }
    Ok(())
}

pub fn c_zero(c_obs: f64, t_horizon: f64, xi: f64, c2: f64) -> Result<f64> {
    check_xi(xi)?;
    check_positive("observability constant", c_obs)?;
    check_positive("horizon T", t_horizon)?;
    if !(c2 >= 0.0) || !c2.is_finite() {
        return Err(Error::domain(format!("C2 must be nonnegative, got {c2}")));
    }
    let c2sq = c2 * c2;
    let first = 2.0 * c_obs;
    let second = (32.0 * c_obs * t_horizon * c2sq + xi) / (xi - 1.0);
    let third = 32.0 * c_obs * c2sq * t_horizon * xi * xi / (xi - 1.0);
    Ok(first.max(second).max(third))
}

/// `K = (C0 + 1) / C0`
pub fn decay_k(c_zero: f64) -> f64 {
    (c_zero + 1.0) / c_zero
}

/// `mu_tilde = ln((C0 + 1) / C0) / (2T)`
pub fn decay_mu_tilde(c_zero: f64, t_horizon: f64) -> f64 {
    (1.0 / c_zero).ln_1p() / (2.0 * t_horizon)
}

/// `h(s) = s/(s+1) ln((s+1)/s)`, maximal (`1/e`) at `s = 1/(e-1)`.
pub fn h(s: f64) -> f64 {
    s / (s + 1.0) * (1.0 / s).ln_1p()
}

/// `xi C2^2 < h(C0) / (2T)`, i.e. `-mu_tilde + K ||B|| < 0` with `||B|| = xi C2^2`.
pub fn check_small_gain(xi: f64, c2: f64, t_horizon: f64, c_zero: f64) -> bool {
    xi * c2 * c2 < h(c_zero) / (2.0 * t_horizon)
}

/// `mu = mu_tilde - K xi C2^2`
pub fn effective_mu(mu_tilde: f64, big_k: f64, xi: f64, c2: f64) -> f64 {
    mu_tilde - big_k * xi * c2 * c2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayConstants {
    pub c_obs: f64,
    pub t_horizon: f64,
    pub xi: f64,
    pub c2: f64,
    pub c_zero: f64,
    pub big_k: f64,
    pub mu_tilde: f64,
    pub mu_effective: f64,
    pub stable: bool,
}

impl DecayConstants {
    pub fn compute(c_obs: f64, t_horizon: f64, xi: f64, c2: f64) -> Result<Self> {
        let c_zero = c_zero(c_obs, t_horizon, xi, c2)?;
        let big_k = decay_k(c_zero);
        let mu_tilde = decay_mu_tilde(c_zero, t_horizon);
        let mu_effective = effective_mu(mu_tilde, big_k, xi, c2);
        Ok(Self {
            c_obs,
            t_horizon,
            xi,
            c2,
            c_zero,
            big_k,
            mu_tilde,
            mu_effective,
            stable: mu_effective > 0.0,
        })
    }

    /// `K exp(-mu t)`, the guaranteed envelope of `E(t)/E(0)` when stable.
    pub fn envelope(&self, t: f64) -> f64 {
        self.big_k * (-self.mu_effective * t).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaThreshold {
    pub beta: f64,
    /// `2 xi beta^2 T - h(C0(beta))`
    pub residual: f64,
    pub iterations: usize,
}

const BISECTION_CAP: usize = 200;

/// Solves `2 xi beta^2 T = h(C0(beta))` by bisection.
///
/// `C0` is nondecreasing in `C2` and `C0(0) = max{2c, xi/(xi-1)} > 1/(e-1)`,
/// so `h(C0(C2))` is nonincreasing and the left side minus the right side
/// changes sign exactly once on `[0, sqrt(h(C0(0)) / (2 xi T))]`.
pub fn beta_threshold(c_obs: f64, t_horizon: f64, xi: f64) -> Result<BetaThreshold> {
    let g = |beta: f64| -> Result<f64> {
        Ok(2.0 * xi * beta * beta * t_horizon - h(c_zero(c_obs, t_horizon, xi, beta)?))
    };
    let h0 = h(c_zero(c_obs, t_horizon, xi, 0.0)?);
    let (mut lo, mut hi) = (0.0f64, (h0 / (2.0 * xi * t_horizon)).sqrt());
    let mut iterations = 0;
    while iterations < BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let (glo, ghi) = (g(lo)?, g(hi)?);
    let (beta, residual) = if glo.abs() <= ghi.abs() {
        (lo, glo)
    } else {
        (hi, ghi)
    };
    if residual.abs() >= 1e-12 {
        return Err(Error::numerical(format!(
            "beta bisection stalled with residual {residual:e}"
        )));
    }
    Ok(BetaThreshold {
        beta,
        residual,
        iterations,
    })
}
