use crate::error::{Error, Result};
use crate::system::EnergyTrace;

/// Fitted `E(t) ~ k_hat * exp(-mu_hat * t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEstimate {
    pub mu_hat: f64,
    pub k_hat: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub envelope_points: usize,
}

pub const DEFAULT_ENVELOPE_BLOCKS: usize = 24;
const MIN_ENVELOPE_POINTS: usize = 10;

/// Envelope fit of the total energy on `window` with the default block count.
pub fn fit_decay(trace: &EnergyTrace, window: (f64, f64)) -> Result<DecayEstimate> {
    fit_decay_with(trace, window, DEFAULT_ENVELOPE_BLOCKS)
}

/// Least-squares line through `(t, ln E)` at the upper envelope of `E`.
///
/// The window's samples are split into `blocks` contiguous runs of equal
/// length and the maximum of each run is one envelope point. Oscillating
/// energies (modal beating, delayed feedback) contribute their peaks;
/// monotone energies contribute one point per block.
pub fn fit_decay_with(trace: &EnergyTrace, window: (f64, f64), blocks: usize) -> Result<DecayEstimate> {
    let (t0, t1) = window;
    if !(t0 < t1) {
        return Err(Error::usage(format!("empty fit window [{t0}, {t1}]")));
    }
    let tol = 1e-9 * trace.dt();
    let samples: Vec<(f64, f64)> = trace
        .rows()
        .iter()
        .filter(|r| r.t >= t0 - tol && r.t <= t1 + tol)
        .map(|r| (r.t, r.energy.e_total))
        .collect();
    if let Some(&(t, e)) = samples.iter().find(|(_, e)| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::usage(format!(
            "energy must be positive on the fit window (E({t}) = {e})"
        )));
    }
    let blocks = blocks.max(MIN_ENVELOPE_POINTS).min(samples.len());
    if blocks < MIN_ENVELOPE_POINTS {
        return Err(Error::usage(format!(
            "fit window holds {} samples; at least {MIN_ENVELOPE_POINTS} envelope points are needed",
            samples.len()
        )));
    }
    let n = samples.len();
    let envelope: Vec<(f64, f64)> = (0..blocks)
        .map(|b| {
            let (lo, hi) = (b * n / blocks, (b + 1) * n / blocks);
            samples[lo..hi]
                .iter()
                .copied()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("blocks are nonempty")
        })
        .map(|(t, e)| (t, e.ln()))
        .collect();

    let m = envelope.len() as f64;
    let mean_t = envelope.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = envelope.iter().map(|p| p.1).sum::<f64>() / m;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in &envelope {
        let (dt, dy) = (t - mean_t, y - mean_y);
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    let slope = sty / stt;
    let intercept = mean_y - slope * mean_t;
    let r_squared = if syy > 0.0 {
        (sty * sty / (stt * syy)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(DecayEstimate {
        mu_hat: -slope,
        k_hat: intercept.exp(),
        r_squared,
        window,
        envelope_points: envelope.len(),
    })
}
