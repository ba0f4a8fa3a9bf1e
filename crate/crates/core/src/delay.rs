//! Delayed trace `B2* u'(t - tau)`.
//!
//! Two interchangeable representations:
//!
//! * [`HistoryBuffer`]: a ring of past samples at the time-step spacing.
//! * [`TransportField`]: samples of `z(rho, t) = B2* u'(t - tau rho)` on a
//!   uniform `rho` grid over `[0, 1]`, advanced by first-order upwinding of
//!   `tau z_t + z_rho = 0` with inflow `z(0, t) = B2* u'(t)`.
//!
//! When `dt / (tau * d_rho) = 1` the upwind update is a pure copy and the two
//! representations hold the same numbers in the same order.

use crate::error::{Error, Result};
use crate::linalg::norm_sq;

/// Read access to a delayed-trace window `[t - tau, t]`.
pub trait DelayHistory {
    /// Dimension of each sample (`m2`).
    fn width(&self) -> usize;
    /// Length of the time window covered.
    fn span(&self) -> f64;
    /// The sample at `t - tau`.
    fn delayed(&self) -> &[f64];
    /// `int_{t-tau}^t |sample|^2 ds` by the trapezoid rule.
    fn window_integral(&self) -> f64;
}

/// Trapezoid rule over `count` equally spaced samples on a window of length `span`.
fn trapezoid_window<'a>(span: f64, count: usize, samples: impl Iterator<Item = &'a [f64]>) -> f64 {
    let last = count - 1;
    let mut sum = 0.0;
    for (k, s) in samples.enumerate() {
        let q = norm_sq(s);
        if k == 0 || k == last {
            sum += 0.5 * q;
        } else {
            sum += q;
        }
    }
    sum * (span / last as f64)
}

/// Number of steps per delay, `tau / dt`, which must be a positive integer.
pub fn steps_per_delay(dt: f64, tau: f64) -> Result<usize> {
    if !(dt > 0.0) || !(tau > 0.0) || !dt.is_finite() || !tau.is_finite() {
        return Err(Error::usage(format!(
            "dt and tau must be positive (dt = {dt}, tau = {tau})"
        )));
    }
    let ratio = tau / dt;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::usage(format!(
            "tau / dt = {ratio} must be a positive integer"
        )));
    }
    Ok(rounded as usize)
}

/// Ring buffer of `B2* u'` samples at `t - k dt`, `k = 0..capacity`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryBuffer {
    dt: f64,
    tau: f64,
    capacity: usize,
    width: usize,
    data: Vec<f64>,
    oldest: usize,
    steps: u64,
}

impl HistoryBuffer {
    /// Builds the buffer from `f0` sampled at `-tau, -tau + dt, ..., 0`
    /// (oldest first). The head is positioned at `t = 0`.
    pub fn init(f0: Vec<Vec<f64>>, dt: f64, tau: f64) -> Result<Self> {
        let capacity = steps_per_delay(dt, tau)? + 1;
        if f0.len() != capacity {
            return Err(Error::usage(format!(
                "initial history needs {capacity} samples on [-tau, 0], got {}",
                f0.len()
            )));
        }
        let width = f0[0].len();
        if f0.iter().any(|s| s.len() != width) {
            return Err(Error::usage("initial history samples have unequal lengths"));
        }
        Ok(Self {
            dt,
            tau,
            capacity,
            width,
            data: f0.into_iter().flatten().collect(),
            oldest: 0,
            steps: 0,
        })
    }

    /// A buffer holding the constant sample `value` over the whole window.
    pub fn constant(value: &[f64], dt: f64, tau: f64) -> Result<Self> {
        let capacity = steps_per_delay(dt, tau)? + 1;
        Self::init(vec![value.to_vec(); capacity], dt, tau)
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn head_time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    fn slot(&self, k: usize) -> &[f64] {
        let i = (self.oldest + k) % self.capacity;
        &self.data[i * self.width..(i + 1) * self.width]
    }

    /// Samples ordered from `t - tau` to `t`.
    pub fn samples(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.capacity).map(move |k| self.slot(k))
    }

    /// The newest sample (at the head time).
    pub fn newest(&self) -> &[f64] {
        self.slot(self.capacity - 1)
    }

    /// The sample that will be `tau` old after the next push.
    pub fn peek_next(&self) -> &[f64] {
        self.slot(1 % self.capacity)
    }

    /// Overwrites the newest sample.
    pub fn replace_newest(&mut self, current: &[f64]) {
        assert_eq!(current.len(), self.width, "sample width mismatch");
        let i = (self.oldest + self.capacity - 1) % self.capacity;
        self.data[i * self.width..(i + 1) * self.width].copy_from_slice(current);
    }

    /// Advances the head by `dt`, stores `current` as the newest sample, and
    /// returns the sample now exactly `tau` in the past.
    pub fn push_and_sample(&mut self, current: &[f64]) -> &[f64] {
        assert_eq!(current.len(), self.width, "sample width mismatch");
        let i = self.oldest;
        self.data[i * self.width..(i + 1) * self.width].copy_from_slice(current);
        self.oldest = (self.oldest + 1) % self.capacity;
        self.steps += 1;
        self.slot(0)
    }
}

impl DelayHistory for HistoryBuffer {
    fn width(&self) -> usize {
        self.width
    }

    fn span(&self) -> f64 {
        self.tau
    }

    fn delayed(&self) -> &[f64] {
        self.slot(0)
    }

    fn window_integral(&self) -> f64 {
        trapezoid_window(self.tau, self.capacity, self.samples())
    }
}

/// Transport variable `z(rho_j, t)` on `rho_j = j / (m_rho - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportField {
    m_rho: usize,
    width: usize,
    tau: f64,
    values: Vec<f64>,
}

impl TransportField {
    pub fn zeros(m_rho: usize, width: usize, tau: f64) -> Result<Self> {
        if m_rho < 2 {
            return Err(Error::usage(format!("transport grid needs at least 2 points, got {m_rho}")));
        }
        if !(tau > 0.0) {
            return Err(Error::usage(format!("delay must be positive, got {tau}")));
        }
        Ok(Self {
            m_rho,
            width,
            tau,
            values: vec![0.0; m_rho * width],
        })
    }

    /// Initializes `z(rho, 0) = f0(-tau rho)` from history samples ordered
    /// from `-tau` to `0`, interpolating linearly when the grids differ.
    pub fn from_history(f0: &[Vec<f64>], m_rho: usize, tau: f64) -> Result<Self> {
        if f0.len() < 2 {
            return Err(Error::usage("initial history needs at least 2 samples"));
        }
        let width = f0[0].len();
        if f0.iter().any(|s| s.len() != width) {
            return Err(Error::usage("initial history samples have unequal lengths"));
        }
        let mut field = Self::zeros(m_rho, width, tau)?;
        let last = f0.len() - 1;
        let den = m_rho - 1;
        for j in 0..m_rho {
            // rho_j = j / den maps to sample position (1 - rho_j) * last.
            let num = (den - j) * last;
            let (k, rem) = (num / den, num % den);
            let row = &mut field.values[j * width..(j + 1) * width];
            if rem == 0 {
                row.copy_from_slice(&f0[k]);
            } else {
                let frac = rem as f64 / den as f64;
                for (c, r) in row.iter_mut().enumerate() {
                    *r = (1.0 - frac) * f0[k][c] + frac * f0[k + 1][c];
                }
            }
        }
        Ok(field)
    }

    pub fn m_rho(&self) -> usize {
        self.m_rho
    }

    pub fn d_rho(&self) -> f64 {
        1.0 / (self.m_rho - 1) as f64
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.width..(j + 1) * self.width]
    }

    /// `z(0, t)`
    pub fn head(&self) -> &[f64] {
        self.row(0)
    }

    /// `z(1, t)`, the approximation of `B2* u'(t - tau)`.
    pub fn tail(&self) -> &[f64] {
        self.row(self.m_rho - 1)
    }

    /// CFL number `dt / (tau d_rho)`.
    pub fn cfl(&self, dt: f64) -> f64 {
        dt * (self.m_rho - 1) as f64 / self.tau
    }

    fn is_exact_shift(nu: f64) -> bool {
        (nu - 1.0).abs() <= 1e-9
    }

    fn checked_cfl(&self, dt: f64) -> Result<f64> {
        let nu = self.cfl(dt);
        if nu > 1.0 + 1e-9 {
            return Err(Error::config(format!(
                "upwind transport is unstable: CFL number {nu} exceeds 1"
            )));
        }
        Ok(nu)
    }

    /// The tail value the next [`step_transport`](Self::step_transport) will produce.
    pub fn peek_tail(&self, dt: f64, out: &mut [f64]) -> Result<()> {
        let nu = self.checked_cfl(dt)?;
        let m = self.m_rho - 1;
        if Self::is_exact_shift(nu) {
            out.copy_from_slice(self.row(m - 1));
        } else {
            let (prev, cur) = (self.row(m - 1), self.row(m));
            for c in 0..self.width {
                out[c] = cur[c] - nu * (cur[c] - prev[c]);
            }
        }
        Ok(())
    }

    /// One upwind step of `tau z_t + z_rho = 0` followed by the inflow
    /// condition `z_0 = inflow`.
    pub fn step_transport(&mut self, inflow: &[f64], dt: f64) -> Result<()> {
        if inflow.len() != self.width {
            return Err(Error::usage(format!(
                "inflow has length {} but the field carries {}",
                inflow.len(),
                self.width
            )));
        }
        let nu = self.checked_cfl(dt)?;
        let w = self.width;
        if Self::is_exact_shift(nu) {
            self.values.copy_within(0..(self.m_rho - 1) * w, w);
        } else {
            for j in (1..self.m_rho).rev() {
                for c in 0..w {
                    let cur = self.values[j * w + c];
                    let prev = self.values[(j - 1) * w + c];
                    self.values[j * w + c] = cur - nu * (cur - prev);
                }
            }
        }
        self.values[..w].copy_from_slice(inflow);
        Ok(())
    }

    /// Overwrites the inflow value `z(0, t)`.
    pub fn set_head(&mut self, value: &[f64]) {
        self.values[..self.width].copy_from_slice(value);
    }
}

impl DelayHistory for TransportField {
    fn width(&self) -> usize {
        self.width
    }

    fn span(&self) -> f64 {
        self.tau
    }

    fn delayed(&self) -> &[f64] {
        self.tail()
    }

    fn window_integral(&self) -> f64 {
        // Oldest first (rho = 1 down to 0), matching the buffer's order.
        trapezoid_window(
            self.tau,
            self.m_rho,
            (0..self.m_rho).rev().map(|j| self.row(j)),
        )
    }
}

/// Runtime choice of delay mechanism used by the integrator.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayLine {
    Buffer(HistoryBuffer),
    Transport { field: TransportField, dt: f64 },
}

impl DelayLine {
    /// Writes the delayed sample for the next time level into `out`.
    pub fn peek_next(&self, out: &mut [f64]) -> Result<()> {
        match self {
            DelayLine::Buffer(b) => {
                out.copy_from_slice(b.peek_next());
                Ok(())
            }
            DelayLine::Transport { field, dt } => field.peek_tail(*dt, out),
        }
    }

    /// Moves to the next time level with `current = B2* u'(t + dt)`.
    pub fn advance(&mut self, current: &[f64]) -> Result<()> {
        match self {
            DelayLine::Buffer(b) => {
                b.push_and_sample(current);
                Ok(())
            }
            DelayLine::Transport { field, dt } => field.step_transport(current, *dt),
        }
    }

    /// Overwrites the sample at the current time.
    pub fn replace_current(&mut self, current: &[f64]) {
        match self {
            DelayLine::Buffer(b) => b.replace_newest(current),
            DelayLine::Transport { field, .. } => field.set_head(current),
        }
    }
}

impl DelayHistory for DelayLine {
    fn width(&self) -> usize {
        match self {
            DelayLine::Buffer(b) => b.width(),
            DelayLine::Transport { field, .. } => field.width(),
        }
    }

    fn span(&self) -> f64 {
        match self {
            DelayLine::Buffer(b) => b.span(),
            DelayLine::Transport { field, .. } => field.span(),
        }
    }

    fn delayed(&self) -> &[f64] {
        match self {
            DelayLine::Buffer(b) => b.delayed(),
            DelayLine::Transport { field, .. } => field.delayed(),
        }
    }

    fn window_integral(&self) -> f64 {
        match self {
            DelayLine::Buffer(b) => b.window_integral(),
            DelayLine::Transport { field, .. } => field.window_integral(),
        }
    }
}
