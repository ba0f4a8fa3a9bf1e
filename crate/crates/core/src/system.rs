//! Semi-discrete abstract system, state, and energy functionals.
//!
//! The discrete state space is `R^N` with the Euclidean inner product (identity
//! mass matrix). Model builders choose coordinates so that this inner product
//! approximates the continuous `H` norm, which makes every energy below a
//! plain quadratic form.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::delay::DelayHistory;
use crate::error::{Error, Result};
use crate::linalg::{norm_sq, BandedCholesky, CsrMatrix};

/// Discretization of `u'' + A u + B1 B1* u' + B2 B2* u'(t - tau) = 0`.
#[derive(Debug, Clone)]
pub struct SemiDiscreteSystem {
    stiffness: DMatrix<f64>,
    b1_map: DMatrix<f64>,
    b2_map: DMatrix<f64>,
    tau: f64,
    xi: f64,
    b2_norm: f64,
    stiffness_csr: CsrMatrix,
    b1t_csr: CsrMatrix,
    b2_csr: CsrMatrix,
    b2t_csr: CsrMatrix,
}

impl SemiDiscreteSystem {
    pub fn new(
        stiffness: DMatrix<f64>,
        b1_map: DMatrix<f64>,
        b2_map: DMatrix<f64>,
        tau: f64,
        xi: f64,
    ) -> Result<Self> {
        let n = stiffness.nrows();
        if n == 0 || stiffness.ncols() != n {
            return Err(Error::usage(format!(
                "stiffness must be square and nonempty, got {}x{}",
                n,
                stiffness.ncols()
            )));
        }
        if b1_map.nrows() != n || b2_map.nrows() != n {
            return Err(Error::usage(format!(
                "damping maps must have {n} rows (B1 has {}, B2 has {})",
                b1_map.nrows(),
                b2_map.nrows()
            )));
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::domain(format!("delay tau must be positive, got {tau}")));
        }
        if !(xi > 1.0) || !xi.is_finite() {
            return Err(Error::domain(format!("energy weight xi must exceed 1, got {xi}")));
        }
        let scale = stiffness.amax();
        let asym = (&stiffness - stiffness.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::validation(format!(
                "stiffness is not symmetric (max asymmetry {asym:e})"
            )));
        }
        BandedCholesky::factor(&stiffness).map_err(|_| {
            Error::validation("stiffness is not positive definite".to_string())
        })?;

        let b2_norm = largest_singular_value(&b2_map)?;
        Ok(Self {
            stiffness_csr: CsrMatrix::from_dense(&stiffness),
            b1t_csr: CsrMatrix::from_dense(&b1_map.transpose()),
            b2_csr: CsrMatrix::from_dense(&b2_map),
            b2t_csr: CsrMatrix::from_dense(&b2_map.transpose()),
            stiffness,
            b1_map,
            b2_map,
            tau,
            xi,
            b2_norm,
        })
    }

    pub fn n_dof(&self) -> usize {
        self.stiffness.nrows()
    }

    pub fn m1(&self) -> usize {
        self.b1_map.ncols()
    }

    pub fn m2(&self) -> usize {
        self.b2_map.ncols()
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn b1_map(&self) -> &DMatrix<f64> {
        &self.b1_map
    }

    pub fn b2_map(&self) -> &DMatrix<f64> {
        &self.b2_map
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// `C2 = ||B2||`, the largest singular value of the delay map.
    pub fn b2_norm(&self) -> f64 {
        self.b2_norm
    }

    /// The same system with the delayed feedback removed (`B2 = 0`).
    pub fn without_delay(&self) -> Self {
        let n = self.n_dof();
        Self::new(
            self.stiffness.clone(),
            self.b1_map.clone(),
            DMatrix::zeros(n, 0),
            self.tau,
            self.xi,
        )
        .expect("operators were validated at construction")
    }

    pub(crate) fn stiffness_csr(&self) -> &CsrMatrix {
        &self.stiffness_csr
    }

    pub(crate) fn b2_csr(&self) -> &CsrMatrix {
        &self.b2_csr
    }

    /// `B1* v`
    pub fn b1_adjoint(&self, v: &[f64]) -> Vec<f64> {
        self.b1t_csr.apply(v)
    }

    /// `B2* v`
    pub fn b2_adjoint(&self, v: &[f64]) -> Vec<f64> {
        self.b2t_csr.apply(v)
    }

    pub(crate) fn b2_adjoint_into(&self, v: &[f64], out: &mut [f64]) {
        self.b2t_csr.mul_vec(v, out);
    }

    /// `A u`
    pub fn apply_stiffness(&self, u: &[f64]) -> Vec<f64> {
        self.stiffness_csr.apply(u)
    }

    /// The `count` smallest stiffness eigenpairs in ascending order.
    ///
    /// Eigenvectors have unit Euclidean norm and are signed so that their
    /// largest-magnitude entry (first one on ties) is positive.
    pub fn lowest_modes(&self, count: usize) -> Vec<(f64, Vec<f64>)> {
        let eig = SymmetricEigen::new(self.stiffness.clone());
        let mut order: Vec<usize> = (0..self.n_dof()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        order
            .into_iter()
            .take(count)
            .map(|k| {
                let mut vec: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
                let norm = norm_sq(&vec).sqrt();
                let mut pivot = 0;
                for (i, x) in vec.iter().enumerate() {
                    if x.abs() > vec[pivot].abs() * (1.0 + 1e-9) {
                        pivot = i;
                    }
                }
                let sign = if vec[pivot] < 0.0 { -1.0 } else { 1.0 };
                vec.iter_mut().for_each(|x| *x *= sign / norm);
                (eig.eigenvalues[k], vec)
            })
            .collect()
    }

    pub(crate) fn check_state(&self, s: &State) -> Result<()> {
        let n = self.n_dof();
        if s.u.len() != n || s.v.len() != n {
            return Err(Error::usage(format!(
                "state has lengths ({}, {}) but the system has {n} degrees of freedom",
                s.u.len(),
                s.v.len()
            )));
        }
        Ok(())
    }

    fn check_delayed(&self, delayed: &[f64]) -> Result<()> {
        if delayed.len() != self.m2() {
            return Err(Error::usage(format!(
                "delayed sample has length {} but B2 has {} columns",
                delayed.len(),
                self.m2()
            )));
        }
        Ok(())
    }
}

fn largest_singular_value(m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 || m.amax() == 0.0 {
        return Ok(0.0);
    }
    let svd = nalgebra::linalg::SVD::try_new(m.clone(), false, false, 1e-15, 10_000)
        .ok_or_else(|| Error::numerical("SVD of the delay map did not converge"))?;
    Ok(svd.singular_values.max())
}

/// Displacement and velocity at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl State {
    pub fn zeros(n: usize) -> Self {
        Self {
            t: 0.0,
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn new(t: f64, u: Vec<f64>, v: Vec<f64>) -> Self {
        Self { t, u, v }
    }
}

/// All energy terms at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub e_total: f64,
    pub e_standard: f64,
    pub e_delay: f64,
    pub p_b1: f64,
    pub p_b2_now: f64,
    pub p_b2_delayed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub energy: EnergyBreakdown,
}

/// Energy time series at uniform spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    dt: f64,
    rows: Vec<TraceRow>,
}

impl EnergyTrace {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            rows: Vec::new(),
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends a row; timestamps must advance by `dt` (to 1e-12).
    pub fn push(&mut self, t: f64, energy: EnergyBreakdown) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if ((t - last.t) - self.dt).abs() > 1e-12 {
                return Err(Error::usage(format!(
                    "trace rows must be spaced by dt = {}, got {} -> {}",
                    self.dt, last.t, t
                )));
            }
        }
        self.rows.push(TraceRow { t, energy });
        Ok(())
    }

    /// Builds a trace from `(t, E)` pairs, filling only `e_total` and `e_standard`.
    pub fn from_total(dt: f64, samples: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut trace = Self::new(dt);
        for (t, e) in samples {
            trace.push(
                t,
                EnergyBreakdown {
                    e_total: e,
                    e_standard: e,
                    ..Default::default()
                },
            )?;
        }
        Ok(trace)
    }

    pub fn totals(&self) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(|r| r.energy.e_total)
    }
}

/// `E_S = (|A^{1/2} u|^2 + |v|^2) / 2`
pub fn standard_energy(sys: &SemiDiscreteSystem, s: &State) -> Result<f64> {
    sys.check_state(s)?;
    Ok(standard_energy_unchecked(sys, &s.u, &s.v))
}

pub(crate) fn standard_energy_unchecked(sys: &SemiDiscreteSystem, u: &[f64], v: &[f64]) -> f64 {
    let mut au = vec![0.0; u.len()];
    sys.stiffness_csr().mul_vec(u, &mut au);
    let potential: f64 = u.iter().zip(&au).map(|(a, b)| a * b).sum();
    0.5 * (potential.max(0.0) + norm_sq(v))
}

/// Delay-augmented energy `E = E_S + xi/2 * int_{t-tau}^t |B2* u'(s)|^2 ds`.
///
/// The history integral uses the trapezoid rule on the history samples.
pub fn total_energy<H: DelayHistory + ?Sized>(
    sys: &SemiDiscreteSystem,
    s: &State,
    hist: &H,
) -> Result<EnergyBreakdown> {
    sys.check_state(s)?;
    if hist.width() != sys.m2() {
        return Err(Error::usage(format!(
            "history width {} does not match B2 with {} columns",
            hist.width(),
            sys.m2()
        )));
    }
    if hist.span() < sys.tau() * (1.0 - 1e-9) {
        return Err(Error::usage(format!(
            "history spans {} but the delay is {}",
            hist.span(),
            sys.tau()
        )));
    }
    let e_standard = standard_energy_unchecked(sys, &s.u, &s.v);
    // With B2 = 0 the trace B2* u' vanishes identically, whatever history was supplied.
    let delay_active = sys.b2_norm() > 0.0;
    let e_delay = if delay_active {
        0.5 * sys.xi() * hist.window_integral()
    } else {
        0.0
    };
    Ok(EnergyBreakdown {
        e_total: e_standard + e_delay,
        e_standard,
        e_delay,
        p_b1: norm_sq(&sys.b1_adjoint(&s.v)),
        p_b2_now: norm_sq(&sys.b2_adjoint(&s.v)),
        p_b2_delayed: if delay_active {
            norm_sq(hist.delayed())
        } else {
            0.0
        },
    })
}

/// Upper bound for `E'(t)` along solutions of the delayed problem:
/// `-|B1* v|^2 + (1+xi)/2 |B2* v|^2 - (xi-1)/2 |delayed|^2`.
pub fn dissipation_bound(sys: &SemiDiscreteSystem, s: &State, delayed: &[f64]) -> Result<f64> {
    sys.check_state(s)?;
    sys.check_delayed(delayed)?;
    let xi = sys.xi();
    Ok(-norm_sq(&sys.b1_adjoint(&s.v)) + 0.5 * (1.0 + xi) * norm_sq(&sys.b2_adjoint(&s.v))
        - 0.5 * (xi - 1.0) * norm_sq(delayed))
}

/// Upper bound for `F'(t)` along solutions of the auxiliary problem (which
/// carries the extra damping `xi B2 B2* v`):
/// `-|B1* v|^2 - (xi-1)/2 |B2* v|^2 - (xi-1)/2 |delayed|^2`.
pub fn aux_dissipation_bound(
    sys: &SemiDiscreteSystem,
    s: &State,
    delayed: &[f64],
) -> Result<f64> {
    sys.check_state(s)?;
    sys.check_delayed(delayed)?;
    let xi = sys.xi();
    Ok(-norm_sq(&sys.b1_adjoint(&s.v))
        - 0.5 * (xi - 1.0) * norm_sq(&sys.b2_adjoint(&s.v))
        - 0.5 * (xi - 1.0) * norm_sq(delayed))
}
