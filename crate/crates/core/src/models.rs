//! 1D finite-difference instances of the abstract system.
//!
//! Unknowns are stored in L2-normalized coordinates: entry `j` of a state
//! vector is `sqrt(w_j) * u(x_j)` where `w_j` is the quadrature weight of node
//! `j`. The Euclidean norm of a state vector is then the discrete L2 norm, the
//! mass matrix is the identity, and a multiplication operator `b(x)` becomes
//! the diagonal `diag(b(x_j))`. Each damping map `B_i` is the column selection
//! `sqrt(b_i(x_j)) e_j` over the nodes where `b_i > 0`, so that `B_i B_i*` is
//! multiplication by `b_i` and `||B_i|| = max sqrt(b_i)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::system::{SemiDiscreteSystem, State};

/// Nonnegative damping coefficient on `[0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub enum DampingProfile {
    Constant(f64),
    /// `value` on `[a, b]`, zero elsewhere.
    Indicator { value: f64, support: (f64, f64) },
    /// One value per degree of freedom.
    Samples(Vec<f64>),
}

impl DampingProfile {
    pub fn zero() -> Self {
        DampingProfile::Constant(0.0)
    }

    fn validate(&self, n: usize) -> Result<()> {
        let bad = |v: f64| !(v >= 0.0) || !v.is_finite();
        match self {
            DampingProfile::Constant(v) if bad(*v) => Err(Error::validation(format!(
                "damping coefficient must be nonnegative, got {v}"
            ))),
            DampingProfile::Indicator { value, support } => {
                if bad(*value) {
                    return Err(Error::validation(format!(
                        "damping coefficient must be nonnegative, got {value}"
                    )));
                }
                if !(support.0 <= support.1) {
                    return Err(Error::validation(format!(
                        "damping support [{}, {}] is empty",
                        support.0, support.1
                    )));
                }
                Ok(())
            }
            DampingProfile::Samples(values) => {
                if values.len() != n {
                    return Err(Error::validation(format!(
                        "damping profile has {} samples for {n} nodes",
                        values.len()
                    )));
                }
                if let Some(v) = values.iter().find(|&&v| bad(v)) {
                    return Err(Error::validation(format!(
                        "damping coefficient must be nonnegative, got {v}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Value at node `j` located at `x`.
    pub fn value_at(&self, j: usize, x: f64) -> f64 {
        const EDGE: f64 = 1e-12;
        match self {
            DampingProfile::Constant(v) => *v,
            DampingProfile::Indicator { value, support } => {
                if x >= support.0 - EDGE && x <= support.1 + EDGE {
                    *value
                } else {
                    0.0
                }
            }
            DampingProfile::Samples(values) => values[j],
        }
    }
}

/// Boundary conditions of the beam model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamSupport {
    /// `u = u_xx = 0` at both ends.
    Hinged,
    /// `u = u_x = 0` at both ends.
    Clamped,
}

impl std::str::FromStr for BeamSupport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hinged" => Ok(BeamSupport::Hinged),
            "clamped" => Ok(BeamSupport::Clamped),
            other => Err(Error::validation(format!(
                "unknown beam boundary condition '{other}' (expected hinged or clamped)"
            ))),
        }
    }
}

/// An assembled system together with its grid.
#[derive(Debug, Clone)]
pub struct Model {
    pub system: SemiDiscreteSystem,
    /// Node coordinates of the unknowns.
    pub nodes: Vec<f64>,
    /// Quadrature weight of each node.
    pub weights: Vec<f64>,
    pub length: f64,
}

impl Model {
    /// Converts nodal values to state coordinates.
    pub fn to_coordinates(&self, nodal: &[f64]) -> Vec<f64> {
        nodal
            .iter()
            .zip(&self.weights)
            .map(|(u, w)| u * w.sqrt())
            .collect()
    }

    /// Converts state coordinates back to nodal values.
    pub fn to_nodal(&self, coords: &[f64]) -> Vec<f64> {
        coords
            .iter()
            .zip(&self.weights)
            .map(|(u, w)| u / w.sqrt())
            .collect()
    }

    /// State whose displacement is the `index`-th stiffness eigenvector
    /// (1-based, ascending), with unit discrete L2 norm and zero velocity.
    pub fn eigenmode_state(&self, index: usize) -> Result<State> {
        let n = self.system.n_dof();
        if index == 0 || index > n {
            return Err(Error::usage(format!(
                "eigenmode index {index} outside 1..={n}"
            )));
        }
        let (_, mode) = self.system.lowest_modes(index).pop().expect("index checked");
        Ok(State::new(0.0, mode, vec![0.0; n]))
    }
}

fn multiplication_map(profile: &DampingProfile, nodes: &[f64]) -> DMatrix<f64> {
    let support: Vec<(usize, f64)> = nodes
        .iter()
        .enumerate()
        .map(|(j, &x)| (j, profile.value_at(j, x)))
        .filter(|&(_, b)| b > 0.0)
        .collect();
    let mut map = DMatrix::zeros(nodes.len(), support.len());
    for (col, (j, b)) in support.into_iter().enumerate() {
        map[(j, col)] = b.sqrt();
    }
    map
}

fn check_grid(n: usize, min: usize, length: f64) -> Result<()> {
    if n < min {
        return Err(Error::validation(format!("need at least {min} grid points, got {n}")));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::validation(format!("domain length must be positive, got {length}")));
    }
    Ok(())
}

/// `tridiag(-1, 2, -1) / h^2` on `n` interior nodes (homogeneous Dirichlet).
pub fn dirichlet_laplacian(n: usize, h: f64) -> DMatrix<f64> {
    let s = 1.0 / (h * h);
    DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
        0 => 2.0 * s,
        1 => -s,
        _ => 0.0,
    })
}

fn interior_grid(n: usize, length: f64) -> (f64, Vec<f64>) {
    let h = length / (n + 1) as f64;
    (h, (1..=n).map(|j| j as f64 * h).collect())
}

/// Wave equation `u_tt - u_xx + b1 u_t + b2 u_t(t - tau) = 0` on `(0, L)`
/// with homogeneous Dirichlet conditions; `n` interior nodes, `h = L/(n+1)`.
pub fn build_wave1d_interior(
    n: usize,
    length: f64,
    b1: &DampingProfile,
    b2: &DampingProfile,
    tau: f64,
    xi: f64,
) -> Result<Model> {
    check_grid(n, 3, length)?;
    b1.validate(n)?;
    b2.validate(n)?;
    let (h, nodes) = interior_grid(n, length);
    let system = SemiDiscreteSystem::new(
        dirichlet_laplacian(n, h),
        multiplication_map(b1, &nodes),
        multiplication_map(b2, &nodes),
        tau,
        xi,
    )?;
    Ok(Model {
        system,
        nodes,
        weights: vec![h; n],
        length,
    })
}

/// Wave equation with interior delayed damping `b` and boundary feedback
/// `u_x(L) = -k u_t(L)`, `u(0) = 0`.
///
/// Nodes `x_j = j h`, `j = 1..=n`, `h = L/n`; the boundary node carries the
/// half weight `h/2`. This is the symmetric form of the ghost-point closure
/// `u_tt(L) = 2 (u_{n-1} - u_n) / h^2 - 2 k u_t(L) / h`.
pub fn build_wave1d_boundary(
    n: usize,
    length: f64,
    k_coeff: f64,
    b: &DampingProfile,
    tau: f64,
    xi: f64,
) -> Result<Model> {
    check_grid(n, 3, length)?;
    if !(k_coeff > 0.0) || !k_coeff.is_finite() {
        return Err(Error::validation(format!(
            "boundary feedback gain must be positive, got {k_coeff}"
        )));
    }
    b.validate(n)?;
    let h = length / n as f64;
    let nodes: Vec<f64> = (1..=n).map(|j| j as f64 * h).collect();
    let mut weights = vec![h; n];
    weights[n - 1] = 0.5 * h;

    // Weighted stiffness K with (K u)_j = (-u_{j-1} + 2 u_j - u_{j+1}) / h and
    // (K u)_n = (u_n - u_{n-1}) / h, symmetrized as W^{-1/2} K W^{-1/2}.
    let mut stiffness = DMatrix::zeros(n, n);
    for j in 0..n {
        let diag = if j == n - 1 { 1.0 } else { 2.0 };
        stiffness[(j, j)] = diag / h / weights[j];
        if j + 1 < n {
            let off = -1.0 / h / (weights[j] * weights[j + 1]).sqrt();
            stiffness[(j, j + 1)] = off;
            stiffness[(j + 1, j)] = off;
        }
    }
    let mut b1_map = DMatrix::zeros(n, 1);
    b1_map[(n - 1, 0)] = (k_coeff / weights[n - 1]).sqrt();

    let system = SemiDiscreteSystem::new(stiffness, b1_map, multiplication_map(b, &nodes), tau, xi)?;
    Ok(Model {
        system,
        nodes,
        weights,
        length,
    })
}

/// Beam equation `u_tt + u_xxxx + b1 u_t + b2 u_t(t - tau) = 0` on `(0, L)`;
/// `n` interior nodes, `h = L/(n+1)`.
pub fn build_beam1d(
    n: usize,
    length: f64,
    support: BeamSupport,
    b1: &DampingProfile,
    b2: &DampingProfile,
    tau: f64,
    xi: f64,
) -> Result<Model> {
    check_grid(n, 5, length)?;
    b1.validate(n)?;
    b2.validate(n)?;
    let (h, nodes) = interior_grid(n, length);
    let stiffness = match support {
        // Odd reflection across each end realizes u = u_xx = 0 and turns the
        // 5-point stencil into the square of the Dirichlet Laplacian.
        BeamSupport::Hinged => {
            let lap = dirichlet_laplacian(n, h);
            &lap * &lap
        }
        // Even reflection u_{-1} = u_1 realizes u_x = 0: corner entries 7.
        BeamSupport::Clamped => {
            let s = 1.0 / h.powi(4);
            let mut m = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
                0 => 6.0 * s,
                1 => -4.0 * s,
                2 => s,
                _ => 0.0,
            });
            m[(0, 0)] = 7.0 * s;
            m[(n - 1, n - 1)] = 7.0 * s;
            m
        }
    };
    let system = SemiDiscreteSystem::new(
        stiffness,
        multiplication_map(b1, &nodes),
        multiplication_map(b2, &nodes),
        tau,
        xi,
    )?;
    Ok(Model {
        system,
        nodes,
        weights: vec![h; n],
        length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::standard_energy;
    use std::f64::consts::PI;

    fn smallest_eigenvalue(m: &DMatrix<f64>) -> f64 {
        m.clone().symmetric_eigenvalues().min()
    }

    #[test]
    fn dirichlet_eigenvalue_matches_closed_form() {
        let (n, l) = (50, 2.0);
        let model = build_wave1d_interior(n, l, &DampingProfile::zero(), &DampingProfile::zero(), 1.0, 2.0)
            .unwrap();
        let h = l / (n + 1) as f64;
        let discrete = 4.0 / (h * h) * (PI * h / (2.0 * l)).sin().powi(2);
        let lam = smallest_eigenvalue(model.system.stiffness());
        assert!((lam - discrete).abs() < 1e-10 * discrete);
        assert!((lam - PI * PI / (l * l)).abs() < 0.01);
        assert_eq!(model.system.m1(), 0);
        assert_eq!(model.system.m2(), 0);
    }

    #[test]
    fn dirichlet_eigenvalue_converges_at_second_order() {
        let exact = PI * PI;
        let err = |n: usize| {
            let m = build_wave1d_interior(n, 1.0, &DampingProfile::zero(), &DampingProfile::zero(), 1.0, 2.0)
                .unwrap();
            (smallest_eigenvalue(m.system.stiffness()) - exact).abs()
        };
        let (e1, e2) = (err(19), err(39));
        let eoc = (e1 / e2).log2();
        assert!((eoc - 2.0).abs() < 0.1, "eoc = {eoc}");
    }

    #[test]
    fn eigenmode_energy_matches_quadrature() {
        let (n, l) = (100, 1.0);
        let model = build_wave1d_interior(n, l, &DampingProfile::zero(), &DampingProfile::zero(), 1.0, 2.0)
            .unwrap();
        let h = l / (n + 1) as f64;
        // First mode sqrt(2/L) sin(pi x / L) has unit L2 norm; its energy is
        // lambda/2, with the discrete eigenvalue in place of pi^2/L^2.
        let nodal: Vec<f64> = model
            .nodes
            .iter()
            .map(|x| (2.0 / l).sqrt() * (PI * x / l).sin())
            .collect();
        let s = State::new(0.0, model.to_coordinates(&nodal), vec![0.0; n]);
        let lam_h = 4.0 / (h * h) * (PI * h / (2.0 * l)).sin().powi(2);
        let e = standard_energy(&model.system, &s).unwrap();
        assert!((e - 0.5 * lam_h).abs() < 1e-6);
        // Same value via the eigenvector route.
        let e2 = standard_energy(&model.system, &model.eigenmode_state(1).unwrap()).unwrap();
        assert!((e2 - 0.5 * lam_h).abs() < 1e-9);
    }

    #[test]
    fn b2_norm_is_sqrt_of_sup() {
        let model = build_wave1d_interior(
            20,
            1.0,
            &DampingProfile::zero(),
            &DampingProfile::Constant(4.0),
            1.0,
            2.0,
        )
        .unwrap();
        assert!((model.system.b2_norm() - 2.0).abs() < 1e-12 * 2.0);
        let samples: Vec<f64> = (0..20).map(|j| 0.1 * j as f64).collect();
        let sup = samples.iter().cloned().fold(0.0, f64::max);
        let model =
            build_wave1d_interior(20, 1.0, &DampingProfile::zero(), &DampingProfile::Samples(samples), 1.0, 2.0)
                .unwrap();
        assert!((model.system.b2_norm() - sup.sqrt()).abs() < 1e-12 * sup.sqrt());
    }

    #[test]
    fn indicator_damping_masks_velocity() {
        let b1 = DampingProfile::Indicator {
            value: 1.0,
            support: (0.3, 0.7),
        };
        let model = build_wave1d_interior(9, 1.0, &b1, &DampingProfile::zero(), 1.0, 2.0).unwrap();
        let v: Vec<f64> = (0..9).map(|j| 1.0 + j as f64).collect();
        let b1 = model.system.b1_map();
        let damped = b1 * (b1.transpose() * nalgebra::DVector::from_column_slice(&v));
        for (j, x) in model.nodes.iter().enumerate() {
            let expected = if (0.3 - 1e-12..=0.7 + 1e-12).contains(x) { v[j] } else { 0.0 };
            assert!((damped[j] - expected).abs() < 1e-15, "node {j} at x = {x}");
        }
    }

    #[test]
    fn negative_damping_is_rejected() {
        let err = build_wave1d_interior(10, 1.0, &DampingProfile::Constant(-1.0), &DampingProfile::zero(), 1.0, 2.0);
        assert!(matches!(err, Err(Error::Validation(_))));
        let err = build_wave1d_interior(
            3,
            1.0,
            &DampingProfile::zero(),
            &DampingProfile::Samples(vec![0.0, -0.1, 0.0]),
            1.0,
            2.0,
        );
        assert!(matches!(err, Err(Error::Validation(_))));
        assert!(build_wave1d_boundary(10, 1.0, 0.0, &DampingProfile::zero(), 1.0, 2.0).is_err());
        assert!(build_wave1d_interior(2, 1.0, &DampingProfile::zero(), &DampingProfile::zero(), 1.0, 2.0).is_err());
    }

    #[test]
    fn boundary_model_structure() {
        let (n, l) = (16, 1.0);
        let weak = build_wave1d_boundary(n, l, 1e-8, &DampingProfile::zero(), 1.0, 2.0).unwrap();
        let strong = build_wave1d_boundary(n, l, 3.0, &DampingProfile::zero(), 1.0, 2.0).unwrap();
        // The feedback gain only enters B1; as k -> 0 the model is the
        // undamped Dirichlet-Neumann Laplacian.
        assert_eq!(weak.system.stiffness(), strong.system.stiffness());
        assert!(weak.system.b1_map().amax() < 1e-3);
        // Quarter-wave eigenvalue (pi / 2L)^2 of the Dirichlet-Neumann problem.
        let lam = smallest_eigenvalue(weak.system.stiffness());
        assert!((lam - (PI / 2.0).powi(2)).abs() < 0.01);
        // |B1* v|^2 = k v(L)^2 in nodal terms.
        let nodal: Vec<f64> = weak.nodes.iter().map(|x| x * x).collect();
        let coords = strong.to_coordinates(&nodal);
        let p: f64 = strong.system.b1_adjoint(&coords).iter().map(|x| x * x).sum();
        assert!((p - 3.0 * l.powi(4)).abs() < 1e-12);
    }

    #[test]
    fn hinged_beam_is_squared_laplacian() {
        let n = 30;
        let beam = build_beam1d(n, 1.0, BeamSupport::Hinged, &DampingProfile::zero(), &DampingProfile::zero(), 1.0, 2.0)
            .unwrap();
        let lap = dirichlet_laplacian(n, 1.0 / (n + 1) as f64);
        let lam_lap = smallest_eigenvalue(&lap);
        let lam_beam = smallest_eigenvalue(beam.system.stiffness());
        assert!((lam_beam - lam_lap * lam_lap).abs() < 1e-9 * lam_beam);
        // Pentadiagonal with the reflected corner entry 5.
        let h4 = (1.0 / (n + 1) as f64).powi(4);
        assert!((beam.system.stiffness()[(0, 0)] * h4 - 5.0).abs() < 1e-9);
        assert_eq!(beam.system.stiffness()[(0, 3)], 0.0);
    }

    #[test]
    fn clamped_beam_is_stiffer_than_hinged() {
        let n = 30;
        let z = DampingProfile::zero();
        let hinged = build_beam1d(n, 1.0, BeamSupport::Hinged, &z, &z, 1.0, 2.0).unwrap();
        let clamped = build_beam1d(n, 1.0, BeamSupport::Clamped, &z, &z, 1.0, 2.0).unwrap();
        let lh = smallest_eigenvalue(hinged.system.stiffness());
        let lc = smallest_eigenvalue(clamped.system.stiffness());
        assert!(lc > lh);
        // Continuum values: pi^4 = 97.4 (hinged), 4.730^4 = 500.6 (clamped).
        assert!((lh - PI.powi(4)).abs() / PI.powi(4) < 0.01);
        assert!((lc - 500.564).abs() / 500.564 < 0.02);
        assert!("free".parse::<BeamSupport>().is_err());
    }

    #[test]
    fn coordinates_round_trip() {
        let model = build_wave1d_boundary(8, 2.0, 1.0, &DampingProfile::zero(), 1.0, 2.0).unwrap();
        let nodal: Vec<f64> = (0..8).map(|j| (j as f64).sin()).collect();
        let back = model.to_nodal(&model.to_coordinates(&nodal));
        for (a, b) in nodal.iter().zip(&back) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
