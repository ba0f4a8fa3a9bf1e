use nalgebra::{Complex, DMatrix, Schur};

use crate::error::{Error, Result};
use crate::system::SemiDiscreteSystem;

/// Eigenvalues and spectral abscissa of a generator discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub eigenvalues: Vec<Complex<f64>>,
    /// `max Re(lambda)`
    pub abscissa: f64,
    /// Number of `rho` grid points used for the transport block, if any.
    pub n_rho: Option<usize>,
}

/// Matrix of the generator acting on `(u, v, z_1, ..., z_{n_rho-1})`:
///
/// ```text
/// u'   = v
/// v'   = -A u - B1 B1* v - B2 z_{n_rho-1}
/// z_j' = -(z_j - z_{j-1}) / (tau d_rho),   j >= 1,   z_0 = B2* v
/// ```
///
/// The inflow value `z_0` is eliminated through the domain condition
/// `z(0) = B2* v`, which enters as a coupling from `v` into `z_1`. The
/// dimension is `2N + (n_rho - 1) m2`.
pub fn assemble_generator(sys: &SemiDiscreteSystem, n_rho: usize) -> Result<DMatrix<f64>> {
    if n_rho < 2 {
        return Err(Error::usage(format!("transport grid needs at least 2 points, got {n_rho}")));
    }
    let n = sys.n_dof();
    let m2 = sys.m2();
    let cells = n_rho - 1;
    let dim = 2 * n + cells * m2;
    let mut g = DMatrix::zeros(dim, dim);

    for i in 0..n {
        g[(i, n + i)] = 1.0;
    }
    g.view_mut((n, 0), (n, n)).copy_from(&(-sys.stiffness()));
    let damping = sys.b1_map() * sys.b1_map().transpose();
    g.view_mut((n, n), (n, n)).copy_from(&(-damping));
    if m2 == 0 {
        return Ok(g);
    }

    let z = |j: usize| 2 * n + (j - 1) * m2;
    g.view_mut((n, z(cells)), (n, m2)).copy_from(&(-sys.b2_map()));

    let rate = cells as f64 / sys.tau();
    g.view_mut((z(1), n), (m2, n))
        .copy_from(&(sys.b2_map().transpose() * rate));
    for j in 1..=cells {
        for c in 0..m2 {
            g[(z(j) + c, z(j) + c)] = -rate;
            if j > 1 {
                g[(z(j) + c, z(j - 1) + c)] = rate;
            }
        }
    }
    Ok(g)
}

/// Diagonal similarity scaling by powers of two that equalizes row and column
/// norms. Eigenvalues are unchanged (exactly, as the scaling is a power of two).
pub fn balance(m: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    const SQRDX: f64 = RADIX * RADIX;
    let n = m.nrows();
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= SQRDX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= SQRDX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= inv;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// All eigenvalues of a dense real matrix: balancing, Hessenberg reduction
/// and shifted QR (real Schur form).
pub fn eigenvalues(matrix: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::usage(format!("matrix is {}x{}, not square", n, matrix.ncols())));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("matrix has non-finite entries"));
    }
    let mut m = matrix.clone();
    balance(&mut m);
    let max_iter = 100 * n.max(10);
    let schur = Schur::try_new(m, f64::EPSILON, max_iter).ok_or_else(|| {
        Error::numerical(format!(
            "QR iteration did not converge within {max_iter} iterations (dimension {n})"
        ))
    })?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

pub fn spectral_abscissa(matrix: &DMatrix<f64>) -> Result<SpectralReport> {
    let eigenvalues = eigenvalues(matrix)?;
    let abscissa = eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(SpectralReport {
        eigenvalues,
        abscissa,
        n_rho: None,
    })
}

/// Spectrum of the generator of `sys` discretized with `n_rho` transport points.
pub fn spectral_report(sys: &SemiDiscreteSystem, n_rho: usize) -> Result<SpectralReport> {
    let g = assemble_generator(sys, n_rho)?;
    let mut report = spectral_abscissa(&g)?;
    report.n_rho = Some(n_rho);
    Ok(report)
}
