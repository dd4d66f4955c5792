//! Shared linear-dynamics kernel: modal analysis, Rayleigh damping, and
//! complex frequency-response solves for any discrete system handed to it.
//!
//! All operations are pure functions of their inputs; the types are
//! immutable after construction and safe to share across threads.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;
/// Reciprocal condition estimate below which a dynamic stiffness matrix is
/// declared singular.
const RCOND_SINGULAR: f64 = 1e-14;

/// Mass and stiffness of a discrete linear dynamic system (SI units).
///
/// Mass must be symmetric positive definite, stiffness symmetric. Both are
/// checked at construction.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
}

impl SystemMatrices {
    pub fn new(mass: DMatrix<f64>, stiffness: DMatrix<f64>) -> Result<Self> {
        let n = mass.nrows();
        if n == 0 || !mass.is_square() || !stiffness.is_square() || stiffness.nrows() != n {
            return Err(Error::InvalidArgument(format!(
                "mass is {}x{}, stiffness is {}x{}",
                mass.nrows(),
                mass.ncols(),
                stiffness.nrows(),
                stiffness.ncols()
            )));
        }
        if !is_symmetric(&mass) {
            return Err(Error::InvalidMassMatrix("not symmetric".into()));
        }
        if !is_symmetric(&stiffness) {
            return Err(Error::InvalidArgument("stiffness not symmetric".into()));
        }
        if mass.clone().cholesky().is_none() {
            return Err(Error::InvalidMassMatrix("not positive definite".into()));
        }
        Ok(Self { mass, stiffness })
    }

    pub fn dof_count(&self) -> usize {
        self.mass.nrows()
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return false;
            }
        }
    }
    true
}

/// Proportional damping C = alpha0*M + beta0*K.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct RayleighDamping {
    pub alpha0: f64,
    pub beta0: f64,
}

impl RayleighDamping {
    pub fn new(alpha0: f64, beta0: f64) -> Result<Self> {
        if !(alpha0 >= 0.0) || !(beta0 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Rayleigh coefficients must be nonnegative, got alpha0={alpha0}, beta0={beta0}"
            )));
        }
        Ok(Self { alpha0, beta0 })
    }

    pub fn matrix(&self, sys: &SystemMatrices) -> DMatrix<f64> {
        sys.mass() * self.alpha0 + sys.stiffness() * self.beta0
    }

    /// Modal damping ratio at angular frequency omega (rad/s).
    pub fn modal_ratio(&self, omega: f64) -> f64 {
        self.alpha0 / (2.0 * omega) + self.beta0 * omega / 2.0
    }
}

/// Natural frequencies (Hz, ascending), damping ratios, and mass-normalized
/// mode shapes of a system.
#[derive(Debug, Clone)]
pub struct ModalData {
    pub natural_frequencies_hz: Vec<f64>,
    pub damping_ratios: Vec<f64>,
    /// Columns are mass-normalized mode shapes, same order as frequencies.
    pub mode_shapes: DMatrix<f64>,
}

/// Single harmonic point force: 1-based DOF index and magnitude (N).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HarmonicLoad {
    pub dof_index: usize,
    pub magnitude: f64,
}

impl HarmonicLoad {
    pub fn new(dof_index: usize, magnitude: f64) -> Result<Self> {
        if dof_index == 0 {
            return Err(Error::InvalidArgument("load DOF index is 1-based".into()));
        }
        if !(magnitude > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "load magnitude must be positive, got {magnitude}"
            )));
        }
        Ok(Self { dof_index, magnitude })
    }

    fn validate_for(&self, sys: &SystemMatrices) -> Result<()> {
        if self.dof_index > sys.dof_count() {
            return Err(Error::InvalidArgument(format!(
                "load DOF {} exceeds system size {}",
                self.dof_index,
                sys.dof_count()
            )));
        }
        Ok(())
    }

    fn vector(&self, n: usize) -> DVector<f64> {
        let mut f = DVector::zeros(n);
        f[self.dof_index - 1] = self.magnitude;
        f
    }
}

/// Complex displacement response per frequency point.
#[derive(Debug, Clone)]
pub struct FrfResult {
    pub frequencies_hz: Vec<f64>,
    /// One complex displacement vector (m) per frequency point.
    pub response: Vec<DVector<Complex64>>,
}

impl FrfResult {
    /// |u| per DOF at frequency point `i`.
    pub fn magnitudes(&self, i: usize) -> DVector<f64> {
        self.response[i].map(|c| c.norm())
    }

    /// |u| of one DOF (0-based) across all frequency points.
    pub fn magnitude_trace(&self, dof: usize) -> Vec<f64> {
        self.response.iter().map(|u| u[dof].norm()).collect()
    }
}

/// Solves the generalized eigenproblem K*phi = lambda*M*phi via Cholesky
/// reduction of M, returning all modes sorted by frequency.
///
/// Damping ratios follow the Rayleigh relation
/// zeta_i = alpha0/(2*omega_i) + beta0*omega_i/2.
pub fn modal_analysis(sys: &SystemMatrices, damping: &RayleighDamping) -> Result<ModalData> {
    let n = sys.dof_count();
    let chol = sys
        .mass()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidMassMatrix("not positive definite".into()))?;
    let l = chol.l();

    // A = L^-1 K L^-T, symmetric standard problem
    let b = l
        .solve_lower_triangular(sys.stiffness())
        .ok_or_else(|| Error::ModalAnalysisFailed("triangular solve failed".into()))?;
    let mut a = l
        .solve_lower_triangular(&b.transpose())
        .ok_or_else(|| Error::ModalAnalysisFailed("triangular solve failed".into()))?;
    // symmetrize against roundoff
    a = (&a + a.transpose()) * 0.5;

    let eig = a.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let lt = l.transpose();
    let mut frequencies = Vec::with_capacity(n);
    let mut ratios = Vec::with_capacity(n);
    let mut shapes = DMatrix::zeros(n, n);
    for (k, &idx) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[idx];
        if !(lambda > 0.0) {
            return Err(Error::ModalAnalysisFailed(format!(
                "nonpositive eigenvalue {lambda}"
            )));
        }
        let omega = lambda.sqrt();
        frequencies.push(omega / (2.0 * std::f64::consts::PI));
        ratios.push(damping.modal_ratio(omega));
        // phi = L^-T v, mass-normalized since v is unit-norm
        let v = eig.eigenvectors.column(idx).clone_owned();
        let phi = lt
            .solve_upper_triangular(&v)
            .ok_or_else(|| Error::ModalAnalysisFailed("back substitution failed".into()))?;
        shapes.set_column(k, &phi);
    }

    Ok(ModalData {
        natural_frequencies_hz: frequencies,
        damping_ratios: ratios,
        mode_shapes: shapes,
    })
}

/// Direct FRF: solves (K - omega^2 M + j omega C) u = f at each frequency
/// with a dense complex LU factorization.
pub fn frf_solve(
    sys: &SystemMatrices,
    damping: &RayleighDamping,
    load: &HarmonicLoad,
    frequencies_hz: &[f64],
) -> Result<FrfResult> {
    load.validate_for(sys)?;
    validate_frequencies(frequencies_hz)?;
    let n = sys.dof_count();
    let c = damping.matrix(sys);
    let f = load.vector(n).map(|x| Complex64::new(x, 0.0));

    let mut response = Vec::with_capacity(frequencies_hz.len());
    for &freq in frequencies_hz {
        let omega = 2.0 * std::f64::consts::PI * freq;
        let mut d = DMatrix::<Complex64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                d[(i, j)] = Complex64::new(
                    sys.stiffness()[(i, j)] - omega * omega * sys.mass()[(i, j)],
                    omega * c[(i, j)],
                );
            }
        }
        let lu = d.lu();
        if rcond_estimate(lu.u()) < RCOND_SINGULAR {
            return Err(Error::SingularAtFrequency(freq));
        }
        let u = lu
            .solve(&f)
            .ok_or(Error::SingularAtFrequency(freq))?;
        response.push(u);
    }
    Ok(FrfResult {
        frequencies_hz: frequencies_hz.to_vec(),
        response,
    })
}

/// Cheap reciprocal-condition estimate from the diagonal of the LU factor U.
fn rcond_estimate(u: DMatrix<Complex64>) -> f64 {
    let mut min = f64::INFINITY;
    let mut max: f64 = 0.0;
    for i in 0..u.nrows() {
        let p = u[(i, i)].norm();
        min = min.min(p);
        max = max.max(p);
    }
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// FRF via mass-normalized modal superposition. Valid for proportional
/// damping only; serves as an independent oracle for [`frf_solve`].
pub fn frf_modal_superposition(
    sys: &SystemMatrices,
    damping: &RayleighDamping,
    load: &HarmonicLoad,
    frequencies_hz: &[f64],
) -> Result<FrfResult> {
    load.validate_for(sys)?;
    validate_frequencies(frequencies_hz)?;
    let n = sys.dof_count();
    let modal = modal_analysis(sys, damping)?;
    let f = load.vector(n);
    // modal force participation per mode
    let participation: Vec<f64> = (0..n)
        .map(|i| modal.mode_shapes.column(i).dot(&f))
        .collect();
    let lambdas: Vec<f64> = modal
        .natural_frequencies_hz
        .iter()
        .map(|&fi| {
            let w = 2.0 * std::f64::consts::PI * fi;
            w * w
        })
        .collect();

    let mut response = Vec::with_capacity(frequencies_hz.len());
    for &freq in frequencies_hz {
        let omega = 2.0 * std::f64::consts::PI * freq;
        let mut u = DVector::<Complex64>::zeros(n);
        for i in 0..n {
            // phi' C phi = alpha0 + beta0*lambda for Rayleigh damping
            let denom = Complex64::new(
                lambdas[i] - omega * omega,
                omega * (damping.alpha0 + damping.beta0 * lambdas[i]),
            );
            if denom.norm() == 0.0 {
                return Err(Error::SingularAtFrequency(freq));
            }
            let q = Complex64::new(participation[i], 0.0) / denom;
            for r in 0..n {
                u[r] += q * modal.mode_shapes[(r, i)];
            }
        }
        response.push(u);
    }
    Ok(FrfResult {
        frequencies_hz: frequencies_hz.to_vec(),
        response,
    })
}

fn validate_frequencies(frequencies_hz: &[f64]) -> Result<()> {
    if let Some(&bad) = frequencies_hz.iter().find(|&&f| !(f >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "frequencies must be nonnegative and finite, got {bad}"
        )));
    }
    Ok(())
}

/// Evenly spaced frequency grid, inclusive of both ends.
pub fn frequency_grid(fmin: f64, fmax: f64, steps: usize) -> Result<Vec<f64>> {
    if steps < 2 || !(fmin < fmax) || !(fmin >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bad frequency grid: fmin={fmin}, fmax={fmax}, steps={steps}"
        )));
    }
    let h = (fmax - fmin) / (steps - 1) as f64;
    Ok((0..steps).map(|i| fmin + h * i as f64).collect())
}
