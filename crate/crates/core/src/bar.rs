//! Physical-twin emulator: a fixed-free elastic bar discretized with
//! two-node finite elements, producing noisy FRF "measurements".

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{self, FrfResult, HarmonicLoad, RayleighDamping, SystemMatrices};
use crate::error::{Error, Result};
use crate::rng::{substream, Domain};

/// Floor applied to noisy magnitudes so log plots stay finite.
const MAGNITUDE_FLOOR_M: f64 = 1e-12;

/// Geometry, material, and damping of the bar, plus mesh resolution.
#[derive(Debug, Clone, Copy)]
pub struct BarProperties {
    pub density_kg_m3: f64,
    pub elastic_modulus_pa: f64,
    pub area_m2: f64,
    pub length_m: f64,
    pub element_count: usize,
    pub damping: RayleighDamping,
}

impl BarProperties {
    /// The bar of the reference setup: steel, 1 m, 40 elements.
    pub fn nominal() -> Self {
        Self {
            density_kg_m3: 7850.0,
            elastic_modulus_pa: 2.1e11,
            area_m2: 4.0e-4,
            length_m: 1.0,
            element_count: 40,
            damping: RayleighDamping {
                alpha0: crate::lumped::NOMINAL_ALPHA0,
                beta0: crate::lumped::NOMINAL_BETA0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("density", self.density_kg_m3),
            ("elastic modulus", self.elastic_modulus_pa),
            ("area", self.area_m2),
            ("length", self.length_m),
        ];
        for (name, v) in fields {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "bar {name} must be positive, got {v}"
                )));
            }
        }
        if self.element_count < 1 {
            return Err(Error::InvalidArgument("element_count must be >= 1".into()));
        }
        Ok(())
    }

    /// Longitudinal wave speed c = sqrt(E/rho).
    pub fn wave_speed(&self) -> f64 {
        (self.elastic_modulus_pa / self.density_kg_m3).sqrt()
    }
}

/// Additive Gaussian measurement noise on response magnitudes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeasurementNoise {
    pub sigma_m: f64,
    pub seed: u64,
}

impl MeasurementNoise {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_m >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "noise sigma must be nonnegative, got {}",
                self.sigma_m
            )));
        }
        Ok(())
    }
}

/// Assembles the free-DOF mass and stiffness matrices of the clamped bar.
///
/// Element matrices: M_e = rho*A*L_e * [[1/3, 1/6], [1/6, 1/3]],
/// K_e = (E*A/L_e) * [[1, -1], [-1, 1]]. The clamped node's row and column
/// are deleted, leaving element_count free DOFs.
pub fn assemble_bar(props: &BarProperties) -> Result<SystemMatrices> {
    props.validate()?;
    let ne = props.element_count;
    let le = props.length_m / ne as f64;
    let m_coef = props.density_kg_m3 * props.area_m2 * le;
    let k_coef = props.elastic_modulus_pa * props.area_m2 / le;

    // full mesh has ne + 1 nodes; node 0 is clamped
    let n = ne + 1;
    let mut mass = DMatrix::zeros(n, n);
    let mut stiffness = DMatrix::zeros(n, n);
    for e in 0..ne {
        let me = [[m_coef / 3.0, m_coef / 6.0], [m_coef / 6.0, m_coef / 3.0]];
        let ke = [[k_coef, -k_coef], [-k_coef, k_coef]];
        for a in 0..2 {
            for b in 0..2 {
                mass[(e + a, e + b)] += me[a][b];
                stiffness[(e + a, e + b)] += ke[a][b];
            }
        }
    }
    let mass = mass.view((1, 1), (ne, ne)).clone_owned();
    let stiffness = stiffness.view((1, 1), (ne, ne)).clone_owned();
    SystemMatrices::new(mass, stiffness)
}

/// Clean FRF plus noisy per-DOF magnitudes emulating sensor readings.
#[derive(Debug, Clone)]
pub struct NoisyFrf {
    pub clean: FrfResult,
    /// One magnitude vector (m) per frequency point, noise added.
    pub noisy_magnitudes: Vec<DVector<f64>>,
}

/// Solves the bar FRF and perturbs each per-DOF magnitude with independent
/// zero-mean Gaussian noise, floored at 1e-12 m. Deterministic for a fixed
/// seed.
pub fn measure_frf(
    props: &BarProperties,
    load: &HarmonicLoad,
    frequencies_hz: &[f64],
    noise: &MeasurementNoise,
) -> Result<NoisyFrf> {
    noise.validate()?;
    let sys = assemble_bar(props)?;
    let clean = dynamics::frf_solve(&sys, &props.damping, load, frequencies_hz)?;
    let normal = Normal::new(0.0, noise.sigma_m)
        .map_err(|e| Error::InvalidArgument(format!("bad noise sigma: {e}")))?;
    let mut rng = substream(noise.seed, Domain::Measurement, 0);
    let noisy_magnitudes = clean
        .response
        .iter()
        .map(|u| {
            u.map(|c| {
                let perturbed = c.norm() + normal.sample(&mut rng);
                perturbed.max(MAGNITUDE_FLOOR_M)
            })
        })
        .collect();
    Ok(NoisyFrf {
        clean,
        noisy_magnitudes,
    })
}

/// Noise draws in measurement order, exposed for statistical tests.
#[cfg(test)]
fn noise_draws(noise: &MeasurementNoise, count: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, noise.sigma_m).unwrap();
    let mut rng = substream(noise.seed, Domain::Measurement, 0);
    (0..count).map(|_| normal.sample(&mut rng)).collect()
}
