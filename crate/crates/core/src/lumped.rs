//! The 6-DOF lumped physics-based computational model: damage-parametrized
//! spring stiffnesses and stochastic parameter realization.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{RayleighDamping, SystemMatrices};
use crate::error::{Error, Result};

pub const DOF_COUNT: usize = 6;
pub const SPRING_COUNT: usize = 6;
/// Highest spring index that may carry damage (the last spring never does).
pub const DAMAGEABLE_SPRINGS: usize = 5;

pub const NOMINAL_MASS_KG: f64 = 0.3925;
pub const NOMINAL_STIFFNESS_N_PER_M: f64 = 4.914e8;
pub const NOMINAL_ALPHA0: f64 = 1.0e3;
/// Stiffness-proportional coefficient consistent with the reported modal
/// damping ratios of both the lumped and the FEM model.
pub const NOMINAL_BETA0: f64 = 3.0e-7;

/// Mass, spring stiffness, and damping of the lumped chain.
#[derive(Debug, Clone, Copy)]
pub struct LumpedParameters {
    pub mass: f64,
    pub stiffness: f64,
    pub damping: RayleighDamping,
}

impl LumpedParameters {
    pub fn nominal() -> Self {
        Self {
            mass: NOMINAL_MASS_KG,
            stiffness: NOMINAL_STIFFNESS_N_PER_M,
            damping: RayleighDamping {
                alpha0: NOMINAL_ALPHA0,
                beta0: NOMINAL_BETA0,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) || !(self.stiffness > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lumped parameters must be positive: m={}, k={}",
                self.mass, self.stiffness
            )));
        }
        Ok(())
    }
}

/// Which spring (if any) is damaged, and how severely. The label space of
/// the classification problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DamageScenario {
    /// 1-based damaged spring index, `None` for the healthy structure.
    pub spring_index: Option<usize>,
    /// Fractional stiffness loss d in [0, 1).
    pub severity: f64,
}

impl DamageScenario {
    pub fn healthy() -> Self {
        Self {
            spring_index: None,
            severity: 0.0,
        }
    }

    pub fn damaged(spring_index: usize, severity: f64) -> Result<Self> {
        let s = Self {
            spring_index: Some(spring_index),
            severity,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self.spring_index {
            None => {
                if self.severity != 0.0 {
                    return Err(Error::InvalidArgument(
                        "healthy scenario must have severity 0".into(),
                    ));
                }
            }
            Some(idx) => {
                if idx < 1 || idx > DAMAGEABLE_SPRINGS {
                    return Err(Error::InvalidArgument(format!(
                        "damaged spring index must be 1..={DAMAGEABLE_SPRINGS}, got {idx}"
                    )));
                }
                if self.severity >= 1.0 {
                    return Err(Error::TotalDamage(self.severity));
                }
                if !(self.severity > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "damaged scenario needs severity in (0, 1), got {}",
                        self.severity
                    )));
                }
            }
        }
        Ok(())
    }

    /// Class label: "healthy" or "d1".."d5".
    pub fn label(&self) -> String {
        match self.spring_index {
            None => "healthy".to_string(),
            Some(i) => format!("d{i}"),
        }
    }
}

/// Per-spring stiffness values k1..k6 (N/m), all strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpringStiffnesses(pub [f64; SPRING_COUNT]);

impl SpringStiffnesses {
    pub fn uniform(k: f64) -> Self {
        Self([k; SPRING_COUNT])
    }
}

/// Applies the stiffness-loss damage model: k_i = (1 - d) * base_k at the
/// damaged spring, base_k elsewhere.
pub fn apply_damage(scenario: &DamageScenario, base_k: f64) -> Result<SpringStiffnesses> {
    if scenario.severity >= 1.0 {
        return Err(Error::TotalDamage(scenario.severity));
    }
    if let Some(idx) = scenario.spring_index {
        if idx < 1 || idx > DAMAGEABLE_SPRINGS {
            return Err(Error::InvalidArgument(format!(
                "damaged spring index must be 1..={DAMAGEABLE_SPRINGS}, got {idx}"
            )));
        }
    }
    let mut springs = [base_k; SPRING_COUNT];
    if let Some(idx) = scenario.spring_index {
        springs[idx - 1] = (1.0 - scenario.severity) * base_k;
    }
    Ok(SpringStiffnesses(springs))
}

/// Assembles the fixed-free chain: M = m*I, K tridiagonal with
/// K[i,i] = k_i + k_{i+1} (k_7 = 0) and K[i,i+1] = -k_{i+1}.
pub fn build_lumped(
    params: &LumpedParameters,
    springs: &SpringStiffnesses,
) -> Result<SystemMatrices> {
    params.validate()?;
    if springs.0.iter().any(|&k| !(k > 0.0)) {
        return Err(Error::InvalidArgument(
            "spring stiffnesses must be strictly positive".into(),
        ));
    }
    let n = DOF_COUNT;
    let mass = DMatrix::from_diagonal_element(n, n, params.mass);
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        let next = if i + 1 < n { springs.0[i + 1] } else { 0.0 };
        k[(i, i)] = springs.0[i] + next;
        if i + 1 < n {
            k[(i, i + 1)] = -springs.0[i + 1];
            k[(i + 1, i)] = -springs.0[i + 1];
        }
    }
    SystemMatrices::new(mass, k)
}

/// Uniform-bound parametric uncertainty on the four physical parameters of
/// the underlying bar, mapped onto the lumped m and k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyConfig {
    /// Half-width of the uniform bounds, as a fraction of nominal.
    pub bound_fraction: f64,
    pub nominal_area_m2: f64,
    pub nominal_elastic_modulus_pa: f64,
    pub nominal_density_kg_m3: f64,
    pub nominal_length_m: f64,
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        Self {
            bound_fraction: 0.05,
            nominal_area_m2: 4.0e-4,
            nominal_elastic_modulus_pa: 2.1e11,
            nominal_density_kg_m3: 7850.0,
            nominal_length_m: 1.0,
        }
    }
}

impl UncertaintyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bound_fraction >= 0.0 && self.bound_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "uncertainty bound fraction must be in [0, 1), got {}",
                self.bound_fraction
            )));
        }
        Ok(())
    }
}

fn draw_uniform<R: Rng>(rng: &mut R, nominal: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        return nominal;
    }
    rng.gen_range(nominal * (1.0 - eps)..=nominal * (1.0 + eps))
}

/// Draws A, E, rho, L independently uniform within the configured bounds
/// and scales the nominal m and k by the proportional groups rho*A*L and
/// E*A/L. Damping coefficients stay deterministic.
pub fn realize_stochastic<R: Rng>(
    params: &LumpedParameters,
    uc: &UncertaintyConfig,
    rng: &mut R,
) -> LumpedParameters {
    let eps = uc.bound_fraction;
    let a = draw_uniform(rng, uc.nominal_area_m2, eps);
    let e = draw_uniform(rng, uc.nominal_elastic_modulus_pa, eps);
    let rho = draw_uniform(rng, uc.nominal_density_kg_m3, eps);
    let l = draw_uniform(rng, uc.nominal_length_m, eps);
    let mass_ratio = (rho * a * l)
        / (uc.nominal_density_kg_m3 * uc.nominal_area_m2 * uc.nominal_length_m);
    let stiffness_ratio = (e * a / l)
        / (uc.nominal_elastic_modulus_pa * uc.nominal_area_m2 / uc.nominal_length_m);
    LumpedParameters {
        mass: params.mass * mass_ratio,
        stiffness: params.stiffness * stiffness_ratio,
        damping: params.damping,
    }
}
