//! Unit conventions, physical constants and parameter bundles.
//!
//! Energies are carried as frequencies (E/h, Hz), lengths in nm and rates in
//! Hz. The van der Waals coefficient is entered in kHz·μm³ and exposed in
//! Hz·nm³ (1 kHz·μm³ = 10¹² Hz·nm³).

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Planck constant, J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant, J·s.
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

const M2_TO_NM2: f64 = 1e18;
const KHZ_UM3_TO_HZ_NM3: f64 = 1e12;

/// `k_B T / h` in Hz.
pub fn thermal_energy_hz(temperature_k: f64) -> f64 {
    BOLTZMANN * temperature_k / PLANCK
}

/// Parameters of `V(x) = A e^{-αx} - C₃/x³` for one internal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialParams {
    /// Repulsion height, Hz.
    pub a_hz: f64,
    /// Repulsion range, nm⁻¹.
    pub alpha_per_nm: f64,
    /// van der Waals coefficient, kHz·μm³.
    pub c3_khz_um3: f64,
}

impl PotentialParams {
    pub fn new(a_hz: f64, alpha_per_nm: f64, c3_khz_um3: f64) -> Result<Self> {
        let p = Self {
            a_hz,
            alpha_per_nm,
            c3_khz_um3,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_hz > 0.0 && self.a_hz.is_finite()) {
            return param(format!("repulsion height A must be positive, got {}", self.a_hz));
        }
        if !(self.alpha_per_nm > 0.0 && self.alpha_per_nm.is_finite()) {
            return param(format!("repulsion range alpha must be positive, got {}", self.alpha_per_nm));
        }
        if !(self.c3_khz_um3 > 0.0 && self.c3_khz_um3.is_finite()) {
            return param(format!("C3 must be positive, got {}", self.c3_khz_um3));
        }
        Ok(())
    }

    /// C₃ in Hz·nm³.
    pub fn c3(&self) -> f64 {
        self.c3_khz_um3 * KHZ_UM3_TO_HZ_NM3
    }

    pub fn silica_cesium_ground() -> Self {
        Self {
            a_hz: 1.6e18,
            alpha_per_nm: 53.0,
            c3_khz_um3: 1.56,
        }
    }

    pub fn silica_cesium_excited() -> Self {
        Self {
            a_hz: 3.17e18,
            alpha_per_nm: 53.0,
            c3_khz_um3: 3.09,
        }
    }
}

/// Two-level atom with its surface potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomParams {
    pub mass_amu: f64,
    /// Natural linewidth γ₀, Hz.
    pub gamma0_hz: f64,
    /// Transition wavelength, nm.
    pub lambda0_nm: f64,
    pub ground: PotentialParams,
    pub excited: PotentialParams,
}

impl AtomParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass_amu > 0.0 && self.mass_amu.is_finite()) {
            return param(format!("mass must be positive, got {} amu", self.mass_amu));
        }
        if !(self.gamma0_hz > 0.0 && self.gamma0_hz.is_finite()) {
            return param(format!("gamma0 must be positive, got {}", self.gamma0_hz));
        }
        if !(self.lambda0_nm > 0.0 && self.lambda0_nm.is_finite()) {
            return param(format!("lambda0 must be positive, got {}", self.lambda0_nm));
        }
        self.ground.validate()?;
        self.excited.validate()
    }

    /// Cesium D₂ line near fused silica.
    pub fn cesium_silica() -> Self {
        Self {
            mass_amu: 132.9,
            gamma0_hz: 5.25e6,
            lambda0_nm: 852.0,
            ground: PotentialParams::silica_cesium_ground(),
            excited: PotentialParams::silica_cesium_excited(),
        }
    }

    /// Probe wavenumber `2π/λ₀`, nm⁻¹.
    pub fn resonant_wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.lambda0_nm
    }
}

impl Default for AtomParams {
    fn default() -> Self {
        Self::cesium_silica()
    }
}

/// Weak probe field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldParams {
    /// Probe wavenumber, nm⁻¹.
    pub k_per_nm: f64,
    /// Saturation parameter `s = 2|Ω|²/γ₀²`.
    pub saturation_s: f64,
    /// Amplitude reflection coefficient of the surface.
    pub reflection_r: f64,
}

impl FieldParams {
    pub fn new(k_per_nm: f64, saturation_s: f64, reflection_r: f64) -> Result<Self> {
        let f = Self {
            k_per_nm,
            saturation_s,
            reflection_r,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_per_nm > 0.0 && self.k_per_nm.is_finite()) {
            return param(format!("wavenumber must be positive, got {}", self.k_per_nm));
        }
        if !(self.saturation_s >= 0.0 && self.saturation_s.is_finite()) {
            return param(format!("saturation parameter must be >= 0, got {}", self.saturation_s));
        }
        if !(0.0..1.0).contains(&self.reflection_r) {
            return param(format!("reflection coefficient must lie in [0, 1), got {}", self.reflection_r));
        }
        Ok(())
    }
}

/// Kinetic coefficient `K = ħ/(4πm)` in Hz·nm², so that the Schrödinger
/// equation reads `-K ψ'' + V ψ = E ψ` with V and E in Hz.
pub fn kinetic_coefficient(mass_amu: f64) -> Result<f64> {
    if !(mass_amu > 0.0 && mass_amu.is_finite()) {
        return param(format!("mass must be positive, got {mass_amu} amu"));
    }
    let mass_kg = mass_amu * AMU;
    Ok(HBAR / (4.0 * std::f64::consts::PI * mass_kg) * M2_TO_NM2)
}

/// Normal-incidence amplitude reflection `(n₁ - 1)/(n₁ + 1)`.
pub fn reflection_coefficient(n1: f64) -> Result<f64> {
    if !(n1 >= 1.0 && n1.is_finite()) {
        return param(format!("refractive index must be >= 1, got {n1}"));
    }
    Ok((n1 - 1.0) / (n1 + 1.0))
}
