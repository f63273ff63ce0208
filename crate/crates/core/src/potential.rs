//! Surface-induced potential `V(x) = A e^{-αx} - C₃/x³`: evaluation, well
//! geometry and validity diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{kinetic_coefficient, PotentialParams};
use crate::roots::{bisect_secant, RootOptions};

/// A one-dimensional potential on the half line with an impenetrable wall.
///
/// Implementations are plain functions of position; energies in Hz, lengths
/// in nm.
pub trait Potential: Send + Sync {
    /// V(x) in Hz.
    fn value(&self, x: f64) -> f64;

    /// Position of the hard wall (ψ = 0), nm.
    fn wall(&self) -> f64;

    /// Upper bound of |V(x)| for x ≥ `x`, used to size grid steps.
    fn magnitude_bound(&self, x: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateLabel {
    Ground,
    Excited,
}

impl std::fmt::Display for StateLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateLabel::Ground => f.write_str("ground"),
            StateLabel::Excited => f.write_str("excited"),
        }
    }
}

/// Exponential arguments above this are treated as a vanished repulsion.
const EXP_CLAMP: f64 = 700.0;

/// Surface potential for one internal state.
///
/// The pure formula diverges to -∞ as x → 0⁺. A hard wall is placed at the
/// top of the repulsive barrier (the local maximum of V inside the well
/// minimum); everything inside is excluded from the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePotential {
    pub params: PotentialParams,
    pub label: StateLabel,
    x_wall: f64,
    x_min: f64,
    v_min: f64,
}

impl SurfacePotential {
    pub fn new(params: PotentialParams, label: StateLabel) -> Result<Self> {
        params.validate()?;
        let (x_wall, x_min) = stationary_points(&params)?;
        let v_min = raw_value(&params, x_min);
        Ok(Self {
            params,
            label,
            x_wall,
            x_min,
            v_min,
        })
    }

    /// A e^{-αx} - C₃/x³ for x beyond the wall.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(x > self.x_wall) {
            return Err(Error::Domain(format!(
                "x = {x} nm lies inside the wall at {} nm",
                self.x_wall
            )));
        }
        Ok(raw_value(&self.params, x))
    }

    /// dV/dx in Hz/nm.
    pub fn derivative(&self, x: f64) -> f64 {
        raw_derivative(&self.params, x)
    }

    /// Location and value of the well minimum.
    pub fn well_minimum(&self) -> (f64, f64) {
        (self.x_min, self.v_min)
    }

    /// Barrier-top position used as the hard wall.
    pub fn x_wall(&self) -> f64 {
        self.x_wall
    }

    /// Classical turning points `V(x) = E` on either side of the minimum.
    pub fn turning_points(&self, energy: f64) -> Result<(f64, f64)> {
        if !(energy > self.v_min && energy < 0.0) {
            return Err(Error::Domain(format!(
                "turning points need V_min ({:.6e} Hz) < E < 0, got {energy:.6e} Hz",
                self.v_min
            )));
        }
        let p = self.params;
        let g = |x: f64| raw_value(&p, x) - energy;
        let opts = RootOptions {
            x_tol: 1e-15,
            ..RootOptions::default()
        };
        let inner = bisect_secant(g, self.x_wall, self.x_min, opts)?;
        // The vdW tail bounds the outer root from above: V(x) ≤ -C₃/x³ + A e^{-αx}.
        let mut hi = (2.0 * p.c3() / energy.abs()).cbrt().max(2.0 * self.x_min);
        while g(hi) < 0.0 {
            hi *= 2.0;
        }
        let outer = bisect_secant(g, self.x_min, hi, opts)?;
        Ok((inner, outer))
    }
}

impl Potential for SurfacePotential {
    fn value(&self, x: f64) -> f64 {
        raw_value(&self.params, x)
    }

    fn wall(&self) -> f64 {
        self.x_wall
    }

    fn magnitude_bound(&self, x: f64) -> f64 {
        let x = x.max(self.x_wall);
        let rep = self.params.a_hz * (-(self.params.alpha_per_nm * x).min(EXP_CLAMP)).exp();
        if x < self.x_min {
            // between wall and minimum |V| ≤ max(barrier top, depth)
            raw_value(&self.params, self.x_wall).abs().max(self.v_min.abs())
        } else {
            rep + self.params.c3() / (x * x * x)
        }
    }
}

fn raw_value(p: &PotentialParams, x: f64) -> f64 {
    let arg = p.alpha_per_nm * x;
    let rep = if arg > EXP_CLAMP { 0.0 } else { p.a_hz * (-arg).exp() };
    rep - p.c3() / (x * x * x)
}

fn raw_derivative(p: &PotentialParams, x: f64) -> f64 {
    let arg = p.alpha_per_nm * x;
    let rep = if arg > EXP_CLAMP { 0.0 } else { p.a_hz * (-arg).exp() };
    -p.alpha_per_nm * rep + 3.0 * p.c3() / (x * x * x * x)
}

/// Roots of dV/dx = 0: the barrier top and the well minimum.
///
/// Stationary points solve αA e^{-αx} = 3C₃/x⁴, i.e. the zeros of
/// `s(x) = ln(αA/3C₃) - αx + 4 ln x`, which is concave with its maximum at
/// x = 4/α. Two roots exist iff s(4/α) > 0.
fn stationary_points(p: &PotentialParams) -> Result<(f64, f64)> {
    let alpha = p.alpha_per_nm;
    let offset = (alpha * p.a_hz / (3.0 * p.c3())).ln();
    let s = |x: f64| offset - alpha * x + 4.0 * x.ln();
    let peak = 4.0 / alpha;
    if s(peak) <= 0.0 {
        return Err(Error::DegeneratePotential(format!(
            "no local minimum: repulsion A = {:e} Hz too weak for C3 = {:e} Hz nm^3",
            p.a_hz,
            p.c3()
        )));
    }
    let opts = RootOptions {
        x_tol: 0.0,
        rel_tol: 1e-15,
        ..RootOptions::default()
    };
    let mut lo = peak;
    while s(lo) > 0.0 {
        lo *= 0.5;
    }
    let mut hi = peak;
    while s(hi) > 0.0 {
        hi *= 2.0;
    }
    let barrier = bisect_secant(s, lo, peak, opts)?;
    let minimum = bisect_secant(s, peak, hi, opts)?;
    Ok((barrier, minimum))
}

/// Radius below which the centrifugal term ħ²(l² - 1/4)/2mr² is negligible
/// against the vdW attraction: `r_c = 2mC₃/(ħ²|l² - 1/4|)`, in nm.
pub fn centrifugal_radius(mass_amu: f64, c3_hz_nm3: f64, l_z: i64) -> Result<f64> {
    if !(c3_hz_nm3 > 0.0) {
        return Err(Error::Parameter(format!("C3 must be positive, got {c3_hz_nm3}")));
    }
    let kin = kinetic_coefficient(mass_amu)?;
    let l = l_z as f64;
    Ok(c3_hz_nm3 / (kin * (l * l - 0.25).abs()))
}
