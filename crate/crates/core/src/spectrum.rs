//! Weak-field excitation spectra.
//!
//! Excited populations follow the adiabatic weak-field form
//!
//! ```text
//! ρ_aa(δ) = (s/2) Σ_b γ₀² / (γ_a² + 4 δ_ab²) · |F*_ab − R F_ab|² · ρ_bb,
//! δ_ab = δ − (E_a − E_b),
//! ```
//!
//! and the scattering rate into a channel is `Γ = Σ_a ρ_aa γ_a^(channel)`.
//! Free ground levels enter through energy-quadrature weights, so spectra
//! from a thermal continuum mixture carry an extra 1/Hz from the
//! delta-of-energy normalization; only their shape is meaningful.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::franck_condon::{FranckCondonMatrix, LevelId};
use crate::model::{thermal_energy_hz, FieldParams};
use crate::rates::LevelRates;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixtureKind {
    ThermalFree,
    FlatBound,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureEntry {
    pub id: LevelId,
    pub weight: f64,
}

/// Incoherent initial ground-state mixture with weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialMixture {
    pub kind: MixtureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
    pub entries: Vec<MixtureEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Gauss–Legendre nodes and weights (Hz) on `[0, e_cut]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyGrid {
    pub energies_hz: Vec<f64>,
    pub weights_hz: Vec<f64>,
}

impl EnergyGrid {
    pub fn gauss_legendre(e_cut_hz: f64, nodes: usize) -> Result<Self> {
        if !(e_cut_hz > 0.0 && e_cut_hz.is_finite()) {
            return param(format!("energy cutoff must be positive, got {e_cut_hz}"));
        }
        let Some(n) = NonZeroUsize::new(nodes) else {
            return param("energy grid needs at least one node");
        };
        let rule = GaussLegendre::new(n);
        let half = 0.5 * e_cut_hz;
        let (mut energies_hz, mut weights_hz) = (Vec::with_capacity(nodes), Vec::with_capacity(nodes));
        for (x, w) in rule.iter() {
            energies_hz.push(half * (x + 1.0));
            weights_hz.push(half * w);
        }
        Ok(Self {
            energies_hz,
            weights_hz,
        })
    }

    /// Default thermal grid: `[0, 10 k_B T]` with 64 nodes.
    pub fn thermal(temperature_k: f64) -> Result<Self> {
        Self::gauss_legendre(10.0 * thermal_energy_hz(temperature_k), 64)
    }
}

impl InitialMixture {
    fn normalized(kind: MixtureKind, temperature_k: Option<f64>, mut entries: Vec<MixtureEntry>) -> Result<Self> {
        if entries.is_empty() {
            return param("initial mixture is empty");
        }
        if entries.iter().any(|e| !(e.weight >= 0.0 && e.weight.is_finite())) {
            return param("mixture weights must be finite and non-negative");
        }
        let total: f64 = entries.iter().map(|e| e.weight).sum();
        if !(total > 0.0) {
            return param("mixture weights sum to zero");
        }
        entries.iter_mut().for_each(|e| e.weight /= total);
        Ok(Self {
            kind,
            temperature_k,
            entries,
            warnings: Vec::new(),
        })
    }

    /// Boltzmann-weighted free levels on `grid`: weight ∝ w_i e^{-E_i/k_BT}.
    pub fn thermal(temperature_k: f64, grid: &EnergyGrid) -> Result<Self> {
        if !(temperature_k > 0.0) {
            return param(format!("temperature must be positive, got {temperature_k}"));
        }
        let kt = thermal_energy_hz(temperature_k);
        let entries = grid
            .energies_hz
            .iter()
            .zip(&grid.weights_hz)
            .map(|(&e, &w)| MixtureEntry {
                id: LevelId::Free(e),
                weight: w * (-e / kt).exp(),
            })
            .collect();
        let mut m = Self::normalized(MixtureKind::ThermalFree, Some(temperature_k), entries)?;
        let e_cut = grid.energies_hz.iter().fold(0.0f64, |a, &e| a.max(e));
        if e_cut < 3.0 * kt {
            let msg = format!(
                "energy grid ends at {:.3} k_BT; Boltzmann truncation error exceeds 5%",
                e_cut / kt
            );
            log::warn!("{msg}");
            m.warnings.push(msg);
        }
        Ok(m)
    }

    /// Equal weights over bound levels `nu_min..=nu_max`.
    pub fn flat_bound(nu_min: usize, nu_max: usize) -> Result<Self> {
        if nu_max < nu_min {
            return param(format!("empty bound range {nu_min}..={nu_max}"));
        }
        let entries = (nu_min..=nu_max)
            .map(|nu| MixtureEntry {
                id: LevelId::Bound(nu),
                weight: 1.0,
            })
            .collect();
        Self::normalized(MixtureKind::FlatBound, None, entries)
    }

    pub fn custom(entries: Vec<MixtureEntry>) -> Result<Self> {
        Self::normalized(MixtureKind::Custom, None, entries)
    }

    /// Convex combination `p·self + (1 − p)·other`.
    pub fn blend(&self, other: &Self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return param(format!("blend fraction must lie in [0, 1], got {p}"));
        }
        let mut entries: Vec<MixtureEntry> = Vec::new();
        for (src, f) in [(self, p), (other, 1.0 - p)] {
            for e in &src.entries {
                match entries.iter_mut().find(|x| x.id == e.id) {
                    Some(x) => x.weight += f * e.weight,
                    None => entries.push(MixtureEntry {
                        id: e.id,
                        weight: f * e.weight,
                    }),
                }
            }
        }
        Self::normalized(MixtureKind::Custom, None, entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateSelector {
    Total,
    Channel,
    Radiation,
}

/// Detuning grid `min, min + step, …, ≤ max` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetuningGrid {
    pub min_hz: f64,
    pub max_hz: f64,
    pub step_hz: f64,
}

impl Default for DetuningGrid {
    fn default() -> Self {
        Self {
            min_hz: -150e6,
            max_hz: 50e6,
            step_hz: 0.25e6,
        }
    }
}

impl DetuningGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_hz.is_finite() && self.max_hz.is_finite() && self.max_hz > self.min_hz) {
            return param(format!("detuning grid needs min < max, got [{}, {}]", self.min_hz, self.max_hz));
        }
        if !(self.step_hz > 0.0) || (self.max_hz - self.min_hz) / self.step_hz > 1e7 {
            return param(format!("invalid detuning step {}", self.step_hz));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max_hz - self.min_hz) / self.step_hz * (1.0 + 1e-12)).floor() as usize;
        (0..=n).map(|i| self.min_hz + i as f64 * self.step_hz).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Transition {
    shift: f64,
    weight: f64,
}

#[derive(Debug, Clone)]
struct ExcitedLevel {
    id: LevelId,
    gamma: f64,
    gamma_channel: f64,
    transitions: Vec<Transition>,
}

/// Everything needed to evaluate populations and scattering rates at any
/// detuning.
#[derive(Debug, Clone)]
pub struct SpectrumModel {
    gamma0: f64,
    saturation: f64,
    reflection: f64,
    levels: Vec<ExcitedLevel>,
}

impl SpectrumModel {
    pub fn new(
        fc: &FranckCondonMatrix,
        rates: &LevelRates,
        mixture: &InitialMixture,
        field: &FieldParams,
        gamma0_hz: f64,
    ) -> Result<Self> {
        field.validate()?;
        let cols = mixture
            .entries
            .iter()
            .map(|e| {
                fc.col_index(e.id).map(|c| (c, e.weight)).ok_or_else(|| {
                    Error::Consistency(format!("no Franck-Condon column for ground level {:?}", e.id))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let r = field.reflection_r;
        let mut levels = Vec::with_capacity(fc.rows.len());
        for (row, &id) in fc.rows.iter().enumerate() {
            let rate = rates
                .get(id)
                .ok_or_else(|| Error::Consistency(format!("no emission rate for excited level {id:?}")))?;
            let transitions = cols
                .iter()
                .map(|&(c, rho)| {
                    let f = fc.get(row, c);
                    // |F* − R F|² for F = u + iv
                    let w = f.re * f.re * (1.0 - r) * (1.0 - r) + f.im * f.im * (1.0 + r) * (1.0 + r);
                    Transition {
                        shift: fc.row_energies[row] - fc.col_energies[c],
                        weight: w * rho,
                    }
                })
                .collect();
            levels.push(ExcitedLevel {
                id,
                gamma: rate.gamma_hz,
                gamma_channel: rate.gamma_channel_hz,
                transitions,
            });
        }
        Ok(Self {
            gamma0: gamma0_hz,
            saturation: field.saturation_s,
            reflection: r,
            levels,
        })
    }

    pub fn level_ids(&self) -> Vec<LevelId> {
        self.levels.iter().map(|l| l.id).collect()
    }

    /// ρ_aa for every excited level at detuning `delta` (Hz).
    pub fn excited_populations(&self, delta: f64) -> Vec<f64> {
        self.levels.iter().map(|l| self.population(l, delta)).collect()
    }

    fn population(&self, l: &ExcitedLevel, delta: f64) -> f64 {
        let g0sq = self.gamma0 * self.gamma0;
        let g2 = l.gamma * l.gamma;
        let sum: f64 = l
            .transitions
            .iter()
            .map(|t| {
                let d = delta - t.shift;
                t.weight * g0sq / (g2 + 4.0 * d * d)
            })
            .sum();
        0.5 * self.saturation * sum
    }

    /// `Σ_a ρ_aa γ_a^(selected)` at `delta`.
    pub fn scattering_rate(&self, delta: f64, selector: RateSelector) -> f64 {
        self.levels
            .iter()
            .map(|l| {
                let g = match selector {
                    RateSelector::Total => l.gamma,
                    RateSelector::Channel => l.gamma_channel,
                    RateSelector::Radiation => l.gamma - l.gamma_channel,
                };
                self.population(l, delta) * g
            })
            .sum()
    }

    pub fn sweep(&self, grid: &DetuningGrid, selector: RateSelector) -> Result<SpectrumResult> {
        grid.validate()?;
        let delta = grid.points();
        let gamma: Vec<f64> = delta.par_iter().map(|&d| self.scattering_rate(d, selector)).collect();
        let mut result = SpectrumResult {
            delta_hz: delta,
            gamma_hz: gamma,
            selector,
            saturation_s: self.saturation,
            reflection_r: self.reflection,
            peak: None,
            fwhm_hz: None,
            asymmetry: None,
            warnings: Vec::new(),
        };
        result.analyze();
        Ok(result)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub delta_hz: f64,
    pub value_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub delta_hz: Vec<f64>,
    pub gamma_hz: Vec<f64>,
    pub selector: RateSelector,
    pub saturation_s: f64,
    pub reflection_r: f64,
    pub peak: Option<Peak>,
    pub fwhm_hz: Option<f64>,
    /// ∫Γ over δ < δ_peak − FWHM divided by ∫Γ over δ > δ_peak + FWHM.
    pub asymmetry: Option<f64>,
    pub warnings: Vec<String>,
}

impl SpectrumResult {
    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    fn analyze(&mut self) {
        let (x, y) = (self.delta_hz.clone(), self.gamma_hz.clone());
        let (x, y) = (x.as_slice(), y.as_slice());
        let n = y.len();
        let Some(imax) = (0..n).max_by(|&i, &j| y[i].total_cmp(&y[j])) else {
            return;
        };
        let ymax = y[imax];
        if !(ymax > 0.0) {
            self.warn("spectrum is identically zero".into());
            return;
        }
        for (end, v) in [("lower", y[0]), ("upper", y[n - 1])] {
            if v > 0.05 * ymax {
                self.warn(format!(
                    "Gamma at the {end} grid edge is {:.1}% of the peak; widen the detuning grid",
                    100.0 * v / ymax
                ));
            }
        }
        if imax == 0 || imax == n - 1 {
            self.warn("peak lies on the grid boundary; no peak or width extracted".into());
            return;
        }
        let peak = refine_peak(x, y, imax);
        let half = 0.5 * peak.value_hz;
        let left = (0..imax).rev().find(|&i| y[i] < half).map(|i| cross(x, y, i, i + 1, half));
        let right = (imax + 1..n).find(|&i| y[i] < half).map(|i| cross(x, y, i - 1, i, half));
        self.peak = Some(peak);
        match (left, right) {
            (Some(l), Some(r)) => {
                let w = r - l;
                self.fwhm_hz = Some(w);
                let lo = trapezoid(x, y, |d| d < peak.delta_hz - w);
                let hi = trapezoid(x, y, |d| d > peak.delta_hz + w);
                self.asymmetry = if hi > 0.0 { Some(lo / hi) } else { None };
            }
            _ => self.warn("half maximum not crossed on both sides; no width extracted".into()),
        }
    }
}

fn cross(x: &[f64], y: &[f64], i: usize, j: usize, level: f64) -> f64 {
    x[i] + (level - y[i]) * (x[j] - x[i]) / (y[j] - y[i])
}

fn trapezoid(x: &[f64], y: &[f64], keep: impl Fn(f64) -> bool) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .filter(|(xs, _)| keep(xs[0]) && keep(xs[1]))
        .map(|(xs, ys)| 0.5 * (ys[0] + ys[1]) * (xs[1] - xs[0]))
        .sum()
}

/// Maximum of the cubic through four samples around `i`.
fn refine_peak(x: &[f64], y: &[f64], i: usize) -> Peak {
    let n = x.len();
    let grid = Peak {
        delta_hz: x[i],
        value_hz: y[i],
    };
    if n < 4 {
        return grid;
    }
    let s = if i + 2 < n && (i < 2 || y[i + 1] >= y[i - 1]) { i - 1 } else { i - 2 };
    let s = s.min(n - 4);
    let xs = [x[s], x[s + 1], x[s + 2], x[s + 3]];
    let ys = [y[s], y[s + 1], y[s + 2], y[s + 3]];
    let eval = |t: f64| -> f64 {
        (0..4)
            .map(|j| {
                let mut l = ys[j];
                for m in 0..4 {
                    if m != j {
                        l *= (t - xs[m]) / (xs[j] - xs[m]);
                    }
                }
                l
            })
            .sum()
    };
    // golden-section on the bracket around the grid maximum
    let (mut a, mut b) = (x[i - 1], x[i + 1]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    for _ in 0..80 {
        if eval(c) > eval(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let t = 0.5 * (a + b);
    let v = eval(t);
    if v >= grid.value_hz {
        Peak {
            delta_hz: t,
            value_hz: v,
        }
    } else {
        grid
    }
}
