//! Reduced density-matrix dynamics for a weakly driven, truncated basis.
//!
//! Ground populations are frozen and ground coherences are not generated.
//! In the frame where excited level a sits at `E_a − δ` and ground level b
//! at `E_b`, the drive is time independent:
//!
//! ```text
//! σ̇_ab  = (iδ_ab − γ_a/2) σ_ab + (i/2) Ω_ab ρ_bb − (i/2) Σ_a′ σ_aa′ Ω_a′b
//! σ̇_aa′ = −i(E_a − E_a′) σ_aa′ + (i/2) Σ_b (Ω_ab σ*_a′b − Ω*_a′b σ_ab)
//!          − (γ_a + γ_a′)/2 σ_aa′
//! ```
//!
//! with `δ_ab = δ − (E_a − E_b)`, `Ω_ab = Ω (F*_ab − R F_ab)` and
//! `|Ω|² = s γ₀²/2`. Populations σ_aa equal ρ_aa. Frequencies are scaled by
//! γ₀ internally so that time runs in units of 1/γ₀.

use num_complex::Complex64;
use ode_solvers::{DVector, Dopri5, OutputType, System};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Truncated level structure with its drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSystem {
    /// Excited energies E_a, Hz.
    pub excited_energies: Vec<f64>,
    /// Excited decay rates γ_a, Hz.
    pub gammas: Vec<f64>,
    /// Ground energies E_b, Hz.
    pub ground_energies: Vec<f64>,
    /// Frozen ground populations ρ_bb.
    pub ground_populations: Vec<f64>,
    /// Overlaps F_ab(k), row-major (excited × ground).
    pub overlaps: Vec<Complex64>,
    pub gamma0: f64,
    pub saturation_s: f64,
    pub reflection_r: f64,
    /// Probe detuning δ, Hz.
    pub detuning: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Give up after this time, in units of 1/γ₀.
    pub t_max: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-14,
            t_max: 400.0,
        }
    }
}

impl ReducedSystem {
    pub fn validate(&self) -> Result<()> {
        let (na, nb) = (self.excited_energies.len(), self.ground_energies.len());
        if na == 0 || nb == 0 {
            return param("reduced system needs at least one excited and one ground level");
        }
        if self.gammas.len() != na || self.ground_populations.len() != nb || self.overlaps.len() != na * nb {
            return param("reduced system arrays have inconsistent lengths");
        }
        if self.gammas.iter().any(|g| !(*g > 0.0)) || !(self.gamma0 > 0.0) {
            return param("decay rates must be positive");
        }
        if self.ground_populations.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return param("ground populations must lie in [0, 1]");
        }
        if !(0.0..=1e-2).contains(&self.saturation_s) {
            return param(format!(
                "saturation parameter {} is outside the weak-field range [0, 1e-2]",
                self.saturation_s
            ));
        }
        if !(0.0..1.0).contains(&self.reflection_r) {
            return param(format!("reflection coefficient {} outside [0, 1)", self.reflection_r));
        }
        Ok(())
    }

    fn na(&self) -> usize {
        self.excited_energies.len()
    }

    fn nb(&self) -> usize {
        self.ground_energies.len()
    }

    /// Ω_ab in units of γ₀.
    fn rabi(&self) -> Vec<Complex64> {
        let omega = (self.saturation_s / 2.0).sqrt();
        let r = self.reflection_r;
        self.overlaps.iter().map(|f| (f.conj() - f * r) * omega).collect()
    }

    /// Adiabatic weak-field populations ρ_aa.
    pub fn adiabatic_populations(&self) -> Vec<f64> {
        let nb = self.nb();
        let rabi = self.rabi();
        (0..self.na())
            .map(|a| {
                let ga = self.gammas[a] / self.gamma0;
                (0..nb)
                    .map(|b| {
                        let d = (self.detuning - (self.excited_energies[a] - self.ground_energies[b])) / self.gamma0;
                        rabi[a * nb + b].norm_sqr() * self.ground_populations[b] / (ga * ga + 4.0 * d * d)
                    })
                    .sum()
            })
            .collect()
    }

    /// Evolves from the ground mixture (no excitation, no coherence) to time
    /// `t` (units of 1/γ₀) and returns the state.
    pub fn integrate(&self, t: f64, opts: &IntegrationOptions) -> Result<ReducedState> {
        self.validate()?;
        let mut state = ReducedState::empty(self.na(), self.nb());
        self.advance(&mut state, t, opts)?;
        Ok(state)
    }

    fn advance(&self, state: &mut ReducedState, dt: f64, opts: &IntegrationOptions) -> Result<()> {
        let rhs = Rhs::new(self);
        let y0 = DVector::from_vec(state.pack());
        let t_end = state.time + dt;
        let mut solver = Dopri5::new(rhs, state.time, t_end, dt, y0, opts.rtol, opts.atol);
        solver.set_output(OutputType::Sparse);
        solver
            .integrate()
            .map_err(|e| Error::Numerical(format!("density-matrix integration failed: {e}")))?;
        let reached = solver.x_out().last().copied().unwrap_or(state.time);
        if (reached - t_end).abs() > 1e-9 * t_end.abs().max(1.0) {
            return Err(Error::Numerical(format!("integrator stopped at t = {reached}, wanted {t_end}")));
        }
        let y = solver
            .y_out()
            .last()
            .ok_or_else(|| Error::Numerical("integrator produced no output".into()))?;
        state.unpack(y.as_slice());
        state.time = t_end;
        Ok(())
    }

    /// Integrates until every ρ_aa drifts by less than `10⁻⁴` relative over
    /// one 1/γ₀, then compares with the adiabatic formula.
    pub fn compare_adiabatic(&self, opts: &IntegrationOptions) -> Result<AdiabaticComparison> {
        self.validate()?;
        let expected = self.adiabatic_populations();
        let mut state = ReducedState::empty(self.na(), self.nb());
        let mut last = state.populations();
        let floor = expected.iter().fold(0.0f64, |a, &p| a.max(p)) * 1e-8;
        while state.time < opts.t_max {
            self.advance(&mut state, 1.0, opts)?;
            let now = state.populations();
            let settled = now
                .iter()
                .zip(&last)
                .all(|(n, l)| (n - l).abs() <= 1e-4 * n.abs().max(floor));
            last = now;
            if settled && state.time >= 2.0 {
                let rel_error = last
                    .iter()
                    .zip(&expected)
                    .map(|(o, e)| if *e > 0.0 { (o - e).abs() / e } else { o.abs() })
                    .collect();
                return Ok(AdiabaticComparison {
                    time: state.time,
                    ode: last,
                    adiabatic: expected,
                    rel_error,
                    hermiticity_defect: state.hermiticity_defect(),
                });
            }
        }
        Err(Error::Numerical(format!(
            "no quasi-steady plateau within t = {} / gamma0",
            opts.t_max
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticComparison {
    /// Plateau time, units of 1/γ₀.
    pub time: f64,
    pub ode: Vec<f64>,
    pub adiabatic: Vec<f64>,
    pub rel_error: Vec<f64>,
    pub hermiticity_defect: f64,
}

/// Excited block σ_aa′ (full, row-major) and optical coherences σ_ab.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub time: f64,
    na: usize,
    nb: usize,
    pub excited: Vec<Complex64>,
    pub coherences: Vec<Complex64>,
}

impl ReducedState {
    fn empty(na: usize, nb: usize) -> Self {
        Self {
            time: 0.0,
            na,
            nb,
            excited: vec![Complex64::new(0.0, 0.0); na * na],
            coherences: vec![Complex64::new(0.0, 0.0); na * nb],
        }
    }

    /// Excited-state with population `p[a]` and nothing else.
    pub fn with_populations(p: &[f64], nb: usize) -> Self {
        let na = p.len();
        let mut s = Self::empty(na, nb);
        for (a, &v) in p.iter().enumerate() {
            s.excited[a * na + a] = Complex64::new(v, 0.0);
        }
        s
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.na).map(|a| self.excited[a * self.na + a].re).collect()
    }

    /// max |σ_aa′ − σ*_a′a|.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.na;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                worst = worst.max((self.excited[a * n + b] - self.excited[b * n + a].conj()).norm());
            }
        }
        worst
    }

    fn pack(&self) -> Vec<f64> {
        self.excited
            .iter()
            .chain(&self.coherences)
            .flat_map(|z| [z.re, z.im])
            .collect()
    }

    fn unpack(&mut self, y: &[f64]) {
        let n = self.excited.len();
        for (i, z) in self.excited.iter_mut().chain(self.coherences.iter_mut()).enumerate() {
            *z = Complex64::new(y[2 * i], y[2 * i + 1]);
        }
        debug_assert_eq!(2 * (n + self.coherences.len()), y.len());
    }
}

struct Rhs {
    na: usize,
    nb: usize,
    /// E_a − E_a′ in units of γ₀, row-major.
    splitting: Vec<f64>,
    /// δ_ab in units of γ₀.
    detuning: Vec<f64>,
    gamma: Vec<f64>,
    rabi: Vec<Complex64>,
    rho_b: Vec<f64>,
}

impl Rhs {
    fn new(sys: &ReducedSystem) -> Self {
        let (na, nb) = (sys.na(), sys.nb());
        let g0 = sys.gamma0;
        let ea = &sys.excited_energies;
        Self {
            na,
            nb,
            splitting: (0..na * na).map(|i| (ea[i / na] - ea[i % na]) / g0).collect(),
            detuning: (0..na * nb)
                .map(|i| (sys.detuning - (ea[i / nb] - sys.ground_energies[i % nb])) / g0)
                .collect(),
            gamma: sys.gammas.iter().map(|g| g / g0).collect(),
            rabi: sys.rabi(),
            rho_b: sys.ground_populations.clone(),
        }
    }
}

impl System<f64, DVector<f64>> for Rhs {
    fn system(&self, _t: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let (na, nb) = (self.na, self.nb);
        let c = |k: usize| Complex64::new(y[2 * k], y[2 * k + 1]);
        let exc = |a: usize, a2: usize| c(a * na + a2);
        let coh = |a: usize, b: usize| c(na * na + a * nb + b);
        let i = Complex64::new(0.0, 1.0);
        let mut put = |k: usize, z: Complex64| {
            dy[2 * k] = z.re;
            dy[2 * k + 1] = z.im;
        };
        for a in 0..na {
            for a2 in 0..na {
                let mut drive = Complex64::new(0.0, 0.0);
                for b in 0..nb {
                    drive += self.rabi[a * nb + b] * coh(a2, b).conj() - self.rabi[a2 * nb + b].conj() * coh(a, b);
                }
                let z = -i * self.splitting[a * na + a2] * exc(a, a2) + 0.5 * i * drive
                    - 0.5 * (self.gamma[a] + self.gamma[a2]) * exc(a, a2);
                put(a * na + a2, z);
            }
        }
        for a in 0..na {
            for b in 0..nb {
                let mut back = Complex64::new(0.0, 0.0);
                for a2 in 0..na {
                    back += exc(a, a2) * self.rabi[a2 * nb + b];
                }
                let z = (i * self.detuning[a * nb + b] - 0.5 * self.gamma[a]) * coh(a, b)
                    + 0.5 * i * self.rabi[a * nb + b] * self.rho_b[b]
                    - 0.5 * i * back;
                put(na * na + a * nb + b, z);
            }
        }
    }
}

/// Free decay of a prepared excited state, for checking the damping terms.
pub fn free_decay(sys: &ReducedSystem, start: &ReducedState, t: f64, opts: &IntegrationOptions) -> Result<ReducedState> {
    let mut undriven = sys.clone();
    undriven.saturation_s = 0.0;
    undriven.validate()?;
    let mut s = start.clone();
    undriven.advance(&mut s, t, opts)?;
    Ok(s)
}

/// Two ground and two excited levels with overlaps typical of neighbouring
/// deep levels; used by the adiabatic check.
pub fn toy_two_by_two(saturation_s: f64, detuning: f64) -> ReducedSystem {
    ReducedSystem {
        excited_energies: vec![-132.84e6, -113.1e6],
        gammas: vec![6.38e6, 6.27e6],
        ground_energies: vec![-54.39e6, -42.96e6],
        ground_populations: vec![0.5, 0.5],
        overlaps: vec![
            Complex64::new(0.53, 0.08),
            Complex64::new(-0.21, 0.05),
            Complex64::new(0.31, -0.04),
            Complex64::new(0.47, 0.11),
        ],
        gamma0: 5.25e6,
        saturation_s,
        reflection_r: 0.1845,
        detuning,
    }
}
