//! Bound and continuum translational eigenstates of `-K ψ'' + V ψ = E ψ`.
//!
//! Bound levels are isolated by bisection on the Sturm count of the outward
//! Numerov solution and refined by bisection/secant on the outward-inward
//! mismatch at the outer turning point. Continuum states are integrated
//! outward and scaled so that their asymptote is `sin(k x + δ)/sqrt(π K k)`,
//! the normalization to δ(E - E′) with E in Hz.

use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Lattice;
use crate::numerov::{count_sign_changes, Discretization, ShotFrame};
use crate::potential::StateLabel;
use crate::roots::{bisect_secant, RootOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Bound,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Unit,
    DeltaOfEnergy,
}

/// One translational eigenstate sampled on a slice of a lattice.
#[derive(Debug, Clone)]
pub struct TranslationalState {
    pub kind: StateKind,
    /// Node count (bound states only).
    pub nu: Option<usize>,
    /// Energy shift E/h, Hz.
    pub energy: f64,
    pub norm: Normalization,
    /// Lattice index of `psi[0]`.
    pub start: usize,
    pub psi: Vec<f64>,
    pub lattice: Arc<Lattice>,
    /// Outer classical turning point, nm (bound states).
    pub x_outer: Option<f64>,
    /// Asymptotic phase δ (free states).
    pub phase: Option<f64>,
}

impl TranslationalState {
    /// Lattice index one past the last sample.
    pub fn end(&self) -> usize {
        self.start + self.psi.len()
    }

    /// ψ at lattice node `i` (zero outside the stored support).
    pub fn at(&self, i: usize) -> f64 {
        if i < self.start || i >= self.end() {
            0.0
        } else {
            self.psi[i - self.start]
        }
    }

    pub fn positions(&self) -> &[f64] {
        &self.lattice.nodes()[self.start..self.end()]
    }

    /// ∫ ψ² dx.
    pub fn norm_squared(&self) -> f64 {
        self.lattice
            .integrate(self.start, self.end() - 1, |i| self.at(i) * self.at(i))
    }

    /// ∫ f(x) ψ² dx.
    pub fn expectation(&self, f: impl Fn(f64) -> f64) -> f64 {
        let lat = &self.lattice;
        lat.integrate(self.start, self.end() - 1, |i| {
            let p = self.at(i);
            f(lat.x(i)) * p * p
        })
    }

    pub fn node_count(&self) -> usize {
        count_sign_changes(&self.psi)
    }
}

/// Bound levels of one potential (contiguous in ν) plus optional continuum
/// states with their energy-quadrature weights.
#[derive(Debug, Clone)]
pub struct LevelSet {
    pub label: Option<StateLabel>,
    pub bound: Vec<TranslationalState>,
    pub free: Vec<TranslationalState>,
    /// Quadrature weight (Hz) attached to each free state.
    pub free_weights: Vec<f64>,
}

impl LevelSet {
    pub fn bound_only(label: Option<StateLabel>, bound: Vec<TranslationalState>) -> Self {
        Self {
            label,
            bound,
            free: Vec::new(),
            free_weights: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.bound.is_empty() && self.free.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bound.len() + self.free.len()
    }

    /// Bound state with node count `nu`.
    pub fn level(&self, nu: usize) -> Option<&TranslationalState> {
        self.bound.iter().find(|s| s.nu == Some(nu))
    }

    /// All states, bound first.
    pub fn states(&self) -> impl Iterator<Item = &TranslationalState> {
        self.bound.iter().chain(self.free.iter())
    }
}

/// Shooting solver for one discretized potential.
#[derive(Debug)]
pub struct Solver {
    disc: Discretization,
    label: Option<StateLabel>,
    /// Sturm counts evaluated so far, kept to tighten later brackets.
    counts: Mutex<Vec<(f64, usize)>>,
    capacity: OnceLock<usize>,
}

/// Energy convergence: absolute floor (Hz) plus relative part.
const ENERGY_ABS_TOL: f64 = 1e-2;
const ENERGY_REL_TOL: f64 = 1e-12;

impl Solver {
    pub fn new(disc: Discretization, label: Option<StateLabel>) -> Self {
        Self {
            disc,
            label,
            counts: Mutex::new(Vec::new()),
            capacity: OnceLock::new(),
        }
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn label(&self) -> Option<StateLabel> {
        self.label
    }

    fn buffer(&self) -> Vec<f64> {
        vec![0.0; self.disc.len()]
    }

    /// Number of bound levels below threshold.
    pub fn capacity(&self) -> usize {
        *self.capacity.get_or_init(|| {
            let mut psi = self.buffer();
            self.disc.threshold_count(&mut psi)
        })
    }

    fn count(&self, e: f64, psi: &mut [f64]) -> usize {
        let n = self.disc.count_below(e, psi);
        let mut table = self.counts.lock().unwrap();
        let pos = table.partition_point(|&(x, _)| x < e);
        table.insert(pos, (e, n));
        n
    }

    /// Tightest recorded bracket with count(lo) ≤ ν < count(hi).
    fn recorded_bracket(&self, nu: usize, lo: f64, hi: f64) -> (f64, f64) {
        let table = self.counts.lock().unwrap();
        let mut lo = lo;
        let mut hi = hi;
        for &(e, n) in table.iter() {
            if n <= nu && e > lo {
                lo = e;
            }
            if n > nu && e < hi {
                hi = e;
            }
        }
        (lo, hi)
    }

    /// Solves the bound level with `nu` nodes.
    pub fn solve_level(&self, nu: usize) -> Result<TranslationalState> {
        let threshold = self.disc.threshold();
        let capacity = self.capacity();
        if nu >= capacity {
            return Err(Error::Range {
                requested: nu,
                capacity,
            });
        }
        let mut psi = self.buffer();
        let (mut lo, mut hi) = self.recorded_bracket(nu, self.disc.v_min(), threshold);
        let floor = ENERGY_ABS_TOL.min(ENERGY_REL_TOL * (threshold - self.disc.v_min()));
        let tol = |e: f64| floor + ENERGY_REL_TOL * e.abs();

        // isolate the level by Sturm count, then refine on the mismatch
        let mut iterations = 0;
        loop {
            iterations += 1;
            if iterations > 400 {
                return Err(Error::Numerical(format!(
                    "level {nu}: bracket [{lo:e}, {hi:e}] Hz did not converge"
                )));
            }
            let width_ok = hi - lo < 1e-3 * (hi.abs().max(lo.abs()));
            if width_ok || hi - lo <= tol(hi) {
                if let Some(e) = self.refine(lo, hi, &tol)? {
                    return self.assemble(nu, e);
                }
            }
            if hi - lo <= tol(hi) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.count(mid, &mut psi) <= nu {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.assemble(nu, 0.5 * (lo + hi))
    }

    /// Secant refinement on the matching mismatch; `None` if the bracket
    /// still contains a pole of the mismatch.
    fn refine(&self, lo: f64, hi: f64, tol: &dyn Fn(f64) -> f64) -> Result<Option<f64>> {
        let frame = self.disc.frame(0.5 * (lo + hi))?;
        let mut out = self.buffer();
        let mut inw = self.buffer();
        let f_lo = self.disc.mismatch(lo, frame, &mut out, &mut inw);
        let f_hi = self.disc.mismatch(hi, frame, &mut out, &mut inw);
        if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
            return Ok(None);
        }
        // Mismatch decreases through a level; a pole instead shows as a rise.
        if f_lo < f_hi {
            return Ok(None);
        }
        let opts = RootOptions {
            x_tol: tol(hi),
            rel_tol: 0.0,
            max_iter: 200,
        };
        let e = bisect_secant(|e| self.disc.mismatch(e, frame, &mut out, &mut inw), lo, hi, opts)?;
        Ok(Some(e))
    }

    /// Builds the unit-normalized wavefunction at energy `e`.
    fn assemble(&self, nu: usize, e: f64) -> Result<TranslationalState> {
        let frame = self.disc.frame(e)?;
        let ShotFrame { matching: m, end } = frame;
        let mut out = self.buffer();
        let mut inw = self.buffer();
        let (first, _) = self.disc.outward(e, m, &mut out);
        self.disc.inward(e, end, m, &mut inw);
        let scale = out[m] / inw[m];
        if !scale.is_finite() || scale == 0.0 {
            return Err(Error::Numerical(format!(
                "level {nu}: degenerate match at E = {e:e} Hz"
            )));
        }
        let start = self.disc.start();
        let mut psi = Vec::with_capacity(end + 1 - start);
        for i in start..=end {
            let p = if i < first {
                0.0
            } else if i <= m {
                out[i]
            } else {
                inw[i] * scale
            };
            psi.push(p);
        }
        let peak = psi.iter().fold(0.0f64, |a, p| a.max(p.abs()));
        psi.iter_mut().for_each(|p| *p /= peak);
        let lattice = self.disc.lattice().clone();
        let mut state = TranslationalState {
            kind: StateKind::Bound,
            nu: Some(nu),
            energy: e,
            norm: Normalization::Unit,
            start,
            psi,
            lattice,
            x_outer: Some(self.disc.lattice().x(m)),
            phase: None,
        };
        let n2 = state.norm_squared();
        let sign = if state.psi[m - start] < 0.0 { -1.0 } else { 1.0 };
        let s = sign / n2.sqrt();
        state.psi.iter_mut().for_each(|p| *p *= s);
        let nodes = state.node_count();
        if nodes != nu {
            return Err(Error::Numerical(format!(
                "level {nu}: assembled state at E = {e:e} Hz has {nodes} nodes"
            )));
        }
        Ok(state)
    }

    /// Solves every level in `lo..=hi`, in parallel.
    pub fn solve_range(&self, lo: usize, hi: usize) -> Result<LevelSet> {
        if hi < lo {
            return Err(Error::Parameter(format!("empty level range {lo}..={hi}")));
        }
        let capacity = self.capacity();
        if hi >= capacity {
            return Err(Error::Range {
                requested: hi,
                capacity,
            });
        }
        // seed the count table with a coarse energy scan so the per-level
        // searches start from tight brackets
        self.seed_counts(hi + 2 - lo);
        let states = (lo..=hi)
            .into_par_iter()
            .map(|nu| self.solve_level(nu))
            .collect::<Result<Vec<_>>>()?;
        Ok(LevelSet::bound_only(self.label, states))
    }

    fn seed_counts(&self, samples: usize) {
        let lo = self.disc.v_min();
        let hi = self.disc.threshold();
        if self.counts.lock().unwrap().len() >= samples {
            return;
        }
        let mut psi = self.buffer();
        // uniform in |E|^(1/3) crowds samples toward threshold where the
        // vdW levels pile up
        let n = samples.clamp(8, 512);
        for j in 1..n {
            let t = j as f64 / n as f64;
            let e = if lo < 0.0 && hi <= 0.0 {
                -((-lo).cbrt() * (1.0 - t) + (-hi).max(0.0).cbrt() * t).powi(3)
            } else {
                lo + (hi - lo) * t
            };
            self.count(e, &mut psi);
        }
    }

    /// Continuum state at energy `e` > threshold, normalized to δ(E - E′).
    ///
    /// The outer end defaults to three local wavelengths beyond the point
    /// where |V| < 10⁻³ E; the amplitude is fitted on the last two
    /// wavelengths against WKB-corrected sines.
    pub fn solve_free(&self, e: f64, x_max: Option<f64>) -> Result<TranslationalState> {
        if !(e > 0.0) {
            return Err(Error::Domain(format!("free-state energy must be positive, got {e:e} Hz")));
        }
        let disc = &self.disc;
        let lat = disc.lattice();
        let kin = disc.kinetic();
        let k_e = (e / kin).sqrt();
        let lambda = 2.0 * std::f64::consts::PI / k_e;
        let i_min = disc.min_index();
        let settled = match (i_min..disc.len()).rev().find(|&i| disc.v(i).abs() >= 1e-3 * e) {
            None => i_min,
            Some(i) if i + 1 < disc.len() => i + 1,
            Some(_) => {
                return Err(Error::Numerical(format!(
                    "lattice too short for a free state at {e:e} Hz"
                )))
            }
        };
        let needed = lat.x(settled) + 3.0 * lambda;
        let x_end = match x_max {
            Some(x) if x < needed => {
                return Err(Error::Numerical(format!(
                    "x_max = {x} nm too small for amplitude extraction at {e:e} Hz (need {needed:.1} nm)"
                )))
            }
            Some(x) => x,
            None => needed,
        };
        let end = lat.index_at_or_above(x_end);
        if end >= lat.len() {
            return Err(Error::Numerical(format!(
                "lattice ends at {} nm, free state at {e:e} Hz needs {x_end:.1} nm",
                lat.x(lat.len() - 1)
            )));
        }
        let fit_start = lat.index_at_or_above(lat.x(end) - 2.0 * lambda);
        let max_step = (fit_start..end).map(|i| lat.step_after(i)).fold(0.0, f64::max);
        if max_step * k_e > 0.5 {
            return Err(Error::Numerical(format!(
                "lattice step {max_step} nm too coarse for a free state at {e:e} Hz; raise energy_ceiling_hz"
            )));
        }

        let mut buf = self.buffer();
        let (first, _) = disc.outward(e, end, &mut buf);
        let (amp, theta, phi_end) = wkb_fit(disc, e, &buf, fit_start, end);
        let target = 1.0 / (std::f64::consts::PI * kin * k_e).sqrt();
        let scale = target * k_e.sqrt() / amp;
        let start = disc.start();
        let psi: Vec<f64> = (start..=end)
            .map(|i| if i < first { 0.0 } else { buf[i] * scale })
            .collect();
        let delta = wrap_phase(phi_end + theta - k_e * lat.x(end));
        Ok(TranslationalState {
            kind: StateKind::Free,
            nu: None,
            energy: e,
            norm: Normalization::DeltaOfEnergy,
            start,
            psi,
            lattice: lat.clone(),
            x_outer: None,
            phase: Some(delta),
        })
    }
}

/// Least-squares fit of ψ on `[a, b]` to `c q^{-1/2} sin(Φ + θ)` with
/// `q = sqrt((E - V)/K)` and Φ the accumulated WKB phase. Returns
/// `(c, θ, Φ(b))`, with Φ measured from the lattice origin by k_E·x(a).
fn wkb_fit(disc: &Discretization, e: f64, psi: &[f64], a: usize, b: usize) -> (f64, f64, f64) {
    let lat = disc.lattice();
    let kin = disc.kinetic();
    let q = |i: usize| ((e - disc.v(i)) / kin).sqrt();
    let k_e = (e / kin).sqrt();
    let mut phi = k_e * lat.x(a);
    let (mut suu, mut svv, mut suv, mut spu, mut spv) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in a..=b {
        if i > a {
            phi += 0.5 * (q(i - 1) + q(i)) * (lat.x(i) - lat.x(i - 1));
        }
        let w = 1.0 / q(i).sqrt();
        let u = w * phi.sin();
        let v = w * phi.cos();
        suu += u * u;
        svv += v * v;
        suv += u * v;
        spu += psi[i] * u;
        spv += psi[i] * v;
    }
    let det = suu * svv - suv * suv;
    let c1 = (spu * svv - spv * suv) / det;
    let c2 = (spv * suu - spu * suv) / det;
    (c1.hypot(c2), c2.atan2(c1), phi)
}

fn wrap_phase(p: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = p.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;
    use approx::assert_relative_eq;

    /// V = c (x - x0)², walled far inside the left forbidden region.
    struct Oscillator {
        c: f64,
        x0: f64,
    }
    impl Potential for Oscillator {
        fn value(&self, x: f64) -> f64 {
            self.c * (x - self.x0) * (x - self.x0)
        }
        fn wall(&self) -> f64 {
            0.0
        }
        fn magnitude_bound(&self, _x: f64) -> f64 {
            self.c * self.x0 * self.x0
        }
    }

    struct Flat;
    impl Potential for Flat {
        fn value(&self, _x: f64) -> f64 {
            0.0
        }
        fn wall(&self) -> f64 {
            0.0
        }
        fn magnitude_bound(&self, _x: f64) -> f64 {
            0.0
        }
    }

    /// Square well of depth `depth` on (0, width), flat zero beyond.
    struct Square {
        depth: f64,
        width: f64,
    }
    impl Potential for Square {
        fn value(&self, x: f64) -> f64 {
            if x < self.width {
                -self.depth
            } else {
                0.0
            }
        }
        fn wall(&self) -> f64 {
            0.0
        }
        fn magnitude_bound(&self, _x: f64) -> f64 {
            self.depth
        }
    }

    fn oscillator_solver() -> (Solver, f64) {
        // K = 1, c = 1 → E_n = 2n + 1
        let lat = Arc::new(Lattice::uniform(0.0, 2e-3, 10_000).unwrap());
        let pot = Oscillator { c: 1.0, x0: 10.0 };
        let disc = Discretization::new(&pot, lat, 1.0).unwrap();
        (Solver::new(disc, None), 2.0)
    }

    #[test]
    fn oscillator_levels_match_analytic() {
        let (solver, f0) = oscillator_solver();
        let set = solver.solve_range(0, 8).unwrap();
        for s in &set.bound {
            let n = s.nu.unwrap() as f64;
            assert_relative_eq!(s.energy, (n + 0.5) * f0, max_relative = 1e-6);
            assert_relative_eq!(s.norm_squared(), 1.0, epsilon = 1e-10);
            assert_eq!(s.node_count(), s.nu.unwrap());
        }
    }

    #[test]
    fn oscillator_states_are_orthonormal() {
        let (solver, _) = oscillator_solver();
        let set = solver.solve_range(0, 5).unwrap();
        for a in &set.bound {
            for b in &set.bound {
                let end = a.end().min(b.end()) - 1;
                let ov: f64 = a.lattice.integrate(a.start.max(b.start), end, |i| a.at(i) * b.at(i));
                let expect = if a.nu == b.nu { 1.0 } else { 0.0 };
                assert!((ov - expect).abs() < 1e-6, "{:?} {:?} {ov}", a.nu, b.nu);
            }
        }
    }

    #[test]
    fn level_beyond_capacity_is_a_range_error() {
        let lat = Arc::new(Lattice::uniform(0.0, 1e-3, 20_000).unwrap());
        let pot = Square {
            depth: 30.0,
            width: 1.0,
        };
        let solver = Solver::new(Discretization::new(&pot, lat, 1.0).unwrap(), None);
        let cap = solver.capacity();
        assert!(matches!(solver.solve_level(cap), Err(Error::Range { .. })));
    }

    #[test]
    fn square_well_capacity_matches_analytic_count() {
        // odd-parity states of a well of depth D and half-width a with a
        // hard wall: count = floor(a sqrt(D/K)/π + 1/2)
        for (depth, width) in [(30.0, 1.0), (150.0, 1.0), (1000.0, 0.5), (5.0, 2.0)] {
            let lat = Arc::new(Lattice::uniform(0.0, 1e-3, 40_000).unwrap());
            let pot = Square { depth, width };
            let solver = Solver::new(Discretization::new(&pot, lat, 1.0).unwrap(), None);
            let z: f64 = width * f64::sqrt(depth);
            let expected = (z / std::f64::consts::PI + 0.5).floor() as usize;
            assert_eq!(solver.capacity(), expected, "D = {depth}, a = {width}");
        }
    }

    #[test]
    fn free_particle_has_exact_normalization() {
        let lat = Arc::new(Lattice::uniform(0.0, 5e-3, 40_000).unwrap());
        let solver = Solver::new(Discretization::new(&Flat, lat, 1.0).unwrap(), None);
        for e in [0.5, 2.0, 9.0] {
            let s = solver.solve_free(e, None).unwrap();
            let k = f64::sqrt(e);
            let n = 1.0 / (std::f64::consts::PI * k).sqrt();
            // compare against N sin(kx) near the far end
            let phase = s.phase.unwrap();
            assert!(phase.abs() < 1e-4 || (phase.abs() - std::f64::consts::PI).abs() < 1e-4);
            let sign = phase.cos().signum();
            let i = s.end() - 7;
            let x = s.lattice.x(i);
            assert_relative_eq!(s.at(i), sign * n * (k * x).sin(), epsilon = 2e-6 * n);
        }
    }

    #[test]
    fn free_state_rejects_short_box() {
        let lat = Arc::new(Lattice::uniform(0.0, 5e-3, 4_000).unwrap());
        let solver = Solver::new(Discretization::new(&Flat, lat, 1.0).unwrap(), None);
        assert!(solver.solve_free(1.0, Some(1.0)).is_err());
        assert!(solver.solve_free(-1.0, None).is_err());
    }

    #[test]
    fn free_states_form_a_nascent_delta() {
        // ∫ dE′ ⟨ψ_E|ψ_E′⟩ over a band much wider than the box resolution → 1
        let lat = Arc::new(Lattice::uniform(0.0, 5e-3, 40_000).unwrap());
        let pot = Square { depth: 5.0, width: 2.0 };
        let solver = Solver::new(Discretization::new(&pot, lat, 1.0).unwrap(), None);
        let (e, w, l) = (2.0, 0.5, 150.0);
        let a = solver.solve_free(e, Some(l)).unwrap();
        let n = 800;
        let h = 2.0 * w / n as f64;
        let total: f64 = (0..=n)
            .map(|j| {
                let b = solver.solve_free(e - w + j as f64 * h, Some(l)).unwrap();
                let end = a.end().min(b.end()) - 1;
                let ov = a.lattice.integrate(a.start.max(b.start), end, |i| a.at(i) * b.at(i));
                let c = if j == 0 || j == n { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 };
                c * ov
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert!((total - 1.0).abs() < 0.02, "closure integral {total}");
    }

    #[test]
    fn kinetic_energy_is_positive() {
        let (solver, _) = oscillator_solver();
        for s in solver.solve_range(0, 6).unwrap().bound {
            let v = s.expectation(|x| (x - 10.0) * (x - 10.0));
            assert!(s.energy - v > 0.0);
            // equipartition for the oscillator
            assert_relative_eq!(v, 0.5 * s.energy, max_relative = 1e-5);
        }
    }
}
