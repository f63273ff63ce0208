//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use surfspec::cache::StateCache;
use surfspec::dynamics::{toy_two_by_two, IntegrationOptions};
use surfspec::eigensolver::{LevelSet, Solver};
use surfspec::franck_condon::{build_matrix, LevelId};
use surfspec::grid::{GridPolicy, Lattice};
use surfspec::model::{reflection_coefficient, AtomParams, FieldParams};
use surfspec::numerov::Discretization;
use surfspec::potential::{centrifugal_radius, Potential, StateLabel};
use surfspec::rates::{level_rates, LevelRates, RateProfile};
use surfspec::spectrum::{DetuningGrid, InitialMixture, RateSelector, SpectrumModel, SpectrumResult};
use surfspec::system::AtomSystem;
use surfspec_validation::{bound_to_bound, excited_levels, free_to_bound, BOUND_MIXTURE};

const MHZ: f64 = 1e6;

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, id: &str, ok: bool, detail: String) {
        if !ok {
            self.failures += 1;
        }
        println!("{} [{id}] {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn peak_fwhm(r: &SpectrumResult) -> (f64, f64) {
    (
        r.peak.map_or(f64::NAN, |p| p.delta_hz / MHZ),
        r.fwhm_hz.map_or(f64::NAN, |w| w / MHZ),
    )
}

fn depths(rep: &mut Report, sys: &AtomSystem) {
    let t = Instant::now();
    let (_, vg) = sys.potential(StateLabel::Ground).well_minimum();
    let (_, ve) = sys.potential(StateLabel::Excited).well_minimum();
    let (vg, ve) = (vg / 1e12, ve / 1e12);
    let dt = t.elapsed();
    rep.check(
        "1",
        within(vg, -159.6, 0.01 * 159.6) && within(ve, -316.0, 0.01 * 316.0) && dt.as_secs_f64() < 1.0,
        format!("well depths V_g,min = {vg:.2} THz (target -159.6 ± 1%), V_e,min = {ve:.2} THz (target -316 ± 1%), {:.3} s", secs(dt)),
    );
}

fn centrifugal_and_reflection(rep: &mut Report, atom: &AtomParams) {
    let t = Instant::now();
    let rc = centrifugal_radius(atom.mass_amu, atom.ground.c3(), 10).unwrap();
    let r = reflection_coefficient(1.4525).unwrap();
    let dt = t.elapsed();
    rep.check(
        "2",
        within(rc, 411.0, 1.0) && within(r, 0.18, 0.01) && secs(dt) < 1.0,
        format!("r_c(l_z = 10) = {rc:.2} nm (target 411 ± 1), R(1.4525) = {r:.4} (target 0.18 ± 0.01)"),
    );
}

/// Level within ±2 of `nu` whose energy is closest to `target`.
fn nearest(set: &LevelSet, nu: usize, target: f64) -> (usize, f64) {
    (nu - 2..=nu + 2)
        .filter_map(|n| set.level(n).map(|s| (n, s.energy)))
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .unwrap()
}

fn levels(rep: &mut Report, sys: &AtomSystem) -> (LevelSet, LevelSet) {
    let dir = tempfile::tempdir().unwrap();
    let cache = StateCache::open(dir.path()).unwrap();
    let t = Instant::now();
    let ground = cache.bound(sys, StateLabel::Ground, 260, 300).unwrap();
    let excited = cache.bound(sys, StateLabel::Excited, 380, 430).unwrap();
    let cold = t.elapsed();
    let t = Instant::now();
    cache.bound(sys, StateLabel::Ground, 260, 300).unwrap();
    cache.bound(sys, StateLabel::Excited, 380, 430).unwrap();
    let warm = t.elapsed();

    let mut ok = secs(cold) < 600.0;
    let mut parts = Vec::new();
    let mut found = |set: &LevelSet, nu: usize, target: f64| {
        let (n, e) = nearest(set, nu, target * MHZ);
        let good = within(e / MHZ, target, 0.03 * target.abs());
        ok &= good;
        parts.push(format!("{target} MHz → ν = {n}, {:.3} MHz", e / MHZ));
        e / MHZ
    };
    let eb = found(&ground, 285, -54.39);
    let ea = found(&excited, 400, -132.84);
    let ef = found(&excited, 415, -6.56);
    rep.check(
        "3a",
        ok,
        format!(
            "bound levels within ±3% at ν ± 2: {}; sweeps cold {:.2} s, cached {:.2} s (limit 600 s)",
            parts.join("; "),
            secs(cold),
            secs(warm)
        ),
    );
    let bb = ea - eb;
    let fb = ef - 4.25;
    rep.check(
        "3b",
        within(bb, -78.45, 3.0) && within(fb, -10.81, 1.0),
        format!("transition shifts E_a - E_b = {bb:.3} MHz (target -78.45 ± 3), E_a - E_bf = {fb:.3} MHz (target -10.81 ± 1)"),
    );
    (ground, excited)
}

fn franck_condon_argmax(rep: &mut Report, sys: &AtomSystem, ground: &LevelSet, excited: &LevelSet) {
    let k = sys.atom.resonant_wavenumber();
    let fc = build_matrix(excited, ground, k).unwrap();
    let col = fc.col_index(LevelId::Bound(285)).unwrap();
    let row = fc.dominant_row(col).unwrap();
    let LevelId::Bound(nu_a) = fc.rows[row] else { unreachable!() };
    let f2 = fc.get(row, col).norm_sqr();

    let free = LevelSet {
        free: vec![sys.solver(StateLabel::Ground).solve_free(4.25 * MHZ, None).unwrap()],
        free_weights: vec![1.0],
        ..LevelSet::bound_only(Some(StateLabel::Ground), Vec::new())
    };
    let ff = build_matrix(excited, &free, k).unwrap();
    let frow = ff.dominant_row(0).unwrap();
    let LevelId::Bound(nu_f) = ff.rows[frow] else { unreachable!() };
    rep.check(
        "4",
        nu_a.abs_diff(400) <= 2 && nu_f.abs_diff(415) <= 2,
        format!(
            "dominant partner of ν_b = 285 is ν_a = {nu_a} (|F|² = {f2:.4}, target 400 ± 2); of E_b = 4.25 MHz is ν_a = {nu_f} (target 415 ± 2)"
        ),
    );
}

fn free_spectrum(rep: &mut Report, sys: &AtomSystem) -> f64 {
    let t = Instant::now();
    let r = free_to_bound(sys, 64).unwrap();
    let (p, w) = peak_fwhm(&r);
    rep.check(
        "5",
        within(p, -0.4, 0.5) && within(w, 6.7, 1.5),
        format!(
            "free-to-bound spectrum at 200 μK: δ_peak = {p:.3} MHz (target -0.4 ± 0.5), FWHM = {w:.3} MHz (target 6.7 ± 1.5), {:.2} s",
            secs(t.elapsed())
        ),
    );
    p
}

fn bound_spectrum(rep: &mut Report, sys: &AtomSystem) -> f64 {
    let t = Instant::now();
    let r = bound_to_bound(sys).unwrap();
    let (p, w) = peak_fwhm(&r);
    let asym = r.asymmetry.unwrap_or(f64::NAN);
    let dt = t.elapsed();
    rep.check(
        "6",
        within(p, -14.3, 0.3 * 14.3) && within(w, 58.3, 0.3 * 58.3) && asym > 1.0 && secs(dt) < 600.0,
        format!(
            "bound-to-bound spectrum: δ_peak = {p:.3} MHz (target -14.3 ± 30%), FWHM = {w:.2} MHz (target 58.3 ± 30%), negative/positive tail = {asym:.1} (> 1), {:.2} s",
            secs(dt)
        ),
    );
    p
}

struct Oscillator;

impl Potential for Oscillator {
    fn value(&self, x: f64) -> f64 {
        (x - 10.0) * (x - 10.0)
    }
    fn wall(&self) -> f64 {
        0.0
    }
    fn magnitude_bound(&self, _x: f64) -> f64 {
        100.0
    }
}

fn orthonormality_defect(set: &LevelSet) -> f64 {
    let mut worst = 0.0f64;
    for a in &set.bound {
        for b in &set.bound {
            let lo = a.start.max(b.start);
            let hi = a.end().min(b.end()) - 1;
            let ov = a.lattice.integrate(lo, hi, |i| a.at(i) * b.at(i));
            let expect = if a.nu == b.nu { 1.0 } else { 0.0 };
            worst = worst.max((ov - expect).abs());
        }
    }
    worst
}

fn model(sys: &AtomSystem, excited: &LevelSet, rates: &LevelRates, ground: &LevelSet, s: f64) -> SpectrumModel {
    let field = FieldParams::new(sys.atom.resonant_wavenumber(), s, 0.0).unwrap();
    let fc = build_matrix(excited, ground, field.k_per_nm).unwrap();
    let mix = InitialMixture::flat_bound(BOUND_MIXTURE[0], BOUND_MIXTURE[1]).unwrap();
    SpectrumModel::new(&fc, rates, &mix, &field, sys.atom.gamma0_hz).unwrap()
}

fn properties(rep: &mut Report, sys: &AtomSystem) {
    // harmonic oscillator, K = 1: E_n = 2n + 1
    let lat = Arc::new(Lattice::uniform(0.0, 2e-3, 10_000).unwrap());
    let osc = Solver::new(Discretization::new(&Oscillator, lat, 1.0).unwrap(), None);
    let set = osc.solve_range(0, 8).unwrap();
    let err = set
        .bound
        .iter()
        .map(|s| (s.energy / (2.0 * s.nu.unwrap() as f64 + 1.0) - 1.0).abs())
        .fold(0.0, f64::max);
    rep.check("7a", err < 1e-6, format!("oscillator energies: max relative error {err:.2e} (< 1e-6)"));

    let ground = sys.solver(StateLabel::Ground).solve_range(269, 293).unwrap();
    let (excited, rates) = excited_levels(sys).unwrap();
    let d = orthonormality_defect(&ground).max(orthonormality_defect(&excited));
    rep.check("7b", d < 1e-6, format!("bound-state orthonormality: max defect {d:.2e} (< 1e-6)"));

    let k = sys.atom.resonant_wavenumber();
    let f = build_matrix(&excited, &ground, k).unwrap();
    let b = build_matrix(&excited, &ground, -k).unwrap();
    let d = f
        .entries
        .iter()
        .zip(&b.entries)
        .map(|(x, y)| (x.conj() - y).norm())
        .fold(0.0, f64::max);
    rep.check("7c", d < 1e-14, format!("F(-k) = F*(k): max deviation {d:.1e}"));

    let all = sys.solver(StateLabel::Excited);
    let full = all.solve_range(0, all.capacity() - 1).unwrap();
    let one = LevelSet::bound_only(Some(StateLabel::Ground), vec![ground.level(285).unwrap().clone()]);
    let row: f64 = build_matrix(&full, &one, k).unwrap().entries.iter().map(|z| z.norm_sqr()).sum();
    rep.check(
        "7d",
        within(row, 1.0, 1e-3),
        format!("Σ_a |F_a,285|² over all {} excited bound levels = {row:.8} (1 ± 1e-3)", full.len()),
    );

    let g0 = sys.atom.gamma0_hz;
    let uni = level_rates(&RateProfile::uniform(g0).unwrap(), &excited).unwrap();
    let d = uni.levels.iter().map(|l| (l.gamma_hz / g0 - 1.0).abs()).fold(0.0, f64::max);
    rep.check("7e", d < 1e-9, format!("uniform profile: max |γ_a/γ₀ - 1| = {d:.1e}"));

    let grid = DetuningGrid::default();
    let m1 = model(sys, &excited, &rates, &ground, 1e-3);
    let m2 = model(sys, &excited, &rates, &ground, 2e-3);
    let r1 = m1.sweep(&grid, RateSelector::Channel).unwrap();
    let r2 = m2.sweep(&grid, RateSelector::Channel).unwrap();
    let lin = r1
        .gamma_hz
        .iter()
        .zip(&r2.gamma_hz)
        .map(|(a, b)| (b - 2.0 * a).abs() / b.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let (p1, w1) = peak_fwhm(&r1);
    let (p2, w2) = peak_fwhm(&r2);
    rep.check(
        "7f",
        lin < 1e-12 && (p1 - p2).abs() < 1e-9 && (w1 - w2).abs() < 1e-9,
        format!("Γ linear in s (max relative deviation {lin:.1e}); δ_peak and FWHM unchanged ({:.1e}, {:.1e} MHz)", (p1 - p2).abs(), (w1 - w2).abs()),
    );

    let dec = grid
        .points()
        .iter()
        .map(|&d| {
            let t = m1.scattering_rate(d, RateSelector::Total);
            let c = m1.scattering_rate(d, RateSelector::Channel);
            let r = m1.scattering_rate(d, RateSelector::Radiation);
            (t - c - r).abs() / t
        })
        .fold(0.0, f64::max);
    rep.check("7g", dec < 1e-14, format!("Γ_total = Γ_channel + Γ_radiation: max relative residual {dec:.1e}"));

    // identical potentials, vanishing k, no reflection, uniform rates
    let mut twin = sys.atom;
    twin.excited = twin.ground;
    let tsys = AtomSystem::new(twin, GridPolicy::default()).unwrap();
    let g = tsys.solver(StateLabel::Ground).solve_range(269, 293).unwrap();
    let e = tsys.solver(StateLabel::Excited).solve_range(269, 293).unwrap();
    let field = FieldParams::new(1e-9, 1e-3, 0.0).unwrap();
    let fc = build_matrix(&e, &g, field.k_per_nm).unwrap();
    let mix = InitialMixture::flat_bound(269, 293).unwrap();
    let m = SpectrumModel::new(&fc, &LevelRates::uniform(&e, g0), &mix, &field, g0).unwrap();
    let grid = DetuningGrid {
        min_hz: -40e6,
        max_hz: 40e6,
        step_hz: 0.01e6,
    };
    let r = m.sweep(&grid, RateSelector::Total).unwrap();
    let (p, w) = peak_fwhm(&r);
    rep.check(
        "7h",
        p.abs() < 1e-3 && within(w, g0 / MHZ, 1e-3 * g0 / MHZ),
        format!("identical potentials collapse to one Lorentzian: δ_peak = {p:.2e} MHz, FWHM = {w:.5} MHz (γ₀ = {:.2} MHz)", g0 / MHZ),
    );
}

fn adiabatic(rep: &mut Report) {
    let t = Instant::now();
    let opts = IntegrationOptions::default();
    let mut worst = 0.0f64;
    for delta in [-88e6, -78.45e6, -70e6] {
        let cmp = toy_two_by_two(1e-3, delta).compare_adiabatic(&opts).unwrap();
        worst = cmp.rel_error.iter().fold(worst, |a, &e| a.max(e));
    }
    let dt = t.elapsed();
    rep.check(
        "8",
        worst < 0.01 && secs(dt) < 30.0,
        format!("2 × 2 toy basis at s = 1e-3: max relative error vs adiabatic populations {worst:.2e} (< 1e-2), {:.2} s", secs(dt)),
    );
}

fn convergence(rep: &mut Report, sys: &AtomSystem, ground: &LevelSet, excited: &LevelSet, p5: f64, p6: f64) {
    let fine = AtomSystem::new(sys.atom, sys.policy.refined()).unwrap();
    let mut worst = 0.0f64;
    for (label, set, nu) in [
        (StateLabel::Ground, ground, 285),
        (StateLabel::Excited, excited, 400),
        (StateLabel::Excited, excited, 415),
    ] {
        let e = fine.solver(label).solve_level(nu).unwrap().energy;
        worst = worst.max((e - set.level(nu).unwrap().energy).abs() / MHZ);
    }
    let (f6, _) = peak_fwhm(&bound_to_bound(&fine).unwrap());
    let (f5, _) = peak_fwhm(&free_to_bound(&fine, 64).unwrap());
    let (n5, _) = peak_fwhm(&free_to_bound(sys, 128).unwrap());
    let shift = (f6 - p6).abs().max((f5 - p5).abs()).max((n5 - p5).abs());
    rep.check(
        "9",
        worst < 0.01 && shift < 0.05,
        format!(
            "halved grid step: level energies move ≤ {worst:.2e} MHz (< 0.01); peaks move ≤ {shift:.2e} MHz (< 0.05) under grid halving and node doubling"
        ),
    );
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut rep = Report { failures: 0 };
    let sys = AtomSystem::cesium_silica().unwrap();
    depths(&mut rep, &sys);
    centrifugal_and_reflection(&mut rep, &sys.atom);
    let (ground, excited) = levels(&mut rep, &sys);
    franck_condon_argmax(&mut rep, &sys, &ground, &excited);
    let p5 = free_spectrum(&mut rep, &sys);
    let p6 = bound_spectrum(&mut rep, &sys);
    properties(&mut rep, &sys);
    adiabatic(&mut rep);
    convergence(&mut rep, &sys, &ground, &excited, p5, p6);
    println!(
        "acceptance: {} failing, {:.1} s total",
        rep.failures,
        secs(start.elapsed())
    );
    if rep.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
