//! Reproduction recipes for the two reference spectra of cesium near fused
//! silica, shared by the acceptance suite.
//!
//! Both recipes detect emission into the guided channel of a nanofiber, so
//! the surface reflection is switched off, and use the default parametric
//! emission profile (g0 = 0.2, κ = 1/140 nm⁻¹, enhancement 1.3).

use surfspec::eigensolver::LevelSet;
use surfspec::franck_condon::build_matrix;
use surfspec::model::{thermal_energy_hz, FieldParams};
use surfspec::potential::StateLabel;
use surfspec::rates::{level_rates, Channel, LevelRates, RateProfile};
use surfspec::spectrum::{DetuningGrid, EnergyGrid, InitialMixture, RateSelector, SpectrumModel, SpectrumResult};
use surfspec::system::AtomSystem;
use surfspec::Result;

/// Excited levels entering both spectra.
pub const EXCITED: [usize; 2] = [385, 429];
/// Ground levels of the bound mixture.
pub const BOUND_MIXTURE: [usize; 2] = [269, 293];
/// Temperature of the free mixture, K.
pub const TEMPERATURE_K: f64 = 200e-6;

pub fn guided_profile(gamma0_hz: f64) -> RateProfile {
    RateProfile {
        channel: Channel::Guided,
        ..RateProfile::default_evanescent(gamma0_hz)
    }
}

fn field(sys: &AtomSystem) -> Result<FieldParams> {
    FieldParams::new(sys.atom.resonant_wavenumber(), 1e-3, 0.0)
}

pub fn excited_levels(sys: &AtomSystem) -> Result<(LevelSet, LevelRates)> {
    let set = sys.solver(StateLabel::Excited).solve_range(EXCITED[0], EXCITED[1])?;
    let rates = level_rates(&guided_profile(sys.atom.gamma0_hz), &set)?;
    Ok((set, rates))
}

/// Free ground states on a Gauss–Legendre grid over `[0, 10 k_BT]`.
pub fn thermal_states(sys: &AtomSystem, nodes: usize) -> Result<(LevelSet, EnergyGrid)> {
    let grid = EnergyGrid::gauss_legendre(10.0 * thermal_energy_hz(TEMPERATURE_K), nodes)?;
    let solver = sys.solver(StateLabel::Ground);
    let mut set = LevelSet::bound_only(Some(StateLabel::Ground), Vec::new());
    for (&e, &w) in grid.energies_hz.iter().zip(&grid.weights_hz) {
        set.free.push(solver.solve_free(e, None)?);
        set.free_weights.push(w);
    }
    Ok((set, grid))
}

/// Guided-channel spectrum of the thermal free mixture.
pub fn free_to_bound(sys: &AtomSystem, nodes: usize) -> Result<SpectrumResult> {
    let (excited, rates) = excited_levels(sys)?;
    let (free, grid) = thermal_states(sys, nodes)?;
    let mixture = InitialMixture::thermal(TEMPERATURE_K, &grid)?;
    let fc = build_matrix(&excited, &free, sys.atom.resonant_wavenumber())?;
    let model = SpectrumModel::new(&fc, &rates, &mixture, &field(sys)?, sys.atom.gamma0_hz)?;
    let detuning = DetuningGrid {
        min_hz: -40e6,
        max_hz: 30e6,
        step_hz: 0.05e6,
    };
    model.sweep(&detuning, RateSelector::Channel)
}

/// Guided-channel spectrum of the flat bound mixture.
pub fn bound_to_bound(sys: &AtomSystem) -> Result<SpectrumResult> {
    let (excited, rates) = excited_levels(sys)?;
    let ground = sys
        .solver(StateLabel::Ground)
        .solve_range(BOUND_MIXTURE[0], BOUND_MIXTURE[1])?;
    let mixture = InitialMixture::flat_bound(BOUND_MIXTURE[0], BOUND_MIXTURE[1])?;
    let fc = build_matrix(&excited, &ground, sys.atom.resonant_wavenumber())?;
    let model = SpectrumModel::new(&fc, &rates, &mixture, &field(sys)?, sys.atom.gamma0_hz)?;
    model.sweep(&DetuningGrid::default(), RateSelector::Channel)
}
