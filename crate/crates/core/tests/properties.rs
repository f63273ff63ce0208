use num_complex::Complex64;
use proptest::prelude::*;

use surfspec::eigensolver::Normalization;
use surfspec::franck_condon::{FranckCondonMatrix, LevelId};
use surfspec::model::{reflection_coefficient, FieldParams, PotentialParams};
use surfspec::potential::{StateLabel, SurfacePotential};
use surfspec::rates::{Channel, LevelRate, LevelRates};
use surfspec::spectrum::{DetuningGrid, InitialMixture, RateSelector, SpectrumModel};

/// Synthetic 3 × 2 problem with arbitrary overlaps and rates.
fn model(f: &[(f64, f64)], gammas: &[(f64, f64)], s: f64, r: f64, mix: &InitialMixture) -> SpectrumModel {
    let fc = FranckCondonMatrix {
        k: 0.0074,
        rows: (0..3).map(LevelId::Bound).collect(),
        cols: (0..2).map(LevelId::Bound).collect(),
        row_norm: vec![Normalization::Unit; 3],
        col_norm: vec![Normalization::Unit; 2],
        row_energies: vec![-130e6, -80e6, -20e6],
        col_energies: vec![-50e6, -10e6],
        entries: f.iter().map(|&(a, b)| Complex64::new(a, b)).collect(),
        disjoint_pairs: 0,
    };
    let rates = LevelRates {
        channel: Channel::Guided,
        levels: gammas
            .iter()
            .enumerate()
            .map(|(i, &(g, c))| LevelRate {
                id: LevelId::Bound(i),
                gamma_hz: g,
                gamma_channel_hz: c * g,
                gamma_rad_hz: g - c * g,
            })
            .collect(),
    };
    let field = FieldParams::new(0.0074, s, r).unwrap();
    SpectrumModel::new(&fc, &rates, mix, &field, 5.25e6).unwrap()
}

fn overlaps() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-0.6..0.6f64, -0.3..0.3f64), 6)
}

fn rates() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((4e6..8e6f64, 0.0..0.3f64), 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_is_channel_plus_radiation(f in overlaps(), g in rates(), r in 0.0..0.5f64, d in -200e6..100e6f64) {
        let m = model(&f, &g, 1e-3, r, &InitialMixture::flat_bound(0, 1).unwrap());
        let t = m.scattering_rate(d, RateSelector::Total);
        let c = m.scattering_rate(d, RateSelector::Channel);
        let x = m.scattering_rate(d, RateSelector::Radiation);
        prop_assert!(t >= 0.0 && c >= 0.0 && x >= 0.0);
        prop_assert!((t - c - x).abs() <= 1e-12 * t.max(1e-300));
    }

    #[test]
    fn rate_is_linear_in_saturation(f in overlaps(), g in rates(), s in 1e-5..1e-2f64, d in -200e6..100e6f64) {
        let mix = InitialMixture::flat_bound(0, 1).unwrap();
        let a = model(&f, &g, s, 0.1845, &mix).scattering_rate(d, RateSelector::Channel);
        let b = model(&f, &g, 2.0 * s, 0.1845, &mix).scattering_rate(d, RateSelector::Channel);
        prop_assert!((b - 2.0 * a).abs() <= 1e-12 * b.abs().max(1e-300));
    }

    #[test]
    fn mixtures_combine_convexly(f in overlaps(), g in rates(), p in 0.0..1.0f64, d in -200e6..100e6f64) {
        let one = InitialMixture::flat_bound(0, 0).unwrap();
        let two = InitialMixture::flat_bound(1, 1).unwrap();
        let both = one.blend(&two, p).unwrap();
        let ga = model(&f, &g, 1e-3, 0.0, &one).scattering_rate(d, RateSelector::Total);
        let gb = model(&f, &g, 1e-3, 0.0, &two).scattering_rate(d, RateSelector::Total);
        let gm = model(&f, &g, 1e-3, 0.0, &both).scattering_rate(d, RateSelector::Total);
        prop_assert!((gm - (p * ga + (1.0 - p) * gb)).abs() <= 1e-12 * gm.max(1e-300));
    }

    #[test]
    fn turning_points_solve_the_level_equation(frac in 1e-6..0.999f64) {
        let pot = SurfacePotential::new(PotentialParams::silica_cesium_ground(), StateLabel::Ground).unwrap();
        let (x_min, v_min) = pot.well_minimum();
        let e = v_min * frac;
        let (a, b) = pot.turning_points(e).unwrap();
        prop_assert!(a < x_min && x_min < b);
        let scale = 1.0 + e.abs() / 1e6;
        prop_assert!((pot.evaluate(a).unwrap() - e).abs() <= scale);
        prop_assert!((pot.evaluate(b).unwrap() - e).abs() <= scale);
    }

    #[test]
    fn reflection_is_monotone_and_bounded(n in 1.0..10.0f64, dn in 1e-3..1.0f64) {
        let r1 = reflection_coefficient(n).unwrap();
        let r2 = reflection_coefficient(n + dn).unwrap();
        prop_assert!((0.0..1.0).contains(&r1));
        prop_assert!(r2 > r1);
    }
}

#[test]
fn peak_and_width_do_not_depend_on_saturation() {
    let f = [(0.5, 0.1), (0.2, 0.0), (-0.3, 0.05), (0.4, -0.1), (0.1, 0.2), (0.3, 0.0)];
    let g = [(6e6, 0.1), (5.5e6, 0.2), (5.3e6, 0.05)];
    let mix = InitialMixture::flat_bound(0, 1).unwrap();
    let grid = DetuningGrid::default();
    let a = model(&f, &g, 1e-4, 0.0, &mix).sweep(&grid, RateSelector::Channel).unwrap();
    let b = model(&f, &g, 5e-3, 0.0, &mix).sweep(&grid, RateSelector::Channel).unwrap();
    let (pa, pb) = (a.peak.unwrap(), b.peak.unwrap());
    assert!((pa.delta_hz - pb.delta_hz).abs() < 1.0);
    assert!((a.fwhm_hz.unwrap() - b.fwhm_hz.unwrap()).abs() < 1.0);
    assert!((pb.value_hz / pa.value_hz - 50.0).abs() < 1e-9);
}
