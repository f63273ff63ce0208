use std::path::PathBuf;

use serde::Serialize;
use surfspec::cache::StateCache;
use surfspec::dynamics::{toy_two_by_two, IntegrationOptions, ReducedSystem};
use surfspec::eigensolver::LevelSet;
use surfspec::franck_condon::{build_matrix, LevelId};
use surfspec::model::reflection_coefficient;
use surfspec::potential::{centrifugal_radius, StateLabel};
use surfspec::rates::{level_rates as compute_rates, RateProfile};
use surfspec::spectrum::{EnergyGrid, InitialMixture, MixtureEntry, SpectrumModel};
use surfspec::system::AtomSystem;
use surfspec::{Error, Result};

use crate::config::{MixtureConfig, RunConfig};
use crate::output::{num, sibling, write_json, Table};

const MHZ: f64 = 1e6;

struct Context {
    sys: AtomSystem,
    cache: StateCache,
}

impl Context {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let sys = AtomSystem::new(cfg.atom, cfg.grid)?;
        let root = cfg.cache_dir.clone().unwrap_or_else(|| PathBuf::from("cache"));
        Ok(Self {
            sys,
            cache: StateCache::open(root)?,
        })
    }

    fn bound(&self, label: StateLabel, [lo, hi]: [usize; 2]) -> Result<LevelSet> {
        self.cache.bound(&self.sys, label, lo, hi)
    }

    fn log_stats(&self) {
        let s = self.cache.stats();
        log::info!("cache {}: {} hits, {} misses", self.cache.root().display(), s.hits, s.misses);
    }
}

/// Writes the resolved configuration next to the primary output, or to
/// stderr when the output goes to stdout.
fn echo(cfg: &RunConfig) -> Result<()> {
    match &cfg.output.csv {
        Some(p) => write_json(&sibling(p, "resolved.json"), cfg),
        None => {
            eprintln!("{}", serde_json::to_string(cfg)?);
            Ok(())
        }
    }
}

fn finish(cfg: &RunConfig, table: &Table) -> Result<()> {
    table.write(cfg.output.csv.as_deref())?;
    echo(cfg)
}

pub fn validity(cfg: &RunConfig) -> Result<()> {
    let ctx = Context::new(cfg)?;
    let r = reflection_coefficient(cfg.field.refractive_index)?;
    let mut t = Table::new("state,x_wall_nm,x_min_nm,V_min_Hz,capacity,r_c_nm,R");
    for label in [StateLabel::Ground, StateLabel::Excited] {
        let pot = ctx.sys.potential(label);
        let (x_min, v_min) = pot.well_minimum();
        let r_c = centrifugal_radius(cfg.atom.mass_amu, pot.params.c3(), cfg.validity.l_z)?;
        t.push(&[
            label.to_string(),
            num(pot.x_wall()),
            num(x_min),
            num(v_min),
            ctx.sys.solver(label).capacity().to_string(),
            num(r_c),
            num(r),
        ]);
    }
    finish(cfg, &t)
}

pub fn solve_levels(cfg: &RunConfig) -> Result<()> {
    let ctx = Context::new(cfg)?;
    let set = ctx.bound(cfg.state, cfg.basis.range(cfg.state))?;
    ctx.log_stats();
    let pot = ctx.sys.potential(cfg.state);
    let mut t = Table::new("nu,energy_MHz,x_outer_nm");
    for s in &set.bound {
        let (_, x_outer) = pot.turning_points(s.energy)?;
        t.push(&[
            s.nu.map(|n| n.to_string()).unwrap_or_default(),
            num(s.energy / MHZ),
            num(x_outer),
        ]);
    }
    finish(cfg, &t)
}

/// Ground levels and initial mixture named by the mixture section.
fn ground_side(cfg: &RunConfig, ctx: &Context) -> Result<(LevelSet, InitialMixture)> {
    match &cfg.mixture {
        MixtureConfig::FlatBound { nu_min, nu_max } => Ok((
            ctx.bound(StateLabel::Ground, [*nu_min, *nu_max])?,
            InitialMixture::flat_bound(*nu_min, *nu_max)?,
        )),
        MixtureConfig::Thermal {
            temperature_k,
            e_cut_hz,
            nodes,
        } => {
            let e_cut = e_cut_hz.ok_or_else(|| Error::Parameter("thermal mixture needs e_cut_hz".into()))?;
            let grid = EnergyGrid::gauss_legendre(e_cut, *nodes)?;
            let set = ctx
                .cache
                .free(&ctx.sys, StateLabel::Ground, &grid.energies_hz, &grid.weights_hz)?;
            Ok((set, InitialMixture::thermal(*temperature_k, &grid)?))
        }
        MixtureConfig::Custom { entries } => {
            let lo = entries.iter().map(|e| e.nu).min().unwrap_or(0);
            let hi = entries.iter().map(|e| e.nu).max().unwrap_or(0);
            let mix = InitialMixture::custom(
                entries
                    .iter()
                    .map(|e| MixtureEntry {
                        id: LevelId::Bound(e.nu),
                        weight: e.weight,
                    })
                    .collect(),
            )?;
            Ok((ctx.bound(StateLabel::Ground, [lo, hi])?, mix))
        }
    }
}

fn id_cell(id: LevelId) -> String {
    match id {
        LevelId::Bound(nu) => nu.to_string(),
        LevelId::Free(e) => num(e / MHZ),
    }
}

pub fn fc_matrix(cfg: &RunConfig) -> Result<()> {
    let ctx = Context::new(cfg)?;
    let excited = ctx.bound(StateLabel::Excited, cfg.basis.excited)?;
    let (ground, header) = match cfg.mixture {
        MixtureConfig::Thermal { .. } => (ground_side(cfg, &ctx)?.0, "nu_a,E_b_MHz,Re_F,Im_F,absF2"),
        _ => (ctx.bound(StateLabel::Ground, cfg.basis.ground)?, "nu_a,nu_b,Re_F,Im_F,absF2"),
    };
    ctx.log_stats();
    let fc = build_matrix(&excited, &ground, cfg.field_params()?.k_per_nm)?;
    let mut t = Table::new(header);
    for (i, row) in fc.rows.iter().enumerate() {
        for (j, col) in fc.cols.iter().enumerate() {
            let f = fc.get(i, j);
            t.push(&[id_cell(*row), id_cell(*col), num(f.re), num(f.im), num(f.norm_sqr())]);
        }
    }
    finish(cfg, &t)
}

pub fn level_rates(cfg: &RunConfig) -> Result<()> {
    let ctx = Context::new(cfg)?;
    let excited = ctx.bound(StateLabel::Excited, cfg.basis.excited)?;
    ctx.log_stats();
    let rates = compute_rates(&cfg.rate_profile()?, &excited)?;
    let mut t = Table::new("nu_a,gamma_a_MHz,gamma_channel_MHz");
    for l in &rates.levels {
        t.push(&[id_cell(l.id), num(l.gamma_hz / MHZ), num(l.gamma_channel_hz / MHZ)]);
    }
    finish(cfg, &t)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    peak_delta_mhz: Option<f64>,
    peak_gamma_hz: Option<f64>,
    fwhm_mhz: Option<f64>,
    asymmetry: Option<f64>,
    warnings: &'a [String],
    selector: surfspec::spectrum::RateSelector,
    saturation_s: f64,
    reflection_r: f64,
    profile_source: String,
    profile: &'a RateProfile,
    mixture: &'a InitialMixture,
    excited_basis: [usize; 2],
    ground_levels: usize,
    x_wall_nm: [f64; 2],
    lattice_nodes: usize,
    config: &'a RunConfig,
}

pub fn spectrum(cfg: &RunConfig) -> Result<()> {
    let ctx = Context::new(cfg)?;
    let excited = ctx.bound(StateLabel::Excited, cfg.basis.excited)?;
    let (ground, mixture) = ground_side(cfg, &ctx)?;
    ctx.log_stats();
    let field = cfg.field_params()?;
    let profile = cfg.rate_profile()?;
    let rates = compute_rates(&profile, &excited)?;
    let fc = build_matrix(&excited, &ground, field.k_per_nm)?;
    let model = SpectrumModel::new(&fc, &rates, &mixture, &field, cfg.atom.gamma0_hz)?;
    let result = model.sweep(&cfg.detuning, cfg.selector)?;

    let mut t = Table::new("delta_MHz,Gamma_Hz");
    for (d, g) in result.delta_hz.iter().zip(&result.gamma_hz) {
        t.push(&[num(d / MHZ), num(*g)]);
    }
    t.write(cfg.output.csv.as_deref())?;

    let sidecar = Sidecar {
        peak_delta_mhz: result.peak.map(|p| p.delta_hz / MHZ),
        peak_gamma_hz: result.peak.map(|p| p.value_hz),
        fwhm_mhz: result.fwhm_hz.map(|w| w / MHZ),
        asymmetry: result.asymmetry,
        warnings: &result.warnings,
        selector: result.selector,
        saturation_s: result.saturation_s,
        reflection_r: result.reflection_r,
        profile_source: cfg.profile_source(),
        profile: &profile,
        mixture: &mixture,
        excited_basis: cfg.basis.excited,
        ground_levels: ground.len(),
        x_wall_nm: [
            ctx.sys.potential(StateLabel::Ground).x_wall(),
            ctx.sys.potential(StateLabel::Excited).x_wall(),
        ],
        lattice_nodes: ctx.sys.lattice().len(),
        config: cfg,
    };
    let path = cfg
        .output
        .sidecar
        .clone()
        .or_else(|| cfg.output.csv.as_ref().map(|p| sibling(p, "json")));
    match path {
        Some(p) => write_json(&p, &sidecar)?,
        None => eprintln!("{}", serde_json::to_string_pretty(&sidecar)?),
    }
    if cfg.output.csv.is_some() {
        echo(cfg)?;
    }
    Ok(())
}

fn reduced_from_levels(cfg: &RunConfig, excited: [usize; 2], ground: [usize; 2]) -> Result<ReducedSystem> {
    let ctx = Context::new(cfg)?;
    let ex = ctx.bound(StateLabel::Excited, excited)?;
    let gr = ctx.bound(StateLabel::Ground, ground)?;
    let field = cfg.field_params()?;
    let rates = compute_rates(&cfg.rate_profile()?, &ex)?;
    let fc = build_matrix(&ex, &gr, field.k_per_nm)?;
    let nb = fc.cols.len();
    Ok(ReducedSystem {
        excited_energies: fc.row_energies.clone(),
        gammas: rates.levels.iter().map(|l| l.gamma_hz).collect(),
        ground_energies: fc.col_energies.clone(),
        ground_populations: vec![1.0 / nb as f64; nb],
        overlaps: fc.entries.clone(),
        gamma0: cfg.atom.gamma0_hz,
        saturation_s: cfg.dynamics.saturation_s,
        reflection_r: field.reflection_r,
        detuning: 0.0,
    })
}

pub fn dynamics_check(cfg: &RunConfig) -> Result<()> {
    let d = &cfg.dynamics;
    let (base, labels): (ReducedSystem, Vec<String>) = match (d.excited, d.ground) {
        (Some(e), Some(g)) => (reduced_from_levels(cfg, e, g)?, (e[0]..=e[1]).map(|n| n.to_string()).collect()),
        _ => (toy_two_by_two(d.saturation_s, 0.0), vec!["0".into(), "1".into()]),
    };
    let opts = IntegrationOptions::default();
    let mut t = Table::new("delta_MHz,level,rho_ode,rho_adiabatic,rel_error");
    let mut worst = 0.0f64;
    for &delta in &d.detunings_hz {
        let sys = ReducedSystem {
            detuning: delta,
            ..base.clone()
        };
        let cmp = sys.compare_adiabatic(&opts)?;
        for (i, label) in labels.iter().enumerate() {
            worst = worst.max(cmp.rel_error[i]);
            t.push(&[
                num(delta / MHZ),
                label.clone(),
                num(cmp.ode[i]),
                num(cmp.adiabatic[i]),
                num(cmp.rel_error[i]),
            ]);
        }
    }
    if worst >= 0.01 {
        log::warn!("largest relative error {worst:.3e} exceeds 1%");
    }
    finish(cfg, &t)
}
