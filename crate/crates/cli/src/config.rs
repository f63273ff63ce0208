//! Run configuration.
//!
//! Every section is optional and falls back to the cesium/silica defaults.
//! Unknown keys are rejected. Field names and units:
//!
//! ```text
//! atom       mass_amu, gamma0_hz, lambda0_nm,
//!            ground/excited: { a_hz, alpha_per_nm, c3_khz_um3 }
//! field      saturation_s, k_per_nm (default 2π/λ₀),
//!            reflection_r (default from refractive_index), refractive_index
//! grid       inner_end_nm, inner_step_nm, points_per_wavelength,
//!            segment_steps, energy_ceiling_hz, max_extent_nm
//! state      "ground" | "excited"   level set used by solve-levels
//! basis      excited: [lo, hi], ground: [lo, hi]   (node counts, inclusive)
//! profile    channel: "evanescent" | "guided", gamma0_hz (default atom γ₀),
//!            shape: { kind: "uniform" }
//!                 | { kind: "evanescent", g0, kappa_per_nm, enhancement }
//!                 | { kind: "file", path }   CSV r_nm,gamma_total_Hz,gamma_channel_Hz
//! mixture    { kind: "flat_bound", nu_min, nu_max }
//!          | { kind: "thermal", temperature_k, e_cut_hz (default 10 k_BT), nodes }
//!          | { kind: "custom", entries: [{ nu, weight }] }
//! detuning   min_hz, max_hz, step_hz
//! selector   "total" | "channel" | "radiation"
//! validity   l_z
//! dynamics   saturation_s, detunings_hz, excited/ground: [lo, hi] (omit both
//!            for the built-in 2×2 toy basis)
//! output     csv, sidecar (paths; CSV goes to stdout when unset)
//! cache_dir  eigenstate cache root
//! ```
//!
//! Relative paths inside a config file resolve against the current working
//! directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use surfspec::grid::GridPolicy;
use surfspec::model::{reflection_coefficient, AtomParams, FieldParams};
use surfspec::potential::StateLabel;
use surfspec::rates::{Channel, RateProfile};
use surfspec::spectrum::{DetuningGrid, RateSelector};
use surfspec::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FieldConfig {
    pub saturation_s: f64,
    pub k_per_nm: Option<f64>,
    pub reflection_r: Option<f64>,
    pub refractive_index: f64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            saturation_s: 1e-3,
            k_per_nm: None,
            reflection_r: None,
            refractive_index: 1.4525,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisConfig {
    pub excited: [usize; 2],
    pub ground: [usize; 2],
}

impl Default for BasisConfig {
    fn default() -> Self {
        Self {
            excited: [385, 429],
            ground: [269, 293],
        }
    }
}

impl BasisConfig {
    pub fn range(&self, label: StateLabel) -> [usize; 2] {
        match label {
            StateLabel::Ground => self.ground,
            StateLabel::Excited => self.excited,
        }
    }

    pub fn set(&mut self, label: StateLabel, range: [usize; 2]) {
        match label {
            StateLabel::Ground => self.ground = range,
            StateLabel::Excited => self.excited = range,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeConfig {
    Uniform,
    Evanescent {
        g0: f64,
        kappa_per_nm: f64,
        enhancement: f64,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileConfig {
    pub channel: Channel,
    pub gamma0_hz: Option<f64>,
    pub shape: ShapeConfig,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            channel: Channel::Evanescent,
            gamma0_hz: None,
            shape: ShapeConfig::Evanescent {
                g0: 0.2,
                kappa_per_nm: 1.0 / 140.0,
                enhancement: 1.3,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomEntry {
    pub nu: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MixtureConfig {
    FlatBound {
        nu_min: usize,
        nu_max: usize,
    },
    Thermal {
        temperature_k: f64,
        #[serde(default)]
        e_cut_hz: Option<f64>,
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
    Custom {
        entries: Vec<CustomEntry>,
    },
}

fn default_nodes() -> usize {
    64
}

impl Default for MixtureConfig {
    fn default() -> Self {
        MixtureConfig::FlatBound {
            nu_min: 269,
            nu_max: 293,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidityConfig {
    pub l_z: i64,
}

impl Default for ValidityConfig {
    fn default() -> Self {
        Self { l_z: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub saturation_s: f64,
    pub detunings_hz: Vec<f64>,
    pub excited: Option<[usize; 2]>,
    pub ground: Option<[usize; 2]>,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            saturation_s: 1e-3,
            detunings_hz: vec![-88e6, -78.45e6, -70e6],
            excited: None,
            ground: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub atom: AtomParams,
    pub field: FieldConfig,
    pub grid: GridPolicy,
    pub state: StateLabel,
    pub basis: BasisConfig,
    pub profile: ProfileConfig,
    pub mixture: MixtureConfig,
    pub detuning: DetuningGrid,
    pub selector: RateSelector,
    pub validity: ValidityConfig,
    pub dynamics: DynamicsConfig,
    pub output: OutputConfig,
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            atom: AtomParams::default(),
            field: FieldConfig::default(),
            grid: GridPolicy::default(),
            state: StateLabel::Ground,
            basis: BasisConfig::default(),
            profile: ProfileConfig::default(),
            mixture: MixtureConfig::default(),
            detuning: DetuningGrid::default(),
            selector: RateSelector::Channel,
            validity: ValidityConfig::default(),
            dynamics: DynamicsConfig::default(),
            output: OutputConfig::default(),
            cache_dir: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Format(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("config {}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Fills values that default from other sections so the echo is
    /// self-contained.
    pub fn resolve(&mut self) -> Result<()> {
        if self.field.k_per_nm.is_none() {
            self.field.k_per_nm = Some(self.atom.resonant_wavenumber());
        }
        if self.field.reflection_r.is_none() {
            self.field.reflection_r = Some(reflection_coefficient(self.field.refractive_index)?);
        }
        if self.profile.gamma0_hz.is_none() {
            self.profile.gamma0_hz = Some(self.atom.gamma0_hz);
        }
        if let MixtureConfig::Thermal { temperature_k, e_cut_hz, .. } = &mut self.mixture {
            if e_cut_hz.is_none() {
                *e_cut_hz = Some(10.0 * surfspec::model::thermal_energy_hz(*temperature_k));
            }
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.atom.validate()?;
        self.grid.validate()?;
        self.field_params()?;
        self.detuning.validate()?;
        for (name, [lo, hi]) in [("excited", self.basis.excited), ("ground", self.basis.ground)] {
            if hi < lo {
                return Err(Error::Parameter(format!("basis.{name} range {lo}..{hi} is empty")));
            }
        }
        if let MixtureConfig::FlatBound { nu_min, nu_max } = self.mixture {
            if nu_max < nu_min {
                return Err(Error::Parameter(format!("mixture range {nu_min}..{nu_max} is empty")));
            }
        }
        if let MixtureConfig::Custom { entries } = &self.mixture {
            if entries.is_empty() {
                return Err(Error::Parameter("custom mixture has no entries".into()));
            }
        }
        if self.dynamics.excited.is_some() != self.dynamics.ground.is_some() {
            return Err(Error::Parameter(
                "dynamics.excited and dynamics.ground must be given together".into(),
            ));
        }
        Ok(())
    }

    pub fn field_params(&self) -> Result<FieldParams> {
        FieldParams::new(
            self.field.k_per_nm.unwrap_or_else(|| self.atom.resonant_wavenumber()),
            self.field.saturation_s,
            match self.field.reflection_r {
                Some(r) => r,
                None => reflection_coefficient(self.field.refractive_index)?,
            },
        )
    }

    pub fn rate_profile(&self) -> Result<RateProfile> {
        let g0 = self.profile.gamma0_hz.unwrap_or(self.atom.gamma0_hz);
        let channel = self.profile.channel;
        match &self.profile.shape {
            ShapeConfig::Uniform => {
                let mut p = RateProfile::uniform(g0)?;
                p.channel = channel;
                Ok(p)
            }
            ShapeConfig::Evanescent {
                g0: c,
                kappa_per_nm,
                enhancement,
            } => RateProfile::evanescent(g0, *c, *kappa_per_nm, *enhancement, channel),
            ShapeConfig::File { path } => RateProfile::load(path, g0, channel),
        }
    }

    pub fn profile_source(&self) -> String {
        match &self.profile.shape {
            ShapeConfig::Uniform => "uniform".into(),
            ShapeConfig::Evanescent { .. } => "parametric-evanescent".into(),
            ShapeConfig::File { path } => format!("tabulated-file:{}", path.display()),
        }
    }
}
