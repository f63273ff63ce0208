//! Position-dependent emission rates and their level averages
//! `γ_a = ∫ γ(x) |φ_a(x)|² dx`.
//!
//! A profile carries the total rate and the rate into one detected channel
//! (evanescent modes of a flat surface or guided modes of a fiber). The
//! surface distance r is identified with x.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eigensolver::{LevelSet, StateKind, TranslationalState};
use crate::error::{param, Error, Result};
use crate::franck_condon::LevelId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Evanescent,
    Guided,
}

/// How γ(r) is specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileShape {
    /// γ(r) = γ₀, no channel emission.
    Uniform,
    /// channel = γ₀ g0 e^{-2κr}; total = γ₀ (1 + (enhancement - 1) e^{-2κr}).
    Evanescent {
        g0: f64,
        kappa_per_nm: f64,
        enhancement: f64,
    },
    /// Samples with linear interpolation. Below the first sample the first
    /// values are held; beyond the last the total is γ₀ and the channel 0.
    Tabulated {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source: Option<PathBuf>,
        r_nm: Vec<f64>,
        total_hz: Vec<f64>,
        channel_hz: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateProfile {
    pub gamma0_hz: f64,
    pub channel: Channel,
    pub shape: ProfileShape,
}

#[derive(Debug, Deserialize)]
struct ProfileRow {
    r_nm: f64,
    #[serde(rename = "gamma_total_Hz")]
    gamma_total_hz: f64,
    #[serde(rename = "gamma_channel_Hz")]
    gamma_channel_hz: f64,
}

impl RateProfile {
    pub fn uniform(gamma0_hz: f64) -> Result<Self> {
        let p = Self {
            gamma0_hz,
            channel: Channel::Evanescent,
            shape: ProfileShape::Uniform,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn evanescent(gamma0_hz: f64, g0: f64, kappa_per_nm: f64, enhancement: f64, channel: Channel) -> Result<Self> {
        let p = Self {
            gamma0_hz,
            channel,
            shape: ProfileShape::Evanescent {
                g0,
                kappa_per_nm,
                enhancement,
            },
        };
        p.validate()?;
        Ok(p)
    }

    /// Default parametric profile: g0 = 0.2, κ = 1/(140 nm), enhancement 1.3.
    pub fn default_evanescent(gamma0_hz: f64) -> Self {
        Self {
            gamma0_hz,
            channel: Channel::Evanescent,
            shape: ProfileShape::Evanescent {
                g0: 0.2,
                kappa_per_nm: 1.0 / 140.0,
                enhancement: 1.3,
            },
        }
    }

    pub fn tabulated(
        gamma0_hz: f64,
        channel: Channel,
        r_nm: Vec<f64>,
        total_hz: Vec<f64>,
        channel_hz: Vec<f64>,
    ) -> Result<Self> {
        let p = Self {
            gamma0_hz,
            channel,
            shape: ProfileShape::Tabulated {
                source: None,
                r_nm,
                total_hz,
                channel_hz,
            },
        };
        p.validate()?;
        Ok(p)
    }

    /// Reads CSV `r_nm,gamma_total_Hz,gamma_channel_Hz` with a header row.
    pub fn load(path: &Path, gamma0_hz: f64, channel: Channel) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        let (mut r, mut total, mut chan) = (Vec::new(), Vec::new(), Vec::new());
        for (line, row) in reader.deserialize::<ProfileRow>().enumerate() {
            let row = row.map_err(|e| Error::Format(format!("{} row {}: {e}", path.display(), line + 1)))?;
            r.push(row.r_nm);
            total.push(row.gamma_total_hz);
            chan.push(row.gamma_channel_hz);
        }
        let mut p = Self::tabulated(gamma0_hz, channel, r, total, chan)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if let ProfileShape::Tabulated { source, .. } = &mut p.shape {
            *source = Some(path.to_path_buf());
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0_hz > 0.0 && self.gamma0_hz.is_finite()) {
            return param(format!("gamma0 must be positive, got {}", self.gamma0_hz));
        }
        match &self.shape {
            ProfileShape::Uniform => Ok(()),
            &ProfileShape::Evanescent {
                g0,
                kappa_per_nm,
                enhancement,
            } => {
                if !(0.0..=1.0).contains(&g0) {
                    return param(format!("g0 must lie in [0, 1], got {g0}"));
                }
                if !(kappa_per_nm > 0.0 && kappa_per_nm.is_finite()) {
                    return param(format!("kappa must be positive, got {kappa_per_nm}"));
                }
                if !(enhancement > 0.0 && enhancement.is_finite()) {
                    return param(format!("enhancement must be positive, got {enhancement}"));
                }
                if g0 > enhancement {
                    return param(format!(
                        "channel rate would exceed the total rate at the surface (g0 = {g0} > enhancement = {enhancement})"
                    ));
                }
                Ok(())
            }
            ProfileShape::Tabulated {
                r_nm,
                total_hz,
                channel_hz,
                ..
            } => {
                if r_nm.is_empty() || r_nm.len() != total_hz.len() || r_nm.len() != channel_hz.len() {
                    return param("tabulated profile needs equally long, non-empty columns");
                }
                if r_nm[0] < 0.0 || r_nm.windows(2).any(|w| !(w[1] > w[0])) {
                    return param("profile distances must be non-negative and strictly increasing");
                }
                for ((r, t), c) in r_nm.iter().zip(total_hz).zip(channel_hz) {
                    if !(t.is_finite() && c.is_finite() && r.is_finite()) {
                        return param(format!("non-finite profile sample at r = {r} nm"));
                    }
                    if !(*c >= 0.0 && c <= t) {
                        return param(format!(
                            "need 0 <= gamma_channel <= gamma_total at r = {r} nm, got {c} and {t}"
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    /// `(γ(r), γ_channel(r))` in Hz.
    pub fn at(&self, r: f64) -> (f64, f64) {
        let g0 = self.gamma0_hz;
        match &self.shape {
            ProfileShape::Uniform => (g0, 0.0),
            &ProfileShape::Evanescent {
                g0: frac,
                kappa_per_nm,
                enhancement,
            } => {
                let d = (-2.0 * kappa_per_nm * r.max(0.0)).exp();
                (g0 * (1.0 + (enhancement - 1.0) * d), g0 * frac * d)
            }
            ProfileShape::Tabulated {
                r_nm,
                total_hz,
                channel_hz,
                ..
            } => {
                let n = r_nm.len();
                if r <= r_nm[0] {
                    return (total_hz[0], channel_hz[0]);
                }
                if r > r_nm[n - 1] {
                    return (g0, 0.0);
                }
                let j = r_nm.partition_point(|&x| x < r);
                if j == 0 || r_nm[j] == r {
                    return (total_hz[j], channel_hz[j]);
                }
                let t = (r - r_nm[j - 1]) / (r_nm[j] - r_nm[j - 1]);
                let lerp = |v: &[f64]| v[j - 1] + t * (v[j] - v[j - 1]);
                (lerp(total_hz), lerp(channel_hz))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelRate {
    pub id: LevelId,
    pub gamma_hz: f64,
    pub gamma_channel_hz: f64,
    pub gamma_rad_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRates {
    pub channel: Channel,
    pub levels: Vec<LevelRate>,
}

impl LevelRates {
    pub fn get(&self, id: LevelId) -> Option<&LevelRate> {
        self.levels.iter().find(|l| l.id == id)
    }

    /// Rates for every bound level with the constant γ₀ (no channel).
    pub fn uniform(levels: &LevelSet, gamma0_hz: f64) -> Self {
        Self {
            channel: Channel::Evanescent,
            levels: levels
                .bound
                .iter()
                .map(|s| LevelRate {
                    id: LevelId::of(s),
                    gamma_hz: gamma0_hz,
                    gamma_channel_hz: 0.0,
                    gamma_rad_hz: gamma0_hz,
                })
                .collect(),
        }
    }
}

/// `∫ (γ, γ_channel)(x) |φ(x)|² dx` for one unit-normalized state.
pub fn state_rates(state: &TranslationalState, rates: impl Fn(f64) -> (f64, f64)) -> (f64, f64) {
    let lat = &state.lattice;
    let (t, c) = lat.integrate(state.start, state.end() - 1, |i| {
        let p = state.at(i);
        let (t, c) = rates(lat.x(i));
        Pair(t * p * p, c * p * p)
    })
    .into();
    (t, c)
}

#[derive(Debug, Clone, Copy, Default)]
struct Pair(f64, f64);

impl std::ops::Add for Pair {
    type Output = Pair;
    fn add(self, o: Pair) -> Pair {
        Pair(self.0 + o.0, self.1 + o.1)
    }
}

impl std::ops::Mul<f64> for Pair {
    type Output = Pair;
    fn mul(self, s: f64) -> Pair {
        Pair(self.0 * s, self.1 * s)
    }
}

impl From<Pair> for (f64, f64) {
    fn from(p: Pair) -> Self {
        (p.0, p.1)
    }
}

/// Level-averaged rates for every bound state of `levels`.
pub fn level_rates(profile: &RateProfile, levels: &LevelSet) -> Result<LevelRates> {
    profile.validate()?;
    if !levels.free.is_empty() {
        return Err(Error::Consistency(
            "level rates are defined for unit-normalized bound levels only".into(),
        ));
    }
    let entries = levels
        .bound
        .iter()
        .map(|s| {
            debug_assert_eq!(s.kind, StateKind::Bound);
            let (total, channel) = state_rates(s, |x| profile.at(x));
            let channel = channel.clamp(0.0, total);
            LevelRate {
                id: LevelId::of(s),
                gamma_hz: total,
                gamma_channel_hz: channel,
                gamma_rad_hz: total - channel,
            }
        })
        .collect();
    Ok(LevelRates {
        channel: profile.channel,
        levels: entries,
    })
}
