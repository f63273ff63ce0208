//! Both surface potentials of one atom discretized on a shared lattice.

use std::sync::Arc;

use crate::error::Result;
use crate::grid::{GridPolicy, Lattice};
use crate::model::{kinetic_coefficient, AtomParams};
use crate::numerov::Discretization;
use crate::potential::{Potential, StateLabel, SurfacePotential};
use crate::eigensolver::Solver;

/// Ground and excited solvers sharing node positions, so that overlaps need
/// no interpolation.
#[derive(Debug)]
pub struct AtomSystem {
    pub atom: AtomParams,
    pub policy: GridPolicy,
    pub kinetic: f64,
    pub ground: SurfacePotential,
    pub excited: SurfacePotential,
    lattice: Arc<Lattice>,
    ground_solver: Solver,
    excited_solver: Solver,
}

impl AtomSystem {
    pub fn new(atom: AtomParams, policy: GridPolicy) -> Result<Self> {
        atom.validate()?;
        let kinetic = kinetic_coefficient(atom.mass_amu)?;
        let ground = SurfacePotential::new(atom.ground, StateLabel::Ground)?;
        let excited = SurfacePotential::new(atom.excited, StateLabel::Excited)?;
        let x_lo = ground.wall().min(excited.wall());
        let lattice = Arc::new(Lattice::build(&policy, kinetic, x_lo, |x| {
            ground.magnitude_bound(x).max(excited.magnitude_bound(x))
        })?);
        log::debug!(
            "lattice: {} nodes over [{:.5}, {:.1}] nm",
            lattice.len(),
            lattice.x(0),
            lattice.x(lattice.len() - 1)
        );
        let g = Discretization::new(&ground, lattice.clone(), kinetic)?;
        let e = Discretization::new(&excited, lattice.clone(), kinetic)?;
        Ok(Self {
            atom,
            policy,
            kinetic,
            ground,
            excited,
            lattice,
            ground_solver: Solver::new(g, Some(StateLabel::Ground)),
            excited_solver: Solver::new(e, Some(StateLabel::Excited)),
        })
    }

    /// Default regime: cesium near silica on the default lattice.
    pub fn cesium_silica() -> Result<Self> {
        Self::new(AtomParams::cesium_silica(), GridPolicy::default())
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn potential(&self, label: StateLabel) -> &SurfacePotential {
        match label {
            StateLabel::Ground => &self.ground,
            StateLabel::Excited => &self.excited,
        }
    }

    pub fn solver(&self, label: StateLabel) -> &Solver {
        match label {
            StateLabel::Ground => &self.ground_solver,
            StateLabel::Excited => &self.excited_solver,
        }
    }
}
