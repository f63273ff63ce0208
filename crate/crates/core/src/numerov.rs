//! Numerov integration of `ψ'' = Q(x) ψ`, `Q = (V - E)/K`, on a lattice.
//!
//! At a boundary where the step doubles, outward integration reaches back
//! two fine nodes for its stencil; inward integration takes one coarse step
//! into the fine segment and recovers the skipped node from the Numerov
//! relation centred on it.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Lattice;
use crate::potential::Potential;

/// Seed amplitude next to a Dirichlet end.
const SEED: f64 = 1e-30;
const RESCALE_ABOVE: f64 = 1e200;
/// Integration starts where κh drops below this; ψ is taken as zero before.
const MAX_KAPPA_STEP: f64 = 1.5;
/// Exponential decay (in e-folds) required between the outer turning point
/// and the outer Dirichlet end.
pub(crate) const TAIL_DECAY: f64 = 40.0;

/// A potential sampled on a lattice, ready for shooting.
#[derive(Clone)]
pub struct Discretization {
    lattice: Arc<Lattice>,
    v: Vec<f64>,
    start: usize,
    kinetic: f64,
    i_min: usize,
    monotone_tail: bool,
}

impl std::fmt::Debug for Discretization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Discretization")
            .field("nodes", &self.lattice.len())
            .field("start", &self.start)
            .field("kinetic", &self.kinetic)
            .finish()
    }
}

/// Where a bound-state shot is matched and where its box ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ShotFrame {
    pub matching: usize,
    pub end: usize,
}

impl Discretization {
    pub fn new(potential: &dyn Potential, lattice: Arc<Lattice>, kinetic: f64) -> Result<Self> {
        if !(kinetic > 0.0) {
            return Err(Error::Parameter("kinetic coefficient must be positive".into()));
        }
        let start = lattice.index_at_or_above(potential.wall());
        if start + 8 >= lattice.len() {
            return Err(Error::Parameter(format!(
                "lattice ends before the wall at {} nm",
                potential.wall()
            )));
        }
        let v: Vec<f64> = lattice
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &x)| if i < start { f64::INFINITY } else { potential.value(x) })
            .collect();
        let i_min = (start..v.len())
            .min_by(|&a, &b| v[a].total_cmp(&v[b]))
            .unwrap();
        let monotone_tail = v[i_min..].windows(2).all(|w| w[1] >= w[0]);
        Ok(Self {
            lattice,
            v,
            start,
            kinetic,
            i_min,
            monotone_tail,
        })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    /// First lattice node at or beyond the wall.
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn kinetic(&self) -> f64 {
        self.kinetic
    }

    pub fn v(&self, i: usize) -> f64 {
        self.v[i]
    }

    pub fn v_min(&self) -> f64 {
        self.v[self.i_min]
    }

    pub fn min_index(&self) -> usize {
        self.i_min
    }

    /// Potential at the outermost lattice node; the top of the bound spectrum.
    pub fn threshold(&self) -> f64 {
        *self.v.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    #[inline]
    fn q(&self, i: usize, e: f64) -> f64 {
        (self.v[i] - e) / self.kinetic
    }

    /// First node from which integration is numerically stable.
    pub(crate) fn first_node(&self, e: f64) -> usize {
        let mut i = self.start;
        while i + 2 < self.len() {
            let h = self.lattice.step_after(i);
            if self.q(i, e) * h * h <= MAX_KAPPA_STEP * MAX_KAPPA_STEP {
                return i;
            }
            i += 1;
        }
        self.start
    }

    /// Last node with V < E (outer classical turning point), if any.
    pub(crate) fn outer_turning_index(&self, e: f64) -> Option<usize> {
        if e <= self.v_min() {
            return None;
        }
        let idx = if self.monotone_tail {
            self.i_min + self.v[self.i_min..].partition_point(|&v| v < e) - 1
        } else {
            (self.i_min..self.len()).rev().find(|&i| self.v[i] < e)?
        };
        Some(idx)
    }

    /// Matching node and box end for a bound-state energy.
    ///
    /// The box extends until the solution has decayed by `TAIL_DECAY`
    /// e-folds (or the lattice ends), and stops early if the step no longer
    /// resolves the decay length. A fixed multiple of x_outer is not enough
    /// near threshold, where the vdW tail decays slowly.
    pub(crate) fn frame(&self, e: f64) -> Result<ShotFrame> {
        let last = self.len() - 1;
        let Some(m) = self.outer_turning_index(e) else {
            return Err(Error::Domain(format!(
                "energy {e:e} Hz lies below the potential minimum"
            )));
        };
        if m + 3 >= last {
            return Ok(ShotFrame {
                matching: last.saturating_sub(3).max(self.start + 2),
                end: last,
            });
        }
        let lat = &self.lattice;
        let mut decay = 0.0;
        let mut i = m;
        while i < last {
            let h = lat.step_after(i);
            let kappa = self.q(i + 1, e).max(0.0).sqrt();
            if kappa * h > 2.0 && i > m + 2 {
                break;
            }
            decay += kappa * h;
            i += 1;
            if decay >= TAIL_DECAY {
                break;
            }
        }
        Ok(ShotFrame {
            matching: m.max(self.start + 2),
            end: i.max(m + 3),
        })
    }

    /// Integrates outward from the wall through node `to` (inclusive) and
    /// returns the number of sign changes. `psi` is indexed by lattice node.
    pub(crate) fn outward(&self, e: f64, to: usize, psi: &mut [f64]) -> (usize, usize) {
        let first = self.first_node(e);
        for p in psi[self.start..=first].iter_mut() {
            *p = 0.0;
        }
        if to <= first {
            return (first, 0);
        }
        psi[first + 1] = SEED;
        let lat = &self.lattice;
        for i in first + 1..to {
            let h = lat.step_after(i);
            let hb = lat.step_before(i);
            let back = if hb < 0.75 * h { i.saturating_sub(2).max(first) } else { i - 1 };
            let h2 = h * h / 12.0;
            let next = (2.0 * (1.0 + 5.0 * h2 * self.q(i, e)) * psi[i]
                - (1.0 - h2 * self.q(back, e)) * psi[back])
                / (1.0 - h2 * self.q(i + 1, e));
            psi[i + 1] = next;
            if next.abs() > RESCALE_ABOVE {
                for p in psi[first..=i + 1].iter_mut() {
                    *p /= RESCALE_ABOVE;
                }
            }
        }
        (first, count_sign_changes(&psi[first..=to]))
    }

    /// Integrates inward from a Dirichlet end at `end` down to node `to`.
    pub(crate) fn inward(&self, e: f64, end: usize, to: usize, psi: &mut [f64]) {
        let lat = &self.lattice;
        psi[end] = 0.0;
        psi[end - 1] = SEED;
        let mut i = end - 1;
        while i > to {
            let h = lat.step_after(i);
            let hb = lat.step_before(i);
            let h2 = h * h / 12.0;
            let lift = 2.0 * (1.0 + 5.0 * h2 * self.q(i, e)) * psi[i]
                - (1.0 - h2 * self.q(i + 1, e)) * psi[i + 1];
            if hb < 0.75 * h && i >= 2 {
                // coarse step lands on node i - 2; fill node i - 1 from the
                // fine Numerov relation centred on it
                let far = lift / (1.0 - h2 * self.q(i - 2, e));
                psi[i - 2] = far;
                let f2 = hb * hb / 12.0;
                psi[i - 1] = ((1.0 - f2 * self.q(i - 2, e)) * far + (1.0 - f2 * self.q(i, e)) * psi[i])
                    / (2.0 * (1.0 + 5.0 * f2 * self.q(i - 1, e)));
                i -= 2;
            } else {
                psi[i - 1] = lift / (1.0 - h2 * self.q(i - 1, e));
                i -= 1;
            }
            if psi[i].abs() > RESCALE_ABOVE {
                for p in psi[i..=end].iter_mut() {
                    *p /= RESCALE_ABOVE;
                }
            }
        }
    }

    /// Number of box eigenvalues below `e` (Sturm count of the outward
    /// solution on the bound-state frame for `e`).
    pub(crate) fn count_below(&self, e: f64, psi: &mut [f64]) -> usize {
        if e >= self.threshold() {
            return self.threshold_count(psi);
        }
        match self.frame(e) {
            Ok(frame) => self.outward(e, frame.end, psi).1,
            Err(_) => 0,
        }
    }

    /// Node count of the threshold-energy solution, plus one if it is
    /// heading for a crossing beyond the lattice.
    pub(crate) fn threshold_count(&self, psi: &mut [f64]) -> usize {
        let e = self.threshold();
        let last = self.len() - 1;
        let (_, nodes) = self.outward(e, last, psi);
        let tail = psi[last];
        let slope = psi[last] - psi[last - 1];
        if tail != 0.0 && tail.signum() != slope.signum() && slope != 0.0 {
            nodes + 1
        } else {
            nodes
        }
    }

    /// Log-ratio mismatch of outward and inward solutions at the matching
    /// node; zero at a (discrete) eigenvalue.
    pub(crate) fn mismatch(&self, e: f64, frame: ShotFrame, out: &mut [f64], inw: &mut [f64]) -> f64 {
        let m = frame.matching;
        self.outward(e, m + 1, out);
        self.inward(e, frame.end, m, inw);
        out[m + 1] / out[m] - inw[m + 1] / inw[m]
    }
}

pub(crate) fn count_sign_changes(psi: &[f64]) -> usize {
    let mut count = 0;
    let mut last_sign = 0.0;
    for &p in psi {
        if p != 0.0 {
            let s = p.signum();
            if last_sign != 0.0 && s != last_sign {
                count += 1;
            }
            last_sign = s;
        }
    }
    count
}
