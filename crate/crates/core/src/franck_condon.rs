//! Overlap matrix elements `F_ab(k) = ⟨φ_a| e^{ikx} |φ_b⟩`.
//!
//! States of the two potentials live on one shared lattice, so the integrand
//! is formed node by node and integrated with the lattice's composite
//! Simpson rule over the intersection of the two supports.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolver::{LevelSet, Normalization, StateKind, TranslationalState};
use crate::error::{Error, Result};
use crate::grid::Lattice;

/// Identifies a row or column: a bound level by node count or a free level
/// by energy (Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LevelId {
    Bound(usize),
    Free(f64),
}

impl LevelId {
    pub fn of(state: &TranslationalState) -> Self {
        match (state.kind, state.nu) {
            (StateKind::Bound, Some(nu)) => LevelId::Bound(nu),
            _ => LevelId::Free(state.energy),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub value: Complex64,
    /// The supports did not intersect; `value` is zero.
    pub disjoint: bool,
}

fn shared_lattice(a: &TranslationalState, b: &TranslationalState) -> Result<Arc<Lattice>> {
    if Arc::ptr_eq(&a.lattice, &b.lattice) || a.lattice.nodes() == b.lattice.nodes() {
        Ok(a.lattice.clone())
    } else {
        Err(Error::Consistency(
            "states were solved on different lattices; build both level sets from one AtomSystem".into(),
        ))
    }
}

fn overlap_with<F>(a: &TranslationalState, b: &TranslationalState, weight: F) -> Result<Overlap>
where
    F: Fn(usize, f64) -> Complex64,
{
    let lat = shared_lattice(a, b)?;
    let lo = a.start.max(b.start);
    let hi = a.end().min(b.end());
    if hi <= lo + 1 {
        return Ok(Overlap {
            value: Complex64::new(0.0, 0.0),
            disjoint: true,
        });
    }
    let value = lat.integrate(lo, hi - 1, |i| weight(i, lat.x(i)) * (a.at(i) * b.at(i)));
    Ok(Overlap {
        value,
        disjoint: false,
    })
}

/// `⟨a| e^{ikx} |b⟩`.
pub fn overlap(a: &TranslationalState, b: &TranslationalState, k: f64) -> Result<Overlap> {
    overlap_with(a, b, |_, x| Complex64::from_polar(1.0, k * x))
}

/// `dF/dk = i ⟨a| x e^{ikx} |b⟩`.
pub fn overlap_k_derivative(a: &TranslationalState, b: &TranslationalState, k: f64) -> Result<Complex64> {
    Ok(overlap_with(a, b, |_, x| Complex64::new(0.0, x) * Complex64::from_polar(1.0, k * x))?.value)
}

/// Dense `F_ab(k)` with rows over excited levels and columns over ground
/// levels. Free entries carry the delta-of-energy normalization unscaled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FranckCondonMatrix {
    pub k: f64,
    pub rows: Vec<LevelId>,
    pub cols: Vec<LevelId>,
    pub row_norm: Vec<Normalization>,
    pub col_norm: Vec<Normalization>,
    /// Level energies, Hz.
    pub row_energies: Vec<f64>,
    pub col_energies: Vec<f64>,
    /// Row-major entries.
    pub entries: Vec<Complex64>,
    /// Pairs whose supports did not intersect.
    pub disjoint_pairs: usize,
}

impl FranckCondonMatrix {
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.cols.len() + col]
    }

    pub fn row_index(&self, id: LevelId) -> Option<usize> {
        self.rows.iter().position(|r| *r == id)
    }

    pub fn col_index(&self, id: LevelId) -> Option<usize> {
        self.cols.iter().position(|c| *c == id)
    }

    /// The matrix at `-k`, which for real states is the entry-wise conjugate.
    pub fn reversed(&self) -> Self {
        Self {
            k: -self.k,
            entries: self.entries.iter().map(|z| z.conj()).collect(),
            ..self.clone()
        }
    }

    /// Row with the largest `|F|²` in column `col`.
    pub fn dominant_row(&self, col: usize) -> Option<usize> {
        (0..self.rows.len()).max_by(|&i, &j| {
            self.get(i, col).norm_sqr().total_cmp(&self.get(j, col).norm_sqr())
        })
    }
}

/// Fills every (excited, ground) pair in parallel.
pub fn build_matrix(excited: &LevelSet, ground: &LevelSet, k: f64) -> Result<FranckCondonMatrix> {
    if excited.is_empty() || ground.is_empty() {
        return Err(Error::Parameter("Franck-Condon matrix needs non-empty level sets".into()));
    }
    let rows: Vec<&TranslationalState> = excited.states().collect();
    let cols: Vec<&TranslationalState> = ground.states().collect();
    let lat = shared_lattice(rows[0], cols[0])?;
    let lo = rows.iter().chain(cols.iter()).map(|s| s.start).min().unwrap_or(0);
    let hi = rows.iter().chain(cols.iter()).map(|s| s.end()).max().unwrap_or(0);
    let phase: Vec<Complex64> = (lo..hi).map(|i| Complex64::from_polar(1.0, k * lat.x(i))).collect();

    let filled = rows
        .par_iter()
        .map(|a| {
            cols.iter()
                .map(|b| overlap_with(a, b, |i, _| phase[i - lo]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let disjoint_pairs = filled.iter().flatten().filter(|o| o.disjoint).count();
    if disjoint_pairs > 0 {
        log::warn!("{disjoint_pairs} state pairs have disjoint supports; their overlaps are set to 0");
    }
    Ok(FranckCondonMatrix {
        k,
        rows: rows.iter().map(|s| LevelId::of(s)).collect(),
        cols: cols.iter().map(|s| LevelId::of(s)).collect(),
        row_norm: rows.iter().map(|s| s.norm).collect(),
        col_norm: cols.iter().map(|s| s.norm).collect(),
        row_energies: rows.iter().map(|s| s.energy).collect(),
        col_energies: cols.iter().map(|s| s.energy).collect(),
        entries: filled.into_iter().flatten().map(|o| o.value).collect(),
        disjoint_pairs,
    })
}
