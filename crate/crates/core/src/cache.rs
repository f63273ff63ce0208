//! On-disk eigenstate cache.
//!
//! Layout: `<root>/<key>/index.json` plus one `<id>.f64` file per state,
//! where `<key>` is the hex SHA-256 of the canonical JSON of the atom
//! parameters, grid policy, internal-state label and format version. Each
//! state file is the raw ψ samples as little-endian IEEE-754 doubles, one
//! per lattice node starting at the index entry's `start`. The index also
//! stores the SHA-256 of every state file; any mismatch removes the whole
//! entry directory and reports [`Error::CacheCorrupt`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eigensolver::{LevelSet, Normalization, StateKind, TranslationalState};
use crate::error::{Error, Result};
use crate::grid::GridPolicy;
use crate::model::AtomParams;
use crate::potential::StateLabel;
use crate::system::AtomSystem;

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct KeyMaterial<'a> {
    format: u32,
    atom: &'a AtomParams,
    policy: &'a GridPolicy,
    state: StateLabel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    kind: StateKind,
    nu: Option<usize>,
    energy: f64,
    norm: Normalization,
    start: usize,
    len: usize,
    x_outer: Option<f64>,
    phase: Option<f64>,
    sha256: String,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Index {
    format: u32,
    lattice_len: usize,
    states: BTreeMap<String, Entry>,
}

/// Hit and miss counters of one cache handle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CacheStats {
    pub hits: usize,
    pub misses: usize,
}

#[derive(Debug)]
pub struct StateCache {
    root: PathBuf,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

fn bound_id(nu: usize) -> String {
    format!("nu_{nu:05}")
}

fn free_id(e: f64) -> String {
    format!("free_{:016x}", e.to_bits())
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl StateCache {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
        }
    }

    /// Content hash identifying one discretized potential.
    pub fn key(atom: &AtomParams, policy: &GridPolicy, label: StateLabel) -> String {
        let material = KeyMaterial {
            format: FORMAT_VERSION,
            atom,
            policy,
            state: label,
        };
        digest(&serde_json::to_vec(&material).expect("key material serializes"))
    }

    pub fn entry_dir(&self, sys: &AtomSystem, label: StateLabel) -> PathBuf {
        self.root.join(Self::key(&sys.atom, &sys.policy, label))
    }

    fn invalidate(&self, dir: &Path, why: String) -> Error {
        log::warn!("invalidating cache entry {}: {why}", dir.display());
        let _ = fs::remove_dir_all(dir);
        Error::CacheCorrupt(format!("{} ({why}); entry removed", dir.display()))
    }

    fn load_index(&self, dir: &Path, lattice_len: usize) -> Result<Index> {
        let path = dir.join("index.json");
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Ok(Index {
                    format: FORMAT_VERSION,
                    lattice_len,
                    states: BTreeMap::new(),
                })
            }
            Err(e) => return Err(e.into()),
        };
        let index: Index = serde_json::from_str(&text).map_err(|e| self.invalidate(dir, format!("unreadable index: {e}")))?;
        if index.format != FORMAT_VERSION || index.lattice_len != lattice_len {
            return Err(self.invalidate(dir, "index does not match the current lattice".into()));
        }
        Ok(index)
    }

    fn store_index(&self, dir: &Path, index: &Index) -> Result<()> {
        let tmp = dir.join("index.json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(index)?)?;
        fs::rename(tmp, dir.join("index.json"))?;
        Ok(())
    }

    fn read_state(&self, sys: &AtomSystem, dir: &Path, id: &str, entry: &Entry) -> Result<TranslationalState> {
        let bytes = fs::read(dir.join(format!("{id}.f64"))).map_err(|e| self.invalidate(dir, format!("{id}: {e}")))?;
        if bytes.len() != 8 * entry.len || digest(&bytes) != entry.sha256 {
            return Err(self.invalidate(dir, format!("{id}: checksum or length mismatch")));
        }
        if entry.start + entry.len > sys.lattice().len() {
            return Err(self.invalidate(dir, format!("{id}: support exceeds lattice")));
        }
        let psi = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(TranslationalState {
            kind: entry.kind,
            nu: entry.nu,
            energy: entry.energy,
            norm: entry.norm,
            start: entry.start,
            psi,
            lattice: sys.lattice().clone(),
            x_outer: entry.x_outer,
            phase: entry.phase,
        })
    }

    fn write_state(&self, dir: &Path, id: &str, state: &TranslationalState) -> Result<Entry> {
        let bytes: Vec<u8> = state.psi.iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(dir.join(format!("{id}.f64")), &bytes)?;
        Ok(Entry {
            kind: state.kind,
            nu: state.nu,
            energy: state.energy,
            norm: state.norm,
            start: state.start,
            len: state.psi.len(),
            x_outer: state.x_outer,
            phase: state.phase,
            sha256: digest(&bytes),
        })
    }

    /// Bound levels `lo..=hi`, solving and storing whatever is missing.
    pub fn bound(&self, sys: &AtomSystem, label: StateLabel, lo: usize, hi: usize) -> Result<LevelSet> {
        if hi < lo {
            return Err(Error::Parameter(format!("empty level range {lo}..={hi}")));
        }
        let dir = self.entry_dir(sys, label);
        let mut index = self.load_index(&dir, sys.lattice().len())?;
        let missing: Vec<usize> = (lo..=hi).filter(|nu| !index.states.contains_key(&bound_id(*nu))).collect();
        let mut fresh = BTreeMap::new();
        if let (Some(&a), Some(&b)) = (missing.first(), missing.last()) {
            fs::create_dir_all(&dir)?;
            let solved = sys.solver(label).solve_range(a, b)?;
            for s in solved.bound {
                let nu = s.nu.expect("bound states carry nu");
                let id = bound_id(nu);
                // levels already on disk win, so reruns stay bit-stable
                if !index.states.contains_key(&id) {
                    index.states.insert(id.clone(), self.write_state(&dir, &id, &s)?);
                    fresh.insert(nu, s);
                }
            }
            self.store_index(&dir, &index)?;
        }
        self.misses.fetch_add(missing.len(), Ordering::Relaxed);
        self.hits.fetch_add(hi + 1 - lo - missing.len(), Ordering::Relaxed);
        let mut states = Vec::with_capacity(hi + 1 - lo);
        for nu in lo..=hi {
            match fresh.remove(&nu) {
                Some(s) => states.push(s),
                None => {
                    let id = bound_id(nu);
                    states.push(self.read_state(sys, &dir, &id, &index.states[&id])?);
                }
            }
        }
        Ok(LevelSet::bound_only(Some(label), states))
    }

    /// Free states at the given energies (Hz) with their quadrature weights.
    pub fn free(&self, sys: &AtomSystem, label: StateLabel, energies: &[f64], weights: &[f64]) -> Result<LevelSet> {
        if energies.len() != weights.len() {
            return Err(Error::Parameter("free energies and weights differ in length".into()));
        }
        let dir = self.entry_dir(sys, label);
        let mut index = self.load_index(&dir, sys.lattice().len())?;
        let solver = sys.solver(label);
        let mut set = LevelSet::bound_only(Some(label), Vec::new());
        let mut dirty = false;
        for (&e, &w) in energies.iter().zip(weights) {
            let id = free_id(e);
            let state = match index.states.get(&id) {
                Some(entry) if entry.energy.to_bits() == e.to_bits() => {
                    self.hits.fetch_add(1, Ordering::Relaxed);
                    self.read_state(sys, &dir, &id, entry)?
                }
                Some(_) => return Err(self.invalidate(&dir, format!("{id}: stored energy differs from its key"))),
                None => {
                    self.misses.fetch_add(1, Ordering::Relaxed);
                    fs::create_dir_all(&dir)?;
                    let s = solver.solve_free(e, None)?;
                    index.states.insert(id.clone(), self.write_state(&dir, &id, &s)?);
                    dirty = true;
                    s
                }
            };
            set.free.push(state);
            set.free_weights.push(w);
        }
        if dirty {
            self.store_index(&dir, &index)?;
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_depends_on_every_input() {
        let atom = AtomParams::cesium_silica();
        let policy = GridPolicy::default();
        let base = StateCache::key(&atom, &policy, StateLabel::Ground);
        assert_eq!(base.len(), 64);
        assert_eq!(base, StateCache::key(&atom, &policy, StateLabel::Ground));
        assert_ne!(base, StateCache::key(&atom, &policy, StateLabel::Excited));
        assert_ne!(base, StateCache::key(&atom, &policy.refined(), StateLabel::Ground));
        let mut heavier = atom;
        heavier.mass_amu += 1.0;
        assert_ne!(base, StateCache::key(&heavier, &policy, StateLabel::Ground));
    }

    #[test]
    fn ids_are_stable() {
        assert_eq!(bound_id(7), "nu_00007");
        assert_eq!(free_id(1.0), "free_3ff0000000000000");
    }
}
