//! Piecewise-uniform position lattice and quadrature on it.
//!
//! A lattice is anchored at `inner_end` and extends inward with the fine
//! step down to the lowest wall in play, and outward with steps that at most
//! double from one segment to the next. Every state solved under one policy
//! lives on a contiguous slice of the same lattice, so products of states
//! from different potentials are formed node by node.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Discretization policy; part of the eigenstate cache key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridPolicy {
    /// End of the finely sampled inner region, nm.
    pub inner_end_nm: f64,
    /// Step inside the inner region, nm.
    pub inner_step_nm: f64,
    /// Minimum sampling density of the local de Broglie wavelength outside
    /// the inner region.
    pub points_per_wavelength: f64,
    /// Number of steps per outer segment.
    pub segment_steps: usize,
    /// Highest energy (Hz) the outer lattice must resolve.
    pub energy_ceiling_hz: f64,
    /// Outer extent of the lattice, nm.
    pub max_extent_nm: f64,
}

impl Default for GridPolicy {
    fn default() -> Self {
        Self {
            inner_end_nm: 2.0,
            inner_step_nm: 5e-5,
            points_per_wavelength: 60.0,
            segment_steps: 64,
            energy_ceiling_hz: 100e6,
            max_extent_nm: 2.0e4,
        }
    }
}

impl GridPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_end_nm > 0.0) {
            return param("inner_end_nm must be positive");
        }
        if !(self.inner_step_nm > 0.0 && self.inner_step_nm < self.inner_end_nm) {
            return param("inner_step_nm must be positive and below inner_end_nm");
        }
        if !(self.points_per_wavelength >= 12.0) {
            return param("points_per_wavelength must be at least 12");
        }
        if self.segment_steps < 4 {
            return param("segment_steps must be at least 4");
        }
        if !(self.energy_ceiling_hz >= 0.0) {
            return param("energy_ceiling_hz must be non-negative");
        }
        if !(self.max_extent_nm > self.inner_end_nm) {
            return param("max_extent_nm must exceed inner_end_nm");
        }
        Ok(())
    }

    /// Same policy with every step halved.
    pub fn refined(&self) -> Self {
        Self {
            inner_step_nm: 0.5 * self.inner_step_nm,
            points_per_wavelength: 2.0 * self.points_per_wavelength,
            segment_steps: 2 * self.segment_steps,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    /// Index of the first node of the segment.
    pub first: usize,
    pub x0: f64,
    pub step: f64,
}

/// Ordered nodes grouped into uniform segments. Consecutive segments share
/// their boundary node; a segment's step is one or two times the previous.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    nodes: Vec<f64>,
    segments: Vec<Segment>,
    /// Segment index of every node, the boundary node belonging to the
    /// segment it starts.
    seg_of: Vec<u32>,
}

impl Lattice {
    /// Single uniform segment from `x0` with `n` steps of size `h`.
    pub fn uniform(x0: f64, h: f64, n: usize) -> Result<Self> {
        if !(h > 0.0) || n < 2 {
            return param("uniform lattice needs h > 0 and at least two steps");
        }
        Self::from_segments(vec![(x0, h, n)])
    }

    /// Builds a lattice from `(x0, step, steps)` triples; each segment must
    /// start where the previous ended.
    fn from_segments(specs: Vec<(f64, f64, usize)>) -> Result<Self> {
        let mut nodes: Vec<f64> = Vec::new();
        let mut segments = Vec::new();
        let mut seg_of = Vec::new();
        for (s, &(x0, h, n)) in specs.iter().enumerate() {
            let first = if s == 0 { 0 } else { nodes.len() - 1 };
            if s > 0 {
                let prev = segments.last().map(|p: &Segment| p.step).unwrap_or(h);
                let ratio = h / prev;
                if !((ratio - 1.0).abs() < 1e-9 || (ratio - 2.0).abs() < 1e-9) {
                    return Err(Error::Parameter(format!("step ratio {ratio} not 1 or 2")));
                }
                let last: f64 = *nodes.last().unwrap();
                if (last - x0).abs() > 1e-9 * x0.abs().max(1.0) {
                    return Err(Error::Parameter("segments are not contiguous".into()));
                }
                seg_of[first] = s as u32;
            }
            segments.push(Segment { first, x0, step: h });
            let start = if s == 0 { 0 } else { 1 };
            for j in start..=n {
                nodes.push(x0 + j as f64 * h);
                seg_of.push(s as u32);
            }
        }
        Ok(Self {
            nodes,
            segments,
            seg_of,
        })
    }

    /// Builds the lattice for `policy`.
    ///
    /// `x_lo` is the smallest position that must be covered (lowest wall);
    /// `magnitude(x)` bounds |V| beyond x for every potential that will use
    /// the lattice; `kinetic` is `K` in Hz·nm².
    pub fn build(
        policy: &GridPolicy,
        kinetic: f64,
        x_lo: f64,
        magnitude: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        policy.validate()?;
        if !(x_lo >= 0.0 && x_lo < policy.inner_end_nm) {
            return param(format!(
                "lowest wall {x_lo} nm must lie in [0, inner_end_nm = {})",
                policy.inner_end_nm
            ));
        }
        let h0 = policy.inner_step_nm;
        let n_inner = ((policy.inner_end_nm - x_lo) / h0).floor() as usize;
        let x_start = policy.inner_end_nm - n_inner as f64 * h0;
        let mut specs = vec![(x_start, h0, n_inner)];

        let wavenumber = |x: f64| ((magnitude(x) + policy.energy_ceiling_hz) / kinetic).sqrt();
        let desired = |x: f64| 2.0 * std::f64::consts::PI / (policy.points_per_wavelength * wavenumber(x));
        if desired(policy.inner_end_nm) < h0 * (1.0 - 1e-12) {
            return Err(Error::Parameter(format!(
                "inner step {h0} nm does not resolve the wavelength at inner_end ({} nm wanted)",
                desired(policy.inner_end_nm)
            )));
        }
        let mut x = policy.inner_end_nm;
        let mut h = h0;
        while x < policy.max_extent_nm {
            if desired(x) >= 2.0 * h {
                h *= 2.0;
            }
            let n = policy.segment_steps;
            specs.push((x, h, n));
            x += n as f64 * h;
        }
        Self::from_segments(specs)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn x(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Step from node `i` to node `i + 1`.
    pub fn step_after(&self, i: usize) -> f64 {
        self.segments[self.seg_of[i] as usize].step
    }

    /// Step from node `i - 1` to node `i`.
    pub fn step_before(&self, i: usize) -> f64 {
        self.segments[self.seg_of[i - 1] as usize].step
    }

    /// Smallest step anywhere on the lattice.
    pub fn finest_step(&self) -> f64 {
        self.segments.iter().map(|s| s.step).fold(f64::INFINITY, f64::min)
    }

    /// First node index with x ≥ `x`, or `len()` if none.
    pub fn index_at_or_above(&self, x: f64) -> usize {
        self.nodes.partition_point(|&n| n < x)
    }

    /// Composite Simpson integral of `f(i)` over nodes `start..=end`.
    ///
    /// Each uniform piece uses Simpson's rule, closing an odd interval count
    /// with the 3/8 rule (or the trapezoid for a single interval).
    pub fn integrate<T, F>(&self, start: usize, end: usize, f: F) -> T
    where
        T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
        F: Fn(usize) -> T,
    {
        let mut total = T::default();
        if end <= start {
            return total;
        }
        for (s, seg) in self.segments.iter().enumerate() {
            let seg_end = self
                .segments
                .get(s + 1)
                .map(|n| n.first)
                .unwrap_or(self.nodes.len() - 1);
            let a = seg.first.max(start);
            let b = seg_end.min(end);
            if b > a {
                total = total + uniform_rule(a, b, seg.step, &f);
            }
        }
        total
    }
}

fn uniform_rule<T, F>(a: usize, b: usize, h: f64, f: &F) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
    F: Fn(usize) -> T,
{
    let n = b - a;
    match n {
        0 => T::default(),
        1 => (f(a) + f(b)) * (0.5 * h),
        _ if n % 2 == 0 => simpson(a, b, h, f),
        _ => {
            let head = if n > 3 { simpson(a, b - 3, h, f) } else { T::default() };
            let c = b - 3;
            let tail = (f(c) + f(c + 1) * 3.0 + f(c + 2) * 3.0 + f(b)) * (3.0 * h / 8.0);
            head + tail
        }
    }
}

fn simpson<T, F>(a: usize, b: usize, h: f64, f: &F) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
    F: Fn(usize) -> T,
{
    let mut odd = T::default();
    let mut even = T::default();
    let mut i = a + 1;
    while i < b {
        odd = odd + f(i);
        if i + 1 < b {
            even = even + f(i + 1);
        }
        i += 2;
    }
    (f(a) + f(b) + odd * 4.0 + even * 2.0) * (h / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vdw_lattice(policy: &GridPolicy) -> Lattice {
        Lattice::build(policy, 3.8e7, 0.02, |x| 3.09e12 / (x * x * x)).unwrap()
    }

    #[test]
    fn lattice_is_strictly_increasing_with_doubling_steps() {
        let lat = vdw_lattice(&GridPolicy::default());
        assert!(lat.nodes().windows(2).all(|w| w[1] > w[0]));
        for w in lat.segments().windows(2) {
            let r = w[1].step / w[0].step;
            assert!((r - 1.0).abs() < 1e-12 || (r - 2.0).abs() < 1e-12);
        }
        assert!(lat.x(0) > 0.02 - 5e-5 && lat.x(0) <= 0.02 + 1e-12);
        assert!(*lat.nodes().last().unwrap() >= 2.0e4);
    }

    #[test]
    fn steps_resolve_local_wavelength() {
        let policy = GridPolicy::default();
        let lat = vdw_lattice(&policy);
        for seg in &lat.segments()[1..] {
            let q = ((3.09e12 / seg.x0.powi(3) + policy.energy_ceiling_hz) / 3.8e7).sqrt();
            let lambda = 2.0 * std::f64::consts::PI / q;
            assert!(lambda / seg.step >= 12.0);
        }
    }

    #[test]
    fn rejects_coarse_inner_step() {
        let policy = GridPolicy {
            inner_step_nm: 0.1,
            ..GridPolicy::default()
        };
        assert!(Lattice::build(&policy, 3.8e7, 0.02, |x| 3.09e12 / (x * x * x)).is_err());
    }

    #[test]
    fn integrates_polynomials_exactly_across_segments() {
        let lat = vdw_lattice(&GridPolicy {
            max_extent_nm: 10.0,
            ..GridPolicy::default()
        });
        let end = lat.len() - 1;
        let xs = lat.nodes();
        let a = xs[0];
        let b = xs[end];
        // odd and even interval counts both appear as start varies
        for start in [0usize, 1, 2, 3] {
            let a = xs[start];
            let got: f64 = lat.integrate(start, end, |i| xs[i].powi(3));
            assert_relative_eq!(got, (b.powi(4) - a.powi(4)) / 4.0, max_relative = 1e-12);
        }
        let got: f64 = lat.integrate(0, end, |i| (xs[i]).sin());
        assert_relative_eq!(got, a.cos() - b.cos(), max_relative = 1e-8);
    }

    #[test]
    fn single_interval_uses_trapezoid() {
        let lat = Lattice::uniform(0.0, 0.5, 4).unwrap();
        let got: f64 = lat.integrate(1, 2, |i| lat.x(i));
        assert_relative_eq!(got, 0.5 * (0.5 + 1.0) * 0.5);
    }
}
