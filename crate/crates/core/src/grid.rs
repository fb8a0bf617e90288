//! Rectangular grid functions.
//!
//! Values live on cell centers; the cell centers form the same row-major
//! lattice (last axis fastest) used by the sampled-space layer, so a grid
//! function and its `SampledCompact` share indexing. Integrals are
//! cell-volume weighted sums accumulated in index order for bit
//! reproducibility.

use crate::error::{CoreError, Result};
use crate::metric::graph::LatticeSpec;
use crate::sample::{SampleMetric, SampledCompact};
use crate::util::BoxRegion;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryPolicy {
    /// Clamp indices at the faces; difference stencils fall back to
    /// one-sided there (exact on affine data).
    Clamp,
    /// Wrap indices around.
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub counts: Vec<usize>,
    pub boundary: BoundaryPolicy,
}

impl GridSpec {
    pub fn new(
        origin: Vec<f64>,
        spacing: Vec<f64>,
        counts: Vec<usize>,
        boundary: BoundaryPolicy,
    ) -> Result<Self> {
        if origin.len() != spacing.len() || origin.len() != counts.len() {
            return Err(CoreError::GridMismatch(
                "origin, spacing and counts must share a dimension".into(),
            ));
        }
        for (axis, (&s, &c)) in spacing.iter().zip(&counts).enumerate() {
            if !(s > 0.0) || !s.is_finite() || c == 0 {
                return Err(CoreError::EmptyBox { axis });
            }
        }
        Ok(GridSpec {
            origin,
            spacing,
            counts,
            boundary,
        })
    }

    /// Grid over a box with the given cell counts; cell centers sit half a
    /// cell inside the box faces.
    pub fn over_box(region: &BoxRegion, counts: Vec<usize>, boundary: BoundaryPolicy) -> Result<Self> {
        let n = region.dim();
        if counts.len() != n {
            return Err(CoreError::DimensionMismatch {
                expected: n,
                got: counts.len(),
            });
        }
        let mut spacing = Vec::with_capacity(n);
        let mut origin = Vec::with_capacity(n);
        for k in 0..n {
            let h = (region.max[k] - region.min[k]) / counts[k] as f64;
            spacing.push(h);
            origin.push(region.min[k] + 0.5 * h);
        }
        Self::new(origin, spacing, counts, boundary)
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<i64> {
        let n = self.dim();
        let mut out = vec![0i64; n];
        for k in (0..n).rev() {
            out[k] = (flat % self.counts[k]) as i64;
            flat /= self.counts[k];
        }
        out
    }

    pub fn flat_index(&self, multi: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for (k, &c) in multi.iter().enumerate() {
            if c < 0 || c as usize >= self.counts[k] {
                return None;
            }
            idx = idx * self.counts[k] + c as usize;
        }
        Some(idx)
    }

    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(k, &c)| self.origin[k] + c as f64 * self.spacing[k])
            .collect()
    }

    /// Neighbor index along `axis` shifted by `delta`, following the
    /// boundary policy. Returns the clamped/wrapped flat index.
    pub fn shifted(&self, multi: &[i64], axis: usize, delta: i64) -> usize {
        let mut m = multi.to_vec();
        let c = self.counts[axis] as i64;
        m[axis] = match self.boundary {
            BoundaryPolicy::Clamp => (m[axis] + delta).clamp(0, c - 1),
            BoundaryPolicy::Periodic => (m[axis] + delta).rem_euclid(c),
        };
        self.flat_index(&m).expect("policy keeps index in range")
    }

    pub fn to_lattice(&self) -> LatticeSpec {
        LatticeSpec {
            origin: self.origin.clone(),
            spacing: self.spacing.clone(),
            counts: self.counts.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(CoreError::GridMismatch(format!(
                "expected {} values, got {}",
                spec.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinitePoint);
        }
        Ok(GridFunction { spec, values })
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        let n = spec.len();
        GridFunction {
            spec,
            values: vec![c; n],
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..spec.len())
            .map(|i| f(&spec.cell_center(i)))
            .collect();
        Self::new(spec, values)
    }

    /// Smoothed step across the hyperplane `x_axis = position`:
    /// 0 below, 1 above, with a sine ramp of the given full width.
    pub fn mollified_step(spec: GridSpec, axis: usize, position: f64, width: f64) -> Result<Self> {
        Self::from_fn(spec, |x| smooth_step((x[axis] - position) / width))
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.spec == other.spec
    }

    /// `∫ |u − v| dλ` over masked cells (all cells when mask is `None`).
    pub fn l1_distance(&self, other: &GridFunction, mask: Option<&[bool]>) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(CoreError::GridMismatch("grids differ".into()));
        }
        let vol = self.spec.cell_volume();
        let mut s = 0.0;
        for i in 0..self.values.len() {
            if mask.map_or(true, |m| m[i]) {
                s += (self.values[i] - other.values[i]).abs();
            }
        }
        Ok(s * vol)
    }

    /// `‖u − v‖_{L^q}` over masked cells.
    pub fn lq_distance(&self, other: &GridFunction, q: f64, mask: Option<&[bool]>) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(CoreError::GridMismatch("grids differ".into()));
        }
        let vol = self.spec.cell_volume();
        let mut s = 0.0;
        for i in 0..self.values.len() {
            if mask.map_or(true, |m| m[i]) {
                s += (self.values[i] - other.values[i]).abs().powf(q);
            }
        }
        Ok((s * vol).powf(1.0 / q))
    }

    /// The sampled-space view: cell centers with Lebesgue cell weights.
    pub fn to_sample(&self, name: &str, metric: SampleMetric) -> Result<SampledCompact> {
        SampledCompact::from_lattice(name, self.spec.to_lattice(), metric)
    }

    /// Binary file: one JSON header line, then the row-major values as
    /// little-endian f64.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        let header = serde_json::to_string(&self.spec)?;
        f.write_all(header.as_bytes())?;
        f.write_all(b"\n")?;
        for v in &self.values {
            f.write_all(&v.to_bits().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path)?;
        let mut buf = Vec::new();
        f.read_to_end(&mut buf)?;
        let nl = buf
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| CoreError::FileFormat("missing grid header line".into()))?;
        let spec: GridSpec = serde_json::from_slice(&buf[..nl])?;
        let payload = &buf[nl + 1..];
        if payload.len() != spec.len() * 8 {
            return Err(CoreError::FileFormat(format!(
                "payload holds {} bytes, expected {}",
                payload.len(),
                spec.len() * 8
            )));
        }
        let values: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect();
        Self::new(spec, values)
    }

    /// CSV rows `x_1,…,x_n,u` for small grids.
    pub fn to_csv(&self) -> String {
        let n = self.spec.dim();
        let mut out = String::new();
        for k in 1..=n {
            out.push_str(&format!("x{k},"));
        }
        out.push_str("u\n");
        for i in 0..self.values.len() {
            for v in self.spec.cell_center(i) {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{}\n", self.values[i]));
        }
        out
    }
}

/// `0` for `ξ ≤ −1/2`, `1` for `ξ ≥ 1/2`, sine ramp between.
pub fn smooth_step(xi: f64) -> f64 {
    if xi <= -0.5 {
        0.0
    } else if xi >= 0.5 {
        1.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * xi).sin())
    }
}

/// All-cells mask.
pub fn full_mask(spec: &GridSpec) -> Vec<bool> {
    vec![true; spec.len()]
}

/// Mask of cells whose centers lie in the sub-box.
pub fn box_mask(spec: &GridSpec, region: &BoxRegion) -> Vec<bool> {
    (0..spec.len())
        .map(|i| region.contains(&spec.cell_center(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_2d(n: usize) -> GridSpec {
        let region = BoxRegion::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        GridSpec::over_box(&region, vec![n, n], BoundaryPolicy::Clamp).unwrap()
    }

    #[test]
    fn indexing_roundtrip() {
        let spec = spec_2d(8);
        for i in [0usize, 5, 37, 63] {
            let m = spec.multi_index(i);
            assert_eq!(spec.flat_index(&m), Some(i));
        }
        assert_eq!(spec.len(), 64);
    }

    #[test]
    fn cell_centers_sit_inside_the_box() {
        let spec = spec_2d(4);
        let c0 = spec.cell_center(0);
        assert!((c0[0] - 0.125).abs() < 1e-15);
        let clast = spec.cell_center(15);
        assert!((clast[0] - 0.875).abs() < 1e-15);
    }

    #[test]
    fn smooth_step_profile() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(1.0), 1.0);
        assert!((smooth_step(0.0) - 0.5).abs() < 1e-15);
        // L¹ gap to the sharp step per unit width: 1/2 − 1/π
        let n = 20000;
        let mut s = 0.0;
        for i in 0..n {
            let xi = -0.5 + (i as f64 + 0.5) / n as f64;
            let sharp = if xi >= 0.0 { 1.0 } else { 0.0 };
            s += (smooth_step(xi) - sharp).abs() / n as f64;
        }
        let expect = 0.5 - 1.0 / std::f64::consts::PI;
        assert!((s - expect).abs() < 1e-4, "{s} vs {expect}");
    }

    #[test]
    fn file_roundtrip_preserves_bits() {
        let spec = spec_2d(6);
        let g = GridFunction::from_fn(spec, |x| (x[0] * 7.3).sin() * x[1]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.ccgrid");
        g.save(&p).unwrap();
        let back = GridFunction::load(&p).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn l1_distance_of_steps() {
        let region = BoxRegion::new(vec![0.0], vec![1.0]).unwrap();
        let spec = GridSpec::over_box(&region, vec![2048], BoundaryPolicy::Clamp).unwrap();
        let sharp = GridFunction::from_fn(spec.clone(), |x| if x[0] >= 0.5 { 1.0 } else { 0.0 })
            .unwrap();
        let w = 0.125;
        let moll = GridFunction::mollified_step(spec, 0, 0.5, w).unwrap();
        let d = moll.l1_distance(&sharp, None).unwrap();
        let expect = w * (0.5 - 1.0 / std::f64::consts::PI);
        assert!((d - expect).abs() < 2e-4, "{d} vs {expect}");
    }

    #[test]
    fn shifted_respects_policies() {
        let region = BoxRegion::new(vec![0.0], vec![1.0]).unwrap();
        let clamp = GridSpec::over_box(&region, vec![4], BoundaryPolicy::Clamp).unwrap();
        assert_eq!(clamp.shifted(&[0], 0, -1), 0);
        assert_eq!(clamp.shifted(&[3], 0, 1), 3);
        let per = GridSpec::over_box(&region, vec![4], BoundaryPolicy::Periodic).unwrap();
        assert_eq!(per.shifted(&[0], 0, -1), 3);
        assert_eq!(per.shifted(&[3], 0, 1), 0);
    }
}
