//! Shared small utilities: axis-aligned boxes, lattice scans, seeded RNG.

use crate::error::{CoreError, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

/// Axis-aligned box `[min_k, max_k]` per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl BoxRegion {
    pub fn new(min: Vec<f64>, max: Vec<f64>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(CoreError::DimensionMismatch {
                expected: min.len(),
                got: max.len(),
            });
        }
        for (axis, (lo, hi)) in min.iter().zip(&max).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(CoreError::EmptyBox { axis });
            }
        }
        Ok(BoxRegion { min, max })
    }

    /// Centered cube `[-r, r]^n`.
    pub fn centered_cube(n: usize, r: f64) -> Self {
        BoxRegion {
            min: vec![-r; n],
            max: vec![r; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Radius of the smallest origin-centered Euclidean ball containing the box.
    pub fn circumradius(&self) -> f64 {
        let mut s = 0.0;
        for (lo, hi) in self.min.iter().zip(&self.max) {
            let m = lo.abs().max(hi.abs());
            s += m * m;
        }
        s.sqrt()
    }
}

/// Uniform lattice over a box with `pts` points per axis (pts ≥ 2).
/// Visits points in row-major order (last axis fastest).
pub fn lattice_points(region: &BoxRegion, pts: usize) -> Vec<Vec<f64>> {
    let n = region.dim();
    let pts = pts.max(2);
    let total = pts.pow(n as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    loop {
        let p: Vec<f64> = (0..n)
            .map(|k| {
                let t = idx[k] as f64 / (pts - 1) as f64;
                region.min[k] + t * (region.max[k] - region.min[k])
            })
            .collect();
        out.push(p);
        // increment mixed-radix counter, last axis fastest
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < pts {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Deterministic RNG from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_counts_and_endpoints() {
        let b = BoxRegion::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap();
        let pts = lattice_points(&b, 3);
        assert_eq!(pts.len(), 9);
        assert_eq!(pts[0], vec![0.0, -1.0]);
        assert_eq!(pts[8], vec![1.0, 1.0]);
    }

    #[test]
    fn degenerate_box_rejected() {
        assert!(BoxRegion::new(vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn slope_of_exact_line() {
        let x = [0.0, 1.0, 2.0];
        let y = [1.0, 3.0, 5.0];
        assert!((regression_slope(&x, &y) - 2.0).abs() < 1e-12);
    }
}
