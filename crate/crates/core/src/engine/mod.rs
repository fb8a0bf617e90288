//! The compactness extraction engine.
//!
//! Executes, on finite data, the staged argument behind the convergence
//! theorem for BV-bounded sequences under varying metrics: hypothesis
//! audit, 5r-covering of the current compact, selection of enough shrunken
//! balls to capture a fixed mass fraction, discovery of the index from
//! which the two-metric ball inclusions hold, finite ball-mean selection,
//! measure-decay recursion with halved oscillation budgets, and the double
//! diagonalization that produces the final subsequence, limit candidate
//! and Cauchy-modulus certificates.

pub mod audit;
pub mod modulus;
pub mod recurse;
pub mod stage;

pub use audit::{hypothesis_audit, AuditReport, HypothesisOutcome};
pub use modulus::cauchy_modulus;
pub use recurse::{diagonalize, recursive_exhaust, DiagonalReport, RecursionResult};
pub use stage::{stage_extract, StageRecord};

use crate::error::{CoreError, Result};
use crate::sample::{SampleMetric, SampledCompact};
use serde::{Deserialize, Serialize};

/// Poincaré hypothesis shape: either the power law `C_P r^δ` or a general
/// modulus `f(r) → 0` given as an increasing table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum PoincareForm {
    PowerLaw { c_p: f64, delta: f64 },
    Modulus { table: Vec<(f64, f64)> },
}

impl PoincareForm {
    /// Largest admissible covering radius delivering oscillation ≤ ε:
    /// `ε^{1/δ}` for the power law, `sup{r : f(r) ≤ ε}` for a modulus.
    pub fn radius_for(&self, epsilon: f64) -> f64 {
        match self {
            PoincareForm::PowerLaw { delta, .. } => epsilon.powf(1.0 / delta),
            PoincareForm::Modulus { table } => {
                let mut best: f64 = 0.0;
                for &(r, f) in table {
                    if f <= epsilon {
                        best = best.max(r);
                    }
                }
                best
            }
        }
    }

    /// The modulus value at radius `r` (`C_P r^δ` for the power law, table
    /// interpolation otherwise).
    pub fn value(&self, r: f64) -> f64 {
        match self {
            PoincareForm::PowerLaw { c_p, delta } => c_p * r.powf(*delta),
            PoincareForm::Modulus { table } => {
                if table.is_empty() {
                    return f64::INFINITY;
                }
                let mut prev = table[0];
                if r <= prev.0 {
                    return prev.1;
                }
                for &(rr, ff) in &table[1..] {
                    if r <= rr {
                        let t = (r - prev.0) / (rr - prev.0);
                        return prev.1 * (1.0 - t) + ff * t;
                    }
                    prev = (rr, ff);
                }
                prev.1
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Oscillation budget ε for the first stage.
    pub epsilon: f64,
    /// Norm exponent q ≥ 1.
    pub q: f64,
    pub poincare: PoincareForm,
    /// Ball dilation α ≥ 1 of the Poincaré hypothesis.
    pub alpha: f64,
    /// Doubling data: constant and radius bound.
    pub c_d: f64,
    pub r_d: f64,
    /// Poincaré radius bound.
    pub r_p: f64,
    /// Integer with 2^β > 2α.
    pub beta: u32,
    /// Largest neighborhood margin (in cells) tried for the excess-mass set.
    pub margin_cells: usize,
    pub max_depth: usize,
    /// Number of sequence members available (j = 1..=j_max).
    pub j_max: usize,
    /// Absolute residual λ-mass at which the recursion stops.
    pub mass_floor: f64,
    /// Strictness factor applied to the covering radius bound.
    pub radius_safety: f64,
    /// Audit: threshold on `sup |d_{j_max} − d|` over sampled pairs.
    pub metric_tol: f64,
    /// Audit: mass bound M_K for hypothesis (iv).
    pub mass_bound: f64,
    pub audit_pairs: usize,
    pub audit_balls: usize,
    pub seed: u64,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(CoreError::EngineConfig("epsilon must be > 0".into()));
        }
        if !(self.q >= 1.0) {
            return Err(CoreError::EngineConfig("q must be >= 1".into()));
        }
        if !(self.alpha >= 1.0) {
            return Err(CoreError::EngineConfig("alpha must be >= 1".into()));
        }
        if 2.0_f64.powi(self.beta.min(62) as i32) <= 2.0 * self.alpha {
            return Err(CoreError::EngineConfig(format!(
                "beta violates the constraint 2^beta > 2*alpha: 2^{} <= {}",
                self.beta,
                2.0 * self.alpha
            )));
        }
        if !(self.c_d >= 1.0) || !(self.r_d > 0.0) || !(self.r_p > 0.0) {
            return Err(CoreError::EngineConfig(
                "doubling and Poincaré data must be positive (C_D >= 1)".into(),
            ));
        }
        match &self.poincare {
            PoincareForm::PowerLaw { c_p, delta } => {
                if !(*c_p > 0.0) || !(*delta > 0.0) {
                    return Err(CoreError::EngineConfig(
                        "power-law Poincaré needs C_P > 0 and delta > 0".into(),
                    ));
                }
            }
            PoincareForm::Modulus { table } => {
                if table.is_empty() || table.windows(2).any(|w| w[1].0 <= w[0].0) {
                    return Err(CoreError::EngineConfig(
                        "modulus table must be nonempty with increasing radii".into(),
                    ));
                }
                if table.iter().any(|&(r, f)| !(r > 0.0) || !(f > 0.0)) {
                    return Err(CoreError::EngineConfig(
                        "modulus table entries must be positive".into(),
                    ));
                }
            }
        }
        if self.j_max < 2 {
            return Err(CoreError::EngineConfig("j_max must be >= 2".into()));
        }
        if self.max_depth == 0 {
            return Err(CoreError::EngineConfig("max_depth must be >= 1".into()));
        }
        if !(self.radius_safety > 0.0 && self.radius_safety < 1.0) {
            return Err(CoreError::EngineConfig(
                "radius_safety must lie in (0, 1)".into(),
            ));
        }
        if !(self.mass_bound > 0.0) {
            return Err(CoreError::EngineConfig("mass_bound must be > 0".into()));
        }
        Ok(())
    }

    /// The per-stage mass-capture denominator `4 C_D^{β+3}`.
    pub fn capture_denominator(&self) -> f64 {
        4.0 * self.c_d.powi(self.beta as i32 + 3)
    }

    /// Stage-i oscillation budget `ε · 2^{1−i}` (stages count from 1).
    pub fn stage_epsilon(&self, stage: usize) -> f64 {
        self.epsilon * 2.0_f64.powi(1 - stage as i32)
    }
}

/// The sequence data the engine consumes: one sampled space with the limit
/// metric, plus per-member metrics, function values and BV masses.
#[derive(Debug, Clone)]
pub struct SequenceInput {
    /// Points, λ-weights and the limit metric d.
    pub space: SampledCompact,
    /// `d_j` accessors, index 0 holding j = 1.
    pub member_metrics: Vec<SampleMetric>,
    /// `u_j` values per sample index.
    pub u_members: Vec<Vec<f64>>,
    /// `μ_j` per-cell masses.
    pub mu_members: Vec<Vec<f64>>,
}

impl SequenceInput {
    pub fn validate(&self) -> Result<()> {
        let m = self.space.len();
        if self.member_metrics.len() != self.u_members.len()
            || self.u_members.len() != self.mu_members.len()
            || self.u_members.is_empty()
        {
            return Err(CoreError::EngineConfig(
                "member metrics, functions and masses must align and be nonempty".into(),
            ));
        }
        for u in &self.u_members {
            if u.len() != m {
                return Err(CoreError::EngineConfig(
                    "member function length differs from the sample".into(),
                ));
            }
        }
        for mu in &self.mu_members {
            if mu.len() != m {
                return Err(CoreError::EngineConfig(
                    "member mass length differs from the sample".into(),
                ));
            }
            if mu.iter().any(|&v| v < 0.0) {
                return Err(CoreError::EngineConfig(
                    "BV masses must be nonnegative".into(),
                ));
            }
        }
        if self.space.lattice.is_none() {
            return Err(CoreError::EngineConfig(
                "engine requires a lattice-backed sample (cell-mask surrogates)".into(),
            ));
        }
        Ok(())
    }

    pub fn j_max(&self) -> usize {
        self.u_members.len()
    }

    /// The same cloud under the metric `d_j` (j is 1-based).
    pub fn member_space(&self, j: usize) -> Result<SampledCompact> {
        let metric = self
            .member_metrics
            .get(j - 1)
            .ok_or(CoreError::SequenceIndexOutOfRange(j))?
            .clone();
        let mut s = self.space.clone();
        s.metric = metric;
        Ok(s)
    }

    pub fn member_u(&self, j: usize) -> &[f64] {
        &self.u_members[j - 1]
    }

    pub fn member_mu(&self, j: usize) -> &[f64] {
        &self.mu_members[j - 1]
    }

    /// `‖u_h − u_k‖_{L^q(mask; λ)}`.
    pub fn lq_diff(&self, h: usize, k: usize, mask: &[bool], q: f64) -> f64 {
        let uh = self.member_u(h);
        let uk = self.member_u(k);
        let mut s = 0.0;
        for i in 0..self.space.len() {
            if mask[i] {
                s += self.space.weights[i] * (uh[i] - uk[i]).abs().powf(q);
            }
        }
        s.powf(1.0 / q)
    }

    pub fn mask_mass(&self, mask: &[bool]) -> f64 {
        mask.iter()
            .zip(&self.space.weights)
            .filter(|(m, _)| **m)
            .map(|(_, w)| w)
            .sum()
    }
}

/// Chebyshev dilation of a cell mask by `cells` lattice steps, clipped to
/// the grid (and to `within` when given).
pub fn dilate_mask(
    space: &SampledCompact,
    mask: &[bool],
    cells: usize,
    within: Option<&[bool]>,
) -> Result<Vec<bool>> {
    let lat = space
        .lattice
        .as_ref()
        .ok_or_else(|| CoreError::EngineConfig("mask dilation needs a lattice".into()))?;
    let n = lat.dim();
    let mut out = mask.to_vec();
    if cells > 0 {
        let r = cells as i64;
        let mut probe = vec![0i64; n];
        let mut off = vec![0i64; n];
        for flat in 0..lat.len() {
            if out[flat] {
                continue;
            }
            let multi = lat.multi_index(flat);
            off.iter_mut().for_each(|v| *v = -r);
            let found = 'scan: loop {
                for k in 0..n {
                    probe[k] = multi[k] + off[k];
                }
                if let Some(p) = lat.flat_index(&probe) {
                    if mask[p] {
                        break 'scan true;
                    }
                }
                // next offset in {-r..r}^n
                let mut k = n;
                loop {
                    if k == 0 {
                        break 'scan false;
                    }
                    k -= 1;
                    off[k] += 1;
                    if off[k] <= r {
                        break;
                    }
                    off[k] = -r;
                }
            };
            if found {
                out[flat] = true;
            }
        }
    }
    if let Some(w) = within {
        for (o, &keep) in out.iter_mut().zip(w) {
            *o = *o && keep;
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests_support {
    use super::*;
    use crate::bv::total_variation;
    use crate::grid::{BoundaryPolicy, GridFunction, GridSpec};
    use crate::util::BoxRegion;
    use crate::vector_fields::VectorFieldFamily;

    /// Unit-square grid with identical Euclidean metrics `d_j = d`, members
    /// `u_j(x) = value(x, j)` and honest total-variation masses.
    pub fn flat_input(cells: usize, value: impl Fn(&[f64], usize) -> f64) -> SequenceInput {
        let region = BoxRegion::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let spec = GridSpec::over_box(&region, vec![cells, cells], BoundaryPolicy::Clamp).unwrap();
        let fam = VectorFieldFamily::euclidean(2);
        let jmax = 8usize;
        let mut u_members = Vec::new();
        let mut mu_members = Vec::new();
        for j in 1..=jmax {
            let u = GridFunction::from_fn(spec.clone(), |x| value(x, j)).unwrap();
            let tv = total_variation(&fam, &u, None).unwrap();
            u_members.push(u.values);
            mu_members.push(tv.cell_mass);
        }
        let space = SampledCompact::from_lattice(
            "flat",
            spec.to_lattice(),
            SampleMetric::Euclidean { scale: 1.0 },
        )
        .unwrap();
        let member_metrics = vec![SampleMetric::Euclidean { scale: 1.0 }; jmax];
        SequenceInput {
            space,
            member_metrics,
            u_members,
            mu_members,
        }
    }

    pub fn test_config(_cells: usize) -> EngineConfig {
        EngineConfig {
            epsilon: 0.5,
            q: 1.0,
            poincare: PoincareForm::PowerLaw { c_p: 4.0, delta: 1.0 },
            alpha: 2.0,
            c_d: 6.0,
            r_d: 0.8,
            r_p: 0.8,
            beta: 3,
            margin_cells: 2,
            max_depth: 3,
            j_max: 8,
            mass_floor: 1e-4,
            radius_safety: 0.9,
            metric_tol: 0.05,
            mass_bound: 50.0,
            audit_pairs: 32,
            audit_balls: 12,
            seed: 11,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::graph::LatticeSpec;
    use crate::util::BoxRegion;

    fn flat_space(nx: usize) -> SampledCompact {
        let region = BoxRegion::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let lat = LatticeSpec::from_box(&region, &[1.0 / (nx - 1) as f64; 2]).unwrap();
        SampledCompact::from_lattice("t", lat, SampleMetric::Euclidean { scale: 1.0 }).unwrap()
    }

    #[test]
    fn config_validation_catches_beta() {
        let mut cfg = EngineConfig {
            epsilon: 0.1,
            q: 1.0,
            poincare: PoincareForm::PowerLaw { c_p: 2.0, delta: 1.0 },
            alpha: 2.0,
            c_d: 4.0,
            r_d: 1.0,
            r_p: 1.0,
            beta: 2,
            margin_cells: 2,
            max_depth: 4,
            j_max: 10,
            mass_floor: 1e-3,
            radius_safety: 0.9,
            metric_tol: 0.1,
            mass_bound: 10.0,
            audit_pairs: 16,
            audit_balls: 8,
            seed: 1,
        };
        // 2^2 = 4 is not > 2α = 4
        assert!(cfg.validate().is_err());
        cfg.beta = 3;
        cfg.validate().unwrap();
    }

    #[test]
    fn poincare_radius_rules() {
        let p = PoincareForm::PowerLaw { c_p: 3.0, delta: 2.0 };
        assert!((p.radius_for(0.04) - 0.2).abs() < 1e-12);
        let m = PoincareForm::Modulus {
            table: vec![(0.05, 0.01), (0.1, 0.05), (0.2, 0.3)],
        };
        assert_eq!(m.radius_for(0.05), 0.1);
        assert_eq!(m.radius_for(0.001), 0.0);
    }

    #[test]
    fn dilation_grows_and_respects_bounds() {
        let s = flat_space(9);
        let mut mask = vec![false; s.len()];
        mask[s.len() / 2] = true;
        let d1 = dilate_mask(&s, &mask, 1, None).unwrap();
        assert_eq!(d1.iter().filter(|&&b| b).count(), 9);
        let d0 = dilate_mask(&s, &mask, 0, None).unwrap();
        assert_eq!(d0, mask);
        // clipping
        let within = vec![false; s.len()];
        let dc = dilate_mask(&s, &mask, 1, Some(&within)).unwrap();
        assert!(dc.iter().all(|&b| !b));
    }
}
