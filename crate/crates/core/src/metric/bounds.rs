//! Certified lower bounds and ball-box comparisons.

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::util::regression_slope;
use crate::vector_fields::VectorFieldFamily;
use serde::{Deserialize, Serialize};

/// Certified lower bound on `d(x, y)`.
///
/// Any subunit path moves with Euclidean speed at most
/// `S(R) = √m · max_i sup_{B_e(0,R)} |X_i|` while it stays inside the ball,
/// so no path that remains inside can join `x` to `y` faster than
/// `|x−y| / S(R)`; a path that leaves the ball needs at least
/// `(R − |x|) / S(R)`. Certification therefore requires the ball to leave
/// room: `min(R−|x|, R−|y|) ≥ |x−y|`. Suprema come from rigorous
/// coefficient-table bounds, never lattice maxima, so the certificate
/// cannot overshoot.
pub fn lower_bound_certified(
    family: &VectorFieldFamily,
    x: &[f64],
    y: &[f64],
    radius: f64,
) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(CoreError::InvalidRadius(radius));
    }
    let sep = linalg::dist(x, y);
    if sep == 0.0 {
        return Ok(0.0);
    }
    let room = (radius - linalg::norm(x)).min(radius - linalg::norm(y));
    if room < sep {
        return Err(CoreError::UncertifiedLowerBound { radius });
    }
    let speed = family.speed_bound(radius);
    if !(speed > 0.0) {
        return Err(CoreError::InvalidFamily(
            "zero speed bound: degenerate family".into(),
        ));
    }
    Ok(sep / speed)
}

/// One distance estimate attached to the pair it measures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairEstimate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallBoxReport {
    /// Smallest `C ≥ 1` making `C⁻¹|x−y| ≤ d̂ ≤ C |x−y|^{1/s}` hold across
    /// the pairs, judged against the certified interval sides.
    pub c_fit: f64,
    /// Pairs whose required constant exceeds the cap.
    pub violations: usize,
    pub c_cap: f64,
    /// Per-pair required constants.
    pub per_pair: Vec<f64>,
}

/// Fit the two-sided ball-box constant over estimated pairs.
pub fn ballbox_check(pairs: &[PairEstimate], step: usize, c_cap: f64) -> BallBoxReport {
    let mut c_fit = 1.0_f64;
    let mut violations = 0usize;
    let mut per_pair = Vec::with_capacity(pairs.len());
    for p in pairs {
        let sep = linalg::dist(&p.x, &p.y);
        let mut c = 1.0_f64;
        if sep > 0.0 {
            // left: C⁻¹ |x−y| ≤ d — judge against the upper side
            if p.upper > 0.0 {
                c = c.max(sep / p.upper);
            } else {
                c = f64::INFINITY;
            }
            // right: d ≤ C |x−y|^{1/s} — judge against the lower side
            let pow = sep.powf(1.0 / step as f64);
            if pow > 0.0 {
                c = c.max(p.lower / pow);
            }
        }
        if c > c_cap {
            violations += 1;
        }
        c_fit = c_fit.max(c);
        per_pair.push(c);
    }
    BallBoxReport {
        c_fit,
        violations,
        c_cap,
        per_pair,
    }
}

/// Log-log regression slope of distance against separation; the scaling
/// exponent along a curve of sample pairs.
pub fn fit_scaling_exponent(samples: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = samples.iter().map(|(s, _)| s.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|(_, d)| d.ln()).collect();
    regression_slope(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::heisenberg::{dido_vertical_distance, heisenberg_distance};

    #[test]
    fn euclidean_lower_bound_formula() {
        let fam = VectorFieldFamily::euclidean(2);
        let x = [0.1, 0.2];
        let y = [0.5, -0.3];
        let lb = lower_bound_certified(&fam, &x, &y, 4.0).unwrap();
        let sep = linalg::dist(&x, &y);
        assert!((lb - sep / 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn heisenberg_lower_bound_in_unit_box() {
        // R = 2: sup |X_i|² ≤ 1 + (R/2)² = 2, so the bound is |x−y| / 2.
        let fam = VectorFieldFamily::heisenberg();
        let x = [0.2, 0.1, 0.0];
        let y = [0.6, 0.5, 0.05];
        let lb = lower_bound_certified(&fam, &x, &y, 2.0).unwrap();
        let sep = linalg::dist(&x, &y);
        assert!((lb - sep / 2.0).abs() < 1e-12);
        // and it is genuinely below the true distance
        assert!(lb <= heisenberg_distance(&x, &y) + 1e-12);
    }

    #[test]
    fn coincident_points_give_zero() {
        let fam = VectorFieldFamily::heisenberg();
        let x = [0.3, 0.3, 0.1];
        assert_eq!(lower_bound_certified(&fam, &x, &x, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn small_radius_is_uncertified() {
        let fam = VectorFieldFamily::euclidean(2);
        assert!(matches!(
            lower_bound_certified(&fam, &[0.9, 0.0], &[0.0, 0.9], 1.0),
            Err(CoreError::UncertifiedLowerBound { .. })
        ));
    }

    #[test]
    fn ballbox_euclidean_constant_near_one() {
        let fam = VectorFieldFamily::euclidean(2);
        let pts = [
            ([0.0, 0.0], [0.5, 0.0]),
            ([0.1, 0.1], [0.4, 0.8]),
            ([0.9, 0.2], [0.3, 0.3]),
        ];
        let pairs: Vec<PairEstimate> = pts
            .iter()
            .map(|(x, y)| {
                let d = linalg::dist(x, y);
                PairEstimate {
                    x: x.to_vec(),
                    y: y.to_vec(),
                    lower: d * 0.999,
                    upper: d * 1.001,
                }
            })
            .collect();
        let r = ballbox_check(&pairs, 1, 100.0);
        let _ = fam;
        assert!(r.c_fit < 1.01);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn ballbox_step1_fails_on_small_vertical_pairs() {
        // d ≈ 2√(πt) beats C·t for small t, so the required constant blows up.
        let mut pairs = Vec::new();
        for &t in &[1e-2, 1e-3, 1e-4] {
            let d = dido_vertical_distance(t);
            pairs.push(PairEstimate {
                x: vec![0.0; 3],
                y: vec![0.0, 0.0, t],
                lower: d * 0.98,
                upper: d * 1.02,
            });
        }
        let r1 = ballbox_check(&pairs, 1, 50.0);
        assert!(r1.violations > 0, "step-1 bound must fail near the center");
        let r2 = ballbox_check(&pairs, 2, 50.0);
        assert_eq!(r2.violations, 0, "step-2 bound holds");
    }

    #[test]
    fn vertical_exponent_fit() {
        let samples: Vec<(f64, f64)> = [0.02f64, 0.05, 0.1, 0.15]
            .iter()
            .map(|&t| (t, dido_vertical_distance(t)))
            .collect();
        let slope = fit_scaling_exponent(&samples);
        assert!((slope - 0.5).abs() < 1e-9);
    }
}
