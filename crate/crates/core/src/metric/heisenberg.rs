//! Closed-form CC distance for the built-in Heisenberg frame
//! `X_1 = ∂x − (y/2)∂t`, `X_2 = ∂y + (x/2)∂t`.
//!
//! The vertical gain of a subunit path equals the signed planar area swept
//! relative to the chord, so the minimizer between two points is a circular
//! arc: given chord length `c` and swept area `a`, the arc with half-angle
//! `θ ∈ (0, π)` satisfying `(θ − sin θ cos θ)/sin²θ = 4a/c²` is optimal and
//! has length `c · θ / sin θ`. Degenerate cases: `a = 0` gives the straight
//! segment `c`; `c = 0` gives the full circle of area `a`, length `2√(πa)`.
//!
//! Distances between arbitrary points reduce to the origin case through the
//! group law `(x,y,t)·(x',y',t') = (x+x', y+y', t+t'+(xy'−yx')/2)`, under
//! which the frame is left-invariant.
//!
//! The shape function `G(ρ) = θ/sin θ` at `ρ = 4a/c²` is tabulated once on
//! a logarithmic grid; ball queries in the sampled-space layer evaluate
//! millions of pairwise distances and the table keeps each one O(1).

use std::sync::OnceLock;

const TABLE_SIZE: usize = 8192;
const RHO_LO: f64 = 1e-12;
const RHO_HI: f64 = 1e12;

/// `(θ − sin θ cos θ) / sin²θ`, strictly increasing on (0, π).
fn shape_ratio(theta: f64) -> f64 {
    let s = theta.sin();
    (theta - s * theta.cos()) / (s * s)
}

/// Solve `shape_ratio(θ) = rho` by bisection.
fn solve_theta(rho: f64) -> f64 {
    let mut lo = 0.0_f64;
    let mut hi = std::f64::consts::PI - 1e-12;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if shape_ratio(mid) < rho {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Exact shape factor `G(ρ) = θ/sin θ` (no table).
fn shape_factor_exact(rho: f64) -> f64 {
    if rho <= 1e-14 {
        // θ ≈ (3/2)ρ, G ≈ 1 + θ²/6
        let theta = 1.5 * rho;
        return 1.0 + theta * theta / 6.0;
    }
    if rho >= RHO_HI {
        // θ → π: G ≈ √(πρ) − 1
        return (std::f64::consts::PI * rho).sqrt() - 1.0;
    }
    let theta = solve_theta(rho);
    theta / theta.sin()
}

fn shape_table() -> &'static Vec<f64> {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let lo = RHO_LO.ln();
        let hi = RHO_HI.ln();
        (0..TABLE_SIZE)
            .map(|i| {
                let lr = lo + (hi - lo) * i as f64 / (TABLE_SIZE - 1) as f64;
                shape_factor_exact(lr.exp())
            })
            .collect()
    })
}

/// Table-interpolated `G(ρ)`.
fn shape_factor(rho: f64) -> f64 {
    if rho <= RHO_LO {
        return 1.0;
    }
    if rho >= RHO_HI {
        return (std::f64::consts::PI * rho).sqrt() - 1.0;
    }
    let table = shape_table();
    let lo = RHO_LO.ln();
    let hi = RHO_HI.ln();
    let pos = (rho.ln() - lo) / (hi - lo) * (TABLE_SIZE - 1) as f64;
    let i = (pos.floor() as usize).min(TABLE_SIZE - 2);
    let frac = pos - i as f64;
    table[i] * (1.0 - frac) + table[i + 1] * frac
}

/// CC distance from the origin to `(z, t)` with `c = |z|`, `a = |t|`.
fn origin_distance(c: f64, a: f64) -> f64 {
    if a == 0.0 {
        return c;
    }
    if c == 0.0 {
        return 2.0 * (std::f64::consts::PI * a).sqrt();
    }
    let rho = 4.0 * a / (c * c);
    c * shape_factor(rho)
}

/// Exact Heisenberg CC distance between two points of `R^3`.
pub fn heisenberg_distance(p: &[f64], q: &[f64]) -> f64 {
    let dx = q[0] - p[0];
    let dy = q[1] - p[1];
    // t-component of the group difference p^{-1} q
    let dt = (q[2] - p[2]) + 0.5 * (q[0] * p[1] - q[1] * p[0]);
    origin_distance(dx.hypot(dy), dt.abs())
}

/// Full-precision variant (bisection, no table); test oracle.
pub fn heisenberg_distance_precise(p: &[f64], q: &[f64]) -> f64 {
    let dx = q[0] - p[0];
    let dy = q[1] - p[1];
    let dt = (q[2] - p[2]) + 0.5 * (q[0] * p[1] - q[1] * p[0]);
    let c = dx.hypot(dy);
    let a = dt.abs();
    if a == 0.0 {
        return c;
    }
    if c == 0.0 {
        return 2.0 * (std::f64::consts::PI * a).sqrt();
    }
    c * shape_factor_exact(4.0 * a / (c * c))
}

/// Dido distance straight up the center: `d(0, (0,0,t)) = 2√(π|t|)`.
pub fn dido_vertical_distance(t: f64) -> f64 {
    2.0 * (std::f64::consts::PI * t.abs()).sqrt()
}

/// Conservative Euclidean bounding box half-widths of the CC ball
/// `B(center, r)`: horizontal speed is at most 1, and the vertical drift is
/// bounded by the isoperimetric area `r²/π` plus the lever term
/// `(|x|+|y|) r / 2` at the center.
pub fn ball_half_widths(center: &[f64], r: f64) -> [f64; 3] {
    let lever = 0.5 * (center[0].abs() + center[1].abs()) * r;
    [r, r, r * r / std::f64::consts::PI + lever]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizontal_segments_are_euclidean() {
        assert!((heisenberg_distance(&[0.0; 3], &[1.0, 0.0, 0.0]) - 1.0).abs() < 1e-12);
        // Flow along X_1 from (0, 2, 0) for time s lands at (s, 2, -s).
        let s = 0.7;
        let d = heisenberg_distance(&[0.0, 2.0, 0.0], &[s, 2.0, -s]);
        assert!((d - s).abs() < 1e-12, "got {d}");
    }

    #[test]
    fn vertical_distance_matches_dido() {
        let d = heisenberg_distance(&[0.0; 3], &[0.0, 0.0, 0.1]);
        let oracle = dido_vertical_distance(0.1);
        assert!((d - oracle).abs() < 1e-9, "d = {d}, oracle = {oracle}");
        assert!((oracle - 1.1209982432795858).abs() < 1e-12);
    }

    #[test]
    fn table_matches_bisection() {
        for &rho in &[1e-9, 1e-4, 0.03, 0.7, 1.0, 4.1, 88.0, 1e4, 1e9] {
            let a = shape_factor(rho);
            let b = shape_factor_exact(rho);
            assert!(
                (a - b).abs() <= 1e-5 * b.abs(),
                "rho = {rho}: table {a}, exact {b}"
            );
        }
    }

    #[test]
    fn metric_axioms_on_samples() {
        let pts = [
            [0.0, 0.0, 0.0],
            [0.3, -0.2, 0.05],
            [-0.1, 0.4, -0.03],
            [0.25, 0.25, 0.1],
        ];
        for p in &pts {
            assert_eq!(heisenberg_distance(p, p), 0.0);
            for q in &pts {
                let dpq = heisenberg_distance(p, q);
                let dqp = heisenberg_distance(q, p);
                assert!((dpq - dqp).abs() < 1e-12);
                for w in &pts {
                    let through = heisenberg_distance(p, w) + heisenberg_distance(w, q);
                    assert!(dpq <= through + 1e-9);
                }
            }
        }
    }

    #[test]
    fn left_invariance() {
        let p = [0.2, -0.4, 0.07];
        let q = [-0.3, 0.5, -0.02];
        let g = [1.0, 2.0, -0.5];
        // left translation by g
        let lp = [
            g[0] + p[0],
            g[1] + p[1],
            g[2] + p[2] + 0.5 * (g[0] * p[1] - g[1] * p[0]),
        ];
        let lq = [
            g[0] + q[0],
            g[1] + q[1],
            g[2] + q[2] + 0.5 * (g[0] * q[1] - g[1] * q[0]),
        ];
        let a = heisenberg_distance(&p, &q);
        let b = heisenberg_distance(&lp, &lq);
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn vertical_scaling_exponent_is_half() {
        // d(0,(0,0,t)) = 2√(πt): log-log slope 1/2 against t.
        let ts = [0.02, 0.05, 0.1, 0.15];
        let ln_t: Vec<f64> = ts.iter().map(|t: &f64| t.ln()).collect();
        let ln_d: Vec<f64> = ts
            .iter()
            .map(|&t| heisenberg_distance(&[0.0; 3], &[0.0, 0.0, t]).ln())
            .collect();
        let slope = crate::util::regression_slope(&ln_t, &ln_d);
        assert!((slope - 0.5).abs() < 1e-6);
    }

    #[test]
    fn ball_bbox_contains_ball_samples() {
        // Random-ish points with d(center, p) <= r must fall in the bbox.
        let center = [0.3, -0.2, 0.05];
        let r = 0.25;
        let hw = ball_half_widths(&center, r);
        let mut k = 0u32;
        for i in -6..=6 {
            for j in -6..=6 {
                for l in -6..=6 {
                    let p = [
                        center[0] + f64::from(i) * 0.05,
                        center[1] + f64::from(j) * 0.05,
                        center[2] + f64::from(l) * 0.01,
                    ];
                    if heisenberg_distance(&center, &p) <= r {
                        k += 1;
                        assert!((p[0] - center[0]).abs() <= hw[0] + 1e-12);
                        assert!((p[1] - center[1]).abs() <= hw[1] + 1e-12);
                        assert!((p[2] - center[2]).abs() <= hw[2] + 1e-12);
                    }
                }
            }
        }
        assert!(k > 0);
    }
}
