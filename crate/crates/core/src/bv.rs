//! Grid BV calculus along a vector-field family: X-gradients, total
//! variation, Poincaré quotients, adjoint pairings and semicontinuity.

use crate::error::{CoreError, Result};
use crate::flows::lipschitz_constant;
use crate::grid::{BoundaryPolicy, GridFunction};
use crate::sample::SampledCompact;
use crate::vector_fields::{FamilySequence, VectorFieldFamily};
use serde::{Deserialize, Serialize};

/// Central-difference partial derivative along `axis`; clamp boundaries
/// fall back to one-sided quotients so affine data differentiates exactly.
fn partial(u: &GridFunction, axis: usize) -> Vec<f64> {
    let spec = &u.spec;
    let h = spec.spacing[axis];
    let n = spec.len();
    let mut out = vec![0.0; n];
    for flat in 0..n {
        let multi = spec.multi_index(flat);
        let c = multi[axis];
        let last = spec.counts[axis] as i64 - 1;
        let v = match spec.boundary {
            BoundaryPolicy::Clamp if c == 0 && last == 0 => 0.0,
            BoundaryPolicy::Clamp if c == 0 => {
                (u.values[spec.shifted(&multi, axis, 1)] - u.values[flat]) / h
            }
            BoundaryPolicy::Clamp if c == last => {
                (u.values[flat] - u.values[spec.shifted(&multi, axis, -1)]) / h
            }
            _ => {
                (u.values[spec.shifted(&multi, axis, 1)]
                    - u.values[spec.shifted(&multi, axis, -1)])
                    / (2.0 * h)
            }
        };
        out[flat] = v;
    }
    out
}

fn check_resolution(family: &VectorFieldFamily, u: &GridFunction) -> Result<()> {
    if u.spec.dim() != family.n {
        return Err(CoreError::DimensionMismatch {
            expected: family.n,
            got: u.spec.dim(),
        });
    }
    // The grid must resolve coefficient variation: a Lipschitz constant L
    // and cell size h with L·h ≫ 1 would make frozen-cell coefficients
    // meaningless.
    let radius = u.spec.to_lattice().circumradius() + 1.0;
    let lips = lipschitz_constant(family, radius, 9)?;
    let lmax = lips.iter().fold(0.0_f64, |a, &b| a.max(b));
    let hmax = u.spec.spacing.iter().fold(0.0_f64, |a, &b| a.max(b));
    if lmax * hmax > 1.0 {
        return Err(CoreError::GridMismatch(format!(
            "grid too coarse for coefficient variation: L·h = {}",
            lmax * hmax
        )));
    }
    Ok(())
}

/// `X_i u` for every field: `Σ_k a_{i,k}(cell center) ∂_k u`.
pub fn x_gradient(family: &VectorFieldFamily, u: &GridFunction) -> Result<Vec<GridFunction>> {
    check_resolution(family, u)?;
    let n = family.n;
    let partials: Vec<Vec<f64>> = (0..n).map(|k| partial(u, k)).collect();
    let mut out = Vec::with_capacity(family.m);
    for row in &family.rows {
        let mut vals = vec![0.0; u.spec.len()];
        for (flat, v) in vals.iter_mut().enumerate() {
            let center = u.spec.cell_center(flat);
            let mut s = 0.0;
            for k in 0..n {
                let a = row[k].eval(&center);
                if a != 0.0 {
                    s += a * partials[k][flat];
                }
            }
            *v = s;
        }
        out.push(GridFunction::new(u.spec.clone(), vals)?);
    }
    Ok(out)
}

/// Per-cell mass of `|(X_1 u, …, X_m u)|₂ ·` cell volume.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TVMeasure {
    pub cell_mass: Vec<f64>,
    /// Scalar total over the region (all cells when unmasked).
    pub total: f64,
}

impl TVMeasure {
    /// Mass over an index set (e.g. a metric ball on the aligned sample).
    pub fn mass_on(&self, indices: &[u32]) -> f64 {
        indices.iter().map(|&i| self.cell_mass[i as usize]).sum()
    }
}

/// X-total-variation of `u` over the masked region.
pub fn total_variation(
    family: &VectorFieldFamily,
    u: &GridFunction,
    mask: Option<&[bool]>,
) -> Result<TVMeasure> {
    let grads = x_gradient(family, u)?;
    let vol = u.spec.cell_volume();
    let mut cell_mass = vec![0.0; u.spec.len()];
    let mut total = 0.0;
    for flat in 0..u.spec.len() {
        if mask.map_or(false, |m| !m[flat]) {
            continue;
        }
        let mut s = 0.0;
        for g in &grads {
            s += g.values[flat] * g.values[flat];
        }
        let mass = s.sqrt() * vol;
        cell_mass[flat] = mass;
        total += mass;
    }
    Ok(TVMeasure { cell_mass, total })
}

/// Pieces of one Poincaré quotient evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoincareQuotient {
    /// `‖u − u(B)‖_{L^q(B;λ)}`.
    pub numerator: f64,
    /// `μ(αB)` with `μ = |D_X u|`.
    pub mu_alpha_ball: f64,
    pub ball_mass: f64,
    pub radius: f64,
    /// `numerator / (r^δ μ(αB))`; zero by convention when both sides vanish.
    pub quotient: f64,
}

/// The quotient `‖u − u(B)‖_{L^q(B;λ)} / (r^δ μ(αB))` on the sampled space
/// whose indices align with the grid cells.
#[allow(clippy::too_many_arguments)]
pub fn poincare_quotient(
    family: &VectorFieldFamily,
    u: &GridFunction,
    space: &SampledCompact,
    center: usize,
    r: f64,
    alpha: f64,
    q: f64,
    delta: f64,
) -> Result<PoincareQuotient> {
    if space.len() != u.spec.len() {
        return Err(CoreError::GridMismatch(
            "sample does not align with the grid".into(),
        ));
    }
    if !(alpha >= 1.0) {
        return Err(CoreError::EngineConfig(format!("alpha must be >= 1, got {alpha}")));
    }
    let ball = space.ball(center, r)?;
    if ball.indices.is_empty() {
        return Err(CoreError::EmptyBall { center, radius: r });
    }
    let mean = {
        // shifted mean: exact on constant data
        let base = u.values[ball.indices[0] as usize];
        let mut s = 0.0;
        for &i in &ball.indices {
            s += space.weights[i as usize] * (u.values[i as usize] - base);
        }
        base + s / ball.mass
    };
    let mut num = 0.0;
    for &i in &ball.indices {
        num += space.weights[i as usize] * (u.values[i as usize] - mean).abs().powf(q);
    }
    let numerator = num.powf(1.0 / q);
    let tv = total_variation(family, u, None)?;
    let alpha_ball = space.ball(center, alpha * r)?;
    let mu_alpha_ball = tv.mass_on(&alpha_ball.indices);
    let denom = r.powf(delta) * mu_alpha_ball;
    let quotient = if denom > 0.0 {
        numerator / denom
    } else if numerator <= 1e-14 {
        0.0
    } else {
        return Err(CoreError::PoincareZeroDenominator { numerator });
    };
    Ok(PoincareQuotient {
        numerator,
        mu_alpha_ball,
        ball_mass: ball.mass,
        radius: r,
        quotient,
    })
}

/// `Σ_cells u · Σ_k ∂_k(a_{i,k} φ) · vol`: the pairing of `u` with the
/// formal adjoint applied to a compactly supported test function.
pub fn adjoint_pairing(
    family: &VectorFieldFamily,
    u: &GridFunction,
    phi: &GridFunction,
    i: usize,
) -> Result<f64> {
    if !u.same_grid(phi) {
        return Err(CoreError::GridMismatch("u and φ on different grids".into()));
    }
    if i >= family.m {
        return Err(CoreError::FieldIndexOutOfRange { index: i, m: family.m });
    }
    check_resolution(family, u)?;
    // support must keep a margin of two cells from every face
    let spec = &phi.spec;
    for flat in 0..spec.len() {
        if phi.values[flat] == 0.0 {
            continue;
        }
        let multi = spec.multi_index(flat);
        for (axis, &c) in multi.iter().enumerate() {
            if c < 2 || c as usize + 2 >= spec.counts[axis] {
                return Err(CoreError::SupportViolation {
                    cell: multi.iter().map(|&v| v as usize).collect(),
                });
            }
        }
    }
    let n = family.n;
    let vol = spec.cell_volume();
    let mut pairing = 0.0;
    for k in 0..n {
        // g_k = a_{i,k} φ, then ∂_k g_k paired with u
        let mut g = vec![0.0; spec.len()];
        for (flat, gv) in g.iter_mut().enumerate() {
            let center = spec.cell_center(flat);
            *gv = family.rows[i][k].eval(&center) * phi.values[flat];
        }
        let gfun = GridFunction::new(spec.clone(), g)?;
        let dg = partial(&gfun, k);
        for flat in 0..spec.len() {
            pairing += u.values[flat] * dg[flat] * vol;
        }
    }
    Ok(pairing)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SemicontinuityReport {
    pub tv_limit: f64,
    pub tv_members: Vec<f64>,
    /// `min_j TV_{X^j}(u_j) − TV_X(u)`; the semicontinuity of total
    /// variation predicts this stays above `−`(grid tolerance).
    pub slack: f64,
}

/// Semicontinuity check: liminf (finite-sample: min over the available
/// tail) of member total variations against the limit's.
pub fn semicontinuity_check(
    seq: &FamilySequence,
    u_members: &[(usize, GridFunction)],
    u_limit: &GridFunction,
    mask: Option<&[bool]>,
) -> Result<SemicontinuityReport> {
    if u_members.is_empty() {
        return Err(CoreError::GridMismatch("no members supplied".into()));
    }
    for (_, m) in u_members {
        if !m.same_grid(u_limit) {
            return Err(CoreError::GridMismatch(
                "members and limit on different grids".into(),
            ));
        }
    }
    let tv_limit = total_variation(&seq.limit, u_limit, mask)?.total;
    let mut tv_members = Vec::with_capacity(u_members.len());
    for (j, uj) in u_members {
        let fam = seq.member(*j)?;
        tv_members.push(total_variation(&fam, uj, mask)?.total);
    }
    let min_tail = tv_members.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(SemicontinuityReport {
        tv_limit,
        tv_members,
        slack: min_tail - tv_limit,
    })
}
