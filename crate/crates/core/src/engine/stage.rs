//! One extraction stage: margin set, covering, mass capture, inclusion
//! testing, ball-mean selection and the oscillation record.

use super::{EngineConfig, PoincareForm, SequenceInput};
use crate::error::{CoreError, Result};
use crate::sample::{five_r_covering, RadiusRule};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub epsilon: f64,
    /// Margin (in cells) realizing the excess-mass neighborhood.
    pub margin_cells: usize,
    /// λ(U ∖ K_i), which the margin selection keeps ≤ λ(K_i)/(4 C_D^{β+3}).
    pub margin_excess: f64,
    /// Covering radius actually used.
    pub radius: f64,
    pub covering_centers: Vec<u32>,
    pub covering_disjoint_ok: bool,
    pub covering_coverage_ok: bool,
    /// Number of balls kept for the capture step (L + 1 balls, 0..=L).
    pub kept_balls: usize,
    /// λ(∪_{ℓ≤L} 2^{−β} B_ℓ).
    pub shrunken_mass: f64,
    /// λ(A_i) and its required lower bound λ(K_i)/(4 C_D^{β+3}).
    pub a_mass: f64,
    pub a_mass_required: f64,
    /// Cells of A_i.
    pub a_count: usize,
    /// Leading members dropped by the two-metric ball-inclusion test.
    pub dropped_prefix: Vec<usize>,
    /// Ball-mean cluster tolerance η = ε/(4(L+1)).
    pub eta: f64,
    /// Selected subsequence (member indices, ascending).
    pub selected: Vec<usize>,
    /// Ball means over (1/(2α))B^j_ℓ for each selected member (rows) and
    /// kept ball (columns).
    pub ball_means: Vec<Vec<f64>>,
    /// The constant of the oscillation estimate chain and its bound.
    pub c0: f64,
    pub bound: f64,
    /// Measured `max_{h,k selected} ‖u_h − u_k‖_{L^q(A_i)}`.
    pub oscillation: f64,
    /// λ(K_i) for this stage.
    pub k_mass: f64,
}

/// Outcome handed to the recursion: the stage record plus the extracted
/// set and surviving members.
pub struct StageOutcome {
    pub record: StageRecord,
    pub a_mask: Vec<bool>,
    pub selected: Vec<usize>,
}

/// Mass constant `C_0` of the estimate chain: `2 C_P M / (2α)^δ` for the
/// power law, `2 M` for a general modulus, with `M` the measured mass
/// bound over the whole sample (the finite stand-in for the compact
/// closure of the margin neighborhood).
fn chain_constant(input: &SequenceInput, cfg: &EngineConfig) -> f64 {
    let full = vec![true; input.space.len()];
    let mut m_meas = 0.0_f64;
    for j in 1..=input.j_max() {
        let uj = input.member_u(j);
        let muj = input.member_mu(j);
        let mut l1 = 0.0;
        let mut mu = 0.0;
        for i in 0..input.space.len() {
            if full[i] {
                l1 += input.space.weights[i] * uj[i].abs();
                mu += muj[i];
            }
        }
        m_meas = m_meas.max(l1 + mu);
    }
    match &cfg.poincare {
        PoincareForm::PowerLaw { c_p, delta } => {
            2.0 * c_p * m_meas / (2.0 * cfg.alpha).powf(*delta)
        }
        PoincareForm::Modulus { .. } => 2.0 * m_meas,
    }
}

/// Run one extraction stage on the compact `k_mask`, over the members in
/// `candidates` (ascending). `c0` fixes the chain constant across stages;
/// pass `None` at stage 1 to measure it.
pub fn stage_extract(
    input: &SequenceInput,
    k_mask: &[bool],
    candidates: &[usize],
    stage: usize,
    cfg: &EngineConfig,
    c0: Option<f64>,
) -> Result<StageOutcome> {
    input.validate()?;
    cfg.validate()?;
    if candidates.len() < 2 {
        return Err(CoreError::ExtractionFailure(format!(
            "stage {stage}: fewer than two candidate members"
        )));
    }
    let epsilon = cfg.stage_epsilon(stage);
    let k_mass = input.mask_mass(k_mask);
    if !(k_mass > 0.0) {
        return Err(CoreError::ExtractionFailure(format!(
            "stage {stage}: empty compact"
        )));
    }
    let capture = cfg.capture_denominator();

    // Margin neighborhood: the largest Chebyshev dilation whose excess mass
    // obeys λ(U ∖ K) ≤ λ(K)/(4 C_D^{β+3}). The degenerate margin c = 0
    // (U = K, excess 0) is always admissible: on a finite sample every set
    // is open, so the continuum's strict neighborhood has no content left.
    let mut margin_cells = 0usize;
    let mut margin_excess = 0.0f64;
    for c in (1..=cfg.margin_cells).rev() {
        let u = super::dilate_mask(&input.space, k_mask, c, None)?;
        let excess = input.mask_mass(&u) - k_mass;
        if excess <= k_mass / capture {
            margin_cells = c;
            margin_excess = excess;
            break;
        }
    }

    // Covering radius: strictly below min{ε-radius, R_D/4, 2 α R_P}.
    let r_eps = cfg.poincare.radius_for(epsilon);
    let r_bound = r_eps.min(cfg.r_d / 4.0).min(2.0 * cfg.alpha * cfg.r_p);
    if !(r_bound > 0.0) {
        return Err(CoreError::ExtractionFailure(format!(
            "stage {stage}: empty radius range (ε too small for the modulus)"
        )));
    }
    let radius = cfg.radius_safety * r_bound;
    let covering = five_r_covering(
        &input.space,
        Some(k_mask),
        &RadiusRule::Constant(radius),
        r_bound,
    )?;
    if !covering.disjoint_ok || !covering.coverage_ok {
        return Err(CoreError::ExtractionFailure(format!(
            "stage {stage}: covering certificates failed (disjoint {}, coverage {})",
            covering.disjoint_ok, covering.coverage_ok
        )));
    }

    // Keep the fewest leading balls whose 2^{−β}-shrunken union captures
    // λ(K)/(2 C_D^{β+3}).
    let shrink = radius / 2.0_f64.powi(cfg.beta as i32);
    let needed = k_mass / (capture / 2.0);
    let mut union_mask = vec![false; input.space.len()];
    let mut shrunken_mass = 0.0;
    let mut kept = 0usize;
    for (idx, &center) in covering.centers.iter().enumerate() {
        let ball = input.space.ball(center as usize, shrink)?;
        for &i in &ball.indices {
            if !union_mask[i as usize] {
                union_mask[i as usize] = true;
                shrunken_mass += input.space.weights[i as usize];
            }
        }
        kept = idx + 1;
        if shrunken_mass >= needed {
            break;
        }
    }
    if shrunken_mass < needed {
        return Err(CoreError::ExtractionFailure(format!(
            "stage {stage}: shrunken balls capture {shrunken_mass}, need {needed}; \
             doubling data inconsistent with the sample"
        )));
    }
    let kept_centers: Vec<u32> = covering.centers[..kept].to_vec();

    // A_i = K_i ∩ union of kept shrunken balls.
    let mut a_mask = vec![false; input.space.len()];
    let mut a_mass = 0.0;
    let mut a_count = 0usize;
    for i in 0..input.space.len() {
        if union_mask[i] && k_mask[i] {
            a_mask[i] = true;
            a_mass += input.space.weights[i];
            a_count += 1;
        }
    }
    let a_mass_required = k_mass / capture;
    if a_mass < a_mass_required {
        return Err(CoreError::ExtractionFailure(format!(
            "stage {stage}: λ(A) = {a_mass} below the required {a_mass_required}"
        )));
    }

    // Inclusion testing: drop leading members until, for every kept ball,
    // (1/2^β)B_ℓ ⊆ (1/2α)B^j_ℓ and (1/2)B^j_ℓ ⊆ B_ℓ hold on the sample.
    let d_rows: Vec<Vec<f64>> = kept_centers
        .iter()
        .map(|&c| input.space.dists_from(c as usize))
        .collect();
    let inclusion_ok = |j: usize| -> Result<bool> {
        let sj = input.member_space(j)?;
        for (row_d, &c) in d_rows.iter().zip(&kept_centers) {
            let row_j = sj.dists_from(c as usize);
            for i in 0..row_j.len() {
                if row_d[i] <= shrink && row_j[i] > radius / (2.0 * cfg.alpha) {
                    return Ok(false);
                }
                if row_j[i] <= radius / 2.0 && row_d[i] > radius {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    };
    let mut dropped_prefix = Vec::new();
    let mut start = 0usize;
    while start < candidates.len() {
        if inclusion_ok(candidates[start])? {
            break;
        }
        dropped_prefix.push(candidates[start]);
        start += 1;
    }
    let survivors = &candidates[start..];
    if survivors.len() < 2 {
        return Err(CoreError::ExtractionFailure(format!(
            "stage {stage}: ball inclusions leave fewer than two members \
             (dropped {dropped_prefix:?}); j_max too small"
        )));
    }

    // Ball means over (1/(2α))B^j_ℓ per surviving member.
    let mean_radius = radius / (2.0 * cfg.alpha);
    let mut mean_rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(survivors.len());
    for &j in survivors {
        let sj = input.member_space(j)?;
        let uj = input.member_u(j);
        let mut row = Vec::with_capacity(kept_centers.len());
        for &c in &kept_centers {
            row.push(sj.ball_mean(uj, c as usize, mean_radius)?);
        }
        mean_rows.push((j, row));
    }

    // Finite selection surrogate: the largest pairwise-η-close subset of
    // the mean vectors, greedily grown along the first-ball projection and
    // verified pairwise in the sup norm; ties resolve to the lowest index.
    let eta = epsilon / (4.0 * kept_centers.len() as f64);
    let sup_close = |a: &[f64], b: &[f64]| -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 2.0 * eta)
    };
    let mut order: Vec<usize> = (0..mean_rows.len()).collect();
    order.sort_by(|&a, &b| {
        mean_rows[a].1[0]
            .total_cmp(&mean_rows[b].1[0])
            .then(mean_rows[a].0.cmp(&mean_rows[b].0))
    });
    let mut best_cluster: Vec<usize> = Vec::new();
    for s in 0..order.len() {
        let mut cluster = vec![order[s]];
        for &cand in order.iter().skip(s + 1) {
            if cluster
                .iter()
                .all(|&m| sup_close(&mean_rows[m].1, &mean_rows[cand].1))
            {
                cluster.push(cand);
            }
        }
        if cluster.len() > best_cluster.len() {
            best_cluster = cluster;
        }
    }
    if best_cluster.len() < 2 {
        return Err(CoreError::ExtractionFailure(format!(
            "stage {stage}: no η-cluster of size ≥ 2 among ball means (η = {eta}); \
             j_max too small"
        )));
    }
    let mut selected: Vec<usize> = best_cluster.iter().map(|&m| mean_rows[m].0).collect();
    selected.sort_unstable();
    let ball_means: Vec<Vec<f64>> = {
        let mut rows: Vec<(usize, Vec<f64>)> = best_cluster
            .iter()
            .map(|&m| mean_rows[m].clone())
            .collect();
        rows.sort_by_key(|(j, _)| *j);
        rows.into_iter().map(|(_, r)| r).collect()
    };

    // Oscillation on A_i over the selected members, against 2 C_0 ε.
    let c0 = c0.unwrap_or_else(|| chain_constant(input, cfg));
    let mut oscillation = 0.0_f64;
    for (ia, &h) in selected.iter().enumerate() {
        for &k in selected.iter().skip(ia + 1) {
            oscillation = oscillation.max(input.lq_diff(h, k, &a_mask, cfg.q));
        }
    }
    let bound = 2.0 * c0 * epsilon;

    let record = StageRecord {
        stage,
        epsilon,
        margin_cells,
        margin_excess,
        radius,
        covering_centers: covering.centers.clone(),
        covering_disjoint_ok: covering.disjoint_ok,
        covering_coverage_ok: covering.coverage_ok,
        kept_balls: kept_centers.len(),
        shrunken_mass,
        a_mass,
        a_mass_required,
        a_count,
        dropped_prefix,
        eta,
        selected: selected.clone(),
        ball_means,
        c0,
        bound,
        oscillation,
        k_mass,
    };
    Ok(StageOutcome {
        record,
        a_mask,
        selected,
    })
}
