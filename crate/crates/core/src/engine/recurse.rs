//! Measure-decay recursion and the double diagonalization.

use super::modulus::cauchy_modulus;
use super::stage::{stage_extract, StageRecord};
use super::{EngineConfig, SequenceInput};
use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ResidualFloor,
    DepthCap,
    ExhaustedMass,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecursionResult {
    pub stages: Vec<StageRecord>,
    /// Per stage: (residual λ-mass after the stage, decay bound
    /// `(1 − 1/(4C_D^{β+3}))^i λ(K)`).
    pub decay_trace: Vec<(f64, f64)>,
    /// Diagonal across the nested stage selections.
    pub final_selected: Vec<usize>,
    pub initial_mass: f64,
    pub residual_mass: f64,
    pub stopped_by: StopReason,
}

/// Run stages with halved budgets on the shrinking compacts
/// `K_{i+1} = K_i ∖ A_i`, verifying the measure-decay inequality at every
/// stage, then take the diagonal of the nested selections.
pub fn recursive_exhaust(
    input: &SequenceInput,
    k_mask: &[bool],
    candidates: &[usize],
    cfg: &EngineConfig,
) -> Result<RecursionResult> {
    let initial_mass = input.mask_mass(k_mask);
    let capture = cfg.capture_denominator();
    let decay_factor = 1.0 - 1.0 / capture;

    let mut current_mask = k_mask.to_vec();
    let mut selected: Vec<usize> = candidates.to_vec();
    let mut stages: Vec<StageRecord> = Vec::new();
    let mut decay_trace: Vec<(f64, f64)> = Vec::new();
    let mut c0: Option<f64> = None;
    let mut stopped_by = StopReason::DepthCap;

    for stage in 1..=cfg.max_depth {
        let out = stage_extract(input, &current_mask, &selected, stage, cfg, c0)?;
        c0 = Some(out.record.c0);
        // nestedness: the new selection must sit inside the old one
        debug_assert!(out.selected.iter().all(|j| selected.contains(j)));
        selected = out.selected;
        for (m, &a) in current_mask.iter_mut().zip(&out.a_mask) {
            *m = *m && !a;
        }
        let residual = input.mask_mass(&current_mask);
        let bound = decay_factor.powi(stage as i32) * initial_mass;
        if residual > bound {
            return Err(CoreError::ExtractionFailure(format!(
                "stage {stage}: measure decay violated: residual {residual} > bound {bound}"
            )));
        }
        stages.push(out.record);
        decay_trace.push((residual, bound));
        if residual <= 0.0 {
            stopped_by = StopReason::ExhaustedMass;
            break;
        }
        if residual < cfg.mass_floor {
            stopped_by = StopReason::ResidualFloor;
            break;
        }
        if selected.len() < 2 {
            break;
        }
    }

    // the working diagonal across the nested stage selections
    let lists: Vec<&Vec<usize>> = stages.iter().map(|s| &s.selected).collect();
    let final_selected = diagonal(&lists);
    if final_selected.len() < 2 {
        return Err(CoreError::ExtractionFailure(
            "diagonal subsequence has fewer than two members".into(),
        ));
    }
    let residual_mass = input.mask_mass(&current_mask);
    Ok(RecursionResult {
        stages,
        decay_trace,
        final_selected,
        initial_mass,
        residual_mass,
        stopped_by,
    })
}

/// Diagonal of nested ascending index lists: element `h` comes from list
/// `min(h, last)`, stopping when that list is exhausted. Nesting makes the
/// result strictly increasing.
fn diagonal(lists: &[&Vec<usize>]) -> Vec<usize> {
    if lists.is_empty() {
        return Vec::new();
    }
    let last = lists.len() - 1;
    let mut out = Vec::new();
    let mut h = 0usize;
    loop {
        let list = lists[h.min(last)];
        if h >= list.len() {
            break;
        }
        out.push(list[h]);
        h += 1;
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompactRun {
    pub compact_index: usize,
    pub recursion: RecursionResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagonalReport {
    pub runs: Vec<CompactRun>,
    /// Diagonal across the per-compact final selections.
    pub final_indices: Vec<usize>,
    /// The member whose values serve as the limit candidate.
    pub limit_member: usize,
    pub limit_values: Vec<f64>,
    /// Per compact: the Cauchy-modulus table of the final subsequence.
    pub cauchy_tables: Vec<Vec<(usize, f64)>>,
}

/// Full pipeline over a compact exhaustion `K_1 ⊆ K_2 ⊆ …`: each compact
/// refines the previous subsequence; the outer diagonal then yields the
/// final indices, the limit candidate and per-compact Cauchy certificates.
pub fn diagonalize(
    input: &SequenceInput,
    exhaustion: &[Vec<bool>],
    cfg: &EngineConfig,
) -> Result<DiagonalReport> {
    if exhaustion.is_empty() {
        return Err(CoreError::EngineConfig(
            "compact exhaustion must contain at least one mask".into(),
        ));
    }
    let mut selected: Vec<usize> = (1..=cfg.j_max.min(input.j_max())).collect();
    let mut runs: Vec<CompactRun> = Vec::new();
    for (idx, mask) in exhaustion.iter().enumerate() {
        let rec = recursive_exhaust(input, mask, &selected, cfg)?;
        selected = rec.final_selected.clone();
        runs.push(CompactRun {
            compact_index: idx,
            recursion: rec,
        });
    }
    let lists: Vec<&Vec<usize>> = runs
        .iter()
        .map(|r| &r.recursion.final_selected)
        .collect();
    let final_indices = diagonal(&lists);
    if final_indices.len() < 2 {
        return Err(CoreError::ExtractionFailure(
            "outer diagonal has fewer than two members".into(),
        ));
    }
    let limit_member = *final_indices.last().expect("nonempty");
    let limit_values = input.member_u(limit_member).to_vec();
    let mut cauchy_tables = Vec::with_capacity(exhaustion.len());
    for mask in exhaustion {
        cauchy_tables.push(cauchy_modulus(input, &final_indices, mask, cfg.q)?);
    }
    Ok(DiagonalReport {
        runs,
        final_indices,
        limit_member,
        limit_values,
        cauchy_tables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::tests_support::{flat_input, test_config};

    #[test]
    fn constant_sequence_full_pipeline() {
        let input = flat_input(12, |_x, _j| 3.0);
        let mask = vec![true; input.space.len()];
        let cfg = test_config(12);
        let rep = diagonalize(&input, &[mask], &cfg).unwrap();
        // diagonal keeps a tail of the identity
        assert!(rep.final_indices.len() >= 2);
        assert!(rep.limit_values.iter().all(|&v| v == 3.0));
        for table in &rep.cauchy_tables {
            assert!(table.iter().all(|&(_, v)| v == 0.0));
        }
        for run in &rep.runs {
            for s in &run.recursion.stages {
                assert_eq!(s.oscillation, 0.0);
            }
        }
    }

    #[test]
    fn nestedness_and_decay_hold() {
        let input = flat_input(16, |x, j| {
            crate::grid::smooth_step((x[0] - 0.5) * j as f64) + 0.1 * x[1]
        });
        let mask = vec![true; input.space.len()];
        let cfg = test_config(16);
        let candidates: Vec<usize> = (1..=cfg.j_max).collect();
        let rec = recursive_exhaust(&input, &mask, &candidates, &cfg).unwrap();
        assert!(!rec.stages.is_empty());
        // nestedness across stages
        for w in rec.stages.windows(2) {
            for j in &w[1].selected {
                assert!(w[0].selected.contains(j));
            }
        }
        // recorded residuals satisfy the decay bound
        for (residual, bound) in &rec.decay_trace {
            assert!(residual <= bound, "{residual} > {bound}");
        }
        // the diagonal is strictly increasing
        for w in rec.final_selected.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn two_cluster_members_survive_recursion() {
        let input = flat_input(12, |_x, j| if j % 2 == 0 { 5.0 } else { 0.0 });
        let mask = vec![true; input.space.len()];
        let mut cfg = test_config(12);
        cfg.mass_bound = 100.0;
        let candidates: Vec<usize> = (1..=cfg.j_max).collect();
        let rec = recursive_exhaust(&input, &mask, &candidates, &cfg).unwrap();
        let parities: Vec<usize> = rec.final_selected.iter().map(|j| j % 2).collect();
        assert!(parities.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn idempotence_of_extraction() {
        // feeding the extracted subsequence back changes nothing
        let input = flat_input(12, |x, j| {
            crate::grid::smooth_step((x[0] - 0.5) * j as f64)
        });
        let mask = vec![true; input.space.len()];
        let cfg = test_config(12);
        let candidates: Vec<usize> = (1..=cfg.j_max).collect();
        let rec1 = recursive_exhaust(&input, &mask, &candidates, &cfg).unwrap();
        let rec2 = recursive_exhaust(&input, &mask, &rec1.final_selected, &cfg).unwrap();
        for (s1, s2) in rec1.stages.iter().zip(&rec2.stages) {
            assert_eq!(s1.a_count, s2.a_count, "same extracted sets");
            assert!(s2.oscillation <= s1.oscillation + 1e-12);
        }
        // the re-run's selection is a subsequence of the first
        for j in &rec2.final_selected {
            assert!(rec1.final_selected.contains(j));
        }
    }

    #[test]
    fn exhaustion_produces_nested_runs() {
        let input = flat_input(16, |x, j| x[0] / j as f64);
        // two nested compacts: left half, then everything
        let mut left = vec![false; input.space.len()];
        for i in 0..input.space.len() {
            if input.space.point(i)[0] <= 0.5 {
                left[i] = true;
            }
        }
        let full = vec![true; input.space.len()];
        let cfg = test_config(16);
        let rep = diagonalize(&input, &[left, full], &cfg).unwrap();
        assert_eq!(rep.runs.len(), 2);
        // run 2 candidates came from run 1's final selection
        for j in &rep.runs[1].recursion.final_selected {
            assert!(rep.runs[0].recursion.final_selected.contains(j));
        }
        assert_eq!(rep.cauchy_tables.len(), 2);
    }
}
