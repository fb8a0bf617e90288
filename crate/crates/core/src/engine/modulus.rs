//! Cauchy-modulus tables: exact pairwise tail suprema of `L^q` differences.

use super::SequenceInput;
use crate::error::{CoreError, Result};

/// For each tail position `t` the entry `(H, sup)` with `H = selected[t]`
/// and `sup = max_{h,k ≥ t} ‖u_{selected[h]} − u_{selected[k]}‖_{L^q(mask)}`.
/// The last entry covers the final genuine pair.
pub fn cauchy_modulus(
    input: &SequenceInput,
    selected: &[usize],
    mask: &[bool],
    q: f64,
) -> Result<Vec<(usize, f64)>> {
    if selected.len() < 2 {
        return Err(CoreError::ExtractionFailure(
            "cauchy modulus needs at least two members".into(),
        ));
    }
    let s = selected.len();
    // pairwise norms once
    let mut pair = vec![0.0_f64; s * s];
    for a in 0..s {
        for b in a + 1..s {
            let v = input.lq_diff(selected[a], selected[b], mask, q);
            pair[a * s + b] = v;
            pair[b * s + a] = v;
        }
    }
    // suffix maxima
    let mut out = Vec::with_capacity(s - 1);
    for t in 0..s - 1 {
        let mut sup = 0.0_f64;
        for a in t..s {
            for b in a + 1..s {
                sup = sup.max(pair[a * s + b]);
            }
        }
        out.push((selected[t], sup));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::tests_support::flat_input;

    #[test]
    fn identical_members_all_zero() {
        let input = flat_input(8, |_x, _j| 1.5);
        let mask = vec![true; input.space.len()];
        let selected: Vec<usize> = (1..=input.j_max()).collect();
        let table = cauchy_modulus(&input, &selected, &mask, 1.0).unwrap();
        assert!(table.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn reciprocal_sequence_matches_arithmetic() {
        // u_h = 1/h on the unit square (λ(K) = 1, q = 1):
        // entry at position of H equals 1/H − 1/last.
        let input = flat_input(8, |_x, j| 1.0 / j as f64);
        let mask = vec![true; input.space.len()];
        let selected: Vec<usize> = (1..=input.j_max()).collect();
        let table = cauchy_modulus(&input, &selected, &mask, 1.0).unwrap();
        let last = *selected.last().unwrap() as f64;
        for &(h, v) in &table {
            let expect = 1.0 / h as f64 - 1.0 / last;
            assert!(
                (v - expect).abs() < 1e-10,
                "H = {h}: {v} vs {expect}"
            );
        }
        // strictly decreasing table
        for w in table.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
    }

    #[test]
    fn two_cluster_tail_is_bounded_below() {
        let input = flat_input(8, |_x, j| if j % 2 == 0 { 1.0 } else { 0.0 });
        let mask = vec![true; input.space.len()];
        let selected: Vec<usize> = (1..=input.j_max()).collect();
        let table = cauchy_modulus(&input, &selected, &mask, 1.0).unwrap();
        // without extraction, the gap never vanishes
        for &(_, v) in &table {
            assert!(v >= 0.999, "cluster gap persists: {v}");
        }
    }
}
