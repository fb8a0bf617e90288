//! Hypothesis audit: the four standing assumptions, measured on the sample
//! with worst witnesses. The audit reports and never aborts.

use super::{EngineConfig, SequenceInput};
use crate::error::Result;
use crate::util::seeded_rng;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisOutcome {
    pub pass: bool,
    /// Measured worst value against its threshold.
    pub measured: f64,
    pub threshold: f64,
    pub witness: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    /// (i) metric convergence: per-j sup of |d_j − d| over sampled pairs.
    pub metric_sup_per_j: Vec<f64>,
    pub metric: HypothesisOutcome,
    /// (ii) doubling of (X, d, λ).
    pub doubling: HypothesisOutcome,
    /// (iii)/(iii') Poincaré uniformity across j.
    pub poincare: HypothesisOutcome,
    /// (iv) mass bounds.
    pub mass: HypothesisOutcome,
    pub mass_per_j: Vec<f64>,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.metric.pass && self.doubling.pass && self.poincare.pass && self.mass.pass
    }

    pub fn failure_summary(&self) -> String {
        let mut parts = Vec::new();
        for (tag, h) in [
            ("(i) metric convergence", &self.metric),
            ("(ii) doubling", &self.doubling),
            ("(iii) Poincaré", &self.poincare),
            ("(iv) mass bounds", &self.mass),
        ] {
            if !h.pass {
                parts.push(format!(
                    "{tag}: measured {} > {} [{}]",
                    h.measured, h.threshold, h.witness
                ));
            }
        }
        parts.join("; ")
    }
}

/// Audit hypotheses (i)-(iv) over the masked compact.
pub fn hypothesis_audit(
    input: &SequenceInput,
    k_mask: &[bool],
    cfg: &EngineConfig,
) -> Result<AuditReport> {
    input.validate()?;
    let mut rng = seeded_rng(cfg.seed ^ 0xa0d1);
    let k_indices: Vec<usize> = (0..input.space.len()).filter(|&i| k_mask[i]).collect();
    let jmax = input.j_max();

    // (i): sup over sampled pairs of |d_j − d|, per member.
    let pairs: Vec<(usize, usize)> = (0..cfg.audit_pairs.max(1))
        .map(|_| {
            let a = k_indices[rng.gen_range(0..k_indices.len())];
            let b = k_indices[rng.gen_range(0..k_indices.len())];
            (a, b)
        })
        .collect();
    let metric_sup_per_j: Vec<f64> = (1..=jmax)
        .into_iter()
        .map(|j| -> Result<f64> {
            let sj = input.member_space(j)?;
            let mut sup = 0.0_f64;
            for &(a, b) in &pairs {
                sup = sup.max((sj.dist(a, b) - input.space.dist(a, b)).abs());
            }
            Ok(sup)
        })
        .collect::<Result<_>>()?;
    let tail = *metric_sup_per_j.last().expect("jmax >= 1");
    let metric = HypothesisOutcome {
        pass: tail <= cfg.metric_tol,
        measured: tail,
        threshold: cfg.metric_tol,
        witness: format!("sup over {} sampled pairs at j = {jmax}", pairs.len()),
    };

    // (ii): doubling of the limit metric on sampled balls.
    let mut doubling_measured = 0.0_f64;
    let mut doubling_witness = String::from("no admissible balls");
    for _ in 0..cfg.audit_balls.max(1) {
        let c = k_indices[rng.gen_range(0..k_indices.len())];
        let r = cfg.r_d * rng.gen_range(0.05..0.45);
        let inner = input.space.ball(c, r)?;
        if !(inner.mass > 0.0) {
            continue;
        }
        let outer = input.space.ball(c, 2.0 * r)?;
        let ratio = outer.mass / inner.mass;
        if ratio > doubling_measured {
            doubling_measured = ratio;
            doubling_witness = format!("center {c}, r = {r}");
        }
    }
    let doubling = HypothesisOutcome {
        pass: doubling_measured <= cfg.c_d,
        measured: doubling_measured,
        threshold: cfg.c_d,
        witness: doubling_witness,
    };

    // (iii)/(iii'): ‖u_j − u_j(B^j)‖_{L^q(B^j)} ≤ modulus(r) · μ_j(α B^j)
    // over sampled balls in the member metrics.
    let ball_samples: Vec<(usize, f64)> = (0..cfg.audit_balls.max(1))
        .map(|_| {
            let c = k_indices[rng.gen_range(0..k_indices.len())];
            let r = cfg.r_p * rng.gen_range(0.1..0.9);
            (c, r)
        })
        .collect();
    let poincare_rows: Vec<Result<(f64, String)>> = (1..=jmax)
        .into_par_iter()
        .map(|j| -> Result<(f64, String)> {
            let sj = input.member_space(j)?;
            let uj = input.member_u(j);
            let muj = input.member_mu(j);
            let mut worst = 0.0_f64;
            let mut witness = String::new();
            for &(c, r) in &ball_samples {
                let ball = sj.ball(c, r)?;
                if ball.indices.is_empty() {
                    continue;
                }
                let mean = sj.ball_mean(uj, c, r)?;
                let mut num = 0.0;
                for &i in &ball.indices {
                    num += sj.weights[i as usize] * (uj[i as usize] - mean).abs().powf(cfg.q);
                }
                let num = num.powf(1.0 / cfg.q);
                let alpha_ball = sj.ball(c, cfg.alpha * r)?;
                let mu_mass: f64 = alpha_ball
                    .indices
                    .iter()
                    .map(|&i| muj[i as usize])
                    .sum();
                let rhs = cfg.poincare.value(r) * mu_mass;
                // normalized excess: ≤ 1 means the hypothesis holds here
                let excess = if rhs > 0.0 {
                    num / rhs
                } else if num <= 1e-13 {
                    0.0
                } else {
                    f64::INFINITY
                };
                if excess > worst {
                    worst = excess;
                    witness = format!("j = {j}, center {c}, r = {r}");
                }
            }
            Ok((worst, witness))
        })
        .collect();
    let mut poincare_measured = 0.0_f64;
    let mut poincare_witness = String::from("all sampled balls degenerate");
    for row in poincare_rows {
        let (worst, witness) = row?;
        if worst > poincare_measured {
            poincare_measured = worst;
            poincare_witness = witness;
        }
    }
    let poincare = HypothesisOutcome {
        pass: poincare_measured <= 1.0,
        measured: poincare_measured,
        threshold: 1.0,
        witness: poincare_witness,
    };

    // (iv): ‖u_j‖_{L¹(K)} + μ_j(K) ≤ M_K.
    let mut mass_per_j = Vec::with_capacity(jmax);
    let mut mass_measured = 0.0_f64;
    let mut mass_witness = String::new();
    for j in 1..=jmax {
        let uj = input.member_u(j);
        let muj = input.member_mu(j);
        let mut l1 = 0.0;
        let mut mu = 0.0;
        for &i in &k_indices {
            l1 += input.space.weights[i] * uj[i].abs();
            mu += muj[i];
        }
        let total = l1 + mu;
        if total > mass_measured {
            mass_measured = total;
            mass_witness = format!("j = {j}");
        }
        mass_per_j.push(total);
    }
    let mass = HypothesisOutcome {
        pass: mass_measured <= cfg.mass_bound,
        measured: mass_measured,
        threshold: cfg.mass_bound,
        witness: mass_witness,
    };

    Ok(AuditReport {
        metric_sup_per_j,
        metric,
        doubling,
        poincare,
        mass,
        mass_per_j,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::tests_support::{flat_input, test_config};
    use crate::engine::PoincareForm;

    #[test]
    fn constant_sequence_passes_all() {
        let input = flat_input(16, |_x, _j| 1.0);
        let mask = vec![true; input.space.len()];
        let mut cfg = test_config(16);
        cfg.c_d = 16.0; // coarse-lattice small-ball ratios are noisy
        let rep = hypothesis_audit(&input, &mask, &cfg).unwrap();
        assert!(rep.all_pass(), "{}", rep.failure_summary());
        assert!(rep.metric.measured == 0.0);
    }

    #[test]
    fn unbounded_masses_fail_iv() {
        let mut input = flat_input(16, |_x, _j| 0.5);
        // μ_j(K) = j: inject linearly growing masses
        let m = input.space.len();
        for (idx, mu) in input.mu_members.iter_mut().enumerate() {
            let j = idx + 1;
            *mu = vec![j as f64 / m as f64; m];
        }
        let mask = vec![true; m];
        let mut cfg = test_config(16);
        cfg.c_d = 16.0;
        cfg.mass_bound = 3.0;
        let rep = hypothesis_audit(&input, &mask, &cfg).unwrap();
        assert!(!rep.mass.pass);
        assert!(rep.mass.witness.contains(&format!("j = {}", input.j_max())));
        assert!(rep.metric.pass && rep.doubling.pass, "{}", rep.failure_summary());
    }

    #[test]
    fn modulus_form_audits_too() {
        let input = flat_input(16, |x, j| x[0] + x[1] / (j as f64 + 1.0));
        let mask = vec![true; input.space.len()];
        let mut cfg = test_config(16);
        cfg.c_d = 16.0;
        cfg.poincare = PoincareForm::Modulus {
            table: vec![(0.05, 0.4), (0.2, 1.0), (0.8, 3.0)],
        };
        let rep = hypothesis_audit(&input, &mask, &cfg).unwrap();
        // smooth data on a flat grid: quotient stays within the generous
        // modulus
        assert!(rep.poincare.pass, "{}", rep.failure_summary());
    }
}
