//! Distance upper bounds by control optimization.
//!
//! Works on the time-1 formulation: minimize the sup-norm `‖h‖` of a
//! piecewise-constant control on `[0,1]` subject to `γ_{h,x}(1) = y`,
//! relaxed to the penalty objective `‖h‖² + κ |γ(1) − y|²` with
//! κ-continuation. The search is derivative-free coordinate descent from
//! several deterministic starts: the frozen-coefficient least-squares
//! control, circulation templates (one Fourier mode on the first two
//! control components, the geodesic shape for step-2 frames), and seeded
//! random restarts.

use super::{CCMetricEstimate, EstimateMethod, Witness};
use crate::error::{CoreError, Result};
use crate::flows::{Control, ControlNorm};
use crate::linalg;
use crate::metric::bounds::lower_bound_certified;
use crate::util::seeded_rng;
use crate::vector_fields::VectorFieldFamily;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlOptParams {
    /// Number of control segments on [0,1]; at least 4.
    pub segments: usize,
    /// RK4 substeps per segment.
    pub steps_per_segment: usize,
    /// Required endpoint accuracy `|γ(1) − y|`.
    pub endpoint_tol: f64,
    /// Penalty continuation schedule.
    pub kappa_schedule: Vec<f64>,
    /// Seeded random restarts on top of the deterministic starts.
    pub random_restarts: usize,
    pub seed: u64,
    /// Coordinate-descent sweeps per continuation stage.
    pub max_sweeps: usize,
    pub init_step: f64,
    pub min_step: f64,
}

impl Default for ControlOptParams {
    fn default() -> Self {
        ControlOptParams {
            segments: 16,
            steps_per_segment: 2,
            endpoint_tol: 1e-3,
            kappa_schedule: vec![1e2, 1e3, 1e4, 1e5],
            random_restarts: 4,
            seed: 7,
            max_sweeps: 60,
            init_step: 0.25,
            min_step: 1e-5,
        }
    }
}

/// Endpoint-only RK4 integrator over the flat control matrix.
struct Shooter<'a> {
    family: &'a VectorFieldFamily,
    x0: Vec<f64>,
    segments: usize,
    steps: usize,
    state: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a> Shooter<'a> {
    fn new(family: &'a VectorFieldFamily, x0: &[f64], segments: usize, steps: usize) -> Self {
        let n = family.n;
        Shooter {
            family,
            x0: x0.to_vec(),
            segments,
            steps,
            state: vec![0.0; n],
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    /// Endpoint of the flow driven by `hmat` (segments × m, row-major).
    fn endpoint(&mut self, hmat: &[f64]) -> Vec<f64> {
        let n = self.family.n;
        let m = self.family.m;
        let dt = 1.0 / (self.segments * self.steps) as f64;
        self.state.copy_from_slice(&self.x0);
        for seg in 0..self.segments {
            let h = &hmat[seg * m..(seg + 1) * m];
            for _ in 0..self.steps {
                self.tmp.copy_from_slice(&self.state);
                drift_into(self.family, h, &self.tmp, &mut self.k1);
                for i in 0..n {
                    self.tmp[i] = self.state[i] + 0.5 * dt * self.k1[i];
                }
                drift_into(self.family, h, &self.tmp, &mut self.k2);
                for i in 0..n {
                    self.tmp[i] = self.state[i] + 0.5 * dt * self.k2[i];
                }
                drift_into(self.family, h, &self.tmp, &mut self.k3);
                for i in 0..n {
                    self.tmp[i] = self.state[i] + dt * self.k3[i];
                }
                drift_into(self.family, h, &self.tmp, &mut self.k4);
                for i in 0..n {
                    self.state[i] +=
                        dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
                }
            }
        }
        self.state.clone()
    }
}

fn drift_into(family: &VectorFieldFamily, h: &[f64], x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (hi, row) in h.iter().zip(&family.rows) {
        if *hi == 0.0 {
            continue;
        }
        for (o, p) in out.iter_mut().zip(row) {
            *o += hi * p.eval(x);
        }
    }
}

fn sup_norm(hmat: &[f64], m: usize) -> f64 {
    hmat.chunks(m)
        .map(linalg::norm)
        .fold(0.0, f64::max)
}

fn objective(shooter: &mut Shooter, hmat: &[f64], m: usize, y: &[f64], kappa: f64) -> f64 {
    let sup = sup_norm(hmat, m);
    let end = shooter.endpoint(hmat);
    let gap = linalg::dist(&end, y);
    sup * sup + kappa * gap * gap
}

/// Upper-bound the CC distance by optimizing a piecewise-constant control.
pub fn distance_control_opt(
    family: &VectorFieldFamily,
    x: &[f64],
    y: &[f64],
    params: &ControlOptParams,
) -> Result<CCMetricEstimate> {
    if params.segments < 4 {
        return Err(CoreError::InvalidControl(
            "control optimization needs at least 4 segments".into(),
        ));
    }
    if x.len() != family.n || y.len() != family.n {
        return Err(CoreError::DimensionMismatch {
            expected: family.n,
            got: x.len().max(y.len()),
        });
    }
    let m = family.m;
    let nseg = params.segments;
    let nvars = nseg * m;
    let mut shooter = Shooter::new(family, x, nseg, params.steps_per_segment);

    // Frozen least-squares start: constant control reaching the span
    // projection of y − x in unit time.
    let rows = family.field_matrix(x)?;
    let v: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let (w_ls, resid) = linalg::least_squares(&rows, &v);
    let resid_mass = linalg::norm(&resid);

    let mut starts: Vec<Vec<f64>> = Vec::new();
    let mut ls_start = vec![0.0; nvars];
    for seg in 0..nseg {
        ls_start[seg * m..(seg + 1) * m].copy_from_slice(&w_ls);
    }
    starts.push(ls_start.clone());

    // Circulation templates: one full Fourier mode on the first two
    // components; the amplitude scale comes from the isoperimetric cost of
    // the unreachable residual.
    if m >= 2 {
        let amp = (2.0 * (std::f64::consts::PI * resid_mass).sqrt()).max(0.5);
        for &phase in &[0.0, 0.5, 1.0, 1.5] {
            let phi = phase * std::f64::consts::PI;
            for &a in &[amp, 0.5 * amp] {
                let mut h = ls_start.clone();
                for seg in 0..nseg {
                    let s = (seg as f64 + 0.5) / nseg as f64;
                    let ang = 2.0 * std::f64::consts::PI * s + phi;
                    h[seg * m] += a * ang.cos();
                    h[seg * m + 1] += a * ang.sin();
                }
                starts.push(h);
            }
        }
    }

    let mut rng = seeded_rng(params.seed);
    let scale = linalg::dist(x, y).max(1.0) * 1.5;
    for _ in 0..params.random_restarts {
        let h: Vec<f64> = (0..nvars).map(|_| rng.gen_range(-scale..scale)).collect();
        starts.push(h);
    }

    let step_scale = linalg::dist(x, y).max(0.5);
    let mut best: Option<(f64, f64, Vec<f64>)> = None; // (gap, sup, h)

    for start in starts {
        let mut h = start;
        for &kappa in &params.kappa_schedule {
            let mut step = params.init_step * step_scale;
            let mut cur = objective(&mut shooter, &h, m, y, kappa);
            let mut sweeps = 0;
            while step >= params.min_step && sweeps < params.max_sweeps {
                let mut improved = false;
                for idx in 0..nvars {
                    let old = h[idx];
                    for sign in [1.0, -1.0] {
                        h[idx] = old + sign * step;
                        let cand = objective(&mut shooter, &h, m, y, kappa);
                        if cand < cur {
                            cur = cand;
                            improved = true;
                            break;
                        }
                        h[idx] = old;
                    }
                }
                if !improved {
                    step *= 0.5;
                }
                sweeps += 1;
            }
        }
        let end = shooter.endpoint(&h);
        let gap = linalg::dist(&end, y);
        let sup = sup_norm(&h, m);
        let better = match &best {
            None => true,
            Some((bgap, bsup, _)) => {
                let feas = gap <= params.endpoint_tol;
                let bfeas = *bgap <= params.endpoint_tol;
                match (feas, bfeas) {
                    (true, true) => sup < *bsup,
                    (true, false) => true,
                    (false, true) => false,
                    (false, false) => gap < *bgap,
                }
            }
        };
        if better {
            best = Some((gap, sup, h));
        }
    }

    let (gap, sup, h) = best.expect("at least one start");
    if gap > params.endpoint_tol {
        return Err(CoreError::EndpointToleranceUnmet {
            gap,
            tol: params.endpoint_tol,
        });
    }

    // Endpoint-tolerance correction mirrors the snap correction: certified
    // speed bound over a ball containing everything reachable here.
    let r = linalg::norm(x).max(linalg::norm(y)) + sup + 1.0;
    let speed = family.speed_bound(r);
    let correction = speed * gap;
    let upper = sup + correction;
    let sep = linalg::dist(x, y);
    let r_cert = (linalg::norm(x).max(linalg::norm(y)) + sep + 1.0).max(r);
    let lower = lower_bound_certified(family, x, y, r_cert)?.min(upper);

    let values: Vec<Vec<f64>> = h.chunks(m).map(|c| c.to_vec()).collect();
    let witness = Control::uniform(1.0, values, ControlNorm::EuclideanRm)?;
    CCMetricEstimate::new(lower, upper, EstimateMethod::ControlOpt, Witness::Control(witness), correction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::integrate;
    use crate::metric::heisenberg::heisenberg_distance;

    #[test]
    fn euclidean_straight_line_is_recovered() {
        let fam = VectorFieldFamily::euclidean(2);
        let params = ControlOptParams {
            segments: 8,
            ..Default::default()
        };
        let x = [0.1, -0.2];
        let y = [0.7, 0.4];
        let est = distance_control_opt(&fam, &x, &y, &params).unwrap();
        let true_d = linalg::dist(&x, &y);
        assert!(
            (est.upper - true_d).abs() < 1e-3,
            "upper {} vs true {true_d}",
            est.upper
        );
        assert!(est.lower <= true_d + 1e-12);
    }

    #[test]
    fn heisenberg_horizontal_target() {
        let fam = VectorFieldFamily::heisenberg();
        let params = ControlOptParams::default();
        let est = distance_control_opt(&fam, &[0.0; 3], &[1.0, 0.0, 0.0], &params).unwrap();
        assert!(est.upper <= 1.02, "upper {}", est.upper);
        assert!(est.upper >= 0.999);
    }

    #[test]
    fn heisenberg_vertical_target_near_dido() {
        let fam = VectorFieldFamily::heisenberg();
        let params = ControlOptParams {
            segments: 32,
            max_sweeps: 80,
            ..Default::default()
        };
        let target = [0.0, 0.0, 0.1];
        let est = distance_control_opt(&fam, &[0.0; 3], &target, &params).unwrap();
        let oracle = heisenberg_distance(&[0.0; 3], &target);
        assert!(
            (est.upper - oracle).abs() / oracle < 0.05,
            "upper {} vs oracle {oracle}",
            est.upper
        );
    }

    #[test]
    fn witness_control_is_consistent() {
        let fam = VectorFieldFamily::heisenberg();
        let params = ControlOptParams::default();
        let x = [0.0; 3];
        let y = [0.4, 0.3, 0.02];
        let est = distance_control_opt(&fam, &x, &y, &params).unwrap();
        let Witness::Control(ref c) = est.witness else {
            panic!("control-opt witness is a control");
        };
        // ‖h‖ · T ≤ upper + tolerance
        assert!(c.sup_norm() * c.horizon() <= est.upper + 1e-9);
        let path = integrate(&fam, &x, c, 8, None).unwrap();
        let gap = linalg::dist(path.endpoint(), &y);
        assert!(gap <= params.endpoint_tol * 1.5, "gap {gap}");
    }

    #[test]
    fn deterministic_given_seed() {
        let fam = VectorFieldFamily::heisenberg();
        let params = ControlOptParams::default();
        let a = distance_control_opt(&fam, &[0.0; 3], &[0.3, 0.2, 0.01], &params).unwrap();
        let b = distance_control_opt(&fam, &[0.0; 3], &[0.3, 0.2, 0.01], &params).unwrap();
        assert_eq!(a.upper.to_bits(), b.upper.to_bits());
    }

    #[test]
    fn too_few_segments_rejected() {
        let fam = VectorFieldFamily::euclidean(2);
        let params = ControlOptParams {
            segments: 2,
            ..Default::default()
        };
        assert!(distance_control_opt(&fam, &[0.0, 0.0], &[1.0, 0.0], &params).is_err());
    }
}
