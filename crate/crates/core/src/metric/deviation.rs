//! Locally uniform metric deviation `sup |d̂_j − d̂|` over sampled pairs.

use super::control_opt::{distance_control_opt, ControlOptParams};
use super::graph::{build_graph, distance_graph, GraphBuildParams};
use crate::error::Result;
use crate::util::BoxRegion;
use crate::vector_fields::FamilySequence;
use serde::{Deserialize, Serialize};

/// Estimator settings shared by both families of a comparison; identical
/// settings cancel the discretization bias.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DeviationEstimator {
    Graph {
        region: BoxRegion,
        spacing: Vec<f64>,
        params: GraphBuildParams,
    },
    ControlOpt(ControlOptParams),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairDeviation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d_limit: f64,
    pub d_member: f64,
    /// Certified interval widths of the two estimates.
    pub width_limit: f64,
    pub width_member: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricDeviation {
    pub j: usize,
    pub sup_abs_diff: f64,
    pub pairs: Vec<PairDeviation>,
}

/// Estimate `sup` over the sampled pairs of `|d̂_j − d̂|`, using the same
/// estimator settings for both metrics.
pub fn metric_deviation(
    seq: &FamilySequence,
    j: usize,
    pairs: &[(Vec<f64>, Vec<f64>)],
    estimator: &DeviationEstimator,
) -> Result<MetricDeviation> {
    let member = seq.member(j)?;
    let mut out = Vec::with_capacity(pairs.len());
    let mut sup = 0.0_f64;
    match estimator {
        DeviationEstimator::Graph {
            region,
            spacing,
            params,
        } => {
            let g_limit = build_graph(&seq.limit, region, spacing, *params)?;
            let g_member = build_graph(&member, region, spacing, *params)?;
            for (x, y) in pairs {
                let e_l = distance_graph(&g_limit, &seq.limit, x, y)?;
                let e_m = distance_graph(&g_member, &member, x, y)?;
                sup = sup.max((e_m.upper - e_l.upper).abs());
                out.push(PairDeviation {
                    x: x.clone(),
                    y: y.clone(),
                    d_limit: e_l.upper,
                    d_member: e_m.upper,
                    width_limit: e_l.width(),
                    width_member: e_m.width(),
                });
            }
        }
        DeviationEstimator::ControlOpt(params) => {
            for (x, y) in pairs {
                let e_l = distance_control_opt(&seq.limit, x, y, params)?;
                let e_m = distance_control_opt(&member, x, y, params)?;
                sup = sup.max((e_m.upper - e_l.upper).abs());
                out.push(PairDeviation {
                    x: x.clone(),
                    y: y.clone(),
                    d_limit: e_l.upper,
                    d_member: e_m.upper,
                    width_limit: e_l.width(),
                    width_member: e_m.width(),
                });
            }
        }
    }
    Ok(MetricDeviation {
        j,
        sup_abs_diff: sup,
        pairs: out,
    })
}

/// Deviations for several members at once, building the limit-side graph
/// only once.
pub fn metric_deviation_batch(
    seq: &FamilySequence,
    js: &[usize],
    pairs: &[(Vec<f64>, Vec<f64>)],
    estimator: &DeviationEstimator,
) -> Result<Vec<MetricDeviation>> {
    match estimator {
        DeviationEstimator::Graph {
            region,
            spacing,
            params,
        } => {
            let g_limit = build_graph(&seq.limit, region, spacing, *params)?;
            let limit_estimates: Vec<_> = pairs
                .iter()
                .map(|(x, y)| distance_graph(&g_limit, &seq.limit, x, y))
                .collect::<Result<_>>()?;
            let mut out = Vec::with_capacity(js.len());
            for &j in js {
                let member = seq.member(j)?;
                let g_member = build_graph(&member, region, spacing, *params)?;
                let mut sup = 0.0_f64;
                let mut rows = Vec::with_capacity(pairs.len());
                for ((x, y), e_l) in pairs.iter().zip(&limit_estimates) {
                    let e_m = distance_graph(&g_member, &member, x, y)?;
                    sup = sup.max((e_m.upper - e_l.upper).abs());
                    rows.push(PairDeviation {
                        x: x.clone(),
                        y: y.clone(),
                        d_limit: e_l.upper,
                        d_member: e_m.upper,
                        width_limit: e_l.width(),
                        width_member: e_m.width(),
                    });
                }
                out.push(MetricDeviation {
                    j,
                    sup_abs_diff: sup,
                    pairs: rows,
                });
            }
            Ok(out)
        }
        DeviationEstimator::ControlOpt(_) => js
            .iter()
            .map(|&j| metric_deviation(seq, j, pairs, estimator))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::regression_slope;
    use crate::vector_fields::VectorFieldFamily;

    fn graph_estimator_euclid() -> DeviationEstimator {
        DeviationEstimator::Graph {
            region: BoxRegion::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(),
            spacing: vec![0.125, 0.125],
            params: GraphBuildParams::default(),
        }
    }

    #[test]
    fn identical_sequence_has_zero_deviation() {
        let seq = FamilySequence::identical(VectorFieldFamily::euclidean(2));
        let pairs = vec![
            (vec![0.0, 0.0], vec![1.0, 0.0]),
            (vec![0.25, 0.5], vec![0.875, 0.125]),
        ];
        let dev = metric_deviation(&seq, 4, &pairs, &graph_estimator_euclid()).unwrap();
        assert_eq!(dev.sup_abs_diff, 0.0);
    }

    #[test]
    fn scaled_euclidean_deviation_is_exact() {
        // X^j = (1 + 1/j) X scales every edge weight by 1/(1 + 1/j), so the
        // deviation over a pair at graph distance D is D (1 − 1/(1 + 1/j)).
        let seq = FamilySequence::scaled(VectorFieldFamily::euclidean(2), 1.0);
        let pairs = vec![(vec![0.0, 0.0], vec![1.0, 0.0])];
        let est = graph_estimator_euclid();
        for j in [1usize, 2, 4] {
            let dev = metric_deviation(&seq, j, &pairs, &est).unwrap();
            let jf = j as f64;
            let expect = 1.0 * (1.0 - 1.0 / (1.0 + 1.0 / jf));
            assert!(
                (dev.sup_abs_diff - expect).abs() < 1e-12,
                "j={j}: {} vs {expect}",
                dev.sup_abs_diff
            );
        }
    }

    #[test]
    fn scaled_heisenberg_deviation_decreases_with_fast_slope() {
        let seq = FamilySequence::scaled(VectorFieldFamily::heisenberg(), 0.25);
        let delta = 0.125;
        let est = DeviationEstimator::Graph {
            region: BoxRegion::new(vec![0.0, 0.0, -0.05], vec![1.0, 1.0, 0.3]).unwrap(),
            spacing: vec![delta, delta, delta * delta / 2.0],
            params: GraphBuildParams::default(),
        };
        let pairs = vec![
            (vec![0.0, 0.0, 0.0], vec![1.0, 0.875, 0.0]),
            (vec![0.125, 0.25, 0.0], vec![0.875, 0.875, 0.25]),
        ];
        let js = [1usize, 2, 4, 8];
        let mut devs = Vec::new();
        for &j in &js {
            let d = metric_deviation(&seq, j, &pairs, &est).unwrap();
            devs.push(d.sup_abs_diff);
        }
        for w in devs.windows(2) {
            assert!(w[1] < w[0], "strictly decreasing: {devs:?}");
        }
        let xs: Vec<f64> = js.iter().map(|&j| (j as f64).ln()).collect();
        let ys: Vec<f64> = devs.iter().map(|d| d.ln()).collect();
        let slope = regression_slope(&xs, &ys);
        assert!(slope <= -0.8, "slope {slope}, devs {devs:?}");
    }
}
