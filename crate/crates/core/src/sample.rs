//! Finite weighted point clouds standing in for the metric measure space.
//!
//! A `SampledCompact` carries points, λ-weights and a metric accessor. Ball
//! queries use closed balls throughout. Lattice-backed clouds keep their
//! grid structure so that formula metrics can prefilter ball queries with a
//! bounding box instead of scanning every point.

use crate::error::{CoreError, Result};
use crate::linalg;
use crate::metric::graph::{GraphDiscretization, LatticeSpec};
use crate::metric::heisenberg;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Distance accessor between sample indices.
#[derive(Debug, Clone)]
pub enum SampleMetric {
    /// `d = scale · |p − q|`.
    Euclidean { scale: f64 },
    /// Exact Heisenberg CC distance, `d = scale · d_H(p, q)`.
    HeisenbergExact { scale: f64 },
    /// Full dense matrix, row-major M×M.
    Precomputed { dists: Arc<Vec<f64>>, len: usize },
    /// Distances through a lattice graph; sample i sits at graph node
    /// `node_of_sample[i]`.
    GraphBacked {
        graph: Arc<GraphDiscretization>,
        node_of_sample: Arc<Vec<u32>>,
    },
}

impl SampleMetric {
    fn dist_points(&self, p: &[f64], q: &[f64]) -> Option<f64> {
        match self {
            SampleMetric::Euclidean { scale } => Some(scale * linalg::dist(p, q)),
            SampleMetric::HeisenbergExact { scale } => {
                Some(scale * heisenberg::heisenberg_distance(p, q))
            }
            _ => None,
        }
    }

    /// Per-axis half-widths of a box certainly containing `B(center, r)`,
    /// for metrics that admit one.
    fn ball_half_widths(&self, center: &[f64], r: f64) -> Option<Vec<f64>> {
        match self {
            SampleMetric::Euclidean { scale } => {
                Some(vec![r / scale; center.len()])
            }
            SampleMetric::HeisenbergExact { scale } => {
                Some(heisenberg::ball_half_widths(center, r / scale).to_vec())
            }
            _ => None,
        }
    }
}

/// Weighted point cloud with a metric accessor.
#[derive(Debug, Clone)]
pub struct SampledCompact {
    pub name: String,
    pub dim: usize,
    /// Flat row-major coordinates, `points[i*dim..(i+1)*dim]`.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub metric: SampleMetric,
    /// Present when the points form a rectangular lattice in row-major
    /// order; enables box prefilters on ball queries.
    pub lattice: Option<LatticeSpec>,
}

/// Result of a ball query: member indices and their total λ-mass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BallQuery {
    pub indices: Vec<u32>,
    pub mass: f64,
}

impl SampledCompact {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        points: Vec<f64>,
        weights: Vec<f64>,
        metric: SampleMetric,
    ) -> Result<Self> {
        if points.len() != weights.len() * dim {
            return Err(CoreError::DimensionMismatch {
                expected: weights.len() * dim,
                got: points.len(),
            });
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(CoreError::SampleMetric(
                "all weights must be positive and finite".into(),
            ));
        }
        Ok(SampledCompact {
            name: name.into(),
            dim,
            points,
            weights,
            metric,
            lattice: None,
        })
    }

    /// Lattice cloud: nodes in row-major order (last axis fastest), each
    /// weighted by the Lebesgue cell volume.
    pub fn from_lattice(
        name: impl Into<String>,
        lattice: LatticeSpec,
        metric: SampleMetric,
    ) -> Result<Self> {
        let dim = lattice.dim();
        let count = lattice.len();
        let cell: f64 = lattice.spacing.iter().product();
        let mut points = Vec::with_capacity(count * dim);
        for i in 0..count {
            points.extend_from_slice(&lattice.point(i));
        }
        let mut s = Self::new(name, dim, points, vec![cell; count], metric)?;
        s.lattice = Some(lattice);
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Distance between two sample indices.
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        match &self.metric {
            SampleMetric::Precomputed { dists, len } => dists[a * len + b],
            SampleMetric::GraphBacked {
                graph,
                node_of_sample,
            } => {
                let row = graph.shortest_dists(node_of_sample[a]);
                row[node_of_sample[b] as usize]
            }
            m => m
                .dist_points(self.point(a), self.point(b))
                .expect("formula metric"),
        }
    }

    /// Distances from one index to every sample point.
    pub fn dists_from(&self, center: usize) -> Vec<f64> {
        match &self.metric {
            SampleMetric::Precomputed { dists, len } => {
                dists[center * len..(center + 1) * len].to_vec()
            }
            SampleMetric::GraphBacked {
                graph,
                node_of_sample,
            } => {
                let row = graph.shortest_dists(node_of_sample[center]);
                node_of_sample
                    .iter()
                    .map(|&nd| row[nd as usize])
                    .collect()
            }
            m => {
                let c = self.point(center).to_vec();
                (0..self.len())
                    .map(|i| m.dist_points(&c, self.point(i)).expect("formula metric"))
                    .collect()
            }
        }
    }

    /// Closed-ball query `{ i : d(center, i) ≤ r }` with total mass.
    pub fn ball(&self, center: usize, r: f64) -> Result<BallQuery> {
        if !(r > 0.0) {
            return Err(CoreError::InvalidRadius(r));
        }
        let mut indices = Vec::new();
        let mut mass = 0.0;
        let cpt = self.point(center).to_vec();
        if let (Some(lat), Some(hw)) = (
            self.lattice.as_ref(),
            self.metric.ball_half_widths(&cpt, r),
        ) {
            // iterate only the lattice sub-box certainly containing the ball
            let dim = self.dim;
            let mut lo = vec![0i64; dim];
            let mut hi = vec![0i64; dim];
            for k in 0..dim {
                let p0 = (cpt[k] - hw[k] - lat.origin[k]) / lat.spacing[k];
                let p1 = (cpt[k] + hw[k] - lat.origin[k]) / lat.spacing[k];
                lo[k] = (p0.ceil() as i64 - 1).max(0);
                hi[k] = (p1.floor() as i64 + 1).min(lat.counts[k] as i64 - 1);
                if lo[k] > hi[k] {
                    return Ok(BallQuery { indices, mass });
                }
            }
            let mut cur = lo.clone();
            loop {
                let flat = lat.flat_index(&cur).expect("in bounds");
                let d = self
                    .metric
                    .dist_points(&cpt, self.point(flat))
                    .expect("formula metric");
                if d <= r {
                    indices.push(flat as u32);
                    mass += self.weights[flat];
                }
                let mut k = dim;
                loop {
                    if k == 0 {
                        indices.sort_unstable();
                        return Ok(BallQuery { indices, mass });
                    }
                    k -= 1;
                    cur[k] += 1;
                    if cur[k] <= hi[k] {
                        break;
                    }
                    cur[k] = lo[k];
                }
            }
        }
        let dists = self.dists_from(center);
        for (i, &d) in dists.iter().enumerate() {
            if d <= r {
                indices.push(i as u32);
                mass += self.weights[i];
            }
        }
        Ok(BallQuery { indices, mass })
    }

    /// Weighted mean of `u` over the closed ball.
    pub fn ball_mean(&self, u: &[f64], center: usize, r: f64) -> Result<f64> {
        if u.len() != self.len() {
            return Err(CoreError::DimensionMismatch {
                expected: self.len(),
                got: u.len(),
            });
        }
        let q = self.ball(center, r)?;
        if q.indices.is_empty() || !(q.mass > 0.0) {
            return Err(CoreError::EmptyBall { center, radius: r });
        }
        // shifted mean: exact on constant data
        let base = u[q.indices[0] as usize];
        let mut s = 0.0;
        for &i in &q.indices {
            s += self.weights[i as usize] * (u[i as usize] - base);
        }
        Ok(base + s / q.mass)
    }

    /// CSV rows `x_1,…,x_n,weight`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for k in 1..=self.dim {
            out.push_str(&format!("x{k},"));
        }
        out.push_str("weight\n");
        for i in 0..self.len() {
            for v in self.point(i) {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{}\n", self.weights[i]));
        }
        out
    }

    /// Parse the CSV produced by [`Self::to_csv`]; metric supplied by the
    /// caller.
    pub fn from_csv(name: &str, text: &str, metric: SampleMetric) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| CoreError::FileFormat("empty point-cloud CSV".into()))?;
        let dim = header.split(',').count() - 1;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| CoreError::FileFormat(format!("line {}: {e}", ln + 2)))
                })
                .collect::<Result<_>>()?;
            if vals.len() != dim + 1 {
                return Err(CoreError::FileFormat(format!(
                    "line {}: expected {} fields",
                    ln + 2,
                    dim + 1
                )));
            }
            points.extend_from_slice(&vals[..dim]);
            weights.push(vals[dim]);
        }
        Self::new(name, dim, points, weights, metric)
    }
}

/// Radius assignment for covering centers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum RadiusRule {
    Constant(f64),
    PerPoint(Vec<f64>),
}

/// A 5r-covering: pairwise disjoint balls whose 5-fold dilates cover the
/// active sample, with both certificates checked exactly post hoc.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringResult {
    pub centers: Vec<u32>,
    pub radii: Vec<f64>,
    pub disjoint_ok: bool,
    pub coverage_ok: bool,
    /// `min over center pairs of d(x_a, x_b) − (r_a + r_b)`; positive iff
    /// disjointness holds.
    pub disjoint_margin: f64,
    /// `max over active points of (min_ℓ d(p, x_ℓ) − 5 r_ℓ)`; nonpositive
    /// iff coverage holds.
    pub coverage_excess: f64,
    pub discarded: usize,
}

/// Greedy 5r-covering: repeatedly take the uncovered point of largest
/// weight (ties to the lowest index) as a center unless its ball meets an
/// accepted ball, in which case it is discarded.
pub fn five_r_covering(
    space: &SampledCompact,
    active: Option<&[bool]>,
    rule: &RadiusRule,
    r_max: f64,
) -> Result<CoveringResult> {
    if !(r_max > 0.0) {
        return Err(CoreError::InvalidRadius(r_max));
    }
    let m = space.len();
    if let Some(a) = active {
        if a.len() != m {
            return Err(CoreError::DimensionMismatch {
                expected: m,
                got: a.len(),
            });
        }
    }
    let radius_of = |i: usize| -> Result<f64> {
        let r = match rule {
            RadiusRule::Constant(r) => *r,
            RadiusRule::PerPoint(rs) => *rs.get(i).ok_or(CoreError::InvalidRadius(0.0))?,
        };
        if !(r > 0.0) || r >= r_max {
            return Err(CoreError::InvalidRadius(r));
        }
        Ok(r)
    };

    // Visit order: weight descending, index ascending.
    let mut order: Vec<u32> = (0..m as u32)
        .filter(|&i| active.map_or(true, |a| a[i as usize]))
        .collect();
    order.sort_by(|&a, &b| {
        space.weights[b as usize]
            .total_cmp(&space.weights[a as usize])
            .then(a.cmp(&b))
    });

    let mut covered = vec![false; m];
    let mut centers: Vec<u32> = Vec::new();
    let mut radii: Vec<f64> = Vec::new();
    let mut discarded = 0usize;
    let mut discarded_flag = vec![false; m];

    let mut cursor = 0usize;
    loop {
        // next uncovered, undiscarded candidate in the fixed order
        while cursor < order.len() {
            let i = order[cursor] as usize;
            if !covered[i] && !discarded_flag[i] {
                break;
            }
            cursor += 1;
        }
        if cursor >= order.len() {
            break;
        }
        let cand = order[cursor] as usize;
        let r_c = radius_of(cand)?;
        // reject when the candidate ball meets an accepted ball
        let mut meets = false;
        for (idx, &c) in centers.iter().enumerate() {
            if space.dist(cand, c as usize) <= r_c + radii[idx] {
                meets = true;
                break;
            }
        }
        if meets {
            discarded_flag[cand] = true;
            discarded += 1;
            continue;
        }
        centers.push(cand as u32);
        radii.push(r_c);
        let q = space.ball(cand, 5.0 * r_c)?;
        for &i in &q.indices {
            covered[i as usize] = true;
        }
        covered[cand] = true;
    }

    // Exact post-hoc certificates.
    let mut disjoint_margin = f64::INFINITY;
    for a in 0..centers.len() {
        for b in a + 1..centers.len() {
            let d = space.dist(centers[a] as usize, centers[b] as usize);
            disjoint_margin = disjoint_margin.min(d - (radii[a] + radii[b]));
        }
    }
    let mut coverage_excess = f64::NEG_INFINITY;
    let mut any_active = false;
    for i in 0..m {
        if active.map_or(false, |a| !a[i]) {
            continue;
        }
        any_active = true;
        let mut best = f64::INFINITY;
        for (idx, &c) in centers.iter().enumerate() {
            let d = space.dist(i, c as usize) - 5.0 * radii[idx];
            best = best.min(d);
        }
        coverage_excess = coverage_excess.max(best);
    }
    if !any_active {
        coverage_excess = 0.0;
    }

    Ok(CoveringResult {
        disjoint_ok: centers.len() < 2 || disjoint_margin > 0.0,
        coverage_ok: coverage_excess <= 0.0,
        centers,
        radii,
        disjoint_margin: if disjoint_margin.is_finite() {
            disjoint_margin
        } else {
            0.0
        },
        coverage_excess,
        discarded,
    })
}

/// Per-pair doubling table and the maximal ratio `λ(B(x,2r))/λ(B(x,r))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoublingReport {
    pub max_ratio: f64,
    /// Rows `(center, r, mass_r, mass_2r, ratio)`.
    pub table: Vec<(u32, f64, f64, f64, f64)>,
}

pub fn doubling_estimate(
    space: &SampledCompact,
    centers: &[usize],
    radii: &[f64],
) -> Result<DoublingReport> {
    let mut table = Vec::new();
    let mut max_ratio = 0.0_f64;
    for &c in centers {
        for &r in radii {
            let inner = space.ball(c, r)?;
            if !(inner.mass > 0.0) {
                return Err(CoreError::EmptyBall { center: c, radius: r });
            }
            let outer = space.ball(c, 2.0 * r)?;
            let ratio = outer.mass / inner.mass;
            max_ratio = max_ratio.max(ratio);
            table.push((c as u32, r, inner.mass, outer.mass, ratio));
        }
    }
    Ok(DoublingReport { max_ratio, table })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::{seeded_rng, BoxRegion};
    use rand::Rng;

    fn grid_1d(n: usize, lo: f64, hi: f64) -> SampledCompact {
        let region = BoxRegion::new(vec![lo], vec![hi]).unwrap();
        let spacing = (hi - lo) / (n - 1) as f64;
        let lat = LatticeSpec::from_box(&region, &[spacing]).unwrap();
        SampledCompact::from_lattice("grid1d", lat, SampleMetric::Euclidean { scale: 1.0 })
            .unwrap()
    }

    fn grid_2d(n: usize) -> SampledCompact {
        let region = BoxRegion::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let spacing = 1.0 / (n - 1) as f64;
        let lat = LatticeSpec::from_box(&region, &[spacing, spacing]).unwrap();
        SampledCompact::from_lattice("grid2d", lat, SampleMetric::Euclidean { scale: 1.0 })
            .unwrap()
    }

    #[test]
    fn single_point_ball() {
        let s = SampledCompact::new(
            "one",
            2,
            vec![0.3, 0.4],
            vec![2.5],
            SampleMetric::Euclidean { scale: 1.0 },
        )
        .unwrap();
        let q = s.ball(0, 1.0).unwrap();
        assert_eq!(q.indices, vec![0]);
        assert_eq!(q.mass, 2.5);
    }

    #[test]
    fn lattice_ball_counts() {
        // uniform 1D grid, r = 2.5 h → five points centered
        let s = grid_1d(41, 0.0, 4.0);
        let h = 0.1;
        let center = 20;
        let q = s.ball(center, 2.5 * h).unwrap();
        assert_eq!(q.indices.len(), 5);
        // r below the nearest-neighbor gap → singleton
        let q2 = s.ball(center, 0.4 * h).unwrap();
        assert_eq!(q2.indices, vec![center as u32]);
    }

    #[test]
    fn ball_monotone_in_radius() {
        let s = grid_2d(17);
        let c = s.len() / 2;
        let small = s.ball(c, 0.2).unwrap();
        let big = s.ball(c, 0.35).unwrap();
        for i in &small.indices {
            assert!(big.indices.contains(i));
        }
        assert!(big.mass >= small.mass);
    }

    #[test]
    fn ball_mean_values() {
        let s = grid_1d(201, -1.0, 1.0);
        let u_const = vec![3.25; s.len()];
        let c = 100; // x = 0
        assert_eq!(s.ball_mean(&u_const, c, 0.5).unwrap(), 3.25);
        let u_x: Vec<f64> = (0..s.len()).map(|i| s.point(i)[0]).collect();
        let m = s.ball_mean(&u_x, c, 0.5).unwrap();
        assert!(m.abs() < 1e-12, "odd symmetry: {m}");
    }

    #[test]
    fn covering_trivial_cases() {
        let s = SampledCompact::new(
            "one",
            1,
            vec![0.0],
            vec![1.0],
            SampleMetric::Euclidean { scale: 1.0 },
        )
        .unwrap();
        let r = five_r_covering(&s, None, &RadiusRule::Constant(0.5), 1.0).unwrap();
        assert_eq!(r.centers.len(), 1);
        assert!(r.disjoint_ok && r.coverage_ok);

        let two = SampledCompact::new(
            "two",
            1,
            vec![0.0, 10.0],
            vec![1.0, 1.0],
            SampleMetric::Euclidean { scale: 1.0 },
        )
        .unwrap();
        let r = five_r_covering(&two, None, &RadiusRule::Constant(0.5), 1.0).unwrap();
        assert_eq!(r.centers.len(), 2);
        assert!(r.disjoint_ok && r.coverage_ok);
    }

    #[test]
    fn covering_certificates_on_unit_square() {
        let s = grid_2d(33);
        let r = five_r_covering(&s, None, &RadiusRule::Constant(0.1), 0.25).unwrap();
        assert!(r.disjoint_ok, "margin {}", r.disjoint_margin);
        assert!(r.coverage_ok, "excess {}", r.coverage_excess);
        // disjoint centers are > 0.2 apart, every point within 0.5
        assert!(r.disjoint_margin > 0.0);
        assert!(r.coverage_excess <= 0.0);
    }

    #[test]
    fn covering_respects_active_mask() {
        let s = grid_2d(17);
        let mut mask = vec![false; s.len()];
        for i in 0..s.len() {
            if s.point(i)[0] <= 0.5 {
                mask[i] = true;
            }
        }
        let r = five_r_covering(&s, Some(&mask), &RadiusRule::Constant(0.07), 0.2).unwrap();
        assert!(r.coverage_ok);
        for &c in &r.centers {
            assert!(mask[c as usize], "centers come from the active set");
        }
    }

    #[test]
    fn covering_on_random_clouds() {
        let mut rng = seeded_rng(42);
        for trial in 0..5 {
            let m = 60 + trial * 17;
            let mut pts = Vec::with_capacity(2 * m);
            for _ in 0..m {
                pts.push(rng.gen_range(-1.0..1.0));
                pts.push(rng.gen_range(-1.0..1.0));
            }
            let weights: Vec<f64> = (0..m).map(|_| rng.gen_range(0.1..2.0)).collect();
            let s = SampledCompact::new(
                format!("cloud{trial}"),
                2,
                pts,
                weights,
                SampleMetric::Euclidean { scale: 1.0 },
            )
            .unwrap();
            let r = five_r_covering(&s, None, &RadiusRule::Constant(0.15), 0.4).unwrap();
            assert!(r.disjoint_ok && r.coverage_ok, "trial {trial}");
        }
    }

    #[test]
    fn doubling_euclidean_dimensions() {
        // 1D: ratio ≈ 2 within 10%
        let s1 = grid_1d(401, -1.0, 1.0);
        let rep = doubling_estimate(&s1, &[200], &[0.2]).unwrap();
        assert!((rep.max_ratio - 2.0).abs() / 2.0 < 0.1, "{}", rep.max_ratio);

        // 2D: ratio ≈ 4 within 15%
        let s2 = grid_2d(129);
        let center = s2.len() / 2; // middle of the square
        let rep = doubling_estimate(&s2, &[center], &[0.2]).unwrap();
        assert!((rep.max_ratio - 4.0).abs() / 4.0 < 0.15, "{}", rep.max_ratio);
    }

    #[test]
    fn empty_inner_ball_is_an_error() {
        let s = SampledCompact::new(
            "pair",
            1,
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            SampleMetric::Precomputed {
                dists: Arc::new(vec![0.0, 1.0, 1.0, 0.0]),
                len: 2,
            },
        )
        .unwrap();
        // radius must be positive; zero radius is rejected outright
        assert!(s.ball(0, 0.0).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let s = grid_1d(5, 0.0, 1.0);
        let text = s.to_csv();
        let back =
            SampledCompact::from_csv("round", &text, SampleMetric::Euclidean { scale: 1.0 })
                .unwrap();
        assert_eq!(back.len(), s.len());
        assert_eq!(back.points, s.points);
        assert_eq!(back.weights, s.weights);
    }

    #[test]
    fn heisenberg_ball_masses_scale_homogeneously() {
        // Anisotropic lattice δ, δ, δ²: counting approximates the Haar
        // volume, and vol(B(0, 2r)) = 16 vol(B(0, r)) exactly in the
        // continuum (homogeneous dimension 4).
        let delta = 1.0 / 48.0;
        let region = BoxRegion::new(
            vec![-0.25, -0.25, -0.02],
            vec![0.25, 0.25, 0.02],
        )
        .unwrap();
        let lat = LatticeSpec::from_box(&region, &[delta, delta, delta * delta / 2.0]).unwrap();
        let s = SampledCompact::from_lattice(
            "heis",
            lat,
            SampleMetric::HeisenbergExact { scale: 1.0 },
        )
        .unwrap();
        let center = {
            // nearest sample to the origin
            let mut best = (0usize, f64::INFINITY);
            for i in 0..s.len() {
                let p = s.point(i);
                let d = linalg::norm(p);
                if d < best.1 {
                    best = (i, d);
                }
            }
            best.0
        };
        let rep = doubling_estimate(&s, &[center], &[0.06]).unwrap();
        assert!(
            (rep.max_ratio - 16.0).abs() / 16.0 < 0.25,
            "ratio {}",
            rep.max_ratio
        );
    }
}
