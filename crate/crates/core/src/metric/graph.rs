//! Lattice-graph discretization of the CC distance.
//!
//! Nodes are the points of a rectangular lattice. For every node and probe
//! offset (all nonzero integer offsets within the neighbor radius, per
//! axis), the frozen-coefficient model at the segment midpoint projects the
//! raw displacement onto `span{X_i}`; the reachable point is rounded back
//! to the lattice and the rounded pair becomes an edge when the projection
//! residual is below the reachability tolerance on every axis. Edge weight
//! is the least-squares subunit time `|w|₂` where `B w ≈ q − p`.
//!
//! Landings may leave the probe's offset range along axes complementary to
//! the span (a horizontal move can carry many vertical lattice steps); this
//! is what keeps the graph connected through compositions of horizontal
//! moves only, mirroring Chow-type reachability. With the vertical spacing
//! chosen commensurately (for the Heisenberg frame: `δ_t = δ²/2` with equal
//! planar spacings δ), landings are exact and edge weights carry no
//! rounding error at all; for families tilted against the lattice the
//! admissibility tolerance governs the model error, which then shows up in
//! the reported interval widths.

use super::{CCMetricEstimate, EstimateMethod, Witness};
use crate::error::{CoreError, Result};
use crate::flows::{Control, ControlNorm};
use crate::linalg;
use crate::metric::bounds::lower_bound_certified;
use crate::util::BoxRegion;
use crate::vector_fields::VectorFieldFamily;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::{Read, Write};
use std::path::Path;

/// Rectangular node lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub counts: Vec<usize>,
}

impl LatticeSpec {
    pub fn from_box(region: &BoxRegion, spacing: &[f64]) -> Result<Self> {
        if spacing.len() != region.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: region.dim(),
                got: spacing.len(),
            });
        }
        let mut counts = Vec::with_capacity(spacing.len());
        for (axis, &s) in spacing.iter().enumerate() {
            if !(s > 0.0) || !s.is_finite() {
                return Err(CoreError::GraphBuild(format!(
                    "degenerate spacing {s} on axis {axis}"
                )));
            }
            let span = region.max[axis] - region.min[axis];
            let c = (span / s).round() as i64 + 1;
            if c < 1 {
                return Err(CoreError::EmptyBox { axis });
            }
            counts.push(c as usize);
        }
        let total: usize = counts.iter().product();
        if total < 2 {
            return Err(CoreError::GraphBuild("lattice needs at least 2 nodes".into()));
        }
        if total > u32::MAX as usize {
            return Err(CoreError::GraphBuild(format!(
                "lattice too large: {total} nodes"
            )));
        }
        Ok(LatticeSpec {
            origin: region.min.clone(),
            spacing: spacing.to_vec(),
            counts,
        })
    }

    /// Like [`Self::from_box`], but expands the box outward so every node
    /// coordinate is an integer multiple of its axis spacing. Families
    /// whose frozen-coefficient moves land exactly on such lattices (the
    /// Heisenberg frame with vertical spacing `δ²/2`) keep that exactness
    /// only when the origin is aligned; misaligned origins reintroduce
    /// rounding into every landing.
    pub fn from_box_aligned(region: &BoxRegion, spacing: &[f64]) -> Result<Self> {
        if spacing.len() != region.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: region.dim(),
                got: spacing.len(),
            });
        }
        let mut origin = Vec::with_capacity(spacing.len());
        let mut counts = Vec::with_capacity(spacing.len());
        for (axis, &s) in spacing.iter().enumerate() {
            if !(s > 0.0) || !s.is_finite() {
                return Err(CoreError::GraphBuild(format!(
                    "degenerate spacing {s} on axis {axis}"
                )));
            }
            let lo = (region.min[axis] / s + 1e-9).floor();
            let hi = (region.max[axis] / s - 1e-9).ceil();
            let c = (hi - lo) as i64 + 1;
            if c < 1 {
                return Err(CoreError::EmptyBox { axis });
            }
            origin.push(lo * s);
            counts.push(c as usize);
        }
        let total: usize = counts.iter().product();
        if total < 2 {
            return Err(CoreError::GraphBuild("lattice needs at least 2 nodes".into()));
        }
        if total > u32::MAX as usize {
            return Err(CoreError::GraphBuild(format!(
                "lattice too large: {total} nodes"
            )));
        }
        Ok(LatticeSpec {
            origin,
            spacing: spacing.to_vec(),
            counts,
        })
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mixed-radix flattening, last axis fastest.
    pub fn flat_index(&self, multi: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for (k, &c) in multi.iter().enumerate() {
            if c < 0 || c as usize >= self.counts[k] {
                return None;
            }
            idx = idx * self.counts[k] + c as usize;
        }
        Some(idx)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<i64> {
        let mut out = vec![0i64; self.dim()];
        self.multi_index_into(flat, &mut out);
        out
    }

    pub fn multi_index_into(&self, mut flat: usize, out: &mut [i64]) {
        for k in (0..self.dim()).rev() {
            out[k] = (flat % self.counts[k]) as i64;
            flat /= self.counts[k];
        }
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let multi = self.multi_index(flat);
        multi
            .iter()
            .enumerate()
            .map(|(k, &c)| self.origin[k] + c as f64 * self.spacing[k])
            .collect()
    }

    fn write_point(&self, multi: &[i64], out: &mut [f64]) {
        for (k, &c) in multi.iter().enumerate() {
            out[k] = self.origin[k] + c as f64 * self.spacing[k];
        }
    }

    /// Nearest node and its Euclidean snap distance; error when `x` lies
    /// outside the lattice box (beyond half a cell).
    pub fn nearest_node(&self, x: &[f64]) -> Result<(usize, f64)> {
        if x.len() != self.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let mut multi = vec![0i64; self.dim()];
        for k in 0..self.dim() {
            let pos = (x[k] - self.origin[k]) / self.spacing[k];
            let r = pos.round();
            if r < -0.5 || r > (self.counts[k] - 1) as f64 + 0.5 {
                return Err(CoreError::OutsideGraphBox { axis: k });
            }
            multi[k] = (r.max(0.0) as usize).min(self.counts[k] - 1) as i64;
        }
        let flat = self.flat_index(&multi).expect("clamped in range");
        let p = self.point(flat);
        Ok((flat, linalg::dist(&p, x)))
    }

    /// Smallest origin-centered Euclidean ball containing all nodes.
    pub fn circumradius(&self) -> f64 {
        let mut s = 0.0;
        for k in 0..self.dim() {
            let lo = self.origin[k];
            let hi = self.origin[k] + (self.counts[k] - 1) as f64 * self.spacing[k];
            let m = lo.abs().max(hi.abs());
            s += m * m;
        }
        s.sqrt()
    }
}

/// Build-time knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphBuildParams {
    /// Probe offsets range over `{-r..r}^n`, r ≥ 1.
    pub neighbor_radius: usize,
    /// Admissible per-axis residual as a fraction of that axis' spacing.
    pub reach_tol: f64,
    /// Extra admissible residual, relative to the displacement length; zero
    /// for lattice-commensurate families, raise it for tilted ones.
    pub angular_slack: f64,
}

impl Default for GraphBuildParams {
    fn default() -> Self {
        GraphBuildParams {
            neighbor_radius: 2,
            reach_tol: 0.45,
            angular_slack: 0.0,
        }
    }
}

/// CSR graph over the lattice with subunit-time edge weights.
#[derive(Debug, Clone)]
pub struct GraphDiscretization {
    pub lattice: LatticeSpec,
    pub family_hash: String,
    pub params: GraphBuildParams,
    pub adj_offsets: Vec<usize>,
    pub adj_nodes: Vec<u32>,
    pub adj_weights: Vec<f64>,
}

/// Least-squares scratch shared across probes; m×m normal equations with a
/// pseudo-inverse fallback on near-singular pivots.
struct EdgeSolver {
    n: usize,
    m: usize,
    b: Vec<f64>,     // m rows of n: field values at the midpoint
    g: Vec<f64>,     // m*m normal matrix
    aug: Vec<f64>,   // m*(m+1) elimination scratch
    rhs: Vec<f64>,   // m
    w: Vec<f64>,     // m
    resid: Vec<f64>, // n
    mid: Vec<f64>,   // n
}

impl EdgeSolver {
    fn new(n: usize, m: usize) -> Self {
        EdgeSolver {
            n,
            m,
            b: vec![0.0; m * n],
            g: vec![0.0; m * m],
            aug: vec![0.0; m * (m + 1)],
            rhs: vec![0.0; m],
            w: vec![0.0; m],
            resid: vec![0.0; n],
            mid: vec![0.0; n],
        }
    }

    /// Solve `min ‖B w − v‖` with `B` frozen at `mid`; fills `w` and
    /// `resid = B w − v`.
    fn solve(&mut self, family: &VectorFieldFamily, v: &[f64]) {
        let (n, m) = (self.n, self.m);
        for (i, row) in family.rows.iter().enumerate() {
            for (k, p) in row.iter().enumerate() {
                self.b[i * n + k] = p.eval(&self.mid);
            }
        }
        for i in 0..m {
            for j in i..m {
                let s = linalg::dot(&self.b[i * n..(i + 1) * n], &self.b[j * n..(j + 1) * n]);
                self.g[i * m + j] = s;
                self.g[j * m + i] = s;
            }
            self.rhs[i] = linalg::dot(&self.b[i * n..(i + 1) * n], v);
        }
        if !solve_dense(&self.g, &self.rhs, &mut self.aug, &mut self.w) {
            // near-dependent fields at this midpoint: minimum-norm fallback
            let w = linalg::solve_psd(&self.g, &self.rhs, 1e-12);
            self.w.copy_from_slice(&w);
        }
        for k in 0..n {
            let mut s = -v[k];
            for i in 0..m {
                s += self.w[i] * self.b[i * n + k];
            }
            self.resid[k] = s;
        }
    }
}

/// Gaussian elimination with partial pivoting; false on a tiny pivot.
fn solve_dense(g: &[f64], rhs: &[f64], aug: &mut [f64], out: &mut [f64]) -> bool {
    let m = rhs.len();
    let w = m + 1;
    for i in 0..m {
        aug[i * w..i * w + m].copy_from_slice(&g[i * m..(i + 1) * m]);
        aug[i * w + m] = rhs[i];
    }
    let scale = g.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    for col in 0..m {
        let mut piv = col;
        for r in col + 1..m {
            if aug[r * w + col].abs() > aug[piv * w + col].abs() {
                piv = r;
            }
        }
        if aug[piv * w + col].abs() <= 1e-12 * scale.max(1e-300) {
            return false;
        }
        if piv != col {
            for k in 0..w {
                aug.swap(col * w + k, piv * w + k);
            }
        }
        let p = aug[col * w + col];
        for r in col + 1..m {
            let f = aug[r * w + col] / p;
            if f != 0.0 {
                for k in col..w {
                    aug[r * w + k] -= f * aug[col * w + k];
                }
            }
        }
    }
    for r in (0..m).rev() {
        let mut s = aug[r * w + m];
        for k in r + 1..m {
            s -= aug[r * w + k] * out[k];
        }
        out[r] = s / aug[r * w + r];
    }
    true
}

fn probe_offsets(n: usize, radius: usize) -> Vec<Vec<i64>> {
    let r = radius as i64;
    let mut out = Vec::new();
    let mut cur = vec![-r; n];
    loop {
        if cur.iter().any(|&c| c != 0) {
            out.push(cur.clone());
        }
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] <= r {
                break;
            }
            cur[k] = -r;
        }
    }
}

/// Build the subunit-move graph over `region` with per-axis `spacing`.
pub fn build_graph(
    family: &VectorFieldFamily,
    region: &BoxRegion,
    spacing: &[f64],
    params: GraphBuildParams,
) -> Result<GraphDiscretization> {
    if params.neighbor_radius < 1 {
        return Err(CoreError::GraphBuild("neighbor radius must be >= 1".into()));
    }
    if region.dim() != family.n {
        return Err(CoreError::DimensionMismatch {
            expected: family.n,
            got: region.dim(),
        });
    }
    // Aligned nodes (integer multiples of the spacing) preserve the exact
    // landings of lattice-commensurate families.
    let lattice = LatticeSpec::from_box_aligned(region, spacing)?;
    let n = family.n;
    let node_count = lattice.len();
    let offsets = probe_offsets(n, params.neighbor_radius);

    let mut solver = EdgeSolver::new(n, family.m);
    let mut edges: Vec<(u32, u32, f64)> = Vec::new();
    let mut seen: Vec<u32> = Vec::with_capacity(offsets.len());

    let mut p_multi = vec![0i64; n];
    let mut a_multi = vec![0i64; n];
    let mut b_multi = vec![0i64; n];
    let mut p_point = vec![0.0; n];
    let mut q_point = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut y_true = vec![0.0; n];
    let mut q_multi = vec![0i64; n];

    for p_flat in 0..node_count {
        lattice.multi_index_into(p_flat, &mut p_multi);
        lattice.write_point(&p_multi, &mut p_point);
        seen.clear();
        for u in &offsets {
            // raw probe displacement and its frozen-span projection
            for k in 0..n {
                v[k] = u[k] as f64 * lattice.spacing[k];
                solver.mid[k] = p_point[k] + 0.5 * v[k];
            }
            solver.solve(family, &v);
            for k in 0..n {
                y_true[k] = p_point[k] + (v[k] + solver.resid[k]);
            }
            // round the reachable point back onto the lattice
            let mut in_bounds = true;
            for k in 0..n {
                let pos = ((y_true[k] - lattice.origin[k]) / lattice.spacing[k]).round();
                if pos < 0.0 || pos > (lattice.counts[k] - 1) as f64 {
                    in_bounds = false;
                    break;
                }
                q_multi[k] = pos as i64;
            }
            if !in_bounds {
                continue;
            }
            let q_flat = lattice.flat_index(&q_multi).expect("bounds checked");
            if q_flat == p_flat || seen.contains(&(q_flat as u32)) {
                continue;
            }
            seen.push(q_flat as u32);

            // canonical edge: frozen at the midpoint of the actual pair
            let (a, b) = if p_flat < q_flat {
                (p_flat, q_flat)
            } else {
                (q_flat, p_flat)
            };
            lattice.multi_index_into(a, &mut a_multi);
            lattice.multi_index_into(b, &mut b_multi);
            lattice.write_point(&a_multi, &mut p_point);
            lattice.write_point(&b_multi, &mut q_point);
            for k in 0..n {
                v[k] = q_point[k] - p_point[k];
                solver.mid[k] = 0.5 * (p_point[k] + q_point[k]);
            }
            solver.solve(family, &v);
            let vlen = linalg::norm(&v);
            let admissible = (0..n).all(|k| {
                solver.resid[k].abs()
                    <= params.reach_tol * lattice.spacing[k] + params.angular_slack * vlen
            });
            let weight = linalg::norm(&solver.w);
            if admissible && weight > 1e-14 {
                edges.push((a as u32, b as u32, weight));
                edges.push((b as u32, a as u32, weight));
            }
            // restore p_point for remaining probes
            lattice.write_point(&p_multi, &mut p_point);
        }
    }

    edges.sort_unstable_by(|x, y| {
        (x.0, x.1, x.2.to_bits()).cmp(&(y.0, y.1, y.2.to_bits()))
    });
    edges.dedup();

    let mut adj_offsets = vec![0usize; node_count + 1];
    for e in &edges {
        adj_offsets[e.0 as usize + 1] += 1;
    }
    for i in 0..node_count {
        adj_offsets[i + 1] += adj_offsets[i];
    }
    let mut adj_nodes = Vec::with_capacity(edges.len());
    let mut adj_weights = Vec::with_capacity(edges.len());
    for e in &edges {
        adj_nodes.push(e.1);
        adj_weights.push(e.2);
    }

    Ok(GraphDiscretization {
        lattice,
        family_hash: family.content_hash(),
        params,
        adj_offsets,
        adj_nodes,
        adj_weights,
    })
}

#[derive(PartialEq)]
struct HeapEntry(f64, u32);

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl GraphDiscretization {
    pub fn node_count(&self) -> usize {
        self.lattice.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj_nodes.len() / 2
    }

    pub fn neighbors(&self, node: u32) -> impl Iterator<Item = (u32, f64)> + '_ {
        let r = self.adj_offsets[node as usize]..self.adj_offsets[node as usize + 1];
        self.adj_nodes[r.clone()]
            .iter()
            .copied()
            .zip(self.adj_weights[r].iter().copied())
    }

    /// Single-source shortest distances (label-setting / Dijkstra).
    pub fn shortest_dists(&self, src: u32) -> Vec<f64> {
        self.dijkstra(src, None).0
    }

    /// Shortest path and its weight; errors if `dst` is unreachable.
    pub fn shortest_path(&self, src: u32, dst: u32) -> Result<(f64, Vec<u32>)> {
        let (dist, parent) = self.dijkstra(src, Some(dst));
        let d = dist[dst as usize];
        if !d.is_finite() {
            return Err(CoreError::GraphDisconnected {
                from: src as usize,
                to: dst as usize,
            });
        }
        let mut path = vec![dst];
        let mut cur = dst;
        while cur != src {
            cur = parent[cur as usize];
            path.push(cur);
        }
        path.reverse();
        Ok((d, path))
    }

    fn dijkstra(&self, src: u32, dst: Option<u32>) -> (Vec<f64>, Vec<u32>) {
        let n = self.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![u32::MAX; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[src as usize] = 0.0;
        heap.push(Reverse(HeapEntry(0.0, src)));
        while let Some(Reverse(HeapEntry(d, u))) = heap.pop() {
            if done[u as usize] {
                continue;
            }
            done[u as usize] = true;
            if dst == Some(u) {
                break;
            }
            for (vtx, w) in self.neighbors(u) {
                let nd = d + w;
                if nd < dist[vtx as usize] {
                    dist[vtx as usize] = nd;
                    parent[vtx as usize] = u;
                    heap.push(Reverse(HeapEntry(nd, vtx)));
                }
            }
        }
        (dist, parent)
    }

    /// Synthesize the piecewise-constant control that traverses a node
    /// path: each edge contributes one segment of duration equal to the
    /// edge weight with a unit-norm control value.
    pub fn path_control(&self, family: &VectorFieldFamily, path: &[u32]) -> Result<Control> {
        if path.len() < 2 {
            return Err(CoreError::InvalidControl(
                "need at least two nodes for a path control".into(),
            ));
        }
        let n = family.n;
        let mut solver = EdgeSolver::new(n, family.m);
        let mut durations = Vec::with_capacity(path.len() - 1);
        let mut values = Vec::with_capacity(path.len() - 1);
        let mut v = vec![0.0; n];
        for pair in path.windows(2) {
            let a = self.lattice.point(pair[0] as usize);
            let b = self.lattice.point(pair[1] as usize);
            for k in 0..n {
                v[k] = b[k] - a[k];
                solver.mid[k] = 0.5 * (a[k] + b[k]);
            }
            solver.solve(family, &v);
            let t = linalg::norm(&solver.w);
            if !(t > 0.0) {
                return Err(CoreError::InvalidControl(
                    "degenerate zero-weight edge in witness path".into(),
                ));
            }
            durations.push(t);
            values.push(solver.w.iter().map(|&c| c / t).collect());
        }
        Control::new(durations, values, ControlNorm::EuclideanRm)
    }

    /// Cache the graph to a compact little-endian binary file.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(b"CCGR1\n")?;
        let header = serde_json::to_vec(&CacheHeader {
            family_hash: self.family_hash.clone(),
            params: self.params,
            lattice: self.lattice.clone(),
        })?;
        f.write_all(&(header.len() as u64).to_le_bytes())?;
        f.write_all(&header)?;
        f.write_all(&(self.adj_offsets.len() as u64).to_le_bytes())?;
        for &o in &self.adj_offsets {
            f.write_all(&(o as u64).to_le_bytes())?;
        }
        f.write_all(&(self.adj_nodes.len() as u64).to_le_bytes())?;
        for &nref in &self.adj_nodes {
            f.write_all(&nref.to_le_bytes())?;
        }
        for &w in &self.adj_weights {
            f.write_all(&w.to_bits().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path)?;
        let mut magic = [0u8; 6];
        f.read_exact(&mut magic)?;
        if &magic != b"CCGR1\n" {
            return Err(CoreError::FileFormat("not a graph cache file".into()));
        }
        let mut u64buf = [0u8; 8];
        f.read_exact(&mut u64buf)?;
        let hlen = u64::from_le_bytes(u64buf) as usize;
        let mut hbuf = vec![0u8; hlen];
        f.read_exact(&mut hbuf)?;
        let header: CacheHeader = serde_json::from_slice(&hbuf)?;
        f.read_exact(&mut u64buf)?;
        let n_off = u64::from_le_bytes(u64buf) as usize;
        let mut adj_offsets = Vec::with_capacity(n_off);
        for _ in 0..n_off {
            f.read_exact(&mut u64buf)?;
            adj_offsets.push(u64::from_le_bytes(u64buf) as usize);
        }
        f.read_exact(&mut u64buf)?;
        let n_adj = u64::from_le_bytes(u64buf) as usize;
        let mut adj_nodes = Vec::with_capacity(n_adj);
        let mut u32buf = [0u8; 4];
        for _ in 0..n_adj {
            f.read_exact(&mut u32buf)?;
            adj_nodes.push(u32::from_le_bytes(u32buf));
        }
        let mut adj_weights = Vec::with_capacity(n_adj);
        for _ in 0..n_adj {
            f.read_exact(&mut u64buf)?;
            adj_weights.push(f64::from_bits(u64::from_le_bytes(u64buf)));
        }
        Ok(GraphDiscretization {
            lattice: header.lattice,
            family_hash: header.family_hash,
            params: header.params,
            adj_offsets,
            adj_nodes,
            adj_weights,
        })
    }

    /// Whether a cache entry matches the requested key.
    pub fn matches_key(&self, family_hash: &str, lattice: &LatticeSpec) -> bool {
        self.family_hash == family_hash && &self.lattice == lattice
    }
}

#[derive(Serialize, Deserialize)]
struct CacheHeader {
    family_hash: String,
    params: GraphBuildParams,
    lattice: LatticeSpec,
}

/// Graph upper-bound estimate between two points (snapped to nodes), with
/// the certified lower bound attached.
pub fn distance_graph(
    graph: &GraphDiscretization,
    family: &VectorFieldFamily,
    x: &[f64],
    y: &[f64],
) -> Result<CCMetricEstimate> {
    let (nx, gap_x) = graph.lattice.nearest_node(x)?;
    let (ny, gap_y) = graph.lattice.nearest_node(y)?;
    let (weight, path) = if nx == ny {
        (0.0, vec![nx as u32])
    } else {
        graph.shortest_path(nx as u32, ny as u32)?
    };
    // Snap correction: certified speed bound on a ball covering the lattice
    // times the Euclidean snap distances.
    let r_box = graph.lattice.circumradius() + 1.0;
    let speed = family.speed_bound(r_box);
    let correction = speed * (gap_x + gap_y);
    let upper = weight + correction;
    // Lower bound with a radius ample enough to certify containment.
    let sep = linalg::dist(x, y);
    let r_cert = (linalg::norm(x).max(linalg::norm(y)) + sep + 1.0).max(r_box);
    let lower = lower_bound_certified(family, x, y, r_cert)?;
    let lower = lower.min(upper);
    CCMetricEstimate::new(lower, upper, EstimateMethod::Graph, Witness::NodePath(path), correction)
}
