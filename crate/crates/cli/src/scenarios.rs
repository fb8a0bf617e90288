//! Scenario runners: each binds core operations into one reproducible
//! experiment with JSON + CSV outputs.

use crate::config::*;
use crate::report::{csv_table, OutputDir, ReportEnvelope};
use cccompact_core::bv::{self, TVMeasure};
use cccompact_core::engine::{self, SequenceInput};
use cccompact_core::error::CoreError;
use cccompact_core::flows::{self, Control, ControlNorm};
use cccompact_core::grid::{box_mask, BoundaryPolicy, GridFunction, GridSpec};
use cccompact_core::metric::{
    self, build_graph, distance_control_opt, distance_graph, DeviationEstimator,
    GraphDiscretization,
};
use cccompact_core::sample::{
    doubling_estimate, five_r_covering, RadiusRule, SampleMetric, SampledCompact,
};
use cccompact_core::util::{regression_slope, seeded_rng, BoxRegion};
use cccompact_core::vector_fields::{sup_deviation, FamilySequence, VectorFieldFamily};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

/// Exit-status classes of a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Success,
    AuditFailure,
    ExtractionFailure,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Success => 0,
            RunStatus::AuditFailure => 2,
            RunStatus::ExtractionFailure => 3,
        }
    }
}

pub struct RunSummary {
    pub status: RunStatus,
    pub line: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub fn run_scenario(
    scenario: &Scenario,
    out: &OutputDir,
    deterministic: bool,
) -> Result<RunSummary, CliError> {
    let issues = scenario.validate();
    if !issues.is_empty() {
        let list = issues
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(CliError::Config(list));
    }
    match &scenario.spec {
        ScenarioSpec::Distance(d) => run_distance(scenario, d, out, deterministic),
        ScenarioSpec::ConvergeMetric(c) => run_converge_metric(scenario, c, out, deterministic),
        ScenarioSpec::FlowCompare(f) => run_flow_compare(scenario, f, out, deterministic),
        ScenarioSpec::Poincare(p) => run_poincare(scenario, p, out, deterministic),
        ScenarioSpec::Doubling(d) => run_doubling(scenario, d, out, deterministic),
        ScenarioSpec::Covering(c) => run_covering(scenario, c, out, deterministic),
        ScenarioSpec::Compactness(c) => run_compactness(scenario, c, out, deterministic),
        ScenarioSpec::BlowupDemo(b) => run_blowup(scenario, b, out, deterministic),
    }
}

fn fmt_point(x: &[f64]) -> String {
    x.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn point_header(prefix: &str, n: usize) -> String {
    (1..=n)
        .map(|k| format!("{prefix}{k}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Random node pairs of a built graph (distinct endpoints).
fn random_node_pairs(
    graph: &GraphDiscretization,
    count: usize,
    seed: u64,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = seeded_rng(seed ^ 0x9a12);
    let n = graph.node_count();
    (0..count)
        .map(|_| {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n);
            while b == a {
                b = rng.gen_range(0..n);
            }
            (graph.lattice.point(a), graph.lattice.point(b))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// distance
// ---------------------------------------------------------------------------

fn run_distance(
    scenario: &Scenario,
    cfg: &DistanceScenario,
    out: &OutputDir,
    deterministic: bool,
) -> Result<RunSummary, CliError> {
    let family = cfg.family.resolve()?;
    let region = cfg.graph.region.resolve()?;
    let graph = load_or_build_graph(&family, &region, &cfg.graph, cfg.graph_cache.as_deref(), out)?;

    let pairs: Vec<(Vec<f64>, Vec<f64>)> = match &cfg.pairs {
        PairSpec::Explicit { pairs } => pairs.clone(),
        PairSpec::RandomNodes { count } => random_node_pairs(&graph, *count, scenario.seed),
    };

    let mut rows = Vec::with_capacity(pairs.len());
    let mut witnesses = Vec::with_capacity(pairs.len());
    let mut max_width = 0.0_f64;
    for (id, (x, y)) in pairs.iter().enumerate() {
        let est = distance_graph(&graph, &family, x, y)?;
        max_width = max_width.max(est.width());
        rows.push(format!(
            "{},{},{},{},graph,{id}",
            fmt_point(x),
            fmt_point(y),
            est.lower,
            est.upper
        ));
        witnesses.push(json!({
            "id": id,
            "witness": est.witness,
            "correction": est.correction,
        }));
    }
    let header = format!(
        "{},{},lower,upper,method,witness_id",
        point_header("x", family.n),
        point_header("y", family.n)
    );
    out.write_text("distances.csv", &csv_table(&header, &rows))?;
    out.write_json("witnesses.json", &witnesses)?;

    let cross = if let Some(cv) = &cfg.cross_validate {
        let mut cross_rows = Vec::new();
        let mut max_rel_gap = 0.0_f64;
        let mut failures = 0usize;
        for (id, (x, y)) in pairs.iter().take(cv.max_pairs).enumerate() {
            let graph_est = distance_graph(&graph, &family, x, y)?;
            let mut params = cv.params.clone();
            params.seed = params.seed ^ scenario.seed;
            match distance_control_opt(&family, x, y, &params) {
                Ok(ctrl_est) => {
                    let rel = (graph_est.upper - ctrl_est.upper).abs()
                        / graph_est.upper.max(1e-12);
                    max_rel_gap = max_rel_gap.max(rel);
                    cross_rows.push(format!(
                        "{id},{},{},{rel}",
                        graph_est.upper, ctrl_est.upper
                    ));
                }
                Err(CoreError::EndpointToleranceUnmet { gap, .. }) => {
                    // reported, not fatal: the graph bound remains
                    failures += 1;
                    cross_rows.push(format!("{id},{},unreached(gap={gap}),", graph_est.upper));
                }
                Err(e) => return Err(e.into()),
            }
        }
        out.write_text(
            "cross_validate.csv",
            &csv_table("pair,graph_upper,ctrl_upper,rel_gap", &cross_rows),
        )?;
        Some(json!({"max_rel_gap": max_rel_gap, "optimizer_failures": failures}))
    } else {
        None
    };

    let outcome = json!({
        "pairs": pairs.len(),
        "max_interval_width": max_width,
        "graph_nodes": graph.node_count(),
        "graph_edges": graph.edge_count(),
        "cross_validate": cross,
    });
    out.write_json("report.json", &ReportEnvelope::new(scenario, deterministic, outcome))?;
    Ok(RunSummary {
        status: RunStatus::Success,
        line: format!("distance: {} pairs estimated", pairs.len()),
    })
}

fn load_or_build_graph(
    family: &VectorFieldFamily,
    region: &BoxRegion,
    spec: &GraphSpec,
    cache: Option<&str>,
    out: &OutputDir,
) -> Result<GraphDiscretization, CliError> {
    if let Some(name) = cache {
        let path = out.path(name);
        if path.exists() {
            let loaded = GraphDiscretization::load(&path)?;
            let lattice = cccompact_core::metric::LatticeSpec::from_box_aligned(
                region,
                &spec.spacing,
            )?;
            if loaded.matches_key(&family.content_hash(), &lattice) {
                return Ok(loaded);
            }
        }
        let graph = build_graph(family, region, &spec.spacing, spec.params())?;
        graph.save(&path)?;
        return Ok(graph);
    }
    Ok(build_graph(family, region, &spec.spacing, spec.params())?)
}

// ---------------------------------------------------------------------------
// converge-metric
// ---------------------------------------------------------------------------

fn run_converge_metric(
    scenario: &Scenario,
    cfg: &ConvergeMetricScenario,
    out: &OutputDir,
    deterministic: bool,
) -> Result<RunSummary, CliError> {
    let seq = cfg.sequence.resolve()?;
    let region = cfg.graph.region.resolve()?;
    // sample pairs from the lattice the estimator will use
    let probe = build_graph(&seq.limit, &region, &cfg.graph.spacing, cfg.graph.params())?;
    let pairs = random_node_pairs(&probe, cfg.pair_count, scenario.seed);
    drop(probe);

    let estimator = DeviationEstimator::Graph {
        region,
        spacing: cfg.graph.spacing.clone(),
        params: cfg.graph.params(),
    };
    let devs = metric::metric_deviation_batch(&seq, &cfg.js, &pairs, &estimator)?;

    let mut rows = Vec::new();
    let mut sups = Vec::new();
    for d in &devs {
        let max_width = d
            .pairs
            .iter()
            .map(|p| p.width_limit.max(p.width_member))
            .fold(0.0_f64, f64::max);
        rows.push(format!("{},{},{max_width}", d.j, d.sup_abs_diff));
        sups.push((d.j, d.sup_abs_diff));
    }
    out.write_text(
        "deviations.csv",
        &csv_table("j,sup_deviation,max_interval_width", &rows),
    )?;

    let strictly_decreasing = sups.windows(2).all(|w| w[1].1 < w[0].1);
    let xs: Vec<f64> = sups.iter().map(|&(j, _)| (j as f64).ln()).collect();
    let ys: Vec<f64> = sups.iter().map(|&(_, d)| d.max(1e-300).ln()).collect();
    let slope = regression_slope(&xs, &ys);

    let outcome = json!({
        "per_j": sups,
        "strictly_decreasing": strictly_decreasing,
        "loglog_slope": slope,
        "pairs": pairs.len(),
    });
    out.write_json("report.json", &ReportEnvelope::new(scenario, deterministic, outcome))?;
    Ok(RunSummary {
        status: RunStatus::Success,
        line: format!(
            "converge-metric: slope {slope:.3}, strictly decreasing: {strictly_decreasing}"
        ),
    })
}

// ---------------------------------------------------------------------------
// flow-compare
// ---------------------------------------------------------------------------

fn run_flow_compare(
    scenario: &Scenario,
    cfg: &FlowCompareScenario,
    out: &OutputDir,
    deterministic: bool,
) -> Result<RunSummary, CliError> {
    let seq = cfg.sequence.resolve()?;
    let m = seq.limit.m;
    let n = seq.limit.n;
    let mut rng = seeded_rng(scenario.seed ^ 0x71c3);
    let mut rows = Vec::new();
    let mut violations = 0usize;
    let mut cases = 0usize;
    let mut max_ratio = 0.0_f64;

    for cid in 0..cfg.control_count {
        let horizon = rng.gen_range(0.1..=cfg.max_horizon);
        let values: Vec<Vec<f64>> = (0..cfg.segments)
            .map(|_| {
                let mut v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                if norm > 1.0 {
                    v.iter_mut().for_each(|c| *c /= norm);
                }
                v
            })
            .collect();
        let control = Control::uniform(horizon, values, ControlNorm::EuclideanRm)
            .map_err(CliError::Core)?;
        let x0 = vec![0.0; n];
        for j in 1..=cfg.j_max {
            let chk = flows::gronwall_certificate(
                &seq,
                j,
                &x0,
                &control,
                cfg.steps_per_segment,
                cfg.lattice_density,
            )?;
            cases += 1;
            let sound = chk.deviation <= chk.bound;
            if !sound {
                violations += 1;
            }
            if chk.bound > 0.0 {
                max_ratio = max_ratio.max(chk.deviation / chk.bound);
            }
            rows.push(format!(
                "{j},{cid},{horizon},{},{},{},{},{sound}",
                chk.deviation, chk.bound, chk.radius, chk.lipschitz
            ));
        }
    }
    out.write_text(
        "gronwall.csv",
        &csv_table(
            "j,control,horizon,deviation,bound,radius,lipschitz,sound",
            &rows,
        ),
    )?;
    let outcome = json!({
        "cases": cases,
        "violations": violations,
        "max_deviation_to_bound": max_ratio,
    });
    out.write_json("report.json", &ReportEnvelope::new(scenario, deterministic, outcome))?;
    Ok(RunSummary {
        status: RunStatus::Success,
        line: format!("flow-compare: {cases} cases, {violations} bound violations"),
    })
}

// ---------------------------------------------------------------------------
// poincare
// ---------------------------------------------------------------------------

fn grid_function(spec: &GridFunctionSpec, grid: GridSpec) -> Result<GridFunction, CoreError> {
    match spec {
        GridFunctionSpec::MollifiedStep {
            axis,
            position,
            width,
        } => GridFunction::mollified_step(grid, *axis, *position, *width),
        GridFunctionSpec::Constant { value } => Ok(GridFunction::constant(grid, *value)),
        GridFunctionSpec::Linear { coeffs } => GridFunction::from_fn(grid, |x| {
            x.iter().zip(coeffs).map(|(a, b)| a * b).sum()
        }),
    }
}

fn sample_metric_for(
    base: &FamilySpec,
    scale: f64,
) -> Result<SampleMetric, CoreError> {
    match base {
        FamilySpec::Euclidean { .. } => Ok(SampleMetric::Euclidean { scale }),
        FamilySpec::Heisenberg => Ok(SampleMetric::HeisenbergExact { scale }),
        _ => Err(CoreError::SampleMetric(
            "closed-form metric accessors exist only for euclidean and heisenberg bases".into(),
        )),
    }
}

fn run_poincare(
    scenario: &Scenario,
    cfg: &PoincareScenario,
    out: &OutputDir,
    deterministic: bool,
) -> Result<RunSummary, CliError> {
    let seq = cfg.sequence.resolve()?;
    let region = cfg.grid.region.resolve()?;
    let grid = GridSpec::over_box(&region, cfg.grid.counts.clone(), BoundaryPolicy::Clamp)?;
    let u = grid_function(&cfg.function, grid.clone())?;

    // identical balls across members for bias cancellation
    let mut rng = seeded_rng(scenario.seed ^ 0x6f1a);
    let cells = grid.len();
    let balls: Vec<(usize, f64)> = (0..cfg.ball_count)
        .map(|_| {
            (
                rng.gen_range(0..cells),
                rng.gen_range(cfg.r_min..cfg.r_max),
            )
        })
        .collect();

    let mut rows = Vec::new();
    let mut per_j_max = Vec::new();
    for &j in &cfg.js {
        let member = seq.member(j)?;
        let tv = bv::total_variation(&member, &u, None)?;
        let scale = cfg
            .sequence
            .metric_scale(j)
            .ok_or_else(|| CliError::Config("sequence lacks exact member metrics".into()))?;
        let metric = sample_metric_for(cfg.sequence.base(), scale)?;
        let space = u.to_sample("poincare", metric)?;
        let mut worst = 0.0_f64;
        for (bid, &(center, r)) in balls.iter().enumerate() {
            let q = quotient_for(&space, &u, &tv, center, r, cfg.alpha, cfg.q, cfg.delta)?;
            worst = worst.max(q);
            rows.push(format!("{j},{bid},{center},{r},{q}"));
        }
        per_j_max.push((j, worst));
    }
    out.write_text(
        "quotients.csv",
        &csv_table("j,ball,center,r,quotient", &rows),
    )?;

    let max_all = per_j_max.iter().map(|&(_, v)| v).fold(0.0_f64, f64::max);
    let min_max = per_j_max
        .iter()
        .map(|&(_, v)| v)
        .fold(f64::INFINITY, f64::min);
    let uniformity_ratio = if min_max > 0.0 {
        max_all / min_max
    } else {
        f64::INFINITY
    };
    let outcome = json!({
        "per_j_max": per_j_max,
        "uniformity_ratio": uniformity_ratio,
        "balls": balls.len(),
    });
    out.write_json("report.json", &ReportEnvelope::new(scenario, deterministic, outcome))?;
    Ok(RunSummary {
        status: RunStatus::Success,
        line: format!("poincare: uniformity ratio {uniformity_ratio:.3}"),
    })
}

/// `‖u − u(B)‖_{L^q(B)} / (r^δ μ(αB))` with the 0/0 convention, reusing a
/// precomputed TV measure.
#[allow(clippy::too_many_arguments)]
fn quotient_for(
    space: &SampledCompact,
    u: &GridFunction,
    tv: &TVMeasure,
    center: usize,
    r: f64,
    alpha: f64,
    q: f64,
    delta: f64,
) -> Result<f64, CliError> {
    let ball = space.ball(center, r)?;
    if ball.indices.is_empty() {
        return Ok(0.0);
    }
    let mean = space.ball_mean(&u.values, center, r)?;
    let mut num = 0.0;
    for &i in &ball.indices {
        num += space.weights[i as usize] * (u.values[i as usize] - mean).abs().powf(q);
    }
    let num = num.powf(1.0 / q);
    let alpha_ball = space.ball(center, alpha * r)?;
    let mu = tv.mass_on(&alpha_ball.indices);
    let denom = r.powf(delta) * mu;
    if denom > 0.0 {
        Ok(num / denom)
    } else if num <= 1e-13 {
        Ok(0.0)
    } else {
        Err(CliError::Core(CoreError::PoincareZeroDenominator {
            numerator: num,
        }))
    }
}

// ---------------------------------------------------------------------------
// doubling
// ---------------------------------------------------------------------------

fn run_doubling(
    scenario: &Scenario,
    cfg: &DoublingScenario,
    out: &OutputDir,
    deterministic: bool,
) -> Result<RunSummary, CliError> {
    let region = cfg.grid.region.resolve()?;
    let center_region = cfg.center_region.resolve()?;
    let metric = match cfg.metric {
        SampleMetricSpec::Euclidean => SampleMetric::Euclidean { scale: 1.0 },
        SampleMetricSpec::HeisenbergExact => SampleMetric::HeisenbergExact { scale: 1.0 },
    };

    let run_level = |counts: &[usize], seed: u64| -> Result<(f64, usize), CliError> {
        let grid = GridSpec::over_box(&region, counts.to_vec(), BoundaryPolicy::Clamp)?;
        let space = SampledCompact::from_lattice(
            "doubling",
            grid.to_lattice(),
            metric.clone(),
        )?;
        let centers: Vec<usize> = if cfg.center_count == 1 {
            // deterministic interior center: the cell nearest the centroid
            let centroid: Vec<f64> = center_region
                .min
                .iter()
                .zip(&center_region.max)
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let mut best = (0usize, f64::INFINITY);
            for i in 0..space.len() {
                let d = space
                    .point(i)
                    .iter()
                    .zip(&centroid)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                if d < best.1 {
                    best = (i, d);
                }
            }
            vec![best.0]
        } else {
            let mut rng = seeded_rng(seed);
            let candidates: Vec<usize> = (0..space.len())
                .filter(|&i| center_region.contains(space.point(i)))
                .collect();
            (0..cfg.center_count)
                .map(|_| candidates[rng.gen_range(0..candidates.len())])
                .collect()
        };
        let rep = doubling_estimate(&space, &centers, &cfg.radii)?;
        Ok((rep.max_ratio, space.len()))
    };

    let mut rows = Vec::new();
    let mut level_ratios = Vec::new();
    match &cfg.refine {
        Some(levels) => {
            for (li, counts) in levels.iter().enumerate() {
                let (ratio, cells) = run_level(counts, scenario.seed ^ li as u64)?;
                rows.push(format!("{li},{cells},{ratio}"));
                level_ratios.push(ratio);
            }
        }
        None => {
            let (ratio, cells) = run_level(&cfg.grid.counts, scenario.seed)?;
            rows.push(format!("0,{cells},{ratio}"));
            level_ratios.push(ratio);
        }
    }
    out.write_text("doubling.csv", &csv_table("level,cells,max_ratio", &rows))?;

    let dim = region.dim();
    let target = 2.0_f64.powi(dim as i32);
    let errors: Vec<f64> = level_ratios.iter().map(|r| (r - target).abs()).collect();
    let errors_decreasing = errors.windows(2).all(|w| w[1] <= w[0]);
    let outcome = json!({
        "ratios": level_ratios,
        "euclidean_target": target,
        "errors": errors,
        "errors_decreasing": errors_decreasing,
    });
    out.write_json("report.json", &ReportEnvelope::new(scenario, deterministic, outcome))?;
    Ok(RunSummary {
        status: RunStatus::Success,
        line: format!("doubling: ratios {level_ratios:?}"),
    })
}

// ---------------------------------------------------------------------------
// covering
// ---------------------------------------------------------------------------

fn run_covering(
    scenario: &Scenario,
    cfg: &CoveringScenario,
    out: &OutputDir,
    deterministic: bool,
) -> Result<RunSummary, CliError> {
    let metric = match cfg.metric {
        SampleMetricSpec::Euclidean => SampleMetric::Euclidean { scale: 1.0 },
        SampleMetricSpec::HeisenbergExact => SampleMetric::HeisenbergExact { scale: 1.0 },
    };
    let mut results = Vec::new();
    let mut all_pass = true;
    for trial in 0..cfg.trials {
        let space = match &cfg.cloud {
            CloudSpec::Random { count, dim, region } => {
                let region = region.resolve()?;
                let mut rng = seeded_rng(scenario.seed.wrapping_add(trial as u64));
                let mut pts = Vec::with_capacity(count * dim);
                for _ in 0..*count {
                    for k in 0..*dim {
                        pts.push(rng.gen_range(region.min[k]..region.max[k]));
                    }
                }
                let weights: Vec<f64> = (0..*count).map(|_| rng.gen_range(0.1..2.0)).collect();
                SampledCompact::new(
                    format!("cloud{trial}"),
                    *dim,
                    pts,
                    weights,
                    metric.clone(),
                )?
            }
            CloudSpec::Grid(g) => {
                let region = g.region.resolve()?;
                let grid = GridSpec::over_box(&region, g.counts.clone(), BoundaryPolicy::Clamp)?;
                SampledCompact::from_lattice(
                    format!("grid{trial}"),
                    grid.to_lattice(),
                    metric.clone(),
                )?
            }
        };
        let result = five_r_covering(&space, None, &RadiusRule::Constant(cfg.radius), cfg.r_max)?;
        all_pass &= result.disjoint_ok && result.coverage_ok;
        results.push(result);
    }
    out.write_json("covering.json", &results)?;
    let outcome = json!({
        "trials": cfg.trials,
        "all_certificates_pass": all_pass,
        "centers_per_trial": results.iter().map(|r| r.centers.len()).collect::<Vec<_>>(),
    });
    out.write_json("report.json", &ReportEnvelope::new(scenario, deterministic, outcome))?;
    Ok(RunSummary {
        status: RunStatus::Success,
        line: format!("covering: {} trials, certificates pass: {all_pass}", cfg.trials),
    })
}

// ---------------------------------------------------------------------------
// compactness
// ---------------------------------------------------------------------------

fn member_function(
    spec: &MemberFunctionSpec,
    grid: &GridSpec,
    j: usize,
) -> Result<GridFunction, CoreError> {
    match spec {
        MemberFunctionSpec::MollifiedStep {
            axis,
            position,
            base_width,
        } => GridFunction::mollified_step(grid.clone(), *axis, *position, base_width / j as f64),
        MemberFunctionSpec::Constant { value } => Ok(GridFunction::constant(grid.clone(), *value)),
        MemberFunctionSpec::TwoCluster { low, high } => Ok(GridFunction::constant(
            grid.clone(),
            if j % 2 == 0 { *high } else { *low },
        )),
        MemberFunctionSpec::ShrinkingBump { base, amplitude } => {
            let amp = amplitude / j as f64;
            GridFunction::from_fn(grid.clone(), move |x| {
                let r2: f64 = x
                    .iter()
                    .map(|&v| {
                        let c = (v - 0.5) / 0.3;
                        c * c
                    })
                    .sum();
                base + if r2 >= 1.0 { 0.0 } else { amp * (1.0 - r2).powi(2) }
            })
        }
    }
}

#[derive(Serialize)]
struct CompactnessOutcome {
    audit: engine::AuditReport,
    status: String,
    diagonal: Option<engine::DiagonalReport>,
    /// Cauchy table of the raw (unextracted) sequence on the first compact.
    raw_cauchy: Vec<(usize, f64)>,
    semicontinuity: Option<bv::SemicontinuityReport>,
    reference_l1: Option<f64>,
    error: Option<String>,
}

fn run_compactness(
    scenario: &Scenario,
    cfg: &CompactnessScenario,
    out: &OutputDir,
    deterministic: bool,
) -> Result<RunSummary, CliError> {
    let seq = cfg.sequence.resolve()?;
    let region = cfg.grid.region.resolve()?;
    let grid = GridSpec::over_box(&region, cfg.grid.counts.clone(), BoundaryPolicy::Clamp)?;
    let jmax = cfg.engine.j_max;

    // member functions and BV masses
    let mut u_members = Vec::with_capacity(jmax);
    let mut mu_members = Vec::with_capacity(jmax);
    let mut member_grids = Vec::with_capacity(jmax);
    for j in 1..=jmax {
        let uj = member_function(&cfg.functions, &grid, j)?;
        let muj = match &cfg.mu_inject {
            Some(MuInjectSpec::LinearInJ) => {
                let total: f64 = grid.cell_volume() * grid.len() as f64;
                vec![j as f64 * grid.cell_volume() / total; grid.len()]
            }
            None => {
                let member = seq.member(j)?;
                bv::total_variation(&member, &uj, None)?.cell_mass
            }
        };
        u_members.push(uj.values.clone());
        mu_members.push(muj);
        member_grids.push((j, uj));
    }

    // metrics
    let limit_metric = sample_metric_for(cfg.sequence.base(), 1.0)?;
    let member_metrics: Vec<SampleMetric> = (1..=jmax)
        .map(|j| {
            let scale = cfg
                .sequence
                .metric_scale(j)
                .expect("validated: exact member metrics");
            sample_metric_for(cfg.sequence.base(), scale)
        })
        .collect::<Result<_, _>>()?;
    let space = SampledCompact::from_lattice("compactness", grid.to_lattice(), limit_metric)?;
    let input = SequenceInput {
        space,
        member_metrics,
        u_members,
        mu_members,
    };

    // compact exhaustion
    let masks: Vec<Vec<bool>> = if cfg.exhaustion.is_empty() {
        vec![vec![true; grid.len()]]
    } else {
        cfg.exhaustion
            .iter()
            .map(|b| Ok(box_mask(&grid, &b.resolve()?)))
            .collect::<Result<_, CoreError>>()?
    };
    let audit_mask: Vec<bool> = {
        let mut m = vec![false; grid.len()];
        for mask in &masks {
            for (mi, &b) in m.iter_mut().zip(mask) {
                *mi = *mi || b;
            }
        }
        m
    };

    let audit = engine::hypothesis_audit(&input, &audit_mask, &cfg.engine)?;
    let all_members: Vec<usize> = (1..=jmax).collect();
    let raw_cauchy = engine::cauchy_modulus(&input, &all_members, &masks[0], cfg.engine.q)?;

    if !audit.all_pass() {
        let outcome = CompactnessOutcome {
            status: "hypothesis-audit-failure".into(),
            error: Some(audit.failure_summary()),
            audit,
            diagonal: None,
            raw_cauchy,
            semicontinuity: None,
            reference_l1: None,
        };
        out.write_json("report.json", &ReportEnvelope::new(scenario, deterministic, outcome))?;
        return Ok(RunSummary {
            status: RunStatus::AuditFailure,
            line: "compactness: hypothesis audit failed".into(),
        });
    }

    let diag = match engine::diagonalize(&input, &masks, &cfg.engine) {
        Ok(d) => d,
        Err(CoreError::ExtractionFailure(msg)) => {
            let outcome = CompactnessOutcome {
                status: "extraction-failure".into(),
                error: Some(msg.clone()),
                audit,
                diagonal: None,
                raw_cauchy,
                semicontinuity: None,
                reference_l1: None,
            };
            out.write_json(
                "report.json",
                &ReportEnvelope::new(scenario, deterministic, outcome),
            )?;
            return Ok(RunSummary {
                status: RunStatus::ExtractionFailure,
                line: format!("compactness: extraction failed: {msg}"),
            });
        }
        Err(e) => return Err(e.into()),
    };

    // limit candidate artifacts
    let limit = GridFunction::new(grid.clone(), diag.limit_values.clone())?;
    limit.save(&out.path("limit.ccgrid"))?;
    let reference_l1 = match &cfg.reference {
        Some(rf) => {
            let reference = grid_function(rf, grid.clone())?;
            Some(limit.l1_distance(&reference, Some(&masks[0]))?)
        }
        None => None,
    };
    let semi_members: Vec<(usize, GridFunction)> = member_grids
        .iter()
        .filter(|(j, _)| diag.final_indices.contains(j))
        .cloned()
        .collect();
    let semicontinuity = Some(bv::semicontinuity_check(
        &seq,
        &semi_members,
        &limit,
        Some(&masks[0]),
    )?);

    // CSV views of the certificates
    let mut cauchy_rows = Vec::new();
    for (ci, table) in diag.cauchy_tables.iter().enumerate() {
        for &(h, v) in table {
            cauchy_rows.push(format!("{ci},{h},{v}"));
        }
    }
    out.write_text("cauchy.csv", &csv_table("compact,H,sup_tail", &cauchy_rows))?;
    let mut decay_rows = Vec::new();
    for run in &diag.runs {
        for (si, (residual, bound)) in run.recursion.decay_trace.iter().enumerate() {
            decay_rows.push(format!(
                "{},{},{residual},{bound}",
                run.compact_index,
                si + 1
            ));
        }
    }
    out.write_text(
        "decay.csv",
        &csv_table("compact,stage,residual_mass,decay_bound", &decay_rows),
    )?;

    let final_count = diag.final_indices.len();
    let outcome = CompactnessOutcome {
        status: "success".into(),
        error: None,
        audit,
        diagonal: Some(diag),
        raw_cauchy,
        semicontinuity,
        reference_l1,
    };
    out.write_json("report.json", &ReportEnvelope::new(scenario, deterministic, outcome))?;
    Ok(RunSummary {
        status: RunStatus::Success,
        line: format!("compactness: extracted {final_count} members"),
    })
}

// ---------------------------------------------------------------------------
// blowup-demo
// ---------------------------------------------------------------------------

fn run_blowup(
    scenario: &Scenario,
    cfg: &BlowupScenario,
    out: &OutputDir,
    deterministic: bool,
) -> Result<RunSummary, CliError> {
    let family = cfg.family.resolve()?;
    let limit = cfg.limit.resolve()?;
    let region = cfg.region.resolve()?;
    if family.n != limit.n || family.m != limit.m {
        return Err(CliError::Config(
            "blow-up family and limit must share n and m".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut devs = Vec::new();
    for &lambda in &cfg.lambdas {
        let blown = cccompact_core::vector_fields::blow_up(&family, &cfg.weights, lambda)?;
        // deviation to the nilpotent model as a direction-zero sequence
        let seq = FamilySequence::new(
            "blowup_gap",
            limit.clone(),
            blown
                .rows
                .iter()
                .zip(&limit.rows)
                .map(|(b, l)| {
                    b.iter()
                        .zip(l)
                        .map(|(pb, pl)| pb.add_scaled(-1.0, pl))
                        .collect()
                })
                .collect(),
            1.0,
        )?;
        let dev0 = sup_deviation(&seq, 1, &region, 0, cfg.lattice_density)?;
        let dev1 = sup_deviation(&seq, 1, &region, 1, cfg.lattice_density)?;
        let d0: f64 = dev0.iter().fold(0.0_f64, |a, &b| a.max(b));
        let d1: f64 = dev1.iter().fold(0.0_f64, |a, &b| a.max(b));
        rows.push(format!("{lambda},{d0},{d1}"));
        devs.push((lambda, d0, d1));
    }
    out.write_text(
        "blowup.csv",
        &csv_table("lambda,sup_dev_order0,sup_dev_order1", &rows),
    )?;
    // sorted by decreasing λ the gaps must shrink
    let mut sorted = devs.clone();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let shrinking = sorted.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    let outcome = json!({
        "gaps": devs,
        "shrinking_with_lambda": shrinking,
    });
    out.write_json("report.json", &ReportEnvelope::new(scenario, deterministic, outcome))?;
    Ok(RunSummary {
        status: RunStatus::Success,
        line: format!("blowup-demo: gaps shrink with lambda: {shrinking}"),
    })
}
