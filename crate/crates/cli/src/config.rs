//! Scenario configuration schema and validation.

use cccompact_core::engine::EngineConfig;
use cccompact_core::error::CoreError;
use cccompact_core::metric::{ControlOptParams, GraphBuildParams};
use cccompact_core::poly::Polynomial;
use cccompact_core::util::BoxRegion;
use cccompact_core::vector_fields::{FamilySequence, VectorFieldFamily};
use serde::{Deserialize, Serialize};

/// One polynomial as a coefficient table: multi-index → coefficient.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyTable(pub Vec<PolyTerm>);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyTerm {
    pub c: f64,
    pub p: Vec<u32>,
}

impl PolyTable {
    pub fn resolve(&self, nvars: usize) -> Result<Polynomial, CoreError> {
        for t in &self.0 {
            if t.p.len() != nvars {
                return Err(CoreError::InvalidFamily(format!(
                    "monomial multi-index has {} entries, expected {nvars}",
                    t.p.len()
                )));
            }
        }
        Ok(Polynomial::from_terms(
            nvars,
            self.0.iter().map(|t| (t.c, t.p.clone())).collect(),
        ))
    }
}

/// Vector-field family description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FamilySpec {
    Euclidean {
        n: usize,
    },
    Heisenberg,
    Step2 {
        n: usize,
    },
    Polynomial {
        name: String,
        n: usize,
        m: usize,
        step: usize,
        fields: Vec<Vec<PolyTable>>,
    },
}

impl FamilySpec {
    pub fn resolve(&self) -> Result<VectorFieldFamily, CoreError> {
        match self {
            FamilySpec::Euclidean { n } => {
                if *n < 2 {
                    return Err(CoreError::InvalidFamily("euclidean needs n >= 2".into()));
                }
                Ok(VectorFieldFamily::euclidean(*n))
            }
            FamilySpec::Heisenberg => Ok(VectorFieldFamily::heisenberg()),
            FamilySpec::Step2 { n } => VectorFieldFamily::step2(*n),
            FamilySpec::Polynomial {
                name,
                n,
                m,
                step,
                fields,
            } => {
                let rows: Result<Vec<Vec<Polynomial>>, CoreError> = fields
                    .iter()
                    .map(|row| row.iter().map(|t| t.resolve(*n)).collect())
                    .collect();
                let fam = VectorFieldFamily::new(name.clone(), *n, *m, *step, rows?)?;
                Ok(fam)
            }
        }
    }
}

/// Family sequence `X^j = X + (c/j) V`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SequenceSpec {
    /// `X^j = X`.
    Identical { base: FamilySpec },
    /// `V = X`, so `X^j = (1 + c/j) X`.
    Scaled { base: FamilySpec, c: f64 },
    /// `V_i` constant vectors.
    ConstantShift {
        base: FamilySpec,
        shifts: Vec<Vec<f64>>,
        c: f64,
    },
    /// Explicit polynomial direction tables.
    Custom {
        base: FamilySpec,
        direction: Vec<Vec<PolyTable>>,
        c: f64,
    },
}

impl SequenceSpec {
    pub fn resolve(&self) -> Result<FamilySequence, CoreError> {
        match self {
            SequenceSpec::Identical { base } => Ok(FamilySequence::identical(base.resolve()?)),
            SequenceSpec::Scaled { base, c } => Ok(FamilySequence::scaled(base.resolve()?, *c)),
            SequenceSpec::ConstantShift { base, shifts, c } => {
                FamilySequence::constant_shift(base.resolve()?, shifts, *c)
            }
            SequenceSpec::Custom { base, direction, c } => {
                let fam = base.resolve()?;
                let rows: Result<Vec<Vec<Polynomial>>, CoreError> = direction
                    .iter()
                    .map(|row| row.iter().map(|t| t.resolve(fam.n)).collect())
                    .collect();
                FamilySequence::new(format!("{}_custom", fam.name), fam, rows?, *c)
            }
        }
    }

    pub fn base(&self) -> &FamilySpec {
        match self {
            SequenceSpec::Identical { base }
            | SequenceSpec::Scaled { base, .. }
            | SequenceSpec::ConstantShift { base, .. }
            | SequenceSpec::Custom { base, .. } => base,
        }
    }

    /// Exact metric scale factor for member j when one exists: scaled
    /// families have `d_j = d / (1 + c/j)`, and the base frame must admit a
    /// closed-form metric accessor (Euclidean or Heisenberg).
    pub fn metric_scale(&self, j: usize) -> Option<f64> {
        let base_ok = matches!(
            self.base(),
            FamilySpec::Euclidean { .. } | FamilySpec::Heisenberg
        );
        if !base_ok {
            return None;
        }
        match self {
            SequenceSpec::Identical { .. } => Some(1.0),
            SequenceSpec::Scaled { c, .. } => Some(1.0 / (1.0 + c / j as f64)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxSpec {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl BoxSpec {
    pub fn resolve(&self) -> Result<BoxRegion, CoreError> {
        BoxRegion::new(self.min.clone(), self.max.clone())
    }
}

fn default_reach_tol() -> f64 {
    0.45
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphSpec {
    pub region: BoxSpec,
    pub spacing: Vec<f64>,
    #[serde(default = "default_neighbor_radius")]
    pub neighbor_radius: usize,
    #[serde(default = "default_reach_tol")]
    pub reach_tol: f64,
    #[serde(default)]
    pub angular_slack: f64,
}

fn default_neighbor_radius() -> usize {
    2
}

impl GraphSpec {
    pub fn params(&self) -> GraphBuildParams {
        GraphBuildParams {
            neighbor_radius: self.neighbor_radius,
            reach_tol: self.reach_tol,
            angular_slack: self.angular_slack,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridBoxSpec {
    pub region: BoxSpec,
    pub counts: Vec<usize>,
}

/// Sample pair source for distance-style scenarios.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PairSpec {
    Explicit { pairs: Vec<(Vec<f64>, Vec<f64>)> },
    RandomNodes { count: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrossValidateSpec {
    pub max_pairs: usize,
    pub params: ControlOptParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistanceScenario {
    pub family: FamilySpec,
    pub graph: GraphSpec,
    pub pairs: PairSpec,
    #[serde(default)]
    pub cross_validate: Option<CrossValidateSpec>,
    /// Optional cache file (binary graph) keyed by family hash and lattice.
    #[serde(default)]
    pub graph_cache: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergeMetricScenario {
    pub sequence: SequenceSpec,
    pub js: Vec<usize>,
    pub graph: GraphSpec,
    pub pair_count: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowCompareScenario {
    pub sequence: SequenceSpec,
    pub j_max: usize,
    pub control_count: usize,
    pub max_horizon: f64,
    pub segments: usize,
    pub steps_per_segment: usize,
    #[serde(default = "default_lattice")]
    pub lattice_density: usize,
}

fn default_lattice() -> usize {
    17
}

/// Fixed grid function used by Poincaré and compactness scenarios.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GridFunctionSpec {
    MollifiedStep {
        axis: usize,
        position: f64,
        width: f64,
    },
    Constant {
        value: f64,
    },
    Linear {
        coeffs: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoincareScenario {
    pub sequence: SequenceSpec,
    pub js: Vec<usize>,
    pub grid: GridBoxSpec,
    pub function: GridFunctionSpec,
    pub ball_count: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub alpha: f64,
    pub q: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SampleMetricSpec {
    Euclidean,
    HeisenbergExact,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DoublingScenario {
    pub grid: GridBoxSpec,
    pub metric: SampleMetricSpec,
    pub center_count: usize,
    /// Sub-box the centers are drawn from (keeps 2r-balls inside).
    pub center_region: BoxSpec,
    pub radii: Vec<f64>,
    /// Optional refinement study: per-level cell counts for the same box.
    #[serde(default)]
    pub refine: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CloudSpec {
    Random {
        count: usize,
        dim: usize,
        region: BoxSpec,
    },
    Grid(GridBoxSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoveringScenario {
    pub cloud: CloudSpec,
    pub metric: SampleMetricSpec,
    pub radius: f64,
    pub r_max: f64,
    pub trials: usize,
}

/// Member functions `u_j` for compactness runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MemberFunctionSpec {
    /// Steps mollified at width `base_width / j`.
    MollifiedStep {
        axis: usize,
        position: f64,
        base_width: f64,
    },
    Constant {
        value: f64,
    },
    /// `u_j` alternates between two constants with j's parity.
    TwoCluster {
        low: f64,
        high: f64,
    },
    /// `u_j = base + bump / j` with a smooth interior bump.
    ShrinkingBump {
        base: f64,
        amplitude: f64,
    },
}

/// Optional μ_j override for negative controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MuInjectSpec {
    /// `μ_j(K) = j`, spread uniformly over the cells.
    LinearInJ,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompactnessScenario {
    pub sequence: SequenceSpec,
    pub grid: GridBoxSpec,
    pub functions: MemberFunctionSpec,
    #[serde(default)]
    pub mu_inject: Option<MuInjectSpec>,
    pub engine: EngineConfig,
    /// Compact exhaustion as sub-boxes; the full grid when empty.
    #[serde(default)]
    pub exhaustion: Vec<BoxSpec>,
    /// Reference function for the limit-candidate distance report.
    #[serde(default)]
    pub reference: Option<GridFunctionSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupScenario {
    /// Family to blow up at the origin (polynomial perturbation of the
    /// Heisenberg frame for the built-in demo).
    pub family: FamilySpec,
    /// Anisotropic weights of the dilations.
    pub weights: Vec<u32>,
    /// The nilpotent model the blow-ups approach.
    pub limit: FamilySpec,
    pub lambdas: Vec<f64>,
    pub region: BoxSpec,
    #[serde(default = "default_lattice")]
    pub lattice_density: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScenarioSpec {
    Distance(DistanceScenario),
    ConvergeMetric(ConvergeMetricScenario),
    FlowCompare(FlowCompareScenario),
    Poincare(PoincareScenario),
    Doubling(DoublingScenario),
    Covering(CoveringScenario),
    Compactness(CompactnessScenario),
    BlowupDemo(BlowupScenario),
}

impl ScenarioSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            ScenarioSpec::Distance(_) => "distance",
            ScenarioSpec::ConvergeMetric(_) => "converge-metric",
            ScenarioSpec::FlowCompare(_) => "flow-compare",
            ScenarioSpec::Poincare(_) => "poincare",
            ScenarioSpec::Doubling(_) => "doubling",
            ScenarioSpec::Covering(_) => "covering",
            ScenarioSpec::Compactness(_) => "compactness",
            ScenarioSpec::BlowupDemo(_) => "blowup-demo",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    #[serde(flatten)]
    pub spec: ScenarioSpec,
}

/// One semantic configuration problem, with the JSON path it concerns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn check_box(issues: &mut Vec<ConfigIssue>, path: &str, b: &BoxSpec) {
    if let Err(e) = b.resolve() {
        issues.push(ConfigIssue {
            path: path.into(),
            message: e.to_string(),
        });
    }
}

fn check_spacing(issues: &mut Vec<ConfigIssue>, path: &str, spacing: &[f64]) {
    for (i, &s) in spacing.iter().enumerate() {
        if !(s > 0.0) || !s.is_finite() {
            issues.push(ConfigIssue {
                path: format!("{path}[{i}]"),
                message: format!("spacing must be positive and finite, got {s}"),
            });
        }
    }
}

impl Scenario {
    /// Full semantic validation; an empty list means the scenario is
    /// runnable.
    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        if self.name.is_empty() {
            issues.push(ConfigIssue {
                path: "name".into(),
                message: "scenario name must be nonempty".into(),
            });
        }
        match &self.spec {
            ScenarioSpec::Distance(d) => {
                if let Err(e) = d.family.resolve() {
                    issues.push(ConfigIssue {
                        path: "family".into(),
                        message: e.to_string(),
                    });
                }
                check_box(&mut issues, "graph.region", &d.graph.region);
                check_spacing(&mut issues, "graph.spacing", &d.graph.spacing);
                if d.graph.neighbor_radius < 1 {
                    issues.push(ConfigIssue {
                        path: "graph.neighbor_radius".into(),
                        message: "neighbor radius must be >= 1".into(),
                    });
                }
                if let PairSpec::RandomNodes { count } = &d.pairs {
                    if *count == 0 {
                        issues.push(ConfigIssue {
                            path: "pairs.count".into(),
                            message: "need at least one pair".into(),
                        });
                    }
                }
                if let Some(cv) = &d.cross_validate {
                    if cv.params.segments < 4 {
                        issues.push(ConfigIssue {
                            path: "cross_validate.params.segments".into(),
                            message: "control optimization needs at least 4 segments".into(),
                        });
                    }
                }
            }
            ScenarioSpec::ConvergeMetric(c) => {
                if let Err(e) = c.sequence.resolve() {
                    issues.push(ConfigIssue {
                        path: "sequence".into(),
                        message: e.to_string(),
                    });
                }
                if c.js.len() < 2 || c.js.windows(2).any(|w| w[1] <= w[0]) || c.js.iter().any(|&j| j == 0) {
                    issues.push(ConfigIssue {
                        path: "js".into(),
                        message: "need at least two strictly increasing positive indices".into(),
                    });
                }
                check_box(&mut issues, "graph.region", &c.graph.region);
                check_spacing(&mut issues, "graph.spacing", &c.graph.spacing);
                if c.pair_count == 0 {
                    issues.push(ConfigIssue {
                        path: "pair_count".into(),
                        message: "need at least one pair".into(),
                    });
                }
            }
            ScenarioSpec::FlowCompare(f) => {
                if let Err(e) = f.sequence.resolve() {
                    issues.push(ConfigIssue {
                        path: "sequence".into(),
                        message: e.to_string(),
                    });
                }
                if f.j_max < 1 {
                    issues.push(ConfigIssue {
                        path: "j_max".into(),
                        message: "need j_max >= 1".into(),
                    });
                }
                if !(f.max_horizon > 0.0) {
                    issues.push(ConfigIssue {
                        path: "max_horizon".into(),
                        message: "horizon must be positive".into(),
                    });
                }
                if f.segments == 0 || f.steps_per_segment == 0 {
                    issues.push(ConfigIssue {
                        path: "segments".into(),
                        message: "segments and steps per segment must be >= 1".into(),
                    });
                }
            }
            ScenarioSpec::Poincare(p) => {
                if let Err(e) = p.sequence.resolve() {
                    issues.push(ConfigIssue {
                        path: "sequence".into(),
                        message: e.to_string(),
                    });
                }
                check_box(&mut issues, "grid.region", &p.grid.region);
                if !(p.r_min > 0.0) || p.r_max <= p.r_min {
                    issues.push(ConfigIssue {
                        path: "r_min".into(),
                        message: "need 0 < r_min < r_max".into(),
                    });
                }
                if !(p.alpha >= 1.0) {
                    issues.push(ConfigIssue {
                        path: "alpha".into(),
                        message: "alpha must be >= 1".into(),
                    });
                }
                if p.sequence.metric_scale(1).is_none() {
                    issues.push(ConfigIssue {
                        path: "sequence".into(),
                        message: "poincare scenarios need identical or scaled sequences \
                                  (exact member metrics)"
                            .into(),
                    });
                }
            }
            ScenarioSpec::Doubling(d) => {
                check_box(&mut issues, "grid.region", &d.grid.region);
                check_box(&mut issues, "center_region", &d.center_region);
                if d.radii.is_empty() || d.radii.iter().any(|&r| !(r > 0.0)) {
                    issues.push(ConfigIssue {
                        path: "radii".into(),
                        message: "need positive radii".into(),
                    });
                }
            }
            ScenarioSpec::Covering(c) => {
                match &c.cloud {
                    CloudSpec::Random { count, dim, region } => {
                        if *count == 0 || *dim == 0 {
                            issues.push(ConfigIssue {
                                path: "cloud".into(),
                                message: "random cloud needs count >= 1 and dim >= 1".into(),
                            });
                        }
                        check_box(&mut issues, "cloud.region", region);
                    }
                    CloudSpec::Grid(g) => check_box(&mut issues, "cloud.region", &g.region),
                }
                if !(c.radius > 0.0) || c.radius >= c.r_max {
                    issues.push(ConfigIssue {
                        path: "radius".into(),
                        message: "need 0 < radius < r_max".into(),
                    });
                }
                if c.trials == 0 {
                    issues.push(ConfigIssue {
                        path: "trials".into(),
                        message: "need at least one trial".into(),
                    });
                }
            }
            ScenarioSpec::Compactness(c) => {
                if let Err(e) = c.sequence.resolve() {
                    issues.push(ConfigIssue {
                        path: "sequence".into(),
                        message: e.to_string(),
                    });
                }
                if c.sequence.metric_scale(1).is_none() {
                    issues.push(ConfigIssue {
                        path: "sequence".into(),
                        message: "compactness scenarios need identical or scaled sequences \
                                  (exact member metrics)"
                            .into(),
                    });
                }
                check_box(&mut issues, "grid.region", &c.grid.region);
                let cells: usize = c.grid.counts.iter().product();
                if cells == 0 {
                    issues.push(ConfigIssue {
                        path: "grid.counts".into(),
                        message: "grid must have cells".into(),
                    });
                }
                if cells > 128 * 128 * 128 {
                    issues.push(ConfigIssue {
                        path: "grid.counts".into(),
                        message: format!("grid capped at 128^3 cells, got {cells}"),
                    });
                }
                if let Err(e) = c.engine.validate() {
                    issues.push(ConfigIssue {
                        path: "engine".into(),
                        message: e.to_string(),
                    });
                }
                for (i, b) in c.exhaustion.iter().enumerate() {
                    check_box(&mut issues, &format!("exhaustion[{i}]"), b);
                }
            }
            ScenarioSpec::BlowupDemo(b) => {
                if let Err(e) = b.family.resolve() {
                    issues.push(ConfigIssue {
                        path: "family".into(),
                        message: e.to_string(),
                    });
                }
                if let Err(e) = b.limit.resolve() {
                    issues.push(ConfigIssue {
                        path: "limit".into(),
                        message: e.to_string(),
                    });
                }
                check_box(&mut issues, "region", &b.region);
                if b.lambdas.is_empty() || b.lambdas.iter().any(|&l| !(l > 0.0)) {
                    issues.push(ConfigIssue {
                        path: "lambdas".into(),
                        message: "need positive blow-up scales".into(),
                    });
                }
            }
        }
        issues
    }
}
