//! Scenario files: graph, conditions, optional split and a λ sweep, as JSON.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested
//! arrays of them.

use serde::{Deserialize, Serialize};

use qgraph::benchmarks::Benchmark;
use qgraph::graph::{
    build_preset, compose, split_graph, validate_bc, BoundaryConditions, Cut, EdgeSpec, EndCondition, OriginCondition,
    PotentialProfile, Preset, SplitMode, SplitSpec, StarGraph,
};
use qgraph::linalg::{CMat, C64};

use crate::error::{CliError, CliResult};

pub type Complex = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub graph: GraphSpec,
    pub boundary: BoundarySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitJson>,
    pub sweep: Sweep,
    #[serde(default, skip_serializing_if = "Options::is_empty")]
    pub options: Options,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub edges: Vec<EdgeJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeJson {
    pub length: f64,
    pub potential: PotentialJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialJson {
    /// `values[k]` holds between consecutive breaks; `breaks` excludes the ends.
    Steps { breaks: Vec<f64>, values: Vec<f64> },
    /// `(x, V(x))` samples, linearly interpolated.
    Sampled { points: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    /// `dirichlet`, `neumann`, `kirchhoff` (Dirichlet ends) or `robin`.
    Preset {
        name: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        theta: Vec<f64>,
    },
    Composed { origin: VertexJson, ends: VertexJson },
    Matrices { alpha1: Vec<Vec<Complex>>, alpha2: Vec<Vec<Complex>>, beta1: Vec<Complex>, beta2: Vec<Complex> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta: Vec<f64>,
}

impl VertexJson {
    pub fn plain(kind: &str) -> Self {
        VertexJson { kind: kind.to_string(), theta: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitModeJson {
    Single,
    SameWire,
    TwoWires,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutJson {
    pub edge: usize,
    pub position: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitJson {
    pub mode: SplitModeJson,
    pub cuts: Vec<CutJson>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub samples: usize,
}

impl Sweep {
    /// Evenly spaced λ values including both ends.
    pub fn points(&self) -> Vec<f64> {
        match self.samples {
            0 => Vec::new(),
            1 => vec![self.lambda_min],
            n => (0..n)
                .map(|k| self.lambda_min + (self.lambda_max - self.lambda_min) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lambda_min, self.lambda_max)
    }

    pub fn with_samples(self, samples: usize) -> Self {
        Sweep { samples, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Counting grid size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Options {
    pub fn is_empty(&self) -> bool {
        self.grid.is_none() && self.seed.is_none()
    }
}

/// A validated scenario in library types.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub graph: StarGraph,
    pub bc: BoundaryConditions,
    pub split: Option<SplitSpec>,
    pub sweep: Sweep,
}

fn complex(z: &Complex) -> C64 {
    C64::new(z[0], z[1])
}

fn pair(z: C64) -> Complex {
    [z.re, z.im]
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn matrix(rows: &[Vec<Complex>], n: usize, what: &str) -> CliResult<CMat> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(invalid(format!("{what} must be {n}×{n}")));
    }
    Ok(CMat::from_fn(n, n, |i, j| complex(&rows[i][j])))
}

fn origin_condition(v: &VertexJson) -> CliResult<OriginCondition> {
    match v.kind.as_str() {
        "dirichlet" => Ok(OriginCondition::Dirichlet),
        "neumann" => Ok(OriginCondition::Neumann),
        "kirchhoff" => Ok(OriginCondition::Kirchhoff),
        "robin" => Ok(OriginCondition::Robin(v.theta.clone())),
        other => Err(invalid(format!("unknown origin condition '{other}'"))),
    }
}

fn end_condition(v: &VertexJson) -> CliResult<EndCondition> {
    match v.kind.as_str() {
        "dirichlet" => Ok(EndCondition::Dirichlet),
        "neumann" => Ok(EndCondition::Neumann),
        "robin" => Ok(EndCondition::Robin(v.theta.clone())),
        other => Err(invalid(format!("unknown end condition '{other}'"))),
    }
}

fn check_theta(theta: &[f64], n: usize) -> CliResult<()> {
    if theta.len() > 1 && theta.len() != n {
        return Err(invalid(format!("robin needs 1 or {n} parameters, got {}", theta.len())));
    }
    Ok(())
}

impl PotentialJson {
    fn profile(&self, length: f64) -> PotentialProfile {
        match self {
            PotentialJson::Steps { breaks, values } => PotentialProfile::steps(length, breaks, values),
            PotentialJson::Sampled { points } => PotentialProfile::Sampled(points.iter().map(|p| (p[0], p[1])).collect()),
        }
    }

    fn from_profile(p: &PotentialProfile) -> Self {
        match p {
            PotentialProfile::PiecewiseConstant(segs) => PotentialJson::Steps {
                breaks: segs.iter().skip(1).map(|s| s.start).collect(),
                values: segs.iter().map(|s| s.value).collect(),
            },
            PotentialProfile::Sampled(pts) => PotentialJson::Sampled { points: pts.iter().map(|&(x, v)| [x, v]).collect() },
        }
    }
}

impl Scenario {
    pub fn parse(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Scenario::parse(&text)
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// Builds and validates the library objects.
    pub fn problem(&self) -> CliResult<Problem> {
        let edges = self
            .graph
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                if let PotentialJson::Steps { breaks, values } = &e.potential {
                    if values.len() != breaks.len() + 1 {
                        return Err(invalid(format!("edge {i}: {} values for {} breaks", values.len(), breaks.len())));
                    }
                }
                Ok(EdgeSpec::new(e.length, e.potential.profile(e.length)))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let graph = StarGraph::new(edges)?;
        let n = graph.n();
        let bc = match &self.boundary {
            BoundarySpec::Preset { name, theta } => {
                check_theta(theta, n)?;
                let preset = match name.as_str() {
                    "dirichlet" => Preset::Dirichlet,
                    "neumann" => Preset::Neumann,
                    "kirchhoff" => Preset::Kirchhoff,
                    "robin" => Preset::Robin(theta.clone()),
                    other => return Err(invalid(format!("unknown preset '{other}'"))),
                };
                build_preset(&preset, n)
            }
            BoundarySpec::Composed { origin, ends } => {
                check_theta(&origin.theta, n)?;
                check_theta(&ends.theta, n)?;
                compose(&origin_condition(origin)?, &end_condition(ends)?, n)
            }
            BoundarySpec::Matrices { alpha1, alpha2, beta1, beta2 } => {
                if beta1.len() != n || beta2.len() != n {
                    return Err(invalid(format!("beta1 and beta2 need {n} entries")));
                }
                BoundaryConditions {
                    alpha1: matrix(alpha1, n, "alpha1")?,
                    alpha2: matrix(alpha2, n, "alpha2")?,
                    beta1: beta1.iter().map(complex).collect(),
                    beta2: beta2.iter().map(complex).collect(),
                }
            }
        };
        validate_bc(&bc).into_result()?;

        let split = match &self.split {
            None => None,
            Some(s) => {
                let cut = |k: usize| -> CliResult<Cut> {
                    let c = s.cuts.get(k).ok_or_else(|| invalid(format!("split needs cut {}", k + 1)))?;
                    Ok(Cut { edge: c.edge, position: c.position })
                };
                let expected = if s.mode == SplitModeJson::Single { 1 } else { 2 };
                if s.cuts.len() != expected {
                    return Err(invalid(format!("{:?} split needs {expected} cuts", s.mode)));
                }
                let spec = match s.mode {
                    SplitModeJson::Single => SplitSpec::single(cut(0)?.edge, cut(0)?.position),
                    SplitModeJson::SameWire => {
                        let (a, b) = (cut(0)?, cut(1)?);
                        if a.edge != b.edge {
                            return Err(invalid("same_wire cuts must share an edge"));
                        }
                        SplitSpec::same_wire(a.edge, a.position, b.position)
                    }
                    SplitModeJson::TwoWires => SplitSpec::two_wires(cut(0)?, cut(1)?),
                };
                split_graph(&graph, &bc, &spec)?;
                Some(spec)
            }
        };

        let sw = self.sweep;
        if !(sw.lambda_min.is_finite() && sw.lambda_max.is_finite()) || (sw.samples > 1 && sw.lambda_min >= sw.lambda_max)
        {
            return Err(invalid("sweep needs finite lambda_min < lambda_max"));
        }
        Ok(Problem { graph, bc, split, sweep: sw })
    }

    /// Scenario describing `graph`, `bc` and `split` with explicit matrices.
    pub fn from_parts(name: Option<String>, graph: &StarGraph, bc: &BoundaryConditions, split: Option<&SplitSpec>, sweep: Sweep) -> Self {
        let rows = |m: &CMat| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect()).collect();
        Scenario {
            name,
            graph: GraphSpec {
                edges: graph
                    .edges
                    .iter()
                    .map(|e| EdgeJson { length: e.length, potential: PotentialJson::from_profile(&e.potential) })
                    .collect(),
            },
            boundary: BoundarySpec::Matrices {
                alpha1: rows(&bc.alpha1),
                alpha2: rows(&bc.alpha2),
                beta1: bc.beta1.iter().map(|&z| pair(z)).collect(),
                beta2: bc.beta2.iter().map(|&z| pair(z)).collect(),
            },
            split: split.map(split_json),
            sweep,
            options: Options::default(),
        }
    }

    /// Reference scenario with its conditions written by name.
    pub fn from_benchmark(b: &Benchmark, samples: usize) -> Self {
        let (lambda_min, lambda_max) = b.interval;
        let mut s = Scenario::from_parts(
            Some(b.name.to_string()),
            &b.graph,
            &b.bc,
            Some(&b.split),
            Sweep { lambda_min, lambda_max, samples },
        );
        let ends = if b.name == "barrier_interior" { "neumann" } else { "dirichlet" };
        s.boundary = BoundarySpec::Composed { origin: VertexJson::plain("kirchhoff"), ends: VertexJson::plain(ends) };
        s
    }
}

fn split_json(spec: &SplitSpec) -> SplitJson {
    SplitJson {
        mode: match spec.mode {
            SplitMode::SingleCut => SplitModeJson::Single,
            SplitMode::DoubleSameWire => SplitModeJson::SameWire,
            SplitMode::DoubleTwoWires => SplitModeJson::TwoWires,
        },
        cuts: spec.cuts.iter().map(|c| CutJson { edge: c.edge, position: c.position }).collect(),
    }
}
