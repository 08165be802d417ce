//! JSON documents written to stdout. Infinite bounds serialize as `null`.

use edgemargin::dynamics::Outcome;
use edgemargin::graph::{GraphClass, RelationCheck};
use edgemargin::robustness::Method;
use edgemargin::{Digraph, EdgeBound, PerturbationBound};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct GraphSummary {
    pub n: usize,
    pub m: usize,
    pub class: GraphClass,
    pub root: String,
    pub globally_reachable: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub method: Method,
    pub delta_min: f64,
    pub delta_max: f64,
    pub crossover_freq: Option<f64>,
    pub m_at_crossover: Option<f64>,
    pub equivalent_resistance: Option<f64>,
}

impl From<&PerturbationBound> for BoundReport {
    fn from(b: &PerturbationBound) -> Self {
        Self {
            method: b.method,
            delta_min: b.delta_min,
            delta_max: b.delta_max,
            crossover_freq: b.crossover_freq,
            m_at_crossover: b.m_at_crossover,
            equivalent_resistance: b.equivalent_resistance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeReport {
    /// Zero-based position of the edge in the input file.
    pub edge: usize,
    pub tail: String,
    pub head: String,
    pub weight: f64,
    pub bound: BoundReport,
    /// Gain-margin bound, reported next to a closed form.
    pub nyquist: Option<BoundReport>,
}

impl EdgeReport {
    pub fn new(g: &Digraph, b: &EdgeBound) -> Self {
        let e = g.edges()[b.edge];
        Self {
            edge: b.edge,
            tail: g.label(e.tail),
            head: g.label(e.head),
            weight: e.weight,
            bound: (&b.primary).into(),
            nyquist: b.nyquist.as_ref().map(Into::into),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub graph: GraphSummary,
    pub edges: Vec<EdgeReport>,
    pub structure_checks: Vec<RelationCheck>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankedEdge {
    pub rank: usize,
    #[serde(flatten)]
    pub edge: EdgeReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct RankReport {
    pub graph: GraphSummary,
    pub ranking: Vec<RankedEdge>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeRef {
    pub tail: String,
    pub head: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub edge: Option<EdgeRef>,
    pub delta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub samples: usize,
    pub diverged: bool,
    pub final_spread: f64,
    pub edge_consistency: Option<f64>,
    pub outcome: Outcome,
    pub trajectory_csv: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosestApproach {
    pub omega: f64,
    /// Distance of the locus from `(-1, 0)`.
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NyquistReport {
    pub edge: EdgeRef,
    pub delta: f64,
    pub samples: usize,
    pub gain_margin: f64,
    pub omega_pc: Option<f64>,
    pub closest_approach: ClosestApproach,
    pub csv: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub graphs: usize,
    pub checks: usize,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
    pub line: Option<usize>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub error: ErrorBody,
}
