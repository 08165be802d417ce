//! Single-edge perturbation bounds.
//!
//! Perturbing edge `i` by `delta` turns the reduced in-branching dynamics
//! `x_tau' = -K x_tau` into static output feedback around the SISO system
//! `(a, b, c)` with transfer function `M(s) = c (sI - a)^-1 b`. The closed
//! loop is `a + delta b c` and its characteristic equation is
//! `1 - delta M(s) = 0`.

use serde::Serialize;

use crate::factorization::{factorize, Factorization};
use crate::graph::{find_in_branching, reachability, BranchingDecomposition, Digraph, GraphClass, ReachabilityReport};
use crate::numerics::{solve_linear, spectral_radius, ComplexValue, Lu, Matrix};
use crate::{Error, Result};

/// Log-grid size for phase-crossover search.
pub const CROSSOVER_GRID_POINTS: usize = 2000;
/// Grid spans `[lo * rho, hi * rho]` with `rho` the spectral radius of `a`.
pub const CROSSOVER_GRID_SPAN: (f64, f64) = (1e-6, 1e3);
/// Relative width at which crossover bisection stops.
pub const CROSSOVER_BISECT_RTOL: f64 = 1e-10;
/// Smallest admissible Sherman-Morrison denominator magnitude.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-12;
/// Relative agreement required between the two DAG closed-form routes.
pub const DAG_ROUTE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    NyquistGm,
    DagClosedForm,
    CycleClosedForm,
}

/// Admissible perturbation interval `(delta_min, delta_max)` for one edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationBound {
    pub edge: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub method: Method,
    /// Phase-crossover frequency; `None` when no negative real crossing exists.
    pub crossover_freq: Option<f64>,
    pub m_at_crossover: Option<f64>,
    /// Cycle only: series resistance `sum 1/w_i` of the remaining edges.
    pub equivalent_resistance: Option<f64>,
}

/// State-space realization of the loop seen by the perturbation of one edge.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainEdgeSystem {
    pub a_mat: Matrix,
    pub b_vec: Vec<f64>,
    pub c_vec: Vec<f64>,
    pub edge: usize,
    /// Position of `edge` in relabeled (`tau ++ c`) order.
    pub position: usize,
}

impl UncertainEdgeSystem {
    pub fn dim(&self) -> usize {
        self.b_vec.len()
    }

    /// `a + delta b c`.
    pub fn closed_loop(&self, delta: f64) -> Matrix {
        let mut out = self.a_mat.clone();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                out[(i, j)] += delta * self.b_vec[i] * self.c_vec[j];
            }
        }
        out
    }
}

pub fn build_uncertain_system(fac: &Factorization, dec: &BranchingDecomposition, edge: usize) -> Result<UncertainEdgeSystem> {
    if edge >= fac.m() {
        return Err(Error::EdgeOutOfRange { edge, m: fac.m() });
    }
    let pos = dec.position(edge);
    let a_mat = fac.reduced_matrix().scale(-1.0);
    let a_col = fac.a.column(pos);
    let b_vec = fac.e_tau.transpose().mul_vec(&a_col).into_iter().map(|v| -v).collect();
    let c_vec = fac.r.column(pos);
    Ok(UncertainEdgeSystem {
        a_mat,
        b_vec,
        c_vec,
        edge,
        position: pos,
    })
}

/// `M(s)`, from one real `2k x 2k` solve of `(sI - a) x = b`.
pub fn eval_transfer(sys: &UncertainEdgeSystem, s: ComplexValue) -> Result<ComplexValue> {
    let k = sys.dim();
    let mut big = Matrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            let v = -sys.a_mat[(i, j)];
            big[(i, j)] = v;
            big[(k + i, k + j)] = v;
        }
        big[(i, i)] += s.re;
        big[(k + i, k + i)] += s.re;
        big[(i, k + i)] = -s.im;
        big[(k + i, i)] = s.im;
    }
    let mut rhs = sys.b_vec.clone();
    rhs.resize(2 * k, 0.0);
    let lu = Lu::new(&big).map_err(|e| match e {
        Error::SingularMatrix { .. } => Error::SingularAtS { re: s.re, im: s.im },
        other => other,
    })?;
    let x = lu.solve(&Matrix::column_vector(&rhs))?;
    let mut out = ComplexValue::new(0.0, 0.0);
    for (i, c) in sys.c_vec.iter().enumerate() {
        out += ComplexValue::new(c * x[(i, 0)], c * x[(k + i, 0)]);
    }
    Ok(out)
}

fn eval_jw(sys: &UncertainEdgeSystem, omega: f64) -> Result<ComplexValue> {
    eval_transfer(sys, ComplexValue::new(0.0, omega))
}

/// A point where the Nyquist locus of `M` meets the negative real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub omega: f64,
    /// `M(j omega)`, real and negative.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainMargin {
    /// `1 / max |M(j omega_pc)|`; infinite without a negative real crossing.
    pub gm: f64,
    pub omega_pc: Option<f64>,
    pub m_at_crossover: Option<f64>,
    /// Every negative real crossing found, ascending in frequency.
    pub crossings: Vec<Crossing>,
}

/// Log-spaced frequencies `lo..=hi`.
pub(crate) fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

pub fn gain_margin(sys: &UncertainEdgeSystem) -> Result<GainMargin> {
    let mut crossings = Vec::new();
    let m0 = eval_jw(sys, 0.0)?;
    if m0.re < 0.0 {
        crossings.push(Crossing { omega: 0.0, value: m0.re });
    }

    let rho = spectral_radius(&sys.a_mat)?;
    if rho > 0.0 {
        let grid = log_grid(
            CROSSOVER_GRID_SPAN.0 * rho,
            CROSSOVER_GRID_SPAN.1 * rho,
            CROSSOVER_GRID_POINTS,
        );
        let mut prev = (grid[0], eval_jw(sys, grid[0])?);
        if prev.1.im == 0.0 && prev.1.re < 0.0 {
            crossings.push(Crossing { omega: prev.0, value: prev.1.re });
        }
        for &w in &grid[1..] {
            let cur = (w, eval_jw(sys, w)?);
            if cur.1.im == 0.0 {
                if cur.1.re < 0.0 {
                    crossings.push(Crossing { omega: w, value: cur.1.re });
                }
            } else if prev.1.im != 0.0 && prev.1.im.signum() != cur.1.im.signum() {
                let c = bisect_crossing(sys, prev, cur)?;
                if c.value < 0.0 {
                    crossings.push(c);
                }
            }
            prev = cur;
        }
    }

    let binding = crossings
        .iter()
        .copied()
        .fold(None::<Crossing>, |best, c| match best {
            Some(b) if b.value.abs() >= c.value.abs() => Some(b),
            _ => Some(c),
        });
    Ok(match binding {
        Some(b) => GainMargin {
            gm: 1.0 / b.value.abs(),
            omega_pc: Some(b.omega),
            m_at_crossover: Some(b.value),
            crossings,
        },
        None => GainMargin {
            gm: f64::INFINITY,
            omega_pc: None,
            m_at_crossover: None,
            crossings,
        },
    })
}

fn bisect_crossing(
    sys: &UncertainEdgeSystem,
    mut lo: (f64, ComplexValue),
    mut hi: (f64, ComplexValue),
) -> Result<Crossing> {
    while hi.0 - lo.0 > CROSSOVER_BISECT_RTOL * hi.0 {
        let mid_w = 0.5 * (lo.0 + hi.0);
        let mid = (mid_w, eval_jw(sys, mid_w)?);
        if mid.1.im == 0.0 {
            return Ok(Crossing { omega: mid_w, value: mid.1.re });
        }
        if mid.1.im.signum() == lo.1.im.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w = 0.5 * (lo.0 + hi.0);
    Ok(Crossing {
        omega: w,
        value: eval_jw(sys, w)?.re,
    })
}

/// Symmetric gain-margin interval `(-GM, GM)`.
pub fn nyquist_bound(fac: &Factorization, dec: &BranchingDecomposition, edge: usize) -> Result<PerturbationBound> {
    let sys = build_uncertain_system(fac, dec, edge)?;
    let gm = gain_margin(&sys)?;
    Ok(PerturbationBound {
        edge,
        delta_min: -gm.gm,
        delta_max: gm.gm,
        method: Method::NyquistGm,
        crossover_freq: gm.omega_pc,
        m_at_crossover: gm.m_at_crossover,
        equivalent_resistance: None,
    })
}

/// `r_i^T (R~ W R^T)^-1 r~_i` at relabeled position `pos`.
pub fn dag_formula_value(fac: &Factorization, pos: usize) -> Result<f64> {
    let rt = fac.r_tilde.as_ref().ok_or(Error::MultipleGloballyReachable)?;
    let mut wrt = fac.r.transpose();
    for (i, &w) in fac.weights.iter().enumerate() {
        for j in 0..wrt.cols() {
            wrt[(i, j)] *= w;
        }
    }
    let core = rt * &wrt;
    let x = solve_linear(&core, &Matrix::column_vector(&rt.column(pos)))?;
    Ok(fac.r.column(pos).iter().zip(x.as_slice()).map(|(r, x)| r * x).sum())
}

/// Exact bound for an acyclic graph with a single globally reachable node:
/// the perturbed weight may drop until the tail's out-weight sum reaches zero.
/// Positive perturbations never destabilize, so `delta_max` is infinite.
pub fn dag_bound(
    g: &Digraph,
    reach: &ReachabilityReport,
    fac: &Factorization,
    dec: &BranchingDecomposition,
    edge: usize,
) -> Result<PerturbationBound> {
    if !reach.is_acyclic {
        return Err(Error::NotAcyclic);
    }
    if reach.globally_reachable.len() != 1 {
        return Err(Error::MultipleGloballyReachable);
    }
    let tail = g.edge(edge)?.tail;
    let combinatorial = g.out_weight_sum(tail);
    let value = dag_formula_value(fac, dec.position(edge))?;
    let formula = 1.0 / value.abs();
    if (formula - combinatorial).abs() > DAG_ROUTE_RTOL * combinatorial {
        return Err(Error::ClosedFormMismatch {
            edge,
            formula,
            combinatorial,
        });
    }
    Ok(PerturbationBound {
        edge,
        delta_min: -combinatorial,
        delta_max: f64::INFINITY,
        method: Method::DagClosedForm,
        crossover_freq: Some(0.0),
        m_at_crossover: Some(-value),
        equivalent_resistance: None,
    })
}

/// One rank-one step of the Sherman-Morrison recursion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpdateStep {
    pub c_edge: usize,
    /// Row of the in-branching sibling sharing the complement edge's tail.
    pub sibling_row: Option<usize>,
    pub changed_rows: Vec<usize>,
    pub denominator: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShermanMorrison {
    pub inverse: Matrix,
    pub steps: Vec<UpdateStep>,
}

/// `(R~ W R^T)^-1` built from `W_tau^-1` by one rank-one update per
/// complement edge. `weights` are in relabeled order.
pub fn sherman_morrison_inverse(fac: &Factorization, weights: &[f64]) -> Result<ShermanMorrison> {
    let rt = fac.r_tilde.as_ref().ok_or(Error::MultipleGloballyReachable)?;
    if weights.len() != fac.m() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} edges",
            weights.len(),
            fac.m()
        )));
    }
    let k = fac.n() - 1;
    let mut d = Matrix::diag(&weights[..k].iter().map(|w| 1.0 / w).collect::<Vec<_>>());
    let mut steps = Vec::with_capacity(fac.m() - k);
    for (pos, &w) in weights.iter().enumerate().skip(k) {
        let r = fac.r.column(pos);
        let rt_col = rt.column(pos);
        let d_rt = d.mul_vec(&rt_col);
        let rt_d = d.transpose().mul_vec(&r);
        let quad: f64 = r.iter().zip(&d_rt).map(|(a, b)| a * b).sum();
        let denominator = 1.0 + w * quad;
        if denominator.abs() < DEGENERATE_DENOMINATOR {
            return Err(Error::DegenerateUpdate {
                step: pos - k + 1,
                denominator,
            });
        }
        let mut changed_rows = Vec::new();
        for i in 0..k {
            let f = w * d_rt[i] / denominator;
            let mut changed = false;
            for j in 0..k {
                let upd = f * rt_d[j];
                if upd != 0.0 {
                    d[(i, j)] -= upd;
                    changed = true;
                }
            }
            if changed {
                changed_rows.push(i);
            }
        }
        let sibling_row = rt_col
            .iter()
            .enumerate()
            .find(|(_, &v)| v != 0.0)
            .map(|(i, _)| i);
        steps.push(UpdateStep {
            c_edge: fac.edge_order[pos],
            sibling_row,
            changed_rows,
            denominator,
        });
    }
    Ok(ShermanMorrison { inverse: d, steps })
}

/// Exact bound for a simple directed cycle; the perturbed weight must stay
/// above minus the reciprocal of the series resistance of the other edges.
pub fn cycle_bound(g: &Digraph, reach: &ReachabilityReport, edge: usize) -> Result<PerturbationBound> {
    if !reach.is_simple_cycle {
        return Err(Error::NotSimpleCycle);
    }
    let w_j = g.edge(edge)?.weight;
    let r_eq: f64 = g
        .edges()
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != edge)
        .map(|(_, e)| 1.0 / e.weight)
        .sum();
    Ok(PerturbationBound {
        edge,
        delta_min: -w_j - 1.0 / r_eq,
        delta_max: f64::INFINITY,
        method: Method::CycleClosedForm,
        crossover_freq: Some(0.0),
        m_at_crossover: Some(-r_eq / (1.0 + w_j * r_eq)),
        equivalent_resistance: Some(r_eq),
    })
}

/// How a proposed perturbation relates to the computed bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    /// On the closed-form boundary: a zero eigenvalue appears.
    Marginal,
    Unstable,
    /// Outside the gain-margin interval with no exact result to decide.
    Uncertified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeBound {
    pub edge: usize,
    /// Closed form when one applies, otherwise the gain-margin bound.
    pub primary: PerturbationBound,
    /// Gain-margin bound alongside a closed form; `None` when it is primary.
    pub nyquist: Option<PerturbationBound>,
}

impl EdgeBound {
    pub fn nyquist(&self) -> &PerturbationBound {
        self.nyquist.as_ref().unwrap_or(&self.primary)
    }

    pub fn has_closed_form(&self) -> bool {
        self.primary.method != Method::NyquistGm
    }

    pub fn certified_by_gain_margin(&self, delta: f64) -> bool {
        let gm = self.nyquist().delta_max;
        delta.abs() < gm
    }

    pub fn assess(&self, delta: f64) -> Verdict {
        if self.has_closed_form() {
            let lo = self.primary.delta_min;
            if (delta - lo).abs() <= 1e-12 * lo.abs().max(1.0) {
                Verdict::Marginal
            } else if delta > lo {
                Verdict::Stable
            } else {
                Verdict::Unstable
            }
        } else if self.certified_by_gain_margin(delta) {
            Verdict::Stable
        } else {
            Verdict::Uncertified
        }
    }
}

/// Graph analysis shared by every per-edge bound.
#[derive(Debug, Clone)]
pub struct Analyzer<'g> {
    graph: &'g Digraph,
    reach: ReachabilityReport,
    dec: BranchingDecomposition,
    fac: Factorization,
}

impl<'g> Analyzer<'g> {
    pub fn new(graph: &'g Digraph) -> Result<Self> {
        Self::with_root(graph, None)
    }

    pub fn with_root(graph: &'g Digraph, root: Option<usize>) -> Result<Self> {
        let reach = reachability(graph);
        if !reach.has_in_branching {
            return Err(Error::NoInBranching);
        }
        let dec = find_in_branching(graph, root)?;
        let fac = factorize(graph, &dec)?;
        Ok(Self { graph, reach, dec, fac })
    }

    pub fn graph(&self) -> &Digraph {
        self.graph
    }

    pub fn reachability(&self) -> &ReachabilityReport {
        &self.reach
    }

    pub fn decomposition(&self) -> &BranchingDecomposition {
        &self.dec
    }

    pub fn factorization(&self) -> &Factorization {
        &self.fac
    }

    pub fn class(&self) -> GraphClass {
        self.reach.class()
    }

    pub fn uncertain_system(&self, edge: usize) -> Result<UncertainEdgeSystem> {
        build_uncertain_system(&self.fac, &self.dec, edge)
    }

    pub fn nyquist_bound(&self, edge: usize) -> Result<PerturbationBound> {
        nyquist_bound(&self.fac, &self.dec, edge)
    }

    pub fn bound(&self, edge: usize) -> Result<EdgeBound> {
        self.graph.edge(edge)?;
        let nyquist = self.nyquist_bound(edge)?;
        let closed = match self.class() {
            GraphClass::SimpleCycle => Some(cycle_bound(self.graph, &self.reach, edge)?),
            GraphClass::Dag => Some(dag_bound(self.graph, &self.reach, &self.fac, &self.dec, edge)?),
            _ => None,
        };
        Ok(match closed {
            Some(primary) => EdgeBound {
                edge,
                primary,
                nyquist: Some(nyquist),
            },
            None => EdgeBound {
                edge,
                primary: nyquist,
                nyquist: None,
            },
        })
    }

    /// Every edge, most vulnerable (smallest `|delta_min|`) first.
    pub fn rank(&self) -> Result<Vec<EdgeBound>> {
        let mut out = (0..self.graph.m())
            .map(|e| self.bound(e))
            .collect::<Result<Vec<_>>>()?;
        out.sort_by(|a, b| {
            a.primary
                .delta_min
                .abs()
                .total_cmp(&b.primary.delta_min.abs())
                .then(a.edge.cmp(&b.edge))
        });
        Ok(out)
    }
}

pub fn bound_for_edge(g: &Digraph, edge: usize) -> Result<EdgeBound> {
    Analyzer::new(g)?.bound(edge)
}

pub fn rank_edges(g: &Digraph) -> Result<Vec<EdgeBound>> {
    Analyzer::new(g)?.rank()
}
