//! Weighted digraph model, incidence matrices, Laplacians, reachability and
//! rooted in-branchings.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::numerics::{
    eigenvalues, null_space_orthonormal, rank, spectra_distance, ComplexValue, Matrix,
    DEFAULT_RANK_TOL,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub weight: f64,
}

/// Directed graph with strictly positive nominal edge weights.
///
/// Nodes are `0..n`. Edge ids are positions in [`Digraph::edges`]. Self-loops
/// and parallel edges are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    n: usize,
    edges: Vec<Edge>,
    labels: Option<Vec<String>>,
}

impl Digraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (tail, head, weight) in edges {
            for node in [tail, head] {
                if node >= n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if tail == head {
                return Err(Error::SelfLoop(tail));
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::NonPositiveWeight { tail, head, weight });
            }
            if !seen.insert((tail, head)) {
                return Err(Error::ParallelEdge { tail, head });
            }
            out.push(Edge { tail, head, weight });
        }
        Ok(Self {
            n,
            edges: out,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.n
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Result<&Edge> {
        self.edges.get(id).ok_or(Error::EdgeOutOfRange {
            edge: id,
            m: self.edges.len(),
        })
    }

    pub fn weights(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.weight).collect()
    }

    /// Display label of a node; one-based number when no labels were given.
    pub fn label(&self, node: usize) -> String {
        match &self.labels {
            Some(l) => l[node].clone(),
            None => (node + 1).to_string(),
        }
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn edge_between(&self, tail: usize, head: usize) -> Option<usize> {
        self.edges
            .iter()
            .position(|e| e.tail == tail && e.head == head)
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|e| e.tail == node).count()
    }

    /// Sum of the weights of edges leaving `node`.
    pub fn out_weight_sum(&self, node: usize) -> f64 {
        self.edges
            .iter()
            .filter(|e| e.tail == node)
            .map(|e| e.weight)
            .sum()
    }

    /// Graph Laplacian `A W E^T` for an arbitrary weight vector (which may
    /// contain non-positive entries), built straight from the edge list.
    pub fn laplacian_with_weights(&self, weights: &[f64]) -> Matrix {
        assert_eq!(weights.len(), self.m());
        let mut l = Matrix::zeros(self.n, self.n);
        for (e, &w) in self.edges.iter().zip(weights) {
            l[(e.tail, e.tail)] += w;
            l[(e.tail, e.head)] -= w;
        }
        l
    }

    pub fn is_weakly_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for e in &self.edges {
            adj[e.tail].push(e.head);
            adj[e.head].push(e.tail);
        }
        bfs_count(&adj, 0) == self.n
    }
}

fn bfs_count(adj: &[Vec<usize>], start: usize) -> usize {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count
}

/// Incidence `E` (+1 at the tail, -1 at the head), out-incidence `A`
/// (1 at the tail) and the diagonal weight matrix `W`, columns in edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceSet {
    pub e: Matrix,
    pub a: Matrix,
    pub w: Matrix,
}

pub fn build_incidence(g: &Digraph) -> IncidenceSet {
    let (n, m) = (g.n(), g.m());
    let mut e = Matrix::zeros(n, m);
    let mut a = Matrix::zeros(n, m);
    for (j, edge) in g.edges().iter().enumerate() {
        e[(edge.tail, j)] = 1.0;
        e[(edge.head, j)] = -1.0;
        a[(edge.tail, j)] = 1.0;
    }
    IncidenceSet {
        e,
        a,
        w: Matrix::diag(&g.weights()),
    }
}

/// `A W E^T` (n x n).
pub fn graph_laplacian(inc: &IncidenceSet) -> Matrix {
    &(&inc.a * &inc.w) * &inc.e.transpose()
}

/// Directed edge Laplacian `E^T A W` (m x m).
pub fn edge_laplacian(inc: &IncidenceSet) -> Matrix {
    &(&inc.e.transpose() * &inc.a) * &inc.w
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReachabilityReport {
    /// Nodes reachable by a directed path from every node, ascending.
    pub globally_reachable: Vec<usize>,
    pub is_acyclic: bool,
    pub is_simple_cycle: bool,
    pub has_in_branching: bool,
}

/// Which closed form (if any) applies to a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphClass {
    /// Acyclic with exactly one globally reachable node.
    Dag,
    SimpleCycle,
    General,
    NoInBranching,
}

impl ReachabilityReport {
    pub fn class(&self) -> GraphClass {
        if !self.has_in_branching {
            GraphClass::NoInBranching
        } else if self.is_simple_cycle {
            GraphClass::SimpleCycle
        } else if self.is_acyclic && self.globally_reachable.len() == 1 {
            GraphClass::Dag
        } else {
            GraphClass::General
        }
    }
}

pub fn reachability(g: &Digraph) -> ReachabilityReport {
    let n = g.n();
    let mut rev = vec![Vec::new(); n];
    let mut out = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for e in g.edges() {
        rev[e.head].push(e.tail);
        out[e.tail].push(e.head);
        indeg[e.head] += 1;
    }
    let globally_reachable: Vec<usize> = (0..n).filter(|&v| bfs_count(&rev, v) == n).collect();

    // Kahn's algorithm.
    let mut deg = indeg.clone();
    let mut queue: VecDeque<usize> = (0..n).filter(|&v| deg[v] == 0).collect();
    let mut visited = 0;
    while let Some(u) = queue.pop_front() {
        visited += 1;
        for &v in &out[u] {
            deg[v] -= 1;
            if deg[v] == 0 {
                queue.push_back(v);
            }
        }
    }
    let is_acyclic = visited == n;

    let is_simple_cycle = n >= 2
        && g.m() == n
        && (0..n).all(|v| indeg[v] == 1 && out[v].len() == 1)
        && {
            let mut v = 0;
            let mut steps = 0;
            loop {
                v = out[v][0];
                steps += 1;
                if v == 0 {
                    break steps == n;
                }
            }
        };

    ReachabilityReport {
        has_in_branching: !globally_reachable.is_empty(),
        globally_reachable,
        is_acyclic,
        is_simple_cycle,
    }
}

/// A rooted in-branching `G_tau` and its complement `G_c`, with the
/// relabeling under which in-branching edge `k` leaves node label `k` and the
/// root carries label `n - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchingDecomposition {
    pub root: usize,
    /// In-branching edge ids; position `k` is the edge leaving `node_order[k]`.
    pub tau_edges: Vec<usize>,
    /// Complement edge ids, ascending.
    pub c_edges: Vec<usize>,
    /// Tail node of every edge, indexed by edge id.
    pub parent_of_edge: Vec<usize>,
    /// For complement edges, the in-branching edge sharing its tail. `None`
    /// for in-branching edges and for edges leaving the root.
    pub sibling_in_tau: Vec<Option<usize>>,
    /// Position of each edge id in `tau_edges ++ c_edges`.
    pub permutation: Vec<usize>,
    /// Node at each label (root last).
    pub node_order: Vec<usize>,
    /// Label of each node.
    pub node_label: Vec<usize>,
    /// In-branching edge leaving each node (`None` for the root).
    pub tau_of_node: Vec<Option<usize>>,
}

impl BranchingDecomposition {
    /// Edge ids in relabeled order, `tau_edges ++ c_edges`.
    pub fn edge_order(&self) -> Vec<usize> {
        self.tau_edges.iter().chain(&self.c_edges).copied().collect()
    }

    pub fn position(&self, edge: usize) -> usize {
        self.permutation[edge]
    }

    pub fn is_tau(&self, edge: usize) -> bool {
        self.permutation[edge] < self.tau_edges.len()
    }
}

/// Reverse-BFS in-branching. Without an explicit root the smallest globally
/// reachable node is used; each other node keeps the out-edge whose head is
/// closest to the root, ties broken by the smaller edge id.
pub fn find_in_branching(g: &Digraph, root: Option<usize>) -> Result<BranchingDecomposition> {
    let reach = reachability(g);
    let root = match root {
        None => *reach.globally_reachable.first().ok_or(Error::NoInBranching)?,
        Some(r) => {
            if r >= g.n() {
                return Err(Error::NodeOutOfRange { node: r, n: g.n() });
            }
            if reach.globally_reachable.is_empty() {
                return Err(Error::NoInBranching);
            }
            if !reach.globally_reachable.contains(&r) {
                return Err(Error::RootNotReachable(r));
            }
            r
        }
    };
    let n = g.n();
    let m = g.m();

    let mut dist = vec![usize::MAX; n];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut incoming = vec![Vec::new(); n];
    for (id, e) in g.edges().iter().enumerate() {
        incoming[e.head].push(id);
    }
    while let Some(v) = queue.pop_front() {
        for &id in &incoming[v] {
            let u = g.edges()[id].tail;
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }

    let mut tau_of_node: Vec<Option<usize>> = vec![None; n];
    for (id, e) in g.edges().iter().enumerate() {
        if e.tail == root {
            continue;
        }
        let better = match tau_of_node[e.tail] {
            None => true,
            Some(cur) => {
                let cur_head = g.edges()[cur].head;
                dist[e.head] < dist[cur_head]
            }
        };
        if better {
            tau_of_node[e.tail] = Some(id);
        }
    }

    let node_order: Vec<usize> = (0..n).filter(|&v| v != root).chain([root]).collect();
    let mut node_label = vec![0; n];
    for (label, &node) in node_order.iter().enumerate() {
        node_label[node] = label;
    }
    let tau_edges: Vec<usize> = node_order[..n - 1]
        .iter()
        .map(|&v| tau_of_node[v].expect("every non-root node reaches the root"))
        .collect();
    let tau_set: HashSet<usize> = tau_edges.iter().copied().collect();
    let c_edges: Vec<usize> = (0..m).filter(|id| !tau_set.contains(id)).collect();

    let mut permutation = vec![0; m];
    for (pos, &id) in tau_edges.iter().chain(&c_edges).enumerate() {
        permutation[id] = pos;
    }
    let parent_of_edge: Vec<usize> = g.edges().iter().map(|e| e.tail).collect();
    let mut sibling_in_tau = vec![None; m];
    for &id in &c_edges {
        sibling_in_tau[id] = tau_of_node[g.edges()[id].tail];
    }

    Ok(BranchingDecomposition {
        root,
        tau_edges,
        c_edges,
        parent_of_edge,
        sibling_in_tau,
        permutation,
        node_order,
        node_label,
        tau_of_node,
    })
}

/// One structural relation checked numerically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationCheck {
    pub relation: String,
    /// `None` when the relation's hypotheses do not hold for this graph.
    pub satisfied: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub n: usize,
    pub m: usize,
    pub weakly_connected: bool,
    pub rank_graph_laplacian: usize,
    pub nullity_edge_laplacian: usize,
    pub nullity_aw: usize,
    pub nullity_a: usize,
    /// Out-degree of each node.
    pub out_degrees: Vec<usize>,
    /// Nodes with at least one outgoing edge.
    pub nodes_with_out_edges: usize,
    pub identical_a_columns: bool,
    pub ones_in_range_a: bool,
    pub zero_eigenvalues_edge_laplacian: usize,
    pub checks: Vec<RelationCheck>,
}

impl StructureReport {
    pub fn all_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied != Some(false))
    }
}

/// Tolerance for declaring an eigenvalue zero, relative to the matrix scale.
const ZERO_EIG_RTOL: f64 = 1e-9;

/// Ranks, nullities and spectra of the Laplacians, with each structural
/// relation flagged as satisfied or violated.
pub fn structure_report(g: &Digraph) -> Result<StructureReport> {
    let (n, m) = (g.n(), g.m());
    let inc = build_incidence(g);
    let lg = graph_laplacian(&inc);
    let le = edge_laplacian(&inc);
    let aw = &inc.a * &inc.w;
    let reach = reachability(g);
    let weakly_connected = g.is_weakly_connected();

    let rank_lg = rank(&lg, DEFAULT_RANK_TOL);
    let null_le = null_space_orthonormal(&le, DEFAULT_RANK_TOL).cols();
    let null_aw_basis = null_space_orthonormal(&aw, DEFAULT_RANK_TOL);
    let nullity_aw = null_aw_basis.cols();
    let nullity_a = null_space_orthonormal(&inc.a, DEFAULT_RANK_TOL).cols();
    let out_degrees: Vec<usize> = (0..n).map(|v| g.out_degree(v)).collect();
    let r = out_degrees.iter().filter(|&&d| d >= 1).count();

    let identical_a_columns = (0..m).any(|i| {
        (i + 1..m).any(|j| g.edges()[i].tail == g.edges()[j].tail)
    });
    let ones = Matrix::column_vector(&vec![1.0; n]);
    let ones_in_range_a = m > 0
        && rank(&inc.a.hstack(&ones)?, DEFAULT_RANK_TOL) == rank(&inc.a, DEFAULT_RANK_TOL);

    let scale = lg.max_abs().max(1.0);
    let eig_lg = eigenvalues(&lg)?;
    let eig_le = eigenvalues(&le)?;
    let is_zero = |z: &ComplexValue| z.norm() <= ZERO_EIG_RTOL * scale;
    let zero_eig_le = eig_le.iter().filter(|z| is_zero(z)).count();

    let mut checks = Vec::new();
    let mut push = |relation: &str, satisfied: Option<bool>| {
        checks.push(RelationCheck {
            relation: relation.to_string(),
            satisfied,
        })
    };

    let inclusion = if nullity_aw == 0 {
        true
    } else {
        (&le * &null_aw_basis).max_abs() <= 1e-9 * scale
    };
    push("null(AW) is contained in null(L_e)", Some(inclusion));

    let has_sink = out_degrees.contains(&0);
    push(
        "weakly connected with a zero out-degree node: null(L_e) = null(AW)",
        (weakly_connected && has_sink).then_some(null_le == nullity_aw),
    );
    push(
        "weakly connected without a zero out-degree node: 1 in range(A), null(AW) strictly inside null(L_e)",
        (weakly_connected && !has_sink).then_some(ones_in_range_a && null_le > nullity_aw),
    );

    let multi_out = out_degrees.iter().any(|&d| d > 1);
    push(
        "A has a null space <=> A has identical columns <=> some out-degree > 1",
        Some((nullity_a > 0) == identical_a_columns && identical_a_columns == multi_out),
    );
    push(
        "dim null(L_e) >= m - r",
        Some(null_le + r >= m),
    );
    push(
        "several globally reachable nodes: every out-degree >= 1 and 1 in range(A)",
        (reach.globally_reachable.len() > 1)
            .then_some(out_degrees.iter().all(|&d| d >= 1) && ones_in_range_a),
    );

    let in_branching = reach.has_in_branching;
    push(
        "spectrum of L_g in the open right half plane plus the origin",
        in_branching.then(|| {
            eig_lg
                .iter()
                .all(|z| is_zero(z) || z.re > ZERO_EIG_RTOL * scale)
        }),
    );
    let nonzero = |v: &[ComplexValue]| -> Vec<ComplexValue> {
        v.iter().filter(|z| !is_zero(z)).copied().collect()
    };
    push(
        "L_e and L_g share their non-zero eigenvalues",
        Some(spectra_distance(&nonzero(&eig_lg), &nonzero(&eig_le)) <= 1e-8 * scale),
    );
    push("rank L_g = n - 1", in_branching.then_some(rank_lg + 1 == n));
    push(
        "zero eigenvalue of L_e has algebraic and geometric multiplicity m - n + 1",
        in_branching.then_some(null_le + n == m + 1 && zero_eig_le + n == m + 1),
    );

    Ok(StructureReport {
        n,
        m,
        weakly_connected,
        rank_graph_laplacian: rank_lg,
        nullity_edge_laplacian: null_le,
        nullity_aw,
        nullity_a,
        out_degrees,
        nodes_with_out_edges: r,
        identical_a_columns,
        ones_in_range_a,
        zero_eigenvalues_edge_laplacian: zero_eig_le,
        checks,
    })
}
