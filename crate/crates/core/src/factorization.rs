//! Factorizations of the incidence structure over a rooted in-branching.
//!
//! With edges ordered `tau ++ c` and nodes relabeled so that in-branching
//! edge `k` leaves node `k`, the incidence matrix factors as
//! `E = E_tau [I T_tau] = E_tau R` and, when exactly one node is globally
//! reachable, `A = A_tau [I T~_tau] = A_tau R~`. Every matrix stored here is
//! in those relabeled coordinates.

use serde::Serialize;

use crate::graph::{build_incidence, reachability, BranchingDecomposition, Digraph};
use crate::numerics::{inverse, orthonormalize_columns, solve_linear, Matrix};
use crate::{Error, Result};

/// Tolerance for matching least-squares factor columns to signed paths.
const PATH_MATCH_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    /// Edge id at each relabeled position (`tau ++ c`).
    pub edge_order: Vec<usize>,
    /// Node at each label, root last.
    pub node_order: Vec<usize>,
    /// Weights in relabeled edge order.
    pub weights: Vec<f64>,
    /// Incidence `E(G)`, relabeled (n x m).
    pub e: Matrix,
    /// Out-incidence `A(G)`, relabeled (n x m).
    pub a: Matrix,
    /// `E(G_tau)` (n x (n-1)).
    pub e_tau: Matrix,
    /// `[I T_tau]` ((n-1) x m).
    pub r: Matrix,
    pub t_tau: Matrix,
    /// `[I T~_tau]`; present only with a single globally reachable node.
    pub r_tilde: Option<Matrix>,
    pub t_tilde: Option<Matrix>,
    /// Orthonormal basis of `null(R)` (m x (m-n+1)).
    pub n_tau: Matrix,
    /// Signed path of each complement edge, in `c_edges` order.
    pub signed_paths: Vec<Vec<i8>>,
}

impl Factorization {
    pub fn n(&self) -> usize {
        self.e.rows()
    }

    pub fn m(&self) -> usize {
        self.e.cols()
    }

    /// `E(G_tau)^T A(G) diag(weights) R^T` for relabeled `weights`.
    pub fn reduced_matrix_with(&self, weights: &[f64]) -> Matrix {
        assert_eq!(weights.len(), self.m());
        let mut awrt = self.r.transpose();
        for (i, &w) in weights.iter().enumerate() {
            for j in 0..awrt.cols() {
                awrt[(i, j)] *= w;
            }
        }
        &(&self.e_tau.transpose() * &self.a) * &awrt
    }

    /// Reduced in-branching edge dynamics matrix at the nominal weights.
    pub fn reduced_matrix(&self) -> Matrix {
        self.reduced_matrix_with(&self.weights)
    }

    /// Nominal weights with `delta` added at relabeled position `pos`.
    pub fn perturbed_weights(&self, pos: usize, delta: f64) -> Vec<f64> {
        let mut w = self.weights.clone();
        w[pos] += delta;
        w
    }

    /// Graph Laplacian `A W E^T` in relabeled coordinates.
    pub fn graph_laplacian(&self) -> Matrix {
        &(&self.a * &Matrix::diag(&self.weights)) * &self.e.transpose()
    }

    /// Edge Laplacian `E^T A W` in relabeled coordinates.
    pub fn edge_laplacian(&self) -> Matrix {
        &(&self.e.transpose() * &self.a) * &Matrix::diag(&self.weights)
    }

    /// `max |E - E_tau R|`.
    pub fn incidence_residual(&self) -> f64 {
        self.e.sub(&(&self.e_tau * &self.r)).unwrap().max_abs()
    }

    /// `max |A - A_tau R~|`, when `R~` exists.
    pub fn out_incidence_residual(&self) -> Option<f64> {
        let rt = self.r_tilde.as_ref()?;
        let a_tau = self.a.block(0, 0, self.n(), self.n() - 1);
        Some(self.a.sub(&(&a_tau * rt)).unwrap().max_abs())
    }
}

/// Signed path of a complement edge through the unoriented in-branching, from
/// its tail to its head: +1 where an in-branching edge is travelled along its
/// direction, -1 against it, indexed by in-branching position.
pub fn signed_path(g: &Digraph, dec: &BranchingDecomposition, c_edge: usize) -> Result<Vec<i8>> {
    if dec.is_tau(c_edge) {
        return Err(Error::InvalidArgument(format!(
            "edge {c_edge} belongs to the in-branching"
        )));
    }
    let edge = g.edge(c_edge)?;
    let n = g.n();
    let mut path = vec![0i8; n - 1];

    let climb = |start: usize| -> Vec<usize> {
        let mut nodes = vec![start];
        let mut v = start;
        while let Some(id) = dec.tau_of_node[v] {
            v = g.edges()[id].head;
            nodes.push(v);
        }
        nodes
    };
    let up_tail = climb(edge.tail);
    let up_head = climb(edge.head);
    let lca = *up_tail
        .iter()
        .find(|v| up_head.contains(v))
        .expect("both climbs end at the root");

    for &v in up_tail.iter().take_while(|&&v| v != lca) {
        path[dec.node_label[v]] = 1;
    }
    for &v in up_head.iter().take_while(|&&v| v != lca) {
        path[dec.node_label[v]] = -1;
    }
    Ok(path)
}

pub fn factorize(g: &Digraph, dec: &BranchingDecomposition) -> Result<Factorization> {
    let n = g.n();
    let m = g.m();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "factorization needs at least two nodes".into(),
        ));
    }
    let edge_order = dec.edge_order();
    let inc = build_incidence(g);
    let e = inc.e.select_rows(&dec.node_order).select_columns(&edge_order);
    let a = inc.a.select_rows(&dec.node_order).select_columns(&edge_order);
    let weights: Vec<f64> = edge_order.iter().map(|&id| g.edges()[id].weight).collect();
    let k = n - 1;
    let e_tau = e.block(0, 0, n, k);
    let e_c = e.block(0, k, n, m - k);

    let signed_paths = dec
        .c_edges
        .iter()
        .map(|&c| signed_path(g, dec, c))
        .collect::<Result<Vec<_>>>()?;

    // Least-squares factor, kept as a cross-check on the combinatorial paths.
    let e_tau_t = e_tau.transpose();
    let t_ls = solve_linear(&(&e_tau_t * &e_tau), &(&e_tau_t * &e_c))
        .map_err(|_| Error::IllConditioned)?;
    let mut t_tau = Matrix::zeros(k, m - k);
    for (j, path) in signed_paths.iter().enumerate() {
        for (i, &s) in path.iter().enumerate() {
            if (t_ls[(i, j)] - f64::from(s)).abs() > PATH_MATCH_TOL {
                return Err(Error::PathMismatch {
                    edge: dec.c_edges[j],
                });
            }
            t_tau[(i, j)] = f64::from(s);
        }
    }
    let r = Matrix::identity(k).hstack(&t_tau)?;

    let single_root = reachability(g).globally_reachable.len() == 1;
    let (r_tilde, t_tilde) = if single_root {
        let a_tau = a.block(0, 0, n, k);
        let a_c = a.block(0, k, n, m - k);
        let a_tau_t = a_tau.transpose();
        let tt = solve_linear(&(&a_tau_t * &a_tau), &(&a_tau_t * &a_c))
            .map_err(|_| Error::IllConditioned)?;
        (Some(Matrix::identity(k).hstack(&tt)?), Some(tt))
    } else {
        (None, None)
    };

    // Cycle-space vectors [-T^T ; I] span null(R) exactly.
    let cycle_basis = t_tau.scale(-1.0).vstack(&Matrix::identity(m - k))?;
    let n_tau = if m > k {
        orthonormalize_columns(&cycle_basis)
    } else {
        Matrix::zeros(m, 0)
    };

    Ok(Factorization {
        edge_order,
        node_order: dec.node_order.clone(),
        weights,
        e,
        a,
        e_tau,
        r,
        t_tau,
        r_tilde,
        t_tilde,
        n_tau,
        signed_paths,
    })
}

/// Reduced in-branching edge dynamics matrix `E_tau^T A W R^T` at nominal weights.
pub fn reduced_matrix(fac: &Factorization) -> Matrix {
    fac.reduced_matrix()
}

/// Residuals of the graph-Laplacian block-triangular similarity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSimilarity {
    /// `max |upper-right block|` of `S^-1 L_g S`.
    pub upper_right: f64,
    /// `max |S^-1 S - I|`.
    pub inverse_residual: f64,
    /// `max |top-left block - reduced matrix|`.
    pub reduced_block: f64,
    /// Top-left block against `E_tau^T A_tau R~ W R^T` (single root only).
    pub single_root_form: Option<f64>,
    /// Cycle graphs: residuals of the block-diagonal similarity.
    pub cycle: Option<CycleSimilarity>,
}

/// Residuals of the block-diagonal similarities available on a simple cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleSimilarity {
    /// Largest off-diagonal block entry.
    pub off_diagonal: f64,
    pub inverse_residual: f64,
    /// Top-left block against `E_tau^T W R^T`.
    pub reduced_block: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeSimilarity {
    /// `max |lower block rows|` of `V^-1 L_e V`.
    pub lower_block: f64,
    pub inverse_residual: f64,
    pub reduced_block: f64,
    /// Upper-right block against `E_tau^T A W N_tau`.
    pub coupling_block: f64,
    pub single_root_form: Option<f64>,
    pub cycle: Option<CycleSimilarity>,
    /// Cycle graphs: `max |S^-1 L_e S - L_g|` for `S = S_2 S_1^-1`.
    pub edge_to_graph: Option<f64>,
}

fn single_root_reduced(fac: &Factorization) -> Option<Matrix> {
    let rt = fac.r_tilde.as_ref()?;
    let n = fac.n();
    let a_tau = fac.a.block(0, 0, n, n - 1);
    let left = &(&fac.e_tau.transpose() * &a_tau) * rt;
    Some(&(&left * &Matrix::diag(&fac.weights)) * &fac.r.transpose())
}

fn is_cycle(g: &Digraph) -> bool {
    reachability(g).is_simple_cycle
}

/// `S_1` and `S_1^-1` of the cycle graph-Laplacian similarity.
fn cycle_s1(fac: &Factorization) -> Result<(Matrix, Matrix)> {
    let n = fac.n();
    let w = Matrix::diag(&fac.weights);
    let w_inv = Matrix::diag(&fac.weights.iter().map(|w| 1.0 / w).collect::<Vec<_>>());
    let conductance: f64 = fac.weights.iter().map(|w| 1.0 / w).sum();
    let we = &w * &fac.e_tau;
    let gram = &fac.e_tau.transpose() * &we;
    let left = &we * &inverse(&gram)?;
    let s1 = left.hstack(&Matrix::column_vector(&vec![1.0 / conductance; n]))?;
    let ones_row = Matrix::from_rows(&[vec![1.0; n]]);
    let s1_inv = fac.e_tau.transpose().vstack(&(&ones_row * &w_inv))?;
    Ok((s1, s1_inv))
}

/// `S_2` and `S_2^-1` of the cycle edge-Laplacian similarity.
fn cycle_s2(fac: &Factorization) -> Result<(Matrix, Matrix)> {
    let n = fac.n();
    let w = Matrix::diag(&fac.weights);
    let conductance: f64 = fac.weights.iter().map(|w| 1.0 / w).sum();
    let w_inv_ones: Vec<f64> = fac.weights.iter().map(|w| 1.0 / w).collect();
    let s2 = fac.r.transpose().hstack(&Matrix::column_vector(&w_inv_ones))?;
    let rw = &fac.r * &w;
    let top = &inverse(&(&rw * &fac.r.transpose()))? * &rw;
    let s2_inv = top.vstack(&Matrix::from_rows(&[vec![1.0 / conductance; n]]))?;
    Ok((s2, s2_inv))
}

fn block_diagonal_residuals(t: &Matrix, k: usize, reduced: &Matrix) -> (f64, f64) {
    let n = t.rows();
    let off = t
        .block(0, k, k, n - k)
        .max_abs()
        .max(t.block(k, 0, n - k, k).max_abs());
    let red = t.block(0, 0, k, k).sub(reduced).unwrap().max_abs();
    (off, red)
}

fn cycle_reduced(fac: &Factorization) -> Matrix {
    &(&fac.e_tau.transpose() * &Matrix::diag(&fac.weights)) * &fac.r.transpose()
}

pub fn similarity_check_graph(
    g: &Digraph,
    _dec: &BranchingDecomposition,
    fac: &Factorization,
) -> Result<GraphSimilarity> {
    let n = fac.n();
    let k = n - 1;
    let lg = fac.graph_laplacian();
    let ones = Matrix::column_vector(&vec![1.0; n]);
    let s_inv = fac.e_tau.hstack(&ones)?.transpose();
    let gram = &fac.e_tau.transpose() * &fac.e_tau;
    let s = (&fac.e_tau * &inverse(&gram)?).hstack(&ones.scale(1.0 / n as f64))?;

    let t = &(&s_inv * &lg) * &s;
    let reduced = fac.reduced_matrix();
    let cycle = if is_cycle(g) {
        let (s1, s1_inv) = cycle_s1(fac)?;
        let t1 = &(&s1_inv * &lg) * &s1;
        let (off, red) = block_diagonal_residuals(&t1, k, &cycle_reduced(fac));
        Some(CycleSimilarity {
            off_diagonal: off,
            inverse_residual: (&s1_inv * &s1).sub(&Matrix::identity(n))?.max_abs(),
            reduced_block: red,
        })
    } else {
        None
    };
    Ok(GraphSimilarity {
        upper_right: t.block(0, k, k, 1).max_abs(),
        inverse_residual: (&s_inv * &s).sub(&Matrix::identity(n))?.max_abs(),
        reduced_block: t.block(0, 0, k, k).sub(&reduced)?.max_abs(),
        single_root_form: single_root_reduced(fac).map(|f| f.sub(&reduced).unwrap().max_abs()),
        cycle,
    })
}

pub fn similarity_check_edge(
    g: &Digraph,
    _dec: &BranchingDecomposition,
    fac: &Factorization,
) -> Result<EdgeSimilarity> {
    let n = fac.n();
    let m = fac.m();
    let k = n - 1;
    let le = fac.edge_laplacian();
    let v = fac.r.transpose().hstack(&fac.n_tau)?;
    let rrt = &fac.r * &fac.r.transpose();
    let v_inv = (&inverse(&rrt)? * &fac.r).vstack(&fac.n_tau.transpose())?;
    let t = &(&v_inv * &le) * &v;
    let reduced = fac.reduced_matrix();
    let coupling = &(&(&fac.e_tau.transpose() * &fac.a) * &Matrix::diag(&fac.weights)) * &fac.n_tau;

    let (cycle, edge_to_graph) = if is_cycle(g) {
        let (s2, s2_inv) = cycle_s2(fac)?;
        let t2 = &(&s2_inv * &le) * &s2;
        let (off, red) = block_diagonal_residuals(&t2, k, &cycle_reduced(fac));
        let (s1, s1_inv) = cycle_s1(fac)?;
        let s = &s2 * &s1_inv;
        let s_inv = &s1 * &s2_inv;
        let back = &(&s_inv * &le) * &s;
        (
            Some(CycleSimilarity {
                off_diagonal: off,
                inverse_residual: (&s2_inv * &s2).sub(&Matrix::identity(m))?.max_abs(),
                reduced_block: red,
            }),
            Some(back.sub(&fac.graph_laplacian())?.max_abs()),
        )
    } else {
        (None, None)
    };

    Ok(EdgeSimilarity {
        lower_block: if m > k { t.block(k, 0, m - k, m).max_abs() } else { 0.0 },
        inverse_residual: (&v_inv * &v).sub(&Matrix::identity(m))?.max_abs(),
        reduced_block: t.block(0, 0, k, k).sub(&reduced)?.max_abs(),
        coupling_block: if m > k {
            t.block(0, k, k, m - k).sub(&coupling)?.max_abs()
        } else {
            0.0
        },
        single_root_form: single_root_reduced(fac).map(|f| f.sub(&reduced).unwrap().max_abs()),
        cycle,
        edge_to_graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::find_in_branching;
    use crate::numerics::{eigenvalues, spectra_distance};

    fn setup(g: &Digraph, root: Option<usize>) -> (BranchingDecomposition, Factorization) {
        let dec = find_in_branching(g, root).unwrap();
        let fac = factorize(g, &dec).unwrap();
        (dec, fac)
    }

    #[test]
    fn path_has_trivial_factors() {
        let g = Digraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let (_, fac) = setup(&g, None);
        assert_eq!(fac.r, Matrix::identity(2));
        assert_eq!(fac.t_tau.cols(), 0);
        assert_eq!(fac.n_tau.cols(), 0);
        assert!(fac.r_tilde.is_some());
    }

    #[test]
    fn three_cycle_signed_path() {
        let g = Digraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        let (dec, fac) = setup(&g, Some(2));
        assert_eq!(dec.tau_edges, vec![0, 1]);
        assert_eq!(dec.c_edges, vec![2]);
        assert_eq!(fac.signed_paths, vec![vec![-1, -1]]);
        assert_eq!(fac.t_tau.column(0), vec![-1.0, -1.0]);
        assert!(fac.r_tilde.is_none());
        assert!(fac.incidence_residual() < 1e-12);
    }

    #[test]
    fn duplicate_route_path_is_the_sibling() {
        // 0 -> 2 directly and via 1; the complement edge 0 -> 1 ... -> 2.
        let g = Digraph::new(3, [(0, 2, 1.0), (0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let (dec, fac) = setup(&g, None);
        assert_eq!(dec.c_edges, vec![1]);
        // Tail 0 to head 1: forward along 0->2, backward along 1->2.
        assert_eq!(fac.signed_paths[0], vec![1, -1]);
    }

    #[test]
    fn figure_style_encoding() {
        // Nodes 1..8 (zero-based 0..7), root 8. The complement edge 2 -> 5
        // runs forward over 2->3, 3->8 then backward over 6->8, 5->6.
        let edges = [
            (0, 1, 1.0),
            (1, 2, 1.0),
            (2, 7, 1.0),
            (3, 2, 1.0),
            (4, 5, 1.0),
            (5, 7, 1.0),
            (6, 5, 1.0),
            (1, 4, 1.0),
        ];
        let g = Digraph::new(8, edges).unwrap();
        let (dec, fac) = setup(&g, None);
        assert_eq!(dec.root, 7);
        assert_eq!(dec.c_edges, vec![7]);
        assert_eq!(dec.sibling_in_tau[7], Some(1));
        let nonzero: Vec<usize> = fac.signed_paths[0]
            .iter()
            .enumerate()
            .filter(|(_, &s)| s != 0)
            .map(|(i, _)| i + 1)
            .collect();
        assert_eq!(nonzero, vec![2, 3, 5, 6]);
        assert_eq!(fac.signed_paths[0], vec![0, 1, 1, 0, -1, -1, 0]);
        // The sibling's column replicates in R~.
        let rt = fac.r_tilde.as_ref().unwrap();
        assert_eq!(rt.column(7), rt.column(1));
    }

    #[test]
    fn reduced_matrix_of_single_edge() {
        let g = Digraph::new(2, [(0, 1, 2.5)]).unwrap();
        let (_, fac) = setup(&g, None);
        assert_eq!(fac.reduced_matrix(), Matrix::from_rows(&[[2.5]]));
    }

    #[test]
    fn cycle_reduced_matrix_drops_a() {
        let g = Digraph::new(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (3, 0, 3.0)]).unwrap();
        let (_, fac) = setup(&g, None);
        assert_eq!(fac.a, Matrix::identity(4));
        let direct = cycle_reduced(&fac);
        assert!(fac.reduced_matrix().sub(&direct).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn reduced_spectrum_is_nonzero_laplacian_spectrum() {
        let g = Digraph::new(
            4,
            [(0, 1, 1.0), (1, 2, 2.0), (2, 0, 0.7), (2, 3, 1.3), (0, 3, 0.4)],
        )
        .unwrap();
        let (_, fac) = setup(&g, None);
        let mut lg = eigenvalues(&fac.graph_laplacian()).unwrap();
        let zero = lg
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        lg.remove(zero);
        let red = eigenvalues(&fac.reduced_matrix()).unwrap();
        assert!(spectra_distance(&lg, &red) < 1e-8);
        assert!(red.iter().all(|z| z.re > 0.0));
    }

    #[test]
    fn similarity_residuals_on_path_and_cycle() {
        let path = Digraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let (dec, fac) = setup(&path, None);
        let gs = similarity_check_graph(&path, &dec, &fac).unwrap();
        assert!(gs.upper_right < 1e-12 && gs.inverse_residual < 1e-12);
        let es = similarity_check_edge(&path, &dec, &fac).unwrap();
        assert_eq!(es.lower_block, 0.0);

        let cyc = Digraph::new(5, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 0.5), (3, 4, 1.5), (4, 0, 3.0)])
            .unwrap();
        let (dec, fac) = setup(&cyc, None);
        let gs = similarity_check_graph(&cyc, &dec, &fac).unwrap();
        let c = gs.cycle.unwrap();
        assert!(c.off_diagonal < 1e-9 && c.inverse_residual < 1e-9 && c.reduced_block < 1e-9);
        let es = similarity_check_edge(&cyc, &dec, &fac).unwrap();
        let c = es.cycle.unwrap();
        assert!(c.off_diagonal < 1e-9 && c.inverse_residual < 1e-9 && c.reduced_block < 1e-9);
        assert!(es.edge_to_graph.unwrap() < 1e-9);
    }
}
