//! Independent stability oracle used by the test suites.
//!
//! Works from raw `(tail, head, weight)` triples with nalgebra's eigen-solver,
//! sharing no code with the library under test. The Laplacian `L` is built
//! directly, projected onto the complement of the all-ones vector, and the
//! system is stable when every projected eigenvalue has positive real part.

use nalgebra::{Complex, DMatrix};

pub type RawEdge = (usize, usize, f64);

/// Grid resolution of the downward scan in [`critical_delta`].
pub const SCAN_STEPS: usize = 4000;

pub fn laplacian(n: usize, edges: &[RawEdge]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for &(t, h, w) in edges {
        l[(t, t)] += w;
        l[(t, h)] -= w;
    }
    l
}

/// Orthonormal basis of the complement of the all-ones vector (n x (n-1)).
fn ones_complement(n: usize) -> DMatrix<f64> {
    let mut seed = DMatrix::identity(n, n);
    seed.column_mut(0).fill(1.0);
    let q = seed.qr().q();
    q.columns(1, n - 1).into_owned()
}

/// Eigenvalues of `Q^T L Q`, i.e. the spectrum of `L` minus the zero
/// eigenvalue belonging to the all-ones vector.
pub fn projected_spectrum(n: usize, edges: &[RawEdge]) -> Vec<Complex<f64>> {
    let q = ones_complement(n);
    let p = q.transpose() * laplacian(n, edges) * &q;
    p.complex_eigenvalues().iter().copied().collect()
}

pub fn is_stable(n: usize, edges: &[RawEdge]) -> bool {
    projected_spectrum(n, edges).iter().all(|z| z.re > 0.0)
}

fn perturbed(edges: &[RawEdge], edge: usize, delta: f64) -> Vec<RawEdge> {
    let mut out = edges.to_vec();
    out[edge].2 += delta;
    out
}

pub fn stable_with(n: usize, edges: &[RawEdge], edge: usize, delta: f64) -> bool {
    is_stable(n, &perturbed(edges, edge, delta))
}

/// Largest negative perturbation of `edge` at which stability is first lost,
/// scanning down from zero and bisecting the first unstable cell. Below
/// `-sum(w)` the trace is negative, so a crossing always exists there.
pub fn critical_delta(n: usize, edges: &[RawEdge], edge: usize) -> f64 {
    assert!(stable_with(n, edges, edge, 0.0), "nominal system must be stable");
    let floor = -edges.iter().map(|e| e.2).sum::<f64>() * (1.0 + 1e-9) - 1e-12;
    let step = floor / SCAN_STEPS as f64;
    let mut hi = 0.0;
    let mut lo = floor;
    for k in 1..=SCAN_STEPS {
        let d = step * k as f64;
        if !stable_with(n, edges, edge, d) {
            lo = d;
            break;
        }
        hi = d;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if stable_with(n, edges, edge, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvalues of a dense row-major matrix, for cross-checking solvers.
pub fn eigenvalues_row_major(n: usize, data: &[f64]) -> Vec<Complex<f64>> {
    DMatrix::from_row_slice(n, n, data).complex_eigenvalues().iter().copied().collect()
}

/// Inverse of a dense row-major matrix.
pub fn inverse_row_major(n: usize, data: &[f64]) -> Option<Vec<f64>> {
    let inv = DMatrix::from_row_slice(n, n, data).try_inverse()?;
    Some(inv.transpose().as_slice().to_vec())
}

/// Left null vector of `L` scaled to sum one; the consensus value of
/// `x' = -L x` is its inner product with `x0`.
pub fn consensus_weights(n: usize, edges: &[RawEdge]) -> Vec<f64> {
    let lt = laplacian(n, edges).transpose();
    let svd = lt.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |b, (i, &s)| if s < b.1 { (i, s) } else { b });
    let row: Vec<f64> = v_t.row(idx).iter().copied().collect();
    let sum: f64 = row.iter().sum();
    row.iter().map(|v| v / sum).collect()
}
