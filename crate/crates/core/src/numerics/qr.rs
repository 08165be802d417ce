use super::Matrix;

/// Default relative threshold for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

struct PivotedQr {
    /// Full orthogonal factor, `rows x rows`.
    q: Matrix,
    /// Diagonal of the triangular factor, in pivot order.
    r_diag: Vec<f64>,
}

/// Householder QR, optionally with column pivoting by remaining column norm.
fn householder_qr(a: &Matrix, pivot: bool) -> PivotedQr {
    let (p, n) = (a.rows(), a.cols());
    let mut w = a.clone();
    let mut q = Matrix::identity(p);
    let steps = p.min(n);
    let mut r_diag = Vec::with_capacity(steps);

    for k in 0..steps {
        if pivot {
            let norm_below = |w: &Matrix, j: usize| (k..p).map(|i| w[(i, j)] * w[(i, j)]).sum::<f64>();
            let best = (k..n)
                .map(|j| (j, norm_below(&w, j)))
                .fold((k, -1.0), |b, c| if c.1 > b.1 { c } else { b })
                .0;
            if best != k {
                for i in 0..p {
                    let t = w[(i, k)];
                    w[(i, k)] = w[(i, best)];
                    w[(i, best)] = t;
                }
            }
        }

        let norm = (k..p).map(|i| w[(i, k)] * w[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            r_diag.push(0.0);
            continue;
        }
        let alpha = if w[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..p).map(|i| w[(i, k)]).collect();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            r_diag.push(w[(k, k)]);
            continue;
        }

        for j in k..n {
            let dot: f64 = v.iter().enumerate().map(|(t, vi)| vi * w[(k + t, j)]).sum();
            let f = 2.0 * dot / vtv;
            for (t, vi) in v.iter().enumerate() {
                w[(k + t, j)] -= f * vi;
            }
        }
        for i in 0..p {
            let dot: f64 = v.iter().enumerate().map(|(t, vi)| vi * q[(i, k + t)]).sum();
            let f = 2.0 * dot / vtv;
            for (t, vi) in v.iter().enumerate() {
                q[(i, k + t)] -= f * vi;
            }
        }
        r_diag.push(w[(k, k)]);
    }
    PivotedQr { q, r_diag }
}

fn rank_from_diag(r_diag: &[f64], tol: f64) -> usize {
    let lead = r_diag.first().map_or(0.0, |v| v.abs());
    if lead == 0.0 {
        return 0;
    }
    r_diag.iter().filter(|v| v.abs() > tol * lead).count()
}

/// Numerical rank: count of pivoted-QR diagonal entries above `tol` times the
/// largest one.
pub fn rank(a: &Matrix, tol: f64) -> usize {
    assert!(tol > 0.0, "rank tolerance must be positive");
    if a.rows() == 0 || a.cols() == 0 {
        return 0;
    }
    let qr = householder_qr(&a.transpose(), true);
    rank_from_diag(&qr.r_diag, tol)
}

/// Orthonormal basis (as columns) of the null space of `a`, at the same
/// relative threshold used by [`rank`].
pub fn null_space_orthonormal(a: &Matrix, tol: f64) -> Matrix {
    assert!(tol > 0.0, "null-space tolerance must be positive");
    let n = a.cols();
    if a.rows() == 0 || n == 0 {
        return Matrix::identity(n);
    }
    let qr = householder_qr(&a.transpose(), true);
    let r = rank_from_diag(&qr.r_diag, tol);
    let idx: Vec<usize> = (r..n).collect();
    qr.q.select_columns(&idx)
}

/// Orthonormal columns spanning the column space of a full-column-rank `a`.
pub fn orthonormalize_columns(a: &Matrix) -> Matrix {
    let k = a.cols();
    let qr = householder_qr(a, false);
    let idx: Vec<usize> = (0..k).collect();
    qr.q.select_columns(&idx)
}
