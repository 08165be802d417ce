//! Eigenvalues of small dense real matrices: balancing, Householder reduction
//! to upper Hessenberg form, then Francis double-shift QR.

#![allow(clippy::needless_range_loop)]

use super::{ComplexValue, Matrix};
use crate::{Error, Result};

/// Sweep budget per unit of dimension.
pub const SWEEPS_PER_DIM: usize = 100;

const RADIX: f64 = 2.0;

/// All eigenvalues of a square real matrix, with multiplicity, sorted by real
/// then imaginary part.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<ComplexValue>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigenvalues of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    a.check_finite()?;
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    // 1-based working copy keeps the QR sweep indices readable.
    let mut h = vec![vec![0.0; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            h[i + 1][j + 1] = a[(i, j)];
        }
    }
    balance(&mut h, n);
    hessenberg(&mut h, n);
    let mut vals = hqr(&mut h, n)?;
    vals.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    Ok(vals)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().fold(0.0, |m, z| m.max(z.norm())))
}

fn balance(a: &mut [Vec<f64>], n: usize) {
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        a[i][j] *= g;
                    }
                    for j in 1..=n {
                        a[j][i] *= f;
                    }
                }
            }
        }
    }
}

fn hessenberg(a: &mut [Vec<f64>], n: usize) {
    for k in 1..n.saturating_sub(1) {
        // Annihilate a[k+2..=n][k].
        let norm = (k + 1..=n).map(|i| a[i][k] * a[i][k]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[k + 1][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k + 1..=n).map(|i| a[i][k]).collect();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|x| x * x).sum();
        if vtv == 0.0 {
            continue;
        }
        for j in 1..=n {
            let dot: f64 = v.iter().enumerate().map(|(t, vi)| vi * a[k + 1 + t][j]).sum();
            let f = 2.0 * dot / vtv;
            for (t, vi) in v.iter().enumerate() {
                a[k + 1 + t][j] -= f * vi;
            }
        }
        for row in a.iter_mut().skip(1).take(n) {
            let dot: f64 = v.iter().enumerate().map(|(t, vi)| vi * row[k + 1 + t]).sum();
            let f = 2.0 * dot / vtv;
            for (t, vi) in v.iter().enumerate() {
                row[k + 1 + t] -= f * vi;
            }
        }
        for i in k + 2..=n {
            a[i][k] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

#[allow(clippy::many_single_char_names)]
fn hqr(a: &mut [Vec<f64>], n: usize) -> Result<Vec<ComplexValue>> {
    let budget = SWEEPS_PER_DIM * n;
    let mut total_its = 0usize;
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }

    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r): (f64, f64, f64);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = a[l - 1][l - 1].abs() + a[l][l].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[l][l - 1].abs() + s == s {
                    a[l][l - 1] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[nn][nn];
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
            } else {
                let mut y = a[nn - 1][nn - 1];
                let mut w = a[nn][nn - 1] * a[nn - 1][nn];
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    if q < 0.0 && -q <= 4.0 * f64::EPSILON * (p * p + w.abs()) {
                        q = 0.0;
                    }
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != 0.0 {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn -= 2;
                } else {
                    if total_its >= budget {
                        return Err(Error::NoConvergence { budget });
                    }
                    if its > 0 && its % 10 == 0 {
                        // Exceptional shift.
                        t += x;
                        for i in 1..=nn {
                            a[i][i] -= x;
                        }
                        let s = a[nn][nn - 1].abs() + a[nn - 1][nn - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    total_its += 1;

                    let mut m = nn - 2;
                    loop {
                        let z = a[m][m];
                        let r0 = x - z;
                        let s0 = y - z;
                        p = (r0 * s0 - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - r0 - s0;
                        r = a[m + 2][m + 1];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nn {
                        a[i][i - 2] = 0.0;
                        if i != m + 2 {
                            a[i][i - 3] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = 0.0;
                            if k != nn - 1 {
                                r = a[k + 2][k - 1];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = a[k][j] + q * a[k + 1][j];
                                if k != nn - 1 {
                                    p += r * a[k + 2][j];
                                    a[k + 2][j] -= p * z;
                                }
                                a[k + 1][j] -= p * y;
                                a[k][j] -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for row in a.iter_mut().take(mmin + 1).skip(l) {
                                p = x * row[k] + y * row[k + 1];
                                if k != nn - 1 {
                                    p += z * row[k + 2];
                                    row[k + 2] -= p * r;
                                }
                                row[k + 1] -= p * q;
                                row[k] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 2 || l + 1 >= nn {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| ComplexValue::new(wr[i], wi[i])).collect())
}

/// Distance between two eigenvalue multisets: greedy nearest matching, the
/// largest matched distance. Infinite when the sizes differ.
pub fn spectra_distance(a: &[ComplexValue], b: &[ComplexValue]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .map(|(j, d)| (j, if d.is_nan() { f64::INFINITY } else { d }))
            .fold(None, |best: Option<(usize, f64)>, c| match best {
                Some(b) if b.1 <= c.1 => Some(b),
                _ => Some(c),
            })
            .expect("b has an unused entry for every entry of a");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(vals: &[ComplexValue], expected: &[(f64, f64)], tol: f64) -> bool {
        vals.len() == expected.len()
            && vals
                .iter()
                .zip(expected)
                .all(|(v, &(re, im))| (v.re - re).abs() < tol && (v.im - im).abs() < tol)
    }

    #[test]
    fn diagonal() {
        let v = eigenvalues(&Matrix::diag(&[3.0, 1.0, 2.0])).unwrap();
        assert!(close(&v, &[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)], 1e-14));
    }

    #[test]
    fn rotation_generator() {
        let v = eigenvalues(&Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]])).unwrap();
        assert!(close(&v, &[(0.0, -1.0), (0.0, 1.0)], 1e-14));
    }

    #[test]
    fn rank_one_symmetric() {
        let v = eigenvalues(&Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]])).unwrap();
        assert!(close(&v, &[(0.0, 0.0), (2.0, 0.0)], 1e-14));
    }

    #[test]
    fn companion_matrix_roots() {
        // x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
        let c = Matrix::from_rows(&[[6.0, -11.0, 6.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let v = eigenvalues(&c).unwrap();
        assert!(close(&v, &[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)], 1e-10));
    }

    #[test]
    fn one_by_one_and_empty() {
        let v = eigenvalues(&Matrix::from_rows(&[[-4.5]])).unwrap();
        assert!(close(&v, &[(-4.5, 0.0)], 1e-15));
        assert!(eigenvalues(&Matrix::zeros(0, 0)).unwrap().is_empty());
        assert!(eigenvalues(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn nilpotent_jordan_block() {
        let v = eigenvalues(&Matrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]))
            .unwrap();
        assert!(v.iter().all(|z| z.norm() < 1e-12));
    }
}
