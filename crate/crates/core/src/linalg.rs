//! Small dense linear-algebra helpers.
//!
//! Problem sizes here are tiny (m, n ≤ a handful), so hand-rolled kernels
//! beat pulling in a matrix library: everything is deterministic, allocation
//! light and easy to audit.

/// Euclidean inner product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Max-abs (infinity) norm.
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Euclidean distance between points.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `y += s * x`.
pub fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

/// Rank of a set of row vectors by Gaussian elimination with full pivoting,
/// relative threshold `tol` against the largest row norm.
pub fn rank(rows: &[Vec<f64>], tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let scale = a
        .iter()
        .map(|r| norm(r))
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let thresh = tol * scale;
    let mut rank = 0;
    let mut col_used = vec![false; ncols];
    for _ in 0..a.len().min(ncols) {
        // largest remaining pivot
        let mut best = (0usize, 0usize, 0.0_f64);
        for (i, row) in a.iter().enumerate().skip(rank) {
            for (j, &v) in row.iter().enumerate() {
                if !col_used[j] && v.abs() > best.2 {
                    best = (i, j, v.abs());
                }
            }
        }
        if best.2 <= thresh {
            break;
        }
        let (pi, pj, _) = best;
        a.swap(rank, pi);
        col_used[pj] = true;
        let pivot = a[rank][pj];
        let prow = a[rank].clone();
        for row in a.iter_mut().skip(rank + 1) {
            let f = row[pj] / pivot;
            if f != 0.0 {
                for (rv, pv) in row.iter_mut().zip(&prow) {
                    *rv -= f * pv;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Solve the symmetric positive semi-definite system `G x = b` (`G` given
/// row-major, size k×k) through an eigenvalue pseudo-inverse. Eigenvalues
/// below `tol * max_eig` are treated as zero, which makes the solve behave
/// like a minimum-norm least-squares solve on rank-deficient input.
pub fn solve_psd(g: &[f64], b: &[f64], tol: f64) -> Vec<f64> {
    let k = b.len();
    debug_assert_eq!(g.len(), k * k);
    let (eigvals, eigvecs) = sym_eig(g, k);
    let emax = eigvals.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let cut = tol * emax;
    let mut x = vec![0.0; k];
    for (idx, &lam) in eigvals.iter().enumerate() {
        if lam.abs() <= cut || lam <= 0.0 {
            continue;
        }
        let v = &eigvecs[idx * k..(idx + 1) * k];
        let c = dot(v, b) / lam;
        axpy(&mut x, c, v);
    }
    x
}

/// Eigen-decomposition of a symmetric k×k matrix (row-major) by cyclic
/// Jacobi rotations. Returns (eigenvalues, eigenvectors) with eigenvector
/// `i` stored in `vecs[i*k..(i+1)*k]`.
pub fn sym_eig(m: &[f64], k: usize) -> (Vec<f64>, Vec<f64>) {
    debug_assert_eq!(m.len(), k * k);
    let mut a = m.to_vec();
    // v starts as identity; rows of v accumulate the eigenvectors.
    let mut v = vec![0.0; k * k];
    for i in 0..k {
        v[i * k + i] = 1.0;
    }
    for _sweep in 0..64 {
        let mut off = 0.0;
        for p in 0..k {
            for q in (p + 1)..k {
                off += a[p * k + q] * a[p * k + q];
            }
        }
        if off.sqrt() < 1e-300_f64.max(1e-15 * frob(&a)) {
            break;
        }
        for p in 0..k {
            for q in (p + 1)..k {
                let apq = a[p * k + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = a[p * k + p];
                let aqq = a[q * k + q];
                let theta = 0.5 * (aqq - app) / apq;
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for i in 0..k {
                    let aip = a[i * k + p];
                    let aiq = a[i * k + q];
                    a[i * k + p] = c * aip - s * aiq;
                    a[i * k + q] = s * aip + c * aiq;
                }
                for j in 0..k {
                    let apj = a[p * k + j];
                    let aqj = a[q * k + j];
                    a[p * k + j] = c * apj - s * aqj;
                    a[q * k + j] = s * apj + c * aqj;
                }
                for j in 0..k {
                    let vpj = v[p * k + j];
                    let vqj = v[q * k + j];
                    v[p * k + j] = c * vpj - s * vqj;
                    v[q * k + j] = s * vpj + c * vqj;
                }
            }
        }
    }
    let vals = (0..k).map(|i| a[i * k + i]).collect();
    (vals, v)
}

fn frob(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Spectral (operator 2-)norm of an r×c matrix given row-major, as the
/// square root of the largest eigenvalue of `AᵀA`.
pub fn spectral_norm(a: &[f64], rows: usize, cols: usize) -> f64 {
    debug_assert_eq!(a.len(), rows * cols);
    let mut g = vec![0.0; cols * cols];
    for i in 0..cols {
        for j in i..cols {
            let mut s = 0.0;
            for r in 0..rows {
                s += a[r * cols + i] * a[r * cols + j];
            }
            g[i * cols + j] = s;
            g[j * cols + i] = s;
        }
    }
    let (vals, _) = sym_eig(&g, cols);
    vals.iter().fold(0.0_f64, |acc, &v| acc.max(v)).sqrt()
}

/// Frobenius norm of a matrix stored as a flat slice.
pub fn frobenius_norm(a: &[f64]) -> f64 {
    frob(a)
}

/// Minimum-norm least squares: find `w` minimizing `‖B w − v‖₂` where `B`
/// is n×m given in column-major order (`cols[i]` is the i-th column).
/// Returns `(w, residual_vector)`.
pub fn least_squares(cols: &[Vec<f64>], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = cols.len();
    let mut g = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let s = dot(&cols[i], &cols[j]);
            g[i * m + j] = s;
            g[j * m + i] = s;
        }
    }
    let rhs: Vec<f64> = cols.iter().map(|c| dot(c, v)).collect();
    let w = solve_psd(&g, &rhs, 1e-12);
    let mut resid = v.to_vec();
    for (i, c) in cols.iter().enumerate() {
        axpy(&mut resid, -w[i], c);
    }
    (w, resid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_independent_rows() {
        let rows = vec![vec![1.0, 0.0, 0.0], vec![0.0, 2.0, 0.0]];
        assert_eq!(rank(&rows, 1e-10), 2);
    }

    #[test]
    fn rank_detects_dependence() {
        let rows = vec![
            vec![1.0, 2.0, 3.0],
            vec![2.0, 4.0, 6.0],
            vec![0.0, 1.0, 0.0],
        ];
        assert_eq!(rank(&rows, 1e-10), 2);
    }

    #[test]
    fn sym_eig_diagonal() {
        let m = [3.0, 0.0, 0.0, -1.0];
        let (vals, _) = sym_eig(&m, 2);
        let mut v = vals.clone();
        v.sort_by(f64::total_cmp);
        assert!((v[0] + 1.0).abs() < 1e-12);
        assert!((v[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_matches_hand_value() {
        // J = [[0,0,0],[0,0,0],[0,-1/2,0]] has operator norm 1/2.
        let j = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.5, 0.0];
        assert!((spectral_norm(&j, 3, 3) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn least_squares_exact_and_deficient() {
        // Full-rank exact solve.
        let cols = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.5]];
        let v = vec![2.0, 1.0, 0.5];
        let (w, r) = least_squares(&cols, &v);
        assert!((w[0] - 2.0).abs() < 1e-10);
        assert!((w[1] - 1.0).abs() < 1e-10);
        assert!(norm(&r) < 1e-10);

        // Out-of-span component shows up as residual.
        let v2 = vec![0.0, 0.0, 1.0];
        let (w2, r2) = least_squares(&cols, &v2);
        assert!(norm(&w2) < 1.0);
        assert!(norm(&r2) > 0.5);
    }
}
