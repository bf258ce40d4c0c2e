//! Dense kernels used by the analytics: least squares by column-pivoted
//! Householder QR, and the cyclic Jacobi symmetric eigensolver.

use ndarray::{Array1, Array2};

/// Relative threshold below which a pivoted column counts as dependent.
pub const RANK_TOL: f64 = 1e-10;
/// Off-diagonal tolerance for Jacobi, relative to the Frobenius norm.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeastSquaresFit {
    pub rank: usize,
    /// Residual sum of squares.
    pub sse: f64,
}

/// Fits `y ~ x` by least squares and returns the numerical rank of `x` and
/// the residual sum of squares. Coefficients are not formed: the residual is
/// the tail of `Qᵀy` beyond the rank.
pub fn least_squares(x: &Array2<f64>, y: &[f64]) -> LeastSquaresFit {
    let (n, p) = x.dim();
    assert_eq!(n, y.len(), "design rows must match response length");
    let mut a = x.clone();
    let mut b = Array1::from(y.to_vec());

    let col_norm = |a: &Array2<f64>, j: usize, from: usize| -> f64 {
        (from..n).map(|i| a[[i, j]] * a[[i, j]]).sum::<f64>().sqrt()
    };
    let scale = (0..p).map(|j| col_norm(&a, j, 0)).fold(0.0, f64::max);
    if scale == 0.0 {
        return LeastSquaresFit { rank: 0, sse: b.iter().map(|v| v * v).sum() };
    }

    let mut rank = 0;
    for k in 0..p.min(n) {
        let (pivot, norm) =
            (k..p)
                .map(|j| (j, col_norm(&a, j, k)))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if norm <= RANK_TOL * scale {
            break;
        }
        if pivot != k {
            for i in 0..n {
                a.swap([i, k], [i, pivot]);
            }
        }
        let alpha = if a[[k, k]] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| a[[i, k]]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            for j in k..p {
                let dot: f64 = (k..n).map(|i| v[i - k] * a[[i, j]]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in k..n {
                    a[[i, j]] -= f * v[i - k];
                }
            }
            let dot: f64 = (k..n).map(|i| v[i - k] * b[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                b[i] -= f * v[i - k];
            }
        }
        rank += 1;
    }
    let sse = (rank..n).map(|i| b[i] * b[i]).sum();
    LeastSquaresFit { rank, sse }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues (unsorted) and the matrix whose columns are the
/// matching unit eigenvectors.
pub fn symmetric_eigen(m: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    let mut a = m.clone();
    let mut v = Array2::<f64>::eye(n);
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off = |a: &Array2<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[[i, j]] * a[[i, j]];
                }
            }
        }
        s.sqrt()
    };

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off(&a) <= JACOBI_TOL * frob {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[[i, i]]).collect(), v)
}
