//! Symmetric eigendecomposition by cyclic Jacobi rotations.

/// Eigenvalues and eigenvectors of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymEigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Column `k` (row-major `n × n`) is the eigenvector of `values[k]`.
    pub vectors: Vec<f64>,
}

/// Default convergence tolerance on the off-diagonal Frobenius norm,
/// relative to the full norm.
pub const JACOBI_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 100;

/// Diagonalizes the row-major symmetric `n × n` matrix `a`. Only the upper
/// triangle is trusted; the lower one is overwritten from it.
pub fn jacobi_eigen(a: &[f64], n: usize, tol: f64) -> SymEigen {
    assert_eq!(a.len(), n * n, "matrix must be n x n");
    let mut m = a.to_vec();
    for i in 0..n {
        for j in 0..i {
            m[i * n + j] = m[j * n + i];
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = tol * norm.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- Jᵀ A J with J the (p, q) rotation.
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + col] = v[r * n + src];
        }
    }
    SymEigen { values, vectors }
}

/// Sample covariance (denominator `m − 1`) of row-major `rows × dim` data.
pub fn sample_covariance(data: &[f64], rows: usize, dim: usize) -> Vec<f64> {
    let mut cov = vec![0.0; dim * dim];
    if rows < 2 {
        return cov;
    }
    let mut mean = vec![0.0; dim];
    for r in data.chunks(dim) {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= rows as f64;
    }
    for r in data.chunks(dim) {
        for i in 0..dim {
            let di = r[i] - mean[i];
            for j in i..dim {
                cov[i * dim + j] += di * (r[j] - mean[j]);
            }
        }
    }
    let denom = (rows - 1) as f64;
    for i in 0..dim {
        for j in i..dim {
            let c = cov[i * dim + j] / denom;
            cov[i * dim + j] = c;
            cov[j * dim + i] = c;
        }
    }
    cov
}
