//! Dense symmetric eigenvalues by cyclic Jacobi rotations.

use nalgebra::DMatrix;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a real symmetric matrix, ascending.
///
/// Only the upper triangle is read. Rotations are skipped for entries below
/// `1e-12 · ‖A‖_F`; iteration stops after a sweep with no rotation.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "matrix must be square");
    // Row-major working copy, symmetrized from the upper triangle.
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = m[(i, j)];
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let threshold = 1e-12 * norm;

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= threshold {
                    continue;
                }
                rotated = true;
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
            }
        }
        if !rotated {
            break;
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Number of eigenvalues of `m + shift·I` strictly below zero.
pub fn morse_index(m: &DMatrix<f64>, shift: f64) -> usize {
    symmetric_eigenvalues(m)
        .into_iter()
        .filter(|&e| e + shift < 0.0)
        .count()
}

/// Spectral norm of a symmetric matrix.
pub fn symmetric_norm(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m)
        .into_iter()
        .fold(0.0, |acc, e| acc.max(e.abs()))
}

/// Spectral flow of `t ↦ base + t·slope` over `range` as a sum of crossing
/// form signs.
///
/// Each sorted eigenvalue branch is sampled at `scan + 1` points; a sign
/// change is bisected to the crossing `t*` and contributes the sign of
/// `vᵀ·slope·v` for the kernel vector `v`. Assumes simple, transversal
/// crossings, which is the generic case.
pub fn affine_path_sflow(base: &DMatrix<f64>, slope: &DMatrix<f64>, range: (f64, f64), scan: usize) -> i64 {
    let (lo, hi) = range;
    let at = |t: f64| base + slope * t;
    let n = base.nrows();
    let mut total = 0;
    let mut prev_t = lo;
    let mut prev = symmetric_eigenvalues(&at(lo));
    for step in 1..=scan.max(1) {
        let t = lo + (hi - lo) * step as f64 / scan.max(1) as f64;
        let cur = symmetric_eigenvalues(&at(t));
        for i in 0..n {
            if (prev[i] < 0.0) == (cur[i] < 0.0) {
                continue;
            }
            let (mut a, mut b) = (prev_t, t);
            let neg_at_a = prev[i] < 0.0;
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if (symmetric_eigenvalues(&at(mid))[i] < 0.0) == neg_at_a {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let eig = at(0.5 * (a + b)).symmetric_eigen();
            let j = (0..n)
                .min_by(|&p, &q| eig.eigenvalues[p].abs().total_cmp(&eig.eigenvalues[q].abs()))
                .expect("nonempty matrix");
            let v = eig.eigenvectors.column(j);
            let form = (v.transpose() * slope * v)[(0, 0)];
            total += if form > 0.0 { 1 } else { -1 };
        }
        prev = cur;
        prev_t = t;
    }
    total
}
